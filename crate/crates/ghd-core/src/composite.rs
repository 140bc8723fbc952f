//! Composing large designs from small ones along a resolvable pairwise
//! balanced design: every block is replaced by a copy of a small design with
//! a pairwise hole whose hole cells have been permuted onto the diagonal.

use crate::design::{
    verify_ghd, verify_star, Block, GhdArray, Params, SymbolLabel,
};
use crate::error::{GhdError, Result};
use crate::latin::{
    mols_from_field, pbd_from_rtd, rtd_from_mols, superimpose_to_ghd, superimposed_group,
    verify_pbd, ResolvablePbd,
};
use std::collections::HashMap;

/// A design with a pairwise hole, rearranged so that the designated hole
/// symbol ∞ sits on the diagonal: cell (x,x) holds {∞, (x,0), (x,1)}.
/// `hole[0]` is ∞; `pair_labels[x]` are the ids playing (x,0) and (x,1).
#[derive(Debug, Clone)]
pub struct NormalizedStar {
    pub base: GhdArray,
    pub hole: Vec<u32>,
    pub pair_labels: Vec<[u32; 2]>,
}

/// Per-class weights u_1..u_g for the composition; a block inherits the
/// weight of the class it belongs to.
#[derive(Debug, Clone)]
pub struct ClassWeights {
    pub u: Vec<usize>,
}

impl ClassWeights {
    pub fn total(&self) -> usize {
        self.u.iter().sum()
    }
}

/// Permute columns so every cell containing `infinity` lands on the diagonal,
/// then read off the two diagonal partners of ∞ in each row as that row's
/// pair labels.
pub fn normalize_star(g: &GhdArray, hole: &[u32], infinity: u32) -> Result<NormalizedStar> {
    if !hole.contains(&infinity) {
        return Err(GhdError::MalformedInput(format!(
            "designated symbol {infinity} is not in the hole"
        )));
    }
    if !verify_ghd(g).ok() || !verify_star(g, hole)? {
        return Err(GhdError::InvalidDesign(
            "normalization input is not a verified design with the given pairwise hole".into(),
        ));
    }
    let s = g.side;
    // One ∞ cell per row (row coverage); its column is unique per row and the
    // columns are distinct (column coverage).
    let mut col_of = vec![usize::MAX; s];
    for (r, c, b) in g.filled_cells() {
        if b.contains(infinity) {
            col_of[r] = c;
        }
    }
    let mut col_perm = vec![usize::MAX; s];
    for (r, &c) in col_of.iter().enumerate() {
        col_perm[c] = r;
    }
    let identity_rows: Vec<usize> = (0..s).collect();
    let identity_syms: Vec<u32> = (0..g.v() as u32).collect();
    let base = crate::design::apply_relabeling(g, &identity_rows, &col_perm, &identity_syms)?;

    let in_hole: Vec<bool> = {
        let mut f = vec![false; g.v()];
        hole.iter().for_each(|&h| f[h as usize] = true);
        f
    };
    let mut pair_labels = Vec::with_capacity(s);
    let mut label_count = vec![0usize; g.v()];
    for x in 0..s {
        let b = base.cell(x, x).expect("∞ cell on diagonal");
        let partners: Vec<u32> = b
            .members()
            .iter()
            .copied()
            .filter(|&y| y != infinity)
            .collect();
        if partners.len() != 2 || partners.iter().any(|&y| in_hole[y as usize]) {
            return Err(GhdError::NotNormalizable(format!(
                "diagonal cell ({x},{x}) does not pair ∞ with two non-hole symbols"
            )));
        }
        partners.iter().for_each(|&y| label_count[y as usize] += 1);
        pair_labels.push([partners[0], partners[1]]);
    }
    for (y, &cnt) in label_count.iter().enumerate() {
        let expected = usize::from(!in_hole[y]);
        if cnt != expected {
            return Err(GhdError::NotNormalizable(format!(
                "symbol {} received {cnt} pair labels, expected {expected}",
                base.symbols[y]
            )));
        }
    }
    let mut ordered_hole = vec![infinity];
    ordered_hole.extend(hole.iter().copied().filter(|&h| h != infinity));
    Ok(NormalizedStar { base, hole: ordered_hole, pair_labels })
}

fn check_ingredient(ns: &NormalizedStar, size: usize, u_b: usize) -> Result<()> {
    if ns.base.side != size || ns.base.v() != 2 * size + 1 + u_b || ns.hole.len() != 1 + u_b {
        return Err(GhdError::SizeMismatch(format!(
            "supplier returned a {}x{} design on {} symbols (hole {}), wanted side {size}, {} symbols, hole {}",
            ns.base.side,
            ns.base.side,
            ns.base.v(),
            ns.hole.len(),
            2 * size + 1 + u_b,
            1 + u_b
        )));
    }
    let inf = ns.hole[0];
    for x in 0..size {
        let ok = ns.base.cell(x, x).is_some_and(|b| {
            b.contains(inf) && b.contains(ns.pair_labels[x][0]) && b.contains(ns.pair_labels[x][1])
        });
        if !ok {
            return Err(GhdError::InvalidDesign(format!(
                "supplied ingredient is not normalized at diagonal cell ({x},{x})"
            )));
        }
    }
    Ok(())
}

/// Compose along a resolvable PBD. Every point x becomes two symbols (x,0),
/// (x,1); each class i contributes u_i extra hole symbols; one shared symbol
/// ∞ completes the diagonal. Cell (x,y), x ≠ y, is copied from the ingredient
/// pasted on the unique block containing {x,y}; cell (x,x) is {∞,(x,0),(x,1)}.
/// Returns the design and its pairwise hole.
pub fn stinson_compose(
    pbd: &ResolvablePbd,
    weights: &ClassWeights,
    mut supplier: impl FnMut(usize, usize) -> Option<NormalizedStar>,
) -> Result<(GhdArray, Vec<u32>)> {
    let report = verify_pbd(pbd);
    if !report.ok() {
        return Err(GhdError::MalformedInput(format!("input PBD invalid: {report}")));
    }
    if weights.u.len() != pbd.classes.len() {
        return Err(GhdError::CountMismatch(format!(
            "{} weights for {} classes",
            weights.u.len(),
            pbd.classes.len()
        )));
    }
    // Classes must not share blocks; with shared blocks the extra-symbol
    // bookkeeping below would be ambiguous, so such inputs are rejected.
    let mut class_of_block: Vec<Option<usize>> = vec![None; pbd.blocks.len()];
    for (i, (name, members)) in pbd.classes.iter().enumerate() {
        for &b in members {
            if let Some(prev) = class_of_block[b].replace(i) {
                return Err(GhdError::ClassMisalignment(format!(
                    "block {b} lies in classes {} and {name}",
                    pbd.classes[prev].0
                )));
            }
        }
    }

    let v_pbd = pbd.v;
    let u: usize = weights.total();
    let v_out = 2 * v_pbd + u + 1;
    let inf_id = (2 * v_pbd + u) as u32;
    let class_offset: Vec<usize> = weights
        .u
        .iter()
        .scan(0usize, |acc, &w| {
            let o = *acc;
            *acc += w;
            Some(o)
        })
        .collect();

    let mut symbols = Vec::with_capacity(v_out);
    for x in 0..v_pbd {
        symbols.push(SymbolLabel::Plain(format!("p{x}.0")));
        symbols.push(SymbolLabel::Plain(format!("p{x}.1")));
    }
    for (i, &w) in weights.u.iter().enumerate() {
        for j in 0..w {
            symbols.push(SymbolLabel::Plain(format!("h{i}.{j}")));
        }
    }
    symbols.push(SymbolLabel::Plain("inf".into()));

    let mut grid: Vec<Option<Block>> = vec![None; v_pbd * v_pbd];
    for x in 0..v_pbd {
        grid[x * v_pbd + x] = Some(Block::new(vec![inf_id, 2 * x as u32, 2 * x as u32 + 1])?);
    }

    let mut cache: HashMap<(usize, usize), NormalizedStar> = HashMap::new();
    for (b_idx, pts) in pbd.blocks.iter().enumerate() {
        let size = pts.len();
        let class = class_of_block[b_idx];
        let u_b = class.map_or(0, |i| weights.u[i]);
        let ns = match cache.entry((size, u_b)) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let ns = supplier(size, u_b).ok_or_else(|| {
                    GhdError::MissingIngredient(format!(
                        "no normalized design of side {size} with hole {} supplied",
                        1 + u_b
                    ))
                })?;
                check_ingredient(&ns, size, u_b)?;
                e.insert(ns)
            }
        };
        // Fresh relabeling of this copy: ingredient symbol -> output symbol.
        let mut sym_map = vec![u32::MAX; ns.base.v()];
        sym_map[ns.hole[0] as usize] = inf_id;
        for (j, &h) in ns.hole[1..].iter().enumerate() {
            let i = class.expect("u_b > 0 implies a class");
            sym_map[h as usize] = (2 * v_pbd + class_offset[i] + j) as u32;
        }
        for (pos, labels) in ns.pair_labels.iter().enumerate() {
            sym_map[labels[0] as usize] = 2 * pts[pos];
            sym_map[labels[1] as usize] = 2 * pts[pos] + 1;
        }
        for (r, c, b) in ns.base.filled_cells() {
            if r == c {
                continue; // the shared diagonal block is placed once, above
            }
            let (gr, gc) = (pts[r] as usize, pts[c] as usize);
            let cell = &mut grid[gr * v_pbd + gc];
            if cell.is_some() {
                return Err(GhdError::ExpansionConflict(format!(
                    "cell ({gr},{gc}) written by two blocks"
                )));
            }
            *cell = Some(Block::new(
                b.members().iter().map(|&y| sym_map[y as usize]).collect(),
            )?);
        }
    }

    let out = GhdArray::from_cells(v_pbd, symbols, grid, Params::default())?;
    let hole: Vec<u32> = (2 * v_pbd as u32..=inf_id).collect();
    let report = verify_ghd(&out);
    if !report.ok() {
        return Err(GhdError::InvalidDesign(format!("composed design: {report}")));
    }
    if !verify_star(&out, &hole)? {
        return Err(GhdError::InvalidDesign(
            "composed design's extra symbols are not a pairwise hole".into(),
        ));
    }
    Ok((out, hole))
}

/// Compose along the PBD of a resolvable transversal design with block size n
/// and group size g (built from n−1 field MOLS(g)). `u` has g+1 entries: one
/// per row class, one for the groups class. Output side n·g on
/// 2ng + Σu + 1 symbols.
pub fn stinson_rtd(
    n: usize,
    g: usize,
    u: &[usize],
    supplier: impl FnMut(usize, usize) -> Option<NormalizedStar>,
) -> Result<(GhdArray, Vec<u32>)> {
    if n < 3 {
        return Err(GhdError::MalformedInput(format!(
            "block size {n} is below 3; only 3-symbol cells are supported"
        )));
    }
    if u.len() != g + 1 {
        return Err(GhdError::CountMismatch(format!(
            "{} weights for {} classes",
            u.len(),
            g + 1
        )));
    }
    let mols = mols_from_field(g as u32, n - 1)?;
    let pbd = pbd_from_rtd(&rtd_from_mols(&mols));
    stinson_compose(&pbd, &ClassWeights { u: u.to_vec() }, supplier)
}

/// The two power-of-two composition recipes at side 2^m, m ≥ 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerTwoVariant {
    /// Targets GHD*(2^m, 3·2^m − 3): one empty cell per row. Needs a side-8
    /// design on 21 symbols with hole 5, which this toolkit cannot build.
    OneEmptyCell,
    /// Targets GHD*(2^m, 3·2^m − 6): two empty cells per row.
    TwoEmptyCells,
}

/// Dispatch to `stinson_rtd` with block size 8, group size 2^(m−3), and the
/// recipe's weight vector; all row classes get weight 7 except the last
/// (1 or 4 depending on the variant), the groups class gets 2^(m−3) − 1.
pub fn power2_recipe(which: PowerTwoVariant, m: usize) -> Result<(GhdArray, Vec<u32>)> {
    if m < 6 {
        return Err(GhdError::MalformedInput(format!("side exponent m = {m}, need m >= 6")));
    }
    let g = 1usize << (m - 3);
    let mut u = vec![7usize; g];
    u[g - 1] = match which {
        PowerTwoVariant::OneEmptyCell => 4,
        PowerTwoVariant::TwoEmptyCells => 1,
    };
    u.push(g - 1);
    stinson_rtd(8, g, &u, standard_power_supplier())
}

/// Supplier for the power-of-two recipes: side-q designs on 3q symbols come
/// from 3 field MOLS(q) superimposed (hole = one group), and the side-8
/// design on 18 symbols comes from the catalog.
pub fn standard_power_supplier() -> impl FnMut(usize, usize) -> Option<NormalizedStar> {
    move |size, u_b| {
        if u_b + 1 == size {
            // A side-q design on 3q symbols with hole q, q = size.
            let ms = mols_from_field(size as u32, 3).ok()?;
            let d = superimpose_to_ghd(&ms).ok()?;
            let hole = superimposed_group(size, 0);
            return normalize_star(&d, &hole, hole[0]).ok();
        }
        if (size, u_b) == (8, 1) {
            let d = crate::catalog::load_entry("grid/8x18").ok()?.design?;
            let hole = crate::design::find_pairwise_hole(&d, 2)?;
            return normalize_star(&d, &hole, hole[0]).ok();
        }
        None
    }
}

/// Largest deficiency a such that the affine-plane composition at side 4^m
/// (m odd, m ≥ 7) reaches a design on 3·4^m − 6a symbols with a pairwise
/// hole, for every 0 ≤ a ≤ bound. Closed form (5·4^m + 10·2^m − 76)/36.
pub fn affine_deficiency_bound_star(m: u32) -> Option<u128> {
    if m < 7 || m % 2 == 0 {
        return None;
    }
    let num = 5 * (1u128 << (2 * m)) + 10 * (1u128 << m) - 76;
    debug_assert_eq!(num % 36, 0);
    Some(num / 36)
}

/// Same bound for the companion family on 3·4^m − 6a + 3 symbols
/// (1 ≤ a ≤ bound); floor of (5·4^m + 4·2^m − 46)/36.
pub fn affine_deficiency_bound_plain(m: u32) -> Option<u128> {
    if m < 7 || m % 2 == 0 {
        return None;
    }
    Some((5 * (1u128 << (2 * m)) + 4 * (1u128 << m) - 46) / 36)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::find_pairwise_hole;

    fn star_8_24() -> (GhdArray, Vec<u32>) {
        let ms = mols_from_field(8, 3).unwrap();
        (superimpose_to_ghd(&ms).unwrap(), superimposed_group(8, 0))
    }

    #[test]
    fn normalize_trivial_1_3() {
        let symbols = vec![
            SymbolLabel::Plain("a".into()),
            SymbolLabel::Plain("b".into()),
            SymbolLabel::Plain("z".into()),
        ];
        let grid = vec![Some(Block::new(vec![0, 1, 2]).unwrap())];
        let d = GhdArray::from_cells(1, symbols, grid, Params::default()).unwrap();
        let ns = normalize_star(&d, &[2], 2).unwrap();
        assert_eq!(ns.hole, vec![2]);
        assert_eq!(ns.pair_labels, vec![[0, 1]]);
    }

    #[test]
    fn normalize_superimposed_8_24() {
        let (d, hole) = star_8_24();
        let ns = normalize_star(&d, &hole, hole[0]).unwrap();
        assert!(verify_ghd(&ns.base).ok());
        assert!(verify_star(&ns.base, &ns.hole).unwrap());
        for x in 0..8 {
            assert!(ns.base.cell(x, x).unwrap().contains(hole[0]));
        }
        // Idempotent: normalizing the normalized design changes nothing.
        let ns2 = normalize_star(&ns.base, &ns.hole, ns.hole[0]).unwrap();
        assert!(crate::design::grids_equal_by_label(&ns.base, &ns2.base));
        assert_eq!(ns.pair_labels, ns2.pair_labels);
    }

    #[test]
    fn normalize_catalog_8_18() {
        let d = crate::catalog::load_entry("grid/8x18").unwrap().design.unwrap();
        let hole = find_pairwise_hole(&d, 2).unwrap();
        let ns = normalize_star(&d, &hole, hole[0]).unwrap();
        assert!(verify_ghd(&ns.base).ok());
        assert!(verify_star(&ns.base, &ns.hole).unwrap());
    }

    #[test]
    fn single_block_composition_is_identity() {
        let d = crate::catalog::load_entry("grid/8x18").unwrap().design.unwrap();
        let hole = find_pairwise_hole(&d, 2).unwrap();
        let ns = normalize_star(&d, &hole, hole[0]).unwrap();
        let pbd = ResolvablePbd {
            v: 8,
            blocks: vec![(0..8).collect()],
            classes: vec![("all".into(), vec![0])],
        };
        let (out, out_hole) = stinson_compose(&pbd, &ClassWeights { u: vec![1] }, |_, _| {
            Some(ns.clone())
        })
        .unwrap();
        assert_eq!((out.side, out.v(), out_hole.len()), (8, 18, 2));
        // Identity up to relabeling: same cells are filled.
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(out.cell(r, c).is_some(), ns.base.cell(r, c).is_some());
            }
        }
    }

    #[test]
    fn rtd_composition_64_186() {
        let mut u = vec![7usize; 8];
        u[7] = 1;
        u.push(7);
        let (out, hole) = stinson_rtd(8, 8, &u, standard_power_supplier()).unwrap();
        assert_eq!((out.side, out.v(), hole.len()), (64, 186, 58));
        assert!(verify_star(&out, &hole).unwrap());
    }

    #[test]
    fn power2_two_empty_m6() {
        let (out, hole) = power2_recipe(PowerTwoVariant::TwoEmptyCells, 6).unwrap();
        assert_eq!((out.side, out.v(), hole.len()), (64, 186, 58));
    }

    #[test]
    fn power2_guards() {
        assert!(matches!(
            power2_recipe(PowerTwoVariant::TwoEmptyCells, 5),
            Err(GhdError::MalformedInput(_))
        ));
        assert!(matches!(
            power2_recipe(PowerTwoVariant::OneEmptyCell, 6),
            Err(GhdError::MissingIngredient(_))
        ));
    }

    #[test]
    fn affine_plane_composition_side_64() {
        let pbd = crate::latin::affine_plane_pbd(8).unwrap();
        let mut u = vec![7usize; 9];
        u[0] = 1;
        let (out, hole) =
            stinson_compose(&pbd, &ClassWeights { u }, standard_power_supplier()).unwrap();
        assert_eq!((out.side, out.v(), hole.len()), (64, 186, 58));
    }

    #[test]
    fn compose_rejects_shared_blocks() {
        let pbd = ResolvablePbd {
            v: 8,
            blocks: vec![(0..8).collect()],
            classes: vec![("a".into(), vec![0]), ("b".into(), vec![0])],
        };
        let got = stinson_compose(&pbd, &ClassWeights { u: vec![1, 1] }, |_, _| None);
        assert!(matches!(got, Err(GhdError::ClassMisalignment(_))));
    }

    #[test]
    fn deficiency_bounds_match_reachable_range() {
        // Oracle: enumerate the (x, y) class-weight mixes over the affine
        // plane of order 2^m. The closed-form bound B must satisfy: every
        // deficiency 0 <= a <= B (1 <= a for the companion family) is
        // reachable, and a gap appears at most one x-interval later.
        for m in [7u32, 9] {
            let q: i128 = 1 << m; // 2^m + 1 parallel classes
            let reach = |restrict: i128| {
                let mut hit = vec![false; (q * q / 4) as usize];
                for x in 0..=q + 1 - restrict {
                    for y in 0..=q + 1 - restrict - x {
                        // deficiency of the composed symbol count
                        let a = 1 + q + x * (q - 8) / 6 - y;
                        if (0..hit.len() as i128).contains(&a) {
                            hit[a as usize] = true;
                        }
                    }
                }
                hit
            };
            let hit = reach(0);
            let bound = affine_deficiency_bound_star(m).unwrap() as usize;
            assert!(hit[..=bound].iter().all(|&h| h));
            let first_gap = hit.iter().position(|&h| !h).unwrap();
            assert!(first_gap > bound && first_gap <= bound + q as usize);
            // Companion family: one class is reserved for the special weight.
            let hit = reach(1);
            let bound = affine_deficiency_bound_plain(m).unwrap() as usize;
            assert!(hit[1..=bound].iter().all(|&h| h));
            let first_gap = 1 + hit[1..].iter().position(|&h| !h).unwrap();
            assert!(first_gap > bound && first_gap <= bound + q as usize);
        }
        assert_eq!(affine_deficiency_bound_star(8), None);
        assert_eq!(affine_deficiency_bound_star(5), None);
    }
}
