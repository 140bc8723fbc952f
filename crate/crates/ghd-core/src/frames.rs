//! Frames: square arrays with empty diagonal subsquares where each row and
//! column resolves every symbol except one group's. Includes the builder from
//! 4 MOLS plus incomplete MOLS, and the construction that fills a frame's
//! diagonal with small designs to produce one large design.

use crate::design::{Block, GhdArray, Params, SymbolLabel, VerificationReport, ViolationKind};
use crate::error::{GhdError, Result};
use crate::latin::{ImolsSet, MolsSet};
use serde::{Deserialize, Serialize};

/// A frame: `groups[i]` is the symbol group missing from the rows and columns
/// of the i-th diagonal span; spans are consecutive and sized by
/// `span_sizes[i]`.
#[derive(Debug, Clone)]
pub struct GhfArray {
    pub side: usize,
    pub symbols: Vec<SymbolLabel>,
    pub groups: Vec<Vec<u32>>,
    pub span_sizes: Vec<usize>,
    grid: Vec<Option<Block>>,
    pub params: Params,
}

impl GhfArray {
    pub fn new(
        symbols: Vec<SymbolLabel>,
        groups: Vec<Vec<u32>>,
        span_sizes: Vec<usize>,
        grid: Vec<Option<Block>>,
        params: Params,
    ) -> Result<GhfArray> {
        let side: usize = span_sizes.iter().sum();
        if grid.len() != side * side {
            return Err(GhdError::SizeMismatch(format!(
                "grid has {} cells, expected {}",
                grid.len(),
                side * side
            )));
        }
        if groups.len() != span_sizes.len() {
            return Err(GhdError::SizeMismatch(format!(
                "{} groups but {} spans",
                groups.len(),
                span_sizes.len()
            )));
        }
        let v = symbols.len();
        let mut seen = vec![false; v];
        for g in &groups {
            for &x in g {
                if x as usize >= v || std::mem::replace(&mut seen[x as usize], true) {
                    return Err(GhdError::MalformedInput(format!(
                        "groups do not partition the symbols (id {x})"
                    )));
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(GhdError::MalformedInput("groups do not cover all symbols".into()));
        }
        for cell in grid.iter().flatten() {
            if cell.len() != params.k as usize
                || cell.members().iter().any(|&x| x as usize >= v)
            {
                return Err(GhdError::MalformedInput("bad frame cell".into()));
            }
        }
        Ok(GhfArray { side, symbols, groups, span_sizes, grid, params })
    }

    pub fn v(&self) -> usize {
        self.symbols.len()
    }

    pub fn cell(&self, r: usize, c: usize) -> Option<&Block> {
        self.grid[r * self.side + c].as_ref()
    }

    /// (start, length) of each diagonal span.
    pub fn spans(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.span_sizes.len());
        let mut start = 0;
        for &len in &self.span_sizes {
            out.push((start, len));
            start += len;
        }
        out
    }

    /// Span index owning a row (or column).
    pub fn span_of(&self, row: usize) -> usize {
        let mut start = 0;
        for (i, &len) in self.span_sizes.iter().enumerate() {
            if row < start + len {
                return i;
            }
            start += len;
        }
        unreachable!("row out of range")
    }
}

/// Frame axioms: (1) the diagonal subsquare of every span is empty, (2) each
/// row and column of span i covers every symbol outside group i exactly once
/// and group-i symbols never, (3) every symbol pair occurs at most once, (4)
/// pairs inside one group never occur.
pub fn verify_frame(f: &GhfArray) -> VerificationReport {
    let mut report = VerificationReport::default();
    let v = f.v();
    let spans = f.spans();

    let mut group_of = vec![0usize; v];
    for (gi, g) in f.groups.iter().enumerate() {
        for &x in g {
            group_of[x as usize] = gi;
        }
    }

    for (si, &(start, len)) in spans.iter().enumerate() {
        for r in start..start + len {
            for c in start..start + len {
                if f.cell(r, c).is_some() {
                    report.push(
                        ViolationKind::CellArity,
                        Some(r),
                        Some(c),
                        format!("diagonal subsquare of span {si} is not empty"),
                    );
                }
            }
        }
    }

    let mut count = vec![0u8; v];
    for r in 0..f.side {
        let si = f.span_of(r);
        count.iter_mut().for_each(|x| *x = 0);
        for c in 0..f.side {
            if let Some(b) = f.cell(r, c) {
                for &x in b.members() {
                    count[x as usize] = count[x as usize].saturating_add(1);
                }
            }
        }
        for (x, &cnt) in count.iter().enumerate() {
            let expected = if group_of[x] == si { 0 } else { 1 };
            if cnt != expected {
                report.push(
                    ViolationKind::RowCover,
                    Some(r),
                    None,
                    format!("symbol {} appears {cnt} times in row, expected {expected}", f.symbols[x]),
                );
            }
        }
    }
    for c in 0..f.side {
        let si = f.span_of(c);
        count.iter_mut().for_each(|x| *x = 0);
        for r in 0..f.side {
            if let Some(b) = f.cell(r, c) {
                for &x in b.members() {
                    count[x as usize] = count[x as usize].saturating_add(1);
                }
            }
        }
        for (x, &cnt) in count.iter().enumerate() {
            let expected = if group_of[x] == si { 0 } else { 1 };
            if cnt != expected {
                report.push(
                    ViolationKind::ColCover,
                    None,
                    Some(c),
                    format!("symbol {} appears {cnt} times in column, expected {expected}", f.symbols[x]),
                );
            }
        }
    }

    let mut pair = vec![0u8; v * v.saturating_sub(1) / 2];
    for r in 0..f.side {
        for c in 0..f.side {
            if let Some(b) = f.cell(r, c) {
                let m = b.members();
                for i in 0..m.len() {
                    for j in i + 1..m.len() {
                        let (x, y) = (m[i] as usize, m[j] as usize);
                        if group_of[x] == group_of[y] {
                            report.push(
                                ViolationKind::PairExcess,
                                Some(r),
                                Some(c),
                                format!(
                                    "pair {{{}, {}}} inside one group",
                                    f.symbols[x], f.symbols[y]
                                ),
                            );
                        }
                        let idx = y * (y - 1) / 2 + x;
                        pair[idx] = pair[idx].saturating_add(1);
                        if pair[idx] == 2 {
                            report.push(
                                ViolationKind::PairExcess,
                                Some(r),
                                Some(c),
                                format!("pair {{{}, {}}} repeated", f.symbols[x], f.symbols[y]),
                            );
                        }
                    }
                }
            }
        }
    }
    report
}

/// Build a frame of type (h,3h)^m (v,3v)^1, v = sum of `v_parts`, from 4
/// MOLS(m) and incomplete MOLS.
///
/// The 4th square designates m disjoint transversals of the base array (its
/// symbol classes); its 0-class is permuted onto the diagonal and left empty.
/// Every cell of class l >= 1 is blown up with 3 superimposed
/// IMOLS(h+v_l, v_l) whose hole lands on the l-th segment of the final span's
/// diagonal. `supplier(y, a)` must produce 3 verified IMOLS(y, a).
pub fn frame_from_mols_imols(
    h: usize,
    m: usize,
    v_parts: &[usize],
    mols4: &MolsSet,
    supplier: impl Fn(usize, usize) -> Option<ImolsSet>,
) -> Result<GhfArray> {
    if mols4.count < 4 || mols4.order != m {
        return Err(GhdError::CountMismatch(format!(
            "need 4 MOLS({m}), got {} MOLS({})",
            mols4.count, mols4.order
        )));
    }
    if v_parts.len() != m - 1 {
        return Err(GhdError::SizeMismatch(format!(
            "need {} part sizes, got {}",
            m - 1,
            v_parts.len()
        )));
    }
    let v: usize = v_parts.iter().sum();
    // Fetch an IMOLS set per distinct (h + v_l, v_l).
    let mut needed: Vec<(usize, usize)> = v_parts.iter().map(|&p| (h + p, p)).collect();
    needed.sort_unstable();
    needed.dedup();
    let mut kits: Vec<((usize, usize), ImolsSet)> = Vec::new();
    for &(y, a) in &needed {
        let im = supplier(y, a).ok_or_else(|| {
            GhdError::MissingIngredient(format!("3 IMOLS({y},{a}) not available"))
        })?;
        if im.order != y || im.hole.len() != a || im.squares.len() < 3 {
            return Err(GhdError::MissingIngredient(format!(
                "supplier returned IMOLS({},{}) x{}, wanted IMOLS({y},{a}) x3",
                im.order,
                im.hole.len(),
                im.squares.len()
            )));
        }
        if !crate::latin::verify_imols(&im).ok() {
            return Err(GhdError::InvalidDesign(format!("supplied IMOLS({y},{a}) invalid")));
        }
        // Hole alignment convention: bottom-right, hole symbols = last a.
        let expect: Vec<usize> = (y - a..y).collect();
        let mut hole = im.hole.clone();
        hole.sort_unstable();
        if hole != expect {
            return Err(GhdError::HoleMisaligned(format!(
                "IMOLS({y},{a}) hole at {hole:?}, expected {expect:?}"
            )));
        }
        kits.push(((y, a), im));
    }
    let kit = |l: usize| -> &ImolsSet {
        let key = (h + v_parts[l - 1], v_parts[l - 1]);
        &kits.iter().find(|(k, _)| *k == key).unwrap().1
    };

    // Permute columns so the 4th square's 0-class sits on the diagonal; the
    // first three squares then have pairwise-distinct diagonals because each
    // is orthogonal to the 4th.
    let t_sq = &mols4.squares[3];
    let mut sigma = vec![0usize; m];
    for i in 0..m {
        sigma[i] = (0..m).find(|&j| t_sq[i][j] == 0).unwrap();
    }
    let a_sq: Vec<Vec<Vec<u16>>> = (0..3)
        .map(|c| {
            (0..m)
                .map(|i| (0..m).map(|j| mols4.squares[c][i][sigma[j]]).collect())
                .collect()
        })
        .collect();
    let t_cls: Vec<Vec<u16>> = (0..m)
        .map(|i| (0..m).map(|j| t_sq[i][sigma[j]]).collect())
        .collect();

    // Symbol ids: base symbol t gives ids t*3h + c*h + w; final-group symbols
    // follow, 3 per (segment offset + u).
    let seg_off: Vec<usize> = v_parts
        .iter()
        .scan(0usize, |acc, &p| {
            let o = *acc;
            *acc += p;
            Some(o)
        })
        .collect();
    let fin_base = 3 * h * m;
    let fin_id = |l: usize, u: usize, c: usize| (fin_base + (seg_off[l - 1] + u) * 3 + c) as u32;
    let base_id = |t: usize, w: usize, c: usize| (t * 3 * h + c * h + w) as u32;
    let mut symbols = Vec::with_capacity(3 * h * m + 3 * v);
    for t in 0..m {
        for c in 0..3 {
            for w in 0..h {
                symbols.push(SymbolLabel::Plain(format!("t{t}.{c}.{w}")));
            }
        }
    }
    for (l1, &p) in v_parts.iter().enumerate() {
        for u in 0..p {
            for c in 0..3 {
                symbols.push(SymbolLabel::Plain(format!("w{}.{c}.{u}", l1 + 1)));
            }
        }
    }
    debug_assert!(symbols.len() == 3 * h * m + 3 * v);
    // The symbol list above is ordered block-of-c at a time for base symbols
    // but fin symbols are interleaved; ids must match the two id functions.
    // Rebuild in exact id order to be safe.
    let mut ordered = vec![SymbolLabel::Plain(String::new()); 3 * h * m + 3 * v];
    for t in 0..m {
        for c in 0..3 {
            for w in 0..h {
                ordered[base_id(t, w, c) as usize] = SymbolLabel::Plain(format!("t{t}.{c}.{w}"));
            }
        }
    }
    for (l1, &p) in v_parts.iter().enumerate() {
        for u in 0..p {
            for c in 0..3 {
                ordered[fin_id(l1 + 1, u, c) as usize] =
                    SymbolLabel::Plain(format!("w{}.{c}.{u}", l1 + 1));
            }
        }
    }
    let symbols = ordered;

    let side = m * h + v;
    let row_of = |i: usize, r: usize| i * h + r;
    let fin_row = |l: usize, u: usize| m * h + seg_off[l - 1] + u;
    let mut grid: Vec<Option<Block>> = vec![None; side * side];

    for i in 0..m {
        for j in 0..m {
            let l = t_cls[i][j] as usize;
            if l == 0 {
                continue; // the diagonalized class stays empty
            }
            let im = kit(l);
            let y = im.order;
            let a = im.hole.len();
            let q = y - a;
            debug_assert_eq!(q, h);
            for r in 0..y {
                for s in 0..y {
                    let Some(_) = im.squares[0][r][s] else { continue };
                    let members: Vec<u32> = (0..3)
                        .map(|c| {
                            let w = im.squares[c][r][s].unwrap() as usize;
                            if w < q {
                                base_id(a_sq[c][i][j] as usize, w, c)
                            } else {
                                fin_id(l, w - q, c)
                            }
                        })
                        .collect();
                    let gr = if r < q { row_of(i, r) } else { fin_row(l, r - q) };
                    let gc = if s < q { row_of(j, s) } else { fin_row(l, s - q) };
                    let cell = &mut grid[gr * side + gc];
                    if cell.is_some() {
                        return Err(GhdError::ExpansionConflict(format!(
                            "frame cell ({gr},{gc}) written twice"
                        )));
                    }
                    *cell = Some(Block::new(members)?);
                }
            }
        }
    }

    let mut groups: Vec<Vec<u32>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut g = Vec::with_capacity(3 * h);
        for c in 0..3 {
            for w in 0..h {
                g.push(base_id(a_sq[c][i][i] as usize, w, c));
            }
        }
        groups.push(g);
    }
    groups.push((fin_base as u32..(fin_base + 3 * v) as u32).collect());
    let mut span_sizes = vec![h; m];
    span_sizes.push(v);

    let frame = GhfArray::new(symbols, groups, span_sizes, grid, Params::default())?;
    let report = verify_frame(&frame);
    if !report.ok() {
        return Err(GhdError::InvalidDesign(format!("built frame: {report}")));
    }
    Ok(frame)
}

/// Fill a frame: add e border rows/columns and u shared symbols, then paste
/// one ingredient design per group. Ingredient i must be a GHD(s_i+e, g_i+u)
/// whose last u symbol ids are the shared ones and whose bottom-right e x e
/// corner carries the common sub-design (empty when u = 0). The corner copy
/// of every ingredient but the last is dropped.
pub fn basic_frame_construction(
    f: &GhfArray,
    e: usize,
    u: usize,
    ingredients: &[GhdArray],
) -> Result<GhdArray> {
    let m = f.groups.len();
    if ingredients.len() != m {
        return Err(GhdError::CountMismatch(format!(
            "{} ingredients for {m} groups",
            ingredients.len()
        )));
    }
    let spans = f.spans();
    for (i, ing) in ingredients.iter().enumerate() {
        let (s_i, g_i) = (spans[i].1, f.groups[i].len());
        if ing.side != s_i + e || ing.v() != g_i + u {
            return Err(GhdError::SizeMismatch(format!(
                "ingredient {i} is GHD({},{}), expected GHD({},{})",
                ing.side,
                ing.v(),
                s_i + e,
                g_i + u
            )));
        }
        if !crate::design::verify_ghd(ing).ok() {
            return Err(GhdError::InvalidDesign(format!("ingredient {i} fails verification")));
        }
    }
    // Corner audit: each ingredient's bottom-right e x e must hold the common
    // sub-design over the shared symbols only, identical across ingredients.
    let corner_of = |ing: &GhdArray, g_i: usize| -> Result<Vec<Option<Vec<u32>>>> {
        let mut out = Vec::with_capacity(e * e);
        for r in ing.side - e..ing.side {
            for c in ing.side - e..ing.side {
                match ing.cell(r, c) {
                    None => out.push(None),
                    Some(b) => {
                        let mut ids = Vec::with_capacity(b.len());
                        for &x in b.members() {
                            if (x as usize) < g_i {
                                return Err(GhdError::HoleMisaligned(format!(
                                    "corner cell ({r},{c}) uses a group symbol"
                                )));
                            }
                            ids.push(x - g_i as u32);
                        }
                        out.push(Some(ids));
                    }
                }
            }
        }
        Ok(out)
    };
    let reference = corner_of(&ingredients[m - 1], f.groups[m - 1].len())?;
    for (i, ing) in ingredients.iter().enumerate().take(m - 1) {
        if corner_of(ing, f.groups[i].len())? != reference {
            return Err(GhdError::HoleMisaligned(format!(
                "ingredient {i} corner differs from the shared sub-design"
            )));
        }
    }

    let side = f.side + e;
    let v_out = f.v() + u;
    let mut symbols = f.symbols.clone();
    for j in 0..u {
        symbols.push(SymbolLabel::Plain(format!("u{j}")));
    }
    let mut grid: Vec<Option<Block>> = vec![None; side * side];
    for r in 0..f.side {
        for c in 0..f.side {
            grid[r * side + c] = f.cell(r, c).cloned();
        }
    }
    for (i, ing) in ingredients.iter().enumerate() {
        let (start, s_i) = spans[i];
        let g_i = f.groups[i].len();
        let map_row = |r: usize| if r < s_i { start + r } else { f.side + (r - s_i) };
        let map_sym = |x: u32| {
            if (x as usize) < g_i {
                f.groups[i][x as usize]
            } else {
                (f.v() + (x as usize - g_i)) as u32
            }
        };
        for (r, c, b) in ing.filled_cells() {
            if i < m - 1 && r >= s_i && c >= s_i {
                continue; // duplicate copy of the shared corner sub-design
            }
            let (gr, gc) = (map_row(r), map_row(c));
            let cell = &mut grid[gr * side + gc];
            if cell.is_some() {
                return Err(GhdError::ExpansionConflict(format!(
                    "cell ({gr},{gc}) written twice while pasting ingredient {i}"
                )));
            }
            *cell = Some(Block::new(b.members().iter().map(|&x| map_sym(x)).collect())?);
        }
    }
    let out = GhdArray::from_cells(side, symbols, grid, f.params)?;
    let report = crate::design::verify_ghd(&out);
    if !report.ok() {
        return Err(GhdError::InvalidDesign(format!("filled frame: {report}")));
    }
    debug_assert_eq!(out.v(), v_out);
    Ok(out)
}

/// JSON form: the grid fields plus groups (symbol ids) and spans (sizes).
#[derive(Serialize, Deserialize)]
pub struct FrameJson {
    pub s: usize,
    pub v: usize,
    pub k: u32,
    pub symbols: Vec<String>,
    pub cells: Vec<Vec<Option<Vec<u32>>>>,
    pub groups: Vec<Vec<u32>>,
    pub spans: Vec<usize>,
}

pub fn frame_to_json(f: &GhfArray) -> FrameJson {
    FrameJson {
        s: f.side,
        v: f.v(),
        k: f.params.k,
        symbols: f.symbols.iter().map(|s| s.to_string()).collect(),
        cells: (0..f.side)
            .map(|r| {
                (0..f.side)
                    .map(|c| f.cell(r, c).map(|b| b.members().to_vec()))
                    .collect()
            })
            .collect(),
        groups: f.groups.clone(),
        spans: f.span_sizes.clone(),
    }
}

pub fn frame_from_json(j: &FrameJson) -> Result<GhfArray> {
    let symbols: Vec<SymbolLabel> = j.symbols.iter().map(|s| SymbolLabel::parse(s)).collect();
    let mut grid = Vec::with_capacity(j.s * j.s);
    for row in &j.cells {
        for cell in row {
            grid.push(match cell {
                Some(ids) => Some(Block::new(ids.clone())?),
                None => None,
            });
        }
    }
    GhfArray::new(
        symbols,
        j.groups.clone(),
        j.spans.clone(),
        grid,
        Params { t: 2, k: j.k, lambda: 1 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latin::{mols_from_field, ImolsSet};
    use crate::search::{search_imols, SearchBudget};

    fn supplier(y: usize, a: usize) -> Option<ImolsSet> {
        search_imols(y, a, 3, &SearchBudget::default()).0.witness()
    }

    #[test]
    fn frame_7_5_uniform() {
        let mols = mols_from_field(5, 4).unwrap();
        let f = frame_from_mols_imols(7, 5, &[0, 0, 0, 0], &mols, supplier).unwrap();
        assert_eq!((f.side, f.v()), (35, 105));
        assert_eq!(f.span_sizes, vec![7, 7, 7, 7, 7, 0]);
        assert!(verify_frame(&f).ok());
    }

    #[test]
    fn frame_7_5_7_1() {
        let mols = mols_from_field(5, 4).unwrap();
        let f = frame_from_mols_imols(7, 5, &[2, 2, 2, 1], &mols, supplier).unwrap();
        assert_eq!((f.side, f.v()), (42, 126));
        assert_eq!(f.span_sizes, vec![7, 7, 7, 7, 7, 7]);
        assert!(verify_frame(&f).ok());
    }

    #[test]
    fn frame_missing_ingredient() {
        let mols = mols_from_field(5, 4).unwrap();
        let got = frame_from_mols_imols(7, 5, &[2, 2, 2, 1], &mols, |_, _| None);
        assert!(matches!(got, Err(GhdError::MissingIngredient(_))));
    }

    #[test]
    fn verify_frame_catches_filled_diagonal() {
        let mols = mols_from_field(5, 4).unwrap();
        let f = frame_from_mols_imols(7, 5, &[0, 0, 0, 0], &mols, supplier).unwrap();
        let mut broken = f.clone();
        // Move a filled cell onto the diagonal subsquare of span 0.
        let donor = (0..broken.side)
            .flat_map(|r| (0..broken.side).map(move |c| (r, c)))
            .find(|&(r, c)| broken.cell(r, c).is_some())
            .unwrap();
        let b = broken.cell(donor.0, donor.1).cloned();
        broken.grid[0] = b;
        let report = verify_frame(&broken);
        assert!(report.has_kind(ViolationKind::CellArity));
    }

    #[test]
    fn ghd_44_126_from_frame() {
        let mols = mols_from_field(5, 4).unwrap();
        let f = frame_from_mols_imols(7, 5, &[2, 2, 2, 1], &mols, supplier).unwrap();
        let ingredient = crate::catalog::load_entry("e2/i/n7")
            .unwrap()
            .design
            .expect("catalog GHD(9,21)");
        let ingredients = vec![ingredient; 6];
        let g = basic_frame_construction(&f, 2, 0, &ingredients).unwrap();
        assert_eq!((g.side, g.v()), (44, 126));
        assert!(crate::design::verify_ghd(&g).ok());
    }

    #[test]
    fn single_group_frame_is_identity_pasting() {
        let ing = crate::catalog::load_entry("grid/8x18").unwrap().design.unwrap();
        let frame = GhfArray::new(
            ing.symbols.clone(),
            vec![(0..18).collect()],
            vec![8],
            vec![None; 64],
            Params::default(),
        )
        .unwrap();
        let out = basic_frame_construction(&frame, 0, 0, &[ing.clone()]).unwrap();
        assert!(crate::design::grids_equal_by_label(&out, &ing));
    }

    #[test]
    fn frame_json_roundtrip() {
        let mols = mols_from_field(5, 4).unwrap();
        let f = frame_from_mols_imols(7, 5, &[0, 0, 0, 0], &mols, supplier).unwrap();
        let j = frame_to_json(&f);
        let text = serde_json::to_string(&j).unwrap();
        let back: FrameJson = serde_json::from_str(&text).unwrap();
        let f2 = frame_from_json(&back).unwrap();
        assert!(verify_frame(&f2).ok());
        assert_eq!(f2.span_sizes, f.span_sizes);
    }
}
