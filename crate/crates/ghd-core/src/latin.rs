//! Ingredient factory: finite-field MOLS, incomplete MOLS containers,
//! resolvable transversal designs, pairwise balanced designs, affine planes,
//! and the product constructions that combine them.

use crate::design::{verify_ghd, GhdArray, Params, SymbolLabel, VerificationReport, ViolationKind};
use crate::error::{GhdError, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// GF(p^e) with a fixed modulus: the lexicographically least monic irreducible
/// polynomial of degree e (coefficients compared low-degree-first). Elements
/// are encoded as integers in 0..q whose base-p digits are the polynomial
/// coefficients (digit i = coefficient of x^i).
#[derive(Debug, Clone)]
pub struct GfField {
    pub p: u32,
    pub e: u32,
    pub q: u32,
    /// Coefficients c_0..c_e of the modulus, c_e = 1.
    pub modulus: Vec<u32>,
}

fn factor_prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            let mut m = q;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            return if m == 1 { Some((p, e)) } else { None };
        }
        p += 1;
    }
    Some((q, 1))
}

fn poly_digits(mut v: u32, p: u32, len: usize) -> Vec<u32> {
    let mut d = vec![0; len];
    for x in d.iter_mut() {
        *x = v % p;
        v /= p;
    }
    d
}

fn poly_encode(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Remainder of a (low-degree-first coefficients) modulo b, over GF(p).
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let db = b.iter().rposition(|&c| c != 0).expect("zero divisor");
    let inv_lead = mod_inverse(b[db], p);
    loop {
        let dr = match r.iter().rposition(|&c| c != 0) {
            Some(d) if d >= db => d,
            _ => break,
        };
        let f = r[dr] * inv_lead % p;
        for i in 0..=db {
            r[dr - db + i] = (r[dr - db + i] + p * p - f * b[i] % p) % p;
        }
    }
    r.truncate(db);
    r.resize(db, 0);
    r
}

fn mod_inverse(a: u32, p: u32) -> u32 {
    // p is prime and small; Fermat.
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    result as u32
}

fn poly_is_irreducible(m: &[u32], p: u32) -> bool {
    let e = m.len() - 1;
    // Trial division by every monic polynomial of degree 1..=e/2.
    for d in 1..=e / 2 {
        for low in 0..p.pow(d as u32) {
            let mut div = poly_digits(low, p, d + 1);
            div[d] = 1;
            if poly_rem(m, &div, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl GfField {
    pub fn new(q: u32) -> Result<GfField> {
        if q > 1 << 14 {
            return Err(GhdError::SizeMismatch(format!("field order {q} exceeds 2^14")));
        }
        let (p, e) = factor_prime_power(q).ok_or(GhdError::NotPrimePower(q as u64))?;
        let mut modulus = vec![0; e as usize + 1];
        modulus[e as usize] = 1;
        if e > 1 {
            let mut found = false;
            for low in 0..q {
                let mut m = poly_digits(low, p, e as usize + 1);
                m[e as usize] = 1;
                if poly_is_irreducible(&m, p) {
                    modulus = m;
                    found = true;
                    break;
                }
            }
            assert!(found, "no irreducible polynomial of degree {e} over GF({p})");
        }
        Ok(GfField { p, e, q, modulus })
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let da = poly_digits(a, self.p, self.e as usize);
        let db = poly_digits(b, self.p, self.e as usize);
        let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        poly_encode(&sum, self.p)
    }

    pub fn neg(&self, a: u32) -> u32 {
        let d: Vec<u32> = poly_digits(a, self.p, self.e as usize)
            .iter()
            .map(|&c| (self.p - c) % self.p)
            .collect();
        poly_encode(&d, self.p)
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let e = self.e as usize;
        let da = poly_digits(a, self.p, e);
        let db = poly_digits(b, self.p, e);
        let mut prod = vec![0u32; 2 * e];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        poly_encode(&poly_rem(&prod, &self.modulus, self.p), self.p)
    }
}

/// t mutually orthogonal Latin squares of one order, symbols 0..order-1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MolsSet {
    pub order: usize,
    pub count: usize,
    pub squares: Vec<Vec<Vec<u16>>>,
}

/// t MOLS of side `order` sharing an aligned empty hole. The hole occupies the
/// rows and columns listed in `hole` (our builders use the last a indices),
/// and the symbols with those same indices are exactly the ones omitted from
/// every row and column that crosses the hole.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImolsSet {
    pub order: usize,
    pub count: usize,
    pub hole: Vec<usize>,
    pub squares: Vec<Vec<Vec<Option<u16>>>>,
}

impl ImolsSet {
    pub fn hole_size(&self) -> usize {
        self.hole.len()
    }

    /// Plain MOLS are IMOLS with an empty hole.
    pub fn from_mols(ms: &MolsSet) -> ImolsSet {
        ImolsSet {
            order: ms.order,
            count: ms.count,
            hole: vec![],
            squares: ms
                .squares
                .iter()
                .map(|sq| sq.iter().map(|row| row.iter().map(|&x| Some(x)).collect()).collect())
                .collect(),
        }
    }
}

/// Squares L_a(x,y) = a·x + y over GF(q) for the first t nonzero a.
pub fn mols_from_field(q: u32, t: usize) -> Result<MolsSet> {
    let f = GfField::new(q)?;
    if t == 0 {
        return Err(GhdError::SizeMismatch("need at least one square".into()));
    }
    if t > (q - 1) as usize {
        return Err(GhdError::TooMany { requested: t, available: (q - 1) as usize });
    }
    let n = q as usize;
    let mut squares = Vec::with_capacity(t);
    for a in 1..=t as u32 {
        let mut sq = vec![vec![0u16; n]; n];
        for (x, row) in sq.iter_mut().enumerate() {
            let ax = f.mul(a, x as u32);
            for (y, cell) in row.iter_mut().enumerate() {
                *cell = f.add(ax, y as u32) as u16;
            }
        }
        squares.push(sq);
    }
    Ok(MolsSet { order: n, count: t, squares })
}

/// Direct (componentwise) product: t MOLS(m) x t MOLS(n) -> t MOLS(mn).
pub fn mols_product(a: &MolsSet, b: &MolsSet) -> Result<MolsSet> {
    if a.count != b.count {
        return Err(GhdError::CountMismatch(format!(
            "{} squares vs {} squares",
            a.count, b.count
        )));
    }
    let (m, n) = (a.order, b.order);
    let order = m * n;
    let mut squares = Vec::with_capacity(a.count);
    for (sa, sb) in a.squares.iter().zip(&b.squares) {
        let mut sq = vec![vec![0u16; order]; order];
        for r in 0..order {
            for c in 0..order {
                let va = sa[r / n][c / n] as usize;
                let vb = sb[r % n][c % n] as usize;
                sq[r][c] = (va * n + vb) as u16;
            }
        }
        squares.push(sq);
    }
    Ok(MolsSet { order, count: a.count, squares })
}

/// Superimpose k MOLS(n) into a GHD(n, kn) with no empty cells. Symbol ids are
/// j*n + value for square j; each square's symbol set is a pairwise hole.
pub fn superimpose_to_ghd(ms: &MolsSet) -> Result<GhdArray> {
    let k = ms.count;
    if k < 2 {
        return Err(GhdError::CountMismatch(format!("need k >= 2 squares, got {k}")));
    }
    let n = ms.order;
    let symbols: Vec<SymbolLabel> = (0..k)
        .flat_map(|j| (0..n).map(move |s| SymbolLabel::Finite { residue: s as u32, copy: j as u8 }))
        .collect();
    let mut grid = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let members: Vec<u32> = (0..k)
                .map(|j| (j * n + ms.squares[j][r][c] as usize) as u32)
                .collect();
            grid.push(Some(crate::design::Block::new(members)?));
        }
    }
    GhdArray::from_cells(n, symbols, grid, Params { t: 2, k: k as u32, lambda: 1 })
}

/// Symbol ids of square j's group in a `superimpose_to_ghd` output.
pub fn superimposed_group(order: usize, j: usize) -> Vec<u32> {
    ((j * order) as u32..((j + 1) * order) as u32).collect()
}

/// Resolvable transversal design RTD(t+1, n) from t MOLS(n): one point group
/// for the columns plus one per square, a size-(t+1) block per cell, classes
/// indexed by row.
#[derive(Debug, Clone)]
pub struct Rtd {
    /// Group size (and block count per class).
    pub n: usize,
    /// Block size t+1.
    pub k: usize,
    pub groups: Vec<Vec<u32>>,
    pub blocks: Vec<Vec<u32>>,
    /// classes[r] = indices of the blocks arising from row r.
    pub classes: Vec<Vec<usize>>,
}

impl Rtd {
    pub fn points(&self) -> usize {
        self.n * self.k
    }
}

pub fn rtd_from_mols(ms: &MolsSet) -> Rtd {
    let n = ms.order;
    let t = ms.count;
    let k = t + 1;
    let groups: Vec<Vec<u32>> = (0..k)
        .map(|g| ((g * n) as u32..((g + 1) * n) as u32).collect())
        .collect();
    let mut blocks = Vec::with_capacity(n * n);
    let mut classes = Vec::with_capacity(n);
    for r in 0..n {
        let mut class = Vec::with_capacity(n);
        for c in 0..n {
            let mut b = Vec::with_capacity(k);
            b.push(c as u32);
            for (j, sq) in ms.squares.iter().enumerate() {
                b.push(((j + 1) * n + sq[r][c] as usize) as u32);
            }
            class.push(blocks.len());
            blocks.push(b);
        }
        classes.push(class);
    }
    Rtd { n, k, groups, blocks, classes }
}

/// Pairwise balanced design with named parallel classes.
#[derive(Debug, Clone)]
pub struct ResolvablePbd {
    pub v: usize,
    pub blocks: Vec<Vec<u32>>,
    pub classes: Vec<(String, Vec<usize>)>,
}

/// Adjoin the groups of an RTD as one more parallel class, giving a
/// resolvable PBD(nk, {n, k}, 1) with n+1 classes.
pub fn pbd_from_rtd(rtd: &Rtd) -> ResolvablePbd {
    let mut blocks = rtd.blocks.clone();
    let mut classes: Vec<(String, Vec<usize>)> = rtd
        .classes
        .iter()
        .enumerate()
        .map(|(r, c)| (format!("row{r}"), c.clone()))
        .collect();
    let group_class: Vec<usize> = (0..rtd.groups.len()).map(|g| blocks.len() + g).collect();
    blocks.extend(rtd.groups.iter().cloned());
    classes.push(("groups".into(), group_class));
    ResolvablePbd { v: rtd.points(), blocks, classes }
}

/// The affine plane AG(2,q): q^2 points, q^2+q lines of size q in q+1
/// parallel classes (q slope classes plus the vertical class).
pub fn affine_plane_pbd(q: u32) -> Result<ResolvablePbd> {
    let f = GfField::new(q)?;
    let n = q as usize;
    let pid = |x: u32, y: u32| (x as usize * n + y as usize) as u32;
    let mut blocks = Vec::with_capacity(n * n + n);
    let mut classes = Vec::with_capacity(n + 1);
    for m in 0..q {
        let mut class = Vec::with_capacity(n);
        for b in 0..q {
            let line: Vec<u32> = (0..q).map(|x| pid(x, f.add(f.mul(m, x), b))).collect();
            class.push(blocks.len());
            blocks.push(line);
        }
        classes.push((format!("slope{m}"), class));
    }
    let mut vert = Vec::with_capacity(n);
    for a in 0..q {
        let line: Vec<u32> = (0..q).map(|y| pid(a, y)).collect();
        vert.push(blocks.len());
        blocks.push(line);
    }
    classes.push(("vertical".into(), vert));
    Ok(ResolvablePbd { v: n * n, blocks, classes })
}

/// Exact-pair-coverage and class-partition check for a PBD.
pub fn verify_pbd(pbd: &ResolvablePbd) -> VerificationReport {
    let mut report = VerificationReport::default();
    let v = pbd.v;
    let mut pair = vec![0u8; v * v.saturating_sub(1) / 2];
    for b in &pbd.blocks {
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                let (x, y) = (b[i].min(b[j]) as usize, b[i].max(b[j]) as usize);
                if x == y || y >= v {
                    report.push(ViolationKind::ParamBound, None, None, format!("bad block {b:?}"));
                    continue;
                }
                pair[y * (y - 1) / 2 + x] += 1;
            }
        }
    }
    for y in 1..v {
        for x in 0..y {
            let c = pair[y * (y - 1) / 2 + x];
            if c != 1 {
                report.push(
                    ViolationKind::PairExcess,
                    None,
                    None,
                    format!("pair {{{x},{y}}} covered {c} times"),
                );
            }
        }
    }
    for (name, class) in &pbd.classes {
        let mut seen = vec![0u8; v];
        for &bi in class {
            for &x in &pbd.blocks[bi] {
                seen[x as usize] += 1;
            }
        }
        if seen.iter().any(|&c| c != 1) {
            report.push(
                ViolationKind::RowCover,
                None,
                None,
                format!("class {name} is not a partition of the points"),
            );
        }
    }
    report
}

/// Blow up every filled cell of a k=3 design by 3 superimposed MOLS(n):
/// GHD(s,v) x 3 MOLS(n) -> GHD(ns, nv).
pub fn ghd_mols_product(g: &GhdArray, ms: &MolsSet) -> Result<GhdArray> {
    if ms.count != 3 || g.params.k != 3 {
        return Err(GhdError::CountMismatch(format!(
            "product needs k=3 and 3 squares, got k={} and {}",
            g.params.k, ms.count
        )));
    }
    let report = verify_ghd(g);
    if !report.ok() {
        return Err(GhdError::InvalidDesign(format!("left factor: {report}")));
    }
    let n = ms.order;
    let s = g.side;
    let side = n * s;
    // Symbol x of the factor becomes n symbols x*n..x*n+n-1.
    let symbols: Vec<SymbolLabel> = g
        .symbols
        .iter()
        .flat_map(|l| (0..n).map(move |i| SymbolLabel::Plain(format!("{l}@{i}"))))
        .collect();
    let mut grid: Vec<Option<crate::design::Block>> = vec![None; side * side];
    for (r, c, b) in g.filled_cells() {
        let m = b.members();
        for i in 0..n {
            for j in 0..n {
                let members: Vec<u32> = (0..3)
                    .map(|sq| m[sq] * n as u32 + ms.squares[sq][i][j] as u32)
                    .collect();
                grid[(r * n + i) * side + (c * n + j)] = Some(crate::design::Block::new(members)?);
            }
        }
    }
    let out = GhdArray::from_cells(side, symbols, grid, g.params)?;
    let report = verify_ghd(&out);
    if !report.ok() {
        return Err(GhdError::InvalidDesign(format!("product output: {report}")));
    }
    Ok(out)
}

pub fn verify_mols(ms: &MolsSet) -> VerificationReport {
    let mut report = VerificationReport::default();
    let n = ms.order;
    if ms.count != ms.squares.len() {
        report.push(
            ViolationKind::ParamBound,
            None,
            None,
            format!("count={} but {} squares present", ms.count, ms.squares.len()),
        );
    }
    for (si, sq) in ms.squares.iter().enumerate() {
        if sq.len() != n || sq.iter().any(|row| row.len() != n) {
            report.push(ViolationKind::ParamBound, None, None, format!("square {si} not {n}x{n}"));
            continue;
        }
        latin_check(&mut report, si, n, |r, c| Some(sq[r][c]));
    }
    for i in 0..ms.squares.len() {
        for j in i + 1..ms.squares.len() {
            superposition_check(&mut report, n, i, j, |r, c| {
                Some((ms.squares[i][r][c], ms.squares[j][r][c]))
            });
        }
    }
    report
}

fn latin_check(
    report: &mut VerificationReport,
    si: usize,
    n: usize,
    at: impl Fn(usize, usize) -> Option<u16>,
) {
    for r in 0..n {
        let mut seen = vec![0u8; n];
        for c in 0..n {
            if let Some(x) = at(r, c) {
                if (x as usize) < n {
                    seen[x as usize] += 1;
                } else {
                    report.push(ViolationKind::ParamBound, Some(r), Some(c), format!("square {si}: symbol {x} out of range"));
                }
            }
        }
        for (x, &cnt) in seen.iter().enumerate() {
            if cnt > 1 {
                report.push(ViolationKind::RowCover, Some(r), None, format!("square {si}: symbol {x} repeats in row"));
            }
        }
    }
    for c in 0..n {
        let mut seen = vec![0u8; n];
        for r in 0..n {
            if let Some(x) = at(r, c) {
                if (x as usize) < n {
                    seen[x as usize] += 1;
                }
            }
        }
        for (x, &cnt) in seen.iter().enumerate() {
            if cnt > 1 {
                report.push(ViolationKind::ColCover, None, Some(c), format!("square {si}: symbol {x} repeats in column"));
            }
        }
    }
}

fn superposition_check(
    report: &mut VerificationReport,
    n: usize,
    i: usize,
    j: usize,
    at: impl Fn(usize, usize) -> Option<(u16, u16)>,
) {
    let mut seen = vec![false; n * n];
    for r in 0..n {
        for c in 0..n {
            if let Some((a, b)) = at(r, c) {
                let idx = a as usize * n + b as usize;
                if idx < seen.len() && std::mem::replace(&mut seen[idx], true) {
                    report.push(
                        ViolationKind::PairExcess,
                        Some(r),
                        Some(c),
                        format!("squares {i},{j}: superposition pair ({a},{b}) repeats"),
                    );
                }
            }
        }
    }
}

pub fn verify_imols(im: &ImolsSet) -> VerificationReport {
    let mut report = VerificationReport::default();
    let n = im.order;
    let a = im.hole.len();
    let in_hole = |x: usize| im.hole.contains(&x);
    if im.hole.iter().any(|&h| h >= n) {
        report.push(ViolationKind::ParamBound, None, None, "hole index out of range".into());
        return report;
    }
    for (si, sq) in im.squares.iter().enumerate() {
        if sq.len() != n || sq.iter().any(|row| row.len() != n) {
            report.push(ViolationKind::ParamBound, None, None, format!("square {si} not {n}x{n}"));
            continue;
        }
        // Hole cells empty, everything else filled.
        for r in 0..n {
            for c in 0..n {
                let hole_cell = in_hole(r) && in_hole(c);
                match (hole_cell, sq[r][c]) {
                    (true, Some(_)) => report.push(
                        ViolationKind::CellArity,
                        Some(r),
                        Some(c),
                        format!("square {si}: hole cell filled"),
                    ),
                    (false, None) => report.push(
                        ViolationKind::CellArity,
                        Some(r),
                        Some(c),
                        format!("square {si}: non-hole cell empty"),
                    ),
                    _ => {}
                }
            }
        }
        latin_check(&mut report, si, n, |r, c| sq[r][c]);
        // Rows/columns crossing the hole omit exactly the hole symbols.
        for r in 0..n {
            let mut seen = vec![false; n];
            for c in 0..n {
                if let Some(x) = sq[r][c] {
                    if (x as usize) < n {
                        seen[x as usize] = true;
                    }
                }
            }
            let missing: Vec<usize> = (0..n).filter(|&x| !seen[x]).collect();
            let expected: Vec<usize> = if in_hole(r) {
                let mut h = im.hole.clone();
                h.sort_unstable();
                h
            } else {
                vec![]
            };
            if missing != expected {
                report.push(
                    ViolationKind::RowCover,
                    Some(r),
                    None,
                    format!("square {si}: row misses symbols {missing:?}, expected {expected:?}"),
                );
            }
        }
        for c in 0..n {
            let mut seen = vec![false; n];
            for r in 0..n {
                if let Some(x) = sq[r][c] {
                    if (x as usize) < n {
                        seen[x as usize] = true;
                    }
                }
            }
            let missing: Vec<usize> = (0..n).filter(|&x| !seen[x]).collect();
            let expected: Vec<usize> = if in_hole(c) {
                let mut h = im.hole.clone();
                h.sort_unstable();
                h
            } else {
                vec![]
            };
            if missing != expected {
                report.push(
                    ViolationKind::ColCover,
                    None,
                    Some(c),
                    format!("square {si}: column misses symbols {missing:?}, expected {expected:?}"),
                );
            }
        }
    }
    // Orthogonality off the hole: n^2 - a^2 distinct superposition pairs, and
    // no pair with both coordinates hole symbols.
    for i in 0..im.squares.len() {
        for j in i + 1..im.squares.len() {
            let mut count = 0usize;
            superposition_check(&mut report, n, i, j, |r, c| {
                match (im.squares[i][r][c], im.squares[j][r][c]) {
                    (Some(x), Some(y)) => Some((x, y)),
                    _ => None,
                }
            });
            let mut both_hole = 0usize;
            for r in 0..n {
                for c in 0..n {
                    if let (Some(x), Some(y)) = (im.squares[i][r][c], im.squares[j][r][c]) {
                        count += 1;
                        if in_hole(x as usize) && in_hole(y as usize) {
                            both_hole += 1;
                        }
                    }
                }
            }
            if count != n * n - a * a {
                report.push(
                    ViolationKind::ParamBound,
                    None,
                    None,
                    format!("squares {i},{j}: {count} filled pairs, expected {}", n * n - a * a),
                );
            }
            if both_hole != 0 {
                report.push(
                    ViolationKind::PairExcess,
                    None,
                    None,
                    format!("squares {i},{j}: {both_hole} superposition pairs of two hole symbols"),
                );
            }
        }
    }
    report
}

// ---- JSON + cache ----

pub fn imols_to_json(im: &ImolsSet) -> Result<String> {
    Ok(serde_json::to_string_pretty(im)?)
}

pub fn imols_from_json(text: &str) -> Result<ImolsSet> {
    let im: ImolsSet = serde_json::from_str(text)?;
    Ok(im)
}

/// Cache directory from GHD_CACHE_DIR, if set.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("GHD_CACHE_DIR").map(PathBuf::from)
}

fn cache_path(y: usize, a: usize, t: usize) -> Option<PathBuf> {
    cache_dir().map(|d| d.join(format!("imols_y{y}_a{a}_t{t}.json")))
}

/// Load a cached IMOLS set; entries failing verification are ignored.
pub fn cache_load_imols(y: usize, a: usize, t: usize) -> Option<ImolsSet> {
    let path = cache_path(y, a, t)?;
    let text = std::fs::read_to_string(path).ok()?;
    let im = imols_from_json(&text).ok()?;
    if im.order == y && im.hole.len() == a && im.squares.len() == t && verify_imols(&im).ok() {
        Some(im)
    } else {
        None
    }
}

pub fn cache_store_imols(im: &ImolsSet) -> Result<()> {
    if let Some(path) = cache_path(im.order, im.hole.len(), im.squares.len()) {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, imols_to_json(im)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_arithmetic_gf8() {
        let f = GfField::new(8).unwrap();
        assert_eq!((f.p, f.e), (2, 3));
        // x^3 + x + 1 is the least irreducible cubic over GF(2): coeffs 1,1,0,1.
        assert_eq!(f.modulus, vec![1, 1, 0, 1]);
        for a in 0..8 {
            assert_eq!(f.add(a, a), 0);
            if a != 0 {
                // Nonzero elements form a group: a * b covers everything once.
                let mut seen = vec![false; 8];
                for b in 0..8 {
                    seen[f.mul(a, b) as usize] = true;
                }
                assert!(seen.iter().skip(0).filter(|&&s| s).count() == 8);
            }
        }
    }

    #[test]
    fn field_rejects_non_prime_power() {
        assert!(matches!(GfField::new(6), Err(GhdError::NotPrimePower(6))));
        assert!(matches!(GfField::new(12), Err(GhdError::NotPrimePower(12))));
        assert!(GfField::new(9).is_ok());
        assert!(GfField::new(49).is_ok());
    }

    #[test]
    fn field_mols_orthogonal() {
        for q in [3u32, 4, 5, 7, 8, 9] {
            let ms = mols_from_field(q, (q - 1) as usize).unwrap();
            assert!(verify_mols(&ms).ok(), "q={q}");
        }
        assert!(matches!(mols_from_field(5, 5), Err(GhdError::TooMany { .. })));
    }

    #[test]
    fn product_preserves_orthogonality() {
        let a = mols_from_field(4, 3).unwrap();
        let b = mols_from_field(5, 3).unwrap();
        let p = mols_product(&a, &b).unwrap();
        assert_eq!(p.order, 20);
        assert!(verify_mols(&p).ok());
        let c = mols_from_field(3, 2).unwrap();
        let p2 = mols_product(&c, &c).unwrap();
        assert_eq!(p2.order, 9);
        assert!(verify_mols(&p2).ok());
        assert!(matches!(
            mols_product(&a, &c),
            Err(GhdError::CountMismatch(_))
        ));
    }

    #[test]
    fn superimpose_gives_star_design() {
        let ms = mols_from_field(8, 3).unwrap();
        let g = superimpose_to_ghd(&ms).unwrap();
        assert_eq!((g.side, g.v()), (8, 24));
        assert!(verify_ghd(&g).ok());
        for j in 0..3 {
            let hole = superimposed_group(8, j);
            assert!(crate::design::verify_star(&g, &hole).unwrap(), "group {j}");
        }
        let tiny = superimpose_to_ghd(&mols_from_field(4, 3).unwrap()).unwrap();
        assert!(verify_ghd(&tiny).ok());
    }

    #[test]
    fn rtd_pair_coverage() {
        // Oracle: in an RTD, two points are in a common block iff they lie in
        // different groups, and then exactly once.
        for (q, t) in [(2u32, 1usize), (8, 7), (5, 4)] {
            let ms = mols_from_field(q, t).unwrap();
            let rtd = rtd_from_mols(&ms);
            let v = rtd.points();
            let mut pair = vec![0u8; v * v];
            for b in &rtd.blocks {
                for i in 0..b.len() {
                    for j in i + 1..b.len() {
                        pair[b[i] as usize * v + b[j] as usize] += 1;
                    }
                }
            }
            let group_of = |x: usize| x / rtd.n;
            for x in 0..v {
                for y in x + 1..v {
                    let expected = if group_of(x) == group_of(y) { 0 } else { 1 };
                    assert_eq!(pair[x * v + y], expected, "q={q} pair ({x},{y})");
                }
            }
            for class in &rtd.classes {
                let mut seen = vec![0u8; v];
                for &bi in class {
                    for &x in &rtd.blocks[bi] {
                        seen[x as usize] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1), "q={q} class not a partition");
            }
        }
    }

    #[test]
    fn pbd_from_rtd_exact_coverage() {
        let ms = mols_from_field(8, 7).unwrap();
        let pbd = pbd_from_rtd(&rtd_from_mols(&ms));
        assert_eq!(pbd.v, 64);
        assert_eq!(pbd.classes.len(), 9);
        assert!(verify_pbd(&pbd).ok());
        let tiny = pbd_from_rtd(&rtd_from_mols(&mols_from_field(2, 1).unwrap()));
        assert_eq!((tiny.v, tiny.classes.len()), (4, 3));
        assert!(verify_pbd(&tiny).ok());
        let five = pbd_from_rtd(&rtd_from_mols(&mols_from_field(5, 4).unwrap()));
        assert_eq!((five.v, five.classes.len()), (25, 6));
        assert!(verify_pbd(&five).ok());
    }

    #[test]
    fn affine_planes() {
        let p2 = affine_plane_pbd(2).unwrap();
        assert_eq!((p2.v, p2.blocks.len(), p2.classes.len()), (4, 6, 3));
        assert!(verify_pbd(&p2).ok());
        let p3 = affine_plane_pbd(3).unwrap();
        assert_eq!((p3.blocks.len(), p3.classes.len()), (12, 4));
        assert!(verify_pbd(&p3).ok());
        let p8 = affine_plane_pbd(8).unwrap();
        assert_eq!((p8.blocks.len(), p8.classes.len()), (72, 9));
        assert!(verify_pbd(&p8).ok());
        for (_, class) in &p8.classes {
            assert_eq!(class.len(), 8);
            assert!(class.iter().all(|&b| p8.blocks[b].len() == 8));
        }
        assert!(affine_plane_pbd(6).is_err());
    }

    #[test]
    fn product_blow_up_single_cell() {
        let ms = mols_from_field(4, 3).unwrap();
        let one = GhdArray::from_cells(
            1,
            vec![
                SymbolLabel::Plain("a".into()),
                SymbolLabel::Plain("b".into()),
                SymbolLabel::Plain("c".into()),
            ],
            vec![Some(crate::design::Block::new(vec![0, 1, 2]).unwrap())],
            Params::default(),
        )
        .unwrap();
        let g = ghd_mols_product(&one, &ms).unwrap();
        assert_eq!((g.side, g.v()), (4, 12));
        assert!(verify_ghd(&g).ok());
    }

    #[test]
    fn verify_mols_catches_transposed_square() {
        let mut ms = mols_from_field(5, 3).unwrap();
        let sq = ms.squares[1].clone();
        for r in 0..5 {
            for c in 0..5 {
                ms.squares[1][r][c] = sq[c][r];
            }
        }
        // The transpose of L_a is the square of 1/a, already present up to
        // relabeling; it stays Latin but breaks orthogonality with some mate.
        assert!(!verify_mols(&ms).ok());
    }

    #[test]
    fn imols_with_empty_hole_roundtrip() {
        let im = ImolsSet::from_mols(&mols_from_field(7, 3).unwrap());
        assert!(verify_imols(&im).ok());
        let json = imols_to_json(&im).unwrap();
        let back = imols_from_json(&json).unwrap();
        assert!(verify_imols(&back).ok());
        assert_eq!(back.order, 7);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        // Env vars are process-global; this test owns GHD_CACHE_DIR briefly.
        std::env::set_var("GHD_CACHE_DIR", dir.path());
        let im = ImolsSet::from_mols(&mols_from_field(5, 2).unwrap());
        cache_store_imols(&im).unwrap();
        let back = cache_load_imols(5, 0, 2).expect("cache hit");
        assert_eq!(back.squares, im.squares);
        std::env::remove_var("GHD_CACHE_DIR");
    }
}
