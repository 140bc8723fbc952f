//! Core design types: symbols, blocks, the square array, and the exact verifier.

use crate::error::{GhdError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Label attached to a symbol id. `Finite` carries a group residue and a copy
/// subscript, `Infinite` an infinity index; anything else is `Plain`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolLabel {
    Finite { residue: u32, copy: u8 },
    Infinite { index: u32 },
    Plain(String),
}

impl fmt::Display for SymbolLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolLabel::Finite { residue, copy } => write!(f, "{residue}_{copy}"),
            SymbolLabel::Infinite { index } => write!(f, "inf{index}"),
            SymbolLabel::Plain(name) => write!(f, "{name}"),
        }
    }
}

impl SymbolLabel {
    /// Inverse of `Display`: `3_0` is finite, `inf2` infinite, all else plain.
    pub fn parse(s: &str) -> SymbolLabel {
        if let Some(rest) = s.strip_prefix("inf") {
            if let Ok(index) = rest.parse::<u32>() {
                return SymbolLabel::Infinite { index };
            }
        }
        if let Some((a, b)) = s.split_once('_') {
            if let (Ok(residue), Ok(copy)) = (a.parse::<u32>(), b.parse::<u8>()) {
                return SymbolLabel::Finite { residue, copy };
            }
        }
        SymbolLabel::Plain(s.to_string())
    }
}

/// A sorted k-set of symbol ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block(Vec<u32>);

impl Block {
    pub fn new(mut members: Vec<u32>) -> Result<Block> {
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(GhdError::MalformedInput(format!(
                    "repeated symbol {} in block",
                    w[0]
                )));
            }
        }
        Ok(Block(members))
    }

    pub fn members(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// Apply a symbol permutation (old id -> new id) and re-sort.
    pub fn map(&self, perm: &[u32]) -> Block {
        let mut v: Vec<u32> = self.0.iter().map(|&x| perm[x as usize]).collect();
        v.sort_unstable();
        Block(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub t: u32,
    pub k: u32,
    pub lambda: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params { t: 2, k: 3, lambda: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    CellArity,
    RowCover,
    ColCover,
    PairExcess,
    ParamBound,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub kind: ViolationKind,
    pub row: Option<usize>,
    pub col: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, kind: ViolationKind, row: Option<usize>, col: Option<usize>, detail: String) {
        self.violations.push(Violation { kind, row, col, detail });
    }

    pub fn has_kind(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(
                f,
                "{:?} row={:?} col={:?}: {}",
                v.kind, v.row, v.col, v.detail
            )?;
        }
        Ok(())
    }
}

/// An s x s array of optional blocks over a v-symbol set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GhdArray {
    pub side: usize,
    pub symbols: Vec<SymbolLabel>,
    grid: Vec<Option<Block>>,
    pub params: Params,
}

impl GhdArray {
    /// Structural construction checks: grid dimensions, id bounds, cell arity,
    /// label uniqueness. Design laws (row/column resolution, pair balance) are
    /// the verifier's job.
    pub fn from_cells(
        side: usize,
        symbols: Vec<SymbolLabel>,
        grid: Vec<Option<Block>>,
        params: Params,
    ) -> Result<GhdArray> {
        if grid.len() != side * side {
            return Err(GhdError::MalformedInput(format!(
                "grid has {} cells, expected {}",
                grid.len(),
                side * side
            )));
        }
        let v = symbols.len() as u32;
        {
            let mut sorted: Vec<&SymbolLabel> = symbols.iter().collect();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(GhdError::MalformedInput("duplicate symbol label".into()));
            }
        }
        for (idx, cell) in grid.iter().enumerate() {
            if let Some(b) = cell {
                if b.len() != params.k as usize {
                    return Err(GhdError::MalformedInput(format!(
                        "cell ({},{}) holds {} symbols, expected k={}",
                        idx / side,
                        idx % side,
                        b.len(),
                        params.k
                    )));
                }
                if let Some(&id) = b.members().iter().find(|&&id| id >= v) {
                    return Err(GhdError::MalformedInput(format!(
                        "cell ({},{}) references unknown symbol id {}",
                        idx / side,
                        idx % side,
                        id
                    )));
                }
            }
        }
        Ok(GhdArray { side, symbols, grid, params })
    }

    pub fn v(&self) -> usize {
        self.symbols.len()
    }

    pub fn cell(&self, r: usize, c: usize) -> Option<&Block> {
        self.grid[r * self.side + c].as_ref()
    }

    pub fn cells(&self) -> &[Option<Block>] {
        &self.grid
    }

    pub fn filled_cells(&self) -> impl Iterator<Item = (usize, usize, &Block)> {
        let side = self.side;
        self.grid
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.as_ref().map(|b| (i / side, i % side, b)))
    }

    /// Replace one cell, rechecking only that cell's structure. Used by
    /// builders and by mutation tests.
    pub fn with_cell(&self, r: usize, c: usize, cell: Option<Block>) -> Result<GhdArray> {
        if r >= self.side || c >= self.side {
            return Err(GhdError::SizeMismatch(format!("cell ({r},{c}) out of range")));
        }
        if let Some(b) = &cell {
            if b.len() != self.params.k as usize || b.members().iter().any(|&id| id as usize >= self.v()) {
                return Err(GhdError::MalformedInput(format!("bad replacement cell at ({r},{c})")));
            }
        }
        let mut grid = self.grid.clone();
        grid[r * self.side + c] = cell;
        Ok(GhdArray { side: self.side, symbols: self.symbols.clone(), grid, params: self.params })
    }

    pub fn id_of(&self, label: &SymbolLabel) -> Option<u32> {
        self.symbols.iter().position(|l| l == label).map(|i| i as u32)
    }
}

/// Exact check of every design axiom. All violations are reported, not just
/// the first, so catalog ingestion can show what exactly is off.
pub fn verify_ghd(array: &GhdArray) -> VerificationReport {
    let mut report = VerificationReport::default();
    let v = array.v();
    let k = array.params.k as usize;
    let s = array.side;

    if array.params.t != 2 {
        report.push(ViolationKind::ParamBound, None, None, format!("t={} unsupported", array.params.t));
    }
    if array.params.k < 2 || array.params.lambda < 1 {
        report.push(ViolationKind::ParamBound, None, None, "k >= 2 and lambda >= 1 required".into());
    }
    if v % k != 0 {
        report.push(ViolationKind::ParamBound, None, None, format!("v={v} not divisible by k={k}"));
    }

    // Row and column coverage: every symbol exactly once.
    let mut row_count = vec![0u8; v];
    for r in 0..s {
        row_count.iter_mut().for_each(|x| *x = 0);
        for c in 0..s {
            if let Some(b) = array.cell(r, c) {
                for &x in b.members() {
                    row_count[x as usize] = row_count[x as usize].saturating_add(1);
                }
            }
        }
        for (x, &cnt) in row_count.iter().enumerate() {
            if cnt != 1 {
                report.push(
                    ViolationKind::RowCover,
                    Some(r),
                    None,
                    format!("symbol {} ({}) appears {} times in row", x, array.symbols[x], cnt),
                );
            }
        }
    }
    for c in 0..s {
        row_count.iter_mut().for_each(|x| *x = 0);
        for r in 0..s {
            if let Some(b) = array.cell(r, c) {
                for &x in b.members() {
                    row_count[x as usize] = row_count[x as usize].saturating_add(1);
                }
            }
        }
        for (x, &cnt) in row_count.iter().enumerate() {
            if cnt != 1 {
                report.push(
                    ViolationKind::ColCover,
                    None,
                    Some(c),
                    format!("symbol {} ({}) appears {} times in column", x, array.symbols[x], cnt),
                );
            }
        }
    }

    // Pair balance via a triangular count table: index of {x<y} is y(y-1)/2+x.
    let lambda = array.params.lambda as u8;
    let mut pair_count = vec![0u8; v * v.saturating_sub(1) / 2];
    for (r, c, b) in array.filled_cells() {
        let m = b.members();
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                let (x, y) = (m[i] as usize, m[j] as usize);
                let idx = y * (y - 1) / 2 + x;
                pair_count[idx] = pair_count[idx].saturating_add(1);
                if pair_count[idx] == lambda.saturating_add(1) {
                    report.push(
                        ViolationKind::PairExcess,
                        Some(r),
                        Some(c),
                        format!(
                            "pair {{{}, {}}} exceeds lambda={}",
                            array.symbols[x], array.symbols[y], lambda
                        ),
                    );
                }
            }
        }
    }

    report
}

/// The *-property: `hole` is a pairwise hole of the exact size v - s(k-1).
pub fn verify_star(array: &GhdArray, hole: &[u32]) -> Result<bool> {
    let v = array.v();
    for &h in hole {
        if h as usize >= v {
            return Err(GhdError::MalformedInput(format!("unknown symbol id {h} in hole")));
        }
    }
    let expected = v as i64 - (array.side as i64) * (array.params.k as i64 - 1);
    if hole.len() as i64 != expected {
        return Ok(false);
    }
    let mut in_hole = vec![false; v];
    for &h in hole {
        in_hole[h as usize] = true;
    }
    for (_, _, b) in array.filled_cells() {
        if b.members().iter().filter(|&&x| in_hole[x as usize]).count() >= 2 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn cooccurrence_bitsets(array: &GhdArray) -> Vec<Vec<u64>> {
    let v = array.v();
    let words = v.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; v];
    for (_, _, b) in array.filled_cells() {
        let m = b.members();
        for i in 0..m.len() {
            for j in 0..m.len() {
                if i != j {
                    adj[m[i] as usize][m[j] as usize / 64] |= 1 << (m[j] % 64);
                }
            }
        }
    }
    adj
}

/// Deterministic search for an independent set of the requested size in the
/// co-occurrence graph: symbols tried in id order, so the result is stable.
pub fn find_pairwise_hole(array: &GhdArray, size: usize) -> Option<Vec<u32>> {
    if size == 0 {
        return Some(vec![]);
    }
    let v = array.v();
    if size > v {
        return None;
    }
    let adj = cooccurrence_bitsets(array);
    let words = v.div_ceil(64);

    // Fast path: when every symbol has exactly (k-1)*s partners (true for any
    // verified design) and the requested size is the maximal v - (k-1)*s, a
    // hole member's non-partners are forced to be the rest of the hole, so it
    // suffices to test {x} ∪ non-partners(x) for each x.
    let partners = (array.params.k as usize - 1) * array.side;
    let degrees_tight = adj
        .iter()
        .all(|row| row.iter().map(|w| w.count_ones() as usize).sum::<usize>() == partners);
    if degrees_tight && partners + size == v {
        'next_x: for x in 0..v {
            let candidate: Vec<u32> = (0..v as u32)
                .filter(|&y| {
                    y == x as u32 || adj[x][y as usize / 64] >> (y % 64) & 1 == 0
                })
                .collect();
            debug_assert_eq!(candidate.len(), size);
            for (i, &a) in candidate.iter().enumerate() {
                for &b in &candidate[i + 1..] {
                    if adj[a as usize][b as usize / 64] >> (b % 64) & 1 == 1 {
                        continue 'next_x;
                    }
                }
            }
            return Some(candidate);
        }
        return None;
    }

    let mut chosen: Vec<u32> = Vec::with_capacity(size);
    // forbidden = union of neighbourhoods of chosen symbols
    fn extend(
        chosen: &mut Vec<u32>,
        forbidden: &[u64],
        from: usize,
        size: usize,
        v: usize,
        adj: &[Vec<u64>],
        words: usize,
    ) -> bool {
        if chosen.len() == size {
            return true;
        }
        if v - from < size - chosen.len() {
            return false;
        }
        for x in from..v {
            if forbidden[x / 64] >> (x % 64) & 1 == 1 {
                continue;
            }
            chosen.push(x as u32);
            let mut f = forbidden.to_vec();
            for w in 0..words {
                f[w] |= adj[x][w];
            }
            if extend(chosen, &f, x + 1, size, v, adj, words) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if extend(&mut chosen, &vec![0u64; words], 0, size, v, &adj, words) {
        Some(chosen)
    } else {
        None
    }
}

/// Rows and columns whose e x e intersection is empty. Exhaustive for e <= 3;
/// beyond that a greedy scan over empty-richest rows that may miss.
pub fn find_empty_subsquare(array: &GhdArray, e: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    if e == 0 {
        return Some((vec![], vec![]));
    }
    let s = array.side;
    if e > s {
        return None;
    }
    let words = s.div_ceil(64);
    // empty[r] = bitset of columns with an empty cell in row r
    let mut empty = vec![vec![0u64; words]; s];
    for r in 0..s {
        for c in 0..s {
            if array.cell(r, c).is_none() {
                empty[r][c / 64] |= 1 << (c % 64);
            }
        }
    }
    let popcount = |bs: &[u64]| bs.iter().map(|w| w.count_ones() as usize).sum::<usize>();
    let first_bits = |bs: &[u64], n: usize| {
        let mut out = Vec::with_capacity(n);
        'outer: for (wi, &w) in bs.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(wi * 64 + w.trailing_zeros() as usize);
                if out.len() == n {
                    break 'outer;
                }
                w &= w - 1;
            }
        }
        out
    };
    let rich: Vec<usize> = (0..s).filter(|&r| popcount(&empty[r]) >= e).collect();
    if rich.len() < e {
        return None;
    }
    if e <= 3 {
        let mut combo = vec![0usize; e];
        fn rec(
            combo: &mut [usize],
            depth: usize,
            from: usize,
            rich: &[usize],
            empty: &[Vec<u64>],
            e: usize,
            words: usize,
        ) -> Option<(Vec<usize>, Vec<u64>)> {
            if depth == combo.len() {
                let mut inter = vec![u64::MAX; words];
                for &r in combo.iter() {
                    for w in 0..words {
                        inter[w] &= empty[r][w];
                    }
                }
                if inter.iter().map(|w| w.count_ones() as usize).sum::<usize>() >= e {
                    return Some((combo.to_vec(), inter));
                }
                return None;
            }
            for i in from..rich.len() {
                combo[depth] = rich[i];
                if let Some(hit) = rec(combo, depth + 1, i + 1, rich, empty, e, words) {
                    return Some(hit);
                }
            }
            None
        }
        let (rows, inter) = rec(&mut combo, 0, 0, &rich, &empty, e, words)?;
        let cols = first_bits(&inter, e);
        return Some((rows, cols));
    }
    // Greedy: take empty-richest rows one at a time, keeping the intersection alive.
    let mut order = rich.clone();
    order.sort_by_key(|&r| std::cmp::Reverse(popcount(&empty[r])));
    let mut rows = Vec::with_capacity(e);
    let mut inter = vec![u64::MAX; words];
    for &r in &order {
        let mut trial = inter.clone();
        for w in 0..words {
            trial[w] &= empty[r][w];
        }
        if popcount(&trial) >= e {
            rows.push(r);
            inter = trial;
            if rows.len() == e {
                rows.sort_unstable();
                return Some((rows, first_bits(&inter, e)));
            }
        }
    }
    None
}

/// The k-uniform permutation-array view: row x, position r = column of the
/// cell in array-row r that contains x.
pub fn to_permutation_array(array: &GhdArray) -> Result<Vec<Vec<u16>>> {
    let report = verify_ghd(array);
    if !report.ok() {
        return Err(GhdError::InvalidDesign(format!("{report}")));
    }
    let v = array.v();
    let s = array.side;
    let mut pa = vec![vec![0u16; s]; v];
    for (r, c, b) in array.filled_cells() {
        for &x in b.members() {
            pa[x as usize][r] = c as u16;
        }
    }
    Ok(pa)
}

/// Binary codewords of length 2s+v: one per filled cell, row indicator +
/// column indicator + block indicator.
#[derive(Debug, Clone)]
pub struct DcwCode {
    pub bit_len: usize,
    pub codewords: Vec<Vec<u64>>,
}

impl DcwCode {
    pub fn min_distance(&self) -> Option<usize> {
        let mut best = None;
        for i in 0..self.codewords.len() {
            for j in i + 1..self.codewords.len() {
                let d: usize = self.codewords[i]
                    .iter()
                    .zip(&self.codewords[j])
                    .map(|(a, b)| (a ^ b).count_ones() as usize)
                    .sum();
                if best.map_or(true, |b| d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }
}

pub fn to_dcw_code(array: &GhdArray) -> Result<DcwCode> {
    let report = verify_ghd(array);
    if !report.ok() {
        return Err(GhdError::InvalidDesign(format!("{report}")));
    }
    let s = array.side;
    let v = array.v();
    let bit_len = 2 * s + v;
    let words = bit_len.div_ceil(64);
    let mut codewords = Vec::new();
    for (r, c, b) in array.filled_cells() {
        let mut w = vec![0u64; words];
        let mut set = |bit: usize| w[bit / 64] |= 1 << (bit % 64);
        set(r);
        set(s + c);
        for &x in b.members() {
            set(2 * s + x as usize);
        }
        codewords.push(w);
    }
    Ok(DcwCode { bit_len, codewords })
}

/// Relabel rows, columns and symbols. `row_perm[r]` is the new index of old
/// row r, likewise for columns and symbols.
pub fn apply_relabeling(
    array: &GhdArray,
    row_perm: &[usize],
    col_perm: &[usize],
    symbol_perm: &[u32],
) -> Result<GhdArray> {
    let s = array.side;
    let v = array.v();
    let is_perm_usize = |p: &[usize], n: usize| {
        p.len() == n && {
            let mut seen = vec![false; n];
            p.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
        }
    };
    if !is_perm_usize(row_perm, s) || !is_perm_usize(col_perm, s) {
        return Err(GhdError::SizeMismatch("row/col permutation invalid".into()));
    }
    {
        let mut seen = vec![false; v];
        if symbol_perm.len() != v
            || !symbol_perm
                .iter()
                .all(|&x| (x as usize) < v && !std::mem::replace(&mut seen[x as usize], true))
        {
            return Err(GhdError::SizeMismatch("symbol permutation invalid".into()));
        }
    }
    let mut grid = vec![None; s * s];
    for (r, c, b) in array.filled_cells() {
        grid[row_perm[r] * s + col_perm[c]] = Some(b.map(symbol_perm));
    }
    let mut symbols = vec![SymbolLabel::Plain(String::new()); v];
    for (old, label) in array.symbols.iter().enumerate() {
        symbols[symbol_perm[old] as usize] = label.clone();
    }
    GhdArray::from_cells(s, symbols, grid, array.params)
}

/// Cell-for-cell equality that compares blocks as label sets, so two arrays
/// with different internal id orderings still compare equal.
pub fn grids_equal_by_label(a: &GhdArray, b: &GhdArray) -> bool {
    if a.side != b.side {
        return false;
    }
    for r in 0..a.side {
        for c in 0..a.side {
            let la = a.cell(r, c).map(|blk| {
                let mut v: Vec<&SymbolLabel> =
                    blk.members().iter().map(|&x| &a.symbols[x as usize]).collect();
                v.sort();
                v
            });
            let lb = b.cell(r, c).map(|blk| {
                let mut v: Vec<&SymbolLabel> =
                    blk.members().iter().map(|&x| &b.symbols[x as usize]).collect();
                v.sort();
                v
            });
            if la != lb {
                return false;
            }
        }
    }
    true
}

/// Exact reduced fraction, for the empty-cell proportion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Ratio {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 { a } else { gcd(b, a % b) }
        }
        if num == 0 {
            return Ratio { num: 0, den: 1 };
        }
        let g = gcd(num, den);
        Ratio { num: num / g, den: den / g }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// (filled cells per row, empty cells per row, empty proportion).
pub fn row_profile(array: &GhdArray) -> (usize, usize, Ratio) {
    let n = array.v() / array.params.k as usize;
    let e = array.side - n;
    (n, e, Ratio::new(e as u64, array.side as u64))
}
