//! Grid serialization: a JSON form and a text form mirroring printed tables.

use crate::design::{Block, GhdArray, Params, SymbolLabel};
use crate::error::{GhdError, Result};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct GridJson {
    s: usize,
    v: usize,
    k: u32,
    symbols: Vec<String>,
    cells: Vec<Vec<Option<Vec<u32>>>>,
}

pub fn grid_to_json(array: &GhdArray) -> String {
    let g = GridJson {
        s: array.side,
        v: array.v(),
        k: array.params.k,
        symbols: array.symbols.iter().map(|l| l.to_string()).collect(),
        cells: (0..array.side)
            .map(|r| {
                (0..array.side)
                    .map(|c| array.cell(r, c).map(|b| b.members().to_vec()))
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string_pretty(&g).expect("grid serialization cannot fail")
}

pub fn grid_from_json(text: &str) -> Result<GhdArray> {
    let g: GridJson = serde_json::from_str(text)?;
    if g.symbols.len() != g.v {
        return Err(GhdError::MalformedInput(format!(
            "v={} but {} symbol labels",
            g.v,
            g.symbols.len()
        )));
    }
    let symbols: Vec<SymbolLabel> = g.symbols.iter().map(|s| SymbolLabel::parse(s)).collect();
    let mut grid = Vec::with_capacity(g.s * g.s);
    if g.cells.len() != g.s {
        return Err(GhdError::MalformedInput("cell row count != s".into()));
    }
    for row in g.cells {
        if row.len() != g.s {
            return Err(GhdError::MalformedInput("cell column count != s".into()));
        }
        for cell in row {
            grid.push(match cell {
                None => None,
                Some(ids) => Some(Block::new(ids)?),
            });
        }
    }
    GhdArray::from_cells(g.s, symbols, grid, Params { k: g.k, ..Params::default() })
}

/// Text grid: one line per row, cells separated by `|`, symbols separated by
/// spaces, empty cell left blank. Symbol ids follow first appearance order.
pub fn grid_to_text(array: &GhdArray) -> String {
    let mut out = String::new();
    for r in 0..array.side {
        let mut cells = Vec::with_capacity(array.side);
        for c in 0..array.side {
            match array.cell(r, c) {
                None => cells.push(String::new()),
                Some(b) => cells.push(
                    b.members()
                        .iter()
                        .map(|&x| array.symbols[x as usize].to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
            }
        }
        out.push_str(&cells.join("|"));
        out.push('\n');
    }
    out
}

pub fn grid_from_text(text: &str) -> Result<GhdArray> {
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim().is_empty() || l.contains('|'))
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect();
    let side = lines.len();
    if side == 0 {
        return Err(GhdError::MalformedInput("empty grid".into()));
    }
    let mut symbols: Vec<SymbolLabel> = Vec::new();
    let mut grid: Vec<Option<Block>> = Vec::with_capacity(side * side);
    let mut k: Option<usize> = None;
    for (lineno, line) in lines.iter().enumerate() {
        let cells: Vec<&str> = line.split('|').collect();
        if cells.len() != side {
            return Err(GhdError::ParseError {
                line: lineno + 1,
                msg: format!("{} cells in a {}-column grid", cells.len(), side),
            });
        }
        for cell in cells {
            let toks: Vec<&str> = cell.split_whitespace().collect();
            if toks.is_empty() {
                grid.push(None);
                continue;
            }
            match k {
                None => k = Some(toks.len()),
                Some(k0) if k0 != toks.len() => {
                    return Err(GhdError::ParseError {
                        line: lineno + 1,
                        msg: format!("cell of size {} in a k={} grid", toks.len(), k0),
                    })
                }
                _ => {}
            }
            let mut ids = Vec::with_capacity(toks.len());
            for tok in toks {
                let label = SymbolLabel::parse(tok);
                let id = match symbols.iter().position(|l| *l == label) {
                    Some(i) => i as u32,
                    None => {
                        symbols.push(label);
                        (symbols.len() - 1) as u32
                    }
                };
                ids.push(id);
            }
            grid.push(Some(Block::new(ids)?));
        }
    }
    let k = k.unwrap_or(3) as u32;
    GhdArray::from_cells(side, symbols, grid, Params { k, ..Params::default() })
}
