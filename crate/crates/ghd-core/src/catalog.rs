//! Embedded catalog of explicit designs: starter-adder files and printed
//! grids, each verified on load. Entries that fail verification are kept but
//! quarantined with a diagnostic, so data problems surface as data.

use crate::design::{verify_ghd, verify_star, GhdArray};
use crate::error::{GhdError, Result};
use crate::formats::grid_from_text;
use crate::starter::{
    expand_intransitive, expand_transitive, parse_starter, transitive_infinite_ids,
    validate_intransitive, validate_transitive, StarterAdder,
};
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::BTreeMap;

static FILES: &[(&str, &str)] = &[
    ("e1_i_n10.sa", include_str!("../data/e1_i_n10.sa")),
    ("e1_i_n12.sa", include_str!("../data/e1_i_n12.sa")),
    ("e1_i_n16.sa", include_str!("../data/e1_i_n16.sa")),
    ("e1_i_n18.sa", include_str!("../data/e1_i_n18.sa")),
    ("e1_i_n22.sa", include_str!("../data/e1_i_n22.sa")),
    ("e1_i_n28.sa", include_str!("../data/e1_i_n28.sa")),
    ("e1_i_n30.sa", include_str!("../data/e1_i_n30.sa")),
    ("e1_i_n36.sa", include_str!("../data/e1_i_n36.sa")),
    ("e1_i_n46.sa", include_str!("../data/e1_i_n46.sa")),
    ("e1_t_n14.sa", include_str!("../data/e1_t_n14.sa")),
    ("e1_t_n20.sa", include_str!("../data/e1_t_n20.sa")),
    ("e1_t_n26.sa", include_str!("../data/e1_t_n26.sa")),
    ("e1_t_n32.sa", include_str!("../data/e1_t_n32.sa")),
    ("e1_t_n38.sa", include_str!("../data/e1_t_n38.sa")),
    ("e1_t_n41.sa", include_str!("../data/e1_t_n41.sa")),
    ("e1_t_n44.sa", include_str!("../data/e1_t_n44.sa")),
    ("e2_i_n11.sa", include_str!("../data/e2_i_n11.sa")),
    ("e2_i_n7.sa", include_str!("../data/e2_i_n7.sa")),
    ("e2_i_n9.sa", include_str!("../data/e2_i_n9.sa")),
    ("e2_t_n10.sa", include_str!("../data/e2_t_n10.sa")),
    ("e2_t_n11.sa", include_str!("../data/e2_t_n11.sa")),
    ("e2_t_n12.sa", include_str!("../data/e2_t_n12.sa")),
    ("e2_t_n13.sa", include_str!("../data/e2_t_n13.sa")),
    ("e2_t_n14.sa", include_str!("../data/e2_t_n14.sa")),
    ("e2_t_n15.sa", include_str!("../data/e2_t_n15.sa")),
    ("e2_t_n16.sa", include_str!("../data/e2_t_n16.sa")),
    ("e2_t_n17.sa", include_str!("../data/e2_t_n17.sa")),
    ("e2_t_n18.sa", include_str!("../data/e2_t_n18.sa")),
    ("e2_t_n19.sa", include_str!("../data/e2_t_n19.sa")),
    ("e2_t_n20.sa", include_str!("../data/e2_t_n20.sa")),
    ("e2_t_n21.sa", include_str!("../data/e2_t_n21.sa")),
    ("e2_t_n22.sa", include_str!("../data/e2_t_n22.sa")),
    ("e2_t_n23.sa", include_str!("../data/e2_t_n23.sa")),
    ("e2_t_n24.sa", include_str!("../data/e2_t_n24.sa")),
    ("e2_t_n25.sa", include_str!("../data/e2_t_n25.sa")),
    ("e2_t_n26.sa", include_str!("../data/e2_t_n26.sa")),
    ("e2_t_n27.sa", include_str!("../data/e2_t_n27.sa")),
    ("e2_t_n28.sa", include_str!("../data/e2_t_n28.sa")),
    ("e2_t_n29.sa", include_str!("../data/e2_t_n29.sa")),
    ("e2_t_n31.sa", include_str!("../data/e2_t_n31.sa")),
    ("e2_t_n32.sa", include_str!("../data/e2_t_n32.sa")),
    ("e2_t_n33.sa", include_str!("../data/e2_t_n33.sa")),
    ("e2_t_n34.sa", include_str!("../data/e2_t_n34.sa")),
    ("e2_t_n39.sa", include_str!("../data/e2_t_n39.sa")),
    ("e2_t_n44.sa", include_str!("../data/e2_t_n44.sa")),
    ("e2_t_n8.sa", include_str!("../data/e2_t_n8.sa")),
    ("e2_t_n9.sa", include_str!("../data/e2_t_n9.sa")),
    ("grid_10x24.grid", include_str!("../data/grid_10x24.grid")),
    ("grid_8x18.grid", include_str!("../data/grid_8x18.grid")),
    ("grid_9x21.grid", include_str!("../data/grid_9x21.grid")),
    ("mod2_n37.sa", include_str!("../data/mod2_n37.sa")),
    ("mod5_n24.sa", include_str!("../data/mod5_n24.sa")),
    ("mod5_n34.sa", include_str!("../data/mod5_n34.sa")),
];

static MANIFEST: &str = include_str!("../data/manifest.json");

pub fn raw_file(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(f, _)| *f == name).map(|(_, c)| *c)
}

#[derive(Debug, Clone, Deserialize)]
pub struct SubsquareSpec {
    pub e: usize,
    pub rows: Vec<usize>,
}

/// Expected parameters from the manifest; checked against the payload on load.
#[derive(Debug, Clone, Deserialize)]
pub struct Expected {
    pub file: String,
    pub kind: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub x: Option<usize>,
    pub s: usize,
    pub v: usize,
    #[serde(default)]
    pub star_hole: Option<usize>,
    #[serde(default)]
    pub subsquare: Option<SubsquareSpec>,
    #[serde(default)]
    pub matches: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub expected: Expected,
    pub starter: Option<StarterAdder>,
    /// Expanded (or directly parsed) design; present unless quarantined.
    pub design: Option<GhdArray>,
    /// Ids of the infinite points when the entry is a transitive expansion.
    pub star_hole_ids: Option<Vec<u32>>,
    /// Set when the entry failed verification; the design is then withheld.
    pub quarantine: Option<String>,
}

impl CatalogEntry {
    pub fn ok(&self) -> bool {
        self.quarantine.is_none()
    }
}

fn build_entry(id: &str, expected: Expected) -> CatalogEntry {
    let mut entry = CatalogEntry {
        id: id.to_string(),
        expected,
        starter: None,
        design: None,
        star_hole_ids: None,
        quarantine: None,
    };
    let text = match raw_file(&entry.expected.file) {
        Some(t) => t,
        None => {
            entry.quarantine = Some(format!("data file {} missing", entry.expected.file));
            return entry;
        }
    };
    let outcome = (|| -> Result<(GhdArray, Option<StarterAdder>, Option<Vec<u32>>)> {
        if entry.expected.kind == "grid" {
            let g = grid_from_text(text)?;
            return Ok((g, None, None));
        }
        let sa = parse_starter(text)?;
        let (array, hole) = match &sa {
            StarterAdder::Transitive(t) => {
                let report = validate_transitive(t)?;
                if !report.ok() {
                    return Err(GhdError::InvalidDesign(format!("starter invalid: {report}")));
                }
                (expand_transitive(t)?, Some(transitive_infinite_ids(t)))
            }
            StarterAdder::Intransitive(t) => {
                let report = validate_intransitive(t)?;
                if !report.ok() {
                    return Err(GhdError::InvalidDesign(format!("starter invalid: {report}")));
                }
                (expand_intransitive(t)?, None)
            }
        };
        Ok((array, Some(sa), hole))
    })();
    match outcome {
        Err(e) => entry.quarantine = Some(e.to_string()),
        Ok((array, starter, hole)) => {
            let mut problems = Vec::new();
            if array.side != entry.expected.s || array.v() != entry.expected.v {
                problems.push(format!(
                    "expected GHD({},{}), built GHD({},{})",
                    entry.expected.s,
                    entry.expected.v,
                    array.side,
                    array.v()
                ));
            }
            let report = verify_ghd(&array);
            if !report.ok() {
                problems.push(format!("verification failed: {report}"));
            }
            if let (Some(size), Some(ids)) = (entry.expected.star_hole, &hole) {
                match verify_star(&array, ids) {
                    Ok(true) if ids.len() == size => {}
                    _ => problems.push(format!("star hole of size {size} not confirmed")),
                }
            }
            entry.starter = starter;
            entry.star_hole_ids = hole;
            if problems.is_empty() {
                entry.design = Some(array);
            } else {
                entry.quarantine = Some(problems.join("; "));
            }
        }
    }
    entry
}

/// Load, expand and verify every catalog entry. Parallel across entries;
/// result ordered by id.
pub fn load_catalog() -> Result<Vec<CatalogEntry>> {
    let manifest: BTreeMap<String, Expected> = serde_json::from_str(MANIFEST)?;
    let mut entries: Vec<CatalogEntry> = manifest
        .par_iter()
        .map(|(id, expected)| build_entry(id, expected.clone()))
        .collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(entries)
}

pub fn load_entry(id: &str) -> Result<CatalogEntry> {
    let manifest: BTreeMap<String, Expected> = serde_json::from_str(MANIFEST)?;
    let expected = manifest
        .get(id)
        .ok_or_else(|| GhdError::MalformedInput(format!("no catalog entry `{id}`")))?;
    Ok(build_entry(id, expected.clone()))
}
