//! Recipe files: a small DAG of named construction steps, executed in order.
//!
//! ```json
//! {
//!   "steps": [
//!     {"name": "f", "op": "frame_from_mols_imols", "h": 7, "m": 5,
//!      "v_parts": [2, 2, 2, 1]},
//!     {"name": "out", "op": "basic_frame_construction", "frame": "f",
//!      "e": 2, "u": 0, "ingredients": [{"catalog": "e2/i/n7"}]}
//!   ],
//!   "output": "out"
//! }
//! ```
//!
//! A file holding a single step object (as in
//! `{"op": "stinson_rtd", "n": 8, "g": 8, "u": [...]}`) is also accepted;
//! its result is the output.

use ghd_core::composite::{standard_power_supplier, stinson_rtd, NormalizedStar};
use ghd_core::design::{find_pairwise_hole, GhdArray};
use ghd_core::error::{GhdError, Result};
use ghd_core::frames::{basic_frame_construction, frame_from_mols_imols, GhfArray};
use ghd_core::latin::{ghd_mols_product, mols_from_field};
use ghd_core::search::{search_imols, SearchBudget};
use ghd_core::starter::{expand_intransitive, expand_transitive, StarterAdder};
use serde::Deserialize;
use std::collections::HashMap;

#[derive(Deserialize)]
#[serde(untagged)]
pub enum Recipe {
    Dag { steps: Vec<Step>, output: String },
    Single(Step),
}

/// Where an ingredient design comes from: the catalog, a file, or a step.
#[derive(Deserialize, Clone)]
#[serde(untagged)]
pub enum Source {
    Catalog { catalog: String },
    File { file: String },
    Step { step: String },
}

#[derive(Deserialize)]
#[serde(tag = "op")]
pub enum Step {
    /// Expand a catalog starter (or load any design source).
    #[serde(rename = "expand")]
    Expand {
        name: Option<String>,
        #[serde(flatten)]
        input: Source,
    },
    #[serde(rename = "frame_from_mols_imols")]
    Frame {
        name: Option<String>,
        h: usize,
        m: usize,
        v_parts: Vec<usize>,
    },
    #[serde(rename = "basic_frame_construction")]
    FillFrame {
        name: Option<String>,
        frame: String,
        e: usize,
        u: usize,
        /// One entry per frame group; a single entry is reused for all.
        ingredients: Vec<Source>,
    },
    #[serde(rename = "stinson_rtd")]
    StinsonRtd {
        name: Option<String>,
        n: usize,
        g: usize,
        u: Vec<usize>,
        /// Extra ingredients keyed "side/hole", e.g. {"8/2": {"catalog": "grid/8x18"}};
        /// anything absent falls back to the built-in supplier.
        #[serde(default)]
        ingredients: HashMap<String, Source>,
    },
    #[serde(rename = "product")]
    Product {
        name: Option<String>,
        input: Source,
        mols_order: u32,
    },
    /// Re-verify a previous step (no new artifact).
    #[serde(rename = "verify")]
    Verify { name: Option<String>, input: Source },
}

impl Step {
    fn name(&self) -> Option<&str> {
        match self {
            Step::Expand { name, .. }
            | Step::Frame { name, .. }
            | Step::FillFrame { name, .. }
            | Step::StinsonRtd { name, .. }
            | Step::Product { name, .. }
            | Step::Verify { name, .. } => name.as_deref(),
        }
    }
}

#[derive(Default)]
struct Env {
    designs: HashMap<String, GhdArray>,
    frames: HashMap<String, GhfArray>,
}

fn expand_any(sa: &StarterAdder) -> Result<GhdArray> {
    match sa {
        StarterAdder::Transitive(t) => expand_transitive(t),
        StarterAdder::Intransitive(i) => expand_intransitive(i),
    }
}

fn resolve(env: &Env, src: &Source) -> Result<GhdArray> {
    match src {
        Source::Catalog { catalog } => {
            let e = ghd_core::catalog::load_entry(catalog)?;
            e.design.ok_or_else(|| {
                GhdError::MissingIngredient(format!(
                    "catalog entry {catalog} is quarantined: {}",
                    e.quarantine.unwrap_or_default()
                ))
            })
        }
        Source::File { file } => {
            let text = std::fs::read_to_string(file)?;
            if file.ends_with(".sa") {
                expand_any(&ghd_core::starter::parse_starter(&text)?)
            } else if file.ends_with(".json") {
                ghd_core::formats::grid_from_json(&text)
            } else {
                ghd_core::formats::grid_from_text(&text)
            }
        }
        Source::Step { step } => env.designs.get(step).cloned().ok_or_else(|| {
            GhdError::MissingIngredient(format!("step {step:?} has no design result"))
        }),
    }
}

fn imols_supplier(y: usize, a: usize) -> Option<ghd_core::latin::ImolsSet> {
    search_imols(y, a, 3, &SearchBudget::default()).0.witness()
}

/// A step yields either a design or (for frame steps) nothing; frames are
/// stored in the environment for later fill steps.
fn run_step(env: &mut Env, step: &Step) -> Result<Option<GhdArray>> {
    match step {
        Step::Expand { input, .. } | Step::Verify { input, .. } => {
            let d = resolve(env, input)?;
            let report = ghd_core::design::verify_ghd(&d);
            if !report.ok() {
                return Err(GhdError::InvalidDesign(format!("step input: {report}")));
            }
            Ok(Some(d))
        }
        Step::Frame { name, h, m, v_parts } => {
            let name = name
                .as_ref()
                .ok_or_else(|| GhdError::MalformedInput("frame steps need a name".into()))?;
            let mols = mols_from_field(*m as u32, 4)?;
            let frame = frame_from_mols_imols(*h, *m, v_parts, &mols, imols_supplier)?;
            env.frames.insert(name.clone(), frame);
            Ok(None)
        }
        Step::FillFrame { frame, e, u, ingredients, .. } => {
            let f = env
                .frames
                .get(frame)
                .ok_or_else(|| GhdError::MissingIngredient(format!("no frame named {frame:?}")))?;
            let groups = f.groups.len();
            let mut resolved = Vec::with_capacity(groups);
            if ingredients.len() == 1 {
                let d = resolve(env, &ingredients[0])?;
                resolved = vec![d; groups];
            } else {
                for src in ingredients {
                    resolved.push(resolve(env, src)?);
                }
            }
            basic_frame_construction(f, *e, *u, &resolved).map(Some)
        }
        Step::StinsonRtd { n, g, u, ingredients, .. } => {
            let mut extra: HashMap<(usize, usize), NormalizedStar> = HashMap::new();
            for (key, src) in ingredients {
                let (side, hole) = key
                    .split_once('/')
                    .and_then(|(a, b)| Some((a.parse().ok()?, b.parse::<usize>().ok()?)))
                    .ok_or_else(|| {
                        GhdError::MalformedInput(format!(
                            "ingredient key {key:?} is not \"side/hole\""
                        ))
                    })?;
                let d = resolve(&Env::default(), src)?;
                let h = find_pairwise_hole(&d, hole).ok_or_else(|| {
                    GhdError::MissingIngredient(format!(
                        "ingredient {key} has no pairwise hole of size {hole}"
                    ))
                })?;
                extra.insert((side, hole), ghd_core::composite::normalize_star(&d, &h, h[0])?);
            }
            let mut fallback = standard_power_supplier();
            let (out, _hole) = stinson_rtd(*n, *g, u, |size, u_b| {
                extra.get(&(size, u_b + 1)).cloned().or_else(|| fallback(size, u_b))
            })?;
            Ok(Some(out))
        }
        Step::Product { input, mols_order, .. } => {
            let d = resolve(env, input)?;
            let mols = mols_from_field(*mols_order, 3)?;
            ghd_mols_product(&d, &mols).map(Some)
        }
    }
}

pub fn run(recipe: &Recipe) -> Result<GhdArray> {
    let mut env = Env::default();
    match recipe {
        Recipe::Single(step) => run_step(&mut env, step)?.ok_or_else(|| {
            GhdError::MalformedInput("a frame step cannot be the recipe output".into())
        }),
        Recipe::Dag { steps, output } => {
            for step in steps {
                if let Some(d) = run_step(&mut env, step)? {
                    if let Some(name) = step.name() {
                        env.designs.insert(name.to_string(), d);
                    }
                }
            }
            env.designs.remove(output).ok_or_else(|| {
                GhdError::MissingIngredient(format!("no step produced output {output:?}"))
            })
        }
    }
}
