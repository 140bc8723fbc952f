//! `ghd` — command-line front end for the GHD toolkit.
//!
//! Exit codes: 0 all checks pass, 1 a verification or build failed,
//! 2 usage error.

mod recipe;

use clap::{Args, Parser, Subcommand};
use ghd_core::catalog;
use ghd_core::design::{
    find_empty_subsquare, find_pairwise_hole, grids_equal_by_label, to_dcw_code,
    to_permutation_array, verify_ghd, verify_star, GhdArray,
};
use ghd_core::formats;
use ghd_core::search::{
    exhaustive_ghd, search_imols, search_intransitive_starter, search_transitive_starter,
    SearchBudget, SearchOutcome,
};
use ghd_core::starter::{
    expand_intransitive, expand_transitive, parse_starter, starter_to_string, StarterAdder,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "ghd", version, about = "Generalized Howell design toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a design file (grid text, grid JSON, or starter file).
    Verify {
        /// Input file; `.sa` inputs are expanded first.
        file: PathBuf,
        /// Pairwise-hole check: "auto" (size v − 2s), "none", or comma ids.
        #[arg(long, default_value = "auto")]
        star: String,
        /// Also require an empty e×e subsquare of this size.
        #[arg(long)]
        subsquare: Option<usize>,
    },
    /// Expand a starter–adder file into a full design.
    Expand {
        file: PathBuf,
        /// Compare the expansion cell-for-cell against this grid file.
        #[arg(long)]
        check_against: Option<PathBuf>,
        /// Write the expanded grid here (text format, or JSON for .json).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a recipe file and verify the result.
    Build {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Backtracking searches for small ingredients.
    Search {
        #[command(subcommand)]
        what: SearchCmd,
    },
    /// Inspect the built-in catalog.
    Catalog {
        #[command(subcommand)]
        what: CatalogCmd,
    },
    /// Convert a design to another representation.
    Convert {
        file: PathBuf,
        /// Target: pa (permutation array), dcw (codewords), grid, json.
        #[arg(long)]
        to: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BudgetArgs {
    /// Node limit for the backtracking search.
    #[arg(long, default_value_t = 20_000_000)]
    nodes: u64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 60)]
    wall_secs: u64,
    /// Worker threads (the result is independent of this).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            node_limit: self.nodes,
            wall_limit: Duration::from_secs(self.wall_secs),
            threads: self.threads,
            seed_order: 0,
        }
    }
}

#[derive(Subcommand)]
enum SearchCmd {
    /// Search for a starter–adder of the given kind.
    Starter {
        /// "transitive" or "intransitive".
        #[arg(long)]
        kind: String,
        #[arg(short)]
        n: usize,
        #[arg(short)]
        x: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Search for 3 incomplete MOLS of order y with hole a.
    Imols {
        #[arg(short)]
        y: usize,
        #[arg(short)]
        a: usize,
        #[arg(short, default_value_t = 3)]
        t: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Exhaustive search for a GHD(s,v), s ≤ 6.
    Exhaustive {
        #[arg(short)]
        s: usize,
        #[arg(short)]
        v: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// One line per entry.
    List,
    /// Print one entry's expanded grid.
    Show { id: String },
    /// Re-verify every entry.
    CheckAll,
}

/// Failures: Usage → exit 2, Check → exit 1.
enum Failure {
    Usage(String),
    Check(String),
}

type CmdResult = std::result::Result<(), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn check<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Check(e.to_string())
}

fn load_design(path: &Path) -> std::result::Result<GhdArray, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "sa" => {
            let sa = parse_starter(&text).map_err(usage)?;
            expand_any(&sa).map_err(check)
        }
        "json" => formats::grid_from_json(&text).map_err(usage),
        _ => formats::grid_from_text(&text).map_err(usage),
    }
}

fn expand_any(sa: &StarterAdder) -> ghd_core::Result<GhdArray> {
    match sa {
        StarterAdder::Transitive(t) => expand_transitive(t),
        StarterAdder::Intransitive(i) => expand_intransitive(i),
    }
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn serialize_design(d: &GhdArray, path: &Option<PathBuf>) -> String {
    let json = path
        .as_ref()
        .and_then(|p| p.extension())
        .and_then(|e| e.to_str())
        == Some("json");
    if json {
        formats::grid_to_json(d)
    } else {
        formats::grid_to_text(d)
    }
}

fn cmd_verify(file: &Path, star: &str, subsquare: Option<usize>) -> CmdResult {
    let d = load_design(file)?;
    let report = verify_ghd(&d);
    if !report.ok() {
        return Err(check(format!("verification failed:\n{report}")));
    }
    println!("GHD({},{}) verified", d.side, d.v());
    match star {
        "none" => {}
        "auto" => {
            let expected = d.v() as i64 - 2 * d.side as i64;
            if expected > 0 {
                match find_pairwise_hole(&d, expected as usize) {
                    Some(hole) => println!("pairwise hole of size {} found", hole.len()),
                    None => {
                        return Err(check(format!(
                            "no pairwise hole of size {expected} found"
                        )))
                    }
                }
            } else {
                println!("no pairwise hole expected (v = 2s)");
            }
        }
        ids => {
            let hole: Vec<u32> = ids
                .split(',')
                .map(|p| p.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| usage(format!("bad --star value: {e}")))?;
            if !verify_star(&d, &hole).map_err(usage)? {
                return Err(check("the given symbols are not a pairwise hole"));
            }
            println!("pairwise hole of size {} confirmed", hole.len());
        }
    }
    if let Some(e) = subsquare {
        match find_empty_subsquare(&d, e) {
            Some((rows, cols)) => println!("empty {e}x{e} subsquare at rows {rows:?}, cols {cols:?}"),
            None => return Err(check(format!("no empty {e}x{e} subsquare"))),
        }
    }
    Ok(())
}

fn cmd_expand(file: &Path, check_against: &Option<PathBuf>, output: &Option<PathBuf>) -> CmdResult {
    let text = std::fs::read_to_string(file)
        .map_err(|e| usage(format!("cannot read {}: {e}", file.display())))?;
    let sa = parse_starter(&text).map_err(usage)?;
    let d = expand_any(&sa).map_err(check)?;
    let report = verify_ghd(&d);
    if !report.ok() {
        return Err(check(format!("expansion does not verify:\n{report}")));
    }
    println!("expanded to verified GHD({},{})", d.side, d.v());
    if let Some(reference) = check_against {
        let r = load_design(reference)?;
        if !grids_equal_by_label(&d, &r) {
            return Err(check(format!(
                "expansion differs from {}",
                reference.display()
            )));
        }
        println!("matches {} cell-for-cell", reference.display());
    }
    if output.is_some() {
        write_or_print(output, &serialize_design(&d, output))?;
    }
    Ok(())
}

fn cmd_build(recipe_path: &Path, output: &Option<PathBuf>) -> CmdResult {
    let text = std::fs::read_to_string(recipe_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", recipe_path.display())))?;
    let recipe: recipe::Recipe =
        serde_json::from_str(&text).map_err(|e| usage(format!("bad recipe: {e}")))?;
    let d = recipe::run(&recipe).map_err(check)?;
    let report = verify_ghd(&d);
    if !report.ok() {
        return Err(check(format!("built design does not verify:\n{report}")));
    }
    println!("built verified GHD({},{})", d.side, d.v());
    if output.is_some() {
        write_or_print(output, &serialize_design(&d, output))?;
    }
    Ok(())
}

fn cmd_search(what: &SearchCmd) -> CmdResult {
    match what {
        SearchCmd::Starter { kind, n, x, budget } => {
            let budget = budget.budget();
            let outcome = match kind.as_str() {
                "transitive" => {
                    let (o, log) = search_transitive_starter(*n, *x, &budget);
                    println!("nodes: {}", log.nodes);
                    o.witness().map(StarterAdder::Transitive)
                }
                "intransitive" => {
                    let (o, log) = search_intransitive_starter(*n, *x, &budget);
                    println!("nodes: {}", log.nodes);
                    o.witness().map(StarterAdder::Intransitive)
                }
                other => return Err(usage(format!("unknown starter kind {other:?}"))),
            };
            match outcome {
                Some(sa) => {
                    println!("{}", starter_to_string(&sa));
                    Ok(())
                }
                None => Err(check("no starter found within the budget")),
            }
        }
        SearchCmd::Imols { y, a, t, budget } => {
            let (o, log) = search_imols(*y, *a, *t, &budget.budget());
            println!("nodes: {}", log.nodes);
            match o {
                SearchOutcome::Exists(im) => {
                    println!("{}", ghd_core::latin::imols_to_json(&im).map_err(check)?);
                    Ok(())
                }
                SearchOutcome::Empty => {
                    println!("proved: no such set exists");
                    Ok(())
                }
                SearchOutcome::Unknown => Err(check("inconclusive within the budget")),
            }
        }
        SearchCmd::Exhaustive { s, v, budget } => {
            let (o, log) = exhaustive_ghd(*s, *v, &budget.budget());
            println!("nodes: {}", log.nodes);
            match o {
                SearchOutcome::Exists(d) => {
                    println!("{}", formats::grid_to_text(&d));
                    Ok(())
                }
                SearchOutcome::Empty => {
                    println!("proved: no GHD({s},{v}) exists");
                    Ok(())
                }
                SearchOutcome::Unknown => Err(check("inconclusive within the budget")),
            }
        }
    }
}

fn cmd_catalog(what: &CatalogCmd) -> CmdResult {
    match what {
        CatalogCmd::List => {
            let entries = catalog::load_catalog().map_err(check)?;
            for e in entries {
                let status = if e.ok() { "ok" } else { "QUARANTINED" };
                println!(
                    "{:12} GHD({},{}) {}",
                    e.id, e.expected.s, e.expected.v, status
                );
            }
            Ok(())
        }
        CatalogCmd::Show { id } => {
            let e = catalog::load_entry(id).map_err(usage)?;
            match e.design {
                Some(d) => {
                    println!("{}", formats::grid_to_text(&d));
                    Ok(())
                }
                None => Err(check(format!(
                    "entry {id} is quarantined: {}",
                    e.quarantine.unwrap_or_default()
                ))),
            }
        }
        CatalogCmd::CheckAll => {
            let entries = catalog::load_catalog().map_err(check)?;
            let bad: Vec<&str> = entries
                .iter()
                .filter(|e| !e.ok())
                .map(|e| e.id.as_str())
                .collect();
            println!("{} entries checked", entries.len());
            if bad.is_empty() {
                Ok(())
            } else {
                Err(check(format!("quarantined entries: {bad:?}")))
            }
        }
    }
}

fn cmd_convert(file: &Path, to: &str, output: &Option<PathBuf>) -> CmdResult {
    let d = load_design(file)?;
    let content = match to {
        "grid" => formats::grid_to_text(&d),
        "json" => formats::grid_to_json(&d),
        "pa" => {
            let pa = to_permutation_array(&d).map_err(check)?;
            serde_json::to_string_pretty(&pa).expect("serializable")
        }
        "dcw" => {
            let code = to_dcw_code(&d).map_err(check)?;
            serde_json::to_string_pretty(&serde_json::json!({
                "bit_len": code.bit_len,
                "min_distance": code.min_distance(),
                "codewords": code.codewords,
            }))
            .expect("serializable")
        }
        other => return Err(usage(format!("unknown conversion target {other:?}"))),
    };
    write_or_print(output, &content)
}

fn main() -> ExitCode {
    // Die quietly when a pipe reader (e.g. `head`) goes away.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { file, star, subsquare } => cmd_verify(file, star, *subsquare),
        Command::Expand { file, check_against, output } => cmd_expand(file, check_against, output),
        Command::Build { recipe, output } => cmd_build(recipe, output),
        Command::Search { what } => cmd_search(what),
        Command::Catalog { what } => cmd_catalog(what),
        Command::Convert { file, to, output } => cmd_convert(file, to, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
