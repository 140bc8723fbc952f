//! Property tests: random relabelings, random mutations, and serialization
//! round trips across the catalog.

use ghd_core::design::{
    apply_relabeling, grids_equal_by_label, verify_ghd, Block, GhdArray,
};
use ghd_core::formats;
use ghd_core::starter::{parse_starter, starter_to_string};
use proptest::prelude::*;
use std::sync::OnceLock;

fn designs() -> &'static [GhdArray] {
    static DESIGNS: OnceLock<Vec<GhdArray>> = OnceLock::new();
    DESIGNS.get_or_init(|| {
        ghd_core::catalog::load_catalog()
            .unwrap()
            .into_iter()
            .map(|e| e.design.expect("no quarantined entries"))
            .collect()
    })
}

fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// A catalog design index plus row/column/symbol permutations of fitting sizes.
fn relabel_case() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>, Vec<usize>)> {
    (0..designs().len()).prop_flat_map(|idx| {
        let d = &designs()[idx];
        (Just(idx), perm(d.side), perm(d.side), perm(d.v()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Row, column, and symbol permutations preserve verification.
    #[test]
    fn relabeling_preserves_verification((idx, rows, cols, syms) in relabel_case()) {
        let d = &designs()[idx];
        let syms: Vec<u32> = syms.into_iter().map(|x| x as u32).collect();
        let relabeled = apply_relabeling(d, &rows, &cols, &syms).unwrap();
        prop_assert!(verify_ghd(&relabeled).ok());
    }

    /// Replacing one symbol of one filled cell always breaks verification:
    /// the altered row now misses the removed symbol.
    #[test]
    fn single_cell_mutation_is_rejected(
        idx in any::<u32>(),
        cell_pick in any::<u32>(),
        member_pick in 0usize..3,
        replacement_pick in any::<u32>(),
    ) {
        let d = &designs()[idx as usize % designs().len()];
        let cells: Vec<_> = d
            .filled_cells()
            .map(|(r, c, b)| (r, c, b.clone()))
            .collect();
        let (r, c, b) = &cells[cell_pick as usize % cells.len()];
        let mut members = b.members().to_vec();
        let old = members[member_pick];
        let replacement = (0..d.v() as u32)
            .cycle()
            .skip(replacement_pick as usize % d.v())
            .find(|x| !members.contains(x))
            .unwrap();
        members[member_pick] = replacement;
        let broken = d.with_cell(*r, *c, Some(Block::new(members).unwrap())).unwrap();
        let report = verify_ghd(&broken);
        prop_assert!(!report.ok(), "mutation {old}->{replacement} at ({r},{c}) accepted");
    }

    /// Text and JSON grid forms round-trip to an equal design.
    #[test]
    fn grid_serialization_roundtrips(idx in any::<u32>()) {
        let d = &designs()[idx as usize % designs().len()];
        let text = formats::grid_to_text(d);
        let back = formats::grid_from_text(&text).unwrap();
        prop_assert!(grids_equal_by_label(d, &back));
        let json = formats::grid_to_json(d);
        let back = formats::grid_from_json(&json).unwrap();
        prop_assert!(grids_equal_by_label(d, &back));
    }
}

/// Serializing a parsed starter yields a canonical form that re-parses to the
/// same structure and is a fixed point of parse + serialize. (Byte equality
/// with the source file is not required: one catalog file interleaves its
/// border blocks, which the serializer groups.)
#[test]
fn starter_files_roundtrip_canonically() {
    for e in ghd_core::catalog::load_catalog().unwrap() {
        let Some(raw) = ghd_core::catalog::raw_file(&e.expected.file) else {
            continue;
        };
        if !e.expected.file.ends_with(".sa") {
            continue;
        }
        let sa = parse_starter(raw).unwrap();
        let canon = starter_to_string(&sa);
        let reparsed = parse_starter(&canon).unwrap();
        assert_eq!(
            starter_to_string(&reparsed),
            canon,
            "{} canonical form unstable",
            e.id
        );
        // The canonical form must describe the same design.
        let expand = |sa: &ghd_core::starter::StarterAdder| match sa {
            ghd_core::starter::StarterAdder::Transitive(t) => {
                ghd_core::starter::expand_transitive(t).unwrap()
            }
            ghd_core::starter::StarterAdder::Intransitive(i) => {
                ghd_core::starter::expand_intransitive(i).unwrap()
            }
        };
        assert!(
            grids_equal_by_label(&expand(&sa), &expand(&reparsed)),
            "{} reparse changes the expansion",
            e.id
        );
    }
}
