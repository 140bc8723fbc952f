//! Shared helpers for the criterion benchmarks.

use ghd_core::design::GhdArray;
use ghd_core::starter::StarterAdder;

/// A mid-sized catalog design (side 35, 99 symbols).
pub fn large_design() -> GhdArray {
    ghd_core::catalog::load_entry("e2/t/n33")
        .expect("catalog entry")
        .design
        .expect("not quarantined")
}

/// A small printed design (side 8, 18 symbols).
pub fn small_design() -> GhdArray {
    ghd_core::catalog::load_entry("grid/8x18")
        .expect("catalog entry")
        .design
        .expect("not quarantined")
}

/// A large transitive starter and a mid-sized intransitive one.
pub fn starters() -> (StarterAdder, StarterAdder) {
    let t = ghd_core::catalog::load_entry("e1/t/n44")
        .expect("catalog entry")
        .starter
        .expect("has starter");
    let i = ghd_core::catalog::load_entry("e2/i/n11")
        .expect("catalog entry")
        .starter
        .expect("has starter");
    (t, i)
}
