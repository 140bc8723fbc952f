//! Constructive toolkit for generalized Howell designs: exact verification,
//! starter-adder expansion, Latin-square ingredients, frame and PBD
//! compositions, and backtracking searches for small ingredients.

pub mod catalog;
pub mod composite;
pub mod design;
pub mod error;
pub mod formats;
pub mod frames;
pub mod latin;
pub mod search;
pub mod starter;

pub use design::{
    apply_relabeling, find_empty_subsquare, find_pairwise_hole, grids_equal_by_label, row_profile,
    to_dcw_code, to_permutation_array, verify_ghd, verify_star, Block, DcwCode, GhdArray, Params,
    Ratio, SymbolLabel, VerificationReport, Violation, ViolationKind,
};
pub use error::{GhdError, Result};
