//! Shift equivalence toolkit for non-negative integer matrices.
//!
//! Matrices stand in for graph correspondences. The crate verifies,
//! constructs, composes and searches for witnesses of elementary strong
//! shift equivalence, strong shift equivalence, shift equivalence and
//! (permutation-level) strong Morita equivalence, and computes invariants
//! that equivalent matrices must share.

pub mod certificates;
pub mod equivalences;
pub mod invariants;
pub mod matrix;
mod search;

pub use certificates::{
    parse_certificate, parse_matrix, render_report, write_certificate, write_matrix, CachedVerdict,
    Certificate, FormatError, Kind, WitnessPayload, SCHEMA_VERSION,
};
pub use equivalences::{
    chain_to_se, compose_esse_via_invertible, compose_se, esse_to_sme_if_invertible, increase_lag,
    search_esse, search_se, search_sme, sme_to_esse, verify_esse, verify_se, verify_sme,
    verify_sse_chain, EquivError, EsseWitness, Rejection, Relation, SeWitness, SearchBounds,
    SmeWitness, SseChain, Verdict, DEFAULT_BUDGET, MAX_SME_SEARCH_SIZE,
};
pub use invariants::{
    bowen_franks, char_poly, cokernel, compare_dilations, compare_reports, dilation_invariants,
    k_theory, nonzero_char_poly, report_differences, smith_normal_form, AbelianGroup, Comparison,
    IntMatrix, IntPoly, InvariantError, InvariantKind, InvariantReport, KTheory, Obstruction,
    SnfResult,
};
pub use matrix::{
    bipartite_inflation, classify, col_support, direct_sum, inflation_power, power, tensor,
    CorrMatrix, InflationSquare, Label, MatrixError, StructureFlags,
};

/// Version recorded in cached verdicts.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
