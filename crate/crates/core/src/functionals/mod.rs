//! Conserved quantities, critical norms and the variational inequalities as
//! executable predicates.

mod energy;
mod grid;
pub mod sampler;
mod suite;
mod variational;

pub use energy::{
    energy, energy_inner, energy_norm_sq, hdot1_inner, l2_inner, snorm_increment, sobolev_constant, sobolev_ratio,
    EnergyReport,
};
pub use grid::{FieldState, GridMap, RadialGrid};
pub use suite::{run_property_suite, LemmaTally, SuiteReport, SuiteRow};
pub use variational::{
    check_all, check_equivalences, check_trapping, equivalence_sides, variational_f, EquivalenceSides, Lemma,
    LemmaOutcome, PredicateReport, Thresholds, Verdict, COERCIVE_BAND,
};
