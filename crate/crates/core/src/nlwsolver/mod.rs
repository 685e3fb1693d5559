//! Radial nonlinear evolution, the threshold dichotomy classifier and the
//! concentration diagnostics near blow-up.

mod classify;
mod concentration;
mod evolve;

pub use classify::{
    classify_dynamic, classify_static, dynamic_verdict, margins, verdict_from_margins, Budget, ClassificationVerdict,
    DynamicVerdict, Margins, StaticThresholds, StaticVerdict, THRESHOLD_TOL,
};
pub use concentration::{
    concentration_report, modulated_bubble_trajectory, singular_support_scan, ConcentrationReport, ScanOptions,
    CONCENTRATION_FLOOR, TYPE_II_NORM_BOUND,
};
pub use evolve::{evolve, ScatterCriterion, SolverSettings, StepRecord, Termination, Trajectory, CFL_LIMIT};
