//! Profile sequences, expansion residuals and multi-bubble fitting.

mod fit;
mod pythagorean;
mod sequence;

pub use fit::{fit_bubbles, DecompositionResult, FitOptions, FittedBubble};
pub use pythagorean::{
    counterexample_data, counterexample_demo, counterexample_profiles, decays, member_row, pythagorean_check,
    CounterexampleExhibit, CounterexampleOptions, PythagoreanReport, PythagoreanRow, CSV_HEADER,
};
pub use sequence::{
    orthogonality_check, synthesize_sequence, Law, OrthogonalityTable, PairDivergence, ParamSeq, ProfileKind,
    ProfileSpec, SequenceMember,
};
