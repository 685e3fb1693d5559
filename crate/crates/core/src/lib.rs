//! Numerical laboratory for the focusing energy-critical wave equation
//! u_tt - Δu = |u|^{4/(N-2)} u in radial symmetry, N ∈ {3, 4, 5}.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dimension;
pub mod error;
pub mod fixtures;
pub mod functionals;
pub mod groundstate;
pub mod harness;
pub mod linwave;
pub mod nlwsolver;
pub mod profiles;
pub mod quadrature;

pub use dimension::Dimension;
pub use error::{NlwError, Result};
