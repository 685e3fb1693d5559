//! Exact propagation of the radial free wave equation in a spectral basis,
//! and the exterior-energy diagnostics built on it.

pub mod basis;
pub mod bessel;
mod channels;
mod spectral;

pub use basis::SpectralBasis;
pub use channels::{
    channel_verdict, channel_verdict_with, equipartition_trace, exterior_energy, plateau, ChannelReport, ExteriorProbe,
    DEFAULT_SAMPLES, HORIZON_FRACTION,
};
pub use spectral::{propagate_linear, propagate_linear_with, support_radius, SpectralState, WindowRule};
