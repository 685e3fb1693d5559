//! Exterior energy of free waves: the share of energy that leaves along the
//! light cone, forward and backward in time.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::FieldState;
use crate::linwave::spectral::{SpectralState, WindowRule};
use crate::quadrature::gauss_legendre;

/// Default horizon as a fraction of r_max.
pub const HORIZON_FRACTION: f64 = 0.6;
pub const DEFAULT_SAMPLES: usize = 121;

/// Composite trapezoid with fourth-order end corrections on equispaced values.
fn gregory(v: &[f64], h: f64) -> f64 {
    const END: [f64; 4] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    if n < 8 {
        let inner: f64 = v[1..n - 1].iter().sum();
        return h * (inner + 0.5 * (v[0] + v[n - 1]));
    }
    let mut s: f64 = v[4..n - 4].iter().sum();
    for (j, w) in END.iter().enumerate() {
        s += w * (v[j] + v[n - 1 - j]);
    }
    h * s
}

/// omega * int_a^R r^{N-1} (u_r^2 + u_t^2) dr for a spectral state.
pub(crate) fn exterior_integral(spec: &SpectralState, ur: &[f64], ut: &[f64], a: f64) -> f64 {
    let grid = spec.grid();
    let dim = spec.dim();
    let r = grid.nodes();
    let h = grid.spacing().expect("spectral grids are uniform");
    let m = r.len();
    let dens = |i: usize| dim.radial_weight(r[i]) * (ur[i] * ur[i] + ut[i] * ut[i]);
    let a = a.max(0.0);
    if a >= grid.r_max() {
        return 0.0;
    }
    let first = (a / h).ceil() as usize;
    let first = first.min(m - 1);
    let on_grid: Vec<f64> = (first..m).map(dens).collect();
    let mut total = gregory(&on_grid, h);
    let gap = r[first] - a;
    if gap > 1e-14 * h {
        let (x, w) = gauss_legendre(8);
        let mut cell = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let rr = a + 0.5 * gap * (xi + 1.0);
            let (_, dr, dt) = spec.eval_at(rr);
            cell += wi * dim.radial_weight(rr) * (dr * dr + dt * dt);
        }
        total += 0.5 * gap * cell;
    }
    dim.sphere_area() * total
}

/// Evaluates exterior energies of one datum at many times.
pub struct ExteriorProbe {
    spec: SpectralState,
    window: f64,
    support: f64,
    reference: f64,
}

impl ExteriorProbe {
    pub fn new(initial: &FieldState, rule: &WindowRule) -> Result<Self> {
        let spec = SpectralState::from_field(initial)?;
        let (window, support) = rule.window(initial);
        let ur = spec.gradient();
        let ut = spec.basis().synthesize(&spec.gamma);
        let reference = exterior_integral(&spec, &ur, &ut, 0.0);
        if reference <= 0.0 {
            return Err(NlwError::invalid("datum has zero free energy"));
        }
        Ok(ExteriorProbe {
            spec,
            window,
            support,
            reference,
        })
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// Initial free energy on the same quadrature as the exterior integrals.
    pub fn reference_energy(&self) -> f64 {
        self.reference
    }

    fn contaminated(&self, t: f64) -> NlwError {
        NlwError::BoundaryContamination {
            t: t.abs(),
            window: self.window,
            r_max: self.spec.grid().r_max(),
            support: self.support,
        }
    }

    /// Fraction of the initial free energy in {r >= |t|} at time t.
    pub fn fraction(&self, t: f64) -> Result<f64> {
        if !(t.abs() < self.window) && t != 0.0 {
            return Err(self.contaminated(t));
        }
        let s = self.spec.evolve(t);
        let ur = s.gradient();
        let ut = s.basis().synthesize(&s.gamma);
        Ok(exterior_integral(&s, &ur, &ut, t.abs()) / self.reference)
    }

    /// (||grad u(t)||^2, ||u_t(t)||^2).
    pub fn split(&self, t: f64) -> Result<(f64, f64)> {
        if !(t.abs() < self.window) && t != 0.0 {
            return Err(self.contaminated(t));
        }
        Ok(self.spec.evolve(t).energy_split())
    }
}

/// int_{r >= |t|} (|grad u_L|^2 + |d_t u_L|^2) / initial free energy.
pub fn exterior_energy(initial: &FieldState, t: f64) -> Result<f64> {
    ExteriorProbe::new(initial, &WindowRule::default())?.fraction(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub dim: Dimension,
    pub times: Vec<f64>,
    pub fraction_fwd: Vec<f64>,
    pub fraction_bwd: Vec<f64>,
    pub plateau_fwd: f64,
    pub plateau_bwd: f64,
    pub max_asymptotic: f64,
}

/// Median of the last quarter of the samples.
pub fn plateau(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let start = samples.len() - (samples.len() / 4).max(1);
    let mut tail = samples[start..].to_vec();
    tail.sort_by(f64::total_cmp);
    let n = tail.len();
    if n % 2 == 1 {
        tail[n / 2]
    } else {
        0.5 * (tail[n / 2 - 1] + tail[n / 2])
    }
}

impl ChannelReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,fraction_fwd,fraction_bwd\n");
        for i in 0..self.times.len() {
            let _ = writeln!(s, "{:.6},{:.12e},{:.12e}", self.times[i], self.fraction_fwd[i], self.fraction_bwd[i]);
        }
        s
    }

    pub fn summary_line(&self) -> String {
        format!(
            "# {} plateau_fwd={:.9} plateau_bwd={:.9} max_asymptotic={:.9}",
            self.dim, self.plateau_fwd, self.plateau_bwd, self.max_asymptotic
        )
    }

    /// CSV followed by the summary line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = self.to_csv();
        text.push_str(&self.summary_line());
        text.push('\n');
        std::fs::write(path, text).map_err(|e| NlwError::io(path, e))
    }
}

/// Forward and backward exterior fractions on `samples` equispaced times in
/// [0, horizon]. The horizon defaults to 0.6 r_max.
pub fn channel_verdict(initial: &FieldState, horizon: Option<f64>) -> Result<ChannelReport> {
    channel_verdict_with(initial, horizon, DEFAULT_SAMPLES, &WindowRule::default())
}

pub fn channel_verdict_with(
    initial: &FieldState,
    horizon: Option<f64>,
    samples: usize,
    rule: &WindowRule,
) -> Result<ChannelReport> {
    if samples < 2 {
        return Err(NlwError::invalid("channel_verdict needs at least two samples"));
    }
    let probe = ExteriorProbe::new(initial, rule)?;
    let horizon = horizon.unwrap_or(HORIZON_FRACTION * initial.grid.r_max());
    if !(horizon > 0.0) {
        return Err(NlwError::invalid("horizon must be positive"));
    }
    if horizon >= probe.window {
        return Err(probe.contaminated(horizon));
    }
    let times: Vec<f64> = (0..samples).map(|i| horizon * i as f64 / (samples - 1) as f64).collect();
    let mut fwd = Vec::with_capacity(samples);
    let mut bwd = Vec::with_capacity(samples);
    for &t in &times {
        fwd.push(probe.fraction(t)?);
        bwd.push(probe.fraction(-t)?);
    }
    let (pf, pb) = (plateau(&fwd), plateau(&bwd));
    Ok(ChannelReport {
        dim: initial.dim(),
        times,
        fraction_fwd: fwd,
        fraction_bwd: bwd,
        plateau_fwd: pf,
        plateau_bwd: pb,
        max_asymptotic: pf.max(pb),
    })
}

/// (||grad u_L(t)||^2, ||d_t u_L(t)||^2) at each requested time.
pub fn equipartition_trace(initial: &FieldState, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    let probe = ExteriorProbe::new(initial, &WindowRule::default())?;
    times.iter().map(|&t| probe.split(t)).collect()
}
