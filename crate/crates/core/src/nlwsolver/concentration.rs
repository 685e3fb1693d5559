//! Light-cone energy integrals near a blow-up time and the singular-point scan.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::{FieldState, RadialGrid};
use crate::groundstate::{w, w_prime};
use crate::nlwsolver::evolve::{Termination, Trajectory};

/// Norm growth (relative to the first sample) still counted as bounded.
pub const TYPE_II_NORM_BOUND: f64 = 3.0;
/// The cone must keep this share of the A-threshold for the data to count as concentrating.
pub const CONCENTRATION_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub dim: Dimension,
    pub t_est: f64,
    pub times: Vec<f64>,
    /// int_{r <= T - t} |grad u|^2 + |u_t|^2
    pub a: Vec<f64>,
    /// int_{r <= T - t} |grad u|^2 + (N-2)/2 |u_t|^2
    pub b: Vec<f64>,
    pub threshold_a: f64,
    pub threshold_b: f64,
    /// Minimum of A over the last quarter of the samples.
    pub liminf_a: f64,
    /// Maximum of B over the last quarter of the samples.
    pub limsup_b: f64,
    /// H^1 x L^2 norm stayed within TYPE_II_NORM_BOUND of its first value.
    pub type_ii_like: bool,
    /// The cone still holds a nontrivial share of energy at the last sample.
    pub concentrating: bool,
    pub precondition_failed: bool,
}

impl ConcentrationReport {
    pub fn a_bound_holds(&self, slack: f64) -> bool {
        self.liminf_a >= self.threshold_a - slack
    }

    pub fn b_bound_holds(&self, slack: f64) -> bool {
        self.limsup_b >= self.threshold_b - slack
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("t,cone_radius,a,b\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                s,
                "{:.12e},{:.12e},{:.12e},{:.12e}",
                self.times[i],
                self.t_est - self.times[i],
                self.a[i],
                self.b[i]
            );
        }
        s
    }
}

fn densities(state: &FieldState) -> (Vec<f64>, Vec<f64>) {
    let du = state.grid.gradient(&state.u);
    let g: Vec<f64> = du.iter().map(|d| d * d).collect();
    let k: Vec<f64> = state.ut.iter().map(|v| v * v).collect();
    (g, k)
}

fn full_norm_sq(state: &FieldState) -> f64 {
    let (g, k) = densities(state);
    state.grid.integrate(&g) + state.grid.integrate(&k)
}

/// A(t), B(t) on the backward light cone from (t_est, 0).
pub fn concentration_report(traj: &Trajectory, grad_sq_w: f64) -> Result<ConcentrationReport> {
    let t_est = match traj.termination {
        Termination::BlowUpDetected { t_est } => t_est,
        other => {
            return Err(NlwError::invalid(format!(
                "concentration report needs a blow-up trajectory, got {other:?}"
            )))
        }
    };
    let samples: Vec<&FieldState> = traj.states.iter().filter(|s| s.time < t_est).collect();
    if samples.len() < 2 {
        return Err(NlwError::invalid("need at least two states before the blow-up time"));
    }
    let dim = samples[0].dim();
    let half = 0.5 * (dim.nf() - 2.0);
    let mut times = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let norm0 = full_norm_sq(samples[0]).sqrt();
    let mut norm_max = 0.0f64;
    for s in &samples {
        let (g, k) = densities(s);
        let radius = t_est - s.time;
        let gi = s.grid.integrate_range(&g, 0.0, radius);
        let ki = s.grid.integrate_range(&k, 0.0, radius);
        times.push(s.time);
        a.push(gi + ki);
        b.push(gi + half * ki);
        norm_max = norm_max.max((s.grid.integrate(&g) + s.grid.integrate(&k)).sqrt());
    }
    let start = times.len() - (times.len() / 4).max(1);
    let liminf_a = a[start..].iter().copied().fold(f64::INFINITY, f64::min);
    let limsup_b = b[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold_a = 2.0 / dim.nf() * grad_sq_w;
    let type_ii_like = norm0 > 0.0 && norm_max <= TYPE_II_NORM_BOUND * norm0;
    let concentrating = *a.last().expect("nonempty") >= CONCENTRATION_FLOOR * threshold_a;
    Ok(ConcentrationReport {
        dim,
        t_est,
        times,
        a,
        b,
        threshold_a,
        threshold_b: grad_sq_w,
        liminf_a,
        limsup_b,
        type_ii_like,
        concentrating,
        precondition_failed: !(type_ii_like && concentrating),
    })
}

/// Trajectory u(t) = lambda(t)^{-(N-2)/2} W(r / lambda(t)) with its exact time
/// derivative, ending in a declared blow-up at t_est. `scale` returns
/// (lambda, lambda') at time t.
pub fn modulated_bubble_trajectory<F>(grid: &Arc<RadialGrid>, times: &[f64], t_est: f64, scale: F) -> Result<Trajectory>
where
    F: Fn(f64) -> (f64, f64),
{
    let dim = grid.dim();
    let a = dim.scaling_exponent();
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let (lam, dlam) = scale(t);
        if !(lam > 0.0) {
            return Err(NlwError::invalid(format!("scale must be positive, got {lam} at t = {t}")));
        }
        let amp = lam.powf(-a);
        let mut u = Vec::with_capacity(grid.len());
        let mut ut = Vec::with_capacity(grid.len());
        for &r in grid.nodes() {
            let y = r / lam;
            u.push(amp * w(y, dim));
            // d/dt of lam^{-a} W(r/lam) = -(lam'/lam) lam^{-a} (a W + y W')
            ut.push(-dlam / lam * amp * (a * w(y, dim) + y * w_prime(y, dim)));
        }
        let mut s = FieldState::new(grid.clone(), u, ut, t)?;
        s.time = t;
        states.push(s);
    }
    Ok(Trajectory {
        states,
        dt_history: Vec::new(),
        records: Vec::new(),
        termination: Termination::BlowUpDetected { t_est },
        steps: times.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOptions {
    /// Candidate radii; empty means 0 plus an even sweep of the grid.
    pub candidates: Vec<f64>,
    /// Shrinking ball radii.
    pub radii: Vec<f64>,
    pub epsilon: f64,
    /// Share of the stored states (from the end) treated as late times.
    pub late_fraction: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            candidates: Vec::new(),
            radii: vec![0.4, 0.2, 0.1, 0.05],
            epsilon: 1.0,
            late_fraction: 0.25,
        }
    }
}

/// Late-time sup of the local energy around r0 for one ball radius.
fn local_energy(state: &FieldState, r0: f64, radius: f64) -> f64 {
    let grid = &state.grid;
    let du = grid.gradient(&state.u);
    let r = grid.nodes();
    let dens: Vec<f64> = (0..grid.len())
        .map(|i| {
            let mut d = du[i] * du[i] + state.ut[i] * state.ut[i];
            if r0 == 0.0 && r[i] > 0.0 {
                d += (state.u[i] / r[i]).powi(2);
            }
            d
        })
        .collect();
    grid.integrate_range(&dens, (r0 - radius).max(0.0), r0 + radius)
}

/// Radii where the late-time local energy stays above epsilon for every
/// ball radius. Adjacent flagged candidates are merged into the one carrying
/// the most energy at the smallest radius.
pub fn singular_support_scan(traj: &Trajectory, opts: &ScanOptions) -> Vec<f64> {
    if traj.states.is_empty() || opts.radii.is_empty() {
        return Vec::new();
    }
    let grid = &traj.states[0].grid;
    let smallest = opts.radii.iter().copied().fold(f64::INFINITY, f64::min);
    let candidates: Vec<f64> = if opts.candidates.is_empty() {
        let step = 0.5 * smallest;
        let n = ((0.5 * grid.r_max()) / step).floor() as usize;
        (0..=n).map(|i| i as f64 * step).collect()
    } else {
        opts.candidates.clone()
    };
    let n_late = ((traj.states.len() as f64 * opts.late_fraction).ceil() as usize).clamp(1, traj.states.len());
    let late = &traj.states[traj.states.len() - n_late..];

    let mut flagged: Vec<(f64, f64)> = Vec::new();
    for &r0 in &candidates {
        let mut worst = f64::INFINITY;
        let mut at_smallest = 0.0;
        for &radius in &opts.radii {
            let sup = late.iter().map(|s| local_energy(s, r0, radius)).fold(0.0, f64::max);
            worst = worst.min(sup);
            if radius == smallest {
                at_smallest = sup;
            }
        }
        if worst > opts.epsilon {
            flagged.push((r0, at_smallest));
        }
    }
    let gap = smallest * 2.0 + 1e-12;
    let mut out = Vec::new();
    let mut i = 0;
    while i < flagged.len() {
        let mut j = i;
        let mut best = flagged[i];
        while j + 1 < flagged.len() && flagged[j + 1].0 - flagged[j].0 <= gap {
            j += 1;
            if flagged[j].1 > best.1 {
                best = flagged[j];
            }
        }
        out.push(best.0);
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_blowup_trajectory_is_rejected() {
        let grid = RadialGrid::uniform(Dimension::FIVE, 5.0, 64).unwrap().into_shared();
        let traj = Trajectory {
            states: vec![FieldState::zeros(grid.clone()), FieldState::zeros(grid)],
            dt_history: vec![],
            records: vec![],
            termination: Termination::HorizonReached,
            steps: 0,
        };
        assert!(concentration_report(&traj, 1.0).is_err());
    }

    #[test]
    fn modulated_velocity_matches_difference_quotient() {
        let grid = RadialGrid::uniform(Dimension::FIVE, 5.0, 101).unwrap().into_shared();
        let lam = |t: f64| ((1.0 - t).powf(1.5), -1.5 * (1.0 - t).sqrt());
        let h = 1e-6;
        let traj = modulated_bubble_trajectory(&grid, &[0.5 - h, 0.5, 0.5 + h], 1.0, lam).unwrap();
        for i in 0..101 {
            let fd = (traj.states[2].u[i] - traj.states[0].u[i]) / (2.0 * h);
            assert!((fd - traj.states[1].ut[i]).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
