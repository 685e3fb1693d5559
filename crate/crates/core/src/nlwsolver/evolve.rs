use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{NlwError, Result};
use crate::functionals::{FieldState, RadialGrid};
use crate::linwave::{SpectralBasis, SpectralState, WindowRule};

/// Largest admissible dt / h.
pub const CFL_LIMIT: f64 = 0.5;

/// Early exit once the solution has visibly dispersed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterCriterion {
    /// Local energy is measured in r <= radius.
    pub radius: f64,
    /// Threshold for local free energy / initial free energy.
    pub fraction: f64,
}

impl Default for ScatterCriterion {
    fn default() -> Self {
        ScatterCriterion {
            radius: 5.0,
            fraction: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// dt = dt_factor * h.
    pub dt_factor: f64,
    pub horizon: f64,
    pub max_steps: usize,
    pub max_refinements: u32,
    pub drift_bound: f64,
    /// Norm growth (relative to the initial H^1 x L^2 norm) counted as explosion.
    pub blowup_norm_factor: f64,
    /// Time between stored states.
    pub save_interval: f64,
    pub window_margin: f64,
    pub support_tol: f64,
    pub scatter: Option<ScatterCriterion>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            dt_factor: 0.25,
            horizon: 30.0,
            max_steps: 2_000_000,
            max_refinements: 12,
            drift_bound: 1e-3,
            blowup_norm_factor: 10.0,
            save_interval: 0.25,
            window_margin: 2.0,
            support_tol: 1e-2,
            scatter: None,
        }
    }
}

impl SolverSettings {
    pub fn window_rule(&self) -> WindowRule {
        WindowRule {
            margin: self.window_margin,
            support_tol: self.support_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| NlwError::Config {
            path: path.into(),
            message,
        };
        if !(self.dt_factor > 0.0 && self.dt_factor <= CFL_LIMIT) {
            return Err(bad("solver.dt_factor", format!("must lie in (0, {CFL_LIMIT}], got {}", self.dt_factor)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(bad("solver.horizon", format!("must be positive, got {}", self.horizon)));
        }
        if self.max_steps == 0 {
            return Err(bad("solver.max_steps", "must be positive".into()));
        }
        if self.max_refinements > 40 {
            return Err(bad("solver.max_refinements", format!("at most 40, got {}", self.max_refinements)));
        }
        if !(self.drift_bound > 0.0) {
            return Err(bad("solver.drift_bound", format!("must be positive, got {}", self.drift_bound)));
        }
        if !(self.blowup_norm_factor > 1.0) {
            return Err(bad(
                "solver.blowup_norm_factor",
                format!("must exceed 1, got {}", self.blowup_norm_factor),
            ));
        }
        if !(self.save_interval > 0.0) {
            return Err(bad("solver.save_interval", format!("must be positive, got {}", self.save_interval)));
        }
        if !(self.window_margin >= 0.0) {
            return Err(bad("solver.window_margin", format!("must be nonnegative, got {}", self.window_margin)));
        }
        if !(self.support_tol > 0.0 && self.support_tol < 1.0) {
            return Err(bad("solver.support_tol", format!("must lie in (0, 1), got {}", self.support_tol)));
        }
        if let Some(s) = &self.scatter {
            if !(s.radius > 0.0 && s.fraction > 0.0) {
                return Err(bad("solver.scatter", "radius and fraction must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Termination {
    HorizonReached,
    BlowUpDetected { t_est: f64 },
    ScatterDetected { t: f64 },
    EnergyDriftAbort { t: f64, drift: f64 },
    /// dt underflowed without norm explosion.
    RefinementExhausted { t: f64 },
    StepBudgetExhausted { t: f64 },
}

/// Per-step diagnostics, recorded at every stored state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    pub drift: f64,
    /// H^1 x L^2 norm over its initial value.
    pub norm_ratio: f64,
    pub max_abs: f64,
    /// Local free energy in r <= radius over the initial free energy.
    pub local_fraction: f64,
    /// Space-time L^q mass accumulated since the previous record.
    pub snorm_increment: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<FieldState>,
    /// (time, dt) at every step-size change, starting with the initial step.
    pub dt_history: Vec<(f64, f64)>,
    pub records: Vec<StepRecord>,
    pub termination: Termination,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &FieldState {
        self.states.last().expect("trajectories hold the initial state")
    }

    pub fn final_time(&self) -> f64 {
        self.final_state().time
    }

    pub fn max_drift(&self) -> f64 {
        self.records.iter().map(|r| r.drift).fold(0.0, f64::max)
    }

    /// State stored closest to time t.
    pub fn state_near(&self, t: f64) -> &FieldState {
        self.states
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("trajectories hold the initial state")
    }
}

/// omega int r^{N-1} |u|^p on the nodes (trapezoid).
fn lp(grid: &RadialGrid, u: &[f64], p: f64) -> f64 {
    u.iter().zip(grid.measure()).map(|(v, w)| w * v.abs().powf(p)).sum()
}

struct Monitor {
    radius: f64,
    q: f64,
}

impl Monitor {
    fn local_free_energy(&self, spec: &SpectralState, u_r: &[f64], u_t: &[f64]) -> f64 {
        let grid = spec.grid();
        let dens: Vec<f64> = u_r.iter().zip(u_t).map(|(a, b)| 0.5 * (a * a + b * b)).collect();
        grid.integrate_range(&dens, 0.0, self.radius.min(grid.r_max()))
    }
}

/// Monotone non-increase of the per-unit-time increments over the last quartile.
pub(crate) fn increments_decay(records: &[StepRecord]) -> bool {
    let rates: Vec<f64> = records
        .windows(2)
        .filter(|w| w[1].t > w[0].t)
        .map(|w| w[1].snorm_increment / (w[1].t - w[0].t))
        .collect();
    if rates.len() < 4 {
        return false;
    }
    let tail = &rates[rates.len() - rates.len() / 4..];
    tail.len() >= 2 && tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-300)
}

/// Radial evolution of u_tt - Δu = |u|^{4/(N-2)} u by Strang splitting:
/// half kick of u_t by the pointwise nonlinearity (projected on the basis),
/// exact spectral free flow, half kick.
pub fn evolve(initial: &FieldState, settings: &SolverSettings) -> Result<Trajectory> {
    settings.validate()?;
    initial.validate()?;
    let grid = initial.grid.clone();
    let h = grid
        .spacing()
        .ok_or_else(|| NlwError::invalid("the nonlinear solver needs a uniform grid"))?;
    settings.window_rule().check(initial, settings.horizon)?;

    let dim = grid.dim();
    let power = dim.nonlinear_power();
    let p = dim.critical_exponent();
    let pw = dim.potential_weight();
    let basis: Arc<SpectralBasis> = SpectralBasis::shared(&grid)?;
    let mut spec = SpectralState::from_field(initial)?;
    let monitor = Monitor {
        radius: settings.scatter.map(|s| s.radius).unwrap_or(5.0),
        q: dim.strichartz_exponent(),
    };

    let force = |u: &[f64]| -> Vec<f64> { basis.galerkin(&u.iter().map(|v| v.abs().powf(power) * v).collect::<Vec<_>>()) };

    let mut u = basis.synthesize(&spec.beta);
    let free0 = spec.free_energy();
    let lp0 = lp(&grid, &u, p);
    let energy0 = free0 - pw * lp0;
    let energy_scale = (free0 + pw * lp0).max(f64::MIN_POSITIVE);
    let norm0 = (2.0 * free0).sqrt();
    let amp0 = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let dt0 = settings.dt_factor * h;
    let dt_min = dt0 / 2f64.powi(settings.max_refinements as i32);
    let mut dt = dt0;
    let mut amp_ref = amp0;

    let mut traj = Trajectory {
        states: vec![initial.clone()],
        dt_history: vec![(initial.time, dt)],
        records: Vec::new(),
        termination: Termination::HorizonReached,
        steps: 0,
    };
    let t0 = initial.time;
    let t_end = t0 + settings.horizon;
    let ut0 = basis.synthesize(&spec.gamma);
    let local0 = monitor.local_free_energy(&spec, &basis.synthesize_derivative(&spec.beta), &ut0);
    traj.records.push(StepRecord {
        t: t0,
        dt,
        energy: energy0,
        drift: 0.0,
        norm_ratio: 1.0,
        max_abs: amp0,
        local_fraction: if free0 > 0.0 { local0 / free0 } else { 0.0 },
        snorm_increment: 0.0,
    });
    if free0 == 0.0 && lp0 == 0.0 {
        // the zero solution
        let mut end = initial.clone();
        end.time = t_end;
        traj.states.push(end);
        return Ok(traj);
    }

    let mut f = force(&u);
    let mut next_save = t0 + settings.save_interval;
    let mut snorm_acc = 0.0;
    let mut lq_prev = lp(&grid, &u, monitor.q);
    let mut exploded = false;

    loop {
        let t = spec.time;
        if t >= t_end - 1e-12 * dt0 {
            break;
        }
        if traj.steps >= settings.max_steps {
            traj.termination = Termination::StepBudgetExhausted { t };
            break;
        }
        let step = dt.min(t_end - t);

        for (g, fv) in spec.gamma.iter_mut().zip(&f) {
            *g += 0.5 * step * fv;
        }
        spec.evolve_in_place(step);
        u = basis.synthesize(&spec.beta);
        f = force(&u);
        for (g, fv) in spec.gamma.iter_mut().zip(&f) {
            *g += 0.5 * step * fv;
        }
        traj.steps += 1;

        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(NlwError::SolverAbort {
                t: spec.time,
                reason: format!(
                    "non-finite field at node {i} (r = {}) after {} steps, dt = {step:e}, last max|u| = {amp_ref:e}",
                    grid.nodes()[i],
                    traj.steps
                ),
            });
        }

        let lq = lp(&grid, &u, monitor.q);
        snorm_acc += 0.5 * step * (lq + lq_prev);
        lq_prev = lq;

        let free = spec.free_energy();
        let energy = free - pw * lp(&grid, &u, p);
        let drift = (energy - energy0).abs() / energy_scale;
        let norm_ratio = (2.0 * free).sqrt() / norm0;
        let amp = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        exploded |= norm_ratio > settings.blowup_norm_factor;

        if amp0 > 0.0 && amp >= 2.0 * amp_ref {
            amp_ref = amp;
            dt *= 0.5;
            traj.dt_history.push((spec.time, dt));
            if dt < dt_min {
                traj.termination = if exploded {
                    Termination::BlowUpDetected { t_est: spec.time }
                } else {
                    Termination::RefinementExhausted { t: spec.time }
                };
                push_state(&mut traj, &spec, &basis, &monitor, free0, energy, drift, norm_ratio, amp, dt, &mut snorm_acc);
                break;
            }
        }
        if !exploded && drift > settings.drift_bound {
            traj.termination = Termination::EnergyDriftAbort { t: spec.time, drift };
            push_state(&mut traj, &spec, &basis, &monitor, free0, energy, drift, norm_ratio, amp, dt, &mut snorm_acc);
            break;
        }
        if spec.time >= next_save - 1e-9 * dt0 || spec.time >= t_end - 1e-12 * dt0 {
            while next_save <= spec.time + 1e-9 * dt0 {
                next_save += settings.save_interval;
            }
            push_state(&mut traj, &spec, &basis, &monitor, free0, energy, drift, norm_ratio, amp, dt, &mut snorm_acc);
            if let Some(sc) = settings.scatter {
                let last = traj.records.last().expect("just pushed");
                if !exploded && last.local_fraction < sc.fraction && increments_decay(&traj.records) {
                    traj.termination = Termination::ScatterDetected { t: spec.time };
                    break;
                }
            }
        }
    }
    if traj.final_state().time < spec.time {
        let free = spec.free_energy();
        let energy = free - pw * lp(&grid, &u, p);
        let drift = (energy - energy0).abs() / energy_scale;
        let amp = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        push_state(&mut traj, &spec, &basis, &monitor, free0, energy, drift, (2.0 * free).sqrt() / norm0, amp, dt, &mut snorm_acc);
    }
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn push_state(
    traj: &mut Trajectory,
    spec: &SpectralState,
    basis: &SpectralBasis,
    monitor: &Monitor,
    free0: f64,
    energy: f64,
    drift: f64,
    norm_ratio: f64,
    amp: f64,
    dt: f64,
    snorm_acc: &mut f64,
) {
    let state = spec.to_field();
    let local = monitor.local_free_energy(spec, &basis.synthesize_derivative(&spec.beta), &state.ut);
    traj.records.push(StepRecord {
        t: spec.time,
        dt,
        energy,
        drift,
        norm_ratio,
        max_abs: amp,
        local_fraction: local / free0,
        snorm_increment: *snorm_acc,
    });
    *snorm_acc = 0.0;
    traj.states.push(state);
}
