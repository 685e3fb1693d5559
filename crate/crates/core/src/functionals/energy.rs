use serde::{Deserialize, Serialize};

use crate::error::{NlwError, Result};
use crate::functionals::grid::{FieldState, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: f64,
    /// Zero for radial states.
    pub momentum: f64,
    pub grad_sq: f64,
    pub ut_sq: f64,
    pub lp_crit: f64,
}

impl EnergyReport {
    /// E(u0, 0): the energy without its kinetic part.
    pub fn static_energy(&self) -> f64 {
        self.energy - 0.5 * self.ut_sq
    }
}

pub fn energy(state: &FieldState) -> Result<EnergyReport> {
    state.validate()?;
    let grid = &state.grid;
    let dim = grid.dim();
    let p = dim.critical_exponent();
    let du = grid.gradient(&state.u);
    let grad_sq = grid.integrate(&du.iter().map(|d| d * d).collect::<Vec<_>>());
    let ut_sq = grid.integrate(&state.ut.iter().map(|v| v * v).collect::<Vec<_>>());
    let lp_crit = grid.integrate(&state.u.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
    Ok(EnergyReport {
        energy: 0.5 * ut_sq + 0.5 * grad_sq - dim.potential_weight() * lp_crit,
        momentum: 0.0,
        grad_sq,
        ut_sq,
        lp_crit,
    })
}

/// Discrete H^1-dot inner product built from the same gradient as `energy`.
pub fn hdot1_inner(grid: &RadialGrid, u: &[f64], v: &[f64]) -> f64 {
    let du = grid.gradient(u);
    let dv = grid.gradient(v);
    grid.integrate(&du.iter().zip(&dv).map(|(a, b)| a * b).collect::<Vec<_>>())
}

pub fn l2_inner(grid: &RadialGrid, u: &[f64], v: &[f64]) -> f64 {
    grid.integrate(&u.iter().zip(v).map(|(a, b)| a * b).collect::<Vec<_>>())
}

/// (u, u_t) inner product in H^1-dot x L^2.
pub fn energy_inner(a: &FieldState, b: &FieldState) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(NlwError::GridMismatch("inner product of fields on different grids".into()));
    }
    Ok(hdot1_inner(&a.grid, &a.u, &b.u) + l2_inner(&a.grid, &a.ut, &b.ut))
}

pub fn energy_norm_sq(state: &FieldState) -> f64 {
    hdot1_inner(&state.grid, &state.u, &state.u) + l2_inner(&state.grid, &state.ut, &state.ut)
}

/// C_N = (||grad W||^2)^{-1/N}.
pub fn sobolev_constant(dim: crate::dimension::Dimension, w_grad_sq: f64) -> Result<f64> {
    if !(w_grad_sq > 0.0 && w_grad_sq.is_finite()) {
        return Err(NlwError::invalid(format!("gradient norm must be positive, got {w_grad_sq}")));
    }
    Ok(w_grad_sq.powf(-1.0 / dim.nf()))
}

/// ||u||_{L^{2N/(N-2)}} / ||grad u|| on the grid.
pub fn sobolev_ratio(state: &FieldState) -> Result<f64> {
    let rep = energy(state)?;
    if rep.grad_sq == 0.0 {
        return Err(NlwError::invalid("sobolev ratio of a constant field"));
    }
    let p = state.dim().critical_exponent();
    Ok(rep.lp_crit.powf(1.0 / p) / rep.grad_sq.sqrt())
}

/// Space-time integral of |u|^{2(N+1)/(N-2)}: radial quadrature in space,
/// trapezoid in time over consecutive states.
pub fn snorm_increment(states: &[FieldState]) -> Result<f64> {
    if states.len() < 2 {
        return Err(NlwError::invalid("space-time norm needs at least two states"));
    }
    let q = states[0].dim().strichartz_exponent();
    let spatial = |s: &FieldState| s.grid.integrate(&s.u.iter().map(|v| v.abs().powf(q)).collect::<Vec<_>>());
    let mut total = 0.0;
    let mut prev = spatial(&states[0]);
    for w in states.windows(2) {
        let dt = w[1].time - w[0].time;
        if !(dt > 0.0) {
            return Err(NlwError::invalid("state times must be strictly increasing"));
        }
        let next = spatial(&w[1]);
        total += 0.5 * dt * (prev + next);
        prev = next;
    }
    Ok(total)
}
