use std::sync::Arc;

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::{FieldState, RadialGrid};
use crate::linwave::basis::SpectralBasis;

/// Field in the eigenbasis: u = sum beta_n psi_n, u_t = sum gamma_n psi_n.
#[derive(Debug, Clone)]
pub struct SpectralState {
    basis: Arc<SpectralBasis>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub time: f64,
}

impl SpectralState {
    pub fn from_field(state: &FieldState) -> Result<Self> {
        state.validate()?;
        let basis = SpectralBasis::shared(&state.grid)?;
        Ok(SpectralState {
            beta: basis.analyze(&state.u),
            gamma: basis.analyze(&state.ut),
            basis,
            time: state.time,
        })
    }

    pub fn from_coefficients(basis: Arc<SpectralBasis>, beta: Vec<f64>, gamma: Vec<f64>, time: f64) -> Result<Self> {
        if beta.len() != basis.modes() || gamma.len() != basis.modes() {
            return Err(NlwError::invalid("coefficient count does not match the basis"));
        }
        if let Some(j) = beta.iter().chain(&gamma).position(|v| !v.is_finite()) {
            return Err(NlwError::NonFinite {
                node: j % basis.modes(),
                field: "spectral coefficient",
            });
        }
        Ok(SpectralState {
            basis,
            beta,
            gamma,
            time,
        })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn dim(&self) -> Dimension {
        self.basis.dim()
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.basis.grid()
    }

    pub fn frequencies(&self) -> &[f64] {
        self.basis.frequencies()
    }

    pub fn to_field(&self) -> FieldState {
        FieldState {
            u: self.basis.synthesize(&self.beta),
            ut: self.basis.synthesize(&self.gamma),
            grid: self.basis.grid().clone(),
            time: self.time,
        }
    }

    /// Radial derivative of u at the nodes.
    pub fn gradient(&self) -> Vec<f64> {
        self.basis.synthesize_derivative(&self.beta)
    }

    /// Exact free evolution by `dt` (no window check).
    pub fn evolve(&self, dt: f64) -> SpectralState {
        let mut beta = Vec::with_capacity(self.beta.len());
        let mut gamma = Vec::with_capacity(self.gamma.len());
        for ((&k, &b), &g) in self.basis.frequencies().iter().zip(&self.beta).zip(&self.gamma) {
            let (s, c) = (k * dt).sin_cos();
            beta.push(b * c + g * s / k);
            gamma.push(-k * b * s + g * c);
        }
        SpectralState {
            basis: self.basis.clone(),
            beta,
            gamma,
            time: self.time + dt,
        }
    }

    pub fn evolve_in_place(&mut self, dt: f64) {
        for ((&k, b), g) in self.basis.frequencies().iter().zip(self.beta.iter_mut()).zip(self.gamma.iter_mut()) {
            let (s, c) = (k * dt).sin_cos();
            let (b0, g0) = (*b, *g);
            *b = b0 * c + g0 * s / k;
            *g = -k * b0 * s + g0 * c;
        }
        self.time += dt;
    }

    /// 1/2 (||grad u||^2 + ||u_t||^2), exact in the basis.
    pub fn free_energy(&self) -> f64 {
        self.basis.mode_energy(&self.beta, &self.gamma)
    }

    /// (||grad u||^2, ||u_t||^2).
    pub fn energy_split(&self) -> (f64, f64) {
        self.basis.mode_split(&self.beta, &self.gamma)
    }

    /// (u, u_r, u_t) at an arbitrary radius.
    pub fn eval_at(&self, r: f64) -> (f64, f64, f64) {
        let (u, ur) = self.basis.eval_at(&self.beta, r);
        let (ut, _) = self.basis.eval_at(&self.gamma, r);
        (u, ur, ut)
    }
}

/// Admissible propagation times: |t| < r_max - support - margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRule {
    pub margin: f64,
    /// Fraction of free energy allowed outside the support radius.
    pub support_tol: f64,
}

impl Default for WindowRule {
    fn default() -> Self {
        WindowRule {
            margin: 2.0,
            support_tol: 1e-6,
        }
    }
}

impl WindowRule {
    pub fn window(&self, state: &FieldState) -> (f64, f64) {
        let support = support_radius(state, self.support_tol);
        (state.grid.r_max() - support - self.margin, support)
    }

    pub fn check(&self, state: &FieldState, t: f64) -> Result<f64> {
        let (window, support) = self.window(state);
        if !(t.abs() < window) {
            return Err(NlwError::BoundaryContamination {
                t: t.abs(),
                window,
                r_max: state.grid.r_max(),
                support,
            });
        }
        Ok(window)
    }
}

/// Smallest radius outside which at most `tol` of the free energy density
/// |u_r|^2 + |u_t|^2 lives (grid quadrature).
pub fn support_radius(state: &FieldState, tol: f64) -> f64 {
    let grid = &state.grid;
    let ur = grid.gradient(&state.u);
    let w = grid.measure();
    let dens: Vec<f64> = (0..grid.len()).map(|i| w[i] * (ur[i] * ur[i] + state.ut[i] * state.ut[i])).collect();
    let total: f64 = dens.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    for i in (0..grid.len()).rev() {
        tail += dens[i];
        if tail > tol * total {
            return grid.nodes()[(i + 1).min(grid.len() - 1)];
        }
    }
    0.0
}

/// Free evolution S_L(t)(u, u_t) under the default window rule.
pub fn propagate_linear(state: &FieldState, t: f64) -> Result<FieldState> {
    propagate_linear_with(state, t, &WindowRule::default())
}

pub fn propagate_linear_with(state: &FieldState, t: f64, rule: &WindowRule) -> Result<FieldState> {
    if t == 0.0 {
        state.validate()?;
        return Ok(state.clone());
    }
    rule.check(state, t)?;
    Ok(SpectralState::from_field(state)?.evolve(t).to_field())
}
