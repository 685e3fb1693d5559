//! The ground state W(r) = (1 + r^2/(N(N-2)))^{-(N-2)/2}, its rescalings and
//! the norm identities of its Lorentz boosts.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::{FieldState, RadialGrid};
use crate::quadrature::{integrate, integrate_half_line, QuadSettings, TailBound};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// Parameters of the soliton sign * scale^{-(N-2)/2} W_boost(x / scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub sign: Sign,
    pub scale: f64,
    pub boost: f64,
}

impl SolitonParams {
    pub fn new(sign: Sign, scale: f64, boost: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(NlwError::invalid(format!("soliton scale must be positive, got {scale}")));
        }
        check_boost(boost)?;
        Ok(SolitonParams { sign, scale, boost })
    }

    pub fn radial(sign: Sign, scale: f64) -> Result<Self> {
        Self::new(sign, scale, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBundle {
    pub grad_sq: f64,
    pub dt_sq: f64,
    pub lp_crit: f64,
}

fn check_boost(ell: f64) -> Result<()> {
    if ell.is_nan() || ell < 0.0 {
        return Err(NlwError::invalid(format!("boost must be in [0, 1), got {ell}")));
    }
    if ell >= 1.0 {
        return Err(NlwError::Superluminal(ell));
    }
    Ok(())
}

pub fn eval_w(r: f64, dim: Dimension) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(NlwError::invalid(format!("radius must be nonnegative, got {r}")));
    }
    Ok(w(r, dim))
}

/// W without the domain check; even in r.
pub(crate) fn w(r: f64, dim: Dimension) -> f64 {
    let a = dim.w_scale_sq();
    (1.0 + r * r / a).powf(-dim.scaling_exponent())
}

/// W'(r) = -(N-2) (r/a) (1 + r^2/a)^{-N/2}.
pub fn w_prime(r: f64, dim: Dimension) -> f64 {
    let a = dim.w_scale_sq();
    -(dim.nf() - 2.0) * (r / a) * (1.0 + r * r / a).powf(-dim.nf() / 2.0)
}

/// Envelope constants valid for r >= 1:
/// W <= a^{(N-2)/2} r^{2-N}, |W'| <= (N-2) a^{N/2-1} r^{1-N}.
fn w_envelope(dim: Dimension) -> (f64, f64) {
    let a = dim.w_scale_sq();
    (a.powf(dim.scaling_exponent()), (dim.nf() - 2.0) * a.powf(dim.nf() / 2.0 - 1.0))
}

/// ||grad W||^2, ||W||_{L^{2N/(N-2)}}^{2N/(N-2)} by adaptive quadrature with certified tails.
pub fn w_base_norms(dim: Dimension, quad: &QuadSettings) -> Result<NormBundle> {
    let omega = dim.sphere_area();
    let n = dim.nf();
    let p = dim.critical_exponent();
    let a = dim.w_scale_sq();
    let (_, dcoef) = w_envelope(dim);
    let grad = integrate_half_line(
        |r| omega * dim.radial_weight(r) * w_prime(r, dim).powi(2),
        TailBound {
            coef: omega * dcoef * dcoef,
            power: n - 1.0,
        },
        quad,
    )?;
    let lp = integrate_half_line(
        |r| omega * dim.radial_weight(r) * w(r, dim).powf(p),
        TailBound {
            coef: omega * a.powf(n),
            power: n + 1.0,
        },
        quad,
    )?;
    Ok(NormBundle {
        grad_sq: grad.value,
        dt_sq: 0.0,
        lp_crit: lp.value,
    })
}

/// ||W||_{L^q}^q for an arbitrary exponent q > N/(N-2).
pub fn w_lebesgue_norm(dim: Dimension, q: f64, quad: &QuadSettings) -> Result<f64> {
    let n = dim.nf();
    let decay = q * (n - 2.0) - (n - 1.0);
    if decay <= 1.0 {
        return Err(NlwError::invalid(format!("W is not in L^{q} for {dim}")));
    }
    let omega = dim.sphere_area();
    let (wcoef, _) = w_envelope(dim);
    Ok(integrate_half_line(
        |r| omega * dim.radial_weight(r) * w(r, dim).powf(q),
        TailBound {
            coef: omega * wcoef.powf(q),
            power: decay,
        },
        quad,
    )?
    .value)
}

/// E(W, 0) = ||grad W||^2 / N.
pub fn ground_state_energy(base_grad_sq: f64, dim: Dimension) -> f64 {
    base_grad_sq / dim.nf()
}

/// Norms of the boost W_l(0, x) = W((x_1/sqrt(1-l^2), x')) in closed form.
pub fn lorentz_norms(ell: f64, base_grad_sq: f64, dim: Dimension) -> Result<NormBundle> {
    check_boost(ell)?;
    if !(base_grad_sq > 0.0) {
        return Err(NlwError::invalid("base gradient norm must be positive"));
    }
    let n = dim.nf();
    let gamma_inv = (1.0 - ell * ell).sqrt();
    Ok(NormBundle {
        grad_sq: (n - (n - 1.0) * ell * ell) / (n * gamma_inv) * base_grad_sq,
        dt_sq: ell * ell / (n * gamma_inv) * base_grad_sq,
        lp_crit: gamma_inv * base_grad_sq,
    })
}

pub fn boosted_energy(ell: f64, base_energy: f64) -> Result<f64> {
    check_boost(ell)?;
    Ok(base_energy / (1.0 - ell * ell).sqrt())
}

/// Momentum along the boost axis: P = -l E.
pub fn boosted_momentum(ell: f64, boosted_energy: f64) -> Result<f64> {
    check_boost(ell)?;
    Ok(-ell * boosted_energy)
}

/// Quadratic quantities of the boosted soliton, integrated directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedQuadrature {
    pub dx1_sq: f64,
    pub dperp_sq: f64,
    pub dt_sq: f64,
    pub lp_crit: f64,
    /// Integral of d_t W_l * d_{x1} W_l.
    pub momentum: f64,
}

impl BoostedQuadrature {
    pub fn grad_sq(&self) -> f64 {
        self.dx1_sq + self.dperp_sq
    }

    pub fn energy(&self, dim: Dimension) -> f64 {
        0.5 * self.dt_sq + 0.5 * self.grad_sq() - dim.potential_weight() * self.lp_crit
    }
}

/// Direct quadrature of the boosted ground state Q_l(t, x) = W((x_1 - l t)/sqrt(1-l^2), x')
/// at t = 0. Cylindrical symmetry about the boost axis reduces the N-dimensional
/// integrals to the half plane (x_1, rho), integrated in polar form
/// x_1 = s cos(phi), rho = s sin(phi).
pub fn boosted_norms_quadrature(ell: f64, dim: Dimension, quad: &QuadSettings) -> Result<BoostedQuadrature> {
    check_boost(ell)?;
    let s2 = 1.0 - ell * ell;
    let n = dim.nf();
    let p = dim.critical_exponent();
    let a = dim.w_scale_sq();
    let (_, dcoef) = w_envelope(dim);
    let sub = dim.subsphere_area();
    let inner = QuadSettings {
        rel_tol: quad.rel_tol.max(1e-14),
        ..*quad
    };
    let outer = QuadSettings {
        rel_tol: (10.0 * quad.rel_tol).max(1e-13),
        ..*quad
    };

    // (d_{x1}^2, d_perp^2, |W|^p) as functions of the polar angle
    let radial = |phi: f64, which: usize| -> Result<f64> {
        let (c, s) = (phi.cos(), phi.sin());
        let ang = sub * s.powi(dim.n() as i32 - 2);
        if ang == 0.0 {
            return Ok(0.0);
        }
        let f = |rad: f64| {
            let (x1, rho) = (rad * c, rad * s);
            let big_r = (x1 * x1 / s2 + rho * rho).sqrt();
            let jac = ang * rad.powi(dim.n() as i32 - 1);
            match which {
                0 => {
                    if big_r == 0.0 {
                        return 0.0;
                    }
                    let d1 = w_prime(big_r, dim) * x1 / (s2 * big_r);
                    jac * d1 * d1
                }
                1 => {
                    if big_r == 0.0 {
                        return 0.0;
                    }
                    let dp = w_prime(big_r, dim) * rho / big_r;
                    jac * dp * dp
                }
                _ => jac * w(big_r, dim).powf(p),
            }
        };
        // big_r >= rad, so the unboosted envelopes apply to W(big_r), W'(big_r)
        let tail = match which {
            0 => TailBound {
                coef: ang * dcoef * dcoef * (c / s2).min(1.0 / s2.sqrt()).powi(2),
                power: n - 1.0,
            },
            1 => TailBound {
                coef: ang * dcoef * dcoef * s * s,
                power: n - 1.0,
            },
            _ => TailBound {
                coef: ang * a.powf(n),
                power: n + 1.0,
            },
        };
        Ok(integrate_half_line(f, tail, &inner)?.value)
    };

    let mut vals = [0.0; 3];
    for (which, v) in vals.iter_mut().enumerate() {
        let err = std::cell::RefCell::new(None);
        let res = integrate(
            |phi| match radial(phi, which) {
                Ok(x) => x,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            0.0,
            PI / 2.0,
            &outer,
        )?;
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        // the integrand is even under x_1 -> -x_1
        *v = 2.0 * res.value;
    }
    let [dx1_sq, dperp_sq, lp_crit] = vals;
    Ok(BoostedQuadrature {
        dx1_sq,
        dperp_sq,
        dt_sq: ell * ell * dx1_sq,
        lp_crit,
        momentum: -ell * dx1_sq,
    })
}

/// Default minimum number of grid nodes inside r <= scale for a resolved bubble.
pub const MIN_BUBBLE_POINTS: usize = 8;

/// Samples sign * scale^{-(N-2)/2} W(r/scale) with zero velocity.
pub fn soliton_field(params: &SolitonParams, grid: Arc<RadialGrid>, min_points: usize) -> Result<FieldState> {
    if params.boost != 0.0 {
        return Err(NlwError::invalid("radial sampling requires a zero boost"));
    }
    let points = grid.points_within(params.scale);
    if points < min_points {
        return Err(NlwError::Unresolved {
            scale: params.scale,
            points,
            required: min_points,
        });
    }
    let dim = grid.dim();
    let amp = params.sign.value() * params.scale.powf(-dim.scaling_exponent());
    let u = grid.nodes().iter().map(|&r| amp * w(r / params.scale, dim)).collect();
    let m = grid.len();
    FieldState::new(grid, u, vec![0.0; m], 0.0)
}
