use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NlwError, Result};
use crate::functionals::{l2_inner, FieldState, RadialGrid};
use crate::groundstate::{w, Sign, MIN_BUBBLE_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub ladder_per_decade: usize,
    pub decades: usize,
    /// Top of the scale ladder; the ladder spans `decades` below it.
    pub lambda_max: f64,
    /// Smallest normalized H^1 correlation worth a new bubble.
    pub correlation_threshold: f64,
    /// Certificate below which a multi-bubble fit is not accepted.
    pub separation_floor: f64,
    pub max_sweeps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ladder_per_decade: 64,
            decades: 6,
            lambda_max: 10.0,
            correlation_threshold: 0.2,
            separation_floor: 10.0,
            max_sweeps: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedBubble {
    pub sign: Sign,
    pub scale: f64,
    /// Normalized H^1 correlation with the residual when the bubble was picked.
    pub correlation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionResult {
    /// Sorted by scale, largest first.
    pub bubbles: Vec<FittedBubble>,
    #[serde(skip)]
    pub residual: FieldState,
    /// H^1 x L^2 norm of the residual (which still holds any radiation).
    pub fit_error: f64,
    pub relative_fit_error: f64,
    /// min over pairs of lambda_j/lambda_k + lambda_k/lambda_j; None below two bubbles.
    pub orthogonality_certificate: Option<f64>,
    pub accepted: bool,
}

impl DecompositionResult {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| NlwError::Format(e.to_string()))
    }
}

struct Fitter<'a> {
    grid: &'a RadialGrid,
    min_scale: f64,
}

impl Fitter<'_> {
    fn bubble_grad(&self, lam: f64) -> Vec<f64> {
        let dim = self.grid.dim();
        let amp = lam.powf(-dim.scaling_exponent());
        let u: Vec<f64> = self.grid.nodes().iter().map(|&r| amp * w(r / lam, dim)).collect();
        self.grid.gradient(&u)
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid.measure().iter().zip(a.iter().zip(b)).map(|(m, (x, y))| m * x * y).sum()
    }

    /// <r, W_lam> / (|r| |W_lam|) in H^1.
    fn correlation(&self, rg: &[f64], r_norm: f64, lam: f64) -> f64 {
        let bg = self.bubble_grad(lam);
        self.dot(rg, &bg) / (r_norm * self.dot(&bg, &bg).sqrt())
    }

    /// |r - sign W_lam|^2 in H^1.
    fn misfit(&self, rg: &[f64], sign: f64, lam: f64) -> f64 {
        let bg = self.bubble_grad(lam);
        self.grid
            .measure()
            .iter()
            .zip(rg.iter().zip(&bg))
            .map(|(m, (x, y))| {
                let d = x - sign * y;
                m * d * d
            })
            .sum()
    }
}

/// Minimizer of f over [lo, hi] in log-scale by golden section.
fn golden_log(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    while b - a > 1e-11 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d.exp());
        }
    }
    (0.5 * (a + b)).exp()
}

fn sub_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - s * y).collect()
}

/// Greedy multiscale matching pursuit with +-W bubbles: scan a log-spaced
/// scale ladder for the best normalized H^1 correlation, refine by golden
/// section, subtract, then re-fit all scales jointly by cyclic least squares.
/// Stops at `j_max` bubbles, below the correlation threshold, or when a full
/// bubble would no longer reduce the residual.
pub fn fit_bubbles(state: &FieldState, j_max: usize, opts: &FitOptions) -> Result<DecompositionResult> {
    state.validate()?;
    if !(opts.lambda_max > 0.0) || opts.ladder_per_decade == 0 || opts.decades == 0 {
        return Err(NlwError::invalid("fit ladder must be nonempty with a positive top scale"));
    }
    let grid = &state.grid;
    let min_scale = grid
        .nodes()
        .get(MIN_BUBBLE_POINTS - 1)
        .copied()
        .unwrap_or(f64::INFINITY)
        .max(f64::MIN_POSITIVE);
    let fitter = Fitter {
        grid,
        min_scale,
    };
    let steps = opts.ladder_per_decade * opts.decades;
    let ratio = 10f64.powf(1.0 / opts.ladder_per_decade as f64);
    let ladder: Vec<f64> = (0..=steps)
        .map(|i| opts.lambda_max * ratio.powi(-(i as i32)))
        .filter(|&l| l >= fitter.min_scale && grid.points_within(l) >= MIN_BUBBLE_POINTS)
        .collect();

    let ug = grid.gradient(&state.u);
    let u_norm_sq = fitter.dot(&ug, &ug);
    let mut bubbles: Vec<FittedBubble> = Vec::new();
    let mut rg = ug.clone();

    while bubbles.len() < j_max && !ladder.is_empty() {
        let r_sq = fitter.dot(&rg, &rg);
        if r_sq <= 1e-24 * u_norm_sq.max(f64::MIN_POSITIVE) {
            break;
        }
        let r_norm = r_sq.sqrt();
        let scores: Vec<f64> = ladder.par_iter().map(|&l| fitter.correlation(&rg, r_norm, l)).collect();
        let (best, &score) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("ladder is nonempty");
        if score.abs() < opts.correlation_threshold {
            break;
        }
        let lo = ladder[(best + 1).min(ladder.len() - 1)];
        let hi = ladder[best.saturating_sub(1)];
        let lam = if lo < hi {
            golden_log(|l| -fitter.correlation(&rg, r_norm, l).abs(), lo, hi)
        } else {
            ladder[best]
        };
        let sign = score.signum();
        if fitter.misfit(&rg, sign, lam) >= r_sq {
            break;
        }
        bubbles.push(FittedBubble {
            sign: Sign::of(sign),
            scale: lam,
            correlation: score,
        });
        backfit(&fitter, &ug, &mut bubbles, ratio, opts.max_sweeps);
        rg = ug.clone();
        for b in &bubbles {
            rg = sub_scaled(&rg, b.sign.value(), &fitter.bubble_grad(b.scale));
        }
    }

    bubbles.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    let dim = grid.dim();
    let mut residual = state.clone();
    for b in &bubbles {
        let amp = b.sign.value() * b.scale.powf(-dim.scaling_exponent());
        for (v, &r) in residual.u.iter_mut().zip(grid.nodes()) {
            *v -= amp * w(r / b.scale, dim);
        }
    }
    let res_g = grid.gradient(&residual.u);
    let fit_error = (fitter.dot(&res_g, &res_g) + l2_inner(grid, &residual.ut, &residual.ut)).sqrt();
    let total = (u_norm_sq + l2_inner(grid, &state.ut, &state.ut)).sqrt();
    let mut certificate: Option<f64> = None;
    for j in 0..bubbles.len() {
        for k in j + 1..bubbles.len() {
            let q = bubbles[j].scale / bubbles[k].scale;
            let v = q + 1.0 / q;
            certificate = Some(certificate.map_or(v, |c| c.min(v)));
        }
    }
    Ok(DecompositionResult {
        accepted: certificate.is_none_or(|c| c >= opts.separation_floor),
        bubbles,
        residual,
        fit_error,
        relative_fit_error: if total > 0.0 { fit_error / total } else { 0.0 },
        orthogonality_certificate: certificate,
    })
}

/// Cyclic least squares on the scales with signs fixed.
fn backfit(fitter: &Fitter, ug: &[f64], bubbles: &mut [FittedBubble], ratio: f64, max_sweeps: usize) {
    let span = ratio.powi(8);
    let mut grads: Vec<Vec<f64>> = bubbles.iter().map(|b| fitter.bubble_grad(b.scale)).collect();
    for _ in 0..max_sweeps {
        let mut moved = 0.0f64;
        for j in 0..bubbles.len() {
            let mut rj = ug.to_vec();
            for (k, b) in bubbles.iter().enumerate() {
                if k != j {
                    rj = sub_scaled(&rj, b.sign.value(), &grads[k]);
                }
            }
            let s = bubbles[j].sign.value();
            let old = bubbles[j].scale;
            let lo = (old / span).max(fitter.min_scale);
            let new = golden_log(|l| fitter.misfit(&rj, s, l), lo, old * span);
            moved = moved.max((new / old).ln().abs());
            bubbles[j].scale = new;
            grads[j] = fitter.bubble_grad(new);
        }
        if moved < 1e-9 {
            break;
        }
    }
}
