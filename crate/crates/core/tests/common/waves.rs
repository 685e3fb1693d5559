//! Mirrored Gaussian shells and the closed-form N = 3 free evolution.
//!
//! g(s) = sum a_j (exp(-((s-c_j)/w_j)^2) + exp(-((s+c_j)/w_j)^2)) is even, so
//! V(s) = s g(s) is odd and r u(t, r) is the d'Alembert solution built from V.

use std::f64::consts::PI;
use std::sync::Arc;

use nlw_core::functionals::{FieldState, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

#[derive(Debug, Clone, Copy)]
pub struct Shell {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
}

/// Decay exp(-x^2) at x = 6.5 is below 1e-18.
pub const SUPPORT_WIDTHS: f64 = 6.5;

#[derive(Debug, Clone, Default)]
pub struct ShellData {
    pub pos: Vec<Shell>,
    pub vel: Vec<Shell>,
}

fn gauss(s: f64, sh: &Shell) -> f64 {
    (-((s - sh.center) / sh.width).powi(2)).exp()
}

fn gauss_d(s: f64, sh: &Shell) -> f64 {
    -2.0 * (s - sh.center) / (sh.width * sh.width) * gauss(s, sh)
}

fn mirror(sh: &Shell) -> Shell {
    Shell { center: -sh.center, ..*sh }
}

/// Even profile g and its derivative.
fn profile(shells: &[Shell], s: f64) -> (f64, f64) {
    let mut g = 0.0;
    let mut dg = 0.0;
    for sh in shells {
        let m = mirror(sh);
        g += sh.amp * (gauss(s, sh) + gauss(s, &m));
        dg += sh.amp * (gauss_d(s, sh) + gauss_d(s, &m));
    }
    (g, dg)
}

/// int_0^s x exp(-((x-c)/w)^2) dx
fn moment(s: f64, sh: &Shell) -> f64 {
    let prim = |x: f64| {
        let z = (x - sh.center) / sh.width;
        sh.center * sh.width * PI.sqrt() / 2.0 * erf(z) - sh.width * sh.width / 2.0 * (-z * z).exp()
    };
    prim(s) - prim(0.0)
}

impl ShellData {
    pub fn random(seed: u64, max_center: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |n: usize, amp: f64| -> Vec<Shell> {
            (0..n)
                .map(|_| Shell {
                    amp: rng.random_range(-amp..amp),
                    center: rng.random_range(0.0..max_center),
                    width: rng.random_range(0.5..1.2),
                })
                .collect()
        };
        let pos = pick(1 + (seed % 3) as usize, 1.0);
        let vel = pick((seed % 4) as usize, 1.0);
        ShellData { pos, vel }
    }

    pub fn support(&self) -> f64 {
        self.pos
            .iter()
            .chain(&self.vel)
            .map(|s| s.center + SUPPORT_WIDTHS * s.width)
            .fold(0.0, f64::max)
    }

    pub fn field(&self, grid: &Arc<RadialGrid>) -> FieldState {
        let u = grid.nodes().iter().map(|&r| profile(&self.pos, r).0).collect();
        let ut = grid.nodes().iter().map(|&r| profile(&self.vel, r).0).collect();
        FieldState::new(grid.clone(), u, ut, 0.0).unwrap()
    }

    /// Odd extension of s u_1(s) integrated from 0; even in s.
    fn vel_antiderivative(&self, s: f64) -> f64 {
        let x = s.abs();
        self.vel
            .iter()
            .map(|sh| sh.amp * (moment(x, sh) + moment(x, &mirror(sh))))
            .sum()
    }

    /// (v, v_r, v_t) for v = r u(t, r) in N = 3.
    pub fn dalembert(&self, t: f64, r: f64) -> (f64, f64, f64) {
        let v0 = |s: f64| s * profile(&self.pos, s).0;
        let dv0 = |s: f64| {
            let (g, dg) = profile(&self.pos, s);
            g + s * dg
        };
        let v1 = |s: f64| s * profile(&self.vel, s).0;
        let (a, b) = (r + t, r - t);
        let v = 0.5 * (v0(a) + v0(b)) + 0.5 * (self.vel_antiderivative(a) - self.vel_antiderivative(b));
        let vr = 0.5 * (dv0(a) + dv0(b)) + 0.5 * (v1(a) - v1(b));
        let vt = 0.5 * (dv0(a) - dv0(b)) + 0.5 * (v1(a) + v1(b));
        (v, vr, vt)
    }

    /// 4 pi [int_a^inf (v_r^2 + v_t^2) dr + v(a)^2 / a], the N = 3 energy in r >= a.
    pub fn exterior_energy(&self, t: f64, a: f64) -> f64 {
        self.exterior_energy_at_level(t, a, 16)
    }

    pub fn exterior_energy_at_level(&self, t: f64, a: f64, levels: u32) -> f64 {
        let end = t.abs() + self.support() + 1.0;
        let len = (end - a).max(0.0);
        let body = super::romberg(
            |x| {
                let (_, vr, vt) = self.dalembert(t, a + x * len);
                vr * vr + vt * vt
            },
            levels,
        ) * len;
        let boundary = if a > 0.0 {
            let (v, _, _) = self.dalembert(t, a);
            v * v / a
        } else {
            0.0
        };
        4.0 * PI * (body + boundary)
    }
}
