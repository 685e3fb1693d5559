//! Adaptive Gauss-Kronrod quadrature and certified tails for polynomially
//! decaying radial integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{NlwError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Settings for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
    /// Required ratio tail_bound / integral for a certified cutoff.
    pub tail_tol: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_intervals: 20_000,
            tail_tol: 1e-10,
        }
    }
}

impl QuadSettings {
    /// Short stable fingerprint, stored alongside frozen constants.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = format!(
            "rel={:e};abs={:e};max={};tail={:e}",
            self.rel_tol, self.abs_tol, self.max_intervals, self.tail_tol
        );
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..6])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let raw = ((kron - gauss) * h).abs();
    // QUADPACK-style error scaling
    let error = if raw > 0.0 {
        raw * (200.0 * raw / value.abs().max(f64::MIN_POSITIVE))
            .powf(1.5)
            .min(1.0)
    } else {
        0.0
    };
    Panel {
        a,
        b,
        value,
        error: error.max(50.0 * f64::EPSILON * value.abs()),
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) over the panels delimited by `breaks`.
pub fn integrate_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    settings: &QuadSettings,
) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(NlwError::invalid("quadrature needs at least two breakpoints"));
    }
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if !(w[1] > w[0]) {
            return Err(NlwError::invalid("breakpoints must be strictly increasing"));
        }
        heap.push(kronrod15(&f, w[0], w[1]));
    }
    let mut evaluations = 15 * heap.len();
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() {
            return Err(NlwError::Quadrature("non-finite integrand".into()));
        }
        let target = settings.abs_tol.max(settings.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if heap.len() >= settings.max_intervals {
            // Remaining error is at round-off level if the worst panel cannot shrink.
            if error <= 1e3 * f64::EPSILON * value.abs() {
                return Ok(QuadResult {
                    value,
                    error,
                    evaluations,
                });
            }
            return Err(NlwError::Quadrature(format!(
                "interval budget {} exhausted, error {error:e} > target {target:e}",
                settings.max_intervals
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            continue;
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
        evaluations += 30;
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: &QuadSettings) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], settings)
}

/// Envelope |f(r)| <= coef * r^{-power} valid for r >= 1, with power > 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub coef: f64,
    pub power: f64,
}

impl TailBound {
    /// Bound on the integral of |f| over [r, infinity).
    pub fn beyond(&self, r: f64) -> f64 {
        self.coef * r.powf(1.0 - self.power) / (self.power - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLineResult {
    pub value: f64,
    pub error: f64,
    pub cutoff: f64,
    pub tail_bound: f64,
}

/// Integral over [0, infinity) of a radial integrand with certified algebraic tail.
///
/// The cutoff R is doubled until `tail.beyond(R)` is below `tail_tol` times the
/// integral; [0, R] is split geometrically so each panel sees O(1) relative
/// variation of a power-law integrand.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    tail: TailBound,
    settings: &QuadSettings,
) -> Result<HalfLineResult> {
    if tail.power <= 1.0 {
        return Err(NlwError::invalid("tail power must exceed 1"));
    }
    let mut cutoff = 16.0;
    let mut breaks = vec![0.0, 0.25, 0.5, 1.0];
    let mut r = 1.0;
    while r < cutoff {
        r *= 2.0;
        breaks.push(r);
    }
    for _ in 0..200 {
        let res = integrate_breaks(&f, &breaks, settings)?;
        let bound = tail.beyond(cutoff);
        if bound <= settings.tail_tol * res.value.abs() {
            return Ok(HalfLineResult {
                value: res.value,
                error: res.error,
                cutoff,
                tail_bound: bound,
            });
        }
        // bound ~ R^{1-p}: jump straight to a sufficient cutoff, then round up to a power of two
        let need = (bound / (settings.tail_tol * res.value.abs())).powf(1.0 / (tail.power - 1.0));
        let target = cutoff * need.max(2.0);
        while cutoff < target {
            cutoff *= 2.0;
            breaks.push(cutoff);
        }
    }
    Err(NlwError::Quadrature("tail cutoff search did not terminate".into()))
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
