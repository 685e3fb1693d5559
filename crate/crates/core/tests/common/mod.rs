#![allow(dead_code)]

pub mod waves;

use std::path::PathBuf;

use nlw_core::fixtures::{FixtureEntry, Fixtures};
use nlw_core::Dimension;

pub const ORACLE_LEVELS: u32 = 18;

/// Romberg integration over [0, 1] of a smooth integrand, Richardson table of
/// trapezoid sums with 2^k panels for k <= levels.
pub fn romberg<F: Fn(f64) -> f64>(f: F, levels: u32) -> f64 {
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut trap = 0.5 * (f(0.0) + f(1.0));
    table.push(vec![trap]);
    for k in 1..=levels {
        let n = 1u64 << k;
        let h = 1.0 / n as f64;
        let mut mid = 0.0;
        for i in (1..n).step_by(2) {
            mid += f(i as f64 * h);
        }
        trap = 0.5 * trap + h * mid;
        let mut row = vec![trap];
        let mut pow4 = 1.0;
        for j in 1..=(k as usize).min(8) {
            pow4 *= 4.0;
            let prev = &table[k as usize - 1];
            let v = row[j - 1] + (row[j - 1] - prev[j - 1]) / (pow4 - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    *table.last().unwrap().last().unwrap()
}

pub fn w(r: f64, n: f64) -> f64 {
    (1.0 + r * r / (n * (n - 2.0))).powf(-(n - 2.0) / 2.0)
}

pub fn w_prime(r: f64, n: f64) -> f64 {
    let a = n * (n - 2.0);
    -(n - 2.0) * r / a * (1.0 + r * r / a).powf(-n / 2.0)
}

pub fn omega(n: u32) -> f64 {
    use std::f64::consts::PI;
    match n {
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        _ => unreachable!(),
    }
}

/// Integral over [0, inf) of g(r) via the compactification r = s/(1-s).
pub fn mapped_half_line<G: Fn(f64) -> f64>(g: G, levels: u32) -> f64 {
    romberg(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let r = s / (1.0 - s);
            g(r) / ((1.0 - s) * (1.0 - s))
        },
        levels,
    )
}

/// ||grad W||^2 by the mapped Romberg oracle. The s = 1 endpoint is the
/// finite limit of the rational integrand, supplied explicitly for N = 3.
pub fn oracle_grad_sq(dim: Dimension) -> f64 {
    let n = dim.nf();
    let nn = dim.n();
    let a = n * (n - 2.0);
    let end = if nn == 3 { (n - 2.0).powi(2) * a.powf(n - 2.0) } else { 0.0 };
    omega(nn)
        * romberg(
            |s| {
                if s >= 1.0 {
                    return end;
                }
                let r = s / (1.0 - s);
                r.powi(nn as i32 - 1) * w_prime(r, n).powi(2) / ((1.0 - s) * (1.0 - s))
            },
            ORACLE_LEVELS,
        )
}

pub fn oracle_lp_crit(dim: Dimension) -> f64 {
    let n = dim.nf();
    let p = 2.0 * n / (n - 2.0);
    omega(dim.n()) * mapped_half_line(|r| r.powi(dim.n() as i32 - 1) * w(r, n).powf(p), ORACLE_LEVELS)
}

/// ||W||_{L^q}^q by the mapped oracle (q large enough for a vanishing endpoint).
pub fn oracle_lebesgue(dim: Dimension, q: f64) -> f64 {
    let n = dim.nf();
    omega(dim.n()) * mapped_half_line(|r| r.powi(dim.n() as i32 - 1) * w(r, n).powf(q), ORACLE_LEVELS)
}

/// Closed form of ||grad W||^2 through the Beta function.
pub fn beta_grad_sq(dim: Dimension) -> f64 {
    use statrs::function::beta::beta;
    let n = dim.nf();
    let a = n * (n - 2.0);
    omega(dim.n()) * (n - 2.0).powi(2) * a.powf((n - 2.0) / 2.0) * 0.5 * beta((n + 2.0) / 2.0, (n - 2.0) / 2.0)
}

/// Hash of the oracle settings stored next to each frozen constant.
pub fn oracle_fingerprint() -> String {
    use sha2::{Digest, Sha256};
    let settings = format!("romberg;map=s/(1-s);levels={ORACLE_LEVELS};richardson=8");
    hex::encode(&Sha256::digest(settings.as_bytes())[..6])
}

pub fn oracle_fixtures() -> Fixtures {
    let mut entries = Vec::new();
    for d in Dimension::ALL {
        for (name, value) in [("grad_sq", oracle_grad_sq(d)), ("lp_crit", oracle_lp_crit(d))] {
            entries.push(FixtureEntry {
                dim: d,
                name: name.into(),
                value,
                quad: oracle_fingerprint(),
            });
        }
    }
    Fixtures { version: 1, entries }
}

pub fn fixtures_path() -> PathBuf {
    Fixtures::bundled_path()
}

pub fn fixtures() -> Fixtures {
    Fixtures::load(&fixtures_path()).expect("bundled fixtures load")
}

pub fn grad_sq(dim: Dimension) -> f64 {
    fixtures().grad_sq(dim).unwrap()
}

/// E(aW, 0) / ||grad W||^2 = a^2/2 - (N-2)/(2N) a^{2N/(N-2)}.
pub fn scaled_w_energy_ratio(a: f64, dim: Dimension) -> f64 {
    let n = dim.nf();
    a * a / 2.0 - (n - 2.0) / (2.0 * n) * a.abs().powf(2.0 * n / (n - 2.0))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
