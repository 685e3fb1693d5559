use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::functionals::grid::{FieldState, RadialGrid};
use crate::groundstate::w;

/// Random radial states: a few signed W bubbles plus smooth compactly
/// supported noise, with a noise-only velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub min_bubbles: usize,
    pub max_bubbles: usize,
    pub scale_range: (f64, f64),
    pub amplitude_range: (f64, f64),
    pub max_noise_terms: usize,
    pub noise_amplitude: f64,
    pub velocity_amplitude: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            min_bubbles: 1,
            max_bubbles: 4,
            scale_range: (0.5, 2.0),
            amplitude_range: (-1.2, 1.2),
            max_noise_terms: 3,
            noise_amplitude: 0.3,
            velocity_amplitude: 0.4,
        }
    }
}

/// (1 - x^2)^4 on |x| < 1: C^3 with compact support.
fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - x * x).powi(4)
    }
}

/// Even-in-r bump centered at shell radius c with width s.
pub fn shell_bump(r: f64, c: f64, s: f64) -> f64 {
    bump((r - c) / s) + bump((r + c) / s)
}

fn noise(rng: &mut ChaCha8Rng, nodes: &[f64], terms: usize, amp: f64) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    for _ in 0..terms {
        let c = rng.random_range(0.0..4.0);
        let s = rng.random_range(0.4..2.0);
        let b = rng.random_range(-amp..amp);
        for (o, &r) in out.iter_mut().zip(nodes) {
            *o += b * shell_bump(r, c, s);
        }
    }
    out
}

/// 1 on [0, r_max/2], C^3 descent to 0 at 0.9 r_max.
fn taper(r: f64, r_max: f64) -> f64 {
    let s = ((r - 0.5 * r_max) / (0.4 * r_max)).clamp(0.0, 1.0);
    1.0 - s.powi(4) * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s.powi(3))
}

/// The bubble part is tapered to zero before r_max, so every sample is a
/// compactly supported H^1 state rather than a truncated one.
pub fn sample_state(grid: Arc<RadialGrid>, seed: u64, cfg: &SamplerConfig) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let nodes = grid.nodes();
    let a = dim.scaling_exponent();
    let mut u = vec![0.0; nodes.len()];
    let nb = rng.random_range(cfg.min_bubbles..=cfg.max_bubbles);
    for _ in 0..nb {
        let lambda = rng.random_range(cfg.scale_range.0..=cfg.scale_range.1);
        let amp = rng.random_range(cfg.amplitude_range.0..=cfg.amplitude_range.1);
        let pref = amp * lambda.powf(-a);
        for (o, &r) in u.iter_mut().zip(nodes) {
            *o += pref * w(r / lambda, dim);
        }
    }
    let r_max = grid.r_max();
    for (o, &r) in u.iter_mut().zip(nodes) {
        *o *= taper(r, r_max);
    }
    let terms = rng.random_range(0..=cfg.max_noise_terms);
    for (o, n) in u.iter_mut().zip(noise(&mut rng, nodes, terms, cfg.noise_amplitude)) {
        *o += n;
    }
    let vterms = rng.random_range(0..=cfg.max_noise_terms);
    let ut = noise(&mut rng, nodes, vterms, cfg.velocity_amplitude);
    FieldState {
        u,
        ut,
        grid,
        time: 0.0,
    }
}

/// Compactly supported radial field (no W content), zero velocity.
pub fn sample_compact_field(grid: Arc<RadialGrid>, seed: u64) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = rng.random_range(1..=4);
    let u = noise(&mut rng, grid.nodes(), terms, 1.0);
    let m = grid.len();
    FieldState {
        u,
        ut: vec![0.0; m],
        grid,
        time: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::Dimension;

    #[test]
    fn same_seed_same_state() {
        let g = RadialGrid::stretched(Dimension::THREE, 100.0, 600, 0.05).unwrap().into_shared();
        let cfg = SamplerConfig::default();
        let a = sample_state(g.clone(), 7, &cfg);
        let b = sample_state(g.clone(), 7, &cfg);
        let c = sample_state(g, 8, &cfg);
        assert_eq!(a, b);
        assert_ne!(a.u, c.u);
    }

    #[test]
    fn sampled_states_vanish_before_the_edge() {
        let g = RadialGrid::uniform(Dimension::THREE, 40.0, 801).unwrap().into_shared();
        for seed in 0..20 {
            let s = sample_state(g.clone(), seed, &SamplerConfig::default());
            assert!(s.u.iter().zip(g.nodes()).all(|(v, &r)| r < 36.0 || *v == 0.0));
        }
        assert_eq!(taper(10.0, 40.0), 1.0);
        assert!((taper(28.0, 40.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn compact_field_vanishes_far_out() {
        let g = RadialGrid::uniform(Dimension::FIVE, 20.0, 400).unwrap().into_shared();
        let s = sample_compact_field(g, 3);
        assert!(s.u.iter().zip(s.grid.nodes()).all(|(v, &r)| r < 6.0 || *v == 0.0));
    }
}
