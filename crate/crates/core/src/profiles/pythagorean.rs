use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::sampler::shell_bump;
use crate::functionals::{hdot1_inner, l2_inner, FieldState, RadialGrid};
use crate::profiles::sequence::{orthogonality_check, synthesize_sequence, Law, ParamSeq, ProfileSpec, SequenceMember};

/// Expansion residuals of one sequence member. Each residual is the total norm
/// minus the sum the expansion predicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PythagoreanRow {
    pub n: usize,
    /// sum over pairs of the H^1 x L^2 cross terms
    pub cross_full: f64,
    /// sum over pairs of the gradient-only cross terms
    pub cross_grad_only: f64,
    /// full H^1 x L^2 norm
    pub res_37: f64,
    /// critical Lebesgue norm
    pub res_38: f64,
    /// gradient part alone, split per profile
    pub res_39: f64,
    /// velocity part alone, split per profile
    pub res_310: f64,
    /// gradient part, core profiles split and scattering profiles grouped
    pub res_311: f64,
    /// velocity part, same grouping
    pub res_312: f64,
    /// whichever of res_311 / res_312 is larger in magnitude
    pub res_lemma38: f64,
    /// sum of the squared H^1 x L^2 norms of the pieces
    pub energy_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PythagoreanReport {
    pub dim: Dimension,
    pub rows: Vec<PythagoreanRow>,
}

pub const CSV_HEADER: &str = "n,cross_full,cross_grad_only,res_37,res_38,res_39,res_310,res_lemma38";

/// |x_k| <= (1 + jitter) |x_{k-1}| at every step and the last below the first.
pub fn decays(values: &[f64], jitter: f64) -> bool {
    values.len() >= 2
        && values.windows(2).all(|w| w[1].abs() <= (1.0 + jitter) * w[0].abs())
        && values.last().unwrap().abs() < values[0].abs()
}

impl PythagoreanReport {
    pub fn column(&self, f: impl Fn(&PythagoreanRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn energy_scale(&self) -> f64 {
        self.rows.iter().map(|r| r.energy_scale).fold(0.0, f64::max)
    }

    /// First n from which |res_lemma38| stays within eps0.
    pub fn grouped_n_bar(&self, eps0: f64) -> Option<usize> {
        let mut bar = None;
        for r in self.rows.iter().rev() {
            if r.res_lemma38.abs() <= eps0 {
                bar = Some(r.n);
            } else {
                break;
            }
        }
        bar
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                r.n, r.cross_full, r.cross_grad_only, r.res_37, r.res_38, r.res_39, r.res_310, r.res_lemma38
            );
        }
        s
    }
}

struct Norms {
    grad: f64,
    vel: f64,
    lp: f64,
}

fn norms(s: &FieldState) -> Norms {
    let p = s.dim().critical_exponent();
    Norms {
        grad: hdot1_inner(&s.grid, &s.u, &s.u),
        vel: l2_inner(&s.grid, &s.ut, &s.ut),
        lp: s.grid.integrate(&s.u.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>()),
    }
}

pub fn member_row(specs: &[ProfileSpec], m: &SequenceMember) -> Result<PythagoreanRow> {
    let total = norms(&m.state);
    let w = norms(&m.radiation);
    let parts: Vec<Norms> = m.components.iter().map(norms).collect();
    let sum = |f: &dyn Fn(&Norms) -> f64| parts.iter().map(f).sum::<f64>();

    let mut cross_grad = 0.0;
    let mut cross_vel = 0.0;
    for j in 0..m.components.len() {
        for k in j + 1..m.components.len() {
            let (a, b) = (&m.components[j], &m.components[k]);
            cross_grad += hdot1_inner(&a.grid, &a.u, &b.u);
            cross_vel += l2_inner(&a.grid, &a.ut, &b.ut);
        }
    }

    let grid = &m.state.grid;
    let mut grouped = FieldState::zeros(grid.clone());
    let mut core = Norms {
        grad: 0.0,
        vel: 0.0,
        lp: 0.0,
    };
    for (spec, (c, nm)) in specs.iter().zip(m.components.iter().zip(&parts)) {
        if spec.is_core() {
            core.grad += nm.grad;
            core.vel += nm.vel;
        } else {
            grouped = grouped.add(c)?;
        }
    }
    let g = norms(&grouped);
    let res_311 = total.grad - core.grad - g.grad - w.grad;
    let res_312 = total.vel - core.vel - g.vel - w.vel;

    let res_39 = total.grad - sum(&|x| x.grad) - w.grad;
    let res_310 = total.vel - sum(&|x| x.vel) - w.vel;
    Ok(PythagoreanRow {
        n: m.n,
        cross_full: cross_grad + cross_vel,
        cross_grad_only: cross_grad,
        res_37: res_39 + res_310,
        res_38: total.lp - sum(&|x| x.lp) - w.lp,
        res_39,
        res_310,
        res_311,
        res_312,
        res_lemma38: if res_311.abs() >= res_312.abs() { res_311 } else { res_312 },
        energy_scale: sum(&|x| x.grad + x.vel) + w.grad + w.vel,
    })
}

/// Residuals of every expansion along `n_range`. Several profiles must be
/// pairwise orthogonal.
pub fn pythagorean_check(
    specs: &[ProfileSpec],
    grid: &Arc<RadialGrid>,
    n_range: &[usize],
    radiation: Option<&FieldState>,
) -> Result<PythagoreanReport> {
    if specs.is_empty() {
        return Err(NlwError::invalid("no profiles given"));
    }
    if specs.len() >= 2 {
        let table = orthogonality_check(specs, n_range)?;
        if let Some(p) = table.pairs.iter().find(|p| !p.orthogonal) {
            return Err(NlwError::invalid(format!(
                "profiles {} and {} are not orthogonal along the index range",
                p.j, p.k
            )));
        }
    }
    let rows = n_range
        .iter()
        .map(|&n| member_row(specs, &synthesize_sequence(specs, grid, n, radiation)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(PythagoreanReport { dim: grid.dim(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleOptions {
    pub dim: Dimension,
    pub r_max: f64,
    pub nodes: usize,
    pub n_range: Vec<usize>,
    /// Seeds tried in order for the profile data.
    pub seeds: Vec<u64>,
    /// delta = delta_fraction * energy scale.
    pub delta_fraction: f64,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        CounterexampleOptions {
            dim: Dimension::THREE,
            r_max: 100.0,
            nodes: 4001,
            n_range: vec![4, 8, 16, 32, 64],
            seeds: (0..8).collect(),
            delta_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleExhibit {
    pub seed: u64,
    pub delta: f64,
    pub energy_scale: f64,
    pub report: PythagoreanReport,
    /// res_39 >= delta at every n.
    pub lower_bound_holds: bool,
    /// res_37 <= delta / 10 at the last n.
    pub full_residual_small: bool,
}

impl CounterexampleExhibit {
    pub fn to_csv(&self) -> String {
        let mut s = self.report.to_csv();
        let _ = writeln!(
            s,
            "# {} seed={} delta={:.6e} energy_scale={:.6e} lower_bound_holds={} full_residual_small={}",
            self.report.dim,
            self.seed,
            self.delta,
            self.energy_scale,
            self.lower_bound_holds,
            self.full_residual_small
        );
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| NlwError::io(path, e))
    }
}

/// Sum of one to three wide shell bumps, so that the grid gradient of every
/// time-shifted copy stays within a small fraction of its true norm.
fn wide_shells(rng: &mut ChaCha8Rng, nodes: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    for _ in 0..rng.random_range(1..=3) {
        let c = rng.random_range(0.0..4.0);
        let s = rng.random_range(1.5..3.0);
        let b = rng.random_range(-1.0..1.0);
        for (o, &r) in out.iter_mut().zip(nodes) {
            *o += b * shell_bump(r, c, s);
        }
    }
    out
}

/// Seeded compact data (u0, u1) on the demo grid.
pub fn counterexample_data(grid: &Arc<RadialGrid>, seed: u64) -> Result<FieldState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = wide_shells(&mut rng, grid.nodes());
    let u1 = wide_shells(&mut rng, grid.nodes());
    FieldState::new(grid.clone(), u0, u1, 0.0)
}

/// Profiles (U0, U1) at t_n = n and its time reversal (U0, -U1) at t_n = -n:
/// both sit on the same shell at time 0, one incoming and one outgoing.
pub fn counterexample_profiles(data: &FieldState) -> Result<[ProfileSpec; 2]> {
    let fwd = ParamSeq {
        scale: Law::constant(1.0),
        time: Law::power(1.0, 1.0),
    };
    let bwd = ParamSeq {
        scale: Law::constant(1.0),
        time: Law::power(-1.0, 1.0),
    };
    Ok([
        ProfileSpec::scattering(data.clone(), fwd)?,
        ProfileSpec::scattering(data.reversed(), bwd)?,
    ])
}

/// Numerical witness that the per-component expansions fail while the full
/// one holds. Errors if no seed produces a persistent gradient cross term.
pub fn counterexample_demo(opts: &CounterexampleOptions) -> Result<CounterexampleExhibit> {
    let grid = RadialGrid::uniform(opts.dim, opts.r_max, opts.nodes)?.into_shared();
    let mut tried = Vec::new();
    for &seed in &opts.seeds {
        let data = counterexample_data(&grid, seed)?;
        let specs = counterexample_profiles(&data)?;
        let report = pythagorean_check(&specs, &grid, &opts.n_range, None)?;
        let energy_scale = report.energy_scale();
        let delta = opts.delta_fraction * energy_scale;
        let lower_bound_holds = report.rows.iter().all(|r| r.res_39 >= delta);
        let full_residual_small = report.rows.last().is_some_and(|r| r.res_37.abs() <= delta / 10.0);
        if lower_bound_holds && full_residual_small {
            return Ok(CounterexampleExhibit {
                seed,
                delta,
                energy_scale,
                report,
                lower_bound_holds,
                full_residual_small,
            });
        }
        tried.push(seed);
    }
    Err(NlwError::Experiment(format!(
        "no seed among {tried:?} keeps the gradient cross term above {} of the energy",
        opts.delta_fraction
    )))
}
