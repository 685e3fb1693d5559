use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::fixtures::Fixtures;
use crate::functionals::sampler::{sample_compact_field, SamplerConfig};
use crate::functionals::{run_property_suite, FieldState, RadialGrid, Thresholds};
use crate::groundstate::{soliton_field, Sign, SolitonParams};
use crate::harness::config::{BubbleSpec, Experiment, ExperimentConfig};
use crate::harness::snapshot::{encode_snapshot, load_snapshot};
use crate::linwave::channel_verdict;
use crate::nlwsolver::{
    classify_dynamic, concentration_report, modulated_bubble_trajectory, Budget, StaticThresholds, Termination,
    Trajectory,
};
use crate::profiles::{counterexample_demo, fit_bubbles, CounterexampleOptions};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Path relative to the output directory.
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub experiment: String,
    pub dim: Dimension,
    pub seed: u64,
    pub fixtures_path: PathBuf,
    pub fixtures: Vec<String>,
    /// Every file written besides the manifest itself.
    pub files: Vec<ArtifactRecord>,
    pub timings_s: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, String>,
    /// Module errors met along the way; outputs written before them are kept.
    pub errors: Vec<String>,
    pub falsifications: usize,
}

impl RunManifest {
    pub fn aborted(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// The only writer for one output directory.
struct OutputDir {
    root: PathBuf,
    files: Vec<ArtifactRecord>,
}

impl OutputDir {
    fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| NlwError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| NlwError::io(&path, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(ArtifactRecord {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: OutputDir,
    fixtures: Fixtures,
    timings: BTreeMap<String, f64>,
    verdicts: BTreeMap<String, String>,
    errors: Vec<String>,
    falsifications: usize,
}

impl Run<'_> {
    fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        self.timings.insert(label.to_string(), start.elapsed().as_secs_f64());
        v
    }

    fn record_error(&mut self, stage: &str, e: NlwError) {
        self.errors.push(format!("{stage}: {e}"));
    }

    fn grid(&self) -> Result<Arc<RadialGrid>> {
        self.cfg.grid_settings().build(self.cfg.dim)
    }
}

/// Runs the configured experiment into `cfg.output_dir`. Config problems and
/// an unusable output directory are errors; failures inside the numerical
/// modules are recorded in the manifest instead.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let fixtures_path = Fixtures::default_path();
    let fixtures = Fixtures::load(&fixtures_path)?;
    let mut run = Run {
        cfg,
        out: OutputDir::create(&cfg.output_dir)?,
        fixtures,
        timings: BTreeMap::new(),
        verdicts: BTreeMap::new(),
        errors: Vec::new(),
        falsifications: 0,
    };
    run.out.write("config.json", cfg.identity().to_json().as_bytes())?;

    let label = cfg.experiment.kind().label();
    let outcome = match &cfg.experiment {
        Experiment::Dichotomy {
            amplitudes,
            input,
            save_snapshots,
        } => dichotomy(&mut run, amplitudes, input.as_deref(), *save_snapshots),
        Experiment::Channels { count, horizon } => channels(&mut run, *count, *horizon),
        Experiment::Decompose {
            input,
            bubbles,
            j_max,
            fit,
        } => decompose(&mut run, input.as_deref(), bubbles, *j_max, fit),
        Experiment::VerifyInequalities { samples, slack } => verify(&mut run, *samples, *slack),
        Experiment::Counterexample {
            n_range,
            seeds,
            delta_fraction,
        } => counterexample(&mut run, n_range, seeds.as_deref(), *delta_fraction),
        Experiment::Concentration {
            samples,
            last_gap,
            exponent,
        } => concentration(&mut run, *samples, *last_gap, *exponent),
    };
    if let Err(e) = outcome {
        run.record_error(label, e);
    }

    let manifest = RunManifest {
        config_hash: cfg.hash(),
        experiment: label.to_string(),
        dim: cfg.dim,
        seed: cfg.seed,
        fixtures_path,
        fixtures: run.fixtures.summary(),
        files: run.out.files.clone(),
        timings_s: run.timings,
        verdicts: run.verdicts,
        errors: run.errors,
        falsifications: run.falsifications,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| NlwError::Format(e.to_string()))?;
    let path = cfg.output_dir.join(MANIFEST_NAME);
    std::fs::write(&path, text).map_err(|e| NlwError::io(&path, e))?;
    Ok(manifest)
}

fn termination_label(t: &Termination) -> String {
    match *t {
        Termination::HorizonReached => "horizon_reached".into(),
        Termination::BlowUpDetected { t_est } => format!("blow_up t_est={t_est:.6}"),
        Termination::ScatterDetected { t } => format!("scatter t={t:.6}"),
        Termination::EnergyDriftAbort { t, drift } => format!("drift_abort t={t:.6} drift={drift:.3e}"),
        Termination::RefinementExhausted { t } => format!("refinement_exhausted t={t:.6}"),
        Termination::StepBudgetExhausted { t } => format!("step_budget t={t:.6}"),
    }
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,dt,energy,drift,norm_ratio,max_abs,local_fraction,snorm_increment\n");
    for r in &traj.records {
        let _ = writeln!(
            s,
            "{:.9e},{:.9e},{:.12e},{:.6e},{:.9e},{:.9e},{:.9e},{:.9e}",
            r.t, r.dt, r.energy, r.drift, r.norm_ratio, r.max_abs, r.local_fraction, r.snorm_increment
        );
    }
    s
}

fn dichotomy(run: &mut Run, amplitudes: &[f64], input: Option<&Path>, save: bool) -> Result<()> {
    let base = match input {
        Some(p) => load_snapshot(p)?,
        None => soliton_field(&SolitonParams::radial(Sign::Plus, 1.0)?, run.grid()?, 1)?,
    };
    if base.dim() != run.cfg.dim {
        return Err(NlwError::GridMismatch(format!("snapshot in {}, config in {}", base.dim(), run.cfg.dim)));
    }
    let th = StaticThresholds::calibrated(&base.grid)?;
    let s = &run.cfg.solver;
    let budget = Budget {
        horizon: s.horizon,
        max_steps: s.max_steps,
        max_refinements: s.max_refinements,
    };
    let mut table = String::from("index,amplitude,static,dynamic,termination,t_end,energy_margin,gradient_margin\n");
    for (i, &a) in amplitudes.iter().enumerate() {
        let data = base.scaled(a);
        let solver = run.cfg.solver.clone();
        let res = run.timed(&format!("evolve_{i:02}"), || classify_dynamic(&data, &th, &budget, &solver));
        let (v, traj) = match res {
            Ok(x) => x,
            Err(e) => {
                run.record_error(&format!("amplitude {a}"), e);
                continue;
            }
        };
        run.out.write(&format!("trajectory_{i:02}.csv"), trajectory_csv(&traj).as_bytes())?;
        if save {
            run.out.write(&format!("final_{i:02}.nlw"), &encode_snapshot(traj.final_state()))?;
        }
        let _ = writeln!(
            table,
            "{i},{a},{:?},{:?},{},{:.9e},{:.9e},{:.9e}",
            v.static_verdict,
            v.dynamic_verdict,
            termination_label(&traj.termination),
            traj.final_time(),
            v.margins.energy,
            v.margins.gradient
        );
        run.verdicts
            .insert(format!("a={a}"), format!("{:?}/{:?}", v.static_verdict, v.dynamic_verdict));
    }
    run.out.write("verdicts.csv", table.as_bytes())
}

/// Seeded free-wave data for the channel sweep.
pub fn channel_datum(grid: &Arc<RadialGrid>, seed: u64) -> Result<FieldState> {
    let u0 = sample_compact_field(grid.clone(), seed.wrapping_mul(2));
    let u1 = sample_compact_field(grid.clone(), seed.wrapping_mul(2).wrapping_add(1));
    FieldState::new(grid.clone(), u0.u, u1.u, 0.0)
}

fn channels(run: &mut Run, count: usize, horizon: Option<f64>) -> Result<()> {
    let grid = run.grid()?;
    let base = run.cfg.seed;
    let rows = run.timed("channels", || {
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let seed = base.wrapping_add(i);
                channel_verdict(&channel_datum(&grid, seed)?, horizon).map(|r| (seed, r))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut s = String::from("seed,plateau_fwd,plateau_bwd,max_asymptotic\n");
    for (seed, r) in &rows {
        let _ = writeln!(s, "{seed},{:.12e},{:.12e},{:.12e}", r.plateau_fwd, r.plateau_bwd, r.max_asymptotic);
    }
    let lo = rows.iter().map(|(_, r)| r.max_asymptotic).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|(_, r)| r.max_asymptotic).fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(s, "# {} count={count} min={lo:.9} max={hi:.9}", run.cfg.dim);
    run.verdicts.insert("min_max_asymptotic".into(), format!("{lo:.9}"));
    run.verdicts.insert("max_max_asymptotic".into(), format!("{hi:.9}"));
    run.out.write("channels.csv", s.as_bytes())
}

fn decompose(
    run: &mut Run,
    input: Option<&Path>,
    bubbles: &[BubbleSpec],
    j_max: usize,
    fit: &crate::profiles::FitOptions,
) -> Result<()> {
    let state = match input {
        Some(p) => load_snapshot(p)?,
        None => {
            let grid = run.grid()?;
            let mut s = FieldState::zeros(grid.clone());
            for b in bubbles {
                s = s.add(&soliton_field(&SolitonParams::radial(b.sign, b.scale)?, grid.clone(), 1)?)?;
            }
            s
        }
    };
    let res = run.timed("fit", || fit_bubbles(&state, j_max, fit))?;
    run.out.write("decomposition.json", res.to_json()?.as_bytes())?;
    run.out.write("residual.nlw", &encode_snapshot(&res.residual))?;
    run.verdicts.insert("bubbles".into(), res.bubbles.len().to_string());
    run.verdicts.insert("accepted".into(), res.accepted.to_string());
    Ok(())
}

fn verify(run: &mut Run, samples: usize, slack: Option<f64>) -> Result<()> {
    let grid = run.grid()?;
    let th = Thresholds::new(run.cfg.dim, run.fixtures.grad_sq(run.cfg.dim)?)?;
    let th = match slack {
        Some(s) => th.with_slack(s),
        None => th.with_grid_slack(&grid),
    };
    let seed = run.cfg.seed;
    let rep = run.timed("suite", || run_property_suite(grid, &th, &SamplerConfig::default(), seed, samples))?;
    run.out.write("verify_rows.csv", rep.to_csv().as_bytes())?;
    let mut s = String::from("lemma,hypothesis_hits,falsifications,min_conclusion_margin\n");
    for (lemma, t) in &rep.tallies {
        let m = t.min_conclusion_margin.map_or("".to_string(), |m| format!("{m:.9e}"));
        let _ = writeln!(s, "{},{},{},{m}", lemma.label(), t.hypothesis_hits, t.falsifications);
        run.verdicts
            .insert(lemma.label().to_string(), format!("hits={} falsified={}", t.hypothesis_hits, t.falsifications));
    }
    let _ = writeln!(s, "# {} samples={samples} slack={:.6e}", run.cfg.dim, rep.slack);
    run.out.write("verify_tallies.csv", s.as_bytes())?;
    run.falsifications = rep.falsifications();
    Ok(())
}

fn counterexample(run: &mut Run, n_range: &[usize], seeds: Option<&[u64]>, delta_fraction: f64) -> Result<()> {
    let g = run.cfg.grid_settings();
    let opts = CounterexampleOptions {
        dim: run.cfg.dim,
        r_max: g.r_max,
        nodes: g.nodes,
        n_range: n_range.to_vec(),
        seeds: seeds.map_or_else(|| (run.cfg.seed..run.cfg.seed + 8).collect(), <[u64]>::to_vec),
        delta_fraction,
    };
    let ex = run.timed("demo", || counterexample_demo(&opts))?;
    run.out.write("counterexample.csv", ex.to_csv().as_bytes())?;
    run.verdicts.insert("seed".into(), ex.seed.to_string());
    run.verdicts
        .insert("gradient_residual_bounded_below".into(), ex.lower_bound_holds.to_string());
    run.verdicts.insert("full_residual_small".into(), ex.full_residual_small.to_string());
    Ok(())
}

fn concentration(run: &mut Run, samples: usize, last_gap: f64, exponent: f64) -> Result<()> {
    let grid = run.grid()?;
    let gw = run.fixtures.grad_sq(run.cfg.dim)?;
    let times: Vec<f64> = (0..samples)
        .map(|i| 1.0 - last_gap.powf(i as f64 / (samples - 1) as f64))
        .collect();
    let modulated = modulated_bubble_trajectory(&grid, &times, 1.0, |t| {
        let s = 1.0 - t;
        (s.powf(exponent), -exponent * s.powf(exponent - 1.0))
    })?;
    let fixed = modulated_bubble_trajectory(&grid, &times, 1.0, |_| (1.0, 0.0))?;
    for (name, traj) in [("modulated", &modulated), ("fixed", &fixed)] {
        let rep = concentration_report(traj, gw)?;
        run.out.write(&format!("concentration_{name}.csv"), rep.to_csv().as_bytes())?;
        run.verdicts.insert(format!("{name}_liminf_a_over_g"), format!("{:.9}", rep.liminf_a / gw));
        run.verdicts
            .insert(format!("{name}_a_bound"), rep.a_bound_holds(1e-2 * gw).to_string());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writer_records_every_file_once() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.csv", b"x\n").unwrap();
        out.write("a.csv", b"xy\n").unwrap();
        out.write("b.csv", b"").unwrap();
        assert_eq!(out.files.len(), 2);
        assert_eq!(out.files[0].bytes, 3);
        assert_eq!(
            out.files[1].sha256,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
