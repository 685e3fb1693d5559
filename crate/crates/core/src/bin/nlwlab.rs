use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlw_core::harness::{run, Experiment, ExperimentConfig, ExperimentKind, RunManifest};
use nlw_core::{Dimension, NlwError};

const EXIT_CONFIG: u8 = 2;
const EXIT_ABORT: u8 = 3;
const EXIT_FALSIFIED: u8 = 4;

#[derive(Parser)]
#[command(name = "nlwlab", version, about = "Radial energy-critical wave experiments")]
struct Cli {
    /// JSON experiment config; its kind must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for sampled data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Space dimension: 3, 4 or 5.
    #[arg(long, global = true)]
    dim: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a multiple of W, or of a snapshot, and keep the final state.
    Simulate {
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// NLW1 snapshot to scale instead of W.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Static and dynamic verdicts for a list of W multiples.
    Classify {
        #[arg(long, value_delimiter = ',')]
        amplitudes: Vec<f64>,
    },
    /// Exterior-energy plateaus of seeded free waves.
    Channels {
        #[arg(long)]
        count: Option<usize>,
    },
    /// Fit +-W bubbles to a snapshot or to the configured bubble sum.
    Decompose {
        /// NLW1 snapshot to decompose.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Most bubbles to extract.
        #[arg(long)]
        j_max: Option<usize>,
    },
    /// Sample states and evaluate every variational inequality.
    Verify {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Two time-reversed scattering profiles whose gradient cross term persists.
    DemoCounterexample,
    /// Light-cone energies of a modulated and a fixed bubble.
    Concentration,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Simulate { .. } | Command::Classify { .. } => ExperimentKind::Dichotomy,
            Command::Channels { .. } => ExperimentKind::Channels,
            Command::Decompose { .. } => ExperimentKind::Decompose,
            Command::Verify { .. } => ExperimentKind::VerifyInequalities,
            Command::DemoCounterexample => ExperimentKind::Counterexample,
            Command::Concentration => ExperimentKind::Concentration,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, NlwError> {
    let kind = cli.command.kind();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default_for(kind),
    };
    if cfg.experiment.kind() != kind {
        return Err(NlwError::Config {
            path: "experiment.kind".into(),
            message: format!("config describes `{}`, not `{}`", cfg.experiment.kind().label(), kind.label()),
        });
    }
    if let Some(d) = cli.dim {
        cfg.dim = Dimension::new(d).map_err(|e| NlwError::Config {
            path: "dim".into(),
            message: e.to_string(),
        })?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    match (&cli.command, &mut cfg.experiment) {
        (
            Command::Simulate {
                amplitude,
                input,
                horizon,
            },
            Experiment::Dichotomy {
                amplitudes,
                input: inp,
                save_snapshots,
            },
        ) => {
            *amplitudes = vec![*amplitude];
            *save_snapshots = true;
            if input.is_some() {
                inp.clone_from(input);
            }
            if let Some(h) = horizon {
                cfg.solver.horizon = *h;
            }
        }
        (Command::Classify { amplitudes: a }, Experiment::Dichotomy { amplitudes, .. }) if !a.is_empty() => {
            amplitudes.clone_from(a);
        }
        (Command::Channels { count: Some(c) }, Experiment::Channels { count, .. }) => *count = *c,
        (Command::Decompose { input, j_max: jm }, Experiment::Decompose { input: inp, j_max, .. }) => {
            if input.is_some() {
                inp.clone_from(input);
            }
            if let Some(j) = jm {
                *j_max = *j;
            }
        }
        (Command::Verify { samples: Some(s) }, Experiment::VerifyInequalities { samples, .. }) => *samples = *s,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(m: &RunManifest) {
    println!("experiment {} ({}, seed {})", m.experiment, m.dim, m.seed);
    for (k, v) in &m.verdicts {
        println!("  {k}: {v}");
    }
    for f in &m.files {
        println!("  wrote {} ({} bytes)", f.name, f.bytes);
    }
    for e in &m.errors {
        eprintln!("  error: {e}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("nlwlab: {e}");
            return ExitCode::from(if matches!(e, NlwError::Config { .. }) { EXIT_CONFIG } else { EXIT_ABORT });
        }
    };
    match run(&cfg) {
        Ok(m) => {
            report(&m);
            if m.aborted() {
                ExitCode::from(EXIT_ABORT)
            } else if m.falsifications > 0 {
                ExitCode::from(EXIT_FALSIFIED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("nlwlab: {e}");
            ExitCode::from(if matches!(e, NlwError::Config { .. }) { EXIT_CONFIG } else { EXIT_ABORT })
        }
    }
}
