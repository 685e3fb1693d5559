use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::RadialGrid;
use crate::groundstate::Sign;
use crate::nlwsolver::SolverSettings;
use crate::profiles::FitOptions;

pub const CONFIG_VERSION: u32 = 1;
/// The N = 4 spectral basis is dense.
pub const MAX_NODES_FOUR: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub dim: Dimension,
    /// Absent: the experiment's own default grid.
    #[serde(default)]
    pub grid: Option<GridSettings>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub experiment: Experiment,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("nlw-out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub r_max: f64,
    pub nodes: usize,
    /// sinh stretch parameter; absent for a uniform grid.
    #[serde(default)]
    pub stretch: Option<f64>,
}

impl GridSettings {
    pub fn build(&self, dim: Dimension) -> Result<Arc<RadialGrid>> {
        let g = match self.stretch {
            None => RadialGrid::uniform(dim, self.r_max, self.nodes)?,
            Some(c) => RadialGrid::stretched(dim, self.r_max, self.nodes, c)?,
        };
        Ok(g.into_shared())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleSpec {
    pub sign: Sign,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Evolve a * (snapshot or W) for each amplitude and compare verdicts.
    Dichotomy {
        #[serde(default = "default_amplitudes")]
        amplitudes: Vec<f64>,
        #[serde(default)]
        input: Option<PathBuf>,
        #[serde(default)]
        save_snapshots: bool,
    },
    /// Exterior-energy plateaus of `count` seeded free waves.
    Channels {
        #[serde(default = "default_channel_count")]
        count: usize,
        #[serde(default)]
        horizon: Option<f64>,
    },
    /// Bubble fit of a snapshot, or of a synthesized bubble sum.
    Decompose {
        #[serde(default)]
        input: Option<PathBuf>,
        #[serde(default = "default_bubbles")]
        bubbles: Vec<BubbleSpec>,
        #[serde(default = "default_j_max")]
        j_max: usize,
        #[serde(default)]
        fit: FitOptions,
    },
    VerifyInequalities {
        #[serde(default = "default_verify_samples")]
        samples: usize,
        /// Absent: slack from the grid resolution.
        #[serde(default)]
        slack: Option<f64>,
    },
    Counterexample {
        #[serde(default = "default_n_range")]
        n_range: Vec<usize>,
        /// Absent: eight seeds starting at the run seed.
        #[serde(default)]
        seeds: Option<Vec<u64>>,
        #[serde(default = "default_delta_fraction")]
        delta_fraction: f64,
    },
    /// Modulated bubble lambda(t) = (1 - t)^exponent against a fixed one.
    Concentration {
        #[serde(default = "default_concentration_samples")]
        samples: usize,
        #[serde(default = "default_last_gap")]
        last_gap: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
}

fn default_amplitudes() -> Vec<f64> {
    vec![0.8, 1.2]
}
fn default_channel_count() -> usize {
    100
}
fn default_bubbles() -> Vec<BubbleSpec> {
    vec![
        BubbleSpec {
            sign: Sign::Plus,
            scale: 1.0,
        },
        BubbleSpec {
            sign: Sign::Minus,
            scale: 0.01,
        },
    ]
}
fn default_j_max() -> usize {
    4
}
fn default_verify_samples() -> usize {
    10_000
}
fn default_n_range() -> Vec<usize> {
    vec![4, 8, 16, 32, 64]
}
fn default_delta_fraction() -> f64 {
    0.01
}
fn default_concentration_samples() -> usize {
    60
}
fn default_last_gap() -> f64 {
    1e-4
}
fn default_exponent() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Dichotomy,
    Channels,
    Decompose,
    VerifyInequalities,
    Counterexample,
    Concentration,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Dichotomy => "dichotomy",
            ExperimentKind::Channels => "channels",
            ExperimentKind::Decompose => "decompose",
            ExperimentKind::VerifyInequalities => "verify_inequalities",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Concentration => "concentration",
        }
    }
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Dichotomy { .. } => ExperimentKind::Dichotomy,
            Experiment::Channels { .. } => ExperimentKind::Channels,
            Experiment::Decompose { .. } => ExperimentKind::Decompose,
            Experiment::VerifyInequalities { .. } => ExperimentKind::VerifyInequalities,
            Experiment::Counterexample { .. } => ExperimentKind::Counterexample,
            Experiment::Concentration { .. } => ExperimentKind::Concentration,
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Dichotomy => Experiment::Dichotomy {
                amplitudes: default_amplitudes(),
                input: None,
                save_snapshots: false,
            },
            ExperimentKind::Channels => Experiment::Channels {
                count: default_channel_count(),
                horizon: None,
            },
            ExperimentKind::Decompose => Experiment::Decompose {
                input: None,
                bubbles: default_bubbles(),
                j_max: default_j_max(),
                fit: FitOptions::default(),
            },
            ExperimentKind::VerifyInequalities => Experiment::VerifyInequalities {
                samples: default_verify_samples(),
                slack: None,
            },
            ExperimentKind::Counterexample => Experiment::Counterexample {
                n_range: default_n_range(),
                seeds: None,
                delta_fraction: default_delta_fraction(),
            },
            ExperimentKind::Concentration => Experiment::Concentration {
                samples: default_concentration_samples(),
                last_gap: default_last_gap(),
                exponent: default_exponent(),
            },
        }
    }
}

fn config_err(path: &str, message: impl Into<String>) -> NlwError {
    NlwError::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn default_for(kind: ExperimentKind) -> Self {
        let dim = match kind {
            ExperimentKind::Channels | ExperimentKind::Counterexample => Dimension::THREE,
            _ => Dimension::FIVE,
        };
        ExperimentConfig {
            version: CONFIG_VERSION,
            dim,
            grid: None,
            solver: SolverSettings::default(),
            seed: 0,
            output_dir: default_output_dir(),
            experiment: Experiment::default_for(kind),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NlwError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The config with its output directory blanked: where results go is not
    /// part of what is computed.
    pub fn identity(&self) -> ExperimentConfig {
        ExperimentConfig {
            output_dir: PathBuf::from("."),
            ..self.clone()
        }
    }

    /// sha256 of the compact JSON form of the identity.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.identity()).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Explicit grid, or the experiment's default for this dimension.
    pub fn grid_settings(&self) -> GridSettings {
        if let Some(g) = self.grid {
            return g;
        }
        let four = self.dim == Dimension::FOUR;
        let uniform = |r_max: f64, nodes: usize| GridSettings {
            r_max,
            nodes: if four { nodes.min(2001) } else { nodes },
            stretch: None,
        };
        match self.experiment.kind() {
            ExperimentKind::Dichotomy => uniform(80.0, 4097),
            ExperimentKind::Channels | ExperimentKind::VerifyInequalities => uniform(40.0, 2001),
            ExperimentKind::Counterexample => uniform(100.0, 4001),
            ExperimentKind::Decompose => GridSettings {
                r_max: 100.0,
                nodes: 4001,
                stretch: Some(1e-4),
            },
            ExperimentKind::Concentration => GridSettings {
                r_max: 10.0,
                nodes: 4001,
                stretch: Some(1e-8),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(config_err(
                "version",
                format!("unsupported schema version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        self.solver.validate()?;
        let g = self.grid_settings();
        if !(g.r_max > 0.0 && g.r_max.is_finite()) {
            return Err(config_err("grid.r_max", format!("must be positive, got {}", g.r_max)));
        }
        if g.nodes < 16 {
            return Err(config_err("grid.nodes", format!("at least 16, got {}", g.nodes)));
        }
        if let Some(c) = g.stretch {
            if !(c > 0.0 && c.is_finite()) {
                return Err(config_err("grid.stretch", format!("must be positive, got {c}")));
            }
        }
        let kind = self.experiment.kind();
        let spectral = matches!(
            kind,
            ExperimentKind::Dichotomy | ExperimentKind::Channels | ExperimentKind::Counterexample
        );
        if spectral && g.stretch.is_some() {
            return Err(config_err("grid.stretch", format!("{} needs a uniform grid", kind.label())));
        }
        if spectral && self.dim == Dimension::FOUR && g.nodes > MAX_NODES_FOUR {
            return Err(config_err(
                "grid.nodes",
                format!("at most {MAX_NODES_FOUR} in four dimensions, got {}", g.nodes),
            ));
        }
        match &self.experiment {
            Experiment::Dichotomy { amplitudes, .. } => {
                if amplitudes.is_empty() || amplitudes.iter().any(|a| !a.is_finite()) {
                    return Err(config_err("experiment.amplitudes", "need at least one finite amplitude"));
                }
            }
            Experiment::Channels { count, horizon } => {
                if *count == 0 {
                    return Err(config_err("experiment.count", "must be positive"));
                }
                if let Some(h) = horizon {
                    if !(*h > 0.0 && *h < g.r_max) {
                        return Err(config_err("experiment.horizon", format!("must lie in (0, r_max), got {h}")));
                    }
                }
            }
            Experiment::Decompose { bubbles, fit, .. } => {
                if bubbles.iter().any(|b| !(b.scale > 0.0 && b.scale.is_finite())) {
                    return Err(config_err("experiment.bubbles", "bubble scales must be positive"));
                }
                if !(fit.lambda_max > 0.0) || fit.ladder_per_decade == 0 || fit.decades == 0 {
                    return Err(config_err("experiment.fit", "ladder must be nonempty with a positive top"));
                }
                if !(fit.correlation_threshold > 0.0 && fit.correlation_threshold < 1.0) {
                    return Err(config_err("experiment.fit.correlation_threshold", "must lie in (0, 1)"));
                }
            }
            Experiment::VerifyInequalities { samples, slack } => {
                if *samples == 0 {
                    return Err(config_err("experiment.samples", "must be positive"));
                }
                if let Some(s) = slack {
                    if !(*s >= 0.0 && s.is_finite()) {
                        return Err(config_err("experiment.slack", format!("must be nonnegative, got {s}")));
                    }
                }
            }
            Experiment::Counterexample {
                n_range,
                seeds,
                delta_fraction,
            } => {
                if n_range.len() < 2 || n_range.windows(2).any(|w| w[1] <= w[0]) || n_range[0] == 0 {
                    return Err(config_err("experiment.n_range", "need two or more increasing positive indices"));
                }
                if seeds.as_ref().is_some_and(|s| s.is_empty()) {
                    return Err(config_err("experiment.seeds", "must not be empty"));
                }
                if !(*delta_fraction > 0.0 && *delta_fraction < 1.0) {
                    return Err(config_err("experiment.delta_fraction", "must lie in (0, 1)"));
                }
            }
            Experiment::Concentration {
                samples,
                last_gap,
                exponent,
            } => {
                if *samples < 8 {
                    return Err(config_err("experiment.samples", format!("at least 8, got {samples}")));
                }
                if !(*last_gap > 0.0 && *last_gap < 1.0) {
                    return Err(config_err("experiment.last_gap", "must lie in (0, 1)"));
                }
                if !(*exponent > 1.0 && exponent.is_finite()) {
                    return Err(config_err("experiment.exponent", "must exceed 1"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_of(e: NlwError) -> String {
        match e {
            NlwError::Config { path, .. } => path,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn defaults_round_trip_through_json() {
        for kind in [
            ExperimentKind::Dichotomy,
            ExperimentKind::Channels,
            ExperimentKind::Decompose,
            ExperimentKind::VerifyInequalities,
            ExperimentKind::Counterexample,
            ExperimentKind::Concentration,
        ] {
            let c = ExperimentConfig::default_for(kind);
            c.validate().unwrap();
            let back = ExperimentConfig::parse(&c.to_json()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.hash(), c.hash());
            assert_eq!(back.experiment.kind(), kind);
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::parse(r#"{"version":1,"dim":3,"experiment":{"kind":"channels"}}"#).unwrap();
        assert_eq!(c.experiment, Experiment::default_for(ExperimentKind::Channels));
        assert_eq!(c.solver, SolverSettings::default());
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"version":1,"dim":3,"colour":1,"experiment":{"kind":"channels"}}"#, "colour"),
            (r#"{"version":1,"dim":3,"experiment":{"kind":"channels","cont":3}}"#, "experiment"),
            (r#"{"version":1,"dim":7,"experiment":{"kind":"channels"}}"#, "dim"),
            (r#"{"version":1,"dim":3,"solver":{"dt_factor":"x"},"experiment":{"kind":"channels"}}"#, "solver.dt_factor"),
            (r#"{"version":2,"dim":3,"experiment":{"kind":"channels"}}"#, "version"),
            (r#"{"version":1,"dim":3,"solver":{"dt_factor":0.9},"experiment":{"kind":"channels"}}"#, "solver.dt_factor"),
            (r#"{"version":1,"dim":3,"grid":{"r_max":-1,"nodes":100},"experiment":{"kind":"channels"}}"#, "grid.r_max"),
            (r#"{"version":1,"dim":4,"grid":{"r_max":40,"nodes":4001},"experiment":{"kind":"dichotomy"}}"#, "grid.nodes"),
            (r#"{"version":1,"dim":3,"experiment":{"kind":"counterexample","n_range":[8,4]}}"#, "experiment.n_range"),
            (r#"{"version":1,"dim":5,"experiment":{"kind":"concentration","exponent":0.5}}"#, "experiment.exponent"),
            (r#"{"version":1,"dim":5,"experiment":{"kind":"teleport"}}"#, "experiment.kind"),
        ];
        for (text, want) in cases {
            let got = path_of(ExperimentConfig::parse(text).unwrap_err());
            assert_eq!(got, want, "{text}");
        }
    }

    #[test]
    fn four_dimensional_defaults_fit_the_dense_basis() {
        let mut c = ExperimentConfig::default_for(ExperimentKind::Dichotomy);
        c.dim = Dimension::FOUR;
        c.validate().unwrap();
        assert!(c.grid_settings().nodes <= MAX_NODES_FOUR);
    }
}
