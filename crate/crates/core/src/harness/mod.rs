//! Configuration, experiment orchestration and persistence.

mod config;
mod run;
mod snapshot;

pub use config::{BubbleSpec, Experiment, ExperimentConfig, ExperimentKind, GridSettings, CONFIG_VERSION, MAX_NODES_FOUR};
pub use run::{channel_datum, run, ArtifactRecord, RunManifest, MANIFEST_NAME};
pub use snapshot::{decode_snapshot, encode_snapshot, load_snapshot, save_snapshot, SNAPSHOT_MAGIC};
