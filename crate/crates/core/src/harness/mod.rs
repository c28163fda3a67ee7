//! Configuration, campaign orchestration and report emission.

mod campaign;
mod config;
mod report;
pub mod verify;

pub use campaign::{
    approximation, ensemble_seed, run_experiment, Artifact, CampaignSummary, Check, Provenance, Row,
};
pub use config::{Experiment, ExperimentConfig, Scale};
pub use report::{emit_report, load_summary, rows_from_csv, rows_to_csv, write_outputs, Format};
