//! Experiment pipeline: partition → label ground truth → NSA sweeps →
//! validation → reports and region map.

mod config;
mod experiment;
mod files;
mod ground_truth;
mod metrics;
mod svg;

pub use config::{ExperimentConfig, LabelOptions, NsaSweep, PropertySpec};
pub use experiment::{
    run_experiment, run_nsa_sweep, write_experiment_outputs, AggregateRecord, ExperimentOutcome,
    ExperimentReport, GroundTruthSummary, RunRecord, Timing,
};
pub use files::{read_json, read_subrequirements, write_json, write_subrequirements_csv, write_subrequirements_json, SubRequirementFile};
pub use ground_truth::{label_cells, label_ground_truth, GroundTruth, GroundTruthEntry, Label, NetworkVerdict};
pub use metrics::{validate_detectors, ValidationCounts};
pub use svg::render_region_map;
