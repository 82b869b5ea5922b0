use std::path::Path;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, NsaSweep};
use super::files::{write_json, write_subrequirements_csv, write_subrequirements_json};
use super::ground_truth::{label_cells, load_networks, GroundTruth, Label};
use super::metrics::validate_detectors;
use super::svg::render_region_map;
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::nsa::{generate_detectors, NsaParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub detector_size: usize,
    pub radius: f64,
    pub repetition: usize,
    pub seed: u64,
    pub detector_ids: Vec<usize>,
    pub attempts_used: usize,
    pub tp: usize,
    pub fp: usize,
    pub unknown: usize,
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub detector_size: usize,
    pub radius: f64,
    pub repetitions: usize,
    pub mean_tp: f64,
    pub mean_fp: f64,
    pub min_tp: usize,
    pub max_tp: usize,
    /// Mean over repetitions that had a defined precision.
    pub mean_precision: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSummary {
    pub total: usize,
    pub safe: usize,
    #[serde(rename = "unsafe")]
    pub unsafe_: usize,
    pub unknown: usize,
}

impl GroundTruthSummary {
    pub fn of(gt: &GroundTruth) -> Self {
        Self {
            total: gt.entries.len(),
            safe: gt.count(Label::Safe),
            unsafe_: gt.count(Label::Unsafe),
            unknown: gt.count(Label::Unknown),
        }
    }
}

/// Wall-clock timings; the only non-deterministic part of a report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label_ms: f64,
    pub nsa_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub ground_truth: GroundTruthSummary,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<AggregateRecord>,
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn aggregate(&self, detector_size: usize, radius: f64) -> Option<&AggregateRecord> {
        self.aggregates
            .iter()
            .find(|a| a.detector_size == detector_size && a.radius == radius)
    }
}

pub struct ExperimentOutcome {
    pub cells: Vec<HyperBox<f64>>,
    pub ground_truth: GroundTruth,
    pub report: ExperimentReport,
}

/// Runs NSA for every (detector size, radius, repetition) against a labeled
/// pool and scores the detectors. Repetition `r` uses seed
/// `master_seed + r`.
pub fn run_nsa_sweep(gt: &GroundTruth, sweep: &NsaSweep) -> Result<ExperimentReport> {
    let start = Instant::now();
    let pool = gt.cells()?;
    let self_set = gt.safe_cells()?;
    let mut runs = Vec::new();
    let mut aggregates = Vec::new();
    for &size in &sweep.detector_sizes {
        for &radius in &sweep.radii {
            let mut group = Vec::with_capacity(sweep.repetitions);
            for rep in 0..sweep.repetitions {
                let seed = sweep.master_seed.wrapping_add(rep as u64);
                let record = if size == 0 {
                    RunRecord {
                        detector_size: 0,
                        radius,
                        repetition: rep,
                        seed,
                        detector_ids: vec![],
                        attempts_used: 0,
                        tp: 0,
                        fp: 0,
                        unknown: 0,
                        precision: None,
                    }
                } else {
                    let mut params = NsaParams::new(radius, size, seed);
                    if let Some(m) = sweep.max_attempts {
                        params.max_attempts = m;
                    }
                    let ds = generate_detectors(&pool, &self_set, &params).map_err(|e| {
                        Error::Config(format!(
                            "NSA run (N={size}, r_s={radius}, repetition {rep}, seed {seed}): {e}"
                        ))
                    })?;
                    let ids = ds.ids();
                    let counts = validate_detectors(&ids, gt)?;
                    RunRecord {
                        detector_size: size,
                        radius,
                        repetition: rep,
                        seed,
                        detector_ids: ids,
                        attempts_used: ds.attempts_used,
                        tp: counts.tp,
                        fp: counts.fp,
                        unknown: counts.unknown,
                        precision: counts.precision(),
                    }
                };
                group.push(record);
            }
            aggregates.push(aggregate(size, radius, &group));
            runs.extend(group);
        }
    }
    Ok(ExperimentReport {
        schema_version: crate::SCHEMA_VERSION,
        ground_truth: GroundTruthSummary::of(gt),
        runs,
        aggregates,
        timing: Timing {
            label_ms: 0.0,
            nsa_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

fn aggregate(size: usize, radius: f64, runs: &[RunRecord]) -> AggregateRecord {
    let n = runs.len().max(1) as f64;
    let precisions: Vec<f64> = runs.iter().filter_map(|r| r.precision).collect();
    AggregateRecord {
        detector_size: size,
        radius,
        repetitions: runs.len(),
        mean_tp: runs.iter().map(|r| r.tp as f64).sum::<f64>() / n,
        mean_fp: runs.iter().map(|r| r.fp as f64).sum::<f64>() / n,
        min_tp: runs.iter().map(|r| r.tp).min().unwrap_or(0),
        max_tp: runs.iter().map(|r| r.tp).max().unwrap_or(0),
        mean_precision: (!precisions.is_empty())
            .then(|| precisions.iter().sum::<f64>() / precisions.len() as f64),
    }
}

/// Partition, label and sweep, as configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let networks = load_networks(&cfg.networks)?;
    let cells = cfg.property.cells()?;
    info!(
        "{} sub-requirements × {} networks on {} workers",
        cells.len(),
        networks.len(),
        cfg.worker_count
    );
    let t = Instant::now();
    let gt = label_cells(&networks, &cells, &cfg.property.condition, &cfg.label_options())?;
    let label_ms = t.elapsed().as_secs_f64() * 1e3;
    let mut report = run_nsa_sweep(&gt, &cfg.nsa)?;
    report.timing.label_ms = label_ms;
    Ok(ExperimentOutcome {
        cells,
        ground_truth: gt,
        report,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    detector_size: usize,
    radius: f64,
    repetition: usize,
    seed: u64,
    tp: usize,
    fp: usize,
    unknown: usize,
    precision: Option<f64>,
    attempts_used: usize,
    detector_ids: &'a str,
}

fn write_report_csv(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.runs {
        let ids = r
            .detector_ids
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.serialize(CsvRow {
            detector_size: r.detector_size,
            radius: r.radius,
            repetition: r.repetition,
            seed: r.seed,
            tp: r.tp,
            fp: r.fp,
            unknown: r.unknown,
            precision: r.precision,
            attempts_used: r.attempts_used,
            detector_ids: &ids,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes sub-requirements, ground truth, report (JSON + CSV) and the
/// region map into `dir`.
pub fn write_experiment_outputs(dir: &Path, out: &ExperimentOutcome, plot_dims: [usize; 2]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_subrequirements_json(&dir.join("subrequirements.json"), &out.cells)?;
    write_subrequirements_csv(&dir.join("subrequirements.csv"), &out.cells)?;
    write_json(&dir.join("ground_truth.json"), &out.ground_truth)?;
    write_json(&dir.join("report.json"), &out.report)?;
    write_report_csv(&dir.join("report.csv"), &out.report)?;
    if out.cells.first().map_or(0, HyperBox::dim) >= 2 {
        // Outline the detectors of the first run, if any.
        let ids = out
            .report
            .runs
            .first()
            .map(|r| r.detector_ids.clone())
            .unwrap_or_default();
        let svg = render_region_map(&out.ground_truth, &ids, plot_dims)?;
        let path = dir.join("region_map.svg");
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn run_and_write(&self) -> Result<ExperimentOutcome> {
        let out = run_experiment(self)?;
        write_experiment_outputs(&self.output_dir, &out, self.plot_dims())?;
        Ok(out)
    }
}
