use std::collections::HashMap;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LabelOptions};
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::model::{load_nnet, Network};
use crate::verifier::{
    complete_verify, external_verify, falsify_sample, Backend, OutputCondition, Status, Verdict,
    VerificationQuery,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Safe,
    Unsafe,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkVerdict {
    pub network: String,
    pub status: Status,
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub id: usize,
    pub bounds: Vec<[f64; 2]>,
    pub label: Label,
    pub verdicts: Vec<NetworkVerdict>,
}

impl GroundTruthEntry {
    pub fn region(&self) -> Result<HyperBox<f64>> {
        Ok(HyperBox::from_bounds(&self.bounds)?.with_id(self.id))
    }
}

/// Per sub-requirement label, aggregated over every network: UNSAFE if any
/// network is SAT, SAFE if all are UNSAT, UNKNOWN otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: u32,
    pub networks: Vec<String>,
    pub entries: Vec<GroundTruthEntry>,
}

impl GroundTruth {
    pub fn label_of(&self, id: usize) -> Option<Label> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.label)
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    pub fn ids_with(&self, label: Label) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.id)
            .collect()
    }

    pub fn cells(&self) -> Result<Vec<HyperBox<f64>>> {
        self.entries.iter().map(GroundTruthEntry::region).collect()
    }

    /// The self set used to train the detectors.
    pub fn safe_cells(&self) -> Result<Vec<HyperBox<f64>>> {
        self.entries
            .iter()
            .filter(|e| e.label == Label::Safe)
            .map(GroundTruthEntry::region)
            .collect()
    }

    pub fn label_map(&self) -> HashMap<usize, Label> {
        self.entries.iter().map(|e| (e.id, e.label)).collect()
    }
}

pub fn aggregate_label(statuses: impl IntoIterator<Item = Status>) -> Label {
    let mut all_unsat = true;
    for s in statuses {
        match s {
            Status::Sat => return Label::Unsafe,
            Status::Unsat => {}
            Status::Unknown => all_unsat = false,
        }
    }
    if all_unsat {
        Label::Safe
    } else {
        Label::Unknown
    }
}

fn verify_task(
    net: &Network<f64>,
    cell: &HyperBox<f64>,
    condition: &OutputCondition<f64>,
    opts: &LabelOptions,
    seed: u64,
) -> Result<Verdict<f64>> {
    let q = VerificationQuery::new(net, cell.clone(), condition.clone())?
        .with_timeout(opts.timeout)
        .with_backend(opts.backend);
    if opts.falsify_samples > 0 || opts.backend == Backend::Sampler {
        let v = falsify_sample(&q, opts.falsify_samples, seed);
        if v.is_sat() || opts.backend == Backend::Sampler {
            return Ok(v);
        }
    }
    match opts.backend {
        Backend::Builtin => Ok(complete_verify(&q)),
        Backend::External => {
            let adapter = opts
                .external
                .as_ref()
                .ok_or_else(|| Error::Config("external backend selected without an adapter".into()))?;
            external_verify(&q, adapter)
        }
        Backend::Sampler => unreachable!("handled above"),
    }
}

/// Labels every cell against every network on a pool of `opts.workers`
/// threads. Results are keyed by (cell, network) before aggregation, so the
/// outcome does not depend on scheduling.
pub fn label_cells(
    networks: &[(String, Network<f64>)],
    cells: &[HyperBox<f64>],
    condition: &OutputCondition<f64>,
    opts: &LabelOptions,
) -> Result<GroundTruth> {
    if networks.is_empty() {
        return Err(Error::Config("at least one network is required".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let n_nets = networks.len();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..n_nets).map(move |n| (c, n)))
        .collect();
    let results: Vec<Result<Verdict<f64>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, n)| {
                let seed = opts.seed.wrapping_add((c * n_nets + n) as u64);
                verify_task(&networks[n].1, &cells[c], condition, opts, seed).map_err(|e| {
                    Error::Config(format!(
                        "sub-requirement {} on network {}: {e}",
                        cells[c].id().unwrap_or(c),
                        networks[n].0
                    ))
                })
            })
            .collect()
    });

    let mut results = results.into_iter();
    let mut entries = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let mut verdicts = Vec::with_capacity(n_nets);
        for (name, _) in networks {
            let v = results.next().expect("one result per task")?;
            verdicts.push(NetworkVerdict {
                network: name.clone(),
                status: v.status,
                backend: v.backend,
                witness: v.witness,
            });
        }
        let label = aggregate_label(verdicts.iter().map(|v| v.status));
        let id = cell.id().unwrap_or(c);
        if verdicts.iter().all(|v| v.status == Status::Unknown) {
            warn!("sub-requirement {id}: every verdict is unknown; left unlabeled");
        }
        entries.push(GroundTruthEntry {
            id,
            bounds: cell.bounds(),
            label,
            verdicts,
        });
    }
    let gt = GroundTruth {
        schema_version: crate::SCHEMA_VERSION,
        networks: networks.iter().map(|(n, _)| n.clone()).collect(),
        entries,
    };
    info!(
        "ground truth: {} safe, {} unsafe, {} unknown",
        gt.count(Label::Safe),
        gt.count(Label::Unsafe),
        gt.count(Label::Unknown)
    );
    Ok(gt)
}

pub fn load_networks(paths: &[std::path::PathBuf]) -> Result<Vec<(String, Network<f64>)>> {
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, load_nnet(p)?))
        })
        .collect()
}

/// Partitions the configured property and labels every cell.
pub fn label_ground_truth(cfg: &ExperimentConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let networks = load_networks(&cfg.networks)?;
    let cells = cfg.property.cells()?;
    label_cells(&networks, &cells, &cfg.property.condition, &cfg.label_options())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_rule() {
        use Status::*;
        assert_eq!(aggregate_label([Unsat, Sat, Unknown]), Label::Unsafe);
        assert_eq!(aggregate_label([Unsat, Unsat]), Label::Safe);
        assert_eq!(aggregate_label([Unsat, Unknown]), Label::Unknown);
        assert_eq!(aggregate_label([Unknown]), Label::Unknown);
    }

    #[test]
    fn zero_networks_is_a_config_error() {
        let cells = vec![HyperBox::from_bounds(&[[0.0, 1.0]]).unwrap()];
        let cond = OutputCondition::single(crate::verifier::LinearConstraint::le(vec![1.0], 0.0));
        let err = label_cells(&[], &cells, &cond, &LabelOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
