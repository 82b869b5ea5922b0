use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::files::read_json;
use crate::error::{Error, Result};
use crate::geometry::{HyperBox, PartitionSpec};
use crate::verifier::{Backend, ExternalAdapterConfig, OutputCondition};

/// Safety property: input box, unsafe output condition and partitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub bounds: Vec<[f64; 2]>,
    pub condition: OutputCondition<f64>,
    pub split_dims: Vec<usize>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_split_width: Option<f64>,
}

fn schema_version() -> u32 {
    crate::SCHEMA_VERSION
}

impl PropertySpec {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn input_box(&self) -> Result<HyperBox<f64>> {
        HyperBox::from_bounds(&self.bounds)
    }

    pub fn partition_spec(&self) -> PartitionSpec {
        let mut spec = PartitionSpec::new(self.split_dims.clone(), self.n);
        if let Some(w) = self.min_split_width {
            spec.min_split_width = w;
        }
        spec
    }

    pub fn cells(&self) -> Result<Vec<HyperBox<f64>>> {
        crate::geometry::partition(&self.input_box()?, &self.partition_spec())
    }
}

/// NSA parameters swept by an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsaSweep {
    pub detector_sizes: Vec<usize>,
    pub radii: Vec<f64>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Per-run attempt budget; defaults to 50 × detector size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_attempts: Option<usize>,
}

fn one() -> usize {
    1
}

/// Settings for ground-truth labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelOptions {
    pub backend: Backend,
    pub external: Option<ExternalAdapterConfig>,
    pub timeout: Duration,
    /// Samples tried before the complete backend runs; 0 disables.
    pub falsify_samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Builtin,
            external: None,
            timeout: crate::verifier::DEFAULT_TIMEOUT,
            falsify_samples: 1000,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// NNet files; relative paths resolve against the config file.
    pub networks: Vec<PathBuf>,
    pub property: PropertySpec,
    pub nsa: NsaSweep,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalAdapterConfig>,
    #[serde(default = "one")]
    pub worker_count: usize,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_falsify_samples")]
    pub falsify_samples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Dimensions projected in the region map; defaults to the first two
    /// split dimensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_dims: Option<[usize; 2]>,
}

fn default_backend() -> Backend {
    Backend::Builtin
}

fn default_timeout_s() -> f64 {
    crate::verifier::DEFAULT_TIMEOUT.as_secs_f64()
}

fn default_falsify_samples() -> usize {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for n in &mut cfg.networks {
            if n.is_relative() {
                *n = base.join(&*n);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.networks.is_empty() {
            return Err(Error::Config("at least one network is required".into()));
        }
        if self.worker_count == 0 {
            return Err(Error::Config("worker_count must be ≥ 1".into()));
        }
        if !(self.timeout_s > 0.0) {
            return Err(Error::Config(format!("timeout_s must be positive, got {}", self.timeout_s)));
        }
        if self.backend == Backend::External && self.external.is_none() {
            return Err(Error::Config("external backend selected without an adapter".into()));
        }
        let b = self.property.input_box()?;
        let spec = self.property.partition_spec();
        spec.validate(b.dim())?;
        let cells = self.property.n.pow(spec.effective_split_dims(&b).len() as u32);
        if let Some(n) = self.nsa.detector_sizes.iter().find(|n| **n > cells) {
            return Err(Error::Config(format!(
                "detector size {n} exceeds the {cells} partition cells"
            )));
        }
        if self.nsa.radii.is_empty() {
            return Err(Error::Config("at least one radius is required".into()));
        }
        if let Some(r) = self.nsa.radii.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::Config(format!("invalid radius {r}")));
        }
        if let Some([a, c]) = self.plot_dims {
            if a >= b.dim() || c >= b.dim() || a == c {
                return Err(Error::Config(format!("invalid plot_dims [{a}, {c}]")));
            }
        }
        Ok(())
    }

    pub fn label_options(&self) -> LabelOptions {
        LabelOptions {
            backend: self.backend,
            external: self.external.clone(),
            timeout: Duration::from_secs_f64(self.timeout_s),
            falsify_samples: self.falsify_samples,
            seed: self.nsa.master_seed,
            workers: self.worker_count,
        }
    }

    pub fn plot_dims(&self) -> [usize; 2] {
        if let Some(d) = self.plot_dims {
            return d;
        }
        let mut s = self.property.split_dims.clone();
        s.sort_unstable();
        match s.as_slice() {
            [a, b, ..] => [*a, *b],
            [a] => [*a, if *a == 0 { 1.min(self.property.bounds.len() - 1) } else { 0 }],
            [] => [0, 1.min(self.property.bounds.len() - 1)],
        }
    }
}
