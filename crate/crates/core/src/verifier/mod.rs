//! Decides whether some input in a box drives the network into an unsafe
//! output region.
//!
//! Three backends share one query/verdict vocabulary:
//!
//! * [`complete_verify`]: interval bound propagation plus input-box
//!   branch-and-bound, exact on regions where every ReLU is phase-stable.
//! * [`falsify_sample`]: seeded random sampling; can only report SAT.
//! * [`external_verify`]: a separate executable speaking the JSON
//!   query/verdict file protocol.
//!
//! Every SAT verdict carries a witness that lies in the box and satisfies
//! the condition under concrete evaluation.

pub mod condition;
mod complete;
mod external;
mod ibp;
mod lp;
mod sampler;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use complete::{complete_verify, complete_verify_with};
pub use condition::{LinearConstraint, OutputCondition, Relation};
pub use external::{
    external_verify, read_verdict_file, solve_query_file, write_verdict_file, ExternalAdapterConfig,
    QueryFile, VerdictFile,
};
pub use ibp::{ibp_bounds, output_bounds, LayerBounds};
pub use lp::{max_margin, MarginSolution};
pub use sampler::falsify_sample;

use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::model::Network;
use crate::scalar::Scalar;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Builtin,
    Sampler,
    External,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "builtin" => Ok(Backend::Builtin),
            "sampler" => Ok(Backend::Sampler),
            "external" => Ok(Backend::External),
            other => Err(Error::Config(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Box bisections performed.
    pub splits: usize,
    /// Search nodes visited.
    pub nodes: usize,
    /// Nodes that hit the minimum width and were decided from their center.
    pub forced_leaves: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<T> {
    pub status: Status,
    pub witness: Option<Vec<T>>,
    pub stats: SearchStats,
    pub backend: Backend,
}

impl<T: Scalar> Verdict<T> {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Sat
    }

    pub fn is_unsat(&self) -> bool {
        self.status == Status::Unsat
    }

    pub(crate) fn unknown(backend: Backend, stats: SearchStats) -> Self {
        Self {
            status: Status::Unknown,
            witness: None,
            stats,
            backend,
        }
    }
}

/// Numeric knobs of the decision procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Strict constraints `c·y < r` are decided as `c·y ≤ r - strict_margin`.
    pub strict_margin: f64,
    /// Margin below which the box LP is declared infeasible.
    pub feasibility_tol: f64,
    /// Slack allowed when re-checking a witness against the condition.
    pub witness_slack: f64,
    /// Boxes narrower than this in every splittable dimension are decided
    /// from their center point.
    pub min_width: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            strict_margin: 1e-9,
            feasibility_tol: 1e-12,
            witness_slack: 1e-6,
            min_width: 1e-7,
        }
    }
}

/// A network, an input box and an unsafe output condition.
#[derive(Debug, Clone)]
pub struct VerificationQuery<'a, T: Scalar> {
    pub network: &'a Network<T>,
    pub region: HyperBox<T>,
    pub condition: OutputCondition<T>,
    pub timeout: Duration,
    pub backend: Backend,
}

impl<'a, T: Scalar> VerificationQuery<'a, T> {
    pub fn new(
        network: &'a Network<T>,
        region: HyperBox<T>,
        condition: OutputCondition<T>,
    ) -> Result<Self> {
        if region.dim() != network.input_dim() {
            return Err(Error::Dimension(format!(
                "box has {} dimensions, network expects {}",
                region.dim(),
                network.input_dim()
            )));
        }
        condition.validate(network.output_dim())?;
        Ok(Self {
            network,
            region,
            condition,
            timeout: DEFAULT_TIMEOUT,
            backend: Backend::Builtin,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    /// Checks that `witness` lies in the box and that the network output
    /// satisfies the condition within `slack`.
    pub fn check_witness(&self, witness: &[T], slack: f64) -> std::result::Result<(), String> {
        if witness.len() != self.network.input_dim() {
            return Err(format!(
                "witness has {} coordinates, expected {}",
                witness.len(),
                self.network.input_dim()
            ));
        }
        if witness.iter().any(|v| !v.is_finite()) {
            return Err("witness has non-finite coordinates".into());
        }
        if !self.region.contains(witness) {
            return Err("witness lies outside the input box".into());
        }
        let y = self.network.forward_unchecked(witness);
        if !self.condition.satisfied_with_slack(&y, T::lit(slack)) {
            return Err("network output at the witness does not satisfy the condition".into());
        }
        Ok(())
    }

    /// Checks the verdict invariant: SAT implies a valid witness.
    pub fn check_verdict(&self, v: &Verdict<T>, slack: f64) -> std::result::Result<(), String> {
        match (&v.status, &v.witness) {
            (Status::Sat, Some(w)) => self.check_witness(w, slack),
            (Status::Sat, None) => Err("sat verdict without a witness".into()),
            _ => Ok(()),
        }
    }
}
