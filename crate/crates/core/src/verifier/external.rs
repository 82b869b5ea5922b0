//! File-based protocol for external complete verifiers.
//!
//! The adapter writes the network (NNet) and a query file, then runs
//! `<program> [args...] <query.json> <verdict.json>`. A nonzero exit is a
//! process failure. The verdict file is `{"status": "sat"|"unsat"|"unknown",
//! "witness": [...]}`; SAT witnesses are re-checked locally before they are
//! accepted.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{complete_verify, Backend, OutputCondition, SearchStats, Status, Verdict, VerificationQuery, VerifyOptions};
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::model::{load_nnet, save_nnet};

/// Extra time granted to the external process beyond the query timeout.
const PROCESS_GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalAdapterConfig {
    pub program: PathBuf,
    /// Arguments placed before the query and verdict paths.
    #[serde(default)]
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub nnet_path: PathBuf,
    pub bounds: Vec<[f64; 2]>,
    pub condition: OutputCondition<f64>,
    pub timeout_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

fn schema_version() -> u32 {
    crate::SCHEMA_VERSION
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_verdict_file(path: &Path) -> Result<VerdictFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Protocol(format!("cannot read verdict file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Protocol(format!("malformed verdict file {}: {e}", path.display())))
}

pub fn write_verdict_file(path: &Path, v: &Verdict<f64>) -> Result<()> {
    write_json(
        path,
        &VerdictFile {
            schema_version: Some(crate::SCHEMA_VERSION),
            status: v.status,
            witness: v.witness.clone(),
        },
    )
}

pub fn external_verify(q: &VerificationQuery<'_, f64>, adapter: &ExternalAdapterConfig) -> Result<Verdict<f64>> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let nnet_path = dir.path().join("network.nnet");
    let query_path = dir.path().join("query.json");
    let verdict_path = dir.path().join("verdict.json");
    save_nnet(q.network, &nnet_path)?;
    write_json(
        &query_path,
        &QueryFile {
            schema_version: crate::SCHEMA_VERSION,
            nnet_path,
            bounds: q.region.bounds(),
            condition: q.condition.clone(),
            timeout_s: q.timeout.as_secs_f64(),
        },
    )?;

    let stderr_path = dir.path().join("stderr.log");
    let stderr = std::fs::File::create(&stderr_path).map_err(|e| Error::io(&stderr_path, e))?;
    let mut child = Command::new(&adapter.program)
        .args(&adapter.args)
        .arg(&query_path)
        .arg(&verdict_path)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(stderr)
        .spawn()
        .map_err(|e| Error::Process(format!("cannot start {}: {e}", adapter.program.display())))?;
    let deadline = q.timeout.saturating_add(PROCESS_GRACE);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                let stats = SearchStats {
                    elapsed: start.elapsed(),
                    ..SearchStats::default()
                };
                return Ok(Verdict::unknown(Backend::External, stats));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(Error::Process(format!("waiting for external verifier: {e}"))),
        }
    };
    if !status.success() {
        let msg = std::fs::read_to_string(&stderr_path).unwrap_or_default();
        return Err(Error::Process(format!(
            "{} exited with {status}: {}",
            adapter.program.display(),
            msg.trim()
        )));
    }

    let file = read_verdict_file(&verdict_path)?;
    let stats = SearchStats {
        elapsed: start.elapsed(),
        ..SearchStats::default()
    };
    let verdict = match file.status {
        Status::Sat => {
            let w = file
                .witness
                .ok_or_else(|| Error::Protocol("sat verdict without a witness".into()))?;
            q.check_witness(&w, VerifyOptions::default().witness_slack)
                .map_err(Error::Protocol)?;
            Verdict {
                status: Status::Sat,
                witness: Some(w),
                stats,
                backend: Backend::External,
            }
        }
        status => Verdict {
            status,
            witness: None,
            stats,
            backend: Backend::External,
        },
    };
    Ok(verdict)
}

/// Answers a query file with the builtin complete search and writes the
/// verdict file. This is the server side of the protocol.
pub fn solve_query_file(query_path: &Path, verdict_path: &Path) -> Result<Verdict<f64>> {
    let text = std::fs::read_to_string(query_path).map_err(|e| Error::io(query_path, e))?;
    let qf: QueryFile = serde_json::from_str(&text)?;
    let net = load_nnet::<f64>(&qf.nnet_path)?;
    let region = HyperBox::from_bounds(&qf.bounds)?;
    if !(qf.timeout_s >= 0.0) {
        return Err(Error::InvalidSpec(format!("invalid timeout {}", qf.timeout_s)));
    }
    let q = VerificationQuery::new(&net, region, qf.condition)?
        .with_timeout(Duration::from_secs_f64(qf.timeout_s.min(1e9)));
    let v = complete_verify(&q);
    write_verdict_file(verdict_path, &v)?;
    Ok(v)
}
