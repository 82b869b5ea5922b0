use serde::{Deserialize, Serialize};

use super::ground_truth::{GroundTruth, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationCounts {
    /// Detectors labeled UNSAFE.
    pub tp: usize,
    /// Detectors labeled SAFE.
    pub fp: usize,
    /// Detectors without a definitive label; excluded from precision.
    pub unknown: usize,
}

impl ValidationCounts {
    pub fn precision(&self) -> Option<f64> {
        let definite = self.tp + self.fp;
        (definite > 0).then(|| self.tp as f64 / definite as f64)
    }
}

pub fn validate_detectors(detector_ids: &[usize], gt: &GroundTruth) -> Result<ValidationCounts> {
    let labels = gt.label_map();
    let mut counts = ValidationCounts::default();
    for id in detector_ids {
        match labels.get(id) {
            Some(Label::Unsafe) => counts.tp += 1,
            Some(Label::Safe) => counts.fp += 1,
            Some(Label::Unknown) => counts.unknown += 1,
            None => {
                return Err(Error::InvalidSpec(format!(
                    "detector {id} is not a sub-requirement of the ground truth"
                )))
            }
        }
    }
    Ok(counts)
}
