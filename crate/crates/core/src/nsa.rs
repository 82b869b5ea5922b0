//! Real-valued negative selection over partitioned sub-requirements.
//!
//! Candidates are drawn uniformly, without repetition, from the pool. A
//! candidate becomes a detector when its center is farther than the self
//! radius (L1) from the center of every self sub-requirement.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::scalar::Scalar;

/// Attempts allowed per requested detector when `max_attempts` is unset.
pub const DEFAULT_ATTEMPTS_PER_DETECTOR: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsaParams {
    /// Self radius, in normalized input units.
    pub self_radius: f64,
    /// Number of detectors to generate.
    pub detectors: usize,
    pub seed: u64,
    pub max_attempts: usize,
}

impl NsaParams {
    pub fn new(self_radius: f64, detectors: usize, seed: u64) -> Self {
        Self {
            self_radius,
            detectors,
            seed,
            max_attempts: DEFAULT_ATTEMPTS_PER_DETECTOR * detectors,
        }
    }

    pub fn validate(&self, pool_len: usize) -> Result<()> {
        if !(self.self_radius >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "self radius must be ≥ 0, got {}",
                self.self_radius
            )));
        }
        if self.detectors == 0 {
            return Err(Error::InvalidSpec("detector count must be positive".into()));
        }
        if self.detectors > pool_len {
            return Err(Error::InvalidSpec(format!(
                "requested {} detectors from a pool of {pool_len}",
                self.detectors
            )));
        }
        if self.max_attempts < self.detectors {
            return Err(Error::InvalidSpec(format!(
                "max_attempts {} is below the detector count {}",
                self.max_attempts, self.detectors
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSet<T: Scalar> {
    /// `(pool id, box)` in generation order.
    pub detectors: Vec<(usize, HyperBox<T>)>,
    pub params: NsaParams,
    pub attempts_used: usize,
}

impl<T: Scalar> DetectorSet<T> {
    pub fn ids(&self) -> Vec<usize> {
        self.detectors.iter().map(|(id, _)| *id).collect()
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    pub fn to_record(&self) -> DetectorRecord {
        DetectorRecord {
            schema_version: crate::SCHEMA_VERSION,
            params: self.params.clone(),
            detector_ids: self.ids(),
            attempts_used: self.attempts_used,
        }
    }
}

/// On-disk form of a [`DetectorSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRecord {
    pub schema_version: u32,
    pub params: NsaParams,
    pub detector_ids: Vec<usize>,
    pub attempts_used: usize,
}

pub fn l1_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "cannot compare vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).sum())
}

/// True when some self member's center lies within `radius` (L1) of the
/// candidate's center. An empty self set never matches.
pub fn is_self_match<T: Scalar>(
    candidate: &HyperBox<T>,
    self_set: &[HyperBox<T>],
    radius: T,
) -> Result<bool> {
    let c = candidate.center();
    for s in self_set {
        if l1_distance(&c, &s.center())? <= radius {
            return Ok(true);
        }
    }
    Ok(false)
}

fn pool_id<T: Scalar>(b: &HyperBox<T>, index: usize) -> usize {
    b.id().unwrap_or(index)
}

/// Draws untried pool members until `params.detectors` detectors are found.
///
/// Pool members whose id appears in `self_set` are rejected without a
/// distance test. The draw sequence depends only on the seed and the pool,
/// never on the radius.
pub fn generate_detectors<T: Scalar>(
    pool: &[HyperBox<T>],
    self_set: &[HyperBox<T>],
    params: &NsaParams,
) -> Result<DetectorSet<T>> {
    if pool.is_empty() {
        return Err(Error::InvalidSpec("candidate pool is empty".into()));
    }
    params.validate(pool.len())?;
    let ids: Vec<usize> = pool.iter().enumerate().map(|(i, b)| pool_id(b, i)).collect();
    let mut seen = HashSet::with_capacity(ids.len());
    if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
        return Err(Error::InvalidSpec(format!("duplicate pool id {dup}")));
    }
    let self_ids: HashSet<usize> = self_set.iter().filter_map(HyperBox::id).collect();
    let self_centers: Vec<Vec<T>> = self_set.iter().map(HyperBox::center).collect();
    let radius = T::lit(params.self_radius);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut untried: Vec<usize> = (0..pool.len()).collect();
    let mut detectors = Vec::with_capacity(params.detectors);
    let mut attempts = 0;
    while detectors.len() < params.detectors {
        if untried.is_empty() || attempts >= params.max_attempts {
            return Err(Error::DetectorShortfall {
                found: detectors.len(),
                requested: params.detectors,
                attempts,
            });
        }
        let pick = untried.swap_remove(rng.gen_range(0..untried.len()));
        attempts += 1;
        if self_ids.contains(&ids[pick]) {
            continue;
        }
        let c = pool[pick].center();
        let mut matched = false;
        for s in &self_centers {
            if l1_distance(&c, s)? <= radius {
                matched = true;
                break;
            }
        }
        if !matched {
            detectors.push((ids[pick], pool[pick].clone()));
        }
    }
    Ok(DetectorSet {
        detectors,
        params: params.clone(),
        attempts_used: attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{partition, PartitionSpec};

    fn grid_2x2() -> Vec<HyperBox<f64>> {
        let b = HyperBox::from_bounds(&[[0.0, 1.0], [0.0, 1.0]]).unwrap();
        partition(&b, &PartitionSpec::new(vec![0, 1], 2)).unwrap()
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        let d = l1_distance(&[0.61, -0.375, -0.375], &[0.61, -0.125, -0.375]).unwrap();
        assert_eq!(d, 0.25);
        assert!(l1_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn adjacent_phi2_cells_are_a_quarter_apart() {
        let a = HyperBox::from_bounds(&[[0.6, 0.6199625], [-0.5, -0.25], [-0.5, -0.25]]).unwrap();
        let b = HyperBox::from_bounds(&[[0.6, 0.6199625], [-0.5, -0.25], [-0.25, 0.0]]).unwrap();
        assert_eq!(l1_distance(&a.center(), &b.center()).unwrap(), 0.25);
        assert!(!is_self_match(&b, std::slice::from_ref(&a), 0.05).unwrap());
    }

    #[test]
    fn self_match_rules() {
        let cells = grid_2x2();
        assert!(is_self_match(&cells[0], &cells[..1], 0.0).unwrap());
        assert!(!is_self_match(&cells[0], &[], 10.0).unwrap());
    }

    #[test]
    fn empty_self_set_takes_first_draws() {
        let cells = grid_2x2();
        let ds = generate_detectors(&cells, &[], &NsaParams::new(0.1, 3, 5)).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.attempts_used, 3);
    }

    #[test]
    fn non_self_cells_are_found_for_every_seed() {
        let cells = grid_2x2();
        let self_set = vec![cells[0].clone(), cells[3].clone()];
        for seed in 0..50 {
            let ds = generate_detectors(&cells, &self_set, &NsaParams::new(0.2, 2, seed)).unwrap();
            let mut ids = ds.ids();
            ids.sort_unstable();
            assert_eq!(ids, vec![1, 2]);
        }
    }

    #[test]
    fn shortfall_names_the_count() {
        let cells = grid_2x2();
        let self_set = vec![cells[0].clone()];
        let err = generate_detectors(&cells, &self_set, &NsaParams::new(0.6, 2, 1)).unwrap_err();
        match err {
            Error::DetectorShortfall { found, requested, attempts } => {
                // cells 1 and 2 sit 0.5 from cell 0; cell 3 sits 1.0 away
                assert_eq!((found, requested, attempts), (1, 2, 4));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn attempt_budget_is_enforced() {
        let cells = grid_2x2();
        let mut p = NsaParams::new(0.0, 2, 3);
        p.max_attempts = 2;
        let self_set = cells.clone();
        assert!(matches!(
            generate_detectors(&cells, &self_set, &p),
            Err(Error::DetectorShortfall { attempts: 2, .. })
        ));
    }

    #[test]
    fn parameter_validation() {
        let cells = grid_2x2();
        assert!(generate_detectors(&cells, &[], &NsaParams::new(-1.0, 1, 0)).is_err());
        assert!(generate_detectors(&cells, &[], &NsaParams::new(0.1, 5, 0)).is_err());
        assert!(generate_detectors(&cells, &[], &NsaParams::new(0.1, 0, 0)).is_err());
        assert!(generate_detectors::<f64>(&[], &[], &NsaParams::new(0.1, 1, 0)).is_err());
    }
}
