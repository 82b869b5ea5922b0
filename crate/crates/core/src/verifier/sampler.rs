use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Backend, SearchStats, Status, Verdict, VerificationQuery, VerifyOptions};
use crate::scalar::Scalar;

/// Evaluates the network at `samples` seeded uniform points of the box and
/// returns SAT on the first point that satisfies the condition, UNKNOWN
/// otherwise. Never returns UNSAT.
pub fn falsify_sample<T: Scalar>(q: &VerificationQuery<'_, T>, samples: usize, seed: u64) -> Verdict<T> {
    let start = Instant::now();
    let margin = T::lit(VerifyOptions::default().strict_margin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = q.region.dims();
    let mut x = vec![T::zero(); dims.len()];
    let mut stats = SearchStats::default();
    for _ in 0..samples {
        if start.elapsed() >= q.timeout {
            break;
        }
        for (v, iv) in x.iter_mut().zip(dims) {
            *v = rng.gen_range(iv.lo()..=iv.hi());
        }
        stats.nodes += 1;
        let y = q.network.forward_unchecked(&x);
        if q.condition.holds(&y, margin, T::zero()) {
            stats.elapsed = start.elapsed();
            return Verdict {
                status: Status::Sat,
                witness: Some(x),
                stats,
                backend: Backend::Sampler,
            };
        }
    }
    stats.elapsed = start.elapsed();
    Verdict::unknown(Backend::Sampler, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HyperBox;
    use crate::model::Network;
    use crate::verifier::{LinearConstraint, OutputCondition};

    fn clamp_net() -> Network<f64> {
        // y = ReLU(x) on x in [0, 1] has output interval [0, 1]
        Network::from_affine(vec![
            (vec![vec![1.0]], vec![0.0]),
            (vec![vec![1.0]], vec![0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn trivially_true_condition_hits_first_sample() {
        let net = clamp_net();
        let q = VerificationQuery::new(
            &net,
            HyperBox::from_bounds(&[[0.0, 1.0]]).unwrap(),
            OutputCondition::single(LinearConstraint::le(vec![0.0], 1.0)),
        )
        .unwrap();
        let v = falsify_sample(&q, 100, 1);
        assert_eq!(v.status, Status::Sat);
        assert_eq!(v.stats.nodes, 1);
        q.check_verdict(&v, 1e-6).unwrap();
    }

    #[test]
    fn unreachable_condition_stays_unknown() {
        let net = clamp_net();
        let q = VerificationQuery::new(
            &net,
            HyperBox::from_bounds(&[[0.0, 1.0]]).unwrap(),
            OutputCondition::single(LinearConstraint::le(vec![1.0], -5.0)),
        )
        .unwrap();
        let v = falsify_sample(&q, 500, 1);
        assert_eq!(v.status, Status::Unknown);
        assert_eq!(v.stats.nodes, 500);
    }
}
