//! Input-box branch-and-bound.
//!
//! Each node is a sub-box. Interval bounds prune conjunctions that the
//! output box already refutes. When every hidden ReLU is phase-stable on
//! the node the network is affine there and each surviving conjunction is
//! decided exactly by the max-margin LP. Otherwise the node is bisected
//! along the input dimension with the largest width × downstream weight
//! magnitude.

use std::time::Instant;

use super::condition::OutputCondition;
use super::ibp::{ibp_bounds, LayerBounds};
use super::lp::max_margin;
use super::{Backend, SearchStats, Status, Verdict, VerificationQuery, VerifyOptions};
use crate::geometry::{HyperBox, Interval};
use crate::model::{relu, Matrix, Network};
use crate::scalar::{dot, Scalar};

pub fn complete_verify<T: Scalar>(q: &VerificationQuery<'_, T>) -> Verdict<T> {
    complete_verify_with(q, &VerifyOptions::default())
}

pub fn complete_verify_with<T: Scalar>(q: &VerificationQuery<'_, T>, opts: &VerifyOptions) -> Verdict<T> {
    let start = Instant::now();
    let search = Search::new(q, opts);
    let mut stats = SearchStats::default();
    let mut stack = vec![q.region.clone()];
    let outcome = loop {
        let Some(node) = stack.pop() else {
            break Outcome::Unsat;
        };
        if start.elapsed() >= q.timeout {
            break Outcome::Timeout;
        }
        stats.nodes += 1;
        match search.visit(&node, &mut stats) {
            Visit::Sat(w) => break Outcome::Sat(w),
            Visit::Refuted => {}
            Visit::Split(dim) => {
                stats.splits += 1;
                let (a, b) = node.bisect(dim);
                stack.push(b);
                stack.push(a);
            }
        }
    };
    stats.elapsed = start.elapsed();
    match outcome {
        Outcome::Sat(w) => Verdict {
            status: Status::Sat,
            witness: Some(w),
            stats,
            backend: Backend::Builtin,
        },
        Outcome::Unsat => Verdict {
            status: Status::Unsat,
            witness: None,
            stats,
            backend: Backend::Builtin,
        },
        Outcome::Timeout => Verdict::unknown(Backend::Builtin, stats),
    }
}

enum Outcome<T> {
    Sat(Vec<T>),
    Unsat,
    Timeout,
}

enum Visit<T> {
    Sat(Vec<T>),
    Refuted,
    Split(usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Active,
    Inactive,
    Unstable,
}

struct Search<'q, T: Scalar> {
    net: &'q Network<T>,
    cond: &'q OutputCondition<T>,
    /// Per conjunction: `(coeffs, decision rhs)`.
    conj: Vec<Vec<(Vec<T>, T)>>,
    influence: Vec<T>,
    feas_tol: T,
    strict_margin: T,
    slack: T,
    min_width: T,
}

impl<'q, T: Scalar> Search<'q, T> {
    fn new(q: &'q VerificationQuery<'_, T>, opts: &VerifyOptions) -> Self {
        let strict_margin = T::lit(opts.strict_margin);
        let conj = q
            .condition
            .dnf
            .iter()
            .map(|c| {
                c.iter()
                    .map(|lc| (lc.coeffs.clone(), lc.decision_rhs(strict_margin)))
                    .collect()
            })
            .collect();
        Self {
            net: q.network,
            cond: &q.condition,
            conj,
            influence: influence(q.network, &q.condition),
            feas_tol: T::lit(opts.feasibility_tol),
            strict_margin,
            slack: T::lit(opts.witness_slack),
            min_width: T::lit(opts.min_width),
        }
    }

    fn visit(&self, node: &HyperBox<T>, stats: &mut SearchStats) -> Visit<T> {
        let bounds = ibp_bounds(self.net, node).expect("query dimensions are validated");
        let out = &bounds[bounds.len() - 1].post;
        let live: Vec<usize> = (0..self.conj.len())
            .filter(|&k| {
                self.conj[k]
                    .iter()
                    .all(|(c, r)| lower_bound(c, out) <= *r + self.feas_tol)
            })
            .collect();
        if live.is_empty() {
            return Visit::Refuted;
        }

        let center = node.center();
        if self.holds_exactly(&center) {
            return Visit::Sat(center);
        }

        let phases = stable_phases(&bounds);
        let all_stable = phases.iter().flatten().all(|p| *p != Phase::Unstable);
        if all_stable {
            let (a, c) = affine_map(self.net, &phases);
            let mut lp_claims_sat = false;
            for &k in &live {
                if let Some(x) = self.solve_conjunction(node, k, &a, &c) {
                    lp_claims_sat = true;
                    let y = self.net.forward_unchecked(&x);
                    if self.cond.satisfied_with_slack(&y, self.slack) && node.contains(&x) {
                        return Visit::Sat(x);
                    }
                }
            }
            if !lp_claims_sat {
                return Visit::Refuted;
            }
        } else {
            // Cheap attack: linearize around the center's activation
            // pattern and keep the LP optimum only if it concretely works.
            let pattern = center_pattern(self.net, &center);
            let (a, c) = affine_map(self.net, &pattern);
            for &k in &live {
                if let Some(x) = self.solve_conjunction(node, k, &a, &c) {
                    if self.holds_exactly(&x) {
                        return Visit::Sat(x);
                    }
                }
            }
        }

        match self.split_dim(node) {
            Some(d) => Visit::Split(d),
            None => {
                stats.forced_leaves += 1;
                Visit::Refuted
            }
        }
    }

    fn holds_exactly(&self, x: &[T]) -> bool {
        let y = self.net.forward_unchecked(x);
        self.cond.holds(&y, self.strict_margin, T::zero())
    }

    /// LP over the node for conjunction `k` under the affine map `y = A x + c`.
    fn solve_conjunction(&self, node: &HyperBox<T>, k: usize, a: &Matrix<T>, c: &[T]) -> Option<Vec<T>> {
        let rows: Vec<(Vec<T>, T)> = self.conj[k]
            .iter()
            .map(|(q, r)| {
                let row: Vec<T> = (0..a.cols())
                    .map(|j| (0..a.rows()).map(|o| q[o] * a.get(o, j)).sum())
                    .collect();
                (row, *r - dot(q, c))
            })
            .collect();
        let sol = max_margin(node, &rows)?;
        (sol.margin >= -self.feas_tol).then_some(sol.x)
    }

    fn split_dim(&self, node: &HyperBox<T>) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        let mut widest: Option<(usize, T)> = None;
        for (j, iv) in node.dims().iter().enumerate() {
            let w = iv.width();
            if !(w > self.min_width) {
                continue;
            }
            let score = w * self.influence[j];
            if score > T::zero() && best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
            if widest.is_none_or(|(_, s)| w > s) {
                widest = Some((j, w));
            }
        }
        best.or(widest).map(|(j, _)| j)
    }
}

fn lower_bound<T: Scalar>(coeffs: &[T], out: &[Interval<T>]) -> T {
    coeffs
        .iter()
        .zip(out)
        .map(|(c, iv)| if *c >= T::zero() { *c * iv.lo() } else { *c * iv.hi() })
        .sum()
}

/// Phases of the hidden layers (the output layer has none).
fn stable_phases<T: Scalar>(bounds: &[LayerBounds<T>]) -> Vec<Vec<Phase>> {
    bounds[..bounds.len() - 1]
        .iter()
        .map(|lb| {
            lb.pre
                .iter()
                .map(|iv| {
                    if iv.lo() >= T::zero() {
                        Phase::Active
                    } else if iv.hi() <= T::zero() {
                        Phase::Inactive
                    } else {
                        Phase::Unstable
                    }
                })
                .collect()
        })
        .collect()
}

fn center_pattern<T: Scalar>(net: &Network<T>, x: &[T]) -> Vec<Vec<Phase>> {
    let mut cur = x.to_vec();
    let mut phases = Vec::new();
    for layer in &net.layers()[..net.layers().len() - 1] {
        let z = layer.pre_activation(&cur);
        phases.push(
            z.iter()
                .map(|v| if *v >= T::zero() { Phase::Active } else { Phase::Inactive })
                .collect(),
        );
        cur = z.into_iter().map(relu).collect();
    }
    phases
}

/// Composes the network into `y = A x + c` with the given hidden phases;
/// unstable neurons are treated as active.
fn affine_map<T: Scalar>(net: &Network<T>, phases: &[Vec<Phase>]) -> (Matrix<T>, Vec<T>) {
    let d = net.input_dim();
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        a.row_mut(i)[i] = T::one();
    }
    let mut c = vec![T::zero(); d];
    for (k, layer) in net.layers().iter().enumerate() {
        let mut na = layer.weights.matmul(&a);
        let mut nc = layer.pre_activation(&c);
        if let Some(ph) = phases.get(k) {
            for (i, p) in ph.iter().enumerate() {
                if *p == Phase::Inactive {
                    na.row_mut(i).iter_mut().for_each(|v| *v = T::zero());
                    nc[i] = T::zero();
                }
            }
        }
        a = na;
        c = nc;
    }
    (a, c)
}

/// Per-input sensitivity: `|q|ᵀ |W_L| ⋯ |W_1|`, with `|q|` the summed
/// absolute condition coefficients.
fn influence<T: Scalar>(net: &Network<T>, cond: &OutputCondition<T>) -> Vec<T> {
    let mut m = net.layers()[0].weights.abs();
    for layer in &net.layers()[1..] {
        m = layer.weights.abs().matmul(&m);
    }
    let mut q = vec![T::zero(); net.output_dim()];
    for c in cond.dnf.iter().flatten() {
        for (acc, v) in q.iter_mut().zip(&c.coeffs) {
            *acc += v.abs();
        }
    }
    (0..net.input_dim())
        .map(|j| (0..m.rows()).map(|o| q[o] * m.get(o, j)).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::condition::LinearConstraint;

    fn relu_net() -> Network<f64> {
        Network::from_affine(vec![
            (vec![vec![1.0]], vec![0.0]),
            (vec![vec![1.0]], vec![0.0]),
        ])
        .unwrap()
    }

    fn query<'a>(
        net: &'a Network<f64>,
        bounds: &[[f64; 2]],
        cond: OutputCondition<f64>,
    ) -> VerificationQuery<'a, f64> {
        VerificationQuery::new(net, HyperBox::from_bounds(bounds).unwrap(), cond).unwrap()
    }

    #[test]
    fn relu_is_zero_on_negative_box() {
        let net = relu_net();
        // y > 0  <=>  -y < 0
        let q = query(&net, &[[-1.0, 0.0]], OutputCondition::single(LinearConstraint::lt(vec![-1.0], 0.0)));
        let v = complete_verify(&q);
        assert_eq!(v.status, Status::Unsat);
    }

    #[test]
    fn relu_exceeds_threshold() {
        let net = relu_net();
        let q = query(&net, &[[-1.0, 1.0]], OutputCondition::single(LinearConstraint::lt(vec![-1.0], -0.25)));
        let v = complete_verify(&q);
        assert_eq!(v.status, Status::Sat);
        let w = v.witness.clone().unwrap();
        assert!(w[0] > 0.25 && w[0] <= 1.0);
        q.check_verdict(&v, 1e-6).unwrap();
    }

    #[test]
    fn affine_map_matches_forward_on_stable_pattern() {
        let net = Network::from_affine(vec![
            (vec![vec![1.0, -2.0], vec![0.5, 0.5]], vec![0.1, -3.0]),
            (vec![vec![2.0, 1.0]], vec![0.3]),
        ])
        .unwrap();
        let x = [0.7, 0.1];
        let pattern = center_pattern(&net, &x);
        let (a, c) = affine_map(&net, &pattern);
        let y = net.forward(&x, true).unwrap();
        let lin: f64 = a.mul_vec(&x)[0] + c[0];
        assert!((lin - y[0]).abs() < 1e-12);
    }

    #[test]
    fn timeout_yields_unknown() {
        let net = relu_net();
        let q = query(&net, &[[-1.0, 1.0]], OutputCondition::single(LinearConstraint::le(vec![1.0], -1.0)))
            .with_timeout(std::time::Duration::ZERO);
        let v = complete_verify(&q);
        assert_eq!(v.status, Status::Unknown);
        assert!(v.witness.is_none());
    }

    #[test]
    fn disjunction_with_one_feasible_branch() {
        let net = Network::from_affine(vec![(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0])]).unwrap();
        // y0 ≤ -5 (impossible on [0,1]) or y1 ≤ -0.5 (x ≥ 0.5)
        let cond = OutputCondition {
            dnf: vec![
                vec![LinearConstraint::le(vec![1.0, 0.0], -5.0)],
                vec![LinearConstraint::le(vec![0.0, 1.0], -0.5)],
            ],
        };
        let q = query(&net, &[[0.0, 1.0]], cond);
        let v = complete_verify(&q);
        assert_eq!(v.status, Status::Sat);
        q.check_verdict(&v, 1e-6).unwrap();
    }
}
