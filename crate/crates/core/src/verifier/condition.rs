use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=", alias = "le")]
    Le,
    #[serde(rename = "<", alias = "lt")]
    Lt,
}

/// `coeffs · y  (≤ | <)  rhs` over the network outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearConstraint<T: Scalar> {
    pub coeffs: Vec<T>,
    pub rhs: T,
    pub relation: Relation,
}

impl<T: Scalar> LinearConstraint<T> {
    pub fn le(coeffs: Vec<T>, rhs: T) -> Self {
        Self {
            coeffs,
            rhs,
            relation: Relation::Le,
        }
    }

    pub fn lt(coeffs: Vec<T>, rhs: T) -> Self {
        Self {
            coeffs,
            rhs,
            relation: Relation::Lt,
        }
    }

    /// Right-hand side used by the decision procedure: strict constraints
    /// are tightened by `strict_margin`.
    pub fn decision_rhs(&self, strict_margin: T) -> T {
        match self.relation {
            Relation::Le => self.rhs,
            Relation::Lt => self.rhs - strict_margin,
        }
    }

    pub fn value(&self, y: &[T]) -> T {
        dot(&self.coeffs, y)
    }

    /// Acceptance test for reported witnesses.
    pub fn satisfied_with_slack(&self, y: &[T], slack: T) -> bool {
        let v = self.value(y);
        match self.relation {
            Relation::Le => v <= self.rhs + slack,
            Relation::Lt => v < self.rhs + slack,
        }
    }
}

/// Unsafe output region in disjunctive normal form: the condition holds
/// when every constraint of at least one conjunction holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OutputCondition<T: Scalar> {
    pub dnf: Vec<Vec<LinearConstraint<T>>>,
}

fn unit<T: Scalar>(dim: usize, pos: usize, neg: usize) -> Vec<T> {
    let mut c = vec![T::zero(); dim];
    c[pos] += T::one();
    c[neg] -= T::one();
    c
}

impl<T: Scalar> OutputCondition<T> {
    pub fn single(c: LinearConstraint<T>) -> Self {
        Self { dnf: vec![vec![c]] }
    }

    pub fn conjunction(cs: Vec<LinearConstraint<T>>) -> Self {
        Self { dnf: vec![cs] }
    }

    /// `y[k] ≤ y[j]` for every `j ≠ k`.
    pub fn output_minimal(k: usize, output_dim: usize) -> Self {
        Self::conjunction(
            (0..output_dim)
                .filter(|&j| j != k)
                .map(|j| LinearConstraint::le(unit(output_dim, k, j), T::zero()))
                .collect(),
        )
    }

    /// Some `y[j] < y[k]`.
    pub fn output_not_minimal(k: usize, output_dim: usize) -> Self {
        Self {
            dnf: (0..output_dim)
                .filter(|&j| j != k)
                .map(|j| vec![LinearConstraint::lt(unit(output_dim, j, k), T::zero())])
                .collect(),
        }
    }

    /// `y[k] ≥ y[j]` for every `j ≠ k`.
    pub fn output_maximal(k: usize, output_dim: usize) -> Self {
        Self::conjunction(
            (0..output_dim)
                .filter(|&j| j != k)
                .map(|j| LinearConstraint::le(unit(output_dim, j, k), T::zero()))
                .collect(),
        )
    }

    pub fn validate(&self, output_dim: usize) -> Result<()> {
        if self.dnf.is_empty() {
            return Err(Error::InvalidSpec("output condition has no disjuncts".into()));
        }
        for (i, conj) in self.dnf.iter().enumerate() {
            if conj.is_empty() {
                return Err(Error::InvalidSpec(format!("disjunct {i} is empty")));
            }
            for c in conj {
                if c.coeffs.len() != output_dim {
                    return Err(Error::Dimension(format!(
                        "condition has {} coefficients, network has {output_dim} outputs",
                        c.coeffs.len()
                    )));
                }
                if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("condition has non-finite entries".into()));
                }
            }
        }
        Ok(())
    }

    /// Decision-procedure test at a concrete output.
    pub fn holds(&self, y: &[T], strict_margin: T, tol: T) -> bool {
        self.dnf.iter().any(|conj| {
            conj.iter()
                .all(|c| c.value(y) <= c.decision_rhs(strict_margin) + tol)
        })
    }

    pub fn satisfied_with_slack(&self, y: &[T], slack: T) -> bool {
        self.dnf
            .iter()
            .any(|conj| conj.iter().all(|c| c.satisfied_with_slack(y, slack)))
    }

    pub fn to_f64(&self) -> OutputCondition<f64> {
        OutputCondition {
            dnf: self
                .dnf
                .iter()
                .map(|conj| {
                    conj.iter()
                        .map(|c| LinearConstraint {
                            coeffs: c.coeffs.iter().map(|v| v.to_f64_lossy()).collect(),
                            rhs: c.rhs.to_f64_lossy(),
                            relation: c.relation,
                        })
                        .collect()
                })
                .collect(),
        }
    }
}
