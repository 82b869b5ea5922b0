//! Max-margin feasibility over a box.
//!
//! Solves
//!
//! ```text
//!   maximize t
//!   subject to  a_i · x + t ≤ b_i   for every row i
//!               lo ≤ x ≤ hi,  t ≤ 1
//! ```
//!
//! with a dense tableau simplex and Bland's rule. The system
//! `a_i · x ≤ b_i` is feasible on the box iff the optimal `t` is ≥ 0, and
//! the optimal `x` is then the witness with the largest worst-case slack.

use crate::geometry::HyperBox;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MarginSolution<T> {
    pub x: Vec<T>,
    pub margin: T,
}

const MAX_PIVOTS: usize = 100_000;

/// Returns `None` only if the pivot budget is exhausted.
pub fn max_margin<T: Scalar>(region: &HyperBox<T>, rows: &[(Vec<T>, T)]) -> Option<MarginSolution<T>> {
    let d = region.dim();
    let m = rows.len();
    let lo = region.lower();
    let widths: Vec<T> = region.dims().iter().map(|iv| iv.width()).collect();

    // Shift x = lo + y and t = s - shift so that y = 0, s = 0 is a vertex.
    let r: Vec<T> = rows
        .iter()
        .map(|(a, b)| *b - a.iter().zip(&lo).map(|(ai, li)| *ai * *li).sum::<T>())
        .collect();
    let shift = r.iter().fold(T::zero(), |acc, v| acc.max(-*v)) + T::one();

    // Variables: y_0..y_{d-1}, s, then one slack per row.
    let n_struct = d + 1;
    let n_rows = m + d + 1;
    let width = n_struct + n_rows + 1;
    let rhs_col = width - 1;
    let mut tab = vec![T::zero(); n_rows * width];
    let at = |i: usize, j: usize| i * width + j;
    for (i, (a, _)) in rows.iter().enumerate() {
        for (j, v) in a.iter().enumerate() {
            tab[at(i, j)] = *v;
        }
        tab[at(i, d)] = T::one();
        tab[at(i, rhs_col)] = r[i] + shift;
    }
    for j in 0..d {
        let i = m + j;
        tab[at(i, j)] = T::one();
        tab[at(i, rhs_col)] = widths[j];
    }
    let cap = m + d;
    tab[at(cap, d)] = T::one();
    tab[at(cap, rhs_col)] = shift + T::one();
    for i in 0..n_rows {
        tab[at(i, n_struct + i)] = T::one();
    }
    let mut basis: Vec<usize> = (0..n_rows).map(|i| n_struct + i).collect();

    // Reduced costs for maximizing s (stored negated).
    let mut cost = vec![T::zero(); width];
    cost[d] = -T::one();

    let eps = T::epsilon() * T::lit(1e3);
    let mut pivots = 0;
    while let Some(enter) = (0..width - 1).find(|&j| cost[j] < -eps) {
        let mut leave: Option<(usize, T)> = None;
        for i in 0..n_rows {
            let a = tab[at(i, enter)];
            if a > eps {
                let ratio = tab[at(i, rhs_col)] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && basis[i] < basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        // Every variable is bounded, so a leaving row always exists.
        let (row, _) = leave?;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return None;
        }
        let p = tab[at(row, enter)];
        for j in 0..width {
            tab[at(row, j)] /= p;
        }
        for i in 0..n_rows {
            if i == row {
                continue;
            }
            let f = tab[at(i, enter)];
            if f != T::zero() {
                for j in 0..width {
                    let v = tab[at(row, j)];
                    tab[at(i, j)] -= f * v;
                }
                tab[at(i, enter)] = T::zero();
            }
        }
        let f = cost[enter];
        for j in 0..width {
            cost[j] -= f * tab[at(row, j)];
        }
        cost[enter] = T::zero();
        basis[row] = enter;
    }

    let mut vals = vec![T::zero(); n_struct];
    for (i, &b) in basis.iter().enumerate() {
        if b < n_struct {
            vals[b] = tab[at(i, rhs_col)];
        }
    }
    let mut x: Vec<T> = (0..d).map(|j| lo[j] + vals[j]).collect();
    region.clamp(&mut x);
    Some(MarginSolution {
        x,
        margin: vals[d] - shift,
    })
}
