//! Test-only helpers: seeded random verification queries and an
//! exhaustive ReLU-phase-enumeration oracle.
//!
//! The oracle shares nothing with the verifier beyond reading network
//! weights: it fixes every hidden ReLU to active or inactive, writes the
//! resulting region as linear constraints on the input, and decides
//! feasibility by enumerating candidate vertices (every choice of `d`
//! tight constraints).

use negsel_core::geometry::HyperBox;
use negsel_core::harness::PropertySpec;
use negsel_core::model::Network;
use negsel_core::verifier::{LinearConstraint, OutputCondition, Relation};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Same value as the verifier's default strict margin.
pub const STRICT_MARGIN: f64 = 1e-9;
const VERTEX_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RandomQuery {
    pub seed: u64,
    pub net: Network<f64>,
    pub region: HyperBox<f64>,
    pub condition: OutputCondition<f64>,
}

fn random_net(rng: &mut ChaCha8Rng) -> Network<f64> {
    let d = rng.gen_range(1..=3);
    let hidden = rng.gen_range(0..=2);
    let outputs = rng.gen_range(1..=2);
    let mut sizes = vec![d];
    for _ in 0..hidden {
        sizes.push(rng.gen_range(1..=6));
    }
    sizes.push(outputs);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let rows = (0..w[1])
                .map(|_| (0..w[0]).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect();
            let b = (0..w[1]).map(|_| rng.gen_range(-0.5..=0.5)).collect();
            (rows, b)
        })
        .collect();
    Network::from_affine(layers).expect("generated network is valid")
}

fn random_box(rng: &mut ChaCha8Rng, d: usize) -> HyperBox<f64> {
    let bounds: Vec<[f64; 2]> = (0..d)
        .map(|_| {
            let lo: f64 = rng.gen_range(-1.0..=1.0);
            [lo, lo + rng.gen_range(0.1..=1.5)]
        })
        .collect();
    HyperBox::from_bounds(&bounds).unwrap()
}

fn random_constraint(rng: &mut ChaCha8Rng, net: &Network<f64>, region: &HyperBox<f64>) -> LinearConstraint<f64> {
    let coeffs: Vec<f64> = (0..net.output_dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let x: Vec<f64> = region
        .dims()
        .iter()
        .map(|iv| rng.gen_range(iv.lo()..=iv.hi()))
        .collect();
    let y = net.forward(&x, true).unwrap();
    let v: f64 = coeffs.iter().zip(&y).map(|(c, y)| c * y).sum();
    let rhs = v + rng.gen_range(-0.3..=0.3);
    if rng.gen_bool(0.5) {
        LinearConstraint::le(coeffs, rhs)
    } else {
        LinearConstraint::lt(coeffs, rhs)
    }
}

/// Tiny network (≤ 2 hidden layers of ≤ 6 neurons, d ≤ 3), random box and
/// a single random inequality whose threshold is placed near a sampled
/// output value.
pub fn random_query(seed: u64) -> RandomQuery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_net(&mut rng);
    let region = random_box(&mut rng, net.input_dim());
    let c = random_constraint(&mut rng, &net, &region);
    RandomQuery {
        seed,
        net,
        region,
        condition: OutputCondition::single(c),
    }
}

/// Like [`random_query`] but with a DNF of up to two conjunctions of up to
/// two inequalities each.
pub fn random_dnf_query(seed: u64) -> RandomQuery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d1f0);
    let net = random_net(&mut rng);
    let region = random_box(&mut rng, net.input_dim());
    let n_disj = rng.gen_range(1..=2);
    let dnf = (0..n_disj)
        .map(|_| {
            let k = rng.gen_range(1..=2);
            (0..k).map(|_| random_constraint(&mut rng, &net, &region)).collect()
        })
        .collect();
    RandomQuery {
        seed,
        net,
        region,
        condition: OutputCondition { dnf },
    }
}

/// The fixed suite used by the oracle-equivalence checks.
pub fn query_suite(count: usize, master_seed: u64) -> Vec<RandomQuery> {
    (0..count as u64).map(|i| random_query(master_seed + i)).collect()
}

/// `y = x_0` on three inputs: a single identity layer.
pub fn synthetic_network() -> Network<f64> {
    Network::from_affine(vec![(vec![vec![1.0, 0.0, 0.0]], vec![0.0])]).unwrap()
}

/// `[-0.5, 0.5]^3` split 4 ways per dimension, unsafe when `y > 0`. The
/// threshold sits on the middle cell boundary of `x_0`, so exactly the 32
/// cells with `x_0 ≥ 0` are unsafe.
pub fn synthetic_property() -> PropertySpec {
    PropertySpec {
        schema_version: negsel_core::SCHEMA_VERSION,
        bounds: vec![[-0.5, 0.5]; 3],
        condition: OutputCondition::single(LinearConstraint::lt(vec![-1.0], 0.0)),
        split_dims: vec![0, 1, 2],
        n: 4,
        min_split_width: None,
    }
}

/// Analytic label of a synthetic cell: unsafe iff its `x_0` range reaches
/// above zero.
pub fn synthetic_is_unsafe(cell: &HyperBox<f64>) -> bool {
    cell.dims()[0].hi() > 0.0
}

/// Affine form over the input: `coeffs · x + constant`.
#[derive(Debug, Clone)]
struct Affine {
    coeffs: Vec<f64>,
    constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub sat: bool,
    /// A vertex of a feasible phase region, when SAT.
    pub witness: Option<Vec<f64>>,
    /// Phase patterns whose region was checked to the output layer.
    pub leaves: usize,
}

/// `g · x ≤ h`
type Halfspace = (Vec<f64>, f64);

struct Oracle<'a> {
    net: &'a Network<f64>,
    d: usize,
    /// Per conjunction: `(coeffs over outputs, rhs after strict margin)`.
    conj: Vec<Vec<(Vec<f64>, f64)>>,
    leaves: usize,
}

pub fn phase_oracle(net: &Network<f64>, region: &HyperBox<f64>, condition: &OutputCondition<f64>) -> OracleVerdict {
    let d = net.input_dim();
    let conj = condition
        .dnf
        .iter()
        .map(|c| {
            c.iter()
                .map(|lc| {
                    let rhs = match lc.relation {
                        Relation::Le => lc.rhs,
                        Relation::Lt => lc.rhs - STRICT_MARGIN,
                    };
                    (lc.coeffs.clone(), rhs)
                })
                .collect()
        })
        .collect();
    let mut base: Vec<Halfspace> = Vec::new();
    for (j, iv) in region.dims().iter().enumerate() {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        base.push((e.clone(), iv.hi()));
        e[j] = -1.0;
        base.push((e, -iv.lo()));
    }
    let inputs: Vec<Affine> = (0..d)
        .map(|j| {
            let mut c = vec![0.0; d];
            c[j] = 1.0;
            Affine { coeffs: c, constant: 0.0 }
        })
        .collect();
    let mut o = Oracle { net, d, conj, leaves: 0 };
    let witness = o.descend(0, &inputs, &base);
    OracleVerdict {
        sat: witness.is_some(),
        witness,
        leaves: o.leaves,
    }
}

impl Oracle<'_> {
    fn layer_forms(&self, k: usize, inputs: &[Affine]) -> Vec<Affine> {
        let layer = &self.net.layers()[k];
        (0..layer.output_dim())
            .map(|i| {
                let w = layer.weights.row(i);
                let mut coeffs = vec![0.0; self.d];
                let mut constant = layer.biases[i];
                for (wi, a) in w.iter().zip(inputs) {
                    for (c, ac) in coeffs.iter_mut().zip(&a.coeffs) {
                        *c += wi * ac;
                    }
                    constant += wi * a.constant;
                }
                Affine { coeffs, constant }
            })
            .collect()
    }

    fn descend(&mut self, k: usize, inputs: &[Affine], cons: &[Halfspace]) -> Option<Vec<f64>> {
        let pre = self.layer_forms(k, inputs);
        if k + 1 == self.net.layers().len() {
            self.leaves += 1;
            for conj in &self.conj {
                let mut all = cons.to_vec();
                for (q, rhs) in conj {
                    let mut g = vec![0.0; self.d];
                    let mut c0 = 0.0;
                    for (qo, form) in q.iter().zip(&pre) {
                        for (gj, fj) in g.iter_mut().zip(&form.coeffs) {
                            *gj += qo * fj;
                        }
                        c0 += qo * form.constant;
                    }
                    all.push((g, rhs - c0));
                }
                if let Some(x) = feasible_point(self.d, &all) {
                    return Some(x);
                }
            }
            return None;
        }
        let h = pre.len();
        for mask in 0u32..(1u32 << h) {
            let mut next_cons = cons.to_vec();
            let mut post = Vec::with_capacity(h);
            for (i, z) in pre.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    // active: z ≥ 0
                    next_cons.push((z.coeffs.iter().map(|v| -v).collect(), z.constant));
                    post.push(z.clone());
                } else {
                    // inactive: z ≤ 0
                    next_cons.push((z.coeffs.clone(), -z.constant));
                    post.push(Affine {
                        coeffs: vec![0.0; self.d],
                        constant: 0.0,
                    });
                }
            }
            if feasible_point(self.d, &next_cons).is_none() {
                continue;
            }
            if let Some(x) = self.descend(k + 1, &post, &next_cons) {
                return Some(x);
            }
        }
        None
    }
}

/// A point satisfying every half-space (within tolerance), found by trying
/// every vertex candidate. The half-spaces must describe a bounded set.
pub fn feasible_point(d: usize, cons: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let m = cons.len();
    let mut idx: Vec<usize> = (0..d).collect();
    if m < d {
        return None;
    }
    loop {
        if let Some(x) = solve_tight(d, cons, &idx) {
            if cons.iter().all(|(g, h)| dotp(g, &x) <= h + VERTEX_TOL) {
                return Some(x);
            }
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if idx[i] < m - d + i {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `g_i · x = h_i` for the selected rows by Gaussian elimination.
fn solve_tight(d: usize, cons: &[(Vec<f64>, f64)], rows: &[usize]) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            let mut row = cons[r].0.clone();
            row.push(cons[r].1);
            row
        })
        .collect();
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < PIVOT_TOL {
            return None;
        }
        a.swap(col, piv);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                if f != 0.0 {
                    for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    Some((0..d).map(|i| a[i][d] / a[i][i]).collect())
}
