use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Activation, Layer, Matrix, Network, Normalization};
use crate::error::Result;
use crate::scalar::Scalar;

/// Seeded network with weights and biases uniform in `[-1, 1]` and
/// randomized (but valid) normalization metadata.
///
/// `sizes` includes the input and output layer sizes.
pub fn random_network<T: Scalar>(sizes: &[usize], seed: u64) -> Result<Network<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = || T::lit(rng.gen_range(-1.0..=1.0));
    let n = sizes.len().saturating_sub(1);
    let mut layers = Vec::with_capacity(n);
    for k in 0..n {
        let rows = (0..sizes[k + 1])
            .map(|_| (0..sizes[k]).map(|_| unit()).collect())
            .collect();
        let biases = (0..sizes[k + 1]).map(|_| unit()).collect();
        let act = if k + 1 == n {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(Layer::new(Matrix::from_rows(rows)?, biases, act)?);
    }
    let d = sizes.first().copied().unwrap_or(0);
    let norm = Normalization {
        input_mins: (0..d).map(|_| unit() - T::one()).collect(),
        input_maxes: (0..d).map(|_| unit() + T::lit(2.0)).collect(),
        means: (0..=d).map(|_| unit()).collect(),
        ranges: (0..=d).map(|_| unit().abs() + T::lit(0.5)).collect(),
    };
    Network::new(layers, norm)
}
