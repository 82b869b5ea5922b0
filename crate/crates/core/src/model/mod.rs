//! Feed-forward ReLU networks with NNet-style normalization metadata.

mod nnet;
mod random;

pub use nnet::{load_nnet, parse_nnet, save_nnet, serialize_nnet};
pub use random::random_network;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

/// Dense row-major matrix. Rows are neurons, columns are inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "matrix row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        self.iter_rows().map(|r| dot(r, x)).collect()
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * *b;
                }
            }
        }
        out
    }

    pub fn abs(&self) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.abs()).collect(),
        }
    }
}

/// One affine transform followed by an activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub biases: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn new(weights: Matrix<T>, biases: Vec<T>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::Dimension(format!(
                "bias length {} does not match {} weight rows",
                biases.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Affine part only.
    pub fn pre_activation(&self, x: &[T]) -> Vec<T> {
        self.weights
            .iter_rows()
            .zip(&self.biases)
            .map(|(row, b)| dot(row, x) + *b)
            .collect()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut z = self.pre_activation(x);
        if self.activation == Activation::Relu {
            for v in &mut z {
                *v = relu(*v);
            }
        }
        z
    }
}

#[inline]
pub(crate) fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// Normalization metadata carried by NNet files.
///
/// `means` and `ranges` have `input_dim + 1` entries; the last one applies
/// to every output.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization<T> {
    pub input_mins: Vec<T>,
    pub input_maxes: Vec<T>,
    pub means: Vec<T>,
    pub ranges: Vec<T>,
}

impl<T: Scalar> Normalization<T> {
    /// Zero means, unit ranges, unbounded raw input limits.
    pub fn identity(input_dim: usize) -> Self {
        Self {
            input_mins: vec![T::neg_infinity(); input_dim],
            input_maxes: vec![T::infinity(); input_dim],
            means: vec![T::zero(); input_dim + 1],
            ranges: vec![T::one(); input_dim + 1],
        }
    }
}

/// Layered feed-forward ReLU network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    layers: Vec<Layer<T>>,
    norm: Normalization<T>,
}

impl<T: Scalar> Network<T> {
    /// Validates layer chaining, normalization lengths and positivity of
    /// ranges. The last layer must be `Identity`, all others `Relu`.
    pub fn new(layers: Vec<Layer<T>>, norm: Normalization<T>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        };
        let input_dim = first.input_dim();
        if input_dim == 0 {
            return Err(Error::InvalidNetwork("input dimension is zero".into()));
        }
        let mut prev = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            if layer.input_dim() != prev {
                return Err(Error::Dimension(format!(
                    "layer {k} expects {} inputs but previous layer has {prev} outputs",
                    layer.input_dim()
                )));
            }
            if layer.output_dim() == 0 {
                return Err(Error::InvalidNetwork(format!("layer {k} has no neurons")));
            }
            if layer.biases.len() != layer.output_dim() {
                return Err(Error::Dimension(format!(
                    "layer {k} bias length {} does not match {} rows",
                    layer.biases.len(),
                    layer.output_dim()
                )));
            }
            let last = k + 1 == layers.len();
            let expected = if last {
                Activation::Identity
            } else {
                Activation::Relu
            };
            if layer.activation != expected {
                return Err(Error::InvalidNetwork(format!(
                    "layer {k} must use {expected:?} activation"
                )));
            }
            prev = layer.output_dim();
        }
        for (name, v, want) in [
            ("input_mins", &norm.input_mins, input_dim),
            ("input_maxes", &norm.input_maxes, input_dim),
            ("means", &norm.means, input_dim + 1),
            ("ranges", &norm.ranges, input_dim + 1),
        ] {
            if v.len() != want {
                return Err(Error::Dimension(format!(
                    "{name} has {} entries, expected {want}",
                    v.len()
                )));
            }
        }
        if let Some(i) = norm.ranges.iter().position(|r| !(*r > T::zero())) {
            return Err(Error::InvalidNetwork(format!(
                "range entry {i} is not strictly positive"
            )));
        }
        Ok(Self { layers, norm })
    }

    /// Builds a network from `(weights, biases)` pairs, assigning ReLU to
    /// every layer but the last, with identity normalization.
    pub fn from_affine(layers: Vec<(Vec<Vec<T>>, Vec<T>)>) -> Result<Self> {
        let n = layers.len();
        let layers = layers
            .into_iter()
            .enumerate()
            .map(|(k, (w, b))| {
                let act = if k + 1 == n {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer::new(Matrix::from_rows(w)?, b, act)
            })
            .collect::<Result<Vec<_>>>()?;
        let d = layers.first().map_or(0, Layer::input_dim);
        Self::new(layers, Normalization::identity(d))
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn normalization(&self) -> &Normalization<T> {
        &self.norm
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Layer sizes including the input layer.
    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::output_dim))
            .collect()
    }

    pub fn hidden_neurons(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::output_dim)
            .sum()
    }

    pub fn normalize_input(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(x.iter()
            .zip(&self.norm.means)
            .zip(&self.norm.ranges)
            .map(|((v, m), r)| (*v - *m) / *r)
            .collect())
    }

    /// Evaluates the network. When `normalized` is false the raw input is
    /// normalized first; the output always stays in normalized units.
    pub fn forward(&self, x: &[T], normalized: bool) -> Result<Vec<T>> {
        let x = if normalized {
            self.check_input(x)?;
            x.to_vec()
        } else {
            self.normalize_input(x)?
        };
        Ok(self.forward_unchecked(&x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[T]) -> Vec<T> {
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.apply(&cur);
        }
        cur
    }

    pub fn denormalize_output(&self, y: &[T]) -> Vec<T> {
        let m = self.norm.means[self.input_dim()];
        let r = self.norm.ranges[self.input_dim()];
        y.iter().map(|v| *v * r + m).collect()
    }

    pub fn normalize_output(&self, y: &[T]) -> Vec<T> {
        let m = self.norm.means[self.input_dim()];
        let r = self.norm.ranges[self.input_dim()];
        y.iter().map(|v| (*v - m) / r).collect()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}
