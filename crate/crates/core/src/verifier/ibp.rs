//! Interval bound propagation.

use crate::error::{Error, Result};
use crate::geometry::{HyperBox, Interval};
use crate::model::{relu, Activation, Layer, Network};
use crate::scalar::Scalar;

/// Bounds for one layer: before and after its activation.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBounds<T> {
    pub pre: Vec<Interval<T>>,
    pub post: Vec<Interval<T>>,
}

pub(crate) fn affine_bounds<T: Scalar>(layer: &Layer<T>, input: &[Interval<T>]) -> Vec<Interval<T>> {
    layer
        .weights
        .iter_rows()
        .zip(&layer.biases)
        .map(|(row, b)| {
            let mut lo = T::zero();
            let mut hi = T::zero();
            for (w, iv) in row.iter().zip(input) {
                if *w >= T::zero() {
                    lo += *w * iv.lo();
                    hi += *w * iv.hi();
                } else {
                    lo += *w * iv.hi();
                    hi += *w * iv.lo();
                }
            }
            Interval::new_unchecked(lo + *b, hi + *b)
        })
        .collect()
}

/// Sound per-layer activation bounds over `region`.
pub fn ibp_bounds<T: Scalar>(net: &Network<T>, region: &HyperBox<T>) -> Result<Vec<LayerBounds<T>>> {
    if region.dim() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "box has {} dimensions, network expects {}",
            region.dim(),
            net.input_dim()
        )));
    }
    let mut cur: Vec<Interval<T>> = region.dims().to_vec();
    let mut out = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let pre = affine_bounds(layer, &cur);
        let post = match layer.activation {
            Activation::Relu => pre
                .iter()
                .map(|iv| Interval::new_unchecked(relu(iv.lo()), relu(iv.hi())))
                .collect(),
            Activation::Identity => pre.clone(),
        };
        cur = post.clone();
        out.push(LayerBounds { pre, post });
    }
    Ok(out)
}

/// Output-layer bounds only.
pub fn output_bounds<T: Scalar>(net: &Network<T>, region: &HyperBox<T>) -> Result<Vec<Interval<T>>> {
    Ok(ibp_bounds(net, region)?
        .pop()
        .map(|lb| lb.post)
        .unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_bounds() {
        let net = Network::from_affine(vec![
            (vec![vec![1.0]], vec![0.0]),
            (vec![vec![1.0]], vec![0.0]),
        ])
        .unwrap();
        let b = HyperBox::from_bounds(&[[-1.0, 1.0]]).unwrap();
        let bounds = ibp_bounds(&net, &b).unwrap();
        assert_eq!((bounds[0].pre[0].lo(), bounds[0].pre[0].hi()), (-1.0, 1.0));
        let out = output_bounds(&net, &b).unwrap();
        assert_eq!((out[0].lo(), out[0].hi()), (0.0, 1.0));
    }

    #[test]
    fn negation_swaps_bounds() {
        let net = Network::from_affine(vec![(vec![vec![-1.0]], vec![0.0])]).unwrap();
        let b = HyperBox::from_bounds(&[[0.0, 2.0]]).unwrap();
        let out = output_bounds(&net, &b).unwrap();
        assert_eq!((out[0].lo(), out[0].hi()), (-2.0, 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let net = Network::from_affine(vec![(vec![vec![-1.0]], vec![0.0])]).unwrap();
        let b = HyperBox::from_bounds(&[[0.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(ibp_bounds(&net, &b).is_err());
    }
}
