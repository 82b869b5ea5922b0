//! Intervals, hyper-rectangles and the uniform Cartesian partition of a
//! requirement's input box into sub-requirements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidSpec(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) / T::lit(2.0)
        }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval<T>) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub(crate) fn new_unchecked(lo: T, hi: T) -> Self {
        debug_assert!(!(lo > hi), "[{lo}, {hi}]");
        Self { lo, hi }
    }
}

/// Width of each of the `n` pieces of `iv`.
pub fn step_size<T: Scalar>(iv: &Interval<T>, n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidSpec("number of sub-intervals must be ≥ 1".into()));
    }
    Ok((iv.hi - iv.lo) / T::from_usize(n).expect("usize fits scalar"))
}

/// Splits `iv` into `n` consecutive closed pieces sharing endpoints.
///
/// Piece `j` (1-based) is `[lo + (j-1)·γ, lo + j·γ]` with the final upper
/// bound pinned to `iv.hi()`.
pub fn subintervals<T: Scalar>(iv: &Interval<T>, n: usize) -> Result<Vec<Interval<T>>> {
    let gamma = step_size(iv, n)?;
    let mut cuts: Vec<T> = (0..=n)
        .map(|j| iv.lo + T::from_usize(j).expect("usize fits scalar") * gamma)
        .collect();
    cuts[0] = iv.lo;
    cuts[n] = iv.hi;
    // Rounding of lo + j·γ may overshoot the pinned upper bound.
    for c in &mut cuts[1..n] {
        if *c > iv.hi {
            *c = iv.hi;
        }
    }
    Ok(cuts
        .windows(2)
        .map(|w| Interval::new_unchecked(w[0], w[1]))
        .collect())
}

/// Axis-aligned box; one of these per sub-requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr<T>", into = "BoxRepr<T>")]
#[serde(bound = "T: Scalar")]
pub struct HyperBox<T: Scalar> {
    dims: Vec<Interval<T>>,
    id: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct BoxRepr<T: Scalar> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<usize>,
    bounds: Vec<[T; 2]>,
}

impl<T: Scalar> TryFrom<BoxRepr<T>> for HyperBox<T> {
    type Error = Error;

    fn try_from(r: BoxRepr<T>) -> Result<Self> {
        let mut b = HyperBox::from_bounds(&r.bounds)?;
        b.id = r.id;
        Ok(b)
    }
}

impl<T: Scalar> From<HyperBox<T>> for BoxRepr<T> {
    fn from(b: HyperBox<T>) -> Self {
        BoxRepr {
            id: b.id,
            bounds: b.bounds(),
        }
    }
}

impl<T: Scalar> HyperBox<T> {
    pub fn new(dims: Vec<Interval<T>>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpec("box must have at least one dimension".into()));
        }
        if let Some(i) = dims.iter().position(|iv| !iv.lo.is_finite() || !iv.hi.is_finite()) {
            return Err(Error::InvalidSpec(format!("box dimension {i} is not finite")));
        }
        Ok(Self { dims, id: None })
    }

    pub fn from_bounds(bounds: &[[T; 2]]) -> Result<Self> {
        let dims = bounds
            .iter()
            .map(|[lo, hi]| Interval::new(*lo, *hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = Some(id);
        self
    }

    pub fn id(&self) -> Option<usize> {
        self.id
    }

    pub fn dims(&self) -> &[Interval<T>] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn bounds(&self) -> Vec<[T; 2]> {
        self.dims.iter().map(|iv| [iv.lo, iv.hi]).collect()
    }

    pub fn lower(&self) -> Vec<T> {
        self.dims.iter().map(|iv| iv.lo).collect()
    }

    pub fn upper(&self) -> Vec<T> {
        self.dims.iter().map(|iv| iv.hi).collect()
    }

    /// Per-dimension midpoint.
    pub fn center(&self) -> Vec<T> {
        self.dims.iter().map(Interval::mid).collect()
    }

    /// Closed membership test. Points of the wrong length are never inside.
    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dims.len() && self.dims.iter().zip(x).all(|(iv, v)| iv.contains(*v))
    }

    pub fn contains_box(&self, other: &HyperBox<T>) -> bool {
        other.dim() == self.dim()
            && self
                .dims
                .iter()
                .zip(&other.dims)
                .all(|(a, b)| a.contains_interval(b))
    }

    pub fn max_width(&self) -> T {
        self.dims
            .iter()
            .map(Interval::width)
            .fold(T::zero(), T::max)
    }

    /// Splits at the midpoint of `dim`; both halves keep the shared face.
    pub fn bisect(&self, dim: usize) -> (HyperBox<T>, HyperBox<T>) {
        let iv = self.dims[dim];
        let mid = iv.mid();
        let mut left = self.clone();
        let mut right = self.clone();
        left.dims[dim] = Interval::new_unchecked(iv.lo, mid);
        right.dims[dim] = Interval::new_unchecked(mid, iv.hi);
        left.id = None;
        right.id = None;
        (left, right)
    }

    /// Clamps `x` into the box coordinate-wise.
    pub fn clamp(&self, x: &mut [T]) {
        for (v, iv) in x.iter_mut().zip(&self.dims) {
            *v = v.max(iv.lo).min(iv.hi);
        }
    }
}

/// How a box is partitioned: which dimensions are split and into how many
/// pieces each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub split_dims: Vec<usize>,
    pub n: usize,
    /// Dimensions narrower than this are never split.
    #[serde(default = "default_min_split_width")]
    pub min_split_width: f64,
}

fn default_min_split_width() -> f64 {
    1e-9
}

impl PartitionSpec {
    pub fn new(split_dims: Vec<usize>, n: usize) -> Self {
        Self {
            split_dims,
            n,
            min_split_width: default_min_split_width(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be ≥ 1".into()));
        }
        if self.split_dims.is_empty() {
            return Err(Error::InvalidSpec("split_dims must not be empty".into()));
        }
        let mut seen = vec![false; dim];
        for &d in &self.split_dims {
            if d >= dim {
                return Err(Error::InvalidSpec(format!(
                    "split dimension {d} out of range for a {dim}-dimensional box"
                )));
            }
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::InvalidSpec(format!("split dimension {d} repeated")));
            }
        }
        Ok(())
    }

    /// The split dimensions that are wide enough to be split on `b`, in
    /// ascending order.
    pub fn effective_split_dims<T: Scalar>(&self, b: &HyperBox<T>) -> Vec<usize> {
        let mut dims: Vec<usize> = self
            .split_dims
            .iter()
            .copied()
            .filter(|&d| b.dims[d].width().to_f64_lossy() >= self.min_split_width)
            .collect();
        dims.sort_unstable();
        dims
    }
}

/// Cartesian product of the per-dimension sub-interval lists.
///
/// Ordering is lexicographic over dimension index with the last split
/// dimension varying fastest; each result carries its ordinal as id.
/// Unsplit dimensions keep the original interval.
pub fn partition<T: Scalar>(b: &HyperBox<T>, spec: &PartitionSpec) -> Result<Vec<HyperBox<T>>> {
    spec.validate(b.dim())?;
    let split = spec.effective_split_dims(b);
    let pieces: Vec<Vec<Interval<T>>> = split
        .iter()
        .map(|&d| subintervals(&b.dims[d], spec.n))
        .collect::<Result<_>>()?;
    let total = pieces.iter().map(Vec::len).product::<usize>();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; split.len()];
    for ordinal in 0..total {
        let mut dims = b.dims.clone();
        for (k, &d) in split.iter().enumerate() {
            dims[d] = pieces[k][idx[k]];
        }
        out.push(HyperBox { dims, id: Some(ordinal) });
        // odometer increment, last position fastest
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < spec.n {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval<f64> {
        Interval::new(lo, hi).unwrap()
    }

    fn phi2_box() -> HyperBox<f64> {
        HyperBox::from_bounds(&[[0.6, 0.67985], [-0.5, 0.5], [-0.5, 0.5]]).unwrap()
    }

    #[test]
    fn phi2_step_sizes() {
        assert!((step_size(&iv(0.6, 0.67985), 4).unwrap() - 0.0199625).abs() < 1e-15);
        assert_eq!(step_size(&iv(-0.5, 0.5), 4).unwrap(), 0.25);
        assert_eq!(step_size(&iv(-0.3, 0.9), 1).unwrap(), 0.9 - -0.3);
        assert!(step_size(&iv(0.0, 1.0), 0).is_err());
    }

    #[test]
    fn theta_subintervals() {
        let got = subintervals(&iv(-0.5, 0.5), 4).unwrap();
        let want = [(-0.5, -0.25), (-0.25, 0.0), (0.0, 0.25), (0.25, 0.5)];
        assert_eq!(got.len(), 4);
        for (g, (lo, hi)) in got.iter().zip(want) {
            assert_eq!((g.lo(), g.hi()), (lo, hi));
        }
    }

    #[test]
    fn rho_subintervals() {
        let got = subintervals(&iv(0.6, 0.67985), 4).unwrap();
        let cuts = [0.6, 0.6199625, 0.639925, 0.6598875, 0.67985];
        for (j, g) in got.iter().enumerate() {
            assert!((g.lo() - cuts[j]).abs() < 1e-12);
            assert!((g.hi() - cuts[j + 1]).abs() < 1e-12);
        }
        assert_eq!(got[0].lo(), 0.6);
        assert_eq!(got[3].hi(), 0.67985);
    }

    #[test]
    fn degenerate_interval_splits_into_points() {
        let got = subintervals(&iv(2.0, 2.0), 3).unwrap();
        assert_eq!(got, vec![iv(2.0, 2.0); 3]);
        assert!(subintervals(&iv(2.0, 2.0), 0).is_err());
    }

    #[test]
    fn phi2_partition_has_64_cells_in_lexicographic_order() {
        let cells = partition(&phi2_box(), &PartitionSpec::new(vec![0, 1, 2], 4)).unwrap();
        assert_eq!(cells.len(), 64);
        let first = cells[0].bounds();
        assert_eq!(first[0][0], 0.6);
        assert!((first[0][1] - 0.6199625).abs() < 1e-12);
        assert_eq!(first[1], [-0.5, -0.25]);
        assert_eq!(first[2], [-0.5, -0.25]);
        assert_eq!(cells[1].bounds()[2], [-0.25, 0.0]);
        assert_eq!(cells[4].bounds()[1], [-0.25, 0.0]);
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(c.id(), Some(i));
        }
    }

    #[test]
    fn identity_partition() {
        let b = phi2_box();
        let cells = partition(&b, &PartitionSpec::new(vec![0, 2], 1)).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].bounds(), b.bounds());
    }

    #[test]
    fn unsplit_dimensions_are_kept() {
        let b = HyperBox::from_bounds(&[[0.0, 1.0], [0.45, 0.5], [3.0, 3.0]]).unwrap();
        let cells = partition(&b, &PartitionSpec::new(vec![0, 2], 2)).unwrap();
        // dim 2 has zero width, so only dim 0 is split
        assert_eq!(cells.len(), 2);
        for c in &cells {
            assert_eq!(c.bounds()[1], [0.45, 0.5]);
            assert_eq!(c.bounds()[2], [3.0, 3.0]);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let b = phi2_box();
        assert!(partition(&b, &PartitionSpec::new(vec![], 4)).is_err());
        assert!(partition(&b, &PartitionSpec::new(vec![3], 4)).is_err());
        assert!(partition(&b, &PartitionSpec::new(vec![0, 0], 4)).is_err());
        assert!(partition(&b, &PartitionSpec::new(vec![0], 0)).is_err());
    }

    #[test]
    fn centers() {
        let b = HyperBox::<f64>::from_bounds(&[[0.6, 0.62], [-0.5, -0.25]]).unwrap();
        let c = b.center();
        assert!((c[0] - 0.61).abs() < 1e-15);
        assert_eq!(c[1], -0.375);
        let p = HyperBox::from_bounds(&[[1.5, 1.5], [-2.0, -2.0]]).unwrap();
        assert_eq!(p.center(), vec![1.5, -2.0]);
        let c = phi2_box().center();
        assert!((c[0] - 0.639925).abs() < 1e-15);
        assert_eq!(&c[1..], &[0.0, 0.0]);
    }

    #[test]
    fn containment_is_closed() {
        let b = HyperBox::from_bounds(&[[0.0, 1.0], [-1.0, 1.0]]).unwrap();
        assert!(b.contains(&[1.0, -1.0]));
        assert!(b.contains(&[0.5, 0.0]));
        assert!(!b.contains(&[0.5, 1.0 + 1e-12]));
        assert!(!b.contains(&[0.5]));
    }

    #[test]
    fn bad_boxes_are_rejected() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert!(HyperBox::<f64>::new(vec![]).is_err());
        assert!(HyperBox::from_bounds(&[[0.0, f64::INFINITY]]).is_err());
    }

    #[test]
    fn json_shape() {
        let b = HyperBox::from_bounds(&[[0.0, 0.5], [1.0, 2.0]]).unwrap().with_id(7);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"id":7,"bounds":[[0.0,0.5],[1.0,2.0]]}"#);
        let back: HyperBox<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<HyperBox<f64>>(r#"{"bounds":[[1.0,0.0]]}"#).is_err());
    }

    #[test]
    fn single_precision_partition() {
        let b = HyperBox::<f32>::from_bounds(&[[-0.5, 0.5], [0.0, 1.0]]).unwrap();
        let cells = partition(&b, &PartitionSpec::new(vec![0, 1], 2)).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[3].bounds(), vec![[0.0, 0.5], [0.5, 1.0]]);
    }
}
