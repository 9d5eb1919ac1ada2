use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Width added on each side of a dimension whose data range is empty.
pub const DEGENERATE_EPSILON: f64 = 1e-6;

/// Sample pairs `(x_i, y_i)`, one per row.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionDataset<T> {
    pub inputs: Array2<T>,
    pub targets: Array2<T>,
}

impl<T: Scalar> RegressionDataset<T> {
    pub fn new(inputs: Array2<T>, targets: Array2<T>) -> Result<Self> {
        check_dim(inputs.nrows(), targets.nrows())?;
        Ok(Self { inputs, targets })
    }

    pub fn from_rows(inputs: &[Vec<T>], targets: &[Vec<T>]) -> Result<Self> {
        check_dim(inputs.len(), targets.len())?;
        let m = inputs.first().map_or(0, Vec::len);
        let n = targets.first().map_or(0, Vec::len);
        if inputs.iter().any(|r| r.len() != m) || targets.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        let x = Array2::from_shape_vec((inputs.len(), m), inputs.concat()).expect("checked shape");
        let y = Array2::from_shape_vec((targets.len(), n), targets.concat()).expect("checked shape");
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.targets.ncols()
    }

    /// Applies the given normalizers to inputs and targets.
    pub fn normalized(&self, x: &Normalizer<T>, y: &Normalizer<T>) -> Self {
        Self { inputs: x.normalize_rows(self.inputs.view()), targets: y.normalize_rows(self.targets.view()) }
    }
}

/// Per-dimension axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    /// Dimensions whose data range was empty and got widened.
    #[serde(default)]
    pub degenerate: Vec<bool>,
}

impl<T: Scalar> Bounds<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidArgument("bounds need lo <= hi".into()));
        }
        let degenerate = vec![false; lo.len()];
        Ok(Self { lo, hi, degenerate })
    }

    /// The box `[-1, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self { lo: vec![-T::one(); dim], hi: vec![T::one(); dim], degenerate: vec![false; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, y: &[T]) -> bool {
        y.len() == self.dim() && y.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn clip(&self, j: usize, v: T) -> T {
        v.max(self.lo[j]).min(self.hi[j])
    }

    /// Bounds expressed in the normalizer's coordinates.
    pub fn normalized(&self, norm: &Normalizer<T>) -> Self {
        Self { lo: norm.normalize(&self.lo), hi: norm.normalize(&self.hi), degenerate: self.degenerate.clone() }
    }

    /// Restricts to the dimensions `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            lo: self.lo[range.clone()].to_vec(),
            hi: self.hi[range.clone()].to_vec(),
            degenerate: self.degenerate[range].to_vec(),
        }
    }
}

/// Regression bounds from data: per-dimension min/max, widened by
/// `buffer * (max - min)` on each side, then clipped to `env_limits`.
pub fn compute_bounds<T: Scalar>(
    targets: ArrayView2<T>,
    buffer: f64,
    env_limits: Option<&[(f64, f64)]>,
) -> Result<Bounds<T>> {
    if targets.nrows() == 0 {
        return Err(Error::Empty("dataset"));
    }
    if buffer < 0.0 {
        return Err(Error::InvalidArgument(format!("negative bounds buffer {buffer}")));
    }
    if let Some(l) = env_limits {
        check_dim(targets.ncols(), l.len())?;
    }
    let n = targets.ncols();
    let (mut lo, mut hi, mut degenerate) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (j, col) in targets.axis_iter(Axis(1)).enumerate() {
        let min = col.iter().fold(T::infinity(), |a, &b| a.min(b));
        let max = col.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let (mut l, mut h) = if max > min {
            let pad = T::lit(buffer) * (max - min);
            (min - pad, max + pad)
        } else {
            (min - T::lit(DEGENERATE_EPSILON), max + T::lit(DEGENERATE_EPSILON))
        };
        if let Some(limits) = env_limits {
            let (el, eh) = limits[j];
            l = l.max(T::lit(el));
            h = h.min(T::lit(eh));
        }
        degenerate.push(max <= min);
        lo.push(l);
        hi.push(h);
    }
    Ok(Bounds { lo, hi, degenerate })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Zero mean, unit variance per dimension.
    ZScore,
    /// Affine map of `[min, max]` onto `[-1, 1]` per dimension.
    UnitRange,
}

/// Frozen per-dimension affine map `v -> (v - shift) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<T> {
    pub mode: NormMode,
    pub shift: Vec<T>,
    pub scale: Vec<T>,
    /// Dimensions with zero spread; those keep unit scale.
    #[serde(default)]
    pub degenerate: Vec<bool>,
}

pub fn fit_normalizer<T: Scalar>(data: ArrayView2<T>, mode: NormMode) -> Result<Normalizer<T>> {
    if data.nrows() == 0 {
        return Err(Error::Empty("dataset"));
    }
    match mode {
        NormMode::ZScore => {
            let n = T::lit(data.nrows() as f64);
            let mean: Array1<T> = data.sum_axis(Axis(0)).mapv(|s| s / n);
            let mut scale = Vec::with_capacity(data.ncols());
            let mut degenerate = Vec::with_capacity(data.ncols());
            for (j, col) in data.axis_iter(Axis(1)).enumerate() {
                let var = col.iter().map(|&v| (v - mean[j]) * (v - mean[j])).fold(T::zero(), |a, b| a + b) / n;
                let std = var.sqrt();
                let bad = !(std > T::lit(1e-12));
                degenerate.push(bad);
                scale.push(if bad { T::one() } else { std });
            }
            Ok(Normalizer { mode, shift: mean.to_vec(), scale, degenerate })
        }
        NormMode::UnitRange => {
            let lo: Vec<T> = data.axis_iter(Axis(1)).map(|c| c.iter().fold(T::infinity(), |a, &b| a.min(b))).collect();
            let hi: Vec<T> =
                data.axis_iter(Axis(1)).map(|c| c.iter().fold(T::neg_infinity(), |a, &b| a.max(b))).collect();
            Ok(Normalizer::unit_range(&lo, &hi))
        }
    }
}

impl<T: Scalar> Normalizer<T> {
    /// Maps `[lo, hi]` onto `[-1, 1]` per dimension.
    pub fn unit_range(lo: &[T], hi: &[T]) -> Self {
        let two = T::lit(2.0);
        let mut scale = Vec::with_capacity(lo.len());
        let mut degenerate = Vec::with_capacity(lo.len());
        for (&l, &h) in lo.iter().zip(hi) {
            let bad = !(h > l);
            degenerate.push(bad);
            scale.push(if bad { T::one() } else { (h - l) / two });
        }
        Self {
            mode: NormMode::UnitRange,
            shift: lo.iter().zip(hi).map(|(&l, &h)| (l + h) / two).collect(),
            scale,
            degenerate,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mode: NormMode::ZScore,
            shift: vec![T::zero(); dim],
            scale: vec![T::one(); dim],
            degenerate: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn normalize(&self, v: &[T]) -> Vec<T> {
        v.iter().zip(self.shift.iter().zip(&self.scale)).map(|(&x, (&s, &c))| (x - s) / c).collect()
    }

    pub fn denormalize(&self, v: &[T]) -> Vec<T> {
        v.iter().zip(self.shift.iter().zip(&self.scale)).map(|(&x, (&s, &c))| x * c + s).collect()
    }

    pub fn normalize_rows(&self, rows: ArrayView2<T>) -> Array2<T> {
        let mut out = rows.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.shift[j]) / self.scale[j];
            }
        }
        out
    }

    pub fn normalize_view(&self, v: ArrayView1<T>) -> Array1<T> {
        Array1::from(self.normalize(&v.to_vec()))
    }

    /// Restricts to the dimensions `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            mode: self.mode,
            shift: self.shift[range.clone()].to_vec(),
            scale: self.scale[range.clone()].to_vec(),
            degenerate: self.degenerate[range].to_vec(),
        }
    }
}
