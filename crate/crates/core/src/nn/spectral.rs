//! Spectral normalization by persistent power iteration.

use ndarray::{Array1, Array2};

use super::mlp::{normalize_in_place, MlpModel};
use crate::scalar::Scalar;

/// Refines `u` with `iters` power-iteration steps on `w` and returns the
/// estimate `u^T W v` of the largest singular value.
pub fn power_iteration<T: Scalar>(w: &Array2<T>, u: &mut Array1<T>, iters: usize) -> T {
    if u.len() != w.nrows() || u.iter().all(|v| v.is_zero()) {
        *u = Array1::from_elem(w.nrows(), T::one());
        normalize_in_place(u);
    }
    let mut v = Array1::zeros(w.ncols());
    for _ in 0..iters.max(1) {
        v = w.t().dot(u);
        if normalize_in_place(&mut v).is_zero() {
            return T::zero();
        }
        let mut next = w.dot(&v);
        if normalize_in_place(&mut next).is_zero() {
            return T::zero();
        }
        *u = next;
    }
    u.dot(&w.dot(&v))
}

impl<T: Scalar> MlpModel<T> {
    /// Divides every spectral-flagged weight matrix by its estimated top singular
    /// value, running `power_iters` refinement steps on the stored vectors.
    pub fn apply_spectral_norm(&mut self, power_iters: usize) {
        for layer in self.layers.iter_mut().filter(|l| l.spectral) {
            let sigma = power_iteration(&layer.weight, &mut layer.u, power_iters);
            if sigma > T::zero() {
                layer.weight.mapv_inplace(|w| w / sigma);
            }
        }
    }
}
