use ndarray::{Array1, Array2, ArrayView2};

use crate::nn::MlpModel;
use crate::scalar::Scalar;

/// Batched energy evaluation. Rows of `ys` are candidates; `xs` holds either one
/// row per candidate or a single row shared by all of them.
pub trait EnergyModel<T: Scalar> {
    fn energies(&self, xs: ArrayView2<T>, ys: ArrayView2<T>) -> Array1<T>;
}

/// Energy with `d E / d y`.
pub trait GradientEnergy<T: Scalar>: EnergyModel<T> {
    fn energies_and_grads(&self, xs: ArrayView2<T>, ys: ArrayView2<T>) -> (Array1<T>, Array2<T>);
}

impl<T: Scalar> EnergyModel<T> for MlpModel<T> {
    fn energies(&self, xs: ArrayView2<T>, ys: ArrayView2<T>) -> Array1<T> {
        MlpModel::energies(self, xs, ys)
    }
}

impl<T: Scalar> GradientEnergy<T> for MlpModel<T> {
    fn energies_and_grads(&self, xs: ArrayView2<T>, ys: ArrayView2<T>) -> (Array1<T>, Array2<T>) {
        self.energy_and_grad_y(xs, ys)
    }
}

/// Wraps a per-sample closure `f(x, y)` as a batched energy.
pub struct FnEnergy<F>(pub F);

impl<T: Scalar, F: Fn(&[T], &[T]) -> T> EnergyModel<T> for FnEnergy<F> {
    fn energies(&self, xs: ArrayView2<T>, ys: ArrayView2<T>) -> Array1<T> {
        ys.rows()
            .into_iter()
            .enumerate()
            .map(|(i, y)| {
                let x = xs.row(if xs.nrows() == 1 { 0 } else { i });
                (self.0)(&x.to_vec(), &y.to_vec())
            })
            .collect()
    }
}

/// Energy models conditioned on a prefix `y[..=j]`, one per output dimension.
pub trait PrefixEnergy<T: Scalar> {
    fn dims(&self) -> usize;
    /// Energies of model `j` on rows of `prefixes` (each of length `j + 1`).
    fn prefix_energies(&self, j: usize, xs: ArrayView2<T>, prefixes: ArrayView2<T>) -> Array1<T>;
}

/// One energy model per output dimension; model `j` sees `x` and `y[..=j]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AutoregressiveEnsemble<T> {
    pub models: Vec<MlpModel<T>>,
}

impl<T: Scalar> AutoregressiveEnsemble<T> {
    pub fn new(models: Vec<MlpModel<T>>, input_dim: usize) -> crate::Result<Self> {
        for (j, m) in models.iter().enumerate() {
            crate::error::check_dim(input_dim + j + 1, m.input_dim)?;
            crate::error::check_dim(1, m.output_dim)?;
        }
        Ok(Self { models })
    }
}

impl<T: Scalar> PrefixEnergy<T> for AutoregressiveEnsemble<T> {
    fn dims(&self) -> usize {
        self.models.len()
    }

    fn prefix_energies(&self, j: usize, xs: ArrayView2<T>, prefixes: ArrayView2<T>) -> Array1<T> {
        self.models[j].energies(xs, prefixes)
    }
}
