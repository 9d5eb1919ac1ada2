use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::InferenceConfig;
use super::energy::EnergyModel;
use super::resample::{argmax, multinomial_indices, softmax_neg};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::train::{sample_uniform_negatives, Bounds};

/// Derivative-free `argmin_y E(x, y)`.
///
/// A uniform population is scored, turned into `softmax(-E)`, resampled with
/// replacement, jittered with `N(0, sigma)` per element, clipped to the bounds, and
/// `sigma` shrinks by `K`. That repeats for `n_iters - 1` rounds; the last round only
/// scores, and the most probable sample is returned (lowest index on ties).
pub fn dfo_infer<T: Scalar, E: EnergyModel<T> + ?Sized, R: Rng + ?Sized>(
    energy: &E,
    x: &[T],
    bounds: &Bounds<T>,
    cfg: &InferenceConfig,
    rng: &mut R,
) -> Result<Vec<T>> {
    dfo_infer_traced(energy, x, bounds, cfg, rng).map(|(y, _)| y)
}

/// As [`dfo_infer`], also returning the population's mean energy at each round.
pub fn dfo_infer_traced<T: Scalar, E: EnergyModel<T> + ?Sized, R: Rng + ?Sized>(
    energy: &E,
    x: &[T],
    bounds: &Bounds<T>,
    cfg: &InferenceConfig,
    rng: &mut R,
) -> Result<(Vec<T>, Vec<f64>)> {
    cfg.validate()?;
    let xs = ArrayView2::from_shape((1, x.len()), x).expect("row view");
    let mut pop = sample_uniform_negatives(rng, cfg.n_samples, bounds);
    let mut sigma = cfg.sigma_init;
    let mut trace = Vec::with_capacity(cfg.n_iters);
    let mut probs = Vec::new();
    for iter in 1..=cfg.n_iters {
        let energies = energy.energies(xs, pop.view());
        trace.push(energies.iter().map(|e| e.as_f64()).sum::<f64>() / energies.len() as f64);
        probs = softmax_neg(energies.iter().map(|e| e.as_f64()));
        if iter < cfg.n_iters {
            let idx = multinomial_indices(rng, &probs, cfg.n_samples)?;
            pop = pop.select(Axis(0), &idx);
            jitter_columns(&mut pop, 0..bounds.dim(), sigma, bounds, rng);
            sigma *= cfg.shrink;
        }
    }
    Ok((pop.row(argmax(&probs)).to_vec(), trace))
}

pub(crate) fn jitter_columns<T: Scalar, R: Rng + ?Sized>(
    pop: &mut Array2<T>,
    columns: std::ops::Range<usize>,
    sigma: f64,
    bounds: &Bounds<T>,
    rng: &mut R,
) {
    for mut row in pop.rows_mut() {
        for j in columns.clone() {
            let noise = T::lit(sigma * rng.sample::<f64, _>(StandardNormal));
            row[j] = bounds.clip(j, row[j] + noise);
        }
    }
}
