use ndarray::{s, ArrayView2, Axis};
use rand::Rng;

use super::config::InferenceConfig;
use super::dfo::jitter_columns;
use super::energy::PrefixEnergy;
use super::resample::{argmax, multinomial_indices, softmax_neg};
use crate::error::{check_dim, Result};
use crate::scalar::Scalar;
use crate::train::{sample_uniform_negatives, Bounds};

/// Autoregressive derivative-free `argmin_y`.
///
/// Inside every round the dimensions are swept in order: model `j` scores the
/// prefixes `y[..=j]`, whole samples are resampled by those scores, and only
/// coordinate `j` is jittered and clipped. `sigma` shrinks once per round. The
/// final round only scores; the winner maximizes the product of the per-model
/// probabilities, i.e. has the lowest summed prefix energy.
pub fn autoregressive_dfo_infer<T: Scalar, E: PrefixEnergy<T> + ?Sized, R: Rng + ?Sized>(
    ensemble: &E,
    x: &[T],
    bounds: &Bounds<T>,
    cfg: &InferenceConfig,
    rng: &mut R,
) -> Result<Vec<T>> {
    cfg.validate()?;
    check_dim(ensemble.dims(), bounds.dim())?;
    let xs = ArrayView2::from_shape((1, x.len()), x).expect("row view");
    let mut pop = sample_uniform_negatives(rng, cfg.n_samples, bounds);
    let mut sigma = cfg.sigma_init;
    let mut total = vec![0.0; cfg.n_samples];
    for iter in 1..=cfg.n_iters {
        for j in 0..ensemble.dims() {
            let energies = ensemble.prefix_energies(j, xs, pop.slice(s![.., ..=j]));
            if iter < cfg.n_iters {
                let probs = softmax_neg(energies.iter().map(|e| e.as_f64()));
                let idx = multinomial_indices(rng, &probs, cfg.n_samples)?;
                pop = pop.select(Axis(0), &idx);
                jitter_columns(&mut pop, j..j + 1, sigma, bounds, rng);
            } else {
                total.iter_mut().zip(energies.iter()).for_each(|(t, e)| *t += e.as_f64());
            }
        }
        if iter < cfg.n_iters {
            sigma *= cfg.shrink;
        }
    }
    Ok(pop.row(argmax(&softmax_neg(total))).to_vec())
}
