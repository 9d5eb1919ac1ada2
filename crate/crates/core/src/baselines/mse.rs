use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::nn::{adam_step, AdamState, MlpGrads, MlpModel};
use crate::scalar::Scalar;
use crate::train::{lr_schedule, RegressionDataset, TrainConfig};

/// Mean over rows of `||pred - target||^2`.
pub fn mse_loss<T: Scalar>(pred: ArrayView2<T>, target: ArrayView2<T>) -> f64 {
    let total: f64 = pred.iter().zip(target.iter()).map(|(p, t)| (*p - *t).as_f64().powi(2)).sum();
    total / pred.nrows().max(1) as f64
}

/// Fits `model` to the dataset by Adam on the batch-mean squared error. Dropout is
/// taken from the model. Returns the per-step training loss.
pub fn mse_train<T: Scalar, R: Rng + ?Sized>(
    data: &RegressionDataset<T>,
    model: &mut MlpModel<T>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    check_dim(data.input_dim(), model.input_dim)?;
    check_dim(data.target_dim(), model.output_dim)?;
    let mut adam = AdamState::new(model);
    let mut losses = Vec::with_capacity(cfg.train_iterations);
    let b = cfg.batch_size;
    for step in 0..cfg.train_iterations {
        let idx: Vec<usize> = (0..b).map(|_| rng.gen_range(0..data.len())).collect();
        let xb = data.inputs.select(Axis(0), &idx);
        let yb = data.targets.select(Axis(0), &idx);
        let cache = if model.dropout_rate > 0.0 {
            model.forward_cached(xb.view(), Some(&mut *rng))
        } else {
            model.forward_cached::<R>(xb.view(), None)
        };
        let loss = mse_loss(cache.output.view(), yb.view());
        let two_over_b = T::lit(2.0 / b as f64);
        let d_out: Array2<T> = (&cache.output - &yb).mapv(|d| d * two_over_b);
        let mut grads = MlpGrads::zeros_like(model);
        model.backward(&cache, d_out.view(), Some(&mut grads));
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        adam_step(model, &mut adam, &grads, lr_schedule(step, cfg));
        losses.push(loss);
    }
    Ok(losses)
}
