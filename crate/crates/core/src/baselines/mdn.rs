use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::infer::{multinomial_indices, softmax_neg};
use crate::nn::{adam_step, AdamState, MlpGrads, MlpModel};
use crate::scalar::Scalar;
use crate::train::{logsumexp, lr_schedule, RegressionDataset, TrainConfig};

/// Standard deviations are `exp(log_std)` with `log_std` clamped to this range.
pub const LOG_STD_MIN: f64 = -9.210_340_371_976_184; // ln 1e-4
pub const LOG_STD_MAX: f64 = 4.605_170_185_988_092; // ln 1e2

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Layout of an MDN output vector: `[K logits | K*n means | K*n log-stds]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdnHead {
    pub n_components: usize,
    pub target_dim: usize,
    pub train_temperature: f64,
    pub test_temperature: f64,
    pub variance_exponent: f64,
}

impl MdnHead {
    pub fn new(n_components: usize, target_dim: usize) -> Self {
        Self { n_components, target_dim, train_temperature: 1.0, test_temperature: 1.0, variance_exponent: 1.0 }
    }

    pub fn output_dim(&self) -> usize {
        self.n_components * (1 + 2 * self.target_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_components == 0 || self.target_dim == 0 {
            return Err(Error::InvalidArgument("mdn head needs at least one component and one dim".into()));
        }
        if !(self.train_temperature > 0.0) || !(self.test_temperature >= 0.0) || !self.variance_exponent.is_finite() {
            return Err(Error::InvalidArgument("mdn temperatures must be positive".into()));
        }
        Ok(())
    }

    fn mean_at(&self, k: usize, d: usize) -> usize {
        self.n_components + k * self.target_dim + d
    }

    fn log_std_at(&self, k: usize, d: usize) -> usize {
        self.n_components * (1 + self.target_dim) + k * self.target_dim + d
    }

    /// Mixture weights `softmax(logits / temperature)`; zero temperature picks the
    /// max logit (lowest index on ties).
    pub fn weights(&self, out: &[f64], temperature: f64) -> Vec<f64> {
        let logits = &out[..self.n_components];
        if temperature <= 0.0 {
            let best = crate::infer::argmax(logits);
            return (0..self.n_components).map(|k| if k == best { 1.0 } else { 0.0 }).collect();
        }
        softmax_neg(logits.iter().map(|l| -l / temperature))
    }
}

fn clamped_log_std(v: f64) -> (f64, bool) {
    if v < LOG_STD_MIN {
        (LOG_STD_MIN, false)
    } else if v > LOG_STD_MAX {
        (LOG_STD_MAX, false)
    } else {
        (v, true)
    }
}

/// Mixture negative log-likelihood of `y`; logits are divided by the train
/// temperature before the softmax.
pub fn mdn_loss(head: &MdnHead, out: &[f64], y: &[f64]) -> f64 {
    mdn_loss_with_grad(head, out, y).0
}

/// NLL and its gradient with respect to the head outputs.
pub fn mdn_loss_with_grad(head: &MdnHead, out: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let (kc, n) = (head.n_components, head.target_dim);
    let tau = head.train_temperature;
    let scaled: Vec<f64> = out[..kc].iter().map(|l| l / tau).collect();
    let lse_logits = logsumexp(&scaled);
    let log_pi: Vec<f64> = scaled.iter().map(|s| s - lse_logits).collect();

    let mut a = vec![0.0; kc];
    for k in 0..kc {
        let mut log_n = 0.0;
        for d in 0..n {
            let (ls, _) = clamped_log_std(out[head.log_std_at(k, d)]);
            let z = (y[d] - out[head.mean_at(k, d)]) / ls.exp();
            log_n -= 0.5 * LN_2PI + ls + 0.5 * z * z;
        }
        a[k] = log_pi[k] + log_n;
    }
    let lse_a = logsumexp(&a);
    let nll = -lse_a;

    let mut grad = vec![0.0; out.len()];
    for k in 0..kc {
        let w = (a[k] - lse_a).exp();
        grad[k] = -(w - log_pi[k].exp()) / tau;
        for d in 0..n {
            let (ls, free) = clamped_log_std(out[head.log_std_at(k, d)]);
            let inv_std = (-ls).exp();
            let z = (y[d] - out[head.mean_at(k, d)]) * inv_std;
            grad[head.mean_at(k, d)] = -w * z * inv_std;
            if free {
                grad[head.log_std_at(k, d)] = -w * (z * z - 1.0);
            }
        }
    }
    (nll, grad)
}

/// Draws a component from `softmax(logits / test_temperature)`, then a Gaussian
/// sample whose std is raised to `variance_exponent`.
pub fn mdn_sample<R: Rng + ?Sized>(head: &MdnHead, out: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_dim(head.output_dim(), out.len())?;
    let probs = head.weights(out, head.test_temperature);
    let k = multinomial_indices(rng, &probs, 1)?[0];
    Ok((0..head.target_dim)
        .map(|d| {
            let (ls, _) = clamped_log_std(out[head.log_std_at(k, d)]);
            let std = ls.exp().powf(head.variance_exponent);
            out[head.mean_at(k, d)] + std * rng.sample::<f64, _>(StandardNormal)
        })
        .collect())
}

/// Trains an MDN head by Adam on the batch-mean NLL. Returns per-step losses.
pub fn mdn_train<T: Scalar, R: Rng + ?Sized>(
    data: &RegressionDataset<T>,
    model: &mut MlpModel<T>,
    head: &MdnHead,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    head.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    check_dim(data.input_dim(), model.input_dim)?;
    check_dim(head.output_dim(), model.output_dim)?;
    check_dim(head.target_dim, data.target_dim())?;
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
        let mut d_out = Array2::<T>::zeros(cache.output.dim());
        let mut loss = 0.0;
        for i in 0..b {
            let out: Vec<f64> = cache.output.row(i).iter().map(|v| v.as_f64()).collect();
            let y: Vec<f64> = yb.row(i).iter().map(|v| v.as_f64()).collect();
            let (l, g) = mdn_loss_with_grad(head, &out, &y);
            loss += l / b as f64;
            for (slot, gv) in d_out.row_mut(i).iter_mut().zip(g) {
                *slot = T::lit(gv / b as f64);
            }
        }
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
