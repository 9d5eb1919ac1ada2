use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{lr_schedule, CounterexampleMode, GradientPenalty, TrainConfig};
use super::dataset::{Bounds, RegressionDataset};
use super::loss::{hinge_inf, info_nce_with_grad};
use super::negatives::{sample_langevin_negatives, sample_uniform_negatives};
use crate::error::{check_dim, Error, Result};
use crate::nn::{adam_step, AdamState, MlpGrads, MlpModel};
use crate::scalar::Scalar;

/// Per-step training diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    /// Total loss (InfoNCE plus penalty) per step.
    pub losses: Vec<f64>,
    pub penalties: Vec<f64>,
}

/// Trains an energy model with InfoNCE on an already-normalized dataset.
///
/// Each step draws a batch with replacement, fresh counter-examples for every
/// sample (uniform in `bounds`, optionally refined by Langevin), and applies one
/// Adam update on the batch-mean loss. Spectrally flagged layers are
/// re-normalized after every update.
pub fn train_ebm<T: Scalar, R: Rng + ?Sized>(
    data: &RegressionDataset<T>,
    bounds: &Bounds<T>,
    model: &mut MlpModel<T>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainTrace> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    check_dim(data.target_dim(), bounds.dim())?;
    check_dim(data.input_dim() + data.target_dim(), model.input_dim)?;
    check_dim(1, model.output_dim)?;
    let mut adam = AdamState::new(model);
    let mut trace = TrainTrace::default();
    for step in 0..cfg.train_iterations {
        let (loss, penalty, grads) = ebm_step(data, bounds, model, cfg, rng)?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        adam_step(model, &mut adam, &grads, lr_schedule(step, cfg));
        if model.spectral_norm_enabled() {
            model.apply_spectral_norm(cfg.spectral_power_iterations);
        }
        trace.losses.push(loss);
        trace.penalties.push(penalty);
    }
    Ok(trace)
}

/// Loss, gradient-penalty part, and parameter gradients for one sampled batch.
pub(crate) fn ebm_step<T: Scalar, R: Rng + ?Sized>(
    data: &RegressionDataset<T>,
    bounds: &Bounds<T>,
    model: &MlpModel<T>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(f64, f64, MlpGrads<T>)> {
    let (b, k) = (cfg.batch_size, cfg.train_counter_examples);
    let (m, n) = (data.input_dim(), data.target_dim());
    let idx: Vec<usize> = (0..b).map(|_| rng.gen_range(0..data.len())).collect();
    let xb = data.inputs.select(Axis(0), &idx);
    let yb = data.targets.select(Axis(0), &idx);

    let negatives = match cfg.counterexample_mode {
        CounterexampleMode::Uniform => sample_uniform_negatives(rng, b * k, bounds),
        CounterexampleMode::LangevinChain => {
            let xs = repeat_rows(&xb, k);
            sample_langevin_negatives(model, xs.view(), b * k, bounds, &cfg.langevin, rng)?
        }
    };

    let group = k + 1;
    let mut input = Array2::<T>::zeros((b * group, m + n));
    for i in 0..b {
        let base = i * group;
        input.slice_mut(s![base..base + group, ..m]).assign(&xb.row(i).broadcast((group, m)).expect("broadcast"));
        input.slice_mut(s![base, m..]).assign(&yb.row(i));
        input.slice_mut(s![base + 1..base + group, m..]).assign(&negatives.slice(s![i * k..(i + 1) * k, ..]));
    }

    let cache = if model.dropout_rate > 0.0 {
        model.forward_cached(input.view(), Some(rng))
    } else {
        model.forward_cached::<ChaCha8Rng>(input.view(), None)
    };
    let scale = 1.0 / b as f64;
    let mut d_out = Array2::<T>::zeros((b * group, 1));
    let mut loss = 0.0;
    for i in 0..b {
        let energies: Vec<f64> = (0..group).map(|r| cache.output[[i * group + r, 0]].as_f64()).collect();
        let (l, g) = info_nce_with_grad(&energies);
        loss += l * scale;
        for r in 0..group {
            d_out[[i * group + r, 0]] = T::lit(g[r] * scale);
        }
    }
    let mut grads = MlpGrads::zeros_like(model);
    model.backward(&cache, d_out.view(), Some(&mut grads));

    let mut penalty = 0.0;
    if cfg.gradient_penalty == GradientPenalty::FinalStepOnly {
        let d_in = model.backward(&cache, Array2::ones((b * group, 1)).view(), None);
        let (mut rows, mut cols, mut coeff) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..b {
            for r in 1..group {
                let row = i * group + r;
                let g: Vec<f64> = d_in.slice(s![row, m..]).iter().map(|v| v.as_f64()).collect();
                let (p, kmax, c) = hinge_inf(&g, cfg.gradient_margin);
                if p > 0.0 {
                    penalty += p * scale;
                    rows.push(row);
                    cols.push(m + kmax);
                    coeff.push(T::lit(2.0 * c * scale));
                }
            }
        }
        model.accumulate_input_gradient_param_grads(&cache, &rows, &cols, &coeff, &mut grads);
    }
    Ok((loss + penalty, penalty, grads))
}

pub(crate) fn repeat_rows<T: Scalar>(rows: &Array2<T>, times: usize) -> Array2<T> {
    let idx: Vec<usize> = (0..rows.nrows()).flat_map(|i| std::iter::repeat(i).take(times)).collect();
    rows.select(Axis(0), &idx)
}
