//! Stochastic gradient Langevin dynamics over `y`, used both to produce training
//! counter-examples and for inference.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::InferenceConfig;
use super::energy::GradientEnergy;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::train::{sample_uniform_negatives, Bounds};

/// `lr_final + (lr_init - lr_final) * (1 - step / total)^power`.
pub fn poly_decay(step: usize, total: usize, lr_init: f64, lr_final: f64, power: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument("poly_decay total must be positive".into()));
    }
    if step > total {
        return Err(Error::InvalidArgument(format!("step {step} beyond total {total}")));
    }
    // Written as a blend so both endpoints come out exactly.
    let w = (1.0 - step as f64 / total as f64).powf(power);
    Ok(lr_init * w + lr_final * (1.0 - w))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    /// Polynomial decay from `init` to `last` across the chain.
    Polynomial {
        init: f64,
        last: f64,
        power: f64,
    },
    Constant(f64),
}

impl StepSize {
    pub fn at(&self, k: usize, iterations: usize) -> f64 {
        match *self {
            StepSize::Constant(lr) => lr,
            StepSize::Polynomial { init, .. } if iterations <= 1 => init,
            StepSize::Polynomial { init, last, power } => {
                poly_decay(k, iterations - 1, init, last, power).expect("k < iterations")
            }
        }
    }
}

/// One Langevin chain's settings.
#[derive(Clone, Debug)]
pub struct Chain<'a, T> {
    pub iterations: usize,
    pub step: StepSize,
    pub delta_clip: f64,
    pub noise_scale: f64,
    pub bounds: &'a Bounds<T>,
}

/// Runs the chain in place on every row of `ys`:
///
/// `y <- clip(y - clip(lambda * (grad_y E / 2 + noise_scale * w), +-delta_clip), bounds)`
/// with `w ~ N(0, 1)` per element. Samples are plain values afterwards; nothing
/// downstream differentiates through the chain.
pub fn run_chain<T: Scalar, E: GradientEnergy<T> + ?Sized, R: Rng + ?Sized>(
    energy: &E,
    xs: ArrayView2<T>,
    ys: &mut Array2<T>,
    chain: &Chain<T>,
    rng: &mut R,
    mut trace: Option<&mut Vec<Array2<T>>>,
) -> Result<()> {
    let half = T::lit(0.5);
    let clip = T::lit(chain.delta_clip);
    let noise_scale = chain.noise_scale;
    for k in 0..chain.iterations {
        let lambda = T::lit(chain.step.at(k, chain.iterations));
        let (_, grads) = energy.energies_and_grads(xs, ys.view());
        if let Some(bad) = grads.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("energy gradient {bad} at langevin step {k}")));
        }
        for (j, mut col) in ys.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (chain.bounds.lo[j], chain.bounds.hi[j]);
            Zip::from(&mut col).and(grads.column(j)).for_each(|y, &g| {
                let w = if noise_scale > 0.0 {
                    T::lit(noise_scale * rng.sample::<f64, _>(StandardNormal))
                } else {
                    T::zero()
                };
                let delta = (lambda * (half * g + w)).max(-clip).min(clip);
                *y = (*y - delta).max(lo).min(hi);
            });
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(ys.clone());
        }
    }
    Ok(())
}

/// Langevin inference: a uniform population in `bounds` runs one chain on the
/// polynomial schedule, then a second chain (constant step when
/// `langevin_2nd_iteration_learning_rate` is set, otherwise the same schedule
/// again). Returns the lowest-energy final sample, lowest index on ties.
pub fn langevin_infer<T: Scalar, E: GradientEnergy<T> + ?Sized, R: Rng + ?Sized>(
    energy: &E,
    x: &[T],
    bounds: &Bounds<T>,
    cfg: &InferenceConfig,
    rng: &mut R,
) -> Result<Vec<T>> {
    cfg.validate()?;
    let lc = &cfg.langevin;
    let xs = ArrayView2::from_shape((1, x.len()), x).expect("row view");
    let mut ys = sample_uniform_negatives(rng, cfg.n_samples, bounds);
    let first = Chain {
        iterations: lc.iterations,
        step: StepSize::Polynomial { init: lc.lr_init, last: lc.lr_final, power: lc.poly_power },
        delta_clip: lc.delta_clip,
        noise_scale: lc.noise_scale,
        bounds,
    };
    run_chain(energy, xs, &mut ys, &first, rng, None)?;
    let second = Chain { step: lc.second_chain_lr.map_or(first.step, StepSize::Constant), ..first.clone() };
    run_chain(energy, xs, &mut ys, &second, rng, None)?;
    let energies = energy.energies(xs, ys.view());
    let mut best = 0;
    for (i, e) in energies.iter().enumerate() {
        if !e.is_finite() {
            return Err(Error::NonFinite(format!("final energy {e}")));
        }
        if *e < energies[best] {
            best = i;
        }
    }
    Ok(ys.row(best).to_vec())
}
