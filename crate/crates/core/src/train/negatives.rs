use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::dataset::Bounds;
use crate::error::Result;
use crate::infer::{run_chain, Chain, GradientEnergy, LangevinConfig, StepSize};
use crate::scalar::Scalar;

/// `n` i.i.d. uniform samples in the box, one per row.
pub fn sample_uniform_negatives<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, bounds: &Bounds<T>) -> Array2<T> {
    let d = bounds.dim();
    let mut out = Array2::zeros((n, d));
    for mut row in out.rows_mut() {
        for j in 0..d {
            let (lo, hi) = (bounds.lo[j], bounds.hi[j]);
            let u = T::lit(rng.gen::<f64>());
            row[j] = (lo + u * (hi - lo)).min(hi);
        }
    }
    out
}

/// Uniform initial counter-examples refined by one Langevin chain on the
/// polynomial schedule. `xs` holds the conditioning input for each row of the
/// result (or one shared row), `n` rows are produced.
pub fn sample_langevin_negatives<T: Scalar, E: GradientEnergy<T> + ?Sized, R: Rng + ?Sized>(
    energy: &E,
    xs: ArrayView2<T>,
    n: usize,
    bounds: &Bounds<T>,
    cfg: &LangevinConfig,
    rng: &mut R,
) -> Result<Array2<T>> {
    cfg.validate()?;
    let mut ys = sample_uniform_negatives(rng, n, bounds);
    let chain = Chain {
        iterations: cfg.iterations,
        step: StepSize::Polynomial { init: cfg.lr_init, last: cfg.lr_final, power: cfg.poly_power },
        delta_clip: cfg.delta_clip,
        noise_scale: cfg.noise_scale,
        bounds,
    };
    run_chain(energy, xs, &mut ys, &chain, rng, None)?;
    Ok(ys)
}
