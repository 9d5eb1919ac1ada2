use super::mlp::{MlpGrads, MlpModel};
use crate::scalar::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments mirroring the model's parameter shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: MlpGrads<T>,
    pub second_moment: MlpGrads<T>,
    pub step_count: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &MlpModel<T>) -> Self {
        Self { first_moment: MlpGrads::zeros_like(model), second_moment: MlpGrads::zeros_like(model), step_count: 0 }
    }
}

/// One bias-corrected Adam update with `beta1 = 0.9`, `beta2 = 0.999`.
pub fn adam_step<T: Scalar>(model: &mut MlpModel<T>, state: &mut AdamState<T>, grads: &MlpGrads<T>, lr: f64) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (T::lit(BETA1), T::lit(BETA2));
    let c1 = T::lit(1.0 - BETA1.powi(t));
    let c2 = T::lit(1.0 - BETA2.powi(t));
    let lr = T::lit(lr);
    let eps = T::lit(EPSILON);
    let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    };
    for (k, layer) in model.layers.iter_mut().enumerate() {
        ndarray::Zip::from(&mut layer.weight)
            .and(&grads.weights[k])
            .and(&mut state.first_moment.weights[k])
            .and(&mut state.second_moment.weights[k])
            .for_each(|p, &g, m, v| update(p, g, m, v));
        ndarray::Zip::from(&mut layer.bias)
            .and(&grads.biases[k])
            .and(&mut state.first_moment.biases[k])
            .and(&mut state.second_moment.biases[k])
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
}
