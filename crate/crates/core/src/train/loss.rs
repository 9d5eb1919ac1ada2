use ndarray::ArrayView2;

use crate::nn::MlpModel;
use crate::scalar::Scalar;

/// `log(sum(exp(v)))` with max-subtraction.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `-log(exp(-E+) / (exp(-E+) + sum_j exp(-E_j)))`.
pub fn info_nce_loss(positive: f64, negatives: &[f64]) -> f64 {
    assert!(!negatives.is_empty(), "InfoNCE needs at least one negative");
    let logits: Vec<f64> = std::iter::once(-positive).chain(negatives.iter().map(|e| -e)).collect();
    positive + logsumexp(&logits)
}

/// InfoNCE loss for one group `[E+, E_1, ..., E_n]` and its gradient with respect
/// to each energy: `1 - p+` for the positive, `-p_j` for the negatives.
pub fn info_nce_with_grad(group: &[f64]) -> (f64, Vec<f64>) {
    let logits: Vec<f64> = group.iter().map(|e| -e).collect();
    let lse = logsumexp(&logits);
    let mut grad: Vec<f64> = logits.iter().map(|l| -(l - lse).exp()).collect();
    grad[0] += 1.0;
    (group[0] + lse, grad)
}

/// `max(0, ||g||_inf - margin)^2` plus where the max is attained and its sign.
pub(crate) fn hinge_inf(g: &[f64], margin: f64) -> (f64, usize, f64) {
    let mut k = 0;
    for (i, v) in g.iter().enumerate() {
        if v.abs() > g[k].abs() {
            k = i;
        }
    }
    let viol = g[k].abs() - margin;
    if viol > 0.0 {
        (viol * viol, k, g[k].signum() * viol)
    } else {
        (0.0, k, 0.0)
    }
}

/// Gradient penalty `sum_i sum_j max(0, ||grad_y E(x_i, y_ij)||_inf - margin)^2`
/// over the rows of `xs`/`ys` (typically the final Langevin samples).
pub fn gradient_penalty<T: Scalar>(model: &MlpModel<T>, xs: ArrayView2<T>, ys: ArrayView2<T>, margin: f64) -> f64 {
    let (_, grads) = model.energy_and_grad_y(xs, ys);
    grads.rows().into_iter().map(|g| hinge_inf(&g.iter().map(|v| v.as_f64()).collect::<Vec<_>>(), margin).0).sum()
}
