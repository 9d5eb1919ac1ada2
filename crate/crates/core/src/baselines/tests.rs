use approx::assert_abs_diff_eq;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::nn::{init_mlp, MlpModel};
use crate::train::{RegressionDataset, TrainConfig};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mse_cfg(steps: usize, lr: f64) -> TrainConfig {
    TrainConfig {
        train_iterations: steps,
        batch_size: 64,
        learning_rate: lr,
        learning_rate_decay: 0.99,
        learning_rate_decay_steps: 20,
        ..TrainConfig::particle_mse()
    }
}

fn predict(model: &MlpModel<f64>, x: &[f64]) -> Vec<f64> {
    model.forward(x, false, &mut rng(0)).unwrap()
}

#[test]
fn mse_fits_linear_data() {
    let mut r = rng(1);
    let x = Array2::from_shape_fn((200, 2), |_| r.gen_range(-1.0..1.0));
    let y = Array2::from_shape_fn((200, 1), |(i, _)| 2.0 * x[[i, 0]] - x[[i, 1]] + 0.3);
    let data = RegressionDataset::new(x, y).unwrap();
    let mut model: MlpModel<f64> = init_mlp(2, 1, 8, 1, 3, false, 0.0).unwrap();
    // every hidden unit stays active on the domain, so the net is linear there
    model.layers[0].bias.fill(5.0);
    mse_train(&data, &mut model, &mse_cfg(3000, 0.05), &mut rng(2)).unwrap();
    let mut err = 0.0;
    for _ in 0..500 {
        let q = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        err += (predict(&model, &q)[0] - (2.0 * q[0] - q[1] + 0.3)).powi(2) / 500.0;
    }
    assert!(err < 1e-6, "test mse {err}");
}

#[test]
fn mse_interpolates_across_a_step() {
    let x = Array2::from_shape_fn((200, 1), |(i, _)| i as f64 / 199.0);
    let y = x.mapv(|v| if v < 0.5 { 0.0 } else { 1.0 });
    let data = RegressionDataset::new(x, y).unwrap();
    let mut model: MlpModel<f64> = init_mlp(1, 1, 32, 2, 4, false, 0.0).unwrap();
    mse_train(&data, &mut model, &mse_cfg(2000, 1e-2), &mut rng(5)).unwrap();
    let grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
    let preds: Vec<f64> = grid.iter().map(|&q| predict(&model, &[q])[0]).collect();
    assert!(preds.iter().any(|p| (0.2..=0.8).contains(p)));
    // continuous: steps bounded by the network's crude Lipschitz bound
    let lip: f64 = model
        .layers
        .iter()
        .map(|l| l.weight.rows().into_iter().map(|r| r.iter().map(|w| w.abs()).sum::<f64>()).fold(0.0, f64::max))
        .product();
    for w in preds.windows(2) {
        assert!((w[1] - w[0]).abs() <= lip / 2000.0 + 1e-12);
    }
}

#[test]
fn mse_zero_steps_leave_model_unchanged() {
    let data = RegressionDataset::new(array![[0.0], [1.0]], array![[1.0], [2.0]]).unwrap();
    let mut model: MlpModel<f64> = init_mlp(1, 1, 8, 2, 0, false, 0.1).unwrap();
    let before = model.clone();
    mse_train(&data, &mut model, &mse_cfg(0, 1e-3), &mut rng(0)).unwrap();
    assert_eq!(model, before);
    let mut wrong: MlpModel<f64> = init_mlp(2, 1, 8, 2, 0, false, 0.0).unwrap();
    assert!(mse_train(&data, &mut wrong, &mse_cfg(1, 1e-3), &mut rng(0)).is_err());
}

fn head(k: usize, n: usize) -> MdnHead {
    MdnHead::new(k, n)
}

#[test]
fn mdn_gaussian_at_mode() {
    let y = [0.3, -1.2];
    let out = [0.7, 0.3, -1.2, 0.0, 0.0];
    assert_abs_diff_eq!(mdn_loss(&head(1, 2), &out, &y), LN_2PI, epsilon = 1e-12);
    let two = [0.2, -3.0, 0.3, -1.2, 0.3, -1.2, 0.0, 0.0, 0.0, 0.0];
    assert_abs_diff_eq!(mdn_loss(&head(2, 2), &two, &y), LN_2PI, epsilon = 1e-12);
}

#[test]
fn mdn_gradient_matches_finite_differences() {
    let mut r = rng(7);
    for trial in 0..20 {
        let mut h = head(3, 2);
        h.train_temperature = if trial % 2 == 0 { 1.0 } else { 0.5 };
        let out: Vec<f64> = (0..h.output_dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let (_, g) = mdn_loss_with_grad(&h, &out, &y);
        for i in 0..out.len() {
            let mut p = out.clone();
            let mut m = out.clone();
            p[i] += 1e-6;
            m[i] -= 1e-6;
            let fd = (mdn_loss(&h, &p, &y) - mdn_loss(&h, &m, &y)) / 2e-6;
            assert!((g[i] - fd).abs() <= 1e-3 * fd.abs().max(1.0), "output {i}: {} vs {fd}", g[i]);
        }
    }
}

#[test]
fn mdn_std_is_clamped() {
    let h = head(1, 1);
    let tiny = mdn_loss(&h, &[0.0, 0.0, -50.0], &[1.0]);
    let at_floor = mdn_loss(&h, &[0.0, 0.0, LOG_STD_MIN], &[1.0]);
    assert_eq!(tiny, at_floor);
    assert!(tiny.is_finite());
    let (_, g) = mdn_loss_with_grad(&h, &[0.0, 0.0, 50.0], &[1.0]);
    assert_eq!(g[2], 0.0);
}

proptest! {
    #[test]
    fn mdn_loss_is_permutation_invariant(vals in prop::collection::vec(-2.0..2.0f64, 15), y in prop::collection::vec(-1.0..1.0f64, 2), rot in 1usize..3) {
        // 3 components, 2 dims
        let h = head(3, 2);
        let perm = |k: usize| (k + rot) % 3;
        let mut shuffled = vals.clone();
        for k in 0..3 {
            shuffled[perm(k)] = vals[k];
            for d in 0..2 {
                shuffled[3 + perm(k) * 2 + d] = vals[3 + k * 2 + d];
                shuffled[9 + perm(k) * 2 + d] = vals[9 + k * 2 + d];
            }
        }
        prop_assert!((mdn_loss(&h, &vals, &y) - mdn_loss(&h, &shuffled, &y)).abs() < 1e-12);
        let w = h.weights(&vals, 0.7);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn mdn_sampling_limits() {
    let mut h = head(2, 1);
    let out = [0.1, 0.4, -0.5, 0.5, -1.0, -1.0];
    h.test_temperature = 0.0;
    h.variance_exponent = 50.0;
    let mut r = rng(8);
    for _ in 0..1000 {
        let y = mdn_sample(&h, &out, &mut r).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-3);
    }
    h.test_temperature = 1e-3;
    for _ in 0..1000 {
        assert!(mdn_sample(&h, &out, &mut r).unwrap()[0] > 0.0);
    }
}

#[test]
fn mdn_sampling_matches_mixture_weights() {
    // two branches of a split circle: y = 0.5 +- 0.3, weights 0.3 / 0.7
    let h = head(2, 1);
    let out = [0.3f64.ln(), 0.7f64.ln(), 0.2, 0.8, (0.01f64).ln(), (0.01f64).ln()];
    let mut r = rng(9);
    let upper = (0..100_000).filter(|_| mdn_sample(&h, &out, &mut r).unwrap()[0] > 0.5).count();
    let frac = upper as f64 / 1e5;
    assert!((frac - 0.7).abs() < 0.02, "{frac}");
}

#[test]
fn mdn_training_learns_two_branches() {
    let mut r = rng(10);
    let x = Array2::from_shape_fn((400, 1), |_| r.gen_range(0.0..1.0));
    let y = Array2::from_shape_fn((400, 1), |(i, _)| if i % 2 == 0 { 0.8 } else { 0.2 });
    let data = RegressionDataset::new(x, y).unwrap();
    let h = MdnHead::new(5, 1);
    let mut model: MlpModel<f64> = init_mlp(1, h.output_dim(), 32, 2, 3, false, 0.0).unwrap();
    let losses = mdn_train(&data, &mut model, &h, &mse_cfg(1500, 1e-2), &mut rng(11)).unwrap();
    let early: f64 = losses[..50].iter().sum::<f64>() / 50.0;
    let late: f64 = losses[losses.len() - 50..].iter().sum::<f64>() / 50.0;
    assert!(late < early - 0.3, "{early} -> {late}");
    let out = predict(&model, &[0.5]);
    let mut s = rng(12);
    let draws: Vec<f64> = (0..400).map(|_| mdn_sample(&h, &out, &mut s).unwrap()[0]).collect();
    let near = |c: f64| draws.iter().filter(|v| (*v - c).abs() < 0.1).count();
    assert!(near(0.2) > 100 && near(0.8) > 100, "{} {}", near(0.2), near(0.8));
}

#[test]
fn neighbor_examples() {
    let idx = NeighborIndex::new(array![[0.0], [1.0]], array![[10.0], [20.0]]).unwrap();
    assert_eq!(idx.predict(&[0.4]).unwrap(), vec![10.0]);
    assert_eq!(idx.predict(&[1.0]).unwrap(), vec![20.0]);
    assert_eq!(idx.predict(&[0.5]).unwrap(), vec![10.0]);
    assert_eq!(idx.min_distance(&[0.25]).unwrap(), 0.25);
    let empty = NeighborIndex::<f64>::new(Array2::zeros((0, 1)), Array2::zeros((0, 1))).unwrap();
    assert!(empty.predict(&[0.0]).is_err());
    assert!(NeighborIndex::new(array![[0.0]], array![[1.0], [2.0]]).is_err());
}

#[test]
fn neighbor_matches_brute_force_and_memorizes() {
    let mut r = rng(13);
    let x = Array2::from_shape_fn((300, 3), |_| r.gen_range(0.0..1.0));
    let y = Array2::from_shape_fn((300, 2), |_| r.gen_range(0.0..1.0));
    let idx = NeighborIndex::new(x.clone(), y.clone()).unwrap();
    for i in 0..300 {
        assert_eq!(idx.predict(&x.row(i).to_vec()).unwrap(), y.row(i).to_vec());
    }
    for _ in 0..1000 {
        let q: Vec<f64> = (0..3).map(|_| r.gen_range(-0.2..1.2)).collect();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..300 {
            let mut d = 0.0;
            for j in 0..3 {
                d += (x[[i, j]] - q[j]) * (x[[i, j]] - q[j]);
            }
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        assert_eq!(idx.predict(&q).unwrap(), y.row(best).to_vec());
    }
}
