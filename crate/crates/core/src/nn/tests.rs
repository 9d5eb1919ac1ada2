use approx::assert_abs_diff_eq;
use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_model(input: usize, output: usize, width: usize, depth: usize, seed: u64, residual: bool) -> MlpModel<f64> {
    let mut m = MlpModel::new(&MlpConfig {
        input_dim: input,
        output_dim: output,
        width,
        depth,
        seed,
        spectral: false,
        dropout: 0.0,
        residual,
    })
    .unwrap();
    // non-zero biases so every code path is exercised
    let mut r = rng(seed + 1000);
    for l in &mut m.layers {
        l.bias.mapv_inplace(|_| r.gen_range(-0.3..0.3));
    }
    m
}

fn single_layer(weight: Array2<f64>, bias: Array1<f64>) -> MlpModel<f64> {
    MlpModel {
        input_dim: weight.ncols(),
        output_dim: weight.nrows(),
        hidden_width: weight.nrows(),
        depth: 0,
        dropout_rate: 0.0,
        residual: false,
        layers: vec![Dense { weight, bias, spectral: false, u: Array1::zeros(0) }],
    }
}

/// Straight-line evaluation: explicit loops, no ndarray products.
fn reference_forward(m: &MlpModel<f64>, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let last = m.layers.len() - 1;
    for (k, l) in m.layers.iter().enumerate() {
        let mut z = vec![0.0; l.weight.nrows()];
        for i in 0..l.weight.nrows() {
            let mut acc = l.bias[i];
            for j in 0..l.weight.ncols() {
                acc += l.weight[[i, j]] * h[j];
            }
            z[i] = if k < last { acc.max(0.0) } else { acc };
            if k < last && k > 0 && m.residual {
                z[i] += h[i];
            }
        }
        h = z;
    }
    h
}

#[test]
fn init_shapes_match_particle_config() {
    let m: MlpModel<f64> = init_mlp(3, 1, 128, 16, 0, false, 0.0).unwrap();
    assert_eq!(m.layers.len(), 17);
    assert_eq!(m.layers[0].weight.dim(), (128, 3));
    for l in &m.layers[1..16] {
        assert_eq!(l.weight.dim(), (128, 128));
    }
    assert_eq!(m.layers[16].weight.dim(), (1, 128));
    for pair in m.layers.windows(2) {
        assert_eq!(pair[0].fan_out(), pair[1].fan_in());
    }
}

#[test]
fn init_is_seed_deterministic() {
    let a: MlpModel<f64> = init_mlp(2, 1, 4, 1, 7, false, 0.0).unwrap();
    let b: MlpModel<f64> = init_mlp(2, 1, 4, 1, 7, false, 0.0).unwrap();
    let c: MlpModel<f64> = init_mlp(2, 1, 4, 1, 8, false, 0.0).unwrap();
    let bits = |m: &MlpModel<f64>| m.flatten_params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn init_rejects_bad_arguments() {
    assert!(init_mlp::<f64>(0, 1, 4, 1, 0, false, 0.0).is_err());
    assert!(init_mlp::<f64>(2, 1, 0, 1, 0, false, 0.0).is_err());
    assert!(init_mlp::<f64>(2, 1, 4, 0, 0, false, 0.0).is_err());
    assert!(init_mlp::<f64>(2, 1, 4, 1, 0, false, 1.0).is_err());
    assert!(init_mlp::<f64>(2, 1, 4, 1, 0, false, -0.1).is_err());
}

#[test]
fn he_uniform_variance() {
    for seed in 0..10 {
        let m: MlpModel<f64> = init_mlp(64, 1, 128, 3, seed, false, 0.0).unwrap();
        for l in &m.layers[..3] {
            let n = l.weight.len() as f64;
            let mean = l.weight.sum() / n;
            let var = l.weight.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
            let target = 2.0 / l.fan_in() as f64;
            assert!((var / target - 1.0).abs() < 0.2, "var {var} target {target}");
        }
    }
}

#[test]
fn zero_network_outputs_zero() {
    let mut m: MlpModel<f64> = init_mlp(3, 2, 5, 2, 1, false, 0.0).unwrap();
    for l in &mut m.layers {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    let out = m.forward(&[1.0, -2.0, 3.0], false, &mut rng(0)).unwrap();
    assert_eq!(out, vec![0.0, 0.0]);
    let g = m.grad_input(&[0.5], &[0.2, 0.3]);
    assert!(g.is_err(), "output_dim 2 is not an energy model");
}

#[test]
fn identity_layer_passes_input_through() {
    let m = single_layer(Array2::eye(3), Array1::zeros(3));
    let out = m.forward(&[0.1, -0.2, 3.5], false, &mut rng(0)).unwrap();
    assert_eq!(out, vec![0.1, -0.2, 3.5]);
}

#[test]
fn forward_matches_straight_line_evaluation() {
    for residual in [false, true] {
        let m = random_model(4, 3, 6, 2, 11, residual);
        let mut r = rng(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| r.gen_range(-2.0..2.0)).collect();
            let got = m.forward(&x, false, &mut r).unwrap();
            let want = reference_forward(&m, &x);
            for (a, b) in got.iter().zip(&want) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn forward_rejects_wrong_length() {
    let m = random_model(4, 1, 3, 1, 0, false);
    assert!(m.forward(&[1.0, 2.0], false, &mut rng(0)).is_err());
}

#[test]
fn eval_forward_is_pure_even_with_dropout_configured() {
    let mut m = random_model(3, 1, 8, 2, 2, false);
    m.dropout_rate = 0.5;
    let x = [0.3, -0.1, 0.9];
    let a = m.forward(&x, false, &mut rng(1)).unwrap();
    let b = m.forward(&x, false, &mut rng(2)).unwrap();
    assert_eq!(a, b);
    let trained: Vec<Vec<f64>> = (0..8).map(|s| m.forward(&x, true, &mut rng(s)).unwrap()).collect();
    assert!(trained.iter().any(|t| t != &a), "dropout should perturb training-mode outputs");
}

#[test]
fn linear_energy_gradient_is_y_block_of_weights() {
    let w = array![[0.5, -1.0, 2.0, 3.0]];
    let m = single_layer(w, array![0.7]);
    let g = m.grad_input(&[1.0, 2.0], &[-0.3, 0.4]).unwrap();
    assert_eq!(g, vec![2.0, 3.0]);
}

#[test]
fn constant_energy_has_zero_gradient() {
    let mut m = random_model(3, 1, 5, 2, 3, false);
    for l in &mut m.layers {
        l.weight.fill(0.0);
    }
    let g = m.grad_input(&[0.1], &[0.2, 0.3]).unwrap();
    assert!(g.iter().all(|v| *v == 0.0));
}

fn central_difference(f: impl Fn(f64) -> f64, at: f64, h: f64) -> f64 {
    (f(at + h) - f(at - h)) / (2.0 * h)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn grad_input_matches_finite_differences() {
    for residual in [false, true] {
        let m = random_model(5, 1, 16, 3, 21, residual);
        let mut r = rng(99);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();
            let g = m.grad_input(&x, &y).unwrap();
            for j in 0..2 {
                let fd = central_difference(
                    |v| {
                        let mut yy = y.clone();
                        yy[j] = v;
                        let input: Vec<f64> = x.iter().chain(&yy).copied().collect();
                        reference_forward(&m, &input)[0]
                    },
                    y[j],
                    1e-5,
                );
                assert!(rel_err(g[j], fd) < 1e-4, "analytic {} fd {}", g[j], fd);
            }
        }
    }
}

#[test]
fn param_gradient_of_linear_energy_is_the_input() {
    let m = single_layer(array![[0.2, -0.4, 0.1]], array![0.0]);
    let x = array![[1.5, -2.0, 0.25]];
    let cache = m.forward_cached::<ChaCha8Rng>(x.view(), None);
    let mut g = MlpGrads::zeros_like(&m);
    m.backward(&cache, Array2::ones((1, 1)).view(), Some(&mut g));
    assert_eq!(g.weights[0], x);
    assert_eq!(g.biases[0], array![1.0]);
}

#[test]
fn param_gradients_match_finite_differences() {
    // loss = sum_b c_b * out_b^2 over a small batch
    for residual in [false, true] {
        let m = random_model(3, 1, 6, 2, 31, residual);
        let mut r = rng(3);
        let x = Array2::from_shape_fn((4, 3), |_| r.gen_range(-1.0..1.0));
        let c = [0.3, -1.2, 0.7, 2.0];
        let loss = |m: &MlpModel<f64>| {
            let out = m.forward_batch(x.view());
            (0..4).map(|b| c[b] * out[[b, 0]].powi(2)).sum::<f64>()
        };
        let cache = m.forward_cached::<ChaCha8Rng>(x.view(), None);
        let d_out = Array2::from_shape_fn((4, 1), |(b, _)| 2.0 * c[b] * cache.output[[b, 0]]);
        let mut g = MlpGrads::zeros_like(&m);
        m.backward(&cache, d_out.view(), Some(&mut g));
        let flat = g.flatten();
        for idx in 0..m.num_parameters() {
            let fd = central_difference(
                |v| {
                    let mut mm = m.clone();
                    *mm.param_mut(idx) = v;
                    loss(&mm)
                },
                m.flatten_params()[idx],
                1e-6,
            );
            assert!(
                rel_err(flat[idx], fd) < 1e-3 || (flat[idx] - fd).abs() < 1e-7,
                "param {idx}: {} vs {}",
                flat[idx],
                fd
            );
        }
    }
}

#[test]
fn input_gradient_param_grads_match_finite_differences() {
    for residual in [false, true] {
        let m = random_model(4, 1, 7, 3, 41, residual);
        let mut r = rng(8);
        let x = Array2::from_shape_fn((5, 4), |_| r.gen_range(-1.0..1.0));
        let rows = [0usize, 2, 3, 3];
        let cols = [1usize, 3, 0, 2];
        let coeff = [0.5, -1.5, 2.0, 0.25];
        let objective = |m: &MlpModel<f64>| {
            let cache = m.forward_cached::<ChaCha8Rng>(x.view(), None);
            let d_in = m.backward(&cache, Array2::ones((5, 1)).view(), None);
            (0..4).map(|i| coeff[i] * d_in[[rows[i], cols[i]]]).sum::<f64>()
        };
        let cache = m.forward_cached::<ChaCha8Rng>(x.view(), None);
        let mut g = MlpGrads::zeros_like(&m);
        m.accumulate_input_gradient_param_grads(&cache, &rows, &cols, &coeff, &mut g);
        let flat = g.flatten();
        for idx in 0..m.num_parameters() {
            let fd = central_difference(
                |v| {
                    let mut mm = m.clone();
                    *mm.param_mut(idx) = v;
                    objective(&mm)
                },
                m.flatten_params()[idx],
                1e-6,
            );
            assert!((flat[idx] - fd).abs() < 1e-6 + 1e-3 * fd.abs(), "param {idx}: {} vs {}", flat[idx], fd);
        }
    }
}

fn svd_max(w: &Array2<f64>) -> f64 {
    let m = nalgebra::DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[[i, j]]);
    m.singular_values().max()
}

fn spectral_single(weight: Array2<f64>, seed: u64) -> MlpModel<f64> {
    let mut m = single_layer(weight, Array1::zeros(0));
    let rows = m.layers[0].weight.nrows();
    let mut r = rng(seed);
    m.layers[0].bias = Array1::zeros(rows);
    m.layers[0].spectral = true;
    m.layers[0].u = Array1::from_shape_fn(rows, |_| r.gen_range(-1.0..1.0));
    m
}

#[test]
fn spectral_norm_on_diagonal() {
    let mut m = spectral_single(array![[3.0, 0.0], [0.0, 1.0]], 0);
    m.apply_spectral_norm(20);
    let w = &m.layers[0].weight;
    assert!((w[[0, 0]] - 1.0).abs() < 0.01);
    assert!((w[[1, 1]] - 1.0 / 3.0).abs() < 0.01 / 3.0);
}

#[test]
fn spectral_norm_leaves_orthogonal_matrix() {
    let t = 0.7f64;
    let q = array![[t.cos(), -t.sin()], [t.sin(), t.cos()]];
    let mut m = spectral_single(q.clone(), 1);
    m.apply_spectral_norm(20);
    for (a, b) in m.layers[0].weight.iter().zip(q.iter()) {
        assert!((a - b).abs() < 0.01);
    }
}

#[test]
fn spectral_norm_random_matrices_against_svd() {
    let mut r = rng(17);
    for &n in &[8usize, 64, 128] {
        let w = Array2::from_shape_fn((n, n), |_| r.gen_range(-1.0..1.0));
        let mut m = spectral_single(w, n as u64);
        m.apply_spectral_norm(20);
        let s = svd_max(&m.layers[0].weight);
        assert!((0.99..=1.01).contains(&s), "n={n} sigma={s}");
        // persistent iteration keeps tightening
        m.apply_spectral_norm(50);
        let s = svd_max(&m.layers[0].weight);
        assert!(s <= 1.0 + 1e-3, "n={n} sigma={s}");
    }
}

#[test]
fn spectral_init_constrains_hidden_layers() {
    let m: MlpModel<f64> = init_mlp(6, 1, 32, 3, 4, true, 0.0).unwrap();
    for l in &m.layers[..3] {
        assert!(l.spectral);
        assert!(svd_max(&l.weight) <= 1.0 + 1e-3);
    }
    assert!(!m.layers[3].spectral);
}

#[test]
fn adam_zero_gradient_leaves_parameters() {
    let mut m = random_model(3, 1, 4, 1, 0, false);
    let before = m.clone();
    let mut st = AdamState::new(&m);
    let g = MlpGrads::zeros_like(&m);
    adam_step(&mut m, &mut st, &g, 1e-3);
    assert_eq!(m.flatten_params(), before.flatten_params());
    assert_eq!(st.step_count, 1);
}

#[test]
fn adam_first_step_and_constant_gradient() {
    let mut m = single_layer(array![[0.0, 0.0]], array![0.0]);
    let mut st = AdamState::new(&m);
    let mut g = MlpGrads::zeros_like(&m);
    g.weights[0] = array![[0.5, -2.0]];
    let lr = 0.01;
    adam_step(&mut m, &mut st, &g, lr);
    // direct evaluation of the bias-corrected first step
    for (j, gj) in [0.5f64, -2.0].iter().enumerate() {
        let m1 = (1.0 - BETA1) * gj;
        let v1 = (1.0 - BETA2) * gj * gj;
        let expect = -lr * (m1 / (1.0 - BETA1)) / ((v1 / (1.0 - BETA2)).sqrt() + EPSILON);
        assert_abs_diff_eq!(m.layers[0].weight[[0, j]], expect, epsilon = 1e-15);
    }
    // closed-form recursion: with constant g, m_hat = g and v_hat = g^2 at every step
    for _ in 0..200 {
        let before = m.layers[0].weight[[0, 0]];
        adam_step(&mut m, &mut st, &g, lr);
        let step = before - m.layers[0].weight[[0, 0]];
        assert!((step - lr * 0.5 / (0.5 + EPSILON)).abs() < 1e-12);
    }
    assert_eq!(st.step_count, 201);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let mut m: MlpModel<f64> = init_mlp(5, 1, 9, 2, 3, true, 0.0).unwrap();
    m.residual = true;
    let s = m.to_json().unwrap();
    let back = MlpModel::<f64>::from_json(&s).unwrap();
    let bits = |m: &MlpModel<f64>| {
        let mut v: Vec<u64> = m.flatten_params().iter().map(|x| x.to_bits()).collect();
        for l in &m.layers {
            v.extend(l.u.iter().map(|x| x.to_bits()));
        }
        v
    };
    assert_eq!(bits(&m), bits(&back));
    assert_eq!(m, back);
    assert!(MlpModel::<f64>::from_json("{\"input_dim\":1}").is_err());
}

#[test]
fn f32_models_work() {
    let m: MlpModel<f32> = init_mlp(3, 1, 8, 2, 0, true, 0.0).unwrap();
    let g = m.grad_input(&[0.1, 0.2], &[0.3]).unwrap();
    assert_eq!(g.len(), 1);
    assert!(g[0].is_finite());
}
