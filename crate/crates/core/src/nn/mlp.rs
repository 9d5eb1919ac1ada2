use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Power-iteration steps run when a spectral model is created.
pub const SPECTRAL_INIT_ITERS: usize = 100;

/// One fully-connected layer. `weight` is stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
    /// Whether this layer is kept spectrally normalized.
    pub spectral: bool,
    /// Persistent power-iteration vector (length `out`); empty when `spectral` is off.
    pub u: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.nrows()
    }
}

/// Architecture options for [`MlpModel::new`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub output_dim: usize,
    pub width: usize,
    /// Number of hidden layers.
    pub depth: usize,
    pub seed: u64,
    #[serde(default)]
    pub spectral: bool,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default)]
    pub residual: bool,
}

/// Feed-forward ReLU network: `depth` hidden layers of `hidden_width` units and a
/// linear output layer.
///
/// With `residual` set, every hidden layer after the first adds its input to its
/// activation (`h <- h + relu(W h + b)`).
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel<T> {
    pub layers: Vec<Dense<T>>,
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_width: usize,
    pub depth: usize,
    pub dropout_rate: f64,
    pub residual: bool,
}

/// Intermediate values kept from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    /// Input fed to each layer.
    inputs: Vec<Array2<T>>,
    /// Per hidden layer: ReLU derivative times dropout scale.
    gates: Vec<Array2<T>>,
    pub output: Array2<T>,
}

impl<T> ForwardCache<T> {
    pub fn batch_size(&self) -> usize {
        self.output.nrows()
    }
}

/// Parameter-shaped container, used for gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Scalar> MlpGrads<T> {
    pub fn zeros_like(model: &MlpModel<T>) -> Self {
        Self {
            weights: model.layers.iter().map(|l| Array2::zeros(l.weight.raw_dim())).collect(),
            biases: model.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for w in &mut self.weights {
            w.mapv_inplace(|v| v * factor);
        }
        for b in &mut self.biases {
            b.mapv_inplace(|v| v * factor);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    /// All entries, layer by layer: weights row-major then bias.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Seeded He-uniform initialization; biases start at zero.
pub fn init_mlp<T: Scalar>(
    input_dim: usize,
    output_dim: usize,
    width: usize,
    depth: usize,
    seed: u64,
    spectral: bool,
    dropout: f64,
) -> Result<MlpModel<T>> {
    MlpModel::new(&MlpConfig { input_dim, output_dim, width, depth, seed, spectral, dropout, residual: false })
}

impl<T: Scalar> MlpModel<T> {
    pub fn new(cfg: &MlpConfig) -> Result<Self> {
        if cfg.input_dim == 0 || cfg.output_dim == 0 || cfg.width == 0 || cfg.depth == 0 {
            return Err(Error::InvalidArgument(format!(
                "dimensions must be positive (input {}, output {}, width {}, depth {})",
                cfg.input_dim, cfg.output_dim, cfg.width, cfg.depth
            )));
        }
        if !(0.0..1.0).contains(&cfg.dropout) {
            return Err(Error::InvalidArgument(format!("dropout {} not in [0, 1)", cfg.dropout)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut layers = Vec::with_capacity(cfg.depth + 1);
        for k in 0..=cfg.depth {
            let fan_in = if k == 0 { cfg.input_dim } else { cfg.width };
            let fan_out = if k == cfg.depth { cfg.output_dim } else { cfg.width };
            let limit = (6.0 / fan_in as f64).sqrt();
            let weight = Array2::from_shape_fn((fan_out, fan_in), |_| T::lit(rng.gen_range(-limit..limit)));
            // Output layer stays unconstrained so the energy scale is learnable.
            let spectral = cfg.spectral && k < cfg.depth;
            let u = if spectral {
                let mut u = Array1::from_shape_fn(fan_out, |_| T::lit(rng.sample::<f64, _>(StandardNormal)));
                normalize_in_place(&mut u);
                u
            } else {
                Array1::zeros(0)
            };
            layers.push(Dense { weight, bias: Array1::zeros(fan_out), spectral, u });
        }
        let mut model = Self {
            layers,
            input_dim: cfg.input_dim,
            output_dim: cfg.output_dim,
            hidden_width: cfg.width,
            depth: cfg.depth,
            dropout_rate: cfg.dropout,
            residual: cfg.residual,
        };
        if cfg.spectral {
            model.apply_spectral_norm(SPECTRAL_INIT_ITERS);
        }
        Ok(model)
    }

    pub fn spectral_norm_enabled(&self) -> bool {
        self.layers.iter().any(|l| l.spectral)
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn is_hidden(&self, k: usize) -> bool {
        k + 1 < self.layers.len()
    }

    fn skips(&self, k: usize) -> bool {
        self.residual && k > 0 && self.is_hidden(k)
    }

    /// Forward pass for a single input vector. Dropout is applied only when `train_mode`.
    pub fn forward<R: Rng + ?Sized>(&self, input: &[T], train_mode: bool, rng: &mut R) -> Result<Vec<T>> {
        check_dim(self.input_dim, input.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row view");
        let out = if train_mode && self.dropout_rate > 0.0 {
            self.forward_cached(x, Some(rng)).output
        } else {
            self.forward_batch(x)
        };
        Ok(out.row(0).to_vec())
    }

    /// Evaluation-mode forward pass over a batch (rows are samples).
    pub fn forward_batch(&self, x: ArrayView2<T>) -> Array2<T> {
        debug_assert_eq!(x.ncols(), self.input_dim);
        let mut h = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight.t());
            z += &layer.bias;
            if self.is_hidden(k) {
                z.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
                if self.skips(k) {
                    z += &h;
                }
            }
            h = z;
        }
        h
    }

    /// Forward pass that keeps what [`backward`](Self::backward) needs. Passing an RNG
    /// turns on training mode (dropout).
    pub fn forward_cached<R: Rng + ?Sized>(&self, x: ArrayView2<T>, dropout_rng: Option<&mut R>) -> ForwardCache<T> {
        debug_assert_eq!(x.ncols(), self.input_dim);
        let keep = 1.0 - self.dropout_rate;
        let mut rng = dropout_rng.filter(|_| self.dropout_rate > 0.0);
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut gates = Vec::with_capacity(self.depth);
        let mut h = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight.t());
            z += &layer.bias;
            if self.is_hidden(k) {
                let mut gate = z.mapv(|v| if v > T::zero() { T::one() } else { T::zero() });
                if let Some(rng) = rng.as_deref_mut() {
                    let scale = T::lit(1.0 / keep);
                    gate.mapv_inplace(|g| if rng.gen::<f64>() < keep { g * scale } else { T::zero() });
                }
                let mut a = &z * &gate;
                // relu(z) * mask / keep == z * gate
                if self.skips(k) {
                    a += &h;
                }
                gates.push(gate);
                inputs.push(h);
                h = a;
            } else {
                inputs.push(h);
                h = z;
            }
        }
        ForwardCache { inputs, gates, output: h }
    }

    /// Backpropagates `d_out` (gradient of a scalar loss w.r.t. the batch outputs).
    /// Parameter gradients are accumulated into `param_grads` when given; the
    /// gradient w.r.t. the batch inputs is returned.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        d_out: ArrayView2<T>,
        mut param_grads: Option<&mut MlpGrads<T>>,
    ) -> Array2<T> {
        let mut delta = d_out.to_owned();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let dz = if self.is_hidden(k) { &delta * &cache.gates[k] } else { delta.clone() };
            if let Some(g) = param_grads.as_deref_mut() {
                g.weights[k] += &dz.t().dot(&cache.inputs[k]);
                g.biases[k] += &dz.sum_axis(Axis(0));
            }
            let mut d_in = dz.dot(&layer.weight);
            if self.skips(k) {
                d_in += &delta;
            }
            delta = d_in;
        }
        delta
    }

    /// Parameter gradients of `sum_r coeff[r] * d out[rows[r]] / d input[rows[r], columns[r]]`.
    ///
    /// For a ReLU network the input gradient is a product of weight matrices and
    /// (locally constant) activation masks, so its derivative w.r.t. the weights is
    /// obtained by pushing the one-hot input direction through the masked linear
    /// network and backpropagating that. Bias gradients of this quantity are zero.
    /// Requires `output_dim == 1`.
    pub fn accumulate_input_gradient_param_grads(
        &self,
        cache: &ForwardCache<T>,
        rows: &[usize],
        columns: &[usize],
        coeff: &[T],
        grads: &mut MlpGrads<T>,
    ) {
        assert_eq!(self.output_dim, 1, "input-gradient penalty needs a scalar output");
        assert!(rows.len() == columns.len() && rows.len() == coeff.len());
        if rows.is_empty() {
            return;
        }
        let n = rows.len();
        let mut tangent = Array2::<T>::zeros((n, self.input_dim));
        for (r, &c) in columns.iter().enumerate() {
            tangent[[r, c]] = T::one();
        }
        let gates: Vec<Array2<T>> = cache.gates.iter().map(|g| g.select(Axis(0), rows)).collect();
        let mut tangents = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut next = tangent.dot(&layer.weight.t());
            if self.is_hidden(k) {
                next *= &gates[k];
                if self.skips(k) {
                    next += &tangent;
                }
            }
            tangents.push(tangent);
            tangent = next;
        }
        let mut delta = Array2::from_shape_fn((n, 1), |(r, _)| coeff[r]);
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let dz = if self.is_hidden(k) { &delta * &gates[k] } else { delta.clone() };
            grads.weights[k] += &dz.t().dot(&tangents[k]);
            let mut d_in = dz.dot(&layer.weight);
            if self.skips(k) {
                d_in += &delta;
            }
            delta = d_in;
        }
    }

    /// `d E(x, y) / d y` for an energy model fed `concat(x, y)`, with dropout off.
    pub fn grad_input(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        if self.output_dim != 1 {
            return Err(Error::InvalidArgument("grad_input needs an energy model (output_dim 1)".into()));
        }
        check_dim(self.input_dim, x.len() + y.len())?;
        let input = Array1::from_iter(x.iter().chain(y).copied()).insert_axis(Axis(0));
        let cache = self.forward_cached::<ChaCha8Rng>(input.view(), None);
        let d_in = self.backward(&cache, Array2::ones((1, 1)).view(), None);
        Ok(d_in.slice(s![0, x.len()..]).to_vec())
    }

    /// Energies and `d E / d y` for a batch of `(x, y)` rows. `xs` may hold a single
    /// row, which is then shared by every `y`.
    pub fn energy_and_grad_y(&self, xs: ArrayView2<T>, ys: ArrayView2<T>) -> (Array1<T>, Array2<T>) {
        let input = concat_inputs(xs, ys);
        let cache = self.forward_cached::<ChaCha8Rng>(input.view(), None);
        let d_in = self.backward(&cache, Array2::ones((input.nrows(), 1)).view(), None);
        let m = xs.ncols();
        (cache.output.column(0).to_owned(), d_in.slice(s![.., m..]).to_owned())
    }

    /// Energies for a batch of `(x, y)` rows, broadcasting a single `x` row.
    pub fn energies(&self, xs: ArrayView2<T>, ys: ArrayView2<T>) -> Array1<T> {
        let input = concat_inputs(xs, ys);
        self.forward_batch(input.view()).column(0).to_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// All parameters, layer by layer: weights row-major then bias.
    pub fn flatten_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    /// Mutable access to the parameter at a flat index (ordering of [`flatten_params`](Self::flatten_params)).
    pub fn param_mut(&mut self, mut index: usize) -> &mut T {
        for l in &mut self.layers {
            let nw = l.weight.len();
            if index < nw {
                let cols = l.weight.ncols();
                return &mut l.weight[[index / cols, index % cols]];
            }
            index -= nw;
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }
}

/// Builds `[x | y]` rows; a one-row `xs` is repeated for every `y`.
pub fn concat_inputs<T: Scalar>(xs: ArrayView2<T>, ys: ArrayView2<T>) -> Array2<T> {
    let n = ys.nrows();
    if xs.nrows() == n {
        return concatenate(Axis(1), &[xs.view(), ys.view()]).expect("matching rows");
    }
    assert_eq!(xs.nrows(), 1, "xs must have one row or one row per y");
    let m = xs.ncols();
    let mut out = Array2::zeros((n, m + ys.ncols()));
    out.slice_mut(s![.., ..m]).assign(&xs.broadcast((n, m)).expect("broadcast x"));
    out.slice_mut(s![.., m..]).assign(&ys);
    out
}

pub(crate) fn normalize_in_place<T: Scalar>(v: &mut Array1<T>) -> T {
    let norm = v.dot(v).sqrt();
    if norm > T::zero() {
        v.mapv_inplace(|x| x / norm);
    }
    norm
}
