use std::path::Path;

use ndarray::{concatenate, s, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, Method, Precision};
use crate::baselines::{mdn_sample, mdn_train, mse_train, MdnHead, NeighborIndex};
use crate::error::{check_dim, Result};
use crate::infer::{
    autoregressive_dfo_infer, dfo_infer, langevin_infer, AutoregressiveEnsemble, InferenceConfig, Variant,
};
use crate::nn::{MlpConfig, MlpModel, MlpRecord};
use crate::train::{
    compute_bounds, fit_normalizer, train_ebm, Bounds, CounterexampleMode, NormMode, Normalizer, RegressionDataset,
    TrainConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Body {
    Energy { model: MlpModel<f64>, inference: InferenceConfig },
    Autoregressive { ensemble: AutoregressiveEnsemble<f64>, inference: InferenceConfig },
    Explicit { model: MlpModel<f64> },
    Mdn { model: MlpModel<f64>, head: MdnHead },
    Neighbors { index: NeighborIndex<f64> },
}

/// A fitted regressor with its normalizers; maps raw inputs to raw outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub input_norm: Normalizer<f64>,
    pub target_norm: Normalizer<f64>,
    /// Regression bounds in normalized target space.
    pub bounds: Bounds<f64>,
    pub body: Body,
}

/// Training diagnostics; `losses[d]` is the loss trace of sub-model `d`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitLog {
    pub losses: Vec<Vec<f64>>,
}

impl TrainedModel {
    /// Trains the experiment's method on raw data with training seed `seed`.
    pub fn fit(spec: &ExperimentSpec, data: &RegressionDataset<f64>, seed: u64) -> Result<(Self, FitLog)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (data.input_dim(), data.target_dim());
        if let Method::NearestNeighbor = spec.method {
            if data.is_empty() {
                return Err(crate::Error::Empty("training dataset"));
            }
            let bounds = compute_bounds(data.targets.view(), 0.0, None)?;
            return Ok((
                Self {
                    input_norm: Normalizer::identity(m),
                    target_norm: Normalizer::identity(n),
                    bounds,
                    body: Body::Neighbors { index: NeighborIndex::from_dataset(data) },
                },
                FitLog::default(),
            ));
        }
        let input_norm = fit_normalizer(data.inputs.view(), NormMode::ZScore)?;
        let target_norm = fit_normalizer(data.targets.view(), spec.target_norm)?;
        let norm = data.normalized(&input_norm, &target_norm);
        // Langevin chains live in the unit box that unit-range normalization maps the data onto.
        let langevin = spec.train.counterexample_mode == CounterexampleMode::LangevinChain
            || matches!(&spec.method, Method::Ebm { inference } if inference.variant == Variant::Langevin);
        let unit_box = vec![(-1.0, 1.0); n];
        let limits = langevin.then_some(unit_box.as_slice());
        let bounds = compute_bounds(norm.targets.view(), spec.train.bounds_buffer, limits)?;
        let mlp = |input_dim: usize, output_dim: usize, seed: u64, spectral: bool, dropout: f64| {
            MlpModel::new(&MlpConfig {
                input_dim,
                output_dim,
                width: spec.model.width,
                depth: spec.model.depth,
                seed,
                spectral,
                dropout,
                residual: spec.model.residual,
            })
        };
        let mut log = FitLog::default();
        let body = match &spec.method {
            Method::Ebm { inference } if inference.variant == Variant::AutoregressiveDfo => {
                let mut models = Vec::with_capacity(n);
                for j in 0..n {
                    let inputs = concatenate(Axis(1), &[norm.inputs.view(), norm.targets.slice(s![.., ..j])])
                        .expect("same row count");
                    let targets = norm.targets.slice(s![.., j..j + 1]).to_owned();
                    let sub = RegressionDataset::new(inputs, targets)?;
                    let mut model = mlp(m + j + 1, 1, seed.wrapping_add(j as u64), spec.model.spectral, 0.0)?;
                    let trace = fit_energy(
                        &sub,
                        &bounds.slice(j..j + 1),
                        &mut model,
                        &spec.train,
                        spec.model.precision,
                        &mut rng,
                    )?;
                    log.losses.push(trace);
                    models.push(model);
                }
                Body::Autoregressive { ensemble: AutoregressiveEnsemble::new(models, m)?, inference: inference.clone() }
            }
            Method::Ebm { inference } => {
                let mut model = mlp(m + n, 1, seed, spec.model.spectral, 0.0)?;
                let trace = fit_energy(&norm, &bounds, &mut model, &spec.train, spec.model.precision, &mut rng)?;
                log.losses.push(trace);
                Body::Energy { model, inference: inference.clone() }
            }
            Method::Mse => {
                let mut model = mlp(m, n, seed, false, spec.model.dropout)?;
                log.losses.push(mse_train(&norm, &mut model, &spec.train, &mut rng)?);
                Body::Explicit { model }
            }
            Method::Mdn { head } => {
                let head = MdnHead { target_dim: n, ..head.clone() };
                let mut model = mlp(m, head.output_dim(), seed, false, spec.model.dropout)?;
                log.losses.push(mdn_train(&norm, &mut model, &head, &spec.train, &mut rng)?);
                Body::Mdn { model, head }
            }
            Method::NearestNeighbor => unreachable!("handled above"),
        };
        Ok((Self { input_norm, target_norm, bounds, body }, log))
    }

    pub fn input_dim(&self) -> usize {
        self.input_norm.dim()
    }

    /// Prediction for one raw input. Stochastic methods draw from `rng`.
    pub fn predict<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        let xn = self.input_norm.normalize(x);
        let yn = match &self.body {
            Body::Energy { model, inference } => match inference.variant {
                Variant::Langevin => langevin_infer(model, &xn, &self.bounds, inference, rng)?,
                _ => dfo_infer(model, &xn, &self.bounds, inference, rng)?,
            },
            Body::Autoregressive { ensemble, inference } => {
                autoregressive_dfo_infer(ensemble, &xn, &self.bounds, inference, rng)?
            }
            Body::Explicit { model } => model.forward(&xn, false, rng)?,
            Body::Mdn { model, head } => mdn_sample(head, &model.forward(&xn, false, rng)?, rng)?,
            Body::Neighbors { index } => index.predict(&xn)?,
        };
        Ok(self.target_norm.denormalize(&yn))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Runs `train_ebm` in the requested precision and writes the result back into `model`.
fn fit_energy(
    data: &RegressionDataset<f64>,
    bounds: &Bounds<f64>,
    model: &mut MlpModel<f64>,
    cfg: &TrainConfig,
    precision: Precision,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    match precision {
        Precision::F64 => Ok(train_ebm(data, bounds, model, cfg, rng)?.losses),
        Precision::F32 => {
            let narrow = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<_>>();
            let data32 = RegressionDataset::new(data.inputs.mapv(|v| v as f32), data.targets.mapv(|v| v as f32))?;
            let bounds32 =
                Bounds { lo: narrow(&bounds.lo), hi: narrow(&bounds.hi), degenerate: bounds.degenerate.clone() };
            let mut model32: MlpModel<f32> = MlpRecord::from(&*model).try_into()?;
            let trace = train_ebm(&data32, &bounds32, &mut model32, cfg, rng)?;
            *model = MlpRecord::from(&model32).try_into()?;
            Ok(trace.losses)
        }
    }
}
