use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predictor::TrainedModel;
use crate::baselines::NeighborIndex;
use crate::envs::{
    dense_graph, eval_seed, linspace, oracle_action, particle_reset, rollout, valid_set, FunctionKind, GraphSample,
    ParticleConfig, ParticleState,
};
use crate::error::{Error, Result};
use crate::train::{flatten_trajectories, RegressionDataset, Trajectory};

/// Predictions within this distance of a valid output count as sharp.
pub const SHARPNESS_TOLERANCE: f64 = 0.05;
/// Spacing of the reference graph used for graph distances.
pub const GRAPH_SPACING: f64 = 1e-3;

/// Fresh RNG for one inference call, derived from the episode seed and step.
pub fn step_rng(episode_seed: u64, step: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
    rng.set_stream(step as u64);
    rng
}

/// Closed-loop controller for the particle environment.
pub trait Policy: Sync {
    fn act(&self, state: &ParticleState, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
}

impl Policy for TrainedModel {
    fn act(&self, state: &ParticleState, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.predict(&state.observation(), rng)
    }
}

/// The scripted two-goal oracle.
pub struct OraclePolicy;

impl Policy for OraclePolicy {
    fn act(&self, state: &ParticleState, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(oracle_action(state))
    }
}

/// Uniform random targets in the unit box.
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn act(&self, state: &ParticleState, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok((0..state.q.len()).map(|_| rng.gen::<f64>()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub index: u64,
    pub seed: u64,
    pub success: bool,
    pub steps: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub success_rate: f64,
    pub mean_return: f64,
    pub episodes: Vec<EpisodeSummary>,
}

/// Runs `n_episodes` rollouts on evaluation seeds `first_index..` in parallel and
/// reports them in episode order.
pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &P,
    env: &ParticleConfig,
    n_episodes: usize,
    first_index: u64,
) -> Result<PolicyReport> {
    env.validate()?;
    if n_episodes == 0 {
        return Err(Error::InvalidArgument("n_episodes must be >= 1".into()));
    }
    let episodes: Vec<EpisodeSummary> = (0..n_episodes as u64)
        .into_par_iter()
        .map(|i| {
            let seed = eval_seed(first_index + i);
            let ep = rollout(env, seed, |state, step| policy.act(state, &mut step_rng(seed, step)));
            EpisodeSummary { index: first_index + i, seed, success: ep.success, steps: ep.steps, error: ep.error }
        })
        .collect();
    let wins = episodes.iter().filter(|e| e.success).count() as f64;
    let rate = wins / n_episodes as f64;
    Ok(PolicyReport { success_rate: rate, mean_return: rate, episodes })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    /// Over test inputs where the reference is single-valued.
    pub test_mse: Option<f64>,
    pub discontinuity_sharpness: Option<f64>,
    pub graph_distance_p95: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub metrics: FitMetrics,
    /// `(x, prediction, distance to graph)` per test input.
    pub predictions: Vec<(f64, f64, f64)>,
}

/// The reference graph of `kind`; pure noise uses its own samples.
pub fn reference_graph(kind: FunctionKind, data: &RegressionDataset<f64>, lo: f64, hi: f64) -> Result<GraphSample> {
    match dense_graph(kind, lo, hi, GRAPH_SPACING) {
        Some(g) => Ok(g),
        None => GraphSample::from_dataset(data),
    }
}

/// Nearest-rank percentile of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank - 1]
}

/// Predicts on `n_test` evenly spaced inputs in `[lo, hi]` and scores them against
/// the reference function.
pub fn evaluate_function_fit<F>(
    predict: F,
    kind: FunctionKind,
    data: &RegressionDataset<f64>,
    n_test: usize,
    lo: f64,
    hi: f64,
) -> Result<FitReport>
where
    F: Fn(usize, f64) -> Result<f64> + Sync,
{
    let graph = reference_graph(kind, data, lo, hi)?;
    let xs = linspace(lo, hi, n_test);
    let preds: Vec<Result<(f64, f64, f64)>> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let y = predict(i, x)?;
            Ok((x, y, graph.distance(&[x, y])?))
        })
        .collect();
    let predictions = preds.into_iter().collect::<Result<Vec<_>>>()?;
    let (mut se, mut n_single, mut sharp, mut n_valid) = (0.0, 0usize, 0usize, 0usize);
    for &(x, y, _) in &predictions {
        if let Some(set) = valid_set(kind, x) {
            n_valid += 1;
            if set.distance(y) <= SHARPNESS_TOLERANCE {
                sharp += 1;
            }
            if let Some(t) = set.single() {
                se += (y - t).powi(2);
                n_single += 1;
            }
        }
    }
    let distances: Vec<f64> = predictions.iter().map(|p| p.2).collect();
    Ok(FitReport {
        metrics: FitMetrics {
            test_mse: (n_single > 0).then(|| se / n_single as f64),
            discontinuity_sharpness: (n_valid > 0).then(|| sharp as f64 / n_valid as f64),
            graph_distance_p95: percentile(&distances, 95.0),
        },
        predictions,
    })
}

/// Function-fit evaluation of a trained model with per-input RNG streams.
pub fn evaluate_model_fit(
    model: &TrainedModel,
    kind: FunctionKind,
    data: &RegressionDataset<f64>,
    n_test: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<FitReport> {
    evaluate_function_fit(|i, x| Ok(model.predict(&[x], &mut step_rng(seed, i))?[0]), kind, data, n_test, lo, hi)
}

/// Mean over `starts` of the L2 distance to the nearest demonstration observation.
pub fn mean_min_distance(demos: &[Trajectory], starts: &[Vec<f64>]) -> Result<f64> {
    let data = flatten_trajectories(demos)?;
    let index = NeighborIndex::from_dataset(&data);
    let total: Result<f64> = starts.iter().map(|s| index.min_distance(s)).sum();
    Ok(total? / starts.len().max(1) as f64)
}

/// Initial observations of the evaluation episodes `first_index..first_index + n`.
pub fn eval_starts(n: usize, dim: usize, first_index: u64) -> Vec<Vec<f64>> {
    (0..n as u64).map(|i| particle_reset(eval_seed(first_index + i), dim).observation()).collect()
}
