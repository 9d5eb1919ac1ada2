//! One entry point per CLI subcommand. Each writes `result.json`, `metrics.csv`,
//! and `predictions.csv` into its output directory and returns the record.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::demos::{generate_demos, DemoSet};
use super::evaluate::{eval_starts, evaluate_model_fit, evaluate_policy, mean_min_distance};
use super::predictor::TrainedModel;
use super::record::{fmt_opt, write_csv, Metrics, ResultRecord, SeedResult, TableRow};
use super::spec::{ExperimentSpec, Task};
use crate::envs::{gen_function_dataset, ParticleConfig};
use crate::error::{Error, Result};
use crate::train::{flatten_trajectories, read_jsonl, write_jsonl, RegressionDataset, Trajectory};

pub const DEMOS_FILE: &str = "demos.jsonl";

pub fn model_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("model_seed{seed}.json"))
}

#[derive(Serialize)]
struct DemoRequest<'a> {
    env: &'a ParticleConfig,
    n_demos: usize,
    seed: u64,
}

/// `gen-demos`: oracle demonstrations as JSON lines.
pub fn gen_demos(env: &ParticleConfig, n_demos: usize, seed: u64, out: &Path) -> Result<ResultRecord> {
    let start = Instant::now();
    let mut record = ResultRecord::new("gen-demos", &DemoRequest { env, n_demos, seed })?;
    let set = generate_demos(env, n_demos, seed)?;
    std::fs::create_dir_all(out)?;
    write_jsonl(&out.join(DEMOS_FILE), &set.trajectories)?;
    let failure_rate = set.failures as f64 / set.attempts.max(1) as f64;
    record.metrics.mean_return = Some(mean_return(&set.trajectories));
    record.metrics.extra.insert("attempts".into(), set.attempts as f64);
    record.metrics.extra.insert("failures".into(), set.failures as f64);
    record.metrics.extra.insert("oracle_failure_rate".into(), failure_rate);
    write_csv(
        &out.join("metrics.csv"),
        &["N", "n_demos", "attempts", "failures", "oracle_failure_rate"],
        &[vec![
            env.n.to_string(),
            n_demos.to_string(),
            set.attempts.to_string(),
            set.failures.to_string(),
            failure_rate.to_string(),
        ]],
    )?;
    let rows: Vec<Vec<String>> = set
        .trajectories
        .iter()
        .zip(&set.seeds)
        .enumerate()
        .map(|(i, (t, s))| vec![i.to_string(), s.to_string(), t.actions.len().to_string(), fmt_opt(t.ret)])
        .collect();
    write_csv(&out.join("predictions.csv"), &["demo", "seed", "steps", "return"], &rows)?;
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    record.write(out)?;
    Ok(record)
}

fn mean_return(ts: &[Trajectory]) -> f64 {
    ts.iter().map(|t| t.ret.unwrap_or(0.0)).sum::<f64>() / ts.len().max(1) as f64
}

/// Training data of a spec: cloned demonstrations or a generated function sample.
pub fn task_dataset(spec: &ExperimentSpec, demos: Option<&Path>) -> Result<RegressionDataset<f64>> {
    match &spec.task {
        Task::ParticleBc { env, n_demos, demo_seed } => {
            let trajectories = match demos {
                Some(path) => read_jsonl(path)?,
                None => generate_demos(env, *n_demos, *demo_seed)?.trajectories,
            };
            if trajectories.is_empty() {
                return Err(Error::Empty("demonstration set"));
            }
            flatten_trajectories(&trajectories)
        }
        Task::FunctionFit { kind, n_points, data_seed } => gen_function_dataset(*kind, *n_points, *data_seed),
    }
}

/// `train`: fits one model per training seed and saves them.
pub fn train(spec: &ExperimentSpec, demos: Option<&Path>, out: &Path) -> Result<ResultRecord> {
    let start = Instant::now();
    spec.validate()?;
    let mut record = ResultRecord::new("train", spec)?;
    let data = task_dataset(spec, demos)?;
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for &seed in &spec.seeds {
        let (model, log) = TrainedModel::fit(spec, &data, seed)?;
        model.save(&model_file(out, seed))?;
        let mut m = Metrics::default();
        for (d, losses) in log.losses.iter().enumerate() {
            for (step, l) in losses.iter().enumerate() {
                rows.push(vec![seed.to_string(), d.to_string(), step.to_string(), l.to_string()]);
            }
            if let Some(last) = losses.last() {
                m.extra.insert(format!("final_loss_{d}"), *last);
            }
        }
        m.extra.insert("train_samples".into(), data.len() as f64);
        record.per_seed.push(SeedResult { seed, metrics: m });
    }
    write_csv(&out.join("metrics.csv"), &["seed", "model", "step", "loss"], &rows)?;
    write_csv(
        &out.join("predictions.csv"),
        &["seed", "model_file"],
        &spec.seeds.iter().map(|s| vec![s.to_string(), model_file(out, *s).display().to_string()]).collect::<Vec<_>>(),
    )?;
    finish(record, start, out)
}

fn finish(mut record: ResultRecord, start: Instant, out: &Path) -> Result<ResultRecord> {
    let per: Vec<Metrics> = record.per_seed.iter().map(|s| s.metrics.clone()).collect();
    let mean = Metrics::mean(&per);
    record.metrics.success_rate = record.metrics.success_rate.or(mean.success_rate);
    record.metrics.mean_return = record.metrics.mean_return.or(mean.mean_return);
    record.metrics.test_mse = record.metrics.test_mse.or(mean.test_mse);
    record.metrics.discontinuity_sharpness = record.metrics.discontinuity_sharpness.or(mean.discontinuity_sharpness);
    record.metrics.graph_distance_p95 = record.metrics.graph_distance_p95.or(mean.graph_distance_p95);
    for (k, v) in mean.extra {
        record.metrics.extra.entry(k).or_insert(v);
    }
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    record.write(out)?;
    Ok(record)
}

fn load_or_fit(
    spec: &ExperimentSpec,
    models: Option<&Path>,
    data: &mut Option<RegressionDataset<f64>>,
    demos: Option<&Path>,
    seed: u64,
) -> Result<TrainedModel> {
    match models {
        Some(dir) => TrainedModel::load(&model_file(dir, seed)),
        None => {
            if data.is_none() {
                *data = Some(task_dataset(spec, demos)?);
            }
            Ok(TrainedModel::fit(spec, data.as_ref().expect("set above"), seed)?.0)
        }
    }
}

/// `eval-policy`: closed-loop success of each training seed's policy on the shared
/// evaluation block. Models come from `models` when given, else are trained.
pub fn eval_policy(
    spec: &ExperimentSpec,
    models: Option<&Path>,
    demos: Option<&Path>,
    out: &Path,
) -> Result<ResultRecord> {
    let start = Instant::now();
    spec.validate()?;
    let Task::ParticleBc { env, .. } = &spec.task else {
        return Err(Error::InvalidArgument("eval-policy needs a particle_bc task".into()));
    };
    let mut record = ResultRecord::new("eval-policy", spec)?;
    let mut data = None;
    let mut rows = Vec::new();
    let mut metric_rows = Vec::new();
    for &seed in &spec.seeds {
        let model = load_or_fit(spec, models, &mut data, demos, seed)?;
        let report = evaluate_policy(&model, env, spec.eval.n_episodes, spec.eval.eval_seed)?;
        for e in &report.episodes {
            rows.push(vec![
                seed.to_string(),
                e.index.to_string(),
                e.seed.to_string(),
                (e.success as u8).to_string(),
                e.steps.to_string(),
                e.error.clone().unwrap_or_default(),
            ]);
        }
        metric_rows.push(vec![seed.to_string(), report.success_rate.to_string(), report.mean_return.to_string()]);
        let m = Metrics {
            success_rate: Some(report.success_rate),
            mean_return: Some(report.mean_return),
            ..Default::default()
        };
        record.per_seed.push(SeedResult { seed, metrics: m });
    }
    std::fs::create_dir_all(out)?;
    write_csv(&out.join("metrics.csv"), &["seed", "success_rate", "mean_return"], &metric_rows)?;
    write_csv(&out.join("predictions.csv"), &["seed", "episode", "episode_seed", "success", "steps", "error"], &rows)?;
    finish(record, start, out)
}

/// `fit-function`: trains on a 1-D function dataset and scores predictions on the
/// test grid.
pub fn fit_function(spec: &ExperimentSpec, out: &Path) -> Result<ResultRecord> {
    let start = Instant::now();
    spec.validate()?;
    let Task::FunctionFit { kind, .. } = &spec.task else {
        return Err(Error::InvalidArgument("fit-function needs a function_fit task".into()));
    };
    let mut record = ResultRecord::new("fit-function", spec)?;
    let data = task_dataset(spec, None)?;
    let mut rows = Vec::new();
    let mut metric_rows = Vec::new();
    for &seed in &spec.seeds {
        let (model, _) = TrainedModel::fit(spec, &data, seed)?;
        let e = &spec.eval;
        let report = evaluate_model_fit(&model, *kind, &data, e.test_points, e.test_lo, e.test_hi, seed)?;
        for (x, y, d) in &report.predictions {
            rows.push(vec![seed.to_string(), x.to_string(), y.to_string(), d.to_string()]);
        }
        let fm = report.metrics;
        metric_rows.push(vec![
            seed.to_string(),
            fmt_opt(fm.test_mse),
            fmt_opt(fm.discontinuity_sharpness),
            fm.graph_distance_p95.to_string(),
        ]);
        let m = Metrics {
            test_mse: fm.test_mse,
            discontinuity_sharpness: fm.discontinuity_sharpness,
            graph_distance_p95: Some(fm.graph_distance_p95),
            ..Default::default()
        };
        record.per_seed.push(SeedResult { seed, metrics: m });
    }
    std::fs::create_dir_all(out)?;
    write_csv(
        &out.join("metrics.csv"),
        &["seed", "test_mse", "discontinuity_sharpness", "graph_distance_p95"],
        &metric_rows,
    )?;
    write_csv(&out.join("predictions.csv"), &["seed", "x", "y_pred", "graph_distance"], &rows)?;
    finish(record, start, out)
}

/// Resolved inputs of a variant comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    #[serde(rename = "N_list")]
    pub ns: Vec<usize>,
    pub methods: Vec<String>,
    pub n_demos: usize,
    pub n_episodes: usize,
    pub seeds: Vec<u64>,
    pub cells: Vec<ExperimentSpec>,
}

impl ComparisonSpec {
    pub fn new(ns: &[usize], methods: &[String], n_demos: usize, n_episodes: usize, seeds: &[u64]) -> Result<Self> {
        let mut cells = Vec::new();
        for method in methods {
            for &n in ns {
                let mut spec = ExperimentSpec::particle(method, n, n_demos)?;
                spec.eval.n_episodes = n_episodes;
                spec.seeds = seeds.to_vec();
                spec.validate()?;
                cells.push(spec);
            }
        }
        Ok(Self { ns: ns.to_vec(), methods: methods.to_vec(), n_demos, n_episodes, seeds: seeds.to_vec(), cells })
    }
}

/// `compare-variants`: success-rate grid over methods and dimensions.
pub fn compare_variants(cmp: &ComparisonSpec, out: &Path) -> Result<ResultRecord> {
    let start = Instant::now();
    let mut record = ResultRecord::new("compare-variants", cmp)?;
    let mut rows = Vec::new();
    let mut demo_cache: Vec<(usize, DemoSet)> = Vec::new();
    for spec in &cmp.cells {
        let Task::ParticleBc { env, n_demos, demo_seed } = &spec.task else { unreachable!("particle cells") };
        if !demo_cache.iter().any(|(n, _)| *n == env.n) {
            demo_cache.push((env.n, generate_demos(env, *n_demos, *demo_seed)?));
        }
        let demos = &demo_cache.iter().find(|(n, _)| *n == env.n).expect("cached").1;
        let data = flatten_trajectories(&demos.trajectories)?;
        let label = spec.method.label().to_string();
        for &seed in &spec.seeds {
            let (model, _) = TrainedModel::fit(spec, &data, seed)?;
            let report = evaluate_policy(&model, env, spec.eval.n_episodes, spec.eval.eval_seed)?;
            rows.push(vec![label.clone(), env.n.to_string(), seed.to_string(), report.success_rate.to_string()]);
            record.table.push(TableRow {
                label: label.clone(),
                n: env.n,
                seed: Some(seed),
                value: report.success_rate,
            });
        }
    }
    std::fs::create_dir_all(out)?;
    write_csv(&out.join("metrics.csv"), &["method", "N", "seed", "success_rate"], &rows)?;
    let mut means = Vec::new();
    for spec in &cmp.cells {
        let (label, n) = (spec.method.label(), spec_dim(spec));
        let vals: Vec<f64> = record.table.iter().filter(|r| r.n == n && r.label == label).map(|r| r.value).collect();
        let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
        means.push(vec![label.to_string(), n.to_string(), mean.to_string()]);
        record.metrics.extra.insert(format!("{label}_N{n}"), mean);
    }
    write_csv(&out.join("predictions.csv"), &["method", "N", "mean_success_rate"], &means)?;
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    record.write(out)?;
    Ok(record)
}

fn spec_dim(spec: &ExperimentSpec) -> usize {
    match &spec.task {
        Task::ParticleBc { env, .. } => env.n,
        Task::FunctionFit { .. } => 1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsitySpec {
    #[serde(rename = "N_list")]
    pub ns: Vec<usize>,
    pub n_demos: usize,
    pub n_eval: usize,
    pub seed: u64,
    pub eval_seed: u64,
}

/// `sparsity`: mean distance from evaluation starts to the nearest demonstration
/// observation, per dimension.
pub fn sparsity(spec: &SparsitySpec, out: &Path) -> Result<ResultRecord> {
    let start = Instant::now();
    let mut record = ResultRecord::new("sparsity", spec)?;
    let mut rows = Vec::new();
    for &n in &spec.ns {
        let env = ParticleConfig::with_dim(n);
        let demos = generate_demos(&env, spec.n_demos, spec.seed)?;
        let starts = eval_starts(spec.n_eval, n, spec.eval_seed);
        let d = mean_min_distance(&demos.trajectories, &starts)?;
        rows.push(vec![n.to_string(), spec.n_demos.to_string(), d.to_string()]);
        record.table.push(TableRow { label: "mean_min_distance".into(), n, seed: None, value: d });
        record.metrics.extra.insert(format!("mean_min_distance_N{n}"), d);
    }
    std::fs::create_dir_all(out)?;
    write_csv(&out.join("metrics.csv"), &["N", "n_demos", "mean_min_distance"], &rows)?;
    write_csv(&out.join("predictions.csv"), &["N", "n_demos", "mean_min_distance"], &rows)?;
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    record.write(out)?;
    Ok(record)
}

/// Reads an experiment spec from a spec file or from a previous `result.json`.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let inner = match value.get("spec_hash") {
        Some(_) => value.get("spec").cloned().unwrap_or(serde_json::Value::Null),
        None => value,
    };
    Ok(serde_json::from_value(inner)?)
}
