use std::path::PathBuf;

use super::commands::{
    compare_variants, gen_demos, load_spec, sparsity, train, ComparisonSpec, SparsitySpec, DEMOS_FILE,
};
use super::*;
use crate::envs::{particle_reset, FunctionKind, ParticleConfig};
use crate::error::Error;
use crate::train::{read_jsonl, NormMode, RegressionDataset};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("implicit-harness-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn oracle_policy_succeeds() {
    for n in [1, 2, 8] {
        let report = evaluate_policy(&OraclePolicy, &ParticleConfig::with_dim(n), 200, 0).unwrap();
        assert!(report.success_rate >= 0.99, "N={n}: {}", report.success_rate);
    }
}

#[test]
fn random_policy_rarely_succeeds() {
    let report = evaluate_policy(&RandomPolicy, &ParticleConfig::with_dim(2), 400, 0).unwrap();
    assert!(report.success_rate <= 0.05, "{}", report.success_rate);
}

#[test]
fn zero_episodes_rejected() {
    assert!(evaluate_policy(&OraclePolicy, &ParticleConfig::with_dim(1), 0, 0).is_err());
}

#[test]
fn episode_order_and_seeds() {
    let report = evaluate_policy(&OraclePolicy, &ParticleConfig::with_dim(2), 16, 5).unwrap();
    for (i, ep) in report.episodes.iter().enumerate() {
        assert_eq!(ep.index, 5 + i as u64);
        assert_eq!(ep.seed, crate::envs::eval_seed(5 + i as u64));
    }
}

#[test]
fn demos_all_successful() {
    let set = generate_demos(&ParticleConfig::with_dim(2), 2000, 3).unwrap();
    assert_eq!(set.trajectories.len(), 2000);
    assert!(set.trajectories.iter().all(|t| t.ret == Some(1.0)));
    assert!(set.failures as f64 <= MAX_ORACLE_FAILURE_RATE * set.attempts as f64);
}

#[test]
fn demo_file_is_byte_identical_per_seed() {
    let env = ParticleConfig::with_dim(3);
    let (a, b) = (scratch("demos-a"), scratch("demos-b"));
    gen_demos(&env, 50, 11, &a).unwrap();
    gen_demos(&env, 50, 11, &b).unwrap();
    let read = |d: &PathBuf| std::fs::read(d.join(DEMOS_FILE)).unwrap();
    assert_eq!(read(&a), read(&b));
    let c = scratch("demos-c");
    gen_demos(&env, 50, 12, &c).unwrap();
    assert_ne!(read(&a), read(&c));
}

#[test]
fn empty_demo_file_rejected_by_training() {
    let dir = scratch("demos-empty");
    gen_demos(&ParticleConfig::with_dim(1), 0, 0, &dir).unwrap();
    let demos = dir.join(DEMOS_FILE);
    assert!(read_jsonl(&demos).unwrap().is_empty());
    let spec = ExperimentSpec::particle("mse", 1, 10).unwrap();
    let err = train(&spec, Some(&demos), &dir.join("model")).unwrap_err();
    assert!(matches!(err, Error::Empty(_)), "{err}");
}

#[test]
fn perfect_memorizer_is_sharp_on_train_inputs() {
    let data = crate::envs::gen_function_dataset(FunctionKind::StepFn, 200, 4).unwrap();
    let index = crate::baselines::NeighborIndex::from_dataset(&data);
    let xs: Vec<f64> = data.inputs.column(0).to_vec();
    // Score exactly the training inputs by feeding them as a one-point grid each.
    for &x in &xs {
        let report =
            evaluate_function_fit(|_, q| Ok(index.predict(&[q])?[0]), FunctionKind::StepFn, &data, 1, x, x).unwrap();
        assert_eq!(report.metrics.discontinuity_sharpness, Some(1.0));
        assert!(report.predictions[0].2 < 1e-12);
    }
}

#[test]
fn mid_gap_interpolation_is_not_sharp() {
    let data = crate::envs::gen_function_dataset(FunctionKind::StepFn, 50, 0).unwrap();
    let report =
        evaluate_function_fit(|_, x| Ok(x.clamp(0.0, 1.0)), FunctionKind::StepFn, &data, 1001, 0.0, 1.0).unwrap();
    let s = report.metrics.discontinuity_sharpness.unwrap();
    assert!((s - 0.1).abs() < 0.01, "{s}");
    assert!(report.metrics.test_mse.unwrap() > 0.0);
}

#[test]
fn percentile_nearest_rank() {
    let v: Vec<f64> = (1..=20).rev().map(f64::from).collect();
    assert_eq!(percentile(&v, 95.0), 19.0);
    assert_eq!(percentile(&v, 100.0), 20.0);
    assert_eq!(percentile(&v, 0.0), 1.0);
    assert_eq!(percentile(&[3.0], 50.0), 3.0);
    assert!(percentile(&[], 50.0).is_nan());
}

#[test]
fn sparsity_zero_on_training_starts() {
    let env = ParticleConfig::with_dim(4);
    let set = generate_demos(&env, 40, 1).unwrap();
    let starts: Vec<Vec<f64>> = set.seeds.iter().map(|&s| particle_reset(s, 4).observation()).collect();
    assert_eq!(mean_min_distance(&set.trajectories, &starts).unwrap(), 0.0);
}

#[test]
fn sparsity_grows_with_dimension_and_shrinks_with_data() {
    let dist = |n: usize, demos: usize| {
        let set = generate_demos(&ParticleConfig::with_dim(n), demos, 0).unwrap();
        mean_min_distance(&set.trajectories, &eval_starts(100, n, 0)).unwrap()
    };
    let by_n: Vec<f64> = [1, 2, 4, 8].iter().map(|&n| dist(n, 200)).collect();
    assert!(by_n.windows(2).all(|w| w[0] <= w[1]), "{by_n:?}");
    let by_demos: Vec<f64> = [20, 200, 2000].iter().map(|&d| dist(2, d)).collect();
    assert!(by_demos.windows(2).all(|w| w[0] > w[1]), "{by_demos:?}");
}

#[test]
fn sparsity_command_writes_table() {
    let dir = scratch("sparsity");
    let spec = SparsitySpec { ns: vec![1, 2], n_demos: 30, n_eval: 10, seed: 0, eval_seed: 0 };
    let record = sparsity(&spec, &dir).unwrap();
    assert_eq!(record.table.len(), 2);
    assert!(dir.join("metrics.csv").exists() && dir.join("predictions.csv").exists());
    assert_eq!(ResultRecord::load(&dir.join("result.json")).unwrap(), record);
}

#[test]
fn empty_method_list_gives_empty_table() {
    let dir = scratch("compare-empty");
    let cmp = ComparisonSpec::new(&[1, 2], &[], 10, 5, &[0]).unwrap();
    let record = compare_variants(&cmp, &dir).unwrap();
    assert!(record.table.is_empty());
}

#[test]
fn langevin_requires_unit_range() {
    let mut spec = ExperimentSpec::particle("langevin", 2, 100).unwrap();
    spec.validate().unwrap();
    spec.target_norm = NormMode::ZScore;
    assert!(spec.validate().is_err());
}

#[test]
fn spec_validation_rejects_degenerate_inputs() {
    let mut spec = ExperimentSpec::particle("dfo", 2, 100).unwrap();
    spec.seeds.clear();
    assert!(spec.validate().is_err());
    let mut spec = ExperimentSpec::particle("dfo", 2, 100).unwrap();
    spec.eval.n_episodes = 0;
    assert!(spec.validate().is_err());
    assert!(ExperimentSpec::particle("dfo", 2, 0).unwrap().validate().is_err());
    assert!(ExperimentSpec::particle("bogus", 2, 10).is_err());
    assert!(ExperimentSpec::function_fit("ebm", FunctionKind::StepFn, 1).unwrap().validate().is_err());
}

#[test]
fn spec_hash_tracks_content() {
    let a = ExperimentSpec::function_fit("ebm", FunctionKind::StepFn, 200).unwrap();
    let b = a.clone();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let mut c = a.clone();
    c.seeds = vec![1];
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn spec_json_round_trip_and_result_loading() {
    let spec = ExperimentSpec::particle("autoregressive_dfo", 3, 500).unwrap();
    let dir = scratch("spec");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("spec.json");
    std::fs::write(&file, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    assert_eq!(load_spec(&file).unwrap(), spec);
    let record = ResultRecord::new("train", &spec).unwrap();
    record.write(&dir).unwrap();
    assert_eq!(load_spec(&dir.join("result.json")).unwrap(), spec);
    assert_eq!(record.spec_hash, spec.hash());
}

#[test]
fn trained_model_save_load_predicts_identically() {
    let data = crate::envs::gen_function_dataset(FunctionKind::PiecewiseSlopes, 64, 2).unwrap();
    let mut spec = ExperimentSpec::function_fit("ebm", FunctionKind::PiecewiseSlopes, 64).unwrap();
    spec.train.train_iterations = 20;
    spec.model.width = 16;
    let (model, log) = TrainedModel::fit(&spec, &data, 0).unwrap();
    assert_eq!(log.losses[0].len(), 20);
    let dir = scratch("model");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.json");
    model.save(&path).unwrap();
    let loaded = TrainedModel::load(&path).unwrap();
    for i in 0..10 {
        let x = [i as f64 / 10.0];
        assert_eq!(model.predict(&x, &mut step_rng(0, i)).unwrap(), loaded.predict(&x, &mut step_rng(0, i)).unwrap());
    }
}

#[test]
fn nearest_neighbor_model_memorizes_demos() {
    let env = ParticleConfig::with_dim(2);
    let set = generate_demos(&env, 20, 0).unwrap();
    let data: RegressionDataset<f64> = crate::train::flatten_trajectories(&set.trajectories).unwrap();
    let spec = ExperimentSpec::particle("nearest_neighbor", 2, 20).unwrap();
    let (model, _) = TrainedModel::fit(&spec, &data, 0).unwrap();
    let mut rng = step_rng(0, 0);
    for i in (0..data.len()).step_by(7) {
        let x = data.inputs.row(i).to_vec();
        assert_eq!(model.predict(&x, &mut rng).unwrap(), data.targets.row(i).to_vec());
    }
}

#[test]
fn metrics_mean_needs_every_seed() {
    let a = Metrics { success_rate: Some(0.5), ..Default::default() };
    let b = Metrics { success_rate: Some(1.0), test_mse: Some(2.0), ..Default::default() };
    let m = Metrics::mean(&[a, b]);
    assert_eq!(m.success_rate, Some(0.75));
    assert_eq!(m.test_mse, None);
    assert_eq!(m.graph_distance_p95, None);
}
