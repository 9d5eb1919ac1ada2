//! Experiment runner: demonstrations, training, rollouts, function-fit scoring,
//! variant comparison, and sparsity analysis, with JSON/CSV result emission.

pub mod commands;
mod demos;
mod evaluate;
mod predictor;
mod record;
mod spec;

pub use demos::{generate_demos, DemoSet, MAX_ORACLE_FAILURE_RATE};
pub use evaluate::{
    eval_starts, evaluate_function_fit, evaluate_model_fit, evaluate_policy, mean_min_distance, percentile,
    reference_graph, step_rng, EpisodeSummary, FitMetrics, FitReport, OraclePolicy, Policy, PolicyReport, RandomPolicy,
    GRAPH_SPACING, SHARPNESS_TOLERANCE,
};
pub use predictor::{Body, FitLog, TrainedModel};
pub use record::{write_csv, Metrics, ResultRecord, SeedResult, TableRow};
pub use spec::{EvalSpec, ExperimentSpec, Method, ModelSpec, Precision, Task};

#[cfg(test)]
mod tests;
