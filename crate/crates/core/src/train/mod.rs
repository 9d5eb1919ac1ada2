//! InfoNCE training of energy models and the data plumbing around it.

mod config;
mod dataset;
mod demos;
mod loss;
mod negatives;
mod trainer;

pub use config::{lr_schedule, CounterexampleMode, GradientPenalty, TrainConfig};
pub use dataset::{
    compute_bounds, fit_normalizer, Bounds, NormMode, Normalizer, RegressionDataset, DEGENERATE_EPSILON,
};
pub use demos::{flatten_trajectories, read_jsonl, rwr_filter, rwr_select, stack_history, write_jsonl, Trajectory};
pub use loss::{gradient_penalty, info_nce_loss, info_nce_with_grad, logsumexp};
pub use negatives::{sample_langevin_negatives, sample_uniform_negatives};
pub use trainer::{train_ebm, TrainTrace};
