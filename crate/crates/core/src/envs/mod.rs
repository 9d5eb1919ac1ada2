//! Particle integrator with a scripted two-goal oracle, 1-D function dataset
//! generators, and the distance-to-graph energy.

mod functions;
mod graph;
mod particle;

pub use functions::{dense_graph, gen_function_dataset, valid_set, FunctionKind, ValidSet};
pub use graph::{argmin_grid, distance_to_graph, linspace, GraphSample};
pub use particle::{
    eval_seed, oracle_action, particle_reset, rollout, train_seed, Episode, ParticleConfig, ParticleState,
};
