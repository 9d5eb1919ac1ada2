//! Implicit (energy-based) regression and behavioral cloning.
//!
//! An energy model `E(x, y)` is trained with an InfoNCE contrastive loss and
//! queried through `argmin_y E(x, y)` using a derivative-free sampler, its
//! autoregressive variant, or Langevin dynamics. Explicit baselines (MSE, MDN,
//! nearest neighbor), the N-D particle environment, and the 1-D function suites
//! live alongside for comparison.

pub mod baselines;
pub mod envs;
pub mod error;
pub mod harness;
pub mod infer;
pub mod nn;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mlp = nn::MlpModel<f64>;
pub type Mlp32 = nn::MlpModel<f32>;
pub type Grads = nn::MlpGrads<f64>;
pub type Adam = nn::AdamState<f64>;
