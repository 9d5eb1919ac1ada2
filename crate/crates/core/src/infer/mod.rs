//! `argmin_y` engines: derivative-free, autoregressive derivative-free, and
//! Langevin dynamics.

mod autoregressive;
mod config;
mod dfo;
mod energy;
mod langevin;
mod resample;

pub use autoregressive::autoregressive_dfo_infer;
pub use config::{InferenceConfig, LangevinConfig, Variant};
pub use dfo::{dfo_infer, dfo_infer_traced};
pub use energy::{AutoregressiveEnsemble, EnergyModel, FnEnergy, GradientEnergy, PrefixEnergy};
pub use langevin::{langevin_infer, poly_decay, run_chain, Chain, StepSize};
pub use resample::{argmax, multinomial_indices, multinomial_resample, softmax_neg};
