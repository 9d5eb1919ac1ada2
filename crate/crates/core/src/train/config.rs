use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infer::LangevinConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleMode {
    /// Uniform samples in the regression bounds.
    Uniform,
    /// Uniform samples refined by a Langevin chain.
    LangevinChain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientPenalty {
    None,
    /// Penalize input gradients at the last chain sample only.
    FinalStepOnly,
}

/// Energy-model training hyperparameters. Field names follow the rows of the
/// usual hyperparameter tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub train_iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub learning_rate_decay: f64,
    pub learning_rate_decay_steps: usize,
    /// Counter-examples per sample.
    pub train_counter_examples: usize,
    pub counterexample_mode: CounterexampleMode,
    pub gradient_penalty: GradientPenalty,
    pub gradient_margin: f64,
    /// Fraction of the data range added on each side of the regression bounds.
    pub bounds_buffer: f64,
    /// Power-iteration steps per update for spectrally normalized layers.
    #[serde(default = "default_spectral_iters")]
    pub spectral_power_iterations: usize,
    #[serde(flatten)]
    pub langevin: LangevinConfig,
}

fn default_spectral_iters() -> usize {
    1
}

impl TrainConfig {
    /// Derivative-free training defaults: batch 512, 256 counter-examples,
    /// learning rate 1e-3 decayed by 0.99 every 100 steps.
    pub fn dfo() -> Self {
        Self {
            train_iterations: 10_000,
            batch_size: 512,
            learning_rate: 1e-3,
            learning_rate_decay: 0.99,
            learning_rate_decay_steps: 100,
            train_counter_examples: 256,
            counterexample_mode: CounterexampleMode::Uniform,
            gradient_penalty: GradientPenalty::None,
            gradient_margin: 1.0,
            bounds_buffer: 0.05,
            spectral_power_iterations: 1,
            langevin: LangevinConfig::default(),
        }
    }

    /// Particle-environment Langevin configuration (full scale).
    pub fn particle_langevin() -> Self {
        Self {
            train_iterations: 50_000,
            batch_size: 128,
            train_counter_examples: 64,
            counterexample_mode: CounterexampleMode::LangevinChain,
            gradient_penalty: GradientPenalty::FinalStepOnly,
            gradient_margin: 1.0,
            ..Self::dfo()
        }
    }

    /// Particle-environment explicit MSE configuration (full scale).
    pub fn particle_mse() -> Self {
        Self { train_iterations: 100_000, batch_size: 512, learning_rate_decay_steps: 200, ..Self::dfo() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_counter_examples == 0 {
            return Err(Error::InvalidArgument("train_counter_examples must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate_decay > 0.0 && self.learning_rate_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate_decay {} not in (0, 1]",
                self.learning_rate_decay
            )));
        }
        if self.learning_rate_decay_steps == 0 {
            return Err(Error::InvalidArgument("learning_rate_decay_steps must be >= 1".into()));
        }
        if !(self.bounds_buffer >= 0.0) {
            return Err(Error::InvalidArgument("bounds_buffer must be >= 0".into()));
        }
        if self.counterexample_mode == CounterexampleMode::LangevinChain {
            self.langevin.validate()?;
        }
        Ok(())
    }
}

/// `lr_init * decay^(step / decay_steps)` with a real-valued exponent.
pub fn lr_schedule(step: usize, cfg: &TrainConfig) -> f64 {
    cfg.learning_rate * cfg.learning_rate_decay.powf(step as f64 / cfg.learning_rate_decay_steps as f64)
}
