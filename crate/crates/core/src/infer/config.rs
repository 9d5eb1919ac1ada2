use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stochastic gradient Langevin dynamics settings, shared by training
/// (counter-example chains) and inference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    /// Steps per chain.
    #[serde(rename = "langevin_iterations")]
    pub iterations: usize,
    #[serde(rename = "langevin_learning_rate_init")]
    pub lr_init: f64,
    #[serde(rename = "langevin_learning_rate_final")]
    pub lr_final: f64,
    #[serde(rename = "langevin_polynomial_decay_power")]
    pub poly_power: f64,
    #[serde(rename = "langevin_delta_action_clip")]
    pub delta_clip: f64,
    #[serde(rename = "langevin_noise_scale")]
    pub noise_scale: f64,
    /// Constant step size of the second inference chain; `None` repeats the
    /// polynomial schedule instead.
    #[serde(rename = "langevin_2nd_iteration_learning_rate", default)]
    pub second_chain_lr: Option<f64>,
}

impl Default for LangevinConfig {
    /// The particle-environment settings.
    fn default() -> Self {
        Self {
            iterations: 50,
            lr_init: 0.1,
            lr_final: 1e-5,
            poly_power: 2.0,
            delta_clip: 0.1,
            noise_scale: 1.0,
            second_chain_lr: None,
        }
    }
}

impl LangevinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("langevin_iterations must be >= 1".into()));
        }
        if !(self.lr_final <= self.lr_init) || self.lr_final < 0.0 {
            return Err(Error::InvalidArgument("need 0 <= lr_final <= lr_init".into()));
        }
        if self.delta_clip < 0.0 || self.noise_scale < 0.0 {
            return Err(Error::InvalidArgument("delta clip and noise scale must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Dfo,
    AutoregressiveDfo,
    Langevin,
}

/// Which `argmin_y` engine to run, with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    #[serde(rename = "ebm_variant")]
    pub variant: Variant,
    #[serde(rename = "inference_samples")]
    pub n_samples: usize,
    #[serde(rename = "dfo_iterations")]
    pub n_iters: usize,
    #[serde(rename = "dfo_sigma_init")]
    pub sigma_init: f64,
    #[serde(rename = "dfo_shrink")]
    pub shrink: f64,
    #[serde(flatten)]
    pub langevin: LangevinConfig,
}

impl InferenceConfig {
    /// Derivative-free defaults: sigma 0.33, K 0.5, 3 iterations, 16384 samples.
    pub fn dfo() -> Self {
        Self {
            variant: Variant::Dfo,
            n_samples: 16_384,
            n_iters: 3,
            sigma_init: 0.33,
            shrink: 0.5,
            langevin: LangevinConfig::default(),
        }
    }

    pub fn autoregressive_dfo() -> Self {
        Self { variant: Variant::AutoregressiveDfo, ..Self::dfo() }
    }

    pub fn langevin(langevin: LangevinConfig, n_samples: usize) -> Self {
        Self { variant: Variant::Langevin, n_samples, langevin, ..Self::dfo() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("inference_samples must be >= 1".into()));
        }
        if self.n_iters == 0 {
            return Err(Error::InvalidArgument("dfo_iterations must be >= 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink <= 1.0) {
            return Err(Error::InvalidArgument(format!("shrink {} not in (0, 1]", self.shrink)));
        }
        if self.sigma_init < 0.0 {
            return Err(Error::InvalidArgument("sigma_init must be non-negative".into()));
        }
        self.langevin.validate()
    }
}
