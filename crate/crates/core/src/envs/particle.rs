use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

const EVAL_SEED_BIT: u64 = 1 << 63;

/// Seed of the `i`-th training episode.
pub fn train_seed(i: u64) -> u64 {
    i & !EVAL_SEED_BIT
}

/// Seed of the `i`-th evaluation episode; never collides with a training seed.
pub fn eval_seed(i: u64) -> u64 {
    i | EVAL_SEED_BIT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    #[serde(rename = "k_p")]
    pub kp: f64,
    #[serde(rename = "k_d")]
    pub kd: f64,
    pub r: f64,
    pub horizon: usize,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self::with_dim(1)
    }
}

impl ParticleConfig {
    /// Critically damped gains, `dt = 0.05`, goal radius 0.05, 200 steps.
    pub fn with_dim(n: usize) -> Self {
        let kp = 10.0f64;
        Self { n, dt: 0.05, kp, kd: 2.0 * kp.sqrt(), r: 0.05, horizon: 200 }
    }

    pub fn obs_dim(&self) -> usize {
        4 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.horizon == 0 {
            return Err(Error::InvalidArgument("particle env needs N >= 1 and horizon >= 1".into()));
        }
        for (name, v) in [("dt", self.dt), ("k_p", self.kp), ("k_d", self.kd), ("r", self.r)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("particle {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    pub reached_g0: bool,
    pub t: usize,
}

/// Uniform `q`, `g0`, `g1` in the unit box, zero velocity.
pub fn particle_reset(seed: u64, n: usize) -> ParticleState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen::<f64>()).collect::<Vec<_>>();
    let q = draw(&mut rng);
    let g0 = draw(&mut rng);
    let g1 = draw(&mut rng);
    ParticleState { q, qdot: vec![0.0; n], g0, g1, reached_g0: false, t: 0 }
}

/// `g0` until the particle has been within `r` of it, then `g1`.
pub fn oracle_action(state: &ParticleState) -> Vec<f64> {
    if state.reached_g0 {
        state.g1.clone()
    } else {
        state.g0.clone()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl ParticleState {
    /// `concat(q, qdot, g0, g1)`.
    pub fn observation(&self) -> Vec<f64> {
        [&self.q[..], &self.qdot, &self.g0, &self.g1].concat()
    }

    /// PD acceleration toward `target` with zero target velocity, then one
    /// semi-implicit Euler step (velocity first).
    pub fn step(&mut self, cfg: &ParticleConfig, target: &[f64]) -> Result<()> {
        check_dim(self.q.len(), target.len())?;
        if let Some(bad) = target.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("action component {bad}")));
        }
        for j in 0..self.q.len() {
            let acc = cfg.kp * (target[j] - self.q[j]) - cfg.kd * self.qdot[j];
            self.qdot[j] += acc * cfg.dt;
            self.q[j] += self.qdot[j] * cfg.dt;
        }
        if dist(&self.q, &self.g0) <= cfg.r {
            self.reached_g0 = true;
        }
        self.t += 1;
        Ok(())
    }

    pub fn is_success(&self, cfg: &ParticleConfig) -> bool {
        self.reached_g0 && dist(&self.q, &self.g1) <= cfg.r
    }
}

/// One closed-loop episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub seed: u64,
    pub success: bool,
    pub steps: usize,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub initial_observation: Vec<f64>,
    /// Set when the policy failed to produce an action.
    pub error: Option<String>,
}

impl Episode {
    pub fn ret(&self) -> f64 {
        if self.success {
            1.0
        } else {
            0.0
        }
    }
}

/// Rolls out `policy(state, step)` from `particle_reset(seed)` until success or
/// the horizon. Learned policies only read `state.observation()`; the oracle also
/// reads the hidden goal flag. A policy error ends the episode as a failure.
pub fn rollout<P>(cfg: &ParticleConfig, seed: u64, mut policy: P) -> Episode
where
    P: FnMut(&ParticleState, usize) -> Result<Vec<f64>>,
{
    let mut state = particle_reset(seed, cfg.n);
    let initial_observation = state.observation();
    let mut episode = Episode {
        seed,
        success: false,
        steps: 0,
        observations: Vec::new(),
        actions: Vec::new(),
        initial_observation,
        error: None,
    };
    for step in 0..cfg.horizon {
        let obs = state.observation();
        let action = match policy(&state, step).and_then(|a| state.step(cfg, &a).map(|_| a)) {
            Ok(a) => a,
            Err(e) => {
                episode.error = Some(e.to_string());
                break;
            }
        };
        episode.observations.push(obs);
        episode.actions.push(action);
        episode.steps = step + 1;
        if state.is_success(cfg) {
            episode.success = true;
            break;
        }
    }
    episode
}
