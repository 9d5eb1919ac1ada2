use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::{oracle_action, rollout, train_seed, ParticleConfig};
use crate::error::{Error, Result};
use crate::train::Trajectory;

/// Highest tolerated oracle failure rate.
pub const MAX_ORACLE_FAILURE_RATE: f64 = 0.05;

/// Demonstrations plus the bookkeeping of how they were collected.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoSet {
    pub trajectories: Vec<Trajectory>,
    /// Reset seed of each kept trajectory.
    pub seeds: Vec<u64>,
    pub attempts: usize,
    pub failures: usize,
}

/// Rolls out the oracle from training-stream seeds until `n_demos` episodes
/// succeed; failed episodes are dropped. Errors when more than 5% of the
/// attempts fail.
pub fn generate_demos(env: &ParticleConfig, n_demos: usize, seed: u64) -> Result<DemoSet> {
    env.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = (n_demos as f64 / (1.0 - MAX_ORACLE_FAILURE_RATE)).floor() as usize + 1;
    let mut set = DemoSet { trajectories: Vec::with_capacity(n_demos), seeds: Vec::new(), attempts: 0, failures: 0 };
    while set.trajectories.len() < n_demos {
        if set.attempts >= max_attempts {
            let rate = set.failures as f64 / set.attempts as f64;
            return Err(Error::OracleFailure { rate, limit: MAX_ORACLE_FAILURE_RATE });
        }
        let s = train_seed(rng.gen());
        let ep = rollout(env, s, |state, _| Ok(oracle_action(state)));
        set.attempts += 1;
        if ep.success {
            set.trajectories.push(crate::train::Trajectory {
                ret: Some(ep.ret()),
                observations: ep.observations,
                actions: ep.actions,
            });
            set.seeds.push(s);
        } else {
            set.failures += 1;
        }
    }
    Ok(set)
}
