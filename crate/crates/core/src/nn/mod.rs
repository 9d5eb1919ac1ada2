//! Feed-forward ReLU networks with reverse-mode gradients, spectral
//! normalization, and Adam.

mod adam;
mod io;
mod mlp;
mod spectral;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use io::{LayerRecord, MlpRecord};
pub use mlp::{concat_inputs, init_mlp, Dense, ForwardCache, MlpConfig, MlpGrads, MlpModel};
pub use spectral::power_iteration;

#[cfg(test)]
mod tests;
