//! Explicit baselines: an MSE regressor, a mixture density network, and a
//! nearest-neighbor memorizer.

mod mdn;
mod mse;
mod neighbors;

pub use mdn::{mdn_loss, mdn_loss_with_grad, mdn_sample, mdn_train, MdnHead, LOG_STD_MAX, LOG_STD_MIN};
pub use mse::{mse_loss, mse_train};
pub use neighbors::NeighborIndex;

#[cfg(test)]
mod tests;
