//! Losses, optimizer, on-the-fly physics sampling and the training loop.

pub mod adam;
pub mod loss;
pub mod onthefly;
pub mod report;
pub mod stencil;
pub mod trainer;

pub use adam::{Adam, AdamConfig};
pub use loss::{data_loss_and_grad, data_loss_value, physics_loss_and_grad, physics_terms, LOSS_EPS};
pub use onthefly::onthefly_sample;
pub use report::{EpochRecord, LossReport};
pub use stencil::{derivative_matrix, time_derivative};
pub use trainer::{train, train_from, validate, BestParams, TrainConfig, TrainState, TOOL_VERSION};
