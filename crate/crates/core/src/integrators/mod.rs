//! Reference propagation: RK4, the exact matrix exponential, GUE sampling and
//! dataset generation.

pub mod dataset;
pub mod expm;
pub mod grid;
pub mod gue;
pub mod rk4;

pub use dataset::{generate_dataset, Dataset, Sample};
pub use expm::{expm, expm_propagator};
pub use grid::{TimeGrid, Trajectory};
pub use gue::{gue_density, sample_gue, sample_gue_density};
pub use rk4::{propagate, rk4_step};
