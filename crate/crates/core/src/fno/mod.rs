//! Complex-valued Fourier neural operator mapping `(ρ⃗₀, t)` on a fixed
//! window grid to the evolved state.
//!
//! Pipeline: embed → lifting MLP (ReLU between its two layers) → Fourier
//! layers → output MLP. Each Fourier layer computes
//! `σ(IDFT(W₁ · truncate(DFT(u))) + u W₂ + b)` with the split activation
//! `σ(a+ib) = σ(a) + iσ(b)`.

pub mod checkpoint;
pub mod config;
pub mod dft;
pub mod grad;
pub mod model;
pub mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC};
pub use config::FnoConfig;
pub use dft::{dft_time, idft_time};
pub use grad::{fno_gradient, fno_loss, GradientItem, GradientResult, Objective};
pub use model::{
    embed_input, fno_forward, forward_batch, fourier_layer, predict, ComplexGridFunction,
};
pub use params::{init_params, Dense, FnoParams, FourierLayerParams};
