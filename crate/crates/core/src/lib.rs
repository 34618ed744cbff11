//! Lindblad dynamics of excitonic systems with interchangeable propagators:
//! RK4, the exact matrix exponential, and a complex-valued Fourier neural
//! operator trained on data plus a physics residual. The propagators drive
//! population dynamics and first/second-order time-correlation functions.

pub mod container;
pub mod error;
pub mod fno;
pub mod format;
pub mod integrators;
pub mod lindblad;
pub mod rng;
pub mod system;
pub mod tcf;
pub mod training;
pub mod units;

pub use error::{Error, Result};
pub use lindblad::C64;
