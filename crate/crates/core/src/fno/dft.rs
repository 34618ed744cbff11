//! Discrete Fourier transforms along the time axis of a `G × C` grid
//! function, as dense matrix products.
//!
//! Forward: `û[k] = Σ_n u[n] e^{-2πi kn/G}`; inverse carries the `1/G`.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};

use crate::lindblad::C64;

fn twiddle(k: usize, n: usize, g: usize, sign: f64) -> C64 {
    // reduce kn mod G first so large products keep full precision
    let phase = sign * 2.0 * PI * ((k * n) % g) as f64 / g as f64;
    C64::new(phase.cos(), phase.sin())
}

/// Forward DFT matrix rows `0..modes` (`modes × G`).
pub fn forward_matrix(g: usize, modes: usize) -> Array2<C64> {
    Array2::from_shape_fn((modes, g), |(k, n)| twiddle(k, n, g, -1.0))
}

/// Inverse DFT matrix columns `0..modes` (`G × modes`), scaled by `1/G`.
pub fn inverse_matrix(g: usize, modes: usize) -> Array2<C64> {
    let scale = 1.0 / g as f64;
    Array2::from_shape_fn((g, modes), |(n, k)| twiddle(k, n, g, 1.0) * scale)
}

pub fn dft_time(u: ArrayView2<C64>) -> Array2<C64> {
    let g = u.nrows();
    forward_matrix(g, g).dot(&u)
}

pub fn idft_time(modes: ArrayView2<C64>) -> Array2<C64> {
    let g = modes.nrows();
    inverse_matrix(g, g).dot(&modes)
}

/// Precomputed truncated transforms for one grid size.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    pub grid_points: usize,
    pub modes: usize,
    /// `modes × G`
    pub forward: Array2<C64>,
    /// `G × modes`
    pub inverse: Array2<C64>,
    /// `G × modes`, the adjoint of `forward`
    pub forward_adjoint: Array2<C64>,
    /// `modes × G`, the adjoint of `inverse`
    pub inverse_adjoint: Array2<C64>,
}

impl SpectralPlan {
    pub fn new(grid_points: usize, modes: usize) -> Self {
        let forward = forward_matrix(grid_points, modes);
        let inverse = inverse_matrix(grid_points, modes);
        let forward_adjoint = forward.t().mapv(|z| z.conj());
        let inverse_adjoint = inverse.t().mapv(|z| z.conj());
        Self {
            grid_points,
            modes,
            forward,
            inverse,
            forward_adjoint,
            inverse_adjoint,
        }
    }
}
