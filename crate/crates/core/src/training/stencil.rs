//! Fourth-order finite-difference time derivative on a uniform grid.
//!
//! Interior points use the central five-point stencil; the first and last two
//! points use one-sided fourth-order stencils.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::lindblad::C64;

const CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

/// The `G × G` matrix `D` with `(D f)_k ≈ f'(t_k)`.
pub fn derivative_matrix(g: usize, dt: f64) -> Result<Array2<f64>> {
    if g < 5 {
        return Err(Error::Domain(format!(
            "fourth-order derivative needs at least 5 grid points, got {g}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("grid spacing must be positive, got {dt}")));
    }
    let mut d = Array2::zeros((g, g));
    let s = 1.0 / (12.0 * dt);
    for j in 0..5 {
        d[[0, j]] = EDGE0[j] * s;
        d[[1, j]] = EDGE1[j] * s;
        // mirrored stencils change sign
        d[[g - 1, g - 1 - j]] = -EDGE0[j] * s;
        d[[g - 2, g - 1 - j]] = -EDGE1[j] * s;
    }
    for k in 2..g - 2 {
        for j in 0..5 {
            d[[k, k + j - 2]] = CENTRAL[j] * s;
        }
    }
    Ok(d)
}

/// Complex copy of the stencil, ready to multiply `G × D` trajectories.
pub fn derivative_operator(g: usize, dt: f64) -> Result<Array2<C64>> {
    Ok(derivative_matrix(g, dt)?.mapv(|v| C64::new(v, 0.0)))
}

pub fn time_derivative(y: ArrayView2<C64>, dt: f64) -> Result<Array2<C64>> {
    Ok(derivative_operator(y.nrows(), dt)?.dot(&y))
}
