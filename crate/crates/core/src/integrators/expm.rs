//! Matrix exponential by scaling and squaring with a Taylor kernel.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::lindblad::{Liouvillian, C64};

/// Scaled 1-norm threshold below which the Taylor series is summed.
const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 60;

fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` for a dense square complex matrix.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::dim("expm needs a square matrix", r, c));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("expm input has non-finite entries".into()));
    }
    let norm = one_norm(a);
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));

    let mut sum = Array2::<C64>::eye(r);
    let mut term = Array2::<C64>::eye(r);
    for k in 1..=MAX_TERMS {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum += &term;
        if one_norm(&term) <= f64::EPSILON * 1e-2 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    Ok(sum)
}

/// The exact propagator `G_t = exp(tL)`.
pub fn expm_propagator(l: &Liouvillian, t: f64) -> Result<Array2<C64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("propagation time must be >= 0, got {t}")));
    }
    expm(&l.matrix().mapv(|z| z * t))
}
