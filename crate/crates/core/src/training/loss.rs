//! Data and physics-informed losses with their gradients with respect to the
//! model output.
//!
//! Output gradients follow the same convention as the network:
//! `g = ∂L/∂Re y + i ∂L/∂Im y`.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::lindblad::{frobenius, Liouvillian, C64};
use crate::training::stencil::derivative_operator;

/// Regularizer in relative-error denominators.
pub const LOSS_EPS: f64 = 1e-12;

/// Grid mean of `‖y_k − d_k‖ / (‖d_k‖ + ε)` and its gradient.
pub fn data_loss_and_grad(output: ArrayView2<C64>, target: ArrayView2<C64>) -> Result<(f64, Array2<C64>)> {
    if output.dim() != target.dim() {
        return Err(Error::dim("trajectory points", target.nrows(), output.nrows()));
    }
    let g = output.nrows() as f64;
    let diff = &output - &target;
    let mut grad = Array2::zeros(output.dim());
    let mut loss = 0.0;
    for (k, row) in diff.rows().into_iter().enumerate() {
        let num = frobenius(row);
        let den = frobenius(target.row(k)) + LOSS_EPS;
        loss += num / den;
        if num > 0.0 {
            let scale = 1.0 / (g * num * den);
            grad.row_mut(k).assign(&row.mapv(|z| z * scale));
        }
    }
    let loss = loss / g;
    if !loss.is_finite() {
        return Err(Error::Numerical("data loss is not finite".into()));
    }
    Ok((loss, grad))
}

pub fn data_loss_value(output: ArrayView2<C64>, target: ArrayView2<C64>) -> Result<f64> {
    data_loss_and_grad(output, target).map(|(l, _)| l)
}

/// Residual of the equation of motion plus the `t = 0` identity term:
///
/// `mean_k ‖D y − L y‖_k / (‖L y_k‖ + ε) + ‖y_0 − ρ⃗₀‖ / ‖ρ⃗₀‖`
///
/// where `D` is the fourth-order stencil on spacing `dt`.
pub fn physics_loss_and_grad(
    output: ArrayView2<C64>,
    s0: ArrayView1<C64>,
    l: &Liouvillian,
    dt: f64,
) -> Result<(f64, Array2<C64>)> {
    let (t1, t2, grad) = physics_parts(output, s0, l, dt)?;
    Ok((t1 + t2, grad))
}

fn physics_parts(
    output: ArrayView2<C64>,
    s0: ArrayView1<C64>,
    l: &Liouvillian,
    dt: f64,
) -> Result<(f64, f64, Array2<C64>)> {
    let (g, d) = output.dim();
    if d != l.dim() || s0.len() != d {
        return Err(Error::dim("state length", l.dim(), d));
    }
    let s0_norm = frobenius(s0);
    if s0_norm == 0.0 {
        return Err(Error::Domain("physics loss needs a nonzero initial matrix".into()));
    }
    let dmat = derivative_operator(g, dt)?;
    let ly = l.apply_rows(output);
    let resid = &dmat.dot(&output) - &ly;
    let gf = g as f64;

    let mut g_resid = Array2::<C64>::zeros((g, d));
    let mut g_ly = Array2::<C64>::zeros((g, d));
    let mut term1 = 0.0;
    for k in 0..g {
        let a = frobenius(resid.row(k));
        let b = frobenius(ly.row(k));
        let den = b + LOSS_EPS;
        term1 += a / den;
        if a > 0.0 {
            let sc = 1.0 / (gf * a * den);
            g_resid.row_mut(k).assign(&resid.row(k).mapv(|z| z * sc));
        }
        if b > 0.0 {
            let sc = -a / (gf * den * den * b);
            g_ly.row_mut(k).assign(&ly.row(k).mapv(|z| z * sc));
        }
    }
    term1 /= gf;

    // D is real, so its adjoint is the transpose; L acts on rows, so its
    // adjoint on rows is right-multiplication by conj(L).
    let mut grad = dmat.t().dot(&g_resid);
    grad += &l.apply_adjoint_rows((&g_ly - &g_resid).view());

    let d0 = &output.row(0) - &s0;
    let n0 = frobenius(d0.view());
    let term2 = n0 / s0_norm;
    if n0 > 0.0 {
        let sc = 1.0 / (n0 * s0_norm);
        let mut r0 = grad.row_mut(0);
        r0 += &d0.mapv(|z| z * sc);
    }
    if !(term1 + term2).is_finite() {
        return Err(Error::Numerical("physics loss is not finite".into()));
    }
    Ok((term1, term2, grad))
}

/// The two physics terms separately: `(residual, identity)`.
pub fn physics_terms(
    output: ArrayView2<C64>,
    s0: ArrayView1<C64>,
    l: &Liouvillian,
    dt: f64,
) -> Result<(f64, f64)> {
    let (t1, t2, _) = physics_parts(output, s0, l, dt)?;
    Ok((t1, t2))
}
