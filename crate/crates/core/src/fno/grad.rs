//! Loss gradients over a batch, with fixed-order reduction across chunks.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fno::model::{backward, forward_batch};
use crate::fno::params::FnoParams;
use crate::lindblad::{Liouvillian, C64};
use crate::training::loss::{data_loss_and_grad, physics_loss_and_grad};

/// Samples per forward/backward chunk. Chunks are fixed by position, so the
/// reduction order never depends on the thread count.
pub const GRADIENT_CHUNK: usize = 16;

#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Relative error against a reference trajectory (`G × N²`).
    Data(ArrayView2<'a, C64>),
    /// Equation-of-motion residual plus the identity-at-zero term.
    Physics { liouvillian: &'a Liouvillian, dt: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct GradientItem<'a> {
    pub input: ArrayView1<'a, C64>,
    pub objective: Objective<'a>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct GradientResult {
    pub grad: FnoParams,
    /// `Σ weight_i · loss_i`
    pub loss: f64,
    /// Unweighted per-item losses, in input order.
    pub item_losses: Vec<f64>,
}

fn item_loss(output: &Array2<C64>, item: &GradientItem) -> Result<(f64, Array2<C64>)> {
    match item.objective {
        Objective::Data(target) => data_loss_and_grad(output.view(), target),
        Objective::Physics { liouvillian, dt } => {
            physics_loss_and_grad(output.view(), item.input, liouvillian, dt)
        }
    }
}

fn chunk_gradient(params: &FnoParams, items: &[GradientItem]) -> Result<GradientResult> {
    let inputs: Vec<_> = items.iter().map(|it| it.input).collect();
    let (outputs, cache) = forward_batch(params, &inputs)?;
    let mut grads = Vec::with_capacity(items.len());
    let mut losses = Vec::with_capacity(items.len());
    let mut total = 0.0;
    for (out, item) in outputs.iter().zip(items) {
        let (l, g) = item_loss(out, item)?;
        total += item.weight * l;
        losses.push(l);
        grads.push(g.mapv(|z| z * item.weight));
    }
    let grad = backward(params, &cache, &grads)?;
    Ok(GradientResult {
        grad,
        loss: total,
        item_losses: losses,
    })
}

/// Gradient of `Σ_i weight_i · loss_i` with respect to every parameter.
pub fn fno_gradient(params: &FnoParams, items: &[GradientItem]) -> Result<GradientResult> {
    let parts: Vec<GradientResult> = items
        .par_chunks(GRADIENT_CHUNK)
        .map(|chunk| chunk_gradient(params, chunk))
        .collect::<Result<_>>()?;
    let mut acc = GradientResult {
        grad: FnoParams::zeros(&params.config),
        loss: 0.0,
        item_losses: Vec::with_capacity(items.len()),
    };
    for p in parts {
        acc.grad.add_assign(&p.grad);
        acc.loss += p.loss;
        acc.item_losses.extend(p.item_losses);
    }
    if !acc.loss.is_finite() {
        return Err(Error::Numerical("loss is not finite".into()));
    }
    Ok(acc)
}

/// Loss only, for finite-difference checks and evaluation.
pub fn fno_loss(params: &FnoParams, items: &[GradientItem]) -> Result<f64> {
    let mut total = 0.0;
    for chunk in items.chunks(GRADIENT_CHUNK) {
        let inputs: Vec<_> = chunk.iter().map(|it| it.input).collect();
        let (outputs, _) = forward_batch(params, &inputs)?;
        for (out, item) in outputs.iter().zip(chunk) {
            total += item.weight * item_loss(out, item)?.0;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fno::config::FnoConfig;
    use crate::fno::params::init_params;
    use crate::integrators::{propagate, sample_gue_density, TimeGrid};
    use crate::system::System;

    fn tiny() -> FnoConfig {
        FnoConfig {
            n_fourier_layers: 2,
            modes_kmax: 8,
            hidden_channels: 4,
            projection_hidden: 4,
            state_dim: 4,
            grid_points: 8,
        }
        .validated()
        .unwrap()
    }

    #[test]
    fn zero_model_has_no_gradient_beyond_retained_modes() {
        let mut cfg = tiny();
        cfg.modes_kmax = 2;
        let p = FnoParams::zeros(&cfg);
        let target = Array2::<C64>::zeros((8, 4));
        let s0 = sample_gue_density(2, 1);
        let item = GradientItem {
            input: s0.vec().view(),
            objective: Objective::Data(target.view()),
            weight: 1.0,
        };
        let r = fno_gradient(&p, &[item]).unwrap();
        // one spectral block per retained mode; nothing else exists
        for l in &r.grad.layers {
            assert_eq!(l.spectral.dim().0, 2);
            assert!(l.spectral.iter().all(|z| *z == C64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn chunked_reduction_is_deterministic() {
        let cfg = tiny();
        let p = init_params(&cfg, 2).unwrap();
        let sys = System::dephasing_dimer(200.0);
        let l = sys.liouvillian().unwrap();
        let grid = TimeGrid::new(7.0, 7).unwrap();
        let states: Vec<_> = (0..40).map(|i| sample_gue_density(2, i)).collect();
        let trajs: Vec<Array2<C64>> = states
            .iter()
            .map(|s| {
                let t = propagate(&l, s, &grid).unwrap();
                let mut a = Array2::zeros((8, 4));
                for (k, st) in t.states.iter().enumerate() {
                    a.row_mut(k).assign(st.vec());
                }
                a
            })
            .collect();
        let items: Vec<_> = states
            .iter()
            .zip(&trajs)
            .map(|(s, t)| GradientItem {
                input: s.vec().view(),
                objective: Objective::Data(t.view()),
                weight: 0.025,
            })
            .collect();
        let a = fno_gradient(&p, &items).unwrap();
        let b = fno_gradient(&p, &items).unwrap();
        assert_eq!(a.grad, b.grad);
        assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        assert!((fno_loss(&p, &items).unwrap() - a.loss).abs() < 1e-12);
    }
}
