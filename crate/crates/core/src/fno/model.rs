//! Forward evaluation and reverse-mode gradients of the neural propagator.
//!
//! Gradients use the convention `g = ∂L/∂Re z + i ∂L/∂Im z` for every complex
//! quantity `z`, which treats real and imaginary parts as independent reals.
//! With it, `y = x w` back-propagates as `g_x = g_y w̄`, `g_w = x̄ g_y`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::fno::config::FnoConfig;
use crate::fno::dft::SpectralPlan;
use crate::fno::params::{column_sum, Dense, FnoParams, FourierLayerParams};
use crate::integrators::{TimeGrid, Trajectory};
use crate::lindblad::{DensityState, C64};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A function of time sampled on the window grid: `grid_points × channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridFunction {
    pub values: Array2<C64>,
}

/// `σ(a+ib) = max(a,0) + i·max(b,0)`
pub fn split_relu(z: C64) -> C64 {
    C64::new(z.re.max(0.0), z.im.max(0.0))
}

fn relu(x: &Array2<C64>) -> Array2<C64> {
    x.mapv(split_relu)
}

/// Passes each gradient component where the matching pre-activation part was
/// strictly positive; the derivative at exactly zero is zero.
fn relu_backward(pre: &Array2<C64>, g: &Array2<C64>) -> Array2<C64> {
    let mut out = g.clone();
    ndarray::Zip::from(&mut out).and(pre).for_each(|o, p| {
        if p.re <= 0.0 {
            o.re = 0.0;
        }
        if p.im <= 0.0 {
            o.im = 0.0;
        }
    });
    out
}

fn conj_t(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

fn check_finite(x: &Array2<C64>, stage: &str) -> Result<()> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite activation in {stage}")))
    }
}

fn check_grid(config: &FnoConfig, grid: &TimeGrid) -> Result<()> {
    if grid.n_points() != config.grid_points {
        return Err(Error::dim("grid points", config.grid_points, grid.n_points()));
    }
    Ok(())
}

/// Input layout per grid point `k`: `vec(ρ₀)` (constant in `k`) followed by
/// the normalized time `t_k / t_max` as a real-valued channel.
pub fn embed_input(
    config: &FnoConfig,
    s0: &DensityState,
    grid: &TimeGrid,
) -> Result<ComplexGridFunction> {
    check_grid(config, grid)?;
    if s0.vec().len() != config.state_dim {
        return Err(Error::dim("state length", config.state_dim, s0.vec().len()));
    }
    let mut values = Array2::zeros((grid.n_points(), config.input_channels()));
    fill_embedding(values.view_mut(), s0.vec().view());
    Ok(ComplexGridFunction { values })
}

fn fill_embedding(mut rows: ndarray::ArrayViewMut2<C64>, s0: ArrayView1<C64>) {
    let g = rows.nrows();
    let d = s0.len();
    for k in 0..g {
        rows.slice_mut(s![k, ..d]).assign(&s0);
        rows[[k, d]] = C64::new(k as f64 / (g - 1) as f64, 0.0);
    }
}

struct LayerCache {
    input: Array2<C64>,
    /// Retained input modes, `modes × batch × C`.
    modes: Array3<C64>,
    pre: Array2<C64>,
}

/// Activations kept for the backward pass of one batch.
pub struct ForwardCache {
    batch: usize,
    embedded: Array2<C64>,
    lift_pre: Array2<C64>,
    lift_hidden: Array2<C64>,
    layers: Vec<LayerCache>,
    last: Array2<C64>,
    project_pre: Array2<C64>,
    project_hidden: Array2<C64>,
}

fn spectral_forward(
    layer: &FourierLayerParams,
    plan: &SpectralPlan,
    h: &Array2<C64>,
    batch: usize,
) -> (Array3<C64>, Array2<C64>) {
    let g = plan.grid_points;
    let m = plan.modes;
    let c = h.ncols();
    let mut modes = Array3::<C64>::zeros((m, batch, c));
    for b in 0..batch {
        let hb = h.slice(s![b * g..(b + 1) * g, ..]);
        let mut dst = modes.slice_mut(s![.., b, ..]);
        general_mat_mul(ONE, &plan.forward, &hb, C64::new(0.0, 0.0), &mut dst);
    }
    let mut mixed = Array3::<C64>::zeros((m, batch, c));
    for k in 0..m {
        let mut dst = mixed.index_axis_mut(Axis(0), k);
        general_mat_mul(
            ONE,
            &modes.index_axis(Axis(0), k),
            &layer.spectral.index_axis(Axis(0), k),
            C64::new(0.0, 0.0),
            &mut dst,
        );
    }
    let mut pre = layer.bypass.forward(h.view());
    for b in 0..batch {
        let vb = mixed.slice(s![.., b, ..]);
        let mut dst = pre.slice_mut(s![b * g..(b + 1) * g, ..]);
        general_mat_mul(ONE, &plan.inverse, &vb, ONE, &mut dst);
    }
    (modes, pre)
}

/// Applies one Fourier layer to a single grid function.
pub fn fourier_layer(
    layer: &FourierLayerParams,
    u: &ComplexGridFunction,
) -> Result<ComplexGridFunction> {
    let c = layer.bypass.weight.nrows();
    if u.values.ncols() != c {
        return Err(Error::dim("fourier layer channels", c, u.values.ncols()));
    }
    let g = u.values.nrows();
    let plan = SpectralPlan::new(g, layer.spectral.len_of(Axis(0)));
    let (_, pre) = spectral_forward(layer, &plan, &u.values, 1);
    Ok(ComplexGridFunction { values: relu(&pre) })
}

/// Batched forward pass. Each input is a vectorized `ρ₀`; each output is a
/// `grid_points × state_dim` array whose row `k` is the predicted `ρ⃗(t_k)`.
pub fn forward_batch(
    params: &FnoParams,
    inputs: &[ArrayView1<C64>],
) -> Result<(Vec<Array2<C64>>, ForwardCache)> {
    let cfg = &params.config;
    let g = cfg.grid_points;
    let batch = inputs.len();
    let mut embedded = Array2::<C64>::zeros((batch * g, cfg.input_channels()));
    for (b, s0) in inputs.iter().enumerate() {
        if s0.len() != cfg.state_dim {
            return Err(Error::dim("state length", cfg.state_dim, s0.len()));
        }
        fill_embedding(embedded.slice_mut(s![b * g..(b + 1) * g, ..]), *s0);
    }
    let plan = SpectralPlan::new(g, cfg.modes_kmax);

    let lift_pre = params.lift[0].forward(embedded.view());
    let lift_hidden = relu(&lift_pre);
    let mut h = params.lift[1].forward(lift_hidden.view());
    check_finite(&h, "lifting projection")?;

    let mut layers = Vec::with_capacity(params.layers.len());
    for (idx, layer) in params.layers.iter().enumerate() {
        let (modes, pre) = spectral_forward(layer, &plan, &h, batch);
        let out = relu(&pre);
        check_finite(&out, &format!("fourier layer {idx}"))?;
        layers.push(LayerCache {
            input: std::mem::replace(&mut h, out),
            modes,
            pre,
        });
    }

    let project_pre = params.project[0].forward(h.view());
    let project_hidden = relu(&project_pre);
    let out = params.project[1].forward(project_hidden.view());
    check_finite(&out, "output projection")?;

    let outputs = (0..batch)
        .map(|b| out.slice(s![b * g..(b + 1) * g, ..]).to_owned())
        .collect();
    Ok((
        outputs,
        ForwardCache {
            batch,
            embedded,
            lift_pre,
            lift_hidden,
            layers,
            last: h,
            project_pre,
            project_hidden,
        },
    ))
}

fn dense_backward(d: &Dense, x: &Array2<C64>, gy: &Array2<C64>, grad: &mut Dense) -> Array2<C64> {
    grad.weight = x.t().mapv(|z| z.conj()).dot(gy);
    grad.bias = column_sum(gy.view());
    gy.dot(&conj_t(&d.weight))
}

/// Reverse pass: given `∂L/∂output` per sample, returns `∂L/∂θ`.
pub fn backward(
    params: &FnoParams,
    cache: &ForwardCache,
    output_grads: &[Array2<C64>],
) -> Result<FnoParams> {
    let cfg = &params.config;
    let g = cfg.grid_points;
    let batch = cache.batch;
    if output_grads.len() != batch {
        return Err(Error::dim("output gradient count", batch, output_grads.len()));
    }
    let mut gout = Array2::<C64>::zeros((batch * g, cfg.state_dim));
    for (b, go) in output_grads.iter().enumerate() {
        gout.slice_mut(s![b * g..(b + 1) * g, ..]).assign(go);
    }
    let plan = SpectralPlan::new(g, cfg.modes_kmax);
    let mut grad = FnoParams::zeros(cfg);

    let g_hidden = dense_backward(&params.project[1], &cache.project_hidden, &gout, &mut grad.project[1]);
    let g_pre = relu_backward(&cache.project_pre, &g_hidden);
    let mut gh = dense_backward(&params.project[0], &cache.last, &g_pre, &mut grad.project[0]);

    for (idx, layer) in params.layers.iter().enumerate().rev() {
        let lc = &cache.layers[idx];
        let lg = &mut grad.layers[idx];
        let gz = relu_backward(&lc.pre, &gh);
        let mut gin = dense_backward(&layer.bypass, &lc.input, &gz, &mut lg.bypass);

        let m = plan.modes;
        let c = gz.ncols();
        let mut g_mixed = Array3::<C64>::zeros((m, batch, c));
        for b in 0..batch {
            let gzb = gz.slice(s![b * g..(b + 1) * g, ..]);
            let mut dst = g_mixed.slice_mut(s![.., b, ..]);
            general_mat_mul(ONE, &plan.inverse_adjoint, &gzb, C64::new(0.0, 0.0), &mut dst);
        }
        let mut g_modes = Array3::<C64>::zeros((m, batch, c));
        for k in 0..m {
            let uk = lc.modes.index_axis(Axis(0), k);
            let gk = g_mixed.index_axis(Axis(0), k);
            lg.spectral
                .index_axis_mut(Axis(0), k)
                .assign(&uk.t().mapv(|z| z.conj()).dot(&gk));
            let wk = layer.spectral.index_axis(Axis(0), k);
            let mut dst = g_modes.index_axis_mut(Axis(0), k);
            general_mat_mul(ONE, &gk, &wk.t().mapv(|z| z.conj()), C64::new(0.0, 0.0), &mut dst);
        }
        for b in 0..batch {
            let gmb = g_modes.slice(s![.., b, ..]);
            let mut dst = gin.slice_mut(s![b * g..(b + 1) * g, ..]);
            general_mat_mul(ONE, &plan.forward_adjoint, &gmb, ONE, &mut dst);
        }
        gh = gin;
    }

    let g_hidden = dense_backward(&params.lift[1], &cache.lift_hidden, &gh, &mut grad.lift[1]);
    let g_pre = relu_backward(&cache.lift_pre, &g_hidden);
    dense_backward(&params.lift[0], &cache.embedded, &g_pre, &mut grad.lift[0]);
    Ok(grad)
}

/// Predicted trajectory `ρ⃗(t_k) = G_{t_k}(θ) ρ⃗₀` on the model's window grid.
pub fn fno_forward(params: &FnoParams, s0: &DensityState, grid: &TimeGrid) -> Result<Trajectory> {
    check_grid(&params.config, grid)?;
    let n = s0.dim();
    let (mut outs, _) = forward_batch(params, &[s0.vec().view()])?;
    let out = outs.pop().expect("one output per input");
    let states = out
        .rows()
        .into_iter()
        .map(|r| DensityState::from_vec(n, r.to_owned()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        grid: *grid,
        states,
    })
}

/// Forward pass without keeping activations.
pub fn predict(params: &FnoParams, inputs: &[ArrayView1<C64>]) -> Result<Vec<Array2<C64>>> {
    forward_batch(params, inputs).map(|(o, _)| o)
}
