//! Propagator backends behind one window-level contract: evolve a batch of
//! vectorized matrices over the backend's time window and return every grid
//! point. Longer times are reached by chaining windows.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fno::grad::GRADIENT_CHUNK;
use crate::fno::model::predict;
use crate::fno::FnoParams;
use crate::integrators::expm_propagator;
use crate::integrators::rk4::propagate_vec;
use crate::integrators::TimeGrid;
use crate::lindblad::{frobenius, Liouvillian, C64};

pub trait Propagator: Sync {
    fn name(&self) -> &'static str;

    /// The window grid; `t_max` is the window length.
    fn grid(&self) -> TimeGrid;

    /// Length of a vectorized state, `N²`.
    fn state_len(&self) -> usize;

    /// For each input, the `G × N²` matrix of states at the window's grid
    /// points, row 0 being time zero. Inputs need not be density matrices.
    fn window(&self, inputs: &[Array1<C64>]) -> Result<Vec<Array2<C64>>>;
}

fn check_inputs(p: &dyn Propagator, inputs: &[Array1<C64>]) -> Result<()> {
    for v in inputs {
        if v.len() != p.state_len() {
            return Err(Error::dim("propagator input length", p.state_len(), v.len()));
        }
    }
    Ok(())
}

fn rows_to_matrix(rows: Vec<Array1<C64>>) -> Array2<C64> {
    let d = rows[0].len();
    let mut m = Array2::zeros((rows.len(), d));
    for (k, r) in rows.into_iter().enumerate() {
        m.row_mut(k).assign(&r);
    }
    m
}

/// Classical RK4 with the grid spacing as step.
#[derive(Debug, Clone)]
pub struct Rk4Backend {
    pub liouvillian: Liouvillian,
    pub grid: TimeGrid,
}

impl Rk4Backend {
    pub fn new(liouvillian: Liouvillian, grid: TimeGrid) -> Self {
        Self { liouvillian, grid }
    }
}

impl Propagator for Rk4Backend {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn state_len(&self) -> usize {
        self.liouvillian.dim()
    }

    fn window(&self, inputs: &[Array1<C64>]) -> Result<Vec<Array2<C64>>> {
        check_inputs(self, inputs)?;
        inputs
            .iter()
            .map(|v| {
                propagate_vec(&self.liouvillian, v, self.grid.n_steps, self.grid.dt())
                    .map(rows_to_matrix)
            })
            .collect()
    }
}

/// Exact propagators `exp(t_k L)`, precomputed for every grid point.
#[derive(Debug, Clone)]
pub struct ExpmBackend {
    pub grid: TimeGrid,
    dim: usize,
    /// Row `k` of the output is `v · steps[k]ᵀ`; stored transposed.
    steps_t: Vec<Array2<C64>>,
}

impl ExpmBackend {
    pub fn new(liouvillian: &Liouvillian, grid: TimeGrid) -> Result<Self> {
        let steps_t = (0..grid.n_points())
            .map(|k| expm_propagator(liouvillian, grid.point(k)).map(|g| g.reversed_axes()))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid,
            dim: liouvillian.dim(),
            steps_t,
        })
    }
}

impl Propagator for ExpmBackend {
    fn name(&self) -> &'static str {
        "expm"
    }

    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn state_len(&self) -> usize {
        self.dim
    }

    fn window(&self, inputs: &[Array1<C64>]) -> Result<Vec<Array2<C64>>> {
        check_inputs(self, inputs)?;
        Ok(inputs
            .iter()
            .map(|v| {
                let mut m = Array2::zeros((self.steps_t.len(), self.dim));
                for (k, g) in self.steps_t.iter().enumerate() {
                    m.row_mut(k).assign(&v.dot(g));
                }
                m
            })
            .collect())
    }
}

/// The trained network. Inputs are scaled to unit Frobenius norm before the
/// forward pass and the outputs scaled back, extending the network linearly
/// to inputs of any magnitude; a zero input maps to zero.
#[derive(Debug, Clone)]
pub struct FnoBackend {
    pub params: FnoParams,
    pub grid: TimeGrid,
}

impl FnoBackend {
    pub fn new(params: FnoParams, t_max: f64) -> Result<Self> {
        let g = params.config.grid_points;
        let grid = TimeGrid::new(t_max, g - 1)?;
        Ok(Self { params, grid })
    }
}

impl Propagator for FnoBackend {
    fn name(&self) -> &'static str {
        "fno"
    }

    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn state_len(&self) -> usize {
        self.params.config.state_dim
    }

    fn window(&self, inputs: &[Array1<C64>]) -> Result<Vec<Array2<C64>>> {
        check_inputs(self, inputs)?;
        let chunks: Vec<Vec<Array2<C64>>> = inputs
            .par_chunks(GRADIENT_CHUNK)
            .map(|chunk| {
                let norms: Vec<f64> = chunk.iter().map(|v| frobenius(v.view())).collect();
                let scaled: Vec<Array1<C64>> = chunk
                    .iter()
                    .zip(&norms)
                    .map(|(v, &n)| if n > 0.0 { v.mapv(|z| z / n) } else { v.clone() })
                    .collect();
                let views: Vec<_> = scaled.iter().map(|v| v.view()).collect();
                let outs = predict(&self.params, &views)?;
                Ok(outs
                    .into_iter()
                    .zip(&norms)
                    .map(|(o, &n)| {
                        if n > 0.0 {
                            o.mapv(|z| z * n)
                        } else {
                            Array2::zeros(o.dim())
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }
}

/// Chains `n_windows` windows, feeding each window's final state into the
/// next, and calls `visit(window_index, outputs)` for every window in order.
pub fn for_each_window(
    backend: &dyn Propagator,
    inputs: &[Array1<C64>],
    n_windows: usize,
    mut visit: impl FnMut(usize, &[Array2<C64>]) -> Result<()>,
) -> Result<()> {
    let mut current: Vec<Array1<C64>> = inputs.to_vec();
    for w in 0..n_windows {
        let outs = backend.window(&current)?;
        visit(w, &outs)?;
        current = outs
            .iter()
            .map(|o| o.row(o.nrows() - 1).to_owned())
            .collect();
    }
    Ok(())
}

/// States at every grid step over `n_windows` chained windows:
/// `n_windows · (G − 1) + 1` rows per input.
pub fn long_time_trajectories(
    backend: &dyn Propagator,
    inputs: &[Array1<C64>],
    n_windows: usize,
) -> Result<Vec<Array2<C64>>> {
    let g = backend.grid().n_points();
    let d = backend.state_len();
    let steps = n_windows * (g - 1);
    let mut out: Vec<Array2<C64>> = inputs
        .iter()
        .map(|v| {
            let mut m = Array2::zeros((steps + 1, d));
            m.row_mut(0).assign(v);
            m
        })
        .collect();
    check_inputs(backend, inputs)?;
    for_each_window(backend, inputs, n_windows, |w, outs| {
        for (m, o) in out.iter_mut().zip(outs) {
            for k in 1..g {
                m.row_mut(w * (g - 1) + k).assign(&o.row(k));
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// The state after `k_windows` full windows plus `offset` grid steps.
pub fn long_time_propagate_vec(
    backend: &dyn Propagator,
    v: &Array1<C64>,
    k_windows: usize,
    offset: usize,
) -> Result<Array1<C64>> {
    check_inputs(backend, std::slice::from_ref(v))?;
    let g = backend.grid().n_points();
    if offset >= g {
        return Err(Error::Domain(format!(
            "offset {offset} outside a window of {g} grid points"
        )));
    }
    let mut y = v.clone();
    for_each_window(backend, std::slice::from_ref(v), k_windows, |_, outs| {
        y = outs[0].row(g - 1).to_owned();
        Ok(())
    })?;
    if offset == 0 {
        return Ok(y);
    }
    let outs = backend.window(std::slice::from_ref(&y))?;
    Ok(outs[0].row(offset).to_owned())
}
