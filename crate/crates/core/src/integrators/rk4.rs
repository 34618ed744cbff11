use ndarray::Array1;

use crate::error::{Error, Result};
use crate::integrators::grid::{TimeGrid, Trajectory};
use crate::lindblad::{DensityState, Liouvillian, C64};

/// One classical RK4 step of `dρ⃗/dt = Lρ⃗`.
pub fn rk4_step(l: &Liouvillian, s: &DensityState, dt: f64) -> Result<DensityState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("RK4 step needs dt > 0, got {dt}")));
    }
    if s.dim() != l.system_dim() {
        return Err(Error::dim("state dimension", l.system_dim(), s.dim()));
    }
    let next = rk4_vec(l, s.vec(), dt)?;
    let out = DensityState::from_vec(s.dim(), next)?;
    Ok(if s.is_physical() { out.assume_physical() } else { out })
}

pub(crate) fn rk4_vec(l: &Liouvillian, y: &Array1<C64>, dt: f64) -> Result<Array1<C64>> {
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in RK4 state".into()));
    }
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let k1 = l.apply(y.view());
    let k2 = l.apply((y + &(&k1 * half)).view());
    let k3 = l.apply((y + &(&k2 * half)).view());
    let k4 = l.apply((y + &(&k3 * h)).view());
    let sixth = C64::new(dt / 6.0, 0.0);
    let out = y + &((k1 + &(k2 * C64::new(2.0, 0.0)) + &(k3 * C64::new(2.0, 0.0)) + &k4) * sixth);
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("RK4 step produced a non-finite value".into()));
    }
    Ok(out)
}

/// RK4 trajectory over `grid`; `states[k]` is `k` steps from `s0`.
pub fn propagate(l: &Liouvillian, s0: &DensityState, grid: &TimeGrid) -> Result<Trajectory> {
    if s0.dim() != l.system_dim() {
        return Err(Error::dim("state dimension", l.system_dim(), s0.dim()));
    }
    let mut states = Vec::with_capacity(grid.n_points());
    states.push(s0.clone());
    let dt = grid.dt();
    let mut y = s0.vec().clone();
    for _ in 0..grid.n_steps {
        y = rk4_vec(l, &y, dt)?;
        let s = DensityState::from_vec(s0.dim(), y.clone())?;
        states.push(if s0.is_physical() { s.assume_physical() } else { s });
    }
    Ok(Trajectory {
        grid: *grid,
        states,
    })
}

/// RK4 states on the grid as raw vectors, starting from `y0`.
pub(crate) fn propagate_vec(
    l: &Liouvillian,
    y0: &Array1<C64>,
    n_steps: usize,
    dt: f64,
) -> Result<Vec<Array1<C64>>> {
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(y0.clone());
    let mut y = y0.clone();
    for _ in 0..n_steps {
        y = rk4_vec(l, &y, dt)?;
        out.push(y.clone());
    }
    Ok(out)
}
