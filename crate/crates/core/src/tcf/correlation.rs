use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fno::grad::GRADIENT_CHUNK;
use crate::lindblad::{commutator_superop, trace_product, DensityState, HermitianOperator, C64};
use crate::tcf::backend::{for_each_window, long_time_propagate_vec, long_time_trajectories, Propagator};

/// Output times on the backend grid: every `stride`-th step over `windows`
/// chained windows, starting at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcfAxis {
    pub windows: usize,
    pub stride: usize,
}

impl TcfAxis {
    pub fn new(windows: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Domain("TCF stride must be positive".into()));
        }
        Ok(Self { windows, stride })
    }

    fn total_steps(&self, grid_points: usize) -> usize {
        self.windows * (grid_points - 1)
    }

    pub fn len(&self, grid_points: usize) -> usize {
        self.total_steps(grid_points) / self.stride + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self, backend: &dyn Propagator) -> Vec<f64> {
        let grid = backend.grid();
        let dt = grid.dt();
        (0..self.len(grid.n_points()))
            .map(|i| (i * self.stride) as f64 * dt)
            .collect()
    }
}

/// A first-order (`t2` empty, one value column) or second-order TCF.
#[derive(Debug, Clone, PartialEq)]
pub struct TcfGrid {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    /// `|t1| × max(|t2|, 1)`
    pub values: Array2<C64>,
}

impl TcfGrid {
    pub fn order(&self) -> u8 {
        if self.t2.is_empty() {
            1
        } else {
            2
        }
    }

    /// Largest imaginary part; the exact TCF is real for Hermitian `X`.
    pub fn max_imag_residue(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    pub times: Vec<f64>,
    /// `times × N`, real parts of the diagonal.
    pub values: Array2<f64>,
    /// Largest imaginary part seen on the diagonal.
    pub max_imag_residue: f64,
}

fn check_state(backend: &dyn Propagator, n: usize) -> Result<()> {
    if n * n != backend.state_len() {
        return Err(Error::dim("state length for backend", backend.state_len(), n * n));
    }
    Ok(())
}

/// Composition of `k_windows` full windows, then `offset` further steps.
pub fn long_time_propagate(
    backend: &dyn Propagator,
    s0: &DensityState,
    k_windows: usize,
    offset: usize,
) -> Result<DensityState> {
    check_state(backend, s0.dim())?;
    let v = long_time_propagate_vec(backend, s0.vec(), k_windows, offset)?;
    DensityState::from_vec(s0.dim(), v)
}

/// Site populations at every grid step over `n_windows` windows.
pub fn populations(backend: &dyn Propagator, s0: &DensityState, n_windows: usize) -> Result<Populations> {
    let n = s0.dim();
    check_state(backend, n)?;
    let traj = long_time_trajectories(backend, std::slice::from_ref(s0.vec()), n_windows)?
        .pop()
        .expect("one trajectory");
    let dt = backend.grid().dt();
    let mut values = Array2::zeros((traj.nrows(), n));
    let mut residue: f64 = 0.0;
    for (k, row) in traj.rows().into_iter().enumerate() {
        for j in 0..n {
            let z = row[j * n + j];
            values[[k, j]] = z.re;
            residue = residue.max(z.im.abs());
        }
    }
    Ok(Populations {
        times: (0..traj.nrows()).map(|k| k as f64 * dt).collect(),
        values,
        max_imag_residue: residue,
    })
}

/// Population of site `site` (1-based) with its times and imaginary residue.
pub fn population_trace(
    backend: &dyn Propagator,
    s0: &DensityState,
    site: usize,
    n_windows: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if site == 0 || site > s0.dim() {
        return Err(Error::Domain(format!("site {site} outside 1..={}", s0.dim())));
    }
    let p = populations(backend, s0, n_windows)?;
    let col = p.values.column(site - 1).to_vec();
    Ok((p.times, col, p.max_imag_residue))
}

fn check_operator(backend: &dyn Propagator, x: &HermitianOperator, s0: &DensityState) -> Result<()> {
    if x.dim() != s0.dim() {
        return Err(Error::dim("operator/state dimension", s0.dim(), x.dim()));
    }
    check_state(backend, s0.dim())
}

/// `R⁽¹⁾(t₁) = X_tr G_{t₁} X_× ρ⃗₀` on `axis`.
pub fn tcf_first_order(
    backend: &dyn Propagator,
    x: &HermitianOperator,
    s0: &DensityState,
    axis: TcfAxis,
) -> Result<TcfGrid> {
    check_operator(backend, x, s0)?;
    let xc = commutator_superop(x);
    let y = xc.apply(s0.vec().view());
    let traj = long_time_trajectories(backend, &[y], axis.windows)?
        .pop()
        .expect("one trajectory");
    let t1 = axis.times(backend);
    let values = Array1::from_iter(
        (0..t1.len()).map(|i| trace_product(x, traj.row(i * axis.stride))),
    );
    Ok(TcfGrid {
        values: values.insert_axis(ndarray::Axis(1)),
        t1,
        t2: Vec::new(),
    })
}

/// `R⁽²⁾(t₁, t₂) = X_tr G_{t₂} X_× G_{t₁} X_× ρ⃗₀`. The `t₁` states come from
/// one long propagation; the `t₂` propagations run in parallel over `t₁`.
pub fn tcf_second_order(
    backend: &dyn Propagator,
    x: &HermitianOperator,
    s0: &DensityState,
    axis1: TcfAxis,
    axis2: TcfAxis,
) -> Result<TcfGrid> {
    check_operator(backend, x, s0)?;
    let g = backend.grid().n_points();
    let xc = commutator_superop(x);
    let y = xc.apply(s0.vec().view());
    let traj = long_time_trajectories(backend, &[y], axis1.windows)?
        .pop()
        .expect("one trajectory");
    let t1 = axis1.times(backend);
    let t2 = axis2.times(backend);
    let starts: Vec<Array1<C64>> = (0..t1.len())
        .map(|i| xc.apply(traj.row(i * axis1.stride)))
        .collect();
    let n2 = t2.len();
    let stride = axis2.stride;
    let rows: Vec<Vec<C64>> = starts
        .par_chunks(GRADIENT_CHUNK)
        .map(|chunk| {
            let mut acc: Vec<Vec<C64>> = chunk
                .iter()
                .map(|v| {
                    let mut r = vec![C64::new(0.0, 0.0); n2];
                    r[0] = trace_product(x, v.view());
                    r
                })
                .collect();
            for_each_window(backend, chunk, axis2.windows, |w, outs| {
                for (r, o) in acc.iter_mut().zip(outs) {
                    for k in 1..g {
                        let s = w * (g - 1) + k;
                        if s % stride == 0 {
                            r[s / stride] = trace_product(x, o.row(k));
                        }
                    }
                }
                Ok(())
            })?;
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut values = Array2::zeros((t1.len(), n2));
    for (i, r) in rows.into_iter().enumerate() {
        for (j, z) in r.into_iter().enumerate() {
            values[[i, j]] = z;
        }
    }
    Ok(TcfGrid { t1, t2, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{expm_propagator, sample_gue_density, TimeGrid};
    use crate::lindblad::{frobenius, hopping_operator, Liouvillian};
    use crate::system::System;
    use crate::tcf::backend::{ExpmBackend, Rk4Backend};
    use crate::units::CONSTANTS;
    use ndarray::Array2;

    fn fmo() -> (Liouvillian, TimeGrid) {
        (System::fmo7().liouvillian().unwrap(), TimeGrid::default_window())
    }

    fn comm(x: &Array2<C64>, r: &Array2<C64>) -> Array2<C64> {
        let pref = C64::new(0.0, 1.0 / CONSTANTS.hbar_cm_fs);
        (x.dot(r) - r.dot(x)).mapv(|z| z * pref)
    }

    fn trace_xy(x: &Array2<C64>, y: &Array2<C64>) -> C64 {
        x.dot(y).diag().sum()
    }

    fn unvec(v: Array1<C64>, n: usize) -> Array2<C64> {
        v.into_shape_with_order((n, n)).unwrap()
    }

    #[test]
    fn zero_windows_is_identity_and_expm_composes_exactly() {
        let (l, grid) = fmo();
        let b = ExpmBackend::new(&l, grid).unwrap();
        let s0 = sample_gue_density(7, 4);
        let same = long_time_propagate(&b, &s0, 0, 0).unwrap();
        assert_eq!(same.vec(), s0.vec());
        let got = long_time_propagate(&b, &s0, 3, 7).unwrap();
        let t = 3.0 * grid.t_max + 7.0 * grid.dt();
        let want = expm_propagator(&l, t).unwrap().dot(s0.vec());
        assert!(frobenius((got.vec() - &want).view()) <= 1e-10 * frobenius(want.view()));
        assert!(long_time_propagate(&b, &s0, 1, 51).is_err());
    }

    #[test]
    fn populations_start_on_site_and_conserve_trace() {
        let (l, grid) = fmo();
        let rk4 = Rk4Backend::new(l.clone(), grid);
        let expm = ExpmBackend::new(&l, grid).unwrap();
        let s0 = DensityState::site(7, 5).unwrap();
        let p = populations(&rk4, &s0, 6).unwrap();
        assert_eq!(p.values.nrows(), 6 * 50 + 1);
        assert_eq!(p.values.row(0).to_vec(), vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        for row in p.values.rows() {
            assert!((row.sum() - 1.0).abs() <= 1e-6);
        }
        assert!(p.max_imag_residue <= 1e-8);
        let q = populations(&expm, &s0, 6).unwrap();
        let dev = (&p.values - &q.values).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(dev <= 1e-6, "rk4 vs expm {dev}");
        // site 6 decays while sites 4 and 5 take population transiently
        let (_, p6, _) = population_trace(&expm, &s0, 6, 2).unwrap();
        let (_, p5, _) = population_trace(&expm, &s0, 5, 2).unwrap();
        let (_, p4, _) = population_trace(&expm, &s0, 4, 2).unwrap();
        assert!(p6[100] < 0.9);
        assert!(p5.iter().any(|&v| v > 0.05) && p4.iter().any(|&v| v > 0.01));
        assert!(population_trace(&expm, &s0, 0, 1).is_err());
        assert!(population_trace(&expm, &s0, 8, 1).is_err());
    }

    #[test]
    fn identity_operator_gives_zero_tcfs() {
        let (l, grid) = fmo();
        let b = ExpmBackend::new(&l, grid).unwrap();
        let id = HermitianOperator::identity(7);
        let s0 = DensityState::site(7, 0).unwrap();
        let r1 = tcf_first_order(&b, &id, &s0, TcfAxis::new(2, 1).unwrap()).unwrap();
        assert!(r1.values.iter().all(|z| z.norm() == 0.0));
        let ax = TcfAxis::new(1, 10).unwrap();
        let r2 = tcf_second_order(&b, &id, &s0, ax, ax).unwrap();
        assert!(r2.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn zero_time_values_match_matrix_algebra() {
        let (l, grid) = fmo();
        let b = ExpmBackend::new(&l, grid).unwrap();
        let x = hopping_operator(7).unwrap();
        let s0 = sample_gue_density(7, 21);
        let xm = x.entries().to_owned();
        let rho = s0.to_matrix();
        let r1 = trace_xy(&xm, &comm(&xm, &rho));
        let r2 = trace_xy(&xm, &comm(&xm, &comm(&xm, &rho)));
        let ax = TcfAxis::new(1, 25).unwrap();
        let got1 = tcf_first_order(&b, &x, &s0, ax).unwrap().values[[0, 0]];
        let got2 = tcf_second_order(&b, &x, &s0, ax, ax).unwrap().values[[0, 0]];
        assert!((got1 - r1).norm() <= 1e-12 * r1.norm().max(1e-300) + 1e-20);
        assert!((got2 - r2).norm() <= 1e-12 * r2.norm().max(1e-300) + 1e-24);
    }

    #[test]
    fn second_order_matches_direct_propagators() {
        let (l, grid) = fmo();
        let b = ExpmBackend::new(&l, grid).unwrap();
        let x = hopping_operator(7).unwrap();
        let s0 = DensityState::site(7, 0).unwrap();
        let xm = x.entries().to_owned();
        let r2 = tcf_second_order(&b, &x, &s0, TcfAxis::new(2, 20).unwrap(), TcfAxis::new(1, 25).unwrap()).unwrap();
        assert_eq!(r2.t1.len(), 6);
        assert_eq!(r2.t2.len(), 3);
        for (i, &t1) in r2.t1.iter().enumerate() {
            for (j, &t2) in r2.t2.iter().enumerate() {
                let a = comm(&xm, &s0.to_matrix());
                let a = unvec(expm_propagator(&l, t1).unwrap().dot(&a.into_shape_with_order(49).unwrap()), 7);
                let a = comm(&xm, &a);
                let a = unvec(expm_propagator(&l, t2).unwrap().dot(&a.into_shape_with_order(49).unwrap()), 7);
                let want = trace_xy(&xm, &a);
                let got = r2.values[[i, j]];
                assert!((got - want).norm() <= 1e-9 * r2.max_abs(), "({t1},{t2}) {got} vs {want}");
            }
        }
        assert!(r2.max_imag_residue() <= 1e-8 * r2.max_abs());
    }

    #[test]
    fn single_t2_point_is_extra_commutator_then_trace() {
        let (l, grid) = fmo();
        let b = ExpmBackend::new(&l, grid).unwrap();
        let x = hopping_operator(7).unwrap();
        let s0 = sample_gue_density(7, 2);
        let ax1 = TcfAxis::new(2, 10).unwrap();
        let r2 = tcf_second_order(&b, &x, &s0, ax1, TcfAxis::new(0, 1).unwrap()).unwrap();
        assert_eq!(r2.values.ncols(), 1);
        let xc = commutator_superop(&x);
        let y = xc.apply(s0.vec().view());
        for i in 0..r2.t1.len() {
            let step = i * 10;
            let v = long_time_propagate_vec(&b, &y, step / 50, step % 50).unwrap();
            let want = trace_product(&x, xc.apply(v.view()).view());
            assert!((r2.values[[i, 0]] - want).norm() <= 1e-12 * want.norm().max(1e-30));
        }
    }

    #[test]
    fn rk4_and_expm_first_order_agree() {
        let (l, grid) = fmo();
        let rk4 = Rk4Backend::new(l.clone(), grid);
        let expm = ExpmBackend::new(&l, grid).unwrap();
        let x = hopping_operator(7).unwrap();
        let s0 = DensityState::site(7, 0).unwrap();
        let ax = TcfAxis::new(10, 1).unwrap();
        let a = tcf_first_order(&rk4, &x, &s0, ax).unwrap();
        let b = tcf_first_order(&expm, &x, &s0, ax).unwrap();
        assert_eq!(a.t1.len(), 501);
        let dev = (&a.values - &b.values).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        assert!(dev <= 1e-6 * b.max_abs(), "relative {}", dev / b.max_abs());
        assert!(a.max_imag_residue() <= 1e-8 * a.max_abs());
    }

    #[test]
    fn one_long_window_equals_two_short_ones() {
        let (l, grid) = fmo();
        let long = ExpmBackend::new(&l, TimeGrid::new(2.0 * grid.t_max, 2 * grid.n_steps).unwrap()).unwrap();
        let short = ExpmBackend::new(&l, grid).unwrap();
        let x = hopping_operator(7).unwrap();
        let s0 = sample_gue_density(7, 8);
        let a = tcf_first_order(&long, &x, &s0, TcfAxis::new(1, 1).unwrap()).unwrap();
        let b = tcf_first_order(&short, &x, &s0, TcfAxis::new(2, 1).unwrap()).unwrap();
        assert_eq!(a.t1.len(), b.t1.len());
        let dev = (&a.values - &b.values).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        assert!(dev <= 1e-10 * b.max_abs());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (l, grid) = fmo();
        let b = ExpmBackend::new(&l, grid).unwrap();
        let x = hopping_operator(3).unwrap();
        let s0 = DensityState::site(7, 0).unwrap();
        assert!(tcf_first_order(&b, &x, &s0, TcfAxis::new(1, 1).unwrap()).is_err());
        assert!(TcfAxis::new(1, 0).is_err());
    }
}
