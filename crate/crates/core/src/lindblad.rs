//! Physical model: Hamiltonians, density states, and the Lindblad superoperator
//! algebra in vectorized form.
//!
//! Density matrices are vectorized row-major: entry `⟨j|ρ|j′⟩` lives at index
//! `j * N + j′`. Every module in the crate uses this order.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::CONSTANTS;

pub type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Tolerance of the Hermiticity check on operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance of the Hermiticity and trace checks on physical density states.
pub const STATE_TOL: f64 = 1e-10;

/// Pure-dephasing rate used for every FMO site, in cm⁻¹.
pub const FMO_DEPHASING_CM1: f64 = 35.0;

/// FMO electronic Hamiltonian in cm⁻¹ as tabulated, including the 0.3 cm⁻¹
/// asymmetry between entries (4,7) and (7,4).
pub const FMO_RAW_CM1: [[f64; 7]; 7] = [
    [12410.0, -87.7, 5.5, -5.9, 6.7, -13.7, -9.9],
    [-87.7, 12530.0, 30.8, 8.2, 0.7, 11.8, 4.3],
    [5.5, 30.8, 12210.0, -53.5, -2.2, -9.6, 6.0],
    [-5.9, 8.2, -53.5, 12320.0, -70.7, -17.0, -63.6],
    [6.7, 0.7, -2.2, -70.7, 12480.0, 81.1, -1.3],
    [-13.7, 11.8, -9.6, -17.0, 81.1, 12630.0, 39.7],
    [-9.9, 4.3, 6.0, -63.3, -1.3, 39.7, 12440.0],
];

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: Array2<C64>,
}

/// A pair of entries that had to be averaged to make a matrix Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryWarning {
    pub row: usize,
    pub col: usize,
    pub upper: C64,
    pub lower: C64,
}

impl HermitianOperator {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::dim("operator must be square", r, c));
        }
        if r == 0 {
            return Err(Error::Domain("operator dimension must be positive".into()));
        }
        let err = hermiticity_error(entries.view());
        if err > HERMITIAN_TOL {
            return Err(Error::Domain(format!(
                "operator is not Hermitian (max |A - A†| = {err:e})"
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::dim("matrix row length", n, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                m[[i, j]] = C64::new(v, 0.0);
            }
        }
        Self::new(m)
    }

    /// Averages `A` and `A†`, reporting every entry pair that differed by
    /// more than the Hermiticity tolerance.
    pub fn symmetrized(entries: Array2<C64>) -> Result<(Self, Vec<AsymmetryWarning>)> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::dim("operator must be square", r, c));
        }
        let mut warnings = Vec::new();
        let mut m = entries.clone();
        for i in 0..r {
            for j in i..r {
                let upper = entries[[i, j]];
                let lower = entries[[j, i]];
                if (upper - lower.conj()).norm() > HERMITIAN_TOL {
                    warnings.push(AsymmetryWarning {
                        row: i,
                        col: j,
                        upper,
                        lower,
                    });
                }
                let avg = 0.5 * (upper + lower.conj());
                m[[i, j]] = avg;
                m[[j, i]] = avg.conj();
            }
        }
        Ok((Self { entries: m }, warnings))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: Array2::eye(n).mapv(|v: f64| C64::new(v, 0.0)),
        }
    }

    /// The projector `|j⟩⟨j|` (zero-based `j`).
    pub fn projector(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::Domain(format!("site {j} out of range for dimension {n}")));
        }
        let mut m = Array2::zeros((n, n));
        m[[j, j]] = C64::new(1.0, 0.0);
        Ok(Self { entries: m })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Array2::zeros((n, n));
        for (j, &v) in values.iter().enumerate() {
            m[[j, j]] = C64::new(v, 0.0);
        }
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[[i, j]]
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }
}

/// Max-abs deviation `max |A_ij - conj(A_ji)|`.
pub fn hermiticity_error(m: ArrayView2<C64>) -> f64 {
    let n = m.nrows();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    err
}

/// Builds the 7-site FMO Hamiltonian (cm⁻¹).
///
/// The tabulated matrix is not Hermitian at (4,7)/(7,4) (−63.6 vs −63.3); the
/// pair is replaced by its mean and a warning is logged.
pub fn build_fmo_hamiltonian() -> HermitianOperator {
    let raw = Array2::from_shape_fn((7, 7), |(i, j)| C64::new(FMO_RAW_CM1[i][j], 0.0));
    let (h, warnings) =
        HermitianOperator::symmetrized(raw).expect("FMO table is square by construction");
    for w in &warnings {
        log::warn!(
            "FMO Hamiltonian entries ({},{})={} and ({},{})={} differ; using their mean",
            w.row + 1,
            w.col + 1,
            w.upper.re,
            w.col + 1,
            w.row + 1,
            w.lower.re
        );
    }
    h
}

/// The nearest-neighbour hopping operator `Σ_j |j⟩⟨j+1| + |j+1⟩⟨j|`.
pub fn hopping_operator(n: usize) -> Result<HermitianOperator> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "hopping operator needs at least 2 sites, got {n}"
        )));
    }
    let mut m = Array2::zeros((n, n));
    for j in 0..n - 1 {
        m[[j, j + 1]] = C64::new(1.0, 0.0);
        m[[j + 1, j]] = C64::new(1.0, 0.0);
    }
    Ok(HermitianOperator { entries: m })
}

/// A vectorized `N×N` density matrix.
///
/// `physical` marks states that are meant to satisfy `Tr ρ = 1`; states
/// produced by commutator application are non-physical and exempt.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    dim: usize,
    vec: Array1<C64>,
    physical: bool,
}

impl DensityState {
    /// Wraps a vector without validation, flagged non-physical.
    pub fn from_vec(dim: usize, vec: Array1<C64>) -> Result<Self> {
        if vec.len() != dim * dim {
            return Err(Error::dim("density vector length", dim * dim, vec.len()));
        }
        Ok(Self {
            dim,
            vec,
            physical: false,
        })
    }

    /// Validates Hermiticity and unit trace, then flags the state physical.
    pub fn physical(matrix: Array2<C64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::dim("density matrix must be square", r, c));
        }
        let herm = hermiticity_error(matrix.view());
        if herm > STATE_TOL {
            return Err(Error::Domain(format!(
                "density matrix is not Hermitian (error {herm:e})"
            )));
        }
        let tr = matrix.diag().sum();
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::Domain(format!("density matrix trace is {tr}, expected 1")));
        }
        Ok(Self {
            dim: r,
            vec: matrix.into_shape_with_order(r * r).expect("square matrix"),
            physical: true,
        })
    }

    pub fn non_physical(matrix: Array2<C64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::dim("matrix must be square", r, c));
        }
        Ok(Self {
            dim: r,
            vec: matrix.into_shape_with_order(r * r).expect("square matrix"),
            physical: false,
        })
    }

    /// `|j⟩⟨j|` with zero-based `j`.
    pub fn site(n: usize, j: usize) -> Result<Self> {
        let p = HermitianOperator::projector(n, j)?;
        Self::physical(p.entries)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let m = Array2::eye(n).mapv(|v: f64| C64::new(v / n as f64, 0.0));
        Self::physical(m).expect("I/N is a valid density matrix")
    }

    /// Re-flags a state, checking the invariants when marking it physical.
    pub fn with_physical(self, physical: bool) -> Result<Self> {
        if physical {
            Self::physical(self.to_matrix())
        } else {
            Ok(Self {
                physical: false,
                ..self
            })
        }
    }

    /// Flags the state physical without re-checking; for propagators that
    /// preserve trace and Hermiticity.
    pub(crate) fn assume_physical(self) -> Self {
        Self {
            physical: true,
            ..self
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vec(&self) -> &Array1<C64> {
        &self.vec
    }

    pub fn into_vec(self) -> Array1<C64> {
        self.vec
    }

    pub fn is_physical(&self) -> bool {
        self.physical
    }

    pub fn to_matrix(&self) -> Array2<C64> {
        self.vec
            .clone()
            .into_shape_with_order((self.dim, self.dim))
            .expect("length checked at construction")
    }

    pub fn get(&self, j: usize, jp: usize) -> C64 {
        self.vec[j * self.dim + jp]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|j| self.get(j, j)).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(self.vec.view().into_shape_with_order((self.dim, self.dim)).unwrap())
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(self.vec.view())
    }

    /// Populations `⟨j|ρ|j⟩` (real parts).
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|j| self.get(j, j).re).collect()
    }

    /// Eigenvalues of the Hermitian part of the matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let a = self.get(i, j);
            let b = self.get(j, i).conj();
            let h = 0.5 * (a + b);
            nalgebra::Complex::new(h.re, h.im)
        });
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }
}

pub fn frobenius(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A dense `N²×N²` superoperator acting on row-major vectorized matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n: usize,
    matrix: Array2<C64>,
}

/// The generator `L` of `dρ⃗/dt = Lρ⃗`, in fs⁻¹.
pub type Liouvillian = Superoperator;

impl Superoperator {
    pub fn from_matrix(n: usize, matrix: Array2<C64>) -> Result<Self> {
        let d = n * n;
        if matrix.dim() != (d, d) {
            return Err(Error::dim("superoperator shape", d, matrix.nrows()));
        }
        Ok(Self { n, matrix })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            matrix: Array2::zeros((n * n, n * n)),
        }
    }

    /// Hilbert-space dimension `N`.
    pub fn system_dim(&self) -> usize {
        self.n
    }

    /// Liouville-space dimension `N²`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn apply(&self, v: ArrayView1<C64>) -> Array1<C64> {
        self.matrix.dot(&v)
    }

    /// Applies the superoperator to every row of `states` (shape `K × N²`).
    pub fn apply_rows(&self, states: ArrayView2<C64>) -> Array2<C64> {
        states.dot(&self.matrix.t())
    }

    /// Applies the adjoint `L†` to every row.
    pub fn apply_adjoint_rows(&self, states: ArrayView2<C64>) -> Array2<C64> {
        // (L† gᵀ)ᵀ = g L̄
        states.dot(&self.matrix.mapv(|z| z.conj()))
    }

    pub fn apply_state(&self, s: &DensityState) -> Result<DensityState> {
        if s.dim() != self.n {
            return Err(Error::dim("state dimension", self.n, s.dim()));
        }
        DensityState::from_vec(self.n, self.apply(s.vec().view()))
    }

    /// Largest `|Σ_j L[(j,j), x]|` over columns `x`; zero for a trace-preserving
    /// generator.
    pub fn trace_column_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for x in 0..n * n {
            let s: C64 = (0..n).map(|j| self.matrix[[j * n + j, x]]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }

    pub fn one_norm(&self) -> f64 {
        self.matrix
            .axis_iter(Axis(1))
            .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Builds the Lindblad generator with Hamiltonian `h` and pure-dephasing
/// projectors `|j⟩⟨j|` at `rates[j]` (all in cm⁻¹).
pub fn build_liouvillian(h: &HermitianOperator, rates: &[f64]) -> Result<Liouvillian> {
    let n = h.dim();
    if rates.len() != n {
        return Err(Error::dim("dephasing rate count", n, rates.len()));
    }
    if let Some(r) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(Error::Domain(format!(
            "dephasing rates must be finite and non-negative, got {r}"
        )));
    }
    let omega = |cm1: f64| CONSTANTS.wavenumber_to_angular(cm1);
    let d = n * n;
    let mut m = Array2::<C64>::zeros((d, d));
    // -i/ħ (H ρ - ρ H):
    //   (Hρ)_{ab} = Σ_c H_ac ρ_cb    →  L[(a,b),(c,b)] += -i ω(H_ac)
    //   (ρH)_{ab} = Σ_c ρ_ac H_cb    →  L[(a,b),(a,c)] += +i ω(H_cb)
    for a in 0..n {
        for b in 0..n {
            let row = a * n + b;
            for c in 0..n {
                m[[row, c * n + b]] += -I * h.get(a, c) * omega(1.0);
                m[[row, a * n + c]] += I * h.get(c, b) * omega(1.0);
            }
            // pure dephasing: -(λ_a + λ_b)/2 ρ_ab + δ_ab λ_a ρ_aa
            let mut diss = -0.5 * (omega(rates[a]) + omega(rates[b]));
            if a == b {
                diss += omega(rates[a]);
            }
            m[[row, row]] += C64::new(diss, 0.0);
        }
    }
    Ok(Superoperator { n, matrix: m })
}

/// The superoperator `ρ ↦ (i/ħ)[X, ρ]`.
pub fn commutator_superop(x: &HermitianOperator) -> Superoperator {
    let n = x.dim();
    let d = n * n;
    let pref = I / CONSTANTS.hbar_cm_fs;
    let mut m = Array2::<C64>::zeros((d, d));
    for a in 0..n {
        for b in 0..n {
            let row = a * n + b;
            for c in 0..n {
                m[[row, c * n + b]] += pref * x.get(a, c);
                m[[row, a * n + c]] -= pref * x.get(c, b);
            }
        }
    }
    Superoperator { n, matrix: m }
}

/// `Tr(Xρ) = Σ_j ⟨j|Xρ|j⟩`.
pub fn trace_functional(x: &HermitianOperator, s: &DensityState) -> Result<C64> {
    if x.dim() != s.dim() {
        return Err(Error::dim("operator/state dimension", x.dim(), s.dim()));
    }
    Ok(trace_product(x, s.vec().view()))
}

/// `Tr(Xρ)` for a raw vectorized matrix; the caller guarantees the length.
pub fn trace_product(x: &HermitianOperator, v: ArrayView1<C64>) -> C64 {
    let n = x.dim();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            acc += x.get(a, b) * v[b * n + a];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Right-hand side of the Lindblad equation evaluated on matrices.
    fn lindblad_rhs(h: &HermitianOperator, rates: &[f64], rho: &Array2<C64>) -> Array2<C64> {
        let w = CONSTANTS.wavenumber_to_angular(1.0);
        let hm = h.entries().mapv(|z| z * w);
        let mut out = (hm.dot(rho) - rho.dot(&hm)).mapv(|z| -I * z);
        for (j, &lam) in rates.iter().enumerate() {
            let v = HermitianOperator::projector(h.dim(), j).unwrap();
            let v = v.entries();
            let vdv = v.t().mapv(|z| z.conj()).dot(v);
            let term = vdv.dot(rho) + rho.dot(&vdv)
                - v.dot(rho).dot(&v.t().mapv(|z| z.conj())).mapv(|z| 2.0 * z);
            out = out - term.mapv(|z| z * 0.5 * CONSTANTS.wavenumber_to_angular(lam));
        }
        out
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = c(rng.random_range(-200.0..200.0));
            for j in i + 1..n {
                let z = C64::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0));
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn fmo_matrix_entries() {
        let h = build_fmo_hamiltonian();
        assert_eq!(h.dim(), 7);
        assert_eq!(h.get(0, 0), c(12410.0));
        assert_eq!(h.get(0, 1), c(-87.7));
        assert_abs_diff_eq!(h.get(3, 6).re, -63.45, epsilon = 1e-12);
        assert_abs_diff_eq!(h.get(6, 3).re, -63.45, epsilon = 1e-12);
        assert_eq!(hermiticity_error(h.entries().view()), 0.0);
    }

    #[test]
    fn fmo_symmetrization_reports_the_asymmetric_pair() {
        let raw = Array2::from_shape_fn((7, 7), |(i, j)| c(FMO_RAW_CM1[i][j]));
        let (_, warnings) = HermitianOperator::symmetrized(raw).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!((warnings[0].row, warnings[0].col), (3, 6));
        assert_eq!(warnings[0].upper, c(-63.6));
        assert_eq!(warnings[0].lower, c(-63.3));
    }

    #[test]
    fn non_hermitian_operator_rejected() {
        let m = Array2::from_shape_vec((2, 2), vec![c(0.0), c(1.0), c(2.0), c(0.0)]).unwrap();
        assert!(matches!(HermitianOperator::new(m), Err(Error::Domain(_))));
    }

    #[test]
    fn single_site_liouvillian_is_zero() {
        let h = HermitianOperator::diagonal(&[12410.0]);
        let l = build_liouvillian(&h, &[35.0]).unwrap();
        assert_eq!(l.matrix()[[0, 0]], c(0.0));
    }

    #[test]
    fn pure_dephasing_generator_is_diagonal() {
        let h = HermitianOperator::diagonal(&[0.0, 0.0]);
        let gamma = 50.0;
        let l = build_liouvillian(&h, &[gamma, gamma]).unwrap();
        let g = CONSTANTS.wavenumber_to_angular(gamma);
        let expected = [0.0, -g, -g, 0.0];
        for (x, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(l.matrix()[[x, x]].re, *e, epsilon = 1e-15);
        }
        let off: f64 = l
            .matrix()
            .indexed_iter()
            .filter(|((r, c), _)| r != c)
            .map(|(_, z)| z.norm())
            .sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn liouvillian_errors() {
        let h = HermitianOperator::diagonal(&[0.0, 0.0]);
        assert!(matches!(build_liouvillian(&h, &[1.0]), Err(Error::Dimension { .. })));
        assert!(matches!(build_liouvillian(&h, &[1.0, -1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn fmo_liouvillian_preserves_trace() {
        let l = build_liouvillian(&build_fmo_hamiltonian(), &[FMO_DEPHASING_CM1; 7]).unwrap();
        assert!(l.trace_column_residual() <= 1e-12);
    }

    #[test]
    fn liouvillian_matches_brute_force_basis_construction() {
        for n in 1..=4 {
            let h = random_hermitian(n, 17 + n as u64);
            let rates: Vec<f64> = (0..n).map(|j| 10.0 + 7.0 * j as f64).collect();
            let l = build_liouvillian(&h, &rates).unwrap();
            for c_idx in 0..n * n {
                let mut e = Array2::<C64>::zeros((n, n));
                e[[c_idx / n, c_idx % n]] = c(1.0);
                let col = lindblad_rhs(&h, &rates, &e);
                for r in 0..n * n {
                    let diff = (l.matrix()[[r, c_idx]] - col[[r / n, r % n]]).norm();
                    assert!(diff <= 1e-12, "n={n} entry ({r},{c_idx}) differs by {diff}");
                }
            }
        }
    }

    #[test]
    fn dissipator_leaves_populations_unchanged() {
        let n = 7;
        let zero_h = HermitianOperator::diagonal(&[0.0; 7]);
        let l = build_liouvillian(&zero_h, &[FMO_DEPHASING_CM1; 7]).unwrap();
        let rho = Array2::from_shape_fn((n, n), |(i, j)| if i == j { c(0.1 + i as f64) } else { c(0.0) });
        let out = l.apply(rho.into_shape_with_order(n * n).unwrap().view());
        assert!(out.iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn commutator_with_identity_vanishes() {
        let m = commutator_superop(&HermitianOperator::identity(3));
        assert!(m.matrix().iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn commutator_sigma_x_on_ground_projector() {
        // [σx, |0⟩⟨0|] = [[0,-1],[1,0]], so (i/ħ)[σx,ρ] = [[0,-i/ħ],[i/ħ,0]].
        let sx = HermitianOperator::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let rho = DensityState::site(2, 0).unwrap();
        let out = commutator_superop(&sx).apply(rho.vec().view());
        let k = 1.0 / CONSTANTS.hbar_cm_fs;
        assert_abs_diff_eq!(out[0].norm(), 0.0);
        assert_abs_diff_eq!(out[3].norm(), 0.0);
        assert_abs_diff_eq!((out[1] - C64::new(0.0, -k)).norm(), 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!((out[2] - C64::new(0.0, k)).norm(), 0.0, epsilon = 1e-18);
    }

    #[test]
    fn trace_functional_examples() {
        let id = HermitianOperator::identity(4);
        let mixed = DensityState::maximally_mixed(4);
        assert_abs_diff_eq!((trace_functional(&id, &mixed).unwrap() - c(1.0)).norm(), 0.0, epsilon = 1e-15);

        let p = HermitianOperator::projector(3, 1).unwrap();
        let s = DensityState::site(3, 1).unwrap();
        assert_eq!(trace_functional(&p, &s).unwrap(), c(1.0));

        let x = hopping_operator(7).unwrap();
        let mixed = DensityState::maximally_mixed(7);
        assert_eq!(trace_functional(&x, &mixed).unwrap(), c(0.0));

        assert!(trace_functional(&x, &s).is_err());
    }

    #[test]
    fn trace_functional_matches_dense_product() {
        let x = random_hermitian(4, 3);
        let m = random_hermitian(4, 4);
        let s = DensityState::non_physical(m.entries().clone()).unwrap();
        let dense = x.entries().dot(m.entries()).diag().sum();
        assert!((trace_functional(&x, &s).unwrap() - dense).norm() < 1e-9);
    }

    #[test]
    fn hopping_operator_shape() {
        let x2 = hopping_operator(2).unwrap();
        assert_eq!(x2.entries(), &Array2::from_shape_vec((2, 2), vec![c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap());
        let x7 = hopping_operator(7).unwrap();
        assert_eq!(x7.get(2, 3), c(1.0));
        assert_eq!(x7.get(2, 4), c(0.0));
        assert_eq!(x7.trace(), c(0.0));
        assert!(hopping_operator(1).is_err());
    }

    #[test]
    fn density_state_validation() {
        assert!(DensityState::physical(Array2::eye(2).mapv(|v: f64| c(v))).is_err());
        let s = DensityState::site(7, 5).unwrap();
        assert!(s.is_physical());
        assert_eq!(s.populations()[5], 1.0);
        assert!(DensityState::from_vec(2, Array1::zeros(3)).is_err());
    }

    #[test]
    fn eigenvalues_of_mixed_state() {
        let ev = DensityState::maximally_mixed(4).eigenvalues();
        for e in ev {
            assert_abs_diff_eq!(e, 0.25, epsilon = 1e-14);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian_from(vals: &[f64], n: usize) -> Array2<C64> {
            let mut m = Array2::<C64>::zeros((n, n));
            let mut k = 0;
            for i in 0..n {
                m[[i, i]] = c(vals[k]);
                k += 1;
                for j in i + 1..n {
                    let z = C64::new(vals[k], vals[k + 1]);
                    k += 2;
                    m[[i, j]] = z;
                    m[[j, i]] = z.conj();
                }
            }
            m
        }

        proptest! {
            #[test]
            fn fmo_generator_conserves_trace_and_hermiticity(vals in prop::collection::vec(-1.0f64..1.0, 49)) {
                let l = build_liouvillian(&build_fmo_hamiltonian(), &[FMO_DEPHASING_CM1; 7]).unwrap();
                let rho = hermitian_from(&vals, 7);
                let out = l.apply(rho.into_shape_with_order(49).unwrap().view());
                let out = DensityState::from_vec(7, out).unwrap();
                prop_assert!(out.trace().norm() <= 1e-12);
                prop_assert!(out.hermiticity_error() <= 1e-12);
            }

            #[test]
            fn commutator_output_is_hermitian_and_traceless(
                xv in prop::collection::vec(-2.0f64..2.0, 16),
                rv in prop::collection::vec(-1.0f64..1.0, 16),
            ) {
                let x = HermitianOperator::new(hermitian_from(&xv, 4)).unwrap();
                let rho = hermitian_from(&rv, 4).into_shape_with_order(16).unwrap();
                let out = DensityState::from_vec(4, commutator_superop(&x).apply(rho.view())).unwrap();
                prop_assert!(out.trace().norm() <= 1e-15);
                prop_assert!(out.hermiticity_error() <= 1e-15);
            }
        }
    }
}
