use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::lindblad::{DensityState, C64};
use crate::rng::{stream_rng, DOMAIN_DATASET};

/// A GUE matrix: real N(0,1) diagonal, complex off-diagonal entries with
/// independent N(0,1/2) real and imaginary parts.
pub fn sample_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Array2<C64> {
    let mut a = Array2::<C64>::zeros((n, n));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        a[[i, i]] = C64::new(d, 0.0);
        for j in i + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = C64::new(s * re, s * im);
            a[[i, j]] = z;
            a[[j, i]] = z.conj();
        }
    }
    a
}

/// `ρ = A² / Tr(A²)` for a GUE sample `A`; Hermitian, PSD, unit trace.
pub fn gue_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityState {
    let a = sample_gue(n, rng);
    let mut sq = a.dot(&a);
    let tr: f64 = sq.diag().iter().map(|z| z.re).sum();
    for i in 0..n {
        sq[[i, i]] = C64::new(sq[[i, i]].re / tr, 0.0);
        for j in i + 1..n {
            let z = 0.5 * (sq[[i, j]] + sq[[j, i]].conj()) / tr;
            sq[[i, j]] = z;
            sq[[j, i]] = z.conj();
        }
    }
    DensityState::physical(sq).expect("A²/Tr(A²) is a valid density matrix")
}

pub fn sample_gue_density(n: usize, seed: u64) -> DensityState {
    gue_density(n, &mut stream_rng(seed, DOMAIN_DATASET, 0))
}
