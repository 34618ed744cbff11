use ndarray::Array1;

use crate::integrators::sample_gue;
use crate::lindblad::{frobenius, C64};
use crate::rng::{stream_rng, DOMAIN_ONTHEFLY};

/// `n` GUE matrices scaled to unit Frobenius norm, vectorized. They are not
/// projected onto density matrices: the physics loss must also hold for
/// traceless inputs such as commutators. Deterministic per `(seed, epoch)`.
pub fn onthefly_sample(n: usize, dim: usize, seed: u64, epoch: u64) -> Vec<Array1<C64>> {
    let mut rng = stream_rng(seed, DOMAIN_ONTHEFLY, epoch);
    (0..n)
        .map(|_| {
            let a = sample_gue(dim, &mut rng);
            let v = a.into_shape_with_order(dim * dim).expect("square matrix");
            let norm = frobenius(v.view());
            v.mapv(|z| z / norm)
        })
        .collect()
}
