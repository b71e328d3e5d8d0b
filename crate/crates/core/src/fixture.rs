//! Seeded synthetic surrogates: a random Hermitian bath coupled to one spin.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::groundstate::{ground_state_of, SolverOptions};
use crate::modes::CutoffFunction;
use crate::pullthrough::SpectralSurrogate;
use crate::sparse::SparseHermitianOperator;
use crate::spin::sigma_op;

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let a = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// H = A ⊗ I + σ₃ + 0.1 Σ_m C_m ⊗ σ_m on C^{dim/2} ⊗ C², with A and C_m
/// random Hermitian. One particle at the origin; `dim` must be even.
pub fn random_surrogate(dim: usize, seed: u64, g: f64) -> Result<SpectralSurrogate> {
    assert!(
        dim >= 4 && dim.is_multiple_of(2),
        "fixture dimension must be even and >= 4"
    );
    let n = dim / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bath = random_hermitian(&mut rng, n);
    let mut h = bath.kronecker(&DMatrix::identity(2, 2));
    h += DMatrix::identity(n, n).kronecker(&sigma_op(3, 1, 1)?.matrix);
    for m in 1..=3 {
        let c = random_hermitian(&mut rng, n) * Complex64::new(0.1, 0.0);
        h += c.kronecker(&sigma_op(m, 1, 1)?.matrix);
    }
    let mut h = SparseHermitianOperator::from_dense(&h);
    h.hermitian = true;
    let opts = SolverOptions::default();
    let gs = ground_state_of(&h, &opts)?;
    let sources = vec![[1, 2, 3].map(|m| {
        sigma_op(m, 1, 1)
            .expect("valid Pauli index")
            .apply_full(&gs.vector)
    })];
    SpectralSurrogate::from_parts(
        h,
        gs.energy,
        gs.vector,
        gs.gap,
        sources,
        g,
        CutoffFunction::default(),
        vec![Vector3::zeros()],
        &opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_reproducible_and_consistent() {
        let a = random_surrogate(50, 11, 0.1).unwrap();
        let b = random_surrogate(50, 11, 0.1).unwrap();
        assert_eq!(a.ground, b.ground);
        assert!(a.gap > 1e-3);
        for f in a.sources.iter().flatten() {
            assert!((f.norm() - 1.0).abs() < 1e-12);
        }
        let s = a.total_spin();
        let direct = crate::spin::total_spin(&a.ground, 1).unwrap();
        assert!((s - direct).norm() < 1e-12);
    }
}
