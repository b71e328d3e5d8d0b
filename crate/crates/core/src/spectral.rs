//! Spectral representation of a source vector relative to H − E.
//!
//! A measure for f stores the ground weight ⟨U, f⟩ together with pairs
//! (Δ_i, c_i y_i) spanning the rest of f, so that for any scalar function φ
//!
//!   φ(H − E) f ≈ φ(0)⟨U, f⟩U + Σ_i φ(Δ_i) c_i y_i.
//!
//! Every filter and resolvent integral over many shifts is then a scalar
//! quadrature per Δ_i followed by one combination of vectors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groundstate::DenseEigensystem;
use crate::krylov::lanczos;
use crate::sparse::{SparseHermitianOperator, StateVector};

#[derive(Debug, Clone)]
enum SpectralBasis {
    /// Columns `offset..` of a shared dense eigensystem.
    Shared {
        system: Arc<DenseEigensystem>,
        offset: usize,
    },
    Owned(DMatrix<Complex64>),
}

#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    pub ground_weight: Complex64,
    /// Excitation energies Δ_i = λ_i − E of the complement part.
    pub deltas: Vec<f64>,
    pub coeffs: Vec<Complex64>,
    basis: SpectralBasis,
}

impl SpectralMeasure {
    /// Exact measure from a full eigensystem whose column 0 spans the ground space.
    pub fn from_dense(
        system: &Arc<DenseEigensystem>,
        ground: &StateVector,
        f: &StateVector,
    ) -> Self {
        let e = system.values[0];
        let n = system.values.len();
        let tail = system.vectors.columns(1, n - 1);
        let coeffs: Vec<Complex64> = (tail.adjoint() * f).iter().copied().collect();
        SpectralMeasure {
            ground_weight: ground.dotc(f),
            deltas: system.values[1..].iter().map(|v| v - e).collect(),
            coeffs,
            basis: SpectralBasis::Shared {
                system: Arc::clone(system),
                offset: 1,
            },
        }
    }

    /// Lanczos measure of the part of f orthogonal to U. The basis grows until
    /// the shifted-system residual estimates at z = 0 and z = i·gap fall below
    /// `tol·‖f‖`.
    pub fn from_lanczos(
        h: &SparseHermitianOperator,
        energy: f64,
        ground: &StateVector,
        f: &StateVector,
        gap: f64,
        tol: f64,
        max_steps: usize,
    ) -> Result<Self> {
        let ground_weight = ground.dotc(f);
        let mut rest = f.clone();
        rest.axpy(-ground_weight, ground, Complex64::new(1.0, 0.0));
        let beta0 = rest.norm();
        let fnorm = f.norm();
        if beta0 <= 1e-14 * fnorm.max(1e-300) {
            return Ok(SpectralMeasure {
                ground_weight,
                deltas: Vec::new(),
                coeffs: Vec::new(),
                basis: SpectralBasis::Owned(DMatrix::zeros(f.len(), 0)),
            });
        }
        let shifts = [Complex64::new(0.0, 0.0), Complex64::new(0.0, gap)];
        let target = tol * fnorm;
        let mut estimate = f64::INFINITY;
        let basis = lanczos(h, &rest, std::slice::from_ref(ground), max_steps, 5, |b| {
            estimate = shifted_residual(b, energy, &shifts) * beta0;
            estimate <= target
        })?;
        let k = basis.len();
        let breakdown = basis.beta[k - 1] <= 1e-12 * (1.0 + energy.abs());
        if k == max_steps && !breakdown {
            let est = shifted_residual(&basis, energy, &shifts) * beta0;
            if est > target {
                return Err(Error::Solver {
                    what: format!("spectral Lanczos basis did not converge in {max_steps} steps"),
                    residual: est / fnorm,
                });
            }
        }
        let eig = SymmetricEigen::new(basis.tridiagonal(k));
        let q = DMatrix::from_columns(&basis.q);
        let s = eig.eigenvectors.map(|v| Complex64::new(v, 0.0));
        let y = &q * &s;
        let coeffs = (0..k)
            .map(|i| Complex64::new(beta0 * eig.eigenvectors[(0, i)], 0.0))
            .collect();
        let deltas = eig.eigenvalues.iter().map(|t| t - energy).collect();
        Ok(SpectralMeasure {
            ground_weight,
            deltas,
            coeffs,
            basis: SpectralBasis::Owned(y),
        })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// ground_factor·⟨U,f⟩U + Σ_i factors[i]·c_i y_i.
    pub fn combine(
        &self,
        ground: &StateVector,
        ground_factor: Complex64,
        factors: &[Complex64],
    ) -> StateVector {
        assert_eq!(factors.len(), self.len(), "one factor per spectral point");
        let w = DVector::from_iterator(
            self.len(),
            factors.iter().zip(&self.coeffs).map(|(a, c)| a * c),
        );
        let mut out = match &self.basis {
            SpectralBasis::Shared { system, offset } => {
                system.vectors.columns(*offset, self.len()) * w
            }
            SpectralBasis::Owned(y) => y * w,
        };
        out.axpy(
            ground_factor * self.ground_weight,
            ground,
            Complex64::new(1.0, 0.0),
        );
        out
    }

    /// φ(H − E) f for a scalar function φ on [0, ∞).
    pub fn apply(&self, ground: &StateVector, phi: impl Fn(f64) -> Complex64) -> StateVector {
        let factors: Vec<Complex64> = self.deltas.iter().map(|&d| phi(d)).collect();
        self.combine(ground, phi(0.0), &factors)
    }
}

/// Largest estimated residual β_k |e_kᵀ (T − E + z)^{-1} e_1| over the shifts.
fn shifted_residual(b: &crate::krylov::LanczosBasis, energy: f64, shifts: &[Complex64]) -> f64 {
    let k = b.len();
    let t = b.tridiagonal(k).map(|v| Complex64::new(v, 0.0));
    let beta = b.beta[k - 1];
    let mut worst: f64 = 0.0;
    for &z in shifts {
        let mut m = t.clone();
        for i in 0..k {
            m[(i, i)] += z - energy;
        }
        let mut e1 = DVector::<Complex64>::zeros(k);
        e1[0] = Complex64::new(1.0, 0.0);
        match m.lu().solve(&e1) {
            Some(y) => worst = worst.max(beta * y[k - 1].norm()),
            None => return f64::INFINITY,
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{ground_state_of, SolverOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixture(n: usize, seed: u64) -> (SparseHermitianOperator, StateVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h =
            SparseHermitianOperator::from_dense(&((&a + a.adjoint()) * Complex64::new(0.5, 0.0)));
        let f = StateVector::from_fn(n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (h, f)
    }

    fn resolvent_dense(
        h: &SparseHermitianOperator,
        e: f64,
        z: Complex64,
        f: &StateVector,
    ) -> StateVector {
        let mut m = h.to_dense();
        for i in 0..m.nrows() {
            m[(i, i)] += z - e;
        }
        m.lu().solve(f).unwrap()
    }

    #[test]
    fn dense_measure_reproduces_resolvent() {
        let (h, f) = fixture(40, 3);
        let gs = ground_state_of(&h, &SolverOptions::default()).unwrap();
        let sys = gs.eigensystem.clone().unwrap();
        let m = SpectralMeasure::from_dense(&sys, &gs.vector, &f);
        assert_eq!(m.len(), 39);
        for z in [
            Complex64::new(0.3, 0.0),
            Complex64::new(0.0, 0.7),
            Complex64::new(2.0, -1.0),
        ] {
            let got = m.apply(&gs.vector, |d| 1.0 / (d + z));
            let want = resolvent_dense(&h, gs.energy, z, &f);
            assert!((got - &want).norm() <= 1e-11 * want.norm());
        }
        let id = m.apply(&gs.vector, |_| Complex64::new(1.0, 0.0));
        assert!((id - &f).norm() < 1e-12);
    }

    #[test]
    fn lanczos_measure_matches_dense() {
        let (h, f) = fixture(120, 9);
        let gs = ground_state_of(&h, &SolverOptions::default()).unwrap();
        let m = SpectralMeasure::from_lanczos(&h, gs.energy, &gs.vector, &f, gs.gap, 1e-11, 120)
            .unwrap();
        for z in [
            Complex64::new(0.05, 0.0),
            Complex64::new(0.0, 0.02),
            Complex64::new(1.0, 3.0),
        ] {
            let got = m.apply(&gs.vector, |d| z / (d + z));
            let want = resolvent_dense(&h, gs.energy, z, &f) * z;
            assert!((got - &want).norm() <= 1e-9 * f.norm(), "z = {z}");
        }
    }

    #[test]
    fn ground_vector_has_only_ground_weight() {
        let (h, _) = fixture(30, 1);
        let gs = ground_state_of(&h, &SolverOptions::default()).unwrap();
        let m =
            SpectralMeasure::from_lanczos(&h, gs.energy, &gs.vector, &gs.vector, gs.gap, 1e-10, 30)
                .unwrap();
        assert!(m.is_empty());
        assert!((m.ground_weight - 1.0).norm() < 1e-12);
    }
}
