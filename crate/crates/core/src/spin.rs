//! Spin space (C²)^⊗P with particle 1 as the slowest-varying index and
//! basis state 0 = spin up (σ₃ = +1).

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::StateVector;

/// Largest particle count accepted (spin dimension 2^P).
pub const MAX_PARTICLES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    pub particles: usize,
    pub matrix: DMatrix<Complex64>,
}

pub fn pauli(m: usize) -> Result<DMatrix<Complex64>> {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    let entries = match m {
        1 => [z, one, one, z],
        2 => [z, -i, i, z],
        3 => [one, z, z, -one],
        _ => return Err(Error::domain(format!("Pauli index {m} outside 1..=3"))),
    };
    Ok(DMatrix::from_row_slice(2, 2, &entries))
}

/// σ_m acting on particle λ (1-based) of P.
pub fn sigma_op(m: usize, lambda: usize, particles: usize) -> Result<SpinOperator> {
    if particles == 0 || particles > MAX_PARTICLES {
        return Err(Error::domain(format!(
            "particle count {particles} outside 1..={MAX_PARTICLES}"
        )));
    }
    if lambda == 0 || lambda > particles {
        return Err(Error::domain(format!(
            "particle index {lambda} outside 1..={particles}"
        )));
    }
    let sigma = pauli(m)?;
    let mut mat = DMatrix::<Complex64>::identity(1, 1);
    for l in 1..=particles {
        let factor = if l == lambda {
            sigma.clone()
        } else {
            DMatrix::identity(2, 2)
        };
        mat = mat.kronecker(&factor);
    }
    Ok(SpinOperator {
        particles,
        matrix: mat,
    })
}

impl SpinOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Applies I_Fock ⊗ self to a full-space state (spin index fastest).
    pub fn apply_full(&self, psi: &StateVector) -> StateVector {
        let s = self.dim();
        assert_eq!(
            psi.len() % s,
            0,
            "state does not factor over the spin space"
        );
        let mut out = StateVector::zeros(psi.len());
        for block in 0..psi.len() / s {
            let view = psi.rows(block * s, s);
            out.rows_mut(block * s, s).copy_from(&(&self.matrix * view));
        }
        out
    }
}

/// S_j = Σ_λ ⟨(I ⊗ σ_j^[λ])U, U⟩ for a normalized state U.
pub fn total_spin(u: &StateVector, particles: usize) -> Result<Vector3<f64>> {
    let norm = u.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "total spin needs a normalized state, got norm {norm}"
        )));
    }
    let mut s = Vector3::zeros();
    for lambda in 1..=particles {
        for m in 1..=3 {
            let op = sigma_op(m, lambda, particles)?;
            let e = u.dotc(&op.apply_full(u));
            s[m - 1] += e.re;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_op(3, 1, 1).unwrap();
        assert_eq!(
            s.matrix,
            DMatrix::from_diagonal(&nalgebra::dvector![c(1.0), c(-1.0)])
        );

        let s = sigma_op(3, 2, 2).unwrap();
        let d: Vec<f64> = (0..4).map(|i| s.matrix[(i, i)].re).collect();
        assert_eq!(d, vec![1.0, -1.0, 1.0, -1.0]);

        for p in 1..=3 {
            for l in 1..=p {
                for m in 1..=3 {
                    let s = sigma_op(m, l, p).unwrap();
                    let sq = &s.matrix * &s.matrix;
                    assert!((sq - DMatrix::identity(1 << p, 1 << p)).norm() < 1e-15);
                    assert!((&s.matrix - s.matrix.adjoint()).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn sigma_rejects_bad_indices() {
        assert!(matches!(sigma_op(0, 1, 1), Err(Error::Domain(_))));
        assert!(matches!(sigma_op(1, 3, 2), Err(Error::Domain(_))));
        assert!(matches!(sigma_op(1, 0, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn commutation_relations() {
        let p = 3;
        for l in 1..=p {
            for mu in 1..=p {
                for m in 1..=3 {
                    for n in 1..=3 {
                        let a = sigma_op(m, l, p).unwrap().matrix;
                        let b = sigma_op(n, mu, p).unwrap().matrix;
                        let comm = &a * &b - &b * &a;
                        if l != mu {
                            assert!(comm.norm() < 1e-14);
                        }
                    }
                }
            }
            let s1 = sigma_op(1, l, p).unwrap().matrix;
            let s2 = sigma_op(2, l, p).unwrap().matrix;
            let s3 = sigma_op(3, l, p).unwrap().matrix;
            let comm = &s1 * &s2 - &s2 * &s1;
            assert!((comm - s3 * Complex64::new(0.0, 2.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn total_spin_examples() {
        // vacuum ⊗ down⊗down in a 3-state Fock space
        let p = 2;
        let mut u = StateVector::zeros(3 * 4);
        u[3] = c(1.0);
        let s = total_spin(&u, p).unwrap();
        assert_eq!(s, Vector3::new(0.0, 0.0, -2.0));

        let mut up = StateVector::zeros(2);
        up[0] = c(1.0);
        assert_eq!(total_spin(&up, 1).unwrap(), Vector3::new(0.0, 0.0, 1.0));

        let mut bad = StateVector::zeros(2);
        bad[0] = c(1.1);
        assert!(matches!(total_spin(&bad, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn total_spin_bounds_and_phase_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in 1..=3 {
            for _ in 0..10 {
                let mut u = StateVector::from_fn(5 << p, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                u /= Complex64::new(u.norm(), 0.0);
                let s = total_spin(&u, p).unwrap();
                assert!(s.norm() <= p as f64 + 1e-12);
                let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..6.0));
                let s2 = total_spin(&(&u * phase), p).unwrap();
                assert!((s - s2).norm() < 1e-13);
            }
        }
    }
}
