//! Lowest eigenpair of H(g), the spectral gap and the uniqueness check.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::AssembledModel;
use crate::krylov::lowest_eigenpair;
use crate::sparse::{SparseHermitianOperator, StateVector};

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Residual tolerance ‖HU − EU‖.
    pub tol: f64,
    /// Dimensions at or below this use dense factorizations.
    pub dense_threshold: usize,
    /// Seed of the Lanczos start vector.
    pub seed: u64,
    pub max_basis: usize,
    pub max_restarts: usize,
    pub degeneracy_rel: f64,
    pub degeneracy_abs: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            dense_threshold: 2000,
            seed: 7,
            max_basis: 300,
            max_restarts: 40,
            degeneracy_rel: 1e-8,
            degeneracy_abs: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn degeneracy_threshold(&self, energy: f64) -> f64 {
        self.degeneracy_rel * energy.abs() + self.degeneracy_abs
    }
}

/// Full eigendecomposition, eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct DenseEigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl DenseEigensystem {
    pub fn new(h: &SparseHermitianOperator) -> Self {
        Self::from_dense(h.to_dense())
    }

    pub fn from_dense(m: DMatrix<Complex64>) -> Self {
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        DenseEigensystem { values, vectors }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub vector: StateVector,
    /// Second-lowest eigenvalue minus the lowest.
    pub gap: f64,
    pub residual: f64,
    /// Dense eigensystem when the dense path was used.
    pub eigensystem: Option<Arc<DenseEigensystem>>,
}

/// Phase convention: the first largest-magnitude amplitude is made real positive.
pub const PHASE_CONVENTION: &str = "largest-amplitude-real-positive";

pub fn fix_phase(v: &mut StateVector) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, c) in v.iter().enumerate() {
        let m = c.norm();
        if m > best_mag {
            best = i;
            best_mag = m;
        }
    }
    if best_mag > 0.0 {
        let phase = v[best].conj() / best_mag;
        *v *= phase;
        v[best] = Complex64::new(v[best].norm(), 0.0);
    }
}

pub fn ground_state(model: &AssembledModel, opts: &SolverOptions) -> Result<GroundState> {
    ground_state_of(&model.h, opts)
}

/// Ground state of an arbitrary Hermitian operator.
pub fn ground_state_of(h: &SparseHermitianOperator, opts: &SolverOptions) -> Result<GroundState> {
    if !(opts.tol > 0.0) {
        return Err(Error::config("solver tolerance must be > 0"));
    }
    let dim = h.dim();
    if dim < 2 {
        return Err(Error::config("ground state needs dimension >= 2"));
    }
    let (energy, mut vector, second, eigensystem) = if dim <= opts.dense_threshold {
        let sys = DenseEigensystem::new(h);
        let u = sys.vectors.column(0).into_owned();
        (sys.values[0], u, sys.values[1], Some(Arc::new(sys)))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut draw = || {
            StateVector::from_fn(dim, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        };
        let start = draw();
        let p0 = lowest_eigenpair(h, &start, &[], opts.tol, opts.max_basis, opts.max_restarts)?;
        // Independent start: the first one carries no weight in a degenerate
        // ground space once p0 is projected out.
        let p1 = lowest_eigenpair(
            h,
            &draw(),
            std::slice::from_ref(&p0.vector),
            opts.tol.max(1e-9),
            opts.max_basis,
            opts.max_restarts,
        )?;
        (p0.value, p0.vector, p1.value, None)
    };
    let gap = second - energy;
    if gap < opts.degeneracy_threshold(energy) {
        return Err(Error::DegenerateGroundState {
            e0: energy,
            e1: second,
        });
    }
    vector.unscale_mut(vector.norm());
    fix_phase(&mut vector);
    let mut r = h.apply(&vector);
    r.axpy(
        Complex64::new(-energy, 0.0),
        &vector,
        Complex64::new(1.0, 0.0),
    );
    let residual = r.norm();
    if residual > opts.tol {
        return Err(Error::Solver {
            what: "ground state residual above tolerance".into(),
            residual,
        });
    }
    Ok(GroundState {
        energy,
        vector,
        gap: gap.max(0.0),
        residual,
        eigensystem,
    })
}
