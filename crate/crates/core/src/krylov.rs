//! Krylov methods on sparse Hermitian operators: Lanczos with full
//! reorthogonalization for extremal eigenpairs and Lanczos bases for
//! resolvent functionals, plus restarted GMRES for shifted solves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::{SparseHermitianOperator, StateVector};

fn orthogonalize(w: &mut StateVector, against: &[StateVector]) {
    // Two passes of classical Gram–Schmidt.
    for _ in 0..2 {
        for q in against {
            let c = q.dotc(w);
            w.axpy(-c, q, Complex64::new(1.0, 0.0));
        }
    }
}

fn normalized(mut v: StateVector) -> Option<StateVector> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    v.unscale_mut(n);
    Some(v)
}

/// Output of a Lanczos run: orthonormal basis and the tridiagonal entries.
#[derive(Debug, Clone)]
pub struct LanczosBasis {
    pub q: Vec<StateVector>,
    pub alpha: Vec<f64>,
    /// Off-diagonals; `beta[j]` couples q_j and q_{j+1}. Has one extra entry,
    /// the residual coupling to the next (unbuilt) vector.
    pub beta: Vec<f64>,
}

impl LanczosBasis {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn tridiagonal(&self, k: usize) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = self.alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        t
    }
}

/// Runs up to `steps` Lanczos steps from `start`, keeping every vector
/// orthogonal to `deflate` (assumed orthonormal). Stops early on breakdown,
/// or when `stop(basis)` returns true (checked every `check_every` steps).
pub fn lanczos(
    h: &SparseHermitianOperator,
    start: &StateVector,
    deflate: &[StateVector],
    steps: usize,
    check_every: usize,
    mut stop: impl FnMut(&LanczosBasis) -> bool,
) -> Result<LanczosBasis> {
    let mut v = start.clone();
    orthogonalize(&mut v, deflate);
    let v = normalized(v).ok_or_else(|| Error::Solver {
        what: "Lanczos start vector vanishes after deflation".into(),
        residual: 0.0,
    })?;
    let mut basis = LanczosBasis {
        q: vec![v],
        alpha: Vec::new(),
        beta: Vec::new(),
    };
    let scale = 1.0 + h.iter().map(|(_, _, v)| v.norm()).fold(0.0, f64::max);
    let mut w = StateVector::zeros(h.dim());
    for j in 0..steps {
        h.apply_into(&basis.q[j], &mut w);
        let alpha = basis.q[j].dotc(&w).re;
        w.axpy(
            Complex64::new(-alpha, 0.0),
            &basis.q[j],
            Complex64::new(1.0, 0.0),
        );
        if j > 0 {
            let b = basis.beta[j - 1];
            w.axpy(
                Complex64::new(-b, 0.0),
                &basis.q[j - 1],
                Complex64::new(1.0, 0.0),
            );
        }
        orthogonalize(&mut w, deflate);
        orthogonalize(&mut w, &basis.q);
        let beta = w.norm();
        basis.alpha.push(alpha);
        basis.beta.push(beta);
        let done = beta <= 1e-14 * scale
            || j + 1 == steps
            || ((j + 1) % check_every.max(1) == 0 && stop(&basis));
        if done {
            break;
        }
        basis.q.push(w.unscale(beta));
    }
    basis.q.truncate(basis.alpha.len());
    Ok(basis)
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: StateVector,
    pub residual: f64,
}

/// Lowest eigenpair of h restricted to the orthogonal complement of
/// `deflate`, by restarted Lanczos with full reorthogonalization.
pub fn lowest_eigenpair(
    h: &SparseHermitianOperator,
    start: &StateVector,
    deflate: &[StateVector],
    tol: f64,
    max_basis: usize,
    max_restarts: usize,
) -> Result<Eigenpair> {
    let mut v = start.clone();
    let mut last_residual = f64::INFINITY;
    for _ in 0..=max_restarts {
        let basis = lanczos(h, &v, deflate, max_basis, 5, |b| {
            let k = b.len();
            let eig = SymmetricEigen::new(b.tridiagonal(k));
            let i = argmin(eig.eigenvalues.as_slice());
            // Estimated residual β_k |s_k|, kept well below tol before checking.
            b.beta[k - 1] * eig.eigenvectors[(k - 1, i)].abs() <= 0.01 * tol
        })?;
        let k = basis.len();
        let eig = SymmetricEigen::new(basis.tridiagonal(k));
        let i = argmin(eig.eigenvalues.as_slice());
        let mut y = StateVector::zeros(h.dim());
        for (j, q) in basis.q.iter().enumerate() {
            y.axpy(
                Complex64::new(eig.eigenvectors[(j, i)], 0.0),
                q,
                Complex64::new(1.0, 0.0),
            );
        }
        orthogonalize(&mut y, deflate);
        let y = normalized(y).ok_or_else(|| Error::Solver {
            what: "Lanczos Ritz vector vanished".into(),
            residual: f64::NAN,
        })?;
        let mut r = h.apply(&y);
        let theta = y.dotc(&r).re;
        r.axpy(Complex64::new(-theta, 0.0), &y, Complex64::new(1.0, 0.0));
        orthogonalize(&mut r, deflate);
        last_residual = r.norm();
        if last_residual <= tol {
            return Ok(Eigenpair {
                value: theta,
                vector: y,
                residual: last_residual,
            });
        }
        v = y;
    }
    Err(Error::Solver {
        what: "Lanczos lowest eigenpair".into(),
        residual: last_residual,
    })
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Solves (h + shift) x = b by restarted GMRES; converged when
/// ‖(h + shift)x − b‖ ≤ tol·‖b‖.
pub fn gmres_shifted(
    h: &SparseHermitianOperator,
    shift: Complex64,
    b: &StateVector,
    tol: f64,
    restart: usize,
    max_restarts: usize,
) -> Result<StateVector> {
    let n = h.dim();
    let bnorm = b.norm();
    let mut x = StateVector::zeros(n);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let apply = |v: &StateVector| -> StateVector {
        let mut y = h.apply(v);
        y.axpy(shift, v, Complex64::new(1.0, 0.0));
        y
    };
    let one = Complex64::new(1.0, 0.0);
    for _ in 0..=max_restarts {
        let mut r = b.clone();
        r.axpy(-one, &apply(&x), one);
        let beta = r.norm();
        if beta <= tol * bnorm {
            return Ok(x);
        }
        let m = restart;
        let mut v: Vec<StateVector> = Vec::with_capacity(m + 1);
        v.push(r.unscale(beta));
        let mut hess = DMatrix::<Complex64>::zeros(m + 1, m);
        let mut cs = vec![Complex64::new(0.0, 0.0); m];
        let mut sn = vec![Complex64::new(0.0, 0.0); m];
        let mut g = DVector::<Complex64>::zeros(m + 1);
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = apply(&v[j]);
            for (i, vi) in v.iter().enumerate() {
                let hij = vi.dotc(&w);
                hess[(i, j)] = hij;
                w.axpy(-hij, vi, one);
            }
            // second Gram–Schmidt pass
            for (i, vi) in v.iter().enumerate() {
                let c = vi.dotc(&w);
                hess[(i, j)] += c;
                w.axpy(-c, vi, one);
            }
            let wn = w.norm();
            hess[(j + 1, j)] = Complex64::new(wn, 0.0);
            for i in 0..j {
                let a = hess[(i, j)];
                let bb = hess[(i + 1, j)];
                hess[(i, j)] = cs[i].conj() * a + sn[i].conj() * bb;
                hess[(i + 1, j)] = -sn[i] * a + cs[i] * bb;
            }
            let a = hess[(j, j)];
            let bb = hess[(j + 1, j)];
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                cs[j] = one;
                sn[j] = Complex64::new(0.0, 0.0);
            } else {
                cs[j] = a / denom;
                sn[j] = bb / denom;
            }
            hess[(j, j)] = cs[j].conj() * a + sn[j].conj() * bb;
            hess[(j + 1, j)] = Complex64::new(0.0, 0.0);
            let gj = g[j];
            g[j] = cs[j].conj() * gj;
            g[j + 1] = -sn[j] * gj;
            used = j + 1;
            if g[j + 1].norm() <= 0.5 * tol * bnorm || wn <= 1e-300 {
                break;
            }
            v.push(w.unscale(wn));
        }
        let mut y = DVector::<Complex64>::zeros(used);
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= hess[(i, k)] * y[k];
            }
            y[i] = s / hess[(i, i)];
        }
        for (i, yi) in y.iter().enumerate() {
            x.axpy(*yi, &v[i], one);
        }
    }
    let mut r = b.clone();
    r.axpy(-one, &apply(&x), one);
    let rel = r.norm() / bnorm;
    if rel <= tol {
        return Ok(x);
    }
    Err(Error::Solver {
        what: format!("GMRES for shift {shift}"),
        residual: rel,
    })
}
