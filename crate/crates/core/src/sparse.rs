//! Compressed sparse row storage for complex operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type StateVector = DVector<Complex64>;

/// A square complex operator in CSR form. `hermitian` records that the
/// matrix was verified (or constructed) to satisfy A = A†.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitianOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    pub hermitian: bool,
}

impl SparseHermitianOperator {
    pub fn zeros(dim: usize) -> Self {
        SparseHermitianOperator {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermitian: true,
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(
                r < dim && c < dim,
                "triplet ({r}, {c}) outside dimension {dim}"
            );
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = SparseHermitianOperator {
            dim,
            row_ptr,
            cols,
            vals,
            hermitian: false,
        };
        op.prune();
        op
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, Complex64::new(d, 0.0)))
            .collect();
        let mut op = Self::from_triplets(dim, triplets);
        op.hermitian = true;
        op
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), triplets)
    }

    fn prune(&mut self) {
        let zero = Complex64::new(0.0, 0.0);
        if self.vals.iter().all(|v| *v != zero) {
            return;
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[idx] != zero {
                    cols.push(self.cols[idx]);
                    vals.push(self.vals[idx]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (r, self.cols[i], self.vals[i]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(i) => self.vals[self.row_ptr[r] + i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, x: &StateVector) -> StateVector {
        let mut y = StateVector::zeros(self.dim);
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &StateVector, y: &mut StateVector) {
        assert_eq!(x.len(), self.dim, "vector length mismatch");
        for r in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i]];
            }
            y[r] = acc;
        }
    }

    /// ⟨x, A x⟩.
    pub fn expectation(&self, x: &StateVector) -> Complex64 {
        x.dotc(&self.apply(x))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= s;
        }
        out.hermitian = self.hermitian && s.im == 0.0;
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let triplets = self.iter().chain(other.iter()).collect();
        let mut out = Self::from_triplets(self.dim, triplets);
        out.hermitian = self.hermitian && other.hermitian;
        out
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut out = Self::from_triplets(self.dim, triplets);
        out.hermitian = self.hermitian;
        out
    }

    /// max |A_rc − conj(A_cr)| over all stored entries.
    pub fn hermiticity_residual(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Sets the Hermitian flag if the residual is within `tol`.
    pub fn check_hermitian(&mut self, tol: f64) -> bool {
        self.hermitian = self.hermiticity_residual() <= tol;
        self.hermitian
    }

    /// Kronecker product self ⊗ rhs, self's index slowest.
    pub fn kron(&self, rhs: &DMatrix<Complex64>) -> Self {
        let n = rhs.nrows();
        let mut triplets = Vec::with_capacity(self.nnz() * n * n);
        for (r, c, v) in self.iter() {
            for i in 0..n {
                for j in 0..n {
                    let w = rhs[(i, j)];
                    if w != Complex64::new(0.0, 0.0) {
                        triplets.push((r * n + i, c * n + j, v * w));
                    }
                }
            }
        }
        let mut out = Self::from_triplets(self.dim * n, triplets);
        out.hermitian = false;
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    /// Max absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
            .iter()
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }
}
