//! Assembly of H(g) = H₀ + g H_int on the truncated Fock space ⊗ spin space.
//!
//! H₀ = dΓ(ω) ⊗ I + Σ_{λ,m} B^ext_m (I ⊗ σ_m^[λ])
//! H_int = Σ_{λ,m} Φ_S(B_{m,x_λ}) ⊗ σ_m^[λ]

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{build_fock_basis, FockBasis};
use crate::modes::{build_mode_grid, embed_field, CutoffFunction, ModeGrid, OnePhotonVector};
use crate::sparse::SparseHermitianOperator;
use crate::spin::{sigma_op, MAX_PARTICLES};

/// Largest full-space dimension accepted by `assemble`.
pub const MAX_MODEL_DIM: usize = 2_000_000;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub g: f64,
    pub bext: Vector3<f64>,
    pub positions: Vec<Vector3<f64>>,
    pub chi: CutoffFunction,
    pub grid: ModeGrid,
    pub n_max: usize,
}

impl ModelConfig {
    /// One spin at the origin, B^ext = e₃, six-point angular rule, six radial
    /// shells up to k_max = 6, two photons.
    pub fn desk_default() -> Self {
        ModelConfig {
            g: 0.05,
            bext: Vector3::new(0.0, 0.0, 1.0),
            positions: vec![Vector3::zeros()],
            chi: CutoffFunction::default(),
            grid: build_mode_grid(6, 6, 6.0).expect("default grid is valid"),
            n_max: 2,
        }
    }

    pub fn particles(&self) -> usize {
        self.positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::config(format!(
                "coupling g must be >= 0, got {}",
                self.g
            )));
        }
        if self.positions.is_empty() || self.positions.len() > MAX_PARTICLES {
            return Err(Error::config(format!(
                "spins.P must be in 1..={MAX_PARTICLES}, got {}",
                self.positions.len()
            )));
        }
        if self.bext.iter().any(|b| !b.is_finite()) {
            return Err(Error::config("field.bext must be finite"));
        }
        Ok(())
    }

    /// Enforces B^ext ≠ 0, required wherever uniqueness of the ground state is assumed.
    pub fn require_nonzero_field(&self) -> Result<()> {
        if self.bext.norm() == 0.0 {
            return Err(Error::config("field.bext must be nonzero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AssembledModel {
    pub config: ModelConfig,
    pub basis: FockBasis,
    pub spin_dim: usize,
    /// dΓ(ω) ⊗ I
    pub h_photon: SparseHermitianOperator,
    /// Σ B^ext_m (I ⊗ σ_m^[λ])
    pub h_zeeman: SparseHermitianOperator,
    pub h_int: SparseHermitianOperator,
    pub h0: SparseHermitianOperator,
    pub h: SparseHermitianOperator,
    /// Embedded couplings B_{m,x_λ}, indexed [λ][m−1].
    pub couplings: Vec<[OnePhotonVector; 3]>,
}

impl AssembledModel {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn particles(&self) -> usize {
        self.config.particles()
    }

    /// H(g′) = H(0) + g′ H_int for another coupling.
    pub fn hamiltonian_at(&self, g: f64) -> SparseHermitianOperator {
        let mut h = self.h0.add(&self.h_int.scale(Complex64::new(g, 0.0)));
        h.hermitian = true;
        h
    }

    /// Rebuilds the model at another coupling, reusing every other part.
    pub fn with_coupling(&self, g: f64) -> AssembledModel {
        let mut out = self.clone();
        out.config.g = g;
        out.h = self.hamiltonian_at(g);
        out
    }

    /// N ⊗ I on the full space.
    pub fn number_operator(&self) -> SparseHermitianOperator {
        let mut n = self
            .basis
            .number_operator()
            .kron(&DMatrix::identity(self.spin_dim, self.spin_dim));
        n.hermitian = true;
        n
    }
}

pub fn assemble(config: &ModelConfig) -> Result<AssembledModel> {
    config.validate()?;
    let particles = config.particles();
    let spin_dim = 1usize << particles;
    let modes = config.grid.node_count();
    let slots = config.grid.slot_count();
    let fock_dim = crate::fock::fock_dimension(slots, config.n_max)
        .ok_or_else(|| Error::config("Fock dimension overflows"))?;
    let dim = fock_dim.saturating_mul(spin_dim);
    if dim > MAX_MODEL_DIM {
        return Err(Error::config(format!(
            "model dimension {dim} exceeds the limit {MAX_MODEL_DIM}"
        )));
    }
    let basis = build_fock_basis(modes, config.n_max)?;
    let spin_id = DMatrix::<Complex64>::identity(spin_dim, spin_dim);

    let h_photon = basis
        .d_gamma(&config.grid.slot_frequencies())?
        .kron(&spin_id);

    let mut zeeman_spin = DMatrix::<Complex64>::zeros(spin_dim, spin_dim);
    for lambda in 1..=particles {
        for m in 1..=3 {
            let b = config.bext[m - 1];
            if b != 0.0 {
                zeeman_spin += sigma_op(m, lambda, particles)?.matrix * Complex64::new(b, 0.0);
            }
        }
    }
    let fock_id = SparseHermitianOperator::diagonal(&vec![1.0; basis.dim()]);
    let h_zeeman = fock_id.kron(&zeeman_spin);

    let mut h_int = SparseHermitianOperator::zeros(dim);
    let mut couplings = Vec::with_capacity(particles);
    for (l, x) in config.positions.iter().enumerate() {
        let mut per_axis = Vec::with_capacity(3);
        for m in 1..=3 {
            let v = embed_field(m, x, &config.grid, &config.chi)?;
            let field = basis.segal_field(&v)?;
            let sigma = sigma_op(m, l + 1, particles)?;
            h_int = h_int.add(&field.kron(&sigma.matrix));
            per_axis.push(v);
        }
        couplings.push(per_axis.try_into().expect("three axes"));
    }

    let mut parts = Vec::with_capacity(3);
    for op in [h_photon, h_zeeman, h_int] {
        let mut op = op;
        let residual = op.hermiticity_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::Assembly { residual });
        }
        op.hermitian = true;
        parts.push(op);
    }
    let h_int = parts.pop().unwrap();
    let h_zeeman = parts.pop().unwrap();
    let h_photon = parts.pop().unwrap();
    let mut h0 = h_photon.add(&h_zeeman);
    h0.hermitian = true;

    let mut model = AssembledModel {
        config: config.clone(),
        basis,
        spin_dim,
        h_photon,
        h_zeeman,
        h_int,
        h0,
        h: SparseHermitianOperator::zeros(dim),
        couplings,
    };
    model.h = model.hamiltonian_at(config.g);
    let residual = model.h.hermiticity_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::Assembly { residual });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::build_mode_grid;

    fn small(g: f64, bext: Vector3<f64>, particles: usize) -> ModelConfig {
        ModelConfig {
            g,
            bext,
            positions: (0..particles)
                .map(|l| Vector3::new(0.3 * l as f64, -0.1 * l as f64, 0.0))
                .collect(),
            chi: CutoffFunction::default(),
            grid: build_mode_grid(1, 6, 2.0).unwrap(),
            n_max: 2,
        }
    }

    fn lowest_eigenvalue(op: &SparseHermitianOperator) -> f64 {
        let e = nalgebra::SymmetricEigen::new(op.to_dense()).eigenvalues;
        e.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn decoupled_spectrum() {
        let model = assemble(&small(0.0, Vector3::new(0.0, 0.0, 1.0), 1)).unwrap();
        assert!((lowest_eigenvalue(&model.h) + 1.0).abs() < 1e-12);
        // vacuum ⊗ spin down is an eigenvector
        let mut u = crate::sparse::StateVector::zeros(model.dim());
        u[1] = Complex64::new(1.0, 0.0);
        let hu = model.h.apply(&u);
        assert!((hu + u).norm() < 1e-14);

        let b = Vector3::new(0.3, -0.4, 1.2);
        for p in [1, 2] {
            let model = assemble(&small(0.0, b, p)).unwrap();
            assert!((lowest_eigenvalue(&model.h) + p as f64 * b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_coupling() {
        let model = assemble(&small(0.1, Vector3::new(0.2, 0.0, 1.0), 2)).unwrap();
        let h0 = model.hamiltonian_at(0.0);
        let lhs = model
            .hamiltonian_at(0.2)
            .add(&h0.scale(Complex64::new(-1.0, 0.0)));
        let rhs = model
            .hamiltonian_at(0.1)
            .add(&h0.scale(Complex64::new(-1.0, 0.0)))
            .scale(Complex64::new(2.0, 0.0));
        assert!(lhs.max_abs_diff(&rhs) <= 1e-15);
    }

    #[test]
    fn assembled_parts_are_hermitian() {
        let model = assemble(&small(0.15, Vector3::new(0.5, 0.5, 0.1), 2)).unwrap();
        for op in [
            &model.h,
            &model.h0,
            &model.h_int,
            &model.h_photon,
            &model.h_zeeman,
        ] {
            assert!(op.hermiticity_residual() <= 1e-12);
        }
    }

    #[test]
    fn free_hamiltonian_preserves_photon_number() {
        let model = assemble(&small(0.1, Vector3::new(0.3, 0.1, 1.0), 1)).unwrap();
        let n = model.number_operator().to_dense();
        let h0 = model.h0.to_dense();
        assert!((&h0 * &n - &n * &h0).norm() < 1e-13);
        let h = model.h.to_dense();
        assert!((&h * &n - &n * &h).norm() > 1e-3);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small(0.1, Vector3::new(0.0, 0.0, 1.0), 1);
        cfg.g = -1.0;
        assert!(matches!(assemble(&cfg), Err(Error::Config(_))));
        let mut cfg = small(0.1, Vector3::new(0.0, 0.0, 1.0), 1);
        cfg.positions.clear();
        assert!(matches!(assemble(&cfg), Err(Error::Config(_))));
        let mut cfg = small(0.1, Vector3::new(0.0, 0.0, 1.0), 1);
        cfg.grid = build_mode_grid(10, 26, 1.0).unwrap();
        cfg.n_max = 4;
        assert!(matches!(assemble(&cfg), Err(Error::Config(_))));
    }
}
