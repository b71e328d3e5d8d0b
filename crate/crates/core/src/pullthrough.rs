//! Photon amplitudes a(k)U from the pull-through formula
//!
//!   (a(k) ⊗ I)U = −(g/√2) Σ_{λ,m} B_{m,x_λ}(k) (H − E + |k|)^{-1} f_m^[λ],
//!
//! with f_m^[λ] = (I ⊗ σ_m^[λ])U, together with the shifted solves behind it
//! and the discrete identities that check it.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groundstate::{DenseEigensystem, GroundState, SolverOptions};
use crate::hamiltonian::AssembledModel;
use crate::krylov::gmres_shifted;
use crate::modes::{field_coefficient, CVector3, CutoffFunction};
use crate::sparse::{SparseHermitianOperator, StateVector};
use crate::spectral::SpectralMeasure;
use crate::spin::sigma_op;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// One state vector per spatial axis of the photon field.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    pub components: [StateVector; 3],
}

impl AmplitudeVector {
    pub fn zeros(dim: usize) -> Self {
        AmplitudeVector {
            components: std::array::from_fn(|_| StateVector::zeros(dim)),
        }
    }

    /// w ⊗ ψ: component i is w_i ψ.
    pub fn outer(w: &CVector3, psi: &StateVector) -> Self {
        AmplitudeVector {
            components: std::array::from_fn(|i| psi * w[i]),
        }
    }

    pub fn dim(&self) -> usize {
        self.components[0].len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// self += a·w ⊗ ψ
    pub fn add_outer(&mut self, a: Complex64, w: &CVector3, psi: &StateVector) {
        for i in 0..3 {
            self.components[i].axpy(a * w[i], psi, ONE);
        }
    }

    pub fn add_scaled(&mut self, a: Complex64, other: &AmplitudeVector) {
        for i in 0..3 {
            self.components[i].axpy(a, &other.components[i], ONE);
        }
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        AmplitudeVector {
            components: std::array::from_fn(|i| &self.components[i] * a),
        }
    }

    pub fn sub(&self, other: &AmplitudeVector) -> Self {
        AmplitudeVector {
            components: std::array::from_fn(|i| &self.components[i] - &other.components[i]),
        }
    }

    /// Σ_i w_i · component_i.
    pub fn contract(&self, w: &CVector3) -> StateVector {
        let mut out = StateVector::zeros(self.dim());
        for i in 0..3 {
            out.axpy(w[i], &self.components[i], ONE);
        }
        out
    }

    /// Coordinates ⟨ψ, component_i⟩ along a fixed state.
    pub fn pattern(&self, psi: &StateVector) -> CVector3 {
        CVector3::from_fn(|i, _| psi.dotc(&self.components[i]))
    }
}

fn operator_norm_bound(h: &SparseHermitianOperator) -> f64 {
    let mut rows = vec![0.0; h.dim()];
    for (r, _, v) in h.iter() {
        rows[r] += v.norm();
    }
    rows.into_iter().fold(0.0, f64::max)
}

/// Accepts y when ‖(H−E+z)y − f‖ ≤ tol‖f‖ up to the rounding floor of
/// forming the residual itself.
fn check_residual(
    h: &SparseHermitianOperator,
    shift: Complex64,
    norm_a: f64,
    f: &StateVector,
    y: &StateVector,
    tol: f64,
) -> Result<()> {
    let mut r = h.apply(y);
    r.axpy(shift, y, ONE);
    r.axpy(-ONE, f, ONE);
    let res = r.norm();
    let allowed = tol * f.norm() + 64.0 * f64::EPSILON * norm_a * y.norm();
    if res > allowed {
        return Err(Error::Solver {
            what: format!("shifted solve with shift {shift} missed its tolerance"),
            residual: res / f.norm().max(1e-300),
        });
    }
    Ok(())
}

fn validate_shift(z: Complex64) -> Result<()> {
    if z.re < 0.0 || z == Complex64::new(0.0, 0.0) || !z.is_finite() {
        return Err(Error::domain(format!(
            "resolvent shift must satisfy Re z >= 0 and z != 0, got {z}"
        )));
    }
    Ok(())
}

/// (H − E + z)^{-1} applied to every f in `fs`, sharing one factorization on
/// the dense path.
pub fn resolvent_apply_many(
    h: &SparseHermitianOperator,
    energy: f64,
    z: Complex64,
    fs: &[&StateVector],
    opts: &SolverOptions,
) -> Result<Vec<StateVector>> {
    validate_shift(z)?;
    let shift = z - energy;
    let norm_a = operator_norm_bound(h) + shift.norm();
    let dim = h.dim();
    if dim <= opts.dense_threshold {
        let mut m: DMatrix<Complex64> = h.to_dense();
        for i in 0..dim {
            m[(i, i)] += shift;
        }
        let dense = m.clone();
        let lu = m.lu();
        let mut out = Vec::with_capacity(fs.len());
        for f in fs {
            let mut y = lu.solve(*f).ok_or_else(|| Error::Solver {
                what: format!("singular shifted matrix at z = {z}"),
                residual: f64::INFINITY,
            })?;
            // one step of iterative refinement
            let r = *f - &dense * &y;
            if let Some(d) = lu.solve(&r) {
                y += d;
            }
            check_residual(h, shift, norm_a, f, &y, opts.tol)?;
            out.push(y);
        }
        Ok(out)
    } else {
        fs.iter()
            .map(|f| {
                let y = gmres_shifted(h, shift, f, opts.tol, 60, 400)?;
                check_residual(h, shift, norm_a, f, &y, opts.tol)?;
                Ok(y)
            })
            .collect()
    }
}

/// (H − E + z)^{-1} f for Re z ≥ 0, z ≠ 0.
pub fn resolvent_apply(
    h: &SparseHermitianOperator,
    energy: f64,
    z: Complex64,
    f: &StateVector,
    opts: &SolverOptions,
) -> Result<StateVector> {
    Ok(resolvent_apply_many(h, energy, z, &[f], opts)?.remove(0))
}

type Resolved = Arc<Vec<[StateVector; 3]>>;

/// Everything the pull-through and asymptotic machinery needs: a Hermitian H,
/// its nondegenerate ground pair, the sources f_m^[λ] and the coupling data.
#[derive(Debug)]
pub struct SpectralSurrogate {
    pub h: SparseHermitianOperator,
    pub energy: f64,
    pub ground: StateVector,
    pub gap: f64,
    /// f_m^[λ], indexed [λ][m−1].
    pub sources: Vec<[StateVector; 3]>,
    pub g: f64,
    pub chi: CutoffFunction,
    pub positions: Vec<Vector3<f64>>,
    pub opts: SolverOptions,
    eigensystem: Mutex<Option<Arc<DenseEigensystem>>>,
    resolvents: Mutex<HashMap<String, Arc<Mutex<Option<Resolved>>>>>,
    measures: Mutex<Option<Arc<Vec<[SpectralMeasure; 3]>>>>,
}

/// Cache key: |k| to 12 significant digits.
pub fn radius_key(rho: f64) -> String {
    format!("{rho:.11e}")
}

impl SpectralSurrogate {
    pub fn from_model(
        model: &AssembledModel,
        gs: &GroundState,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let p = model.particles();
        let mut sources = Vec::with_capacity(p);
        for l in 1..=p {
            let mut per_axis = Vec::with_capacity(3);
            for m in 1..=3 {
                per_axis.push(sigma_op(m, l, p)?.apply_full(&gs.vector));
            }
            sources.push(per_axis.try_into().expect("three axes"));
        }
        let s = SpectralSurrogate {
            h: model.h.clone(),
            energy: gs.energy,
            ground: gs.vector.clone(),
            gap: gs.gap,
            sources,
            g: model.config.g,
            chi: model.config.chi,
            positions: model.config.positions.clone(),
            opts: *opts,
            eigensystem: Mutex::new(gs.eigensystem.clone()),
            resolvents: Mutex::new(HashMap::new()),
            measures: Mutex::new(None),
        };
        Ok(s)
    }

    /// Surrogate from explicit parts, e.g. a synthetic fixture. The ground
    /// pair must satisfy HU = EU and the gap must exceed the degeneracy threshold.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        h: SparseHermitianOperator,
        energy: f64,
        ground: StateVector,
        gap: f64,
        sources: Vec<[StateVector; 3]>,
        g: f64,
        chi: CutoffFunction,
        positions: Vec<Vector3<f64>>,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let dim = h.dim();
        if ground.len() != dim || sources.iter().flatten().any(|f| f.len() != dim) {
            return Err(Error::config(
                "surrogate vectors do not match the operator dimension",
            ));
        }
        if sources.len() != positions.len() || sources.is_empty() {
            return Err(Error::config(
                "one source triple per particle position is required",
            ));
        }
        if (ground.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::domain("surrogate ground vector must be normalized"));
        }
        let mut r = h.apply(&ground);
        r.axpy(Complex64::new(-energy, 0.0), &ground, ONE);
        if r.norm() > 1e-8 {
            return Err(Error::Solver {
                what: "surrogate ground pair is not an eigenpair".into(),
                residual: r.norm(),
            });
        }
        if gap < opts.degeneracy_threshold(energy) {
            return Err(Error::DegenerateGroundState {
                e0: energy,
                e1: energy + gap,
            });
        }
        Ok(SpectralSurrogate {
            h,
            energy,
            ground,
            gap,
            sources,
            g,
            chi,
            positions,
            opts: *opts,
            eigensystem: Mutex::new(None),
            resolvents: Mutex::new(HashMap::new()),
            measures: Mutex::new(None),
        })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn particles(&self) -> usize {
        self.positions.len()
    }

    /// S_m = Σ_λ Re⟨U, f_m^[λ]⟩.
    pub fn total_spin(&self) -> Vector3<f64> {
        let mut s = Vector3::zeros();
        for triple in &self.sources {
            for m in 0..3 {
                s[m] += self.ground.dotc(&triple[m]).re;
            }
        }
        s
    }

    /// Same surrogate at a different coupling constant (H unchanged).
    pub fn with_coupling(&self, g: f64) -> Self {
        SpectralSurrogate {
            h: self.h.clone(),
            energy: self.energy,
            ground: self.ground.clone(),
            gap: self.gap,
            sources: self.sources.clone(),
            g,
            chi: self.chi,
            positions: self.positions.clone(),
            opts: self.opts,
            eigensystem: Mutex::new(self.eigensystem.lock().unwrap().clone()),
            resolvents: Mutex::new(HashMap::new()),
            measures: Mutex::new(self.measures.lock().unwrap().clone()),
        }
    }

    /// The resolvent at z.
    pub fn resolvent(&self, z: Complex64, f: &StateVector) -> Result<StateVector> {
        resolvent_apply(&self.h, self.energy, z, f, &self.opts)
    }

    /// (H − E + ρ)^{-1} f_m^[λ] for every source, computed at most once per
    /// rounded radius.
    pub fn resolved_sources(&self, rho: f64) -> Result<Resolved> {
        let entry = {
            let mut map = self.resolvents.lock().unwrap();
            Arc::clone(map.entry(radius_key(rho)).or_default())
        };
        let mut slot = entry.lock().unwrap();
        if let Some(v) = slot.as_ref() {
            return Ok(Arc::clone(v));
        }
        let fs: Vec<&StateVector> = self.sources.iter().flatten().collect();
        let z = Complex64::new(rho, 0.0);
        let ys = if self.dim() <= self.opts.dense_threshold {
            self.eigen_resolvent(z, &fs)?
        } else {
            resolvent_apply_many(&self.h, self.energy, z, &fs, &self.opts)?
        };
        let mut it = ys.into_iter();
        let resolved: Vec<[StateVector; 3]> = (0..self.particles())
            .map(|_| std::array::from_fn(|_| it.next().expect("one solve per source")))
            .collect();
        let resolved = Arc::new(resolved);
        *slot = Some(Arc::clone(&resolved));
        Ok(resolved)
    }

    /// Resolvent through the cached eigendecomposition; each solve then costs
    /// two dense matrix-vector products instead of a factorization.
    fn eigen_resolvent(&self, z: Complex64, fs: &[&StateVector]) -> Result<Vec<StateVector>> {
        validate_shift(z)?;
        let sys = self.dense_eigensystem();
        let shift = z - self.energy;
        let norm_a = operator_norm_bound(&self.h) + shift.norm();
        fs.iter()
            .map(|f| {
                let mut c = sys.vectors.ad_mul(*f);
                for (ci, lambda) in c.iter_mut().zip(&sys.values) {
                    *ci /= shift + lambda;
                }
                let y = &sys.vectors * c;
                check_residual(&self.h, shift, norm_a, f, &y, self.opts.tol)?;
                Ok(y)
            })
            .collect()
    }

    pub fn dense_eigensystem(&self) -> Arc<DenseEigensystem> {
        let mut slot = self.eigensystem.lock().unwrap();
        Arc::clone(slot.get_or_insert_with(|| Arc::new(DenseEigensystem::new(&self.h))))
    }

    /// Spectral measures of every source, indexed [λ][m−1].
    pub fn spectral_measures(&self) -> Result<Arc<Vec<[SpectralMeasure; 3]>>> {
        let mut slot = self.measures.lock().unwrap();
        if let Some(m) = slot.as_ref() {
            return Ok(Arc::clone(m));
        }
        let dense = self.dim() <= self.opts.dense_threshold;
        let system = dense.then(|| self.dense_eigensystem());
        let mut out = Vec::with_capacity(self.particles());
        for triple in &self.sources {
            let mut per_axis = Vec::with_capacity(3);
            for f in triple {
                let m = match &system {
                    Some(sys) => SpectralMeasure::from_dense(sys, &self.ground, f),
                    None => SpectralMeasure::from_lanczos(
                        &self.h,
                        self.energy,
                        &self.ground,
                        f,
                        self.gap,
                        self.opts.tol,
                        self.dim().min(600),
                    )?,
                };
                per_axis.push(m);
            }
            out.push(per_axis.try_into().expect("three axes"));
        }
        let out = Arc::new(out);
        *slot = Some(Arc::clone(&out));
        Ok(out)
    }
}

/// a(k)U as an element of H³.
pub fn photon_amplitude(s: &SpectralSurrogate, k: &Vector3<f64>) -> Result<AmplitudeVector> {
    let rho = k.norm();
    if rho == 0.0 {
        return Err(Error::domain("photon amplitude undefined at k = 0"));
    }
    let mut out = AmplitudeVector::zeros(s.dim());
    if s.g == 0.0 {
        return Ok(out);
    }
    let resolved = s.resolved_sources(rho)?;
    let pref = Complex64::new(-s.g * FRAC_1_SQRT_2, 0.0);
    for (l, x) in s.positions.iter().enumerate() {
        for m in 1..=3 {
            let b = field_coefficient(m, x, k, &s.chi)?;
            out.add_outer(pref, &b, &resolved[l][m - 1]);
        }
    }
    Ok(out)
}

/// (g/√2) Σ_{λ,m} |B_{m,x_λ}(k)| ‖f_m^[λ]‖ / |k|, an upper bound on ‖a(k)U‖.
pub fn amplitude_bound(s: &SpectralSurrogate, k: &Vector3<f64>) -> Result<f64> {
    let rho = k.norm();
    if rho == 0.0 {
        return Err(Error::domain("amplitude bound undefined at k = 0"));
    }
    let mut sum = 0.0;
    for (l, x) in s.positions.iter().enumerate() {
        for m in 1..=3 {
            let b = field_coefficient(m, x, k, &s.chi)?;
            let bn = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            sum += bn * s.sources[l][m - 1].norm();
        }
    }
    Ok(s.g * FRAC_1_SQRT_2 * sum / rho)
}

/// ‖a_j U + (g/√2) Σ_{λ,m} c_{m,λ,j} (H − E + ω_j)^{-1} f_m^[λ]‖ for slot j of
/// the model's grid. Nonzero only through truncation of the Fock space.
pub fn pullthrough_residual(
    model: &AssembledModel,
    s: &SpectralSurrogate,
    slot: usize,
) -> Result<f64> {
    if slot >= model.basis.slots() {
        return Err(Error::domain(format!("slot {slot} outside the grid")));
    }
    let mut lhs = model.basis.annihilate(slot, &s.ground)?;
    if s.g == 0.0 {
        return Ok(lhs.norm());
    }
    let omega = model.config.grid.nodes[slot / 2].omega;
    let resolved = s.resolved_sources(omega)?;
    let pref = Complex64::new(s.g * FRAC_1_SQRT_2, 0.0);
    for (l, triple) in model.couplings.iter().enumerate() {
        for m in 0..3 {
            lhs.axpy(pref * triple[m].coeffs[slot], &resolved[l][m], ONE);
        }
    }
    Ok(lhs.norm())
}

/// The same residual evaluated from the truncation defect. Only the top Fock
/// sector of U breaks the commutator identity, and there
///
///   (H − E + ω_j) a_j U + (g/√2) Σ c_j f = (g/√2) Σ σ (c_j + a†(c) a_j) U_top,
///
/// so the residual is the resolvent applied to that vector. Nothing cancels,
/// which keeps it meaningful far below the rounding floor of the direct form.
pub fn pullthrough_defect_residual(
    model: &AssembledModel,
    s: &SpectralSurrogate,
    slot: usize,
) -> Result<f64> {
    let basis = &model.basis;
    if slot >= basis.slots() {
        return Err(Error::domain(format!("slot {slot} outside the grid")));
    }
    if s.g == 0.0 {
        return Ok(0.0);
    }
    let spin = model.spin_dim;
    let mut top = s.ground.clone();
    for (i, z) in top.iter_mut().enumerate() {
        if basis.total(i / spin) < basis.n_max() {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let lowered = basis.annihilate(slot, &top)?;
    let raised: Vec<StateVector> = (0..basis.slots())
        .map(|i| basis.create(i, &lowered))
        .collect::<Result<_>>()?;

    let mut defect = StateVector::zeros(top.len());
    for (l, triple) in model.couplings.iter().enumerate() {
        for (m, v) in triple.iter().enumerate() {
            let mut inner = top.clone() * v.coeffs[slot];
            for (i, r) in raised.iter().enumerate() {
                inner.axpy(v.coeffs[i], r, ONE);
            }
            let sigma = sigma_op(m + 1, l + 1, model.particles())?;
            defect += sigma.apply_full(&inner);
        }
    }
    defect *= Complex64::new(s.g * FRAC_1_SQRT_2, 0.0);
    let omega = model.config.grid.nodes[slot / 2].omega;
    Ok(s.resolvent(Complex64::new(omega, 0.0), &defect)?.norm())
}

/// (Σ_j ‖a_j ψ‖², ⟨(N ⊗ I)ψ, ψ⟩), two independent evaluations of the same number.
pub fn number_check(model: &AssembledModel, psi: &StateVector) -> Result<(f64, f64)> {
    let mut lhs = 0.0;
    for j in 0..model.basis.slots() {
        lhs += model.basis.annihilate(j, psi)?.norm_squared();
    }
    let rhs = model.number_operator().expectation(psi).re;
    Ok((lhs, rhs))
}
