//! Truncated symmetric Fock space over the discretized one-photon space.
//!
//! States are occupation vectors over `slots = 2M` (node, polarization) pairs
//! with total photon number at most `n_max`, ordered by total number and then
//! in descending lexicographic order. Full-space vectors are laid out with the
//! Fock index slowest and the spin index fastest.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::OnePhotonVector;
use crate::sparse::{SparseHermitianOperator, StateVector};

/// Largest Fock dimension the enumerator accepts.
pub const MAX_FOCK_DIM: usize = 4_000_000;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    n_max: usize,
    occupations: Vec<u8>,
    index: HashMap<Vec<u8>, usize>,
    lower: Vec<u32>,
    raise: Vec<u32>,
}

/// Number of occupation vectors over `slots` slots with total ≤ n_max,
/// i.e. C(slots + n_max, n_max); `None` on overflow.
pub fn fock_dimension(slots: usize, n_max: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 1..=n_max as u128 {
        acc = acc.checked_mul(slots as u128 + i)? / i;
    }
    usize::try_from(acc).ok()
}

pub fn build_fock_basis(modes: usize, n_max: usize) -> Result<FockBasis> {
    if modes == 0 {
        return Err(Error::config("Fock basis needs at least one mode"));
    }
    if n_max > u8::MAX as usize {
        return Err(Error::config(format!("fock.n_max = {n_max} exceeds 255")));
    }
    let slots = 2 * modes;
    let dim = fock_dimension(slots, n_max)
        .filter(|d| *d <= MAX_FOCK_DIM)
        .ok_or_else(|| {
            Error::config(format!(
                "Fock dimension C({} + {n_max}, {n_max}) = {} exceeds the limit {MAX_FOCK_DIM}",
                slots,
                fock_dimension(slots, n_max).map_or("overflow".to_string(), |d| d.to_string())
            ))
        })?;

    let mut occupations = Vec::with_capacity(dim * slots);
    let mut current = vec![0u8; slots];
    for total in 0..=n_max {
        enumerate_grade(&mut current, 0, total, &mut occupations);
    }
    debug_assert_eq!(occupations.len(), dim * slots);

    let mut index = HashMap::with_capacity(dim);
    for (i, occ) in occupations.chunks(slots).enumerate() {
        index.insert(occ.to_vec(), i);
    }

    let mut lower = vec![NONE; dim * slots];
    let mut raise = vec![NONE; dim * slots];
    let mut scratch = vec![0u8; slots];
    for (i, occ) in occupations.chunks(slots).enumerate() {
        let total: usize = occ.iter().map(|&n| n as usize).sum();
        scratch.copy_from_slice(occ);
        for j in 0..slots {
            if occ[j] > 0 {
                scratch[j] -= 1;
                lower[i * slots + j] = index[&scratch] as u32;
                scratch[j] += 1;
            }
            if total < n_max {
                scratch[j] += 1;
                raise[i * slots + j] = index[&scratch] as u32;
                scratch[j] -= 1;
            }
        }
    }

    Ok(FockBasis {
        modes,
        n_max,
        occupations,
        index,
        lower,
        raise,
    })
}

fn enumerate_grade(current: &mut [u8], pos: usize, remaining: usize, out: &mut Vec<u8>) {
    if pos == current.len() - 1 {
        current[pos] = remaining as u8;
        out.extend_from_slice(current);
        current[pos] = 0;
        return;
    }
    for c in (0..=remaining).rev() {
        current[pos] = c as u8;
        enumerate_grade(current, pos + 1, remaining - c, out);
    }
    current[pos] = 0;
}

impl FockBasis {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn slots(&self) -> usize {
        2 * self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.slots()
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        let s = self.slots();
        &self.occupations[i * s..(i + 1) * s]
    }

    pub fn total(&self, i: usize) -> usize {
        self.occupation(i).iter().map(|&n| n as usize).sum()
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Occupation as a compact string, e.g. "0.2.1".
    pub fn occupation_label(&self, i: usize) -> String {
        self.occupation(i)
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }

    fn check_slot(&self, j: usize) -> Result<()> {
        if j >= self.slots() {
            return Err(Error::domain(format!(
                "slot {j} outside 0..{}",
                self.slots()
            )));
        }
        Ok(())
    }

    fn spin_dim_of(&self, psi: &StateVector) -> Result<usize> {
        let d = self.dim();
        if !psi.len().is_multiple_of(d) || psi.is_empty() {
            return Err(Error::config(format!(
                "state of length {} does not factor over Fock dimension {d}",
                psi.len()
            )));
        }
        Ok(psi.len() / d)
    }

    /// Applies a_j or a_j† (tensored with the spin identity). Creation out of
    /// the top sector is dropped.
    pub fn ladder(&self, j: usize, direction: Ladder, psi: &StateVector) -> Result<StateVector> {
        self.check_slot(j)?;
        let spin = self.spin_dim_of(psi)?;
        let slots = self.slots();
        let mut out = StateVector::zeros(psi.len());
        for i in 0..self.dim() {
            let n = self.occupation(i)[j] as f64;
            let (target, amp) = match direction {
                Ladder::Annihilate => (self.lower[i * slots + j], n.sqrt()),
                Ladder::Create => (self.raise[i * slots + j], (n + 1.0).sqrt()),
            };
            if target == NONE {
                continue;
            }
            let t = target as usize;
            for s in 0..spin {
                out[t * spin + s] += psi[i * spin + s] * amp;
            }
        }
        Ok(out)
    }

    pub fn annihilate(&self, j: usize, psi: &StateVector) -> Result<StateVector> {
        self.ladder(j, Ladder::Annihilate, psi)
    }

    pub fn create(&self, j: usize, psi: &StateVector) -> Result<StateVector> {
        self.ladder(j, Ladder::Create, psi)
    }

    /// dΓ(T) for a one-photon operator diagonal over slots.
    pub fn d_gamma(&self, diag: &[f64]) -> Result<SparseHermitianOperator> {
        if diag.len() != self.slots() {
            return Err(Error::config(format!(
                "dΓ diagonal has length {}, expected {}",
                diag.len(),
                self.slots()
            )));
        }
        let entries: Vec<f64> = (0..self.dim())
            .map(|i| {
                self.occupation(i)
                    .iter()
                    .zip(diag)
                    .map(|(&n, d)| n as f64 * d)
                    .sum()
            })
            .collect();
        Ok(SparseHermitianOperator::diagonal(&entries))
    }

    pub fn number_operator(&self) -> SparseHermitianOperator {
        self.d_gamma(&vec![1.0; self.slots()])
            .expect("unit diagonal has the slot length")
    }

    /// Φ_S(V) = (a(V) + a†(V))/√2 with a(V) = Σ_j conj(V_j) a_j, projected onto
    /// the truncated space.
    pub fn segal_field(&self, v: &OnePhotonVector) -> Result<SparseHermitianOperator> {
        if v.len() != self.slots() {
            return Err(Error::config(format!(
                "one-photon vector has {} slots, basis has {}",
                v.len(),
                self.slots()
            )));
        }
        let slots = self.slots();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut triplets = Vec::new();
        for i in 0..self.dim() {
            for j in 0..slots {
                let vj = v.coeffs[j];
                if vj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let t = self.raise[i * slots + j];
                if t == NONE {
                    continue;
                }
                let t = t as usize;
                let amp = (self.occupation(i)[j] as f64 + 1.0).sqrt() * s;
                triplets.push((t, i, vj * amp));
                triplets.push((i, t, vj.conj() * amp));
            }
        }
        let mut op = SparseHermitianOperator::from_triplets(self.dim(), triplets);
        op.hermitian = true;
        Ok(op)
    }

    /// States with total photon number ≤ n_max − 1 (where the CCR hold exactly).
    pub fn is_interior(&self, i: usize) -> bool {
        self.total(i) < self.n_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(rng: &mut ChaCha8Rng, len: usize) -> StateVector {
        StateVector::from_fn(len, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn interior_only(basis: &FockBasis, psi: &mut StateVector) {
        let spin = psi.len() / basis.dim();
        for i in 0..basis.dim() {
            if !basis.is_interior(i) {
                for s in 0..spin {
                    psi[i * spin + s] = c(0.0, 0.0);
                }
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        let b = build_fock_basis(1, 1).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(b.occupation(0), &[0, 0]);
        assert_eq!(b.occupation(1), &[1, 0]);
        assert_eq!(b.occupation(2), &[0, 1]);

        let b = build_fock_basis(2, 2).unwrap();
        assert_eq!(b.dim(), 15);
        assert_eq!((0..15).filter(|&i| b.total(i) == 1).count(), 4);
        assert_eq!((0..15).filter(|&i| b.total(i) == 2).count(), 10);

        let b = build_fock_basis(3, 0).unwrap();
        assert_eq!(b.dim(), 1);
        assert!(b.occupation(0).iter().all(|&n| n == 0));
    }

    #[test]
    fn enumeration_is_exhaustive_and_distinct() {
        // Brute force over all vectors with entries ≤ n_max.
        let (modes, n_max) = (2, 3);
        let b = build_fock_basis(modes, n_max).unwrap();
        let slots = 2 * modes;
        let mut count = 0;
        for code in 0..(n_max + 1).pow(slots as u32) {
            let occ: Vec<u8> = (0..slots)
                .map(|s| ((code / (n_max + 1).pow(s as u32)) % (n_max + 1)) as u8)
                .collect();
            if occ.iter().map(|&n| n as usize).sum::<usize>() <= n_max {
                count += 1;
                assert!(b.index_of(&occ).is_some());
            }
        }
        assert_eq!(count, b.dim());
        for i in 1..b.dim() {
            assert!(b.total(i - 1) <= b.total(i));
            if b.total(i - 1) == b.total(i) {
                assert!(b.occupation(i - 1) > b.occupation(i));
            }
        }
    }

    #[test]
    fn dimension_guard() {
        assert_eq!(fock_dimension(4, 2), Some(15));
        assert!(matches!(build_fock_basis(200, 4), Err(Error::Config(_))));
    }

    #[test]
    fn ladder_conventions() {
        let b = build_fock_basis(1, 3).unwrap();
        let i = b.index_of(&[2, 0]).unwrap();
        let mut psi = StateVector::zeros(b.dim());
        psi[i] = c(1.0, 0.0);
        let out = b.annihilate(0, &psi).unwrap();
        let t = b.index_of(&[1, 0]).unwrap();
        assert!((out[t] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((out.norm() - 2f64.sqrt()).abs() < 1e-15);

        let mut vac = StateVector::zeros(b.dim());
        vac[0] = c(1.0, 0.0);
        assert_eq!(b.annihilate(1, &vac).unwrap().norm(), 0.0);

        // Creation from the top sector is dropped.
        let top = b.index_of(&[0, 3]).unwrap();
        let mut psi = StateVector::zeros(b.dim());
        psi[top] = c(1.0, 0.0);
        assert_eq!(b.create(0, &psi).unwrap().norm(), 0.0);
    }

    #[test]
    fn ladder_adjointness_below_the_edge() {
        let b = build_fock_basis(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut psi = random_state(&mut rng, b.dim() * 2);
            let phi = random_state(&mut rng, b.dim() * 2);
            interior_only(&b, &mut psi);
            for j in 0..b.slots() {
                let lhs = b.create(j, &phi).unwrap().dotc(&psi);
                let rhs = phi.dotc(&b.annihilate(j, &psi).unwrap());
                assert!((lhs - rhs).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn d_gamma_examples() {
        let b = build_fock_basis(1, 3).unwrap();
        let op = b.d_gamma(&[0.5, 1.0]).unwrap();
        let i = b.index_of(&[1, 2]).unwrap();
        assert_eq!(op.get(i, i), c(2.5, 0.0));
        assert_eq!(op.get(0, 0), c(0.0, 0.0));
        assert_eq!(b.d_gamma(&[1.0, 1.0]).unwrap(), b.number_operator());
        assert!(matches!(b.d_gamma(&[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn number_operator_is_nonnegative() {
        let b = build_fock_basis(2, 2).unwrap();
        let n = b.number_operator();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = random_state(&mut rng, b.dim());
            let e = n.expectation(&u);
            assert!(e.re >= 0.0 && e.im.abs() < 1e-14);
        }
    }

    #[test]
    fn segal_field_examples() {
        let b = build_fock_basis(2, 2).unwrap();
        let zero = b.segal_field(&OnePhotonVector::zeros(4)).unwrap();
        assert_eq!(zero.nnz(), 0);

        let v = OnePhotonVector {
            coeffs: vec![c(0.3, -0.2), c(0.0, 1.1), c(-0.7, 0.0), c(0.25, 0.5)],
        };
        let phi = b.segal_field(&v).unwrap();
        assert!(phi.hermiticity_residual() <= 1e-15);
        let mut vac = StateVector::zeros(b.dim());
        vac[0] = c(1.0, 0.0);
        let pv = phi.apply(&vac);
        assert!((pv.norm_squared() - v.norm_sqr() / 2.0).abs() < 1e-14);

        assert!(matches!(
            b.segal_field(&OnePhotonVector::zeros(3)),
            Err(Error::Config(_))
        ));
    }
}
