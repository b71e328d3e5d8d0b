//! Discretized transverse one-photon space and the magnetic-field coupling
//! coefficients B_{m,x}(k).
//!
//! Momentum space is sampled by a product rule: Gauss–Legendre radial nodes on
//! (0, k_max] times a spherical rule. Each node carries two real polarization
//! vectors orthogonal to k, so a one-photon vector is a list of complex
//! coefficients indexed by slot = 2·node + polarization.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_on, SphereRule};

pub type CVector3 = Vector3<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffFamily {
    Gaussian,
    Exponential,
}

/// Ultraviolet cutoff χ(ρ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFunction {
    pub family: CutoffFamily,
    pub amplitude: f64,
    pub scale: f64,
}

impl Default for CutoffFunction {
    fn default() -> Self {
        CutoffFunction {
            family: CutoffFamily::Gaussian,
            amplitude: 1.0,
            scale: 1.0,
        }
    }
}

impl CutoffFunction {
    pub fn new(family: CutoffFamily, amplitude: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::config(format!(
                "cutoff scale must be > 0, got {scale}"
            )));
        }
        if !amplitude.is_finite() {
            return Err(Error::config("cutoff amplitude must be finite"));
        }
        Ok(CutoffFunction {
            family,
            amplitude,
            scale,
        })
    }

    /// The model cutoff χ(0)e^{−ρ} that shares this cutoff's value at zero.
    pub fn exponential_model(&self) -> Self {
        CutoffFunction {
            family: CutoffFamily::Exponential,
            amplitude: self.amplitude,
            scale: 1.0,
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let u = rho / self.scale;
        match self.family {
            CutoffFamily::Gaussian => self.amplitude * (-u * u).exp(),
            CutoffFamily::Exponential => self.amplitude * (-u).exp(),
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.amplitude
    }

    /// Radius beyond which χ(ρ)/χ(0) < e^{-45}.
    pub fn support_radius(&self) -> f64 {
        match self.family {
            CutoffFamily::Gaussian => self.scale * 45f64.sqrt(),
            CutoffFamily::Exponential => self.scale * 45.0,
        }
    }
}

/// Rule picking the reference axis used to build the polarization frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRule {
    /// Axis index 0..3 used as reference by default.
    pub primary: usize,
    /// Axis used when |k̂·e_primary| > 0.9.
    pub fallback: usize,
}

impl Default for FrameRule {
    fn default() -> Self {
        FrameRule {
            primary: 2,
            fallback: 0,
        }
    }
}

impl FrameRule {
    pub fn frame(&self, k: &Vector3<f64>) -> [Vector3<f64>; 2] {
        let khat = k.normalize();
        let axis = if khat[self.primary].abs() > 0.9 {
            self.fallback
        } else {
            self.primary
        };
        let a = unit_axis(axis);
        let e1 = a.cross(&khat).normalize();
        let e2 = khat.cross(&e1);
        [e1, e2]
    }
}

pub fn unit_axis(i: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[i] = 1.0;
    v
}

#[derive(Debug, Clone)]
pub struct ModeNode {
    pub k: Vector3<f64>,
    /// 3D quadrature weight including the ρ² Jacobian.
    pub weight: f64,
    pub omega: f64,
    pub pol: [Vector3<f64>; 2],
}

#[derive(Debug, Clone)]
pub struct ModeGrid {
    pub nodes: Vec<ModeNode>,
    pub k_max: f64,
}

impl ModeGrid {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of (node, polarization) slots.
    pub fn slot_count(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Frequencies per slot, ω_j = |k_j| repeated for both polarizations.
    pub fn slot_frequencies(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|n| [n.omega, n.omega]).collect()
    }

    pub fn min_frequency(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.omega)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

pub fn build_mode_grid(n_radial: usize, angular_order: usize, k_max: f64) -> Result<ModeGrid> {
    build_mode_grid_with_frame(n_radial, angular_order, k_max, FrameRule::default())
}

pub fn build_mode_grid_with_frame(
    n_radial: usize,
    angular_order: usize,
    k_max: f64,
    frame: FrameRule,
) -> Result<ModeGrid> {
    if n_radial == 0 {
        return Err(Error::config("modes.n_radial must be >= 1"));
    }
    if !(k_max > 0.0) || !k_max.is_finite() {
        return Err(Error::config(format!(
            "modes.k_max must be > 0, got {k_max}"
        )));
    }
    if frame.primary > 2 || frame.fallback > 2 || frame.primary == frame.fallback {
        return Err(Error::config("invalid polarization frame rule"));
    }
    let sphere = SphereRule::lebedev(angular_order)?;
    let (radii, rw) = gauss_legendre_on(n_radial, 0.0, k_max);
    let mut nodes = Vec::with_capacity(n_radial * sphere.len());
    for (rho, w) in radii.iter().zip(&rw) {
        for (dir, aw) in sphere.points.iter().zip(&sphere.weights) {
            let k = dir * *rho;
            nodes.push(ModeNode {
                k,
                weight: w * rho * rho * aw,
                omega: *rho,
                pol: frame.frame(&k),
            });
        }
    }
    Ok(ModeGrid { nodes, k_max })
}

/// Removes the component of `f` along `k`: f − k (f·k)/|k|².
pub fn transverse_project(k: &Vector3<f64>, f: &Vector3<f64>) -> Result<Vector3<f64>> {
    let k2 = k.norm_squared();
    if k2 == 0.0 {
        return Err(Error::domain("transverse projection undefined at k = 0"));
    }
    Ok(f - k * (f.dot(k) / k2))
}

/// B_{m,x}(k) = iχ(|k|)|k|^{1/2} (2π)^{−3/2} e^{−ik·x} (k × e_m)/|k|, axis m in 1..=3.
pub fn field_coefficient(
    m: usize,
    x: &Vector3<f64>,
    k: &Vector3<f64>,
    chi: &CutoffFunction,
) -> Result<CVector3> {
    if !(1..=3).contains(&m) {
        return Err(Error::domain(format!("axis index {m} outside 1..=3")));
    }
    let rho = k.norm();
    if rho == 0.0 {
        return Err(Error::domain("field coefficient undefined at k = 0"));
    }
    let scalar = chi.eval(rho) * rho.sqrt() / (2.0 * PI).powf(1.5);
    let phase = Complex64::from_polar(1.0, -k.dot(x)) * Complex64::i() * scalar;
    let dir = k.cross(&unit_axis(m - 1)) / rho;
    Ok(dir.map(|c| phase * c))
}

/// Complex coefficients over the grid's slots; slot j = 2·node + polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePhotonVector {
    pub coeffs: Vec<Complex64>,
}

impl OnePhotonVector {
    pub fn zeros(slots: usize) -> Self {
        OnePhotonVector {
            coeffs: vec![Complex64::new(0.0, 0.0); slots],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// ⟨self, other⟩, antilinear in `self`.
    pub fn inner(&self, other: &OnePhotonVector) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Samples B_{m,x} on the grid: c_{j,s} = √w_j ε_{j,s}·B_{m,x}(k_j).
pub fn embed_field(
    m: usize,
    x: &Vector3<f64>,
    grid: &ModeGrid,
    chi: &CutoffFunction,
) -> Result<OnePhotonVector> {
    let mut coeffs = Vec::with_capacity(grid.slot_count());
    for node in &grid.nodes {
        let b = field_coefficient(m, x, &node.k, chi)?;
        let sw = node.weight.sqrt();
        for eps in &node.pol {
            let proj = b.x * eps.x + b.y * eps.y + b.z * eps.z;
            coeffs.push(proj * sw);
        }
    }
    Ok(OnePhotonVector { coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cnorm(v: &CVector3) -> f64 {
        v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn single_shell_octahedral_grid() {
        let grid = build_mode_grid(1, 6, 1.0).unwrap();
        assert_eq!(grid.node_count(), 6);
        assert!(grid.nodes.iter().all(|n| (n.omega - 0.5).abs() < 1e-15));
        // One-point radial rule: k_max·(k_max/2)²·4π = π.
        assert_relative_eq!(grid.total_weight(), PI, epsilon = 1e-13);
    }

    #[test]
    fn ball_volume_from_weights() {
        // ∫_{|k|<=1} dk = 4π/3; the radial rule integrates ρ² exactly for n >= 2.
        for n in [2, 4, 7] {
            for ang in [6, 14, 26] {
                let grid = build_mode_grid(n, ang, 1.0).unwrap();
                assert_relative_eq!(grid.total_weight(), 4.0 * PI / 3.0, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn grid_frames_are_transverse_and_complete() {
        let grid = build_mode_grid(5, 26, 3.0).unwrap();
        for node in &grid.nodes {
            assert!(node.omega > 0.0);
            let [e1, e2] = node.pol;
            assert!(e1.dot(&e2).abs() <= 1e-12);
            assert!((e1.norm() - 1.0).abs() <= 1e-12);
            assert!((e2.norm() - 1.0).abs() <= 1e-12);
            assert!(e1.dot(&node.k).abs() <= 1e-12);
            assert!(e2.dot(&node.k).abs() <= 1e-12);
            let kh = node.k.normalize();
            let sum = e1 * e1.transpose() + e2 * e2.transpose() + kh * kh.transpose();
            assert!((sum - nalgebra::Matrix3::identity()).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn grid_rejects_bad_configuration() {
        assert!(matches!(build_mode_grid(2, 5, 1.0), Err(Error::Config(_))));
        assert!(matches!(build_mode_grid(2, 6, 0.0), Err(Error::Config(_))));
        assert!(matches!(build_mode_grid(2, 6, -1.0), Err(Error::Config(_))));
        assert!(matches!(build_mode_grid(0, 6, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn transverse_projection_examples() {
        let p =
            transverse_project(&Vector3::new(0.0, 0.0, 1.0), &Vector3::new(1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(p, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);

        let k = Vector3::new(1.0, 1.0, 0.0) / 2f64.sqrt();
        let p = transverse_project(&k, &Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(p, Vector3::new(0.5, -0.5, 0.0), epsilon = 1e-15);

        let f = Vector3::new(0.0, 2.0, -1.0);
        let p = transverse_project(&Vector3::new(3.0, 0.0, 0.0), &f).unwrap();
        assert_eq!(p, f);

        assert!(matches!(
            transverse_project(&Vector3::zeros(), &f),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn field_coefficient_examples() {
        let chi = CutoffFunction::default();
        let k = Vector3::new(0.0, 0.0, 1.0);
        let b = field_coefficient(1, &Vector3::zeros(), &k, &chi).unwrap();
        // i e^{-1} (2π)^{-3/2} (e3 × e1 = e2)
        let expected = (-1f64).exp() / 15.749609945722419;
        assert!(b.x.norm() < 1e-16 && b.z.norm() < 1e-16);
        assert!(b.y.re.abs() < 1e-16);
        assert_relative_eq!(b.y.im, expected, max_relative = 1e-14);
        assert_relative_eq!(b.y.im, 0.023358, epsilon = 1e-6);

        let b3 = field_coefficient(3, &Vector3::new(0.3, 0.1, 0.0), &k, &chi).unwrap();
        assert!(cnorm(&b3) == 0.0);

        assert!(matches!(
            field_coefficient(1, &Vector3::zeros(), &Vector3::zeros(), &chi),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            field_coefficient(4, &Vector3::zeros(), &k, &chi),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn embed_zero_amplitude_gives_zero() {
        let grid = build_mode_grid(3, 14, 4.0).unwrap();
        let chi = CutoffFunction::new(CutoffFamily::Gaussian, 0.0, 1.0).unwrap();
        let v = embed_field(2, &Vector3::new(1.0, 0.0, 0.0), &grid, &chi).unwrap();
        assert!(v.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn embed_translation_is_phase_only() {
        let grid = build_mode_grid(3, 14, 4.0).unwrap();
        let chi = CutoffFunction::default();
        let x = Vector3::new(0.7, -0.2, 1.1);
        let a = embed_field(1, &Vector3::zeros(), &grid, &chi).unwrap();
        let b = embed_field(1, &x, &grid, &chi).unwrap();
        let c = embed_field(1, &(-x), &grid, &chi).unwrap();
        for ((a, b), c) in a.coeffs.iter().zip(&b.coeffs).zip(&c.coeffs) {
            assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-13);
            // The leading factor i makes c_{-x} = -conj(c_x).
            assert!((c + b.conj()).norm() <= 1e-15);
        }
    }

    /// Independent oracle: ∫|B_{m,0}(k)|² dk = (2π)^{-3} ∫χ(ρ)²ρ³dρ · ∫_{S²}|ω×e_m|² dμ,
    /// with the angular factor 8π/3, radial integral by a fine GL rule.
    #[test]
    fn embed_norm_converges_to_radial_reduction() {
        let chi = CutoffFunction::default();
        let (x, w) = crate::quadrature::gauss_legendre_on(200, 0.0, 12.0);
        let radial: f64 = x
            .iter()
            .zip(&w)
            .map(|(r, w)| w * chi.eval(*r).powi(2) * r.powi(3))
            .sum();
        let exact = radial * (8.0 * PI / 3.0) / (2.0 * PI).powi(3);
        let mut prev = f64::INFINITY;
        for n in [4, 8, 16, 32] {
            let grid = build_mode_grid(n, 14, 6.0).unwrap();
            let v = embed_field(2, &Vector3::zeros(), &grid, &chi).unwrap();
            let err = (v.norm_sqr() - exact).abs() / exact;
            assert!(err < prev, "n={n} err={err}");
            prev = err;
        }
        assert!(prev < 1e-9, "final relative error {prev}");
    }

    proptest! {
        #[test]
        fn transverse_projection_is_idempotent_and_symmetric(
            k in prop::array::uniform3(-3.0f64..3.0),
            f in prop::array::uniform3(-3.0f64..3.0),
            g in prop::array::uniform3(-3.0f64..3.0),
        ) {
            let k = Vector3::from(k);
            prop_assume!(k.norm() > 1e-3);
            let f = Vector3::from(f);
            let g = Vector3::from(g);
            let p = transverse_project(&k, &f).unwrap();
            let pp = transverse_project(&k, &p).unwrap();
            prop_assert!((p - pp).norm() <= 1e-12 * (1.0 + f.norm()));
            prop_assert!(p.dot(&k).abs() <= 1e-12 * (1.0 + f.norm() * k.norm()));
            let pg = transverse_project(&k, &g).unwrap();
            prop_assert!((p.dot(&g) - f.dot(&pg)).abs() <= 1e-12 * (1.0 + f.norm() * g.norm()));
        }

        #[test]
        fn field_coefficient_is_transverse(
            m in 1usize..=3,
            x in prop::array::uniform3(-5.0f64..5.0),
            k in prop::array::uniform3(-4.0f64..4.0),
        ) {
            let k = Vector3::from(k);
            prop_assume!(k.norm() > 1e-3);
            let b = field_coefficient(m, &Vector3::from(x), &k, &CutoffFunction::default()).unwrap();
            let dot = b.x * k.x + b.y * k.y + b.z * k.z;
            prop_assert!(dot.norm() <= 1e-14 * (cnorm(&b) * k.norm()).max(1e-300));
        }

        #[test]
        fn embed_field_is_linear_in_amplitude(a in -3.0f64..3.0) {
            let grid = build_mode_grid(2, 6, 3.0).unwrap();
            let x = Vector3::new(0.2, 0.4, -0.1);
            let unit = embed_field(3, &x, &grid, &CutoffFunction::default()).unwrap();
            let chi = CutoffFunction::new(CutoffFamily::Gaussian, a, 1.0).unwrap();
            let scaled = embed_field(3, &x, &grid, &chi).unwrap();
            for (u, s) in unit.coeffs.iter().zip(&scaled.coeffs) {
                prop_assert!((u * a - s).norm() <= 1e-15 * (1.0 + u.norm()));
            }
        }
    }
}
