//! Gauss–Legendre rules, spherical rules on S² and panelled 1D integration.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

/// A quadrature rule on the unit sphere. Weights sum to 4π.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub points: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    /// Highest spherical-harmonic degree integrated exactly.
    pub degree: usize,
}

impl SphereRule {
    /// Lebedev rules with 6, 14 or 26 points (degrees 3, 5, 7).
    pub fn lebedev(points: usize) -> Result<Self> {
        let (groups, degree) = match points {
            6 => (vec![(1.0 / 6.0, octahedron_vertices())], 3),
            14 => (
                vec![
                    (1.0 / 15.0, octahedron_vertices()),
                    (3.0 / 40.0, cube_corners()),
                ],
                5,
            ),
            26 => (
                vec![
                    (1.0 / 21.0, octahedron_vertices()),
                    (4.0 / 105.0, cube_edge_midpoints()),
                    (9.0 / 280.0, cube_corners()),
                ],
                7,
            ),
            other => {
                return Err(Error::config(format!(
                    "unsupported angular order {other} (supported: 6, 14, 26)"
                )))
            }
        };
        let mut pts = Vec::with_capacity(points);
        let mut wts = Vec::with_capacity(points);
        for (w, orbit) in groups {
            for p in orbit {
                pts.push(p);
                wts.push(w * 4.0 * PI);
            }
        }
        Ok(SphereRule {
            points: pts,
            weights: wts,
            degree,
        })
    }

    /// Gauss–Legendre in cos θ (n nodes) times the trapezoid rule in φ (2n
    /// nodes). Exact for spherical harmonics up to degree 2n − 1.
    pub fn product(n: usize) -> Self {
        let (ct, wt) = gauss_legendre(n);
        let n_phi = 2 * n;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n * n_phi);
        let mut weights = Vec::with_capacity(n * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                points.push(Vector3::new(s * phi.cos(), s * phi.sin(), *c));
                weights.push(w * dphi);
            }
        }
        SphereRule {
            points,
            weights,
            degree: 2 * n - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn octahedron_vertices() -> Vec<Vector3<f64>> {
    vec![
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(-1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
    ]
}

fn cube_edge_midpoints() -> Vec<Vector3<f64>> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(12);
    for s1 in [a, -a] {
        for s2 in [a, -a] {
            out.push(Vector3::new(s1, s2, 0.0));
            out.push(Vector3::new(s1, 0.0, s2));
            out.push(Vector3::new(0.0, s1, s2));
        }
    }
    out
}

fn cube_corners() -> Vec<Vector3<f64>> {
    let a = 1.0 / 3f64.sqrt();
    let mut out = Vec::with_capacity(8);
    for sx in [a, -a] {
        for sy in [a, -a] {
            for sz in [a, -a] {
                out.push(Vector3::new(sx, sy, sz));
            }
        }
    }
    out
}

/// Nodes and weights of a composite Gauss–Legendre rule over consecutive
/// panels given by `breaks` (ascending).
pub fn composite_rule(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let panels = breaks.len().saturating_sub(1);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for pair in breaks.windows(2) {
        let half = 0.5 * (pair[1] - pair[0]);
        let mid = 0.5 * (pair[1] + pair[0]);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(wi * half);
        }
    }
    (nodes, weights)
}
