//! Flat `key = value` run configuration with `#` comments.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::Vector3;

use crate::asymptotics::{default_directions, kappa_oracle, log_radii, DecayOptions};
use crate::error::{Error, Result};
use crate::groundstate::SolverOptions;
use crate::hamiltonian::ModelConfig;
use crate::modes::{build_mode_grid, CutoffFamily, CutoffFunction};
use crate::pullthrough::SpectralSurrogate;

pub const KNOWN_KEYS: &[&str] = &[
    "modes.n_radial",
    "modes.angular_order",
    "modes.k_max",
    "chi.family",
    "chi.amplitude",
    "chi.scale",
    "fock.n_max",
    "spins.P",
    "spins.positions",
    "field.bext",
    "coupling.g",
    "solver.tol",
    "solver.dense_threshold",
    "asym.radii",
    "asym.directions",
    "asym.ahat_max_radius",
    "asym.kappa",
    "seed",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub enum RadiiSpec {
    /// lo:hi:n, log-spaced.
    LogSpaced {
        lo: f64,
        hi: f64,
        n: usize,
    },
    List(Vec<f64>),
}

impl RadiiSpec {
    pub fn radii(&self) -> Vec<f64> {
        match self {
            RadiiSpec::LogSpaced { lo, hi, n } => log_radii(*lo, *hi, *n),
            RadiiSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionsSpec {
    /// Parallel and perpendicular to S^[tot] plus four seeded random directions.
    Auto,
    List(Vec<Vector3<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_radial: usize,
    pub angular_order: usize,
    pub k_max: f64,
    pub chi: CutoffFunction,
    pub n_max: usize,
    pub positions: Vec<Vector3<f64>>,
    pub bext: Vector3<f64>,
    pub g: f64,
    pub tol: f64,
    pub dense_threshold: usize,
    pub radii: RadiiSpec,
    pub directions: DirectionsSpec,
    pub ahat_max_radius: f64,
    /// None selects the oracle value.
    pub kappa: Option<f64>,
    pub seed: u64,
    pub out: String,
    /// The text the configuration was parsed from.
    pub source: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_radial: 6,
            angular_order: 6,
            k_max: 6.0,
            chi: CutoffFunction::default(),
            n_max: 2,
            positions: vec![Vector3::zeros()],
            bext: Vector3::new(0.0, 0.0, 1.0),
            g: 0.05,
            tol: 1e-10,
            dense_threshold: 2000,
            radii: RadiiSpec::LogSpaced {
                lo: 1.0,
                hi: 1e4,
                n: 20,
            },
            directions: DirectionsSpec::Auto,
            ahat_max_radius: 1e4,
            kappa: None,
            seed: 7,
            out: "out".into(),
            source: String::new(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::config(format!("{key}: expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(Error::config(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::config(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_vec3(key: &str, v: &str) -> Result<Vector3<f64>> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::config(format!("{key}: expected x,y,z, got '{v}'")));
    }
    Ok(Vector3::new(
        parse_f64(key, parts[0])?,
        parse_f64(key, parts[1])?,
        parse_f64(key, parts[2])?,
    ))
}

fn parse_vec3_list(key: &str, v: &str) -> Result<Vec<Vector3<f64>>> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_vec3(key, s))
        .collect()
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig {
            source: text.to_string(),
            ..Default::default()
        };
        let mut seen = HashSet::new();
        let mut particles: Option<usize> = None;
        let mut positions_given = false;
        let (mut family, mut amplitude, mut scale) =
            (cfg.chi.family, cfg.chi.amplitude, cfg.chi.scale);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, v) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::config(format!(
                    "line {}: unknown key '{key}'",
                    lineno + 1
                )));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
            match key {
                "modes.n_radial" => cfg.n_radial = parse_usize(key, v)?,
                "modes.angular_order" => cfg.angular_order = parse_usize(key, v)?,
                "modes.k_max" => cfg.k_max = parse_f64(key, v)?,
                "chi.family" => {
                    family = match v {
                        "gaussian" => CutoffFamily::Gaussian,
                        "exponential" => CutoffFamily::Exponential,
                        _ => {
                            return Err(Error::config(format!(
                                "chi.family: expected gaussian or exponential, got '{v}'"
                            )))
                        }
                    }
                }
                "chi.amplitude" => amplitude = parse_f64(key, v)?,
                "chi.scale" => scale = parse_f64(key, v)?,
                "fock.n_max" => cfg.n_max = parse_usize(key, v)?,
                "spins.P" => particles = Some(parse_usize(key, v)?),
                "spins.positions" => {
                    cfg.positions = parse_vec3_list(key, v)?;
                    positions_given = true;
                }
                "field.bext" => cfg.bext = parse_vec3(key, v)?,
                "coupling.g" => cfg.g = parse_f64(key, v)?,
                "solver.tol" => cfg.tol = parse_f64(key, v)?,
                "solver.dense_threshold" => cfg.dense_threshold = parse_usize(key, v)?,
                "asym.radii" => cfg.radii = parse_radii(v)?,
                "asym.directions" => {
                    cfg.directions = if v == "auto" {
                        DirectionsSpec::Auto
                    } else {
                        let dirs = parse_vec3_list(key, v)?;
                        if dirs.is_empty() || dirs.iter().any(|d| d.norm() == 0.0) {
                            return Err(Error::config("asym.directions: vectors must be nonzero"));
                        }
                        DirectionsSpec::List(dirs.into_iter().map(|d| d.normalize()).collect())
                    }
                }
                "asym.ahat_max_radius" => cfg.ahat_max_radius = parse_f64(key, v)?,
                "asym.kappa" => {
                    cfg.kappa = if v == "oracle" {
                        None
                    } else {
                        Some(parse_f64(key, v)?)
                    }
                }
                "seed" => {
                    cfg.seed = v.parse().map_err(|_| {
                        Error::config(format!("seed: expected an integer, got '{v}'"))
                    })?
                }
                "out" => cfg.out = v.to_string(),
                _ => unreachable!("key list and match arms agree"),
            }
        }
        cfg.chi = CutoffFunction::new(family, amplitude, scale)?;
        match (particles, positions_given) {
            (Some(p), true) if p != cfg.positions.len() => {
                return Err(Error::config(format!(
                    "spins.P = {p} but spins.positions lists {} points",
                    cfg.positions.len()
                )))
            }
            (Some(p), false) => cfg.positions = vec![Vector3::zeros(); p],
            _ => {}
        }
        if !(cfg.tol > 0.0) {
            return Err(Error::config("solver.tol must be > 0"));
        }
        Ok(cfg)
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let cfg = ModelConfig {
            g: self.g,
            bext: self.bext,
            positions: self.positions.clone(),
            chi: self.chi,
            grid: build_mode_grid(self.n_radial, self.angular_order, self.k_max)?,
            n_max: self.n_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            dense_threshold: self.dense_threshold,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or_else(kappa_oracle)
    }

    pub fn decay_options(&self, s: &SpectralSurrogate) -> DecayOptions {
        DecayOptions {
            directions: match &self.directions {
                DirectionsSpec::Auto => default_directions(&s.total_spin(), 4, self.seed),
                DirectionsSpec::List(v) => v.clone(),
            },
            radii: self.radii.radii(),
            ahat_max_radius: self.ahat_max_radius,
            kappa: self.kappa(),
        }
    }
}

fn parse_radii(v: &str) -> Result<RadiiSpec> {
    let key = "asym.radii";
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::config("asym.radii: expected lo:hi:n"));
        }
        let lo = parse_f64(key, parts[0])?;
        let hi = parse_f64(key, parts[1])?;
        let n = parse_usize(key, parts[2])?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(Error::config("asym.radii: need 0 < lo < hi and n >= 2"));
        }
        Ok(RadiiSpec::LogSpaced { lo, hi, n })
    } else {
        let list = v
            .split(',')
            .map(|s| parse_f64(key, s.trim()))
            .collect::<Result<Vec<f64>>>()?;
        if list.len() < 2 || list[0] <= 0.0 || list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "asym.radii: list must be positive and strictly increasing",
            ));
        }
        Ok(RadiiSpec::List(list))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg.n_radial, 6);
        assert_eq!(cfg.radii.radii().len(), 20);
        assert_eq!(cfg.positions, vec![Vector3::zeros()]);
    }

    #[test]
    fn parses_every_key() {
        let text = "\
modes.n_radial = 2
modes.angular_order = 14
modes.k_max = 4.5   # trailing comment
chi.family = exponential
chi.amplitude = 0.5
chi.scale = 2
fock.n_max = 3
spins.P = 2
spins.positions = 0,0,0; 1,0.5,-1
field.bext = 0.1, 0.2, 1
coupling.g = 0.01
solver.tol = 1e-9
solver.dense_threshold = 500
asym.radii = 1, 10, 100
asym.directions = 0,0,2; 1,0,0
asym.ahat_max_radius = 100
asym.kappa = -1.5
seed = 42
out = results
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.angular_order, 14);
        assert_eq!(cfg.chi.family, CutoffFamily::Exponential);
        assert_eq!(cfg.positions[1], Vector3::new(1.0, 0.5, -1.0));
        assert_eq!(cfg.radii, RadiiSpec::List(vec![1.0, 10.0, 100.0]));
        assert_eq!(
            cfg.directions,
            DirectionsSpec::List(vec![Vector3::z(), Vector3::x()])
        );
        assert_eq!(cfg.kappa(), -1.5);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.source, text);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "modes.nradial = 3",
            "coupling.g = 0.1\ncoupling.g = 0.2",
            "coupling.g",
            "chi.family = lorentzian",
            "spins.P = 2\nspins.positions = 0,0,0",
            "asym.radii = 10:1:5",
            "solver.tol = 0",
            "field.bext = 1,2",
        ] {
            assert!(
                matches!(RunConfig::parse(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }
}
