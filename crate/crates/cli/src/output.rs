//! Text artifacts. Floats carry 17 significant digits; nothing depends on the
//! clock or the environment, so reruns are byte-identical.

use std::fmt::Write;

use nalgebra::Vector3;

use photontail::asymptotics::{AsymptoticsReport, LineFit};
use photontail::config::RunConfig;
use photontail::groundstate::{GroundState, PHASE_CONVENTION};
use photontail::hamiltonian::AssembledModel;
use photontail::pullthrough::AmplitudeVector;

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn vec3(v: &Vector3<f64>) -> String {
    format!("{},{},{}", sci(v[0]), sci(v[1]), sci(v[2]))
}

/// Particle 1 is the slowest spin index; index bit 0 is up.
fn spin_label(index: usize, particles: usize) -> String {
    (0..particles)
        .map(|p| {
            if index >> (particles - 1 - p) & 1 == 0 {
                'u'
            } else {
                'd'
            }
        })
        .collect()
}

pub fn ground_csv(model: &AssembledModel, gs: &GroundState) -> String {
    let mut out = String::from("index,occupation,spin,re,im\n");
    let spin = model.spin_dim;
    for (i, z) in gs.vector.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            i,
            model.basis.occupation_label(i / spin),
            spin_label(i % spin, model.particles()),
            sci(z.re),
            sci(z.im)
        )
        .unwrap();
    }
    out
}

fn header(
    out: &mut String,
    command: &str,
    cfg: &RunConfig,
    model: &AssembledModel,
    gs: &GroundState,
) {
    writeln!(out, "code_version = {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "command = {command}").unwrap();
    writeln!(out, "seed = {}", cfg.seed).unwrap();
    writeln!(out, "dim = {}", model.dim()).unwrap();
    writeln!(out, "fock_dim = {}", model.basis.dim()).unwrap();
    writeln!(out, "slots = {}", model.basis.slots()).unwrap();
    writeln!(out, "energy = {}", sci(gs.energy)).unwrap();
    writeln!(out, "gap = {}", sci(gs.gap)).unwrap();
    writeln!(out, "residual = {}", sci(gs.residual)).unwrap();
    writeln!(out, "phase_convention = {PHASE_CONVENTION}").unwrap();
}

fn config_echo(out: &mut String, cfg: &RunConfig) {
    out.push_str("\n[config]\n");
    out.push_str(&cfg.source);
    if !cfg.source.is_empty() && !cfg.source.ends_with('\n') {
        out.push('\n');
    }
}

pub fn ground_manifest(cfg: &RunConfig, model: &AssembledModel, gs: &GroundState) -> String {
    let mut out = String::new();
    header(&mut out, "ground", cfg, model, gs);
    config_echo(&mut out, cfg);
    out
}

pub fn amplitude_summary((k, a, bound): &(Vector3<f64>, AmplitudeVector, f64)) -> String {
    let mut out = String::new();
    writeln!(out, "k = {}", vec3(k)).unwrap();
    writeln!(out, "abs_k = {}", sci(k.norm())).unwrap();
    writeln!(out, "norm = {}", sci(a.norm())).unwrap();
    for (i, c) in a.components.iter().enumerate() {
        writeln!(out, "norm_component_{} = {}", i + 1, sci(c.norm())).unwrap();
    }
    writeln!(out, "bound = {}", sci(*bound)).unwrap();
    writeln!(out, "within_bound = {}", a.norm() <= *bound).unwrap();
    out
}

pub fn amplitude_csv(rows: &[(Vector3<f64>, AmplitudeVector, f64)]) -> String {
    let mut out = String::from("kx,ky,kz,norm,bound\n");
    for (k, a, bound) in rows {
        writeln!(out, "{},{},{}", vec3(k), sci(a.norm()), sci(*bound)).unwrap();
    }
    out
}

pub fn decay_csv(report: &AsymptoticsReport) -> String {
    let mut out =
        String::from("radius,dir_index,norm_ahat,norm_b,scaled_norm_b,err_lemma_product\n");
    for s in &report.samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            sci(s.radius),
            s.dir_index,
            opt(s.norm_ahat),
            sci(s.norm_b),
            sci(s.scaled_norm_b),
            opt(s.err_lemma_product)
        )
        .unwrap();
    }
    out
}

pub fn limit_csv(report: &AsymptoticsReport) -> String {
    let mut out = String::from(
        "dir_index,vx,vy,vz,cross_norm,limit_norm,l1_re,l1_im,l2_re,l2_im,l3_re,l3_im,\
         kappa_measured,kappa_signed,kappa_used,prediction_rel_error,cosine\n",
    );
    for (i, d) in report.directions.iter().enumerate() {
        let p = &d.limit_pattern;
        let fields = [
            i.to_string(),
            vec3(&d.direction),
            sci(d.cross_norm),
            sci(d.limit_norm),
            sci(p[0].re),
            sci(p[0].im),
            sci(p[1].re),
            sci(p[1].im),
            sci(p[2].re),
            sci(p[2].im),
            sci(d.kappa_measured),
            sci(d.kappa_signed),
            sci(report.kappa_used),
            sci(d.prediction_rel_error),
            sci(d.cosine),
        ];
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    out
}

fn fit_lines(out: &mut String, key: &str, fit: Option<LineFit>) {
    match fit {
        Some(f) => {
            writeln!(out, "{key}.slope = {}", sci(f.slope)).unwrap();
            writeln!(out, "{key}.half_width_95 = {}", sci(f.half_width_95)).unwrap();
            writeln!(out, "{key}.rms_residual = {}", sci(f.rms_residual)).unwrap();
        }
        None => writeln!(out, "{key} = none").unwrap(),
    }
}

pub fn asymptotics_manifest(
    cfg: &RunConfig,
    model: &AssembledModel,
    gs: &GroundState,
    report: &AsymptoticsReport,
) -> String {
    let mut out = String::new();
    header(&mut out, "asymptotics", cfg, model, gs);
    writeln!(out, "total_spin = {}", vec3(&report.total_spin)).unwrap();
    writeln!(out, "kappa_used = {}", sci(report.kappa_used)).unwrap();
    writeln!(out, "kappa_oracle = {}", sci(report.kappa_oracle)).unwrap();
    writeln!(out, "kappa_measured = {}", sci(report.kappa_measured)).unwrap();
    writeln!(out, "stated_constant = {}", sci(report.stated_constant)).unwrap();
    writeln!(
        out,
        "proof_chain_constant = {}",
        sci(report.proof_chain_constant)
    )
    .unwrap();
    writeln!(out, "asymptotic_regime = {}", report.asymptotic).unwrap();
    for (i, d) in report.directions.iter().enumerate() {
        let key = format!("dir.{i}");
        writeln!(out, "{key}.direction = {}", vec3(&d.direction)).unwrap();
        if let Some(f) = d.b_fit {
            writeln!(out, "{key}.density_exponent = {}", sci(2.0 * f.slope)).unwrap();
        }
        fit_lines(&mut out, &format!("{key}.norm_b_fit"), d.b_fit);
        fit_lines(&mut out, &format!("{key}.scaled_norm_b_fit"), d.scaled_fit);
        fit_lines(&mut out, &format!("{key}.error_lemma_fit"), d.lemma_fit);
        writeln!(
            out,
            "{key}.ahat_scaled_peak_ratio = {}",
            opt(d.ahat_scaled_peak_ratio)
        )
        .unwrap();
    }
    config_echo(&mut out, cfg);
    out
}
