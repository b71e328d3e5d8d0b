use num_complex::Complex64;
use photontail::asymptotics::fit_line;
use photontail::groundstate::{ground_state, ground_state_of, DenseEigensystem, SolverOptions};
use photontail::hamiltonian::{assemble, ModelConfig};
use photontail::modes::{build_mode_grid_with_frame, FrameRule};
use photontail::verify::{small_model_config, variational};

fn small() -> ModelConfig {
    small_model_config(&ModelConfig::desk_default()).unwrap()
}

/// E₂ = −Σ_{n>0} |⟨n|H_int|0⟩|² / (E_n − E₀) in the eigenbasis of H(0).
fn second_order_energy(cfg: &ModelConfig) -> (f64, f64) {
    let model = assemble(cfg).unwrap();
    let sys = DenseEigensystem::new(&model.h0);
    let ground = sys.vectors.column(0).into_owned();
    let hv = model.h_int.apply(&ground);
    let mut e2 = 0.0;
    for n in 1..sys.values.len() {
        let gap = sys.values[n] - sys.values[0];
        assert!(gap > 1e-6, "H(0) ground state must be simple");
        let amp: Complex64 = sys.vectors.column(n).dotc(&hv);
        e2 -= amp.norm_sqr() / gap;
    }
    (sys.values[0], e2)
}

#[test]
fn energy_shift_is_second_order() {
    let base = small();
    let opts = SolverOptions::default();
    let (e0, e2) = second_order_energy(&base);
    assert!(e2 < 0.0);
    let gs = [0.02, 0.04, 0.08];
    let mut shifts = Vec::new();
    for &g in &gs {
        let mut cfg = base.clone();
        cfg.g = g;
        let e = ground_state(&assemble(&cfg).unwrap(), &opts)
            .unwrap()
            .energy;
        assert!(e <= e0 + 1e-14, "E(g) above E(0) at g = {g}");
        let shift = e0 - e;
        let oracle = -g * g * e2;
        assert!(
            (shift - oracle).abs() <= 0.05 * oracle,
            "g = {g}: shift {shift:e} vs perturbative {oracle:e}"
        );
        shifts.push(shift);
    }
    let xs: Vec<f64> = gs.iter().map(|g: &f64| g.ln()).collect();
    let ys: Vec<f64> = shifts.iter().map(|s| s.ln()).collect();
    let fit = fit_line(&xs, &ys).unwrap();
    assert!(fit.slope >= 1.9, "exponent {}", fit.slope);
}

#[test]
fn polarization_frame_is_a_gauge_choice() {
    let base = small();
    let mut other = base.clone();
    other.grid = build_mode_grid_with_frame(
        1,
        6,
        6.0,
        FrameRule {
            primary: 0,
            fallback: 1,
        },
    )
    .unwrap();
    let (ha, hb) = (assemble(&base).unwrap().h, assemble(&other).unwrap().h);
    assert!(
        ha.max_abs_diff(&hb) > 1e-6,
        "frames should differ as matrices"
    );
    let a = DenseEigensystem::new(&ha);
    let b = DenseEigensystem::new(&hb);
    let worst = a
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-9, "spectra differ by {worst:e}");
}

#[test]
fn desk_ground_state_properties() {
    let model = assemble(&ModelConfig::desk_default()).unwrap();
    let opts = SolverOptions::default();
    let gs = ground_state(&model, &opts).unwrap();
    assert!(gs.residual <= opts.tol);
    assert!(gs.gap > 0.0);
    assert!((gs.vector.norm() - 1.0).abs() < 1e-12);

    let check = variational(&model, &gs, 20, opts.tol, 3);
    assert!(check.passed, "{check}");

    let n = model.number_operator();
    let nu = n.apply(&gs.vector);
    let first = gs.vector.dotc(&nu).re;
    let second = nu.norm_squared();
    assert!(first.is_finite() && second.is_finite());
    assert!(
        first > 0.0 && second > first,
        "⟨N⟩ = {first:e}, ⟨N²⟩ = {second:e}"
    );
}

#[test]
fn ground_state_of_rejects_degenerate_operator() {
    let mut cfg = small();
    cfg.bext = nalgebra::Vector3::zeros();
    cfg.g = 0.0;
    let model = assemble(&cfg).unwrap();
    let err = ground_state_of(&model.h, &SolverOptions::default()).unwrap_err();
    assert!(matches!(
        err,
        photontail::Error::DegenerateGroundState { .. }
    ));
}
