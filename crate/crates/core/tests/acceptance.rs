//! One PASS/FAIL line per acceptance criterion, with wall-clock budgets.

use std::time::{Duration, Instant};

use nalgebra::Vector3;

use photontail::asymptotics::{decay_report, DecayOptions, PROOF_CHAIN_CONSTANT, STATED_CONSTANT};
use photontail::config::RunConfig;
use photontail::fixture::random_surrogate;
use photontail::groundstate::ground_state;
use photontail::hamiltonian::assemble;
use photontail::pullthrough::SpectralSurrogate;
use photontail::verify::{self, CheckOutcome};

const SEED: u64 = 7;

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Duration,
    elapsed: Duration,
    checks: Vec<CheckOutcome>,
    extra: Option<String>,
}

impl Criterion {
    fn passed(&self) -> bool {
        self.elapsed < self.budget && self.checks.iter().all(|c| c.passed)
    }

    fn line(&self) -> String {
        let checks: Vec<String> = self.checks.iter().map(|c| c.to_string()).collect();
        let mut line = format!(
            "{} criterion {} ({}) [{:.2} s, budget {} s]: {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            checks.join(" | ")
        );
        if let Some(extra) = &self.extra {
            line.push_str(" | ");
            line.push_str(extra);
        }
        line
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[test]
fn acceptance() {
    let cfg = RunConfig::default();
    let opts = cfg.solver_options();
    let model_cfg = cfg.model_config().unwrap();
    let mut criteria = Vec::new();
    let mut push = |id, title, budget: u64, elapsed, checks, extra| {
        let c = Criterion {
            id,
            title,
            budget: Duration::from_secs(budget),
            elapsed,
            checks,
            extra,
        };
        println!("{}", c.line());
        criteria.push(c);
    };

    let (check, t) = timed(|| verify::operator_algebra(2, 3, 100, SEED).unwrap());
    push(1, "operator algebra", 10, t, vec![check], None);

    let ((model, gs, check), t) = timed(|| {
        let model = assemble(&model_cfg).unwrap();
        let gs = ground_state(&model, &opts).unwrap();
        let check = verify::number_identity(&model, &gs).unwrap();
        (model, gs, check)
    });
    push(
        2,
        "number identity",
        60,
        t,
        vec![check],
        Some(format!(
            "dim {}, E = {:.15e}, gap = {:.6e}",
            model.dim(),
            gs.energy,
            gs.gap
        )),
    );

    let s = SpectralSurrogate::from_model(&model, &gs, &opts).unwrap();
    let (checks, t) = timed(|| {
        let mut small = verify::small_model_config(&model_cfg).unwrap();
        small.g = 0.05;
        vec![
            verify::amplitude_bound_check(&s, 20, 10, SEED).unwrap(),
            verify::truncation_sweep(&small, &[1, 2, 3], 0, &opts).unwrap(),
        ]
    });
    push(3, "pull-through bound and truncation", 300, t, checks, None);

    let (checks, t) = timed(|| {
        let fixture = random_surrogate(50, SEED, model_cfg.g).unwrap();
        vec![
            verify::projection_limit(&fixture, SEED).unwrap(),
            verify::contraction(&fixture, 50, SEED).unwrap(),
        ]
    });
    push(4, "projection limit and contraction", 10, t, checks, None);

    let (check, t) = timed(|| verify::sphere_identity(SEED));
    push(5, "sphere identity", 10, t, vec![check], None);

    let (check, t) = timed(|| {
        let mut small = verify::small_model_config(&model_cfg).unwrap();
        small.positions = vec![Vector3::zeros(), Vector3::new(0.4, -0.3, 0.25)];
        let model = assemble(&small).unwrap();
        assert!(model.dim() <= 500);
        let gs = ground_state(&model, &opts).unwrap();
        let s = SpectralSurrogate::from_model(&model, &gs, &opts).unwrap();
        verify::reduction_oracle(&s, &[1.0, 5.0], SEED).unwrap()
    });
    push(6, "reduction oracle, two spins", 600, t, vec![check], None);

    let (check, t) = timed(|| verify::contour_identity(&s, &[10.0, 30.0, 100.0]).unwrap());
    push(7, "contour identity", 300, t, vec![check], None);

    let (report, t) = timed(|| decay_report(&s, &DecayOptions::defaults(&s, SEED)).unwrap());
    push(
        8,
        "error lemma",
        600,
        t,
        vec![verify::error_lemma(&report)],
        None,
    );
    push(
        9,
        "decay law",
        600,
        Duration::ZERO,
        vec![verify::decay_part1(&report)],
        Some("shares the decay report of criterion 8".into()),
    );
    push(
        10,
        "limit vector",
        1800,
        t,
        vec![verify::decay_part2(&report)],
        Some(format!(
            "κ_oracle = {:.9}, κ_measured = {:.9}, 3/√2 = {:.9}, 3√2/4 = {:.9}",
            report.kappa_oracle, report.kappa_measured, STATED_CONSTANT, PROOF_CHAIN_CONSTANT
        )),
    );

    let failed: Vec<usize> = criteria
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.id)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
