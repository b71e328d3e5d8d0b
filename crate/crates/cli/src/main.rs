use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use photontail::asymptotics::decay_report;
use photontail::config::RunConfig;
use photontail::groundstate::{ground_state, GroundState};
use photontail::hamiltonian::{assemble, AssembledModel};
use photontail::pullthrough::{amplitude_bound, photon_amplitude, SpectralSurrogate};
use photontail::verify::run_suite;
use photontail::Error;

mod output;

#[derive(Parser)]
#[command(
    name = "photontail",
    version,
    about = "Spin-boson ground states and photon density asymptotics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state: writes ground.csv and ground_manifest.txt.
    Ground(Common),
    /// Photon amplitude a(k)U at one k, or CSV over a file of k vectors.
    Amplitude {
        #[command(flatten)]
        common: Common,
        /// kx,ky,kz
        #[arg(long, allow_hyphen_values = true, conflicts_with = "k_file")]
        k: Option<String>,
        /// One k per line, three floats separated by commas or whitespace.
        #[arg(long)]
        k_file: Option<PathBuf>,
    },
    /// Decay law and limit vector: writes decay.csv, limit.csv, manifest.txt.
    Asymptotics(Common),
    /// Runs every invariant check; exits 1 if any fails.
    Verify(Common),
}

enum Failure {
    Core(Error),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Io(_) => 2,
        Error::DegenerateGroundState { .. } => 3,
        Error::Solver { .. } | Error::Numerical { .. } | Error::Assembly { .. } => 4,
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.out));
    Ok((cfg, out))
}

fn solve(cfg: &RunConfig) -> Result<(AssembledModel, GroundState), Error> {
    let model = assemble(&cfg.model_config()?)?;
    let gs = ground_state(&model, &cfg.solver_options())?;
    Ok((model, gs))
}

fn parse_k(text: &str) -> Result<Vector3<f64>, Error> {
    let parts: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    let values: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Config(format!("cannot parse k vector '{text}'")))?;
    if values.len() != 3 {
        return Err(Error::Config(format!(
            "k vector needs three components, got '{text}'"
        )));
    }
    Ok(Vector3::new(values[0], values[1], values[2]))
}

fn read_k_file(path: &Path) -> Result<Vec<Vector3<f64>>, Error> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_k)
        .collect()
}

fn ground(common: &Common) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    let (model, gs) = solve(&cfg)?;
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("ground.csv"), output::ground_csv(&model, &gs))?;
    std::fs::write(
        out.join("ground_manifest.txt"),
        output::ground_manifest(&cfg, &model, &gs),
    )?;
    println!(
        "dim = {}\nenergy = {:.16e}\ngap = {:.16e}\nresidual = {:.3e}",
        model.dim(),
        gs.energy,
        gs.gap,
        gs.residual
    );
    Ok(())
}

fn amplitude(common: &Common, k: Option<&str>, k_file: Option<&Path>) -> Result<(), Failure> {
    let ks = match (k, k_file) {
        (Some(text), None) => vec![parse_k(text)?],
        (None, Some(path)) => read_k_file(path)?,
        _ => {
            return Err(
                Error::Config("amplitude needs exactly one of --k or --k-file".into()).into(),
            )
        }
    };
    let (cfg, _) = load(common)?;
    let (model, gs) = solve(&cfg)?;
    let s = SpectralSurrogate::from_model(&model, &gs, &cfg.solver_options())?;
    let mut rows = Vec::with_capacity(ks.len());
    for k in &ks {
        let a = photon_amplitude(&s, k)?;
        let bound = amplitude_bound(&s, k)?;
        rows.push((*k, a, bound));
    }
    if k_file.is_some() {
        print!("{}", output::amplitude_csv(&rows));
    } else {
        print!("{}", output::amplitude_summary(&rows[0]));
    }
    Ok(())
}

fn asymptotics(common: &Common) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    let (model, gs) = solve(&cfg)?;
    let s = SpectralSurrogate::from_model(&model, &gs, &cfg.solver_options())?;
    let report = decay_report(&s, &cfg.decay_options(&s))?;
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("decay.csv"), output::decay_csv(&report))?;
    std::fs::write(out.join("limit.csv"), output::limit_csv(&report))?;
    std::fs::write(
        out.join("manifest.txt"),
        output::asymptotics_manifest(&cfg, &model, &gs, &report),
    )?;
    println!(
        "kappa_measured = {:.9}\nkappa_oracle = {:.9}\nwrote {}",
        report.kappa_measured,
        report.kappa_oracle,
        out.display()
    );
    Ok(())
}

fn verify(common: &Common) -> Result<(), Failure> {
    let (cfg, _) = load(common)?;
    let (outcomes, report) = run_suite(&cfg)?;
    for o in &outcomes {
        println!("{o}");
    }
    println!(
        "kappa_measured = {:.9}, kappa_oracle = {:.9}, stated 3/sqrt2 = {:.9}, proof chain 3sqrt2/4 = {:.9}",
        report.kappa_measured,
        report.kappa_oracle,
        report.stated_constant,
        report.proof_chain_constant
    );
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ground(c) => ground(c),
        Command::Amplitude { common, k, k_file } => {
            amplitude(common, k.as_deref(), k_file.as_deref())
        }
        Command::Asymptotics(c) => asymptotics(c),
        Command::Verify(c) => verify(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
