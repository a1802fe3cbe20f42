use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use spinstar_core::experiments::{self, SweepConfig};
use spinstar_core::grape::{self, ControlProblem, FidelityKind, RunConfig, TargetGate};
use spinstar_core::lie::{self, ClosureSettings, LieReport, Probe};
use spinstar_core::{CouplingScheme, Error, Result, SpinStarSystem};

#[derive(Parser)]
#[command(name = "spinstar", version, about = "Controllability and gate-time tools for the spin-star model")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: $SPINSTAR_THREADS, then one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fidelity to optimize.
    #[arg(long, global = true)]
    fidelity: Option<FidelityKind>,
    /// Largest accepted Hilbert-space dimension.
    #[arg(long, global = true)]
    dim_cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension of the dynamical Lie algebra versus its closed form.
    LieDim(LieArgs),
    /// Membership and depth of probe operators in the Lie algebra.
    Membership(LieArgs),
    /// Check the equal-coupling basis elements up to a given order.
    VerifyAppendixA(AppendixArgs),
    /// Multi-start pulse optimization for one driving time.
    Optimize(OptimizeArgs),
    /// Fidelity-versus-time sweep and minimum gate time estimates.
    Sweep,
    /// Genericity assumptions on a list of couplings.
    CheckCouplings(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Equal,
    Different,
    Random,
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// Number of bath spins.
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Comma-separated couplings for `--scheme different`.
    #[arg(long, value_delimiter = ',')]
    couplings: Option<Vec<f64>>,
    /// Common coupling for `--scheme equal`.
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    /// Divide every coupling by √N.
    #[arg(long)]
    rescale: bool,
}

#[derive(Args)]
struct LieArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Probes such as `sx`, `sz`, `sx1` or `jz`.
    #[arg(long, value_delimiter = ',')]
    probe: Option<Vec<String>>,
    /// Relative residual below which a probe counts as contained.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct AppendixArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Largest `l + k + s`.
    #[arg(long, default_value_t = 3)]
    max_order: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Hadamard,
    Pi8,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Driving time, a multiple of the slice duration.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, value_enum)]
    gate: Option<GateArg>,
    /// Slice duration.
    #[arg(long)]
    dt: Option<f64>,
    /// Amplitude bound |B_m| ≤ B_max.
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Write the per-iteration trace as JSON lines.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    system: SystemArgs,
}

/// `--config` contents for the single-system commands.
#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SystemFile {
    n_bath: Option<usize>,
    couplings: Option<CouplingScheme>,
    closure: Option<ClosureSettings>,
    target: Option<TargetGate>,
    tau: Option<f64>,
    run: Option<RunConfig>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn read_config_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))
}

fn load_system_file(cli: &Cli) -> Result<SystemFile> {
    match &cli.config {
        None => Ok(SystemFile::default()),
        Some(p) => serde_json::from_str(&read_config_file(p)?).map_err(|e| config_error(format!("{}: {e}", p.display()))),
    }
}

/// Couplings `1, 1.5, 1.5², …`, which satisfy the genericity assumptions.
fn geometric_couplings(n: usize) -> Vec<f64> {
    (0..n).map(|k| 1.5f64.powi(k as i32)).collect()
}

fn build_system(cli: &Cli, args: &SystemArgs, file: &SystemFile) -> Result<SpinStarSystem> {
    let n = args
        .n
        .or(file.n_bath)
        .or(args.couplings.as_ref().map(Vec::len))
        .ok_or_else(|| config_error("number of bath spins missing (use --n)"))?;
    let mut scheme = match (args.scheme, &file.couplings) {
        (None, Some(s)) => s.clone(),
        (None, None) => match &args.couplings {
            Some(v) => CouplingScheme::different(v.clone()),
            None => CouplingScheme::equal(args.coupling),
        },
        (Some(SchemeArg::Equal), _) => CouplingScheme::equal(args.coupling),
        (Some(SchemeArg::Different), _) => {
            CouplingScheme::different(args.couplings.clone().unwrap_or_else(|| geometric_couplings(n)))
        }
        (Some(SchemeArg::Random), _) => CouplingScheme::random_uniform(cli.seed.unwrap_or(0)),
    };
    if args.rescale {
        scheme.rescale = true;
    }
    SpinStarSystem::new(n, scheme)
}

fn closure_settings(cli: &Cli, file: &SystemFile) -> ClosureSettings {
    let mut s = file.closure.unwrap_or_default();
    if let Some(cap) = cli.dim_cap {
        s.max_hilbert_dim = cap;
    }
    s
}

fn emit<T: Serialize>(cli: &Cli, file_name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file_name), text + "\n")?;
    }
    Ok(())
}

fn lie_report(cli: &Cli, args: &LieArgs, default_probes: &[&str], file_name: &str) -> Result<()> {
    let file = load_system_file(cli)?;
    let sys = build_system(cli, &args.system, &file)?;
    let closure = lie::closure_for_system::<f64>(&sys, &closure_settings(cli, &file))?;
    let names: Vec<String> = match &args.probe {
        Some(p) => p.clone(),
        None => default_probes
            .iter()
            .filter(|p| sys.n_bath() > 0 || !p.ends_with('1'))
            .map(|p| p.to_string())
            .collect(),
    };
    let probes = names.iter().map(|p| Probe::parse(p)).collect::<Result<Vec<_>>>()?;
    let mut report = LieReport::new(&sys, &closure);
    report.probe(&sys, &closure, &probes, args.tol)?;
    emit(cli, file_name, &report)
}

fn verify_appendix(cli: &Cli, args: &AppendixArgs) -> Result<bool> {
    let file = load_system_file(cli)?;
    let sys = build_system(cli, &args.system, &file)?;
    let closure = lie::closure_for_system::<f64>(&sys, &closure_settings(cli, &file))?;
    let report = lie::verify_equal_coupling_basis(&sys, &closure, args.max_order, args.tol)?;
    emit(cli, "appendix_a.json", &report)?;
    Ok(report.all_contained)
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    n_bath: usize,
    couplings: &'a [f64],
    gate: &'a str,
    fidelity: FidelityKind,
    tau: f64,
    slices: usize,
    seed: u64,
    best_fidelity: f64,
    mean_fidelity: f64,
    best_restart: Option<usize>,
    restarts: &'a [grape::RestartOutcome],
}

fn optimize(cli: &Cli, args: &OptimizeArgs) -> Result<()> {
    let file = load_system_file(cli)?;
    let sys = build_system(cli, &args.system, &file)?;
    if sys.dim() > cli.dim_cap.unwrap_or(128) {
        return Err(Error::ResourceLimit(format!("Hilbert dimension {} above the cap", sys.dim())));
    }
    let mut run = file.run.clone().unwrap_or_default();
    if let Some(f) = cli.fidelity {
        run.fidelity = f;
    }
    if let Some(s) = cli.seed {
        run.seed = s;
    }
    if let Some(r) = args.restarts {
        run.restarts = r;
    }
    if let Some(dt) = args.dt {
        run.dt = dt;
    }
    if let Some(b) = args.bound {
        run.optimizer.amplitude_bound = Some(b);
    }
    if let Some(m) = args.max_iter {
        run.optimizer.max_iterations = m;
    }
    run.optimizer.record_trace |= args.trace;
    let target = match args.gate {
        Some(GateArg::Hadamard) => TargetGate::hadamard(),
        Some(GateArg::Pi8) => TargetGate::pi8(),
        None => file.target.clone().unwrap_or_else(TargetGate::hadamard),
    };
    let tau = args.tau.or(file.tau).ok_or_else(|| config_error("driving time missing (use --tau)"))?;

    let problem = ControlProblem::<f64>::new(&sys);
    let result = grape::optimize(&problem, &target, tau, &run)?;
    let summary = OptimizeSummary {
        n_bath: sys.n_bath(),
        couplings: sys.couplings(),
        gate: target.gate.label(),
        fidelity: result.fidelity,
        tau,
        slices: result.slices,
        seed: result.seed,
        best_fidelity: result.best_fidelity,
        mean_fidelity: result.mean_fidelity(),
        best_restart: result.best_restart,
        restarts: &result.restarts,
    };
    emit(cli, "optimize.json", &summary)?;
    if let Some(dir) = &cli.out {
        if let Some(p) = &result.best_pulse {
            p.write_csv(fs::File::create(dir.join("best_pulse.csv"))?)?;
            let mut f = fs::File::create(dir.join("best_pulse.json"))?;
            serde_json::to_writer_pretty(&mut f, &p.to_json())?;
            f.write_all(b"\n")?;
        }
        if run.optimizer.record_trace {
            result.write_trace_jsonl(std::io::BufWriter::new(fs::File::create(dir.join("trace.jsonl"))?))?;
        }
    }
    Ok(())
}

fn sweep(cli: &Cli) -> Result<()> {
    let path = cli.config.as_ref().ok_or_else(|| config_error("sweep needs --config <json>"))?;
    let mut config = SweepConfig::from_json(&read_config_file(path)?)?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(f) = cli.fidelity {
        config.fidelity = f;
    }
    if let Some(c) = cli.dim_cap {
        config.dim_cap = c;
    }
    config.validate()?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let result = experiments::run_sweep_with::<f64>(&config, |c| {
        eprintln!(
            "N={} tau={} best={:.6} mean={:.6} restarts={}",
            c.n_bath, c.tau, c.best_fidelity, c.mean_fidelity, c.restarts
        );
    })?;
    result.write_outputs(&out, &config.output)?;
    println!("{}", serde_json::to_string_pretty(&result.summary())?);
    Ok(())
}

fn check_couplings(cli: &Cli, args: &CheckArgs) -> Result<()> {
    let couplings = match (&args.system.couplings, args.system.n, args.system.scheme) {
        (Some(v), None, None) => v.clone(),
        _ => {
            let file = load_system_file(cli)?;
            build_system(cli, &args.system, &file)?.couplings().to_vec()
        }
    };
    emit(cli, "couplings.json", &lie::coupling_assumptions_check(&couplings))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::LieDim(a) => lie_report(cli, a, &["sx", "sy", "sz"], "lie_dim.json")?,
        Command::Membership(a) => lie_report(cli, a, &["sx", "sy", "sz", "sx1"], "membership.json")?,
        Command::VerifyAppendixA(a) => {
            if !verify_appendix(cli, a)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Optimize(a) => optimize(cli, a)?,
        Command::Sweep => sweep(cli)?,
        Command::CheckCouplings(a) => check_couplings(cli, a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ResourceLimit(_) => 3,
        Error::InvalidConfig(_)
        | Error::Json(_)
        | Error::EmptyBath
        | Error::NotEqualCouplings
        | Error::NotUnitary { .. }
        | Error::DimensionMismatch { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = experiments::thread_pool(cli.threads).and_then(|pool| pool.install(|| run(&cli)));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
