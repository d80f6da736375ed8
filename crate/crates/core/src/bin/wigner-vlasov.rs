use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wigner_vlasov::harness::{self, ExperimentKind, ExperimentSpec, RunContext, TolProfile};

#[derive(Parser)]
#[command(name = "wigner-vlasov", version, about = "Wigner / Vlasov-Benney experiments and stability scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the Wigner equation once per configured eps.
    EvolveWigner(RunArgs),
    /// Evolve the Vlasov-Benney equation.
    EvolveVlasov(RunArgs),
    /// Eps sweep against the Vlasov-Benney reference.
    Converge(RunArgs),
    /// Penrose margin scan.
    Penrose(RunArgs),
    /// Bicharacteristic and phase checks on a lattice.
    Eikonal(RunArgs),
    /// Run the invariant suite.
    Check(CheckArgs),
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Overrides the tolerance preset of the config file.
    #[arg(long, value_enum)]
    tol_profile: Option<TolProfile>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    /// Optional TOML file supplying grid, profile, potential and seed.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Check,
}

fn load(path: &Path, kind: Option<ExperimentKind>, tol: Option<TolProfile>) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::load(path).map_err(Failure::Config)?;
    if let Some(kind) = kind {
        spec.kind = kind;
    }
    if let Some(tol) = tol {
        spec.tol_profile = tol;
    }
    spec.validate().map_err(|e| Failure::Config(e.into()))?;
    Ok(spec)
}

fn emit(value: &serde_json::Value) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(value).expect("json"));
}

fn execute(command: Command) -> (PathBuf, Result<(), Failure>) {
    let (kind, args) = match command {
        Command::EvolveWigner(a) => (ExperimentKind::EvolveWigner, a),
        Command::EvolveVlasov(a) => (ExperimentKind::EvolveVlasov, a),
        Command::Converge(a) => (ExperimentKind::Converge, a),
        Command::Penrose(a) => (ExperimentKind::Penrose, a),
        Command::Eikonal(a) => (ExperimentKind::Eikonal, a),
        Command::Check(a) => {
            let ctx = RunContext {
                out: a.common.out.clone(),
                workers: a.common.workers,
            };
            let result = (|| {
                let spec = match &a.config {
                    Some(p) => Some(load(p, None, a.common.tol_profile)?),
                    None => None,
                };
                let (ok, report) = harness::run_check_suite(spec.as_ref(), &ctx).map_err(Failure::Runtime)?;
                emit(&report);
                if ok {
                    Ok(())
                } else {
                    Err(Failure::Check)
                }
            })();
            return (ctx.out, result);
        }
    };
    let ctx = RunContext {
        out: args.common.out.clone(),
        workers: args.common.workers,
    };
    let result = (|| {
        let spec = load(&args.config, Some(kind), args.common.tol_profile)?;
        let summary = harness::run(&spec, &ctx).map_err(Failure::Runtime)?;
        emit(&summary["result"]);
        Ok(())
    })();
    (ctx.out, result)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (out, result) = execute(cli.command);
    let (err, code) = match result {
        Ok(()) => return ExitCode::SUCCESS,
        Err(Failure::Check) => return ExitCode::from(1),
        Err(Failure::Config(e)) => (e, 2),
        Err(Failure::Runtime(e)) => (e, 1),
    };
    let mut record = harness::error_json(&err);
    if code == 2 && record["error"]["kind"] == "other" {
        record["error"]["kind"] = "config".into();
    }
    let text = serde_json::to_string(&record).expect("json");
    eprintln!("{text}");
    if std::fs::create_dir_all(&out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), text + "\n");
    }
    ExitCode::from(code)
}
