//! `tenfold` — command-line driver for the real-space index machinery.
//!
//! Every subcommand is driven by a JSON configuration file (see the guide in
//! `book/` for the schema).  The subcommand must match the `experiment` field
//! of the config; `clifford-selftest` alone runs without a config.
//!
//! Exit codes: `0` success, `2` configuration error, `3` certification
//! failure when `--strict` is set.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tenfold::harness::{
    apply_override, run, write_outputs, ExperimentKind, RunConfig, RunOutput,
};

#[derive(Parser)]
#[command(
    name = "tenfold",
    about = "Real-space topological indices of disordered tight-binding models \
             in all ten symmetry classes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory for `config.json`, `summary.json`, and `records.csv`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for the (parameter, seed) task queue; defaults to the
    /// number of logical CPUs.
    #[arg(long)]
    workers: Option<usize>,

    /// Override the base RNG seed (`disorder.seed0`).
    #[arg(long)]
    seed: Option<u64>,

    /// Override a config value by dotted path, e.g. `--override model.m0=1.5`.
    /// The value is parsed as JSON when possible.  Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Exit with code 3 when any certification-grade check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the certified real-space index of a configured model.
    ComputeIndex(CommonArgs),
    /// Momentum-space invariant (Chern number or winding) with a cross-check.
    MomentumInvariant(CommonArgs),
    /// Sweep disorder strength; track index agreement and operator drift.
    SweepDisorder(CommonArgs),
    /// Audit the structural predictions of a symmetry class (2Z, Z2, empty cell).
    AuditClass(CommonArgs),
    /// Scan lattice size, compression radius, and kernel threshold.
    Convergence(CommonArgs),
    /// Linear-response coefficient of a 1D chiral model and its ratio to ν.
    LinearResponse(CommonArgs),
    /// Verify the Clifford-algebra construction (no config required).
    CliffordSelftest(CommonArgs),
}

impl Command {
    fn parts(&self) -> (ExperimentKind, &CommonArgs) {
        match self {
            Command::ComputeIndex(a) => (ExperimentKind::ComputeIndex, a),
            Command::MomentumInvariant(a) => (ExperimentKind::MomentumInvariant, a),
            Command::SweepDisorder(a) => (ExperimentKind::SweepDisorder, a),
            Command::AuditClass(a) => (ExperimentKind::AuditClass, a),
            Command::Convergence(a) => (ExperimentKind::Convergence, a),
            Command::LinearResponse(a) => (ExperimentKind::LinearResponse, a),
            Command::CliffordSelftest(a) => (ExperimentKind::CliffordSelftest, a),
        }
    }
}

/// Errors before any computation starts: bad file, bad JSON, bad schema,
/// subcommand/config mismatch.  All map to exit code 2.
fn load_config(kind: ExperimentKind, args: &CommonArgs) -> Result<RunConfig, String> {
    let mut raw: Value = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("config {} is not valid JSON: {e}", path.display()))?
        }
        None => {
            if kind != ExperimentKind::CliffordSelftest {
                return Err(format!(
                    "subcommand '{}' requires --config <path>",
                    kind.name()
                ));
            }
            json!({ "experiment": kind.name() })
        }
    };
    for ov in &args.overrides {
        let (key, value) = ov
            .split_once('=')
            .ok_or_else(|| format!("--override '{ov}' is not of the form key=value"))?;
        apply_override(&mut raw, key, value).map_err(|e| e.to_string())?;
    }
    if let Some(seed) = args.seed {
        apply_override(&mut raw, "disorder.seed0", &seed.to_string())
            .map_err(|e| e.to_string())?;
    }
    let cfg = RunConfig::from_json(&raw).map_err(|e| format!("invalid config: {e}"))?;
    if cfg.experiment != kind {
        return Err(format!(
            "config is for experiment '{}' but the subcommand is '{}'",
            cfg.experiment.name(),
            kind.name()
        ));
    }
    Ok(cfg)
}

fn emit(args: &CommonArgs, cfg: &RunConfig, output: &RunOutput) -> Result<(), String> {
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from));
    if let Some(dir) = out_dir {
        let paths = write_outputs(&dir, output).map_err(|e| e.to_string())?;
        for p in paths {
            eprintln!("wrote {}", p.display());
        }
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&output.summary).map_err(|e| e.to_string())?
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.parts();

    if let Some(n) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} workers: {e}");
            return ExitCode::from(2);
        }
    }

    let cfg = match load_config(kind, args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };

    let output = match run(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if let Err(msg) = emit(args, &cfg, &output) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }

    if output.certification_failed {
        eprintln!("certification failed (see summary)");
        if args.strict {
            return ExitCode::from(3);
        }
    }
    ExitCode::SUCCESS
}
