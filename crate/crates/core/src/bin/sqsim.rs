use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sqsim::pipeline::{resolve_out_dir, run_command, verify_run, Command, ExperimentConfig};
use sqsim::{Error, ErrorClass};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    SqueezingCurves,
    Covariance,
    Ppt,
    Supermodes,
    Cluster,
    Rank,
    Gainfit,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::SqueezingCurves => Command::SqueezingCurves,
            Cmd::Covariance => Command::Covariance,
            Cmd::Ppt => Command::Ppt,
            Cmd::Supermodes => Command::Supermodes,
            Cmd::Cluster => Command::Cluster,
            Cmd::Rank => Command::Rank,
            Cmd::Gainfit => Command::GainFit,
        }
    }
}

/// Multimode squeezed-light simulation pipelines.
#[derive(Parser, Debug)]
#[command(name = "sqsim", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides SQSIM_OUT_DIR and outputs.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Top-level seed; TOML integers cap it at i64::MAX.
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Dotted-path override, e.g. `--set loss.eta=0.6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Re-run and compare against the manifest already in the output directory.
    #[arg(long)]
    verify: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Io => 4,
    }
}

fn run(args: Args) -> Result<bool, Error> {
    let mut overrides = args.set.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = ExperimentConfig::load(&args.config, &overrides)?;
    let out = resolve_out_dir(args.out.as_deref(), &cfg);
    let cmd = Command::from(args.command);
    if args.verify {
        let report = verify_run(cmd, &cfg, &out)?;
        for p in &report.mismatched {
            eprintln!("mismatch: {p}");
        }
        for p in &report.missing {
            eprintln!("missing: {p}");
        }
        if report.config_changed {
            eprintln!("config or command differs from the recorded run");
        }
        println!("{} file(s) checked in {}: {}", report.checked, out.display(), if report.ok() { "ok" } else { "FAILED" });
        return Ok(report.ok());
    }
    let manifest = run_command(cmd, &cfg, &out)?;
    println!("{}: wrote {} file(s) to {}", manifest.command, manifest.files.len(), out.display());
    Ok(true)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
