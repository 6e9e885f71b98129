use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sketchbound::bounds::CheckName;
use sketchbound::harness::{
    compute_reports, error_exit_code, exit, run_experiment, verdict_exit_code, verify_manifest, ExperimentConfig,
    RunOptions,
};

#[derive(Parser)]
#[command(name = "sketchbound", version, about = "Empirical Hellinger error bounds for randomized misfits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check in the config and write CSVs plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-check file hashes and verdicts recorded in a manifest.
    Verify { manifest: PathBuf },
    /// Run a single check and print its CSV to stdout.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_check)]
        check: CheckName,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn parse_check(s: &str) -> Result<CheckName, String> {
    CheckName::parse(s).ok_or_else(|| format!("unknown check `{s}` (expected thm1, thm2, corollary, or forward)"))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, i32> {
    let mut cfg = ExperimentConfig::from_path(path).map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG
    })?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn main_code(cli: Cli) -> Result<i32, i32> {
    let fail = |e: sketchbound::Error| {
        eprintln!("error: {e}");
        error_exit_code(&e)
    };
    match cli.command {
        Command::Run { config, seed, out, threads } => {
            let mut cfg = load(&config, seed)?;
            if let Some(out) = out {
                cfg.output.directory = out;
            }
            let manifest = run_experiment(&cfg, &RunOptions { threads }).map_err(fail)?;
            for c in &manifest.checks {
                println!("{}: {}", c.check.as_str(), c.verdict.as_str());
                for (n, msg) in &c.failures {
                    eprintln!("  N = {n}: {msg}");
                }
            }
            println!("manifest: {}", cfg.output.directory.join("manifest.json").display());
            Ok(manifest.exit_code)
        }
        Command::Verify { manifest } => {
            let rep = verify_manifest(&manifest).map_err(fail)?;
            for p in &rep.problems {
                eprintln!("{p}");
            }
            if rep.ok() {
                println!("ok");
                Ok(exit::PASS)
            } else {
                Ok(exit::FAIL)
            }
        }
        Command::Sweep { config, check, seed, threads } => {
            let mut cfg = load(&config, seed)?;
            cfg.checks = vec![check];
            cfg.validate().map_err(fail)?;
            let reports = compute_reports(&cfg, &RunOptions { threads }).map_err(fail)?;
            let r = &reports[0];
            print!("{}", r.to_csv());
            Ok(verdict_exit_code(r.verdict))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let code = main_code(cli).unwrap_or_else(|c| c);
    ExitCode::from(code as u8)
}
