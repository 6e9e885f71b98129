//! Runs a configured experiment and writes its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, OutputFormat};
use crate::bounds::{run_sweep, BoundReport, CheckName, ReportExtras, SweepOptions, Verdict};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INDETERMINATE: i32 = 3;
    pub const IO: i32 = 4;
}

/// Exit code for an error raised outside the checks themselves.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => exit::IO,
        _ => exit::CONFIG,
    }
}

/// `Fail` dominates `Indeterminate`, which dominates `Pass`.
pub fn verdict_exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => exit::PASS,
        Verdict::Indeterminate => exit::INDETERMINATE,
        Verdict::Fail => exit::FAIL,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: CheckName,
    pub verdict: Verdict,
    pub rows: usize,
    pub files: Vec<OutputFile>,
    pub failures: Vec<(usize, String)>,
    pub extras: ReportExtras,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub checks: Vec<CheckSummary>,
    pub verdict: Verdict,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::config("threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Computes the requested reports without touching the file system.
pub fn compute_reports(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<BoundReport>> {
    cfg.validate()?;
    let exp = cfg.build()?;
    let sweep_opts = SweepOptions {
        exponents: cfg.exponents,
        policy: cfg.policy,
        corollary: cfg.corollary,
    };
    in_pool(opts.threads, || run_sweep(&exp.problem, &exp.family, &cfg.sweep, &cfg.checks, &sweep_opts))?
}

pub fn overall_verdict(reports: &[BoundReport]) -> Verdict {
    reports.iter().fold(Verdict::Pass, |v, r| v.and(r.verdict))
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<OutputFile> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(OutputFile {
        path: name.to_owned(),
        sha256: hex::encode(Sha256::digest(body.as_bytes())),
    })
}

/// Runs every requested check and writes `<check>.csv`,
/// `plotdata_<check>.csv`, and `manifest.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let started_unix = unix_now();
    let reports = compute_reports(cfg, opts)?;
    let dir: &PathBuf = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;

    let mut checks = Vec::with_capacity(reports.len());
    for r in &reports {
        let name = r.check.as_str();
        let mut files = Vec::new();
        if cfg.output.formats.contains(&OutputFormat::Csv) {
            files.push(write_file(dir, &format!("{name}.csv"), &r.to_csv())?);
        }
        if cfg.output.formats.contains(&OutputFormat::Plotdata) {
            files.push(write_file(dir, &format!("plotdata_{name}.csv"), &r.plot_csv())?);
        }
        log::info!("{name}: {}", r.verdict.as_str());
        checks.push(CheckSummary {
            check: r.check,
            verdict: r.verdict,
            rows: r.rows.len(),
            files,
            failures: r.failures.clone(),
            extras: r.extras.clone(),
        });
    }
    let verdict = overall_verdict(&reports);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config_hash: cfg.hash(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        started_unix,
        finished_unix: unix_now(),
        checks,
        verdict,
        exit_code: verdict_exit_code(verdict),
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(dir, MANIFEST_FILE, &body)?;
    Ok(manifest)
}

/// Result of re-checking a manifest against the files next to it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Re-hashes every listed output, re-reads the verdict column of each
/// check CSV, and checks both against the manifest.
pub fn verify_manifest(path: &Path) -> Result<VerifyReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut report = VerifyReport::default();

    let cfg: std::result::Result<ExperimentConfig, _> = serde_json::from_value(manifest.config.clone());
    match cfg {
        Ok(cfg) if cfg.hash() != manifest.config_hash => report.problems.push("config hash mismatch".to_owned()),
        Ok(_) => {}
        Err(e) => report.problems.push(format!("embedded config unreadable: {e}")),
    }

    let mut by_check: BTreeMap<CheckName, Verdict> = BTreeMap::new();
    for c in &manifest.checks {
        by_check.insert(c.check, c.verdict);
        for f in &c.files {
            let p = dir.join(&f.path);
            let body = match fs::read(&p) {
                Ok(b) => b,
                Err(e) => {
                    report.problems.push(format!("{}: {e}", f.path));
                    continue;
                }
            };
            if hex::encode(Sha256::digest(&body)) != f.sha256 {
                report.problems.push(format!("{}: sha256 mismatch", f.path));
                continue;
            }
            if f.path == format!("{}.csv", c.check.as_str()) {
                let rows = String::from_utf8_lossy(&body)
                    .lines()
                    .skip(1)
                    .filter_map(|l| l.rsplit(',').next().map(str::to_owned))
                    .collect::<Vec<_>>();
                if rows.len() != c.rows {
                    report.problems.push(format!("{}: {} rows, manifest says {}", f.path, rows.len(), c.rows));
                }
                if c.verdict == Verdict::Pass && rows.iter().any(|v| v != "pass") {
                    report.problems.push(format!("{}: failing row under a passing verdict", f.path));
                }
            }
        }
    }
    let overall = by_check.values().fold(Verdict::Pass, |v, c| v.and(*c));
    if overall != manifest.verdict {
        report.problems.push("overall verdict disagrees with per-check verdicts".to_owned());
    }
    if verdict_exit_code(manifest.verdict) != manifest.exit_code {
        report.problems.push("exit code disagrees with verdict".to_owned());
    }
    Ok(report)
}
