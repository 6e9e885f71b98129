//! Runs the selected checks over a sweep of sketch sizes.

use serde::{Deserialize, Serialize};

use super::checks::{check_corollary, check_forward, thm1_report, thm2_report, CorollaryOptions, RowContext, VerdictPolicy};
use super::exponents::ExponentSet;
use super::report::{BoundReport, CheckName, ReportExtras, Verdict};
use crate::error::{Error, Result};
use crate::models::RandomMisfitFamily;
use crate::problem::InverseProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    pub m: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() {
            return Err(Error::invalid("ns", "empty sweep"));
        }
        if self.ns.contains(&0) {
            return Err(Error::invalid("ns", "sketch sizes must be positive"));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("ns", "must be strictly increasing"));
        }
        if self.m < 2 {
            return Err(Error::invalid("m", "need at least two realizations"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub exponents: ExponentSet,
    pub policy: VerdictPolicy,
    pub corollary: CorollaryOptions,
}

/// `(N, error message)` for rows that could not be computed.
pub type RowFailures = Vec<(usize, String)>;

/// Builds one [`RowContext`] per `N`. A context that cannot be built is
/// returned as an error entry so the remaining `N` still run.
pub fn build_contexts(
    problem: &InverseProblem,
    family: &RandomMisfitFamily,
    spec: &SweepSpec,
) -> Result<(Vec<RowContext>, RowFailures)> {
    spec.validate()?;
    let mut ctxs = Vec::with_capacity(spec.ns.len());
    let mut failures = Vec::new();
    for &n in &spec.ns {
        log::debug!("building realizations for N = {n}");
        match family.with_n(n).and_then(|f| RowContext::build(problem, &f, spec.m)) {
            Ok(c) => ctxs.push(c),
            Err(e) => {
                log::warn!("N = {n}: {e}");
                failures.push((n, e.to_string()));
            }
        }
    }
    Ok((ctxs, failures))
}

/// Runs `checks` over the sweep, one report per check, in the order given.
pub fn run_sweep(
    problem: &InverseProblem,
    family: &RandomMisfitFamily,
    spec: &SweepSpec,
    checks: &[CheckName],
    opts: &SweepOptions,
) -> Result<Vec<BoundReport>> {
    opts.exponents.validate()?;
    let (ctxs, failures) = build_contexts(problem, family, spec)?;
    let exps = &opts.exponents;
    let mut out = Vec::with_capacity(checks.len());
    for &check in checks {
        let mut report = match check {
            CheckName::Thm1 => thm1_report(&ctxs, exps, &opts.policy),
            CheckName::Thm2 => thm2_report(&ctxs, exps, &opts.policy),
            CheckName::Corollary => check_corollary(&ctxs, family, exps, &opts.corollary, &opts.policy)
                .unwrap_or_else(|e| failed(check, e)),
            CheckName::Forward => check_forward(&ctxs, exps, &opts.policy).unwrap_or_else(|e| failed(check, e)),
        };
        if !failures.is_empty() {
            report.failures.extend(failures.iter().cloned());
            report.failures.sort_by_key(|f| f.0);
            report.verdict = Verdict::Fail;
        }
        out.push(report);
    }
    Ok(out)
}

fn failed(check: CheckName, e: Error) -> BoundReport {
    BoundReport {
        check,
        rows: vec![],
        extras: ReportExtras {
            notes: vec![e.to_string()],
            ..Default::default()
        },
        failures: vec![],
        verdict: Verdict::Fail,
    }
}
