//! Both sides of each bound, per `N`, plus the sweep-level verdict logic.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditions::{norm_of_means, thm1_conditions, thm1_error_norm, thm2_conditions, thm2_error_norm};
use super::exponents::ExponentSet;
use super::rate::fit_rate;
use super::report::{BoundReport, BoundRow, CheckName, ReportExtras, RowKind, Verdict};
use crate::error::{Error, Result};
use crate::measure::{hellinger, DensityMeasure, PriorDensity};
use crate::models::{FamilyKind, PerturbationNoise, RandomMisfitFamily};
use crate::norms::{jackknife, Estimate, SampleTable};
use crate::posterior::{marginal_from_table, normalize, realization_normalizers, realization_table, MarginalPosterior};
use crate::problem::InverseProblem;

/// Thresholds that turn numbers into verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictPolicy {
    /// Monte Carlo slack, in standard errors.
    #[serde(default = "default_se_multiplier")]
    pub se_multiplier: f64,
    /// Ratio sequences may not exceed this multiple of their median.
    #[serde(default = "default_ratio_cap")]
    pub ratio_cap: f64,
    /// Allowed excess of the lhs log-log slope over the rhs slope.
    #[serde(default = "default_slope_slack")]
    pub slope_slack: f64,
}

fn default_se_multiplier() -> f64 {
    3.0
}

fn default_ratio_cap() -> f64 {
    10.0
}

fn default_slope_slack() -> f64 {
    0.1
}

impl Default for VerdictPolicy {
    fn default() -> Self {
        Self {
            se_multiplier: default_se_multiplier(),
            ratio_cap: default_ratio_cap(),
            slope_slack: default_slope_slack(),
        }
    }
}

/// Everything one sweep row needs, computed once per `N`.
#[derive(Debug, Clone)]
pub struct RowContext {
    pub n: usize,
    pub m: usize,
    pub prior: Arc<PriorDensity>,
    pub phi: Vec<f64>,
    pub z: f64,
    pub true_posterior: DensityMeasure,
    /// `Φ_N(ω_j, u_k)`.
    pub table: SampleTable,
    pub z_n: Vec<f64>,
    /// `d_H(μ, μ_N(ω_j))²` as an `M × 1` table.
    pub hellinger_sq: SampleTable,
    pub marginal: MarginalPosterior,
    /// `exp(−(Φ_N − s))` with a global shift `s`, feeding the marginal.
    shifted_exp: SampleTable,
    /// `‖G_N(ω_j, u_k) − G(u_k)‖` for forward-model families.
    pub forward_error: Option<SampleTable>,
}

impl RowContext {
    pub fn build(problem: &InverseProblem, family: &RandomMisfitFamily, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("M", "need at least one realization"));
        }
        let prior = problem.prior().clone();
        let grid = problem.grid();
        let table = realization_table(family, &prior, m)?;
        let z_n = realization_normalizers(&table, &prior);
        let mu = problem.posterior();
        let hsq: Vec<f64> = table
            .iter_rows()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|row| {
                let (mu_n, _) = normalize(row, &prior)?;
                hellinger(mu, &mu_n, &prior).map(|d| d * d)
            })
            .collect::<Result<_>>()?;
        let marginal = marginal_from_table(&table, &prior)?;
        let shift = table.min();
        let shifted_exp = table.map(|x| (-(x - shift)).exp());
        let forward_error = if family.is_forward_family() {
            let rows: Vec<Vec<f64>> = (0..m as u64)
                .into_par_iter()
                .map(|omega| {
                    let r = family.realization(omega);
                    let g = r.forward().expect("forward family");
                    grid.nodes()
                        .map(|u| g.error(u).iter().map(|e| e * e).sum::<f64>().sqrt())
                        .collect()
                })
                .collect();
            Some(SampleTable::from_rows(rows)?)
        } else {
            None
        };
        Ok(Self {
            n: family.n(),
            m,
            phi: problem.misfit().to_vec(),
            z: problem.z(),
            true_posterior: mu.clone(),
            prior,
            table,
            z_n,
            hellinger_sq: SampleTable::new(m, 1, hsq)?,
            marginal,
            shifted_exp,
            forward_error,
        })
    }

    /// `E_ν[d_H(μ, μ_N)²]^{1/2}` with a jackknife SE.
    pub fn random_lhs(&self) -> Result<Estimate> {
        jackknife(&[&self.hellinger_sq], |m| m[0][0].max(0.0).sqrt())
    }

    /// `d_H(μ, μ_N^marg)` with a jackknife SE over the realizations that
    /// built the marginal.
    pub fn marginal_lhs(&self) -> Result<Estimate> {
        let mu = &self.true_posterior;
        let prior = &self.prior;
        let value = hellinger(mu, &self.marginal.measure, prior)?;
        let est = jackknife(&[&self.shifted_exp], |means| {
            DensityMeasure::from_prior_density(prior.clone(), &means[0])
                .and_then(|m| hellinger(mu, &m, prior))
                .unwrap_or(f64::NAN)
        })?;
        Ok(Estimate { value, se: est.se })
    }

    /// `|Φ − Φ_N|^q` per realization and node.
    fn abs_error_pow(&self, q: f64) -> SampleTable {
        self.table.map_indexed(|_, k, x| (self.phi[k] - x).abs().powf(q))
    }

    /// `‖E[exp(ρΦ_N)]‖_{L¹}`.
    fn exp_integral(&self, rho: f64) -> Result<f64> {
        let means = self.table.map(|x| (rho * x).exp()).column_means();
        self.prior.expect(&means)
    }
}

/// One row of the random-posterior bound: `lhs = E[d_H(μ,μ_N)²]^{1/2}`,
/// `rhs = (D₁+D₂)·‖E[|Φ−Φ_N|^{2q₁'}]^{1/(2q₁')}‖_{L^{2q₂'}}`.
pub fn check_thm1(ctx: &RowContext, exps: &ExponentSet, policy: &VerdictPolicy) -> Result<BoundRow> {
    let cond = thm1_conditions(&ctx.phi, &ctx.table, ctx.z, &ctx.z_n, exps, &ctx.prior)?;
    if !(cond.d1.value.is_finite() && cond.d2.value.is_finite()) {
        return Err(Error::invalid("D1/D2", "condition norms are not finite"));
    }
    let norm = thm1_error_norm(&ctx.phi, &ctx.table, exps, &ctx.prior)?;
    let lhs = ctx.random_lhs()?;

    // Joint jackknife for the product so the SE accounts for correlation.
    let q1 = exps.q1;
    let qi = 2.0 * super::exponents::conjugate(q1);
    let qo = 2.0 * super::exponents::conjugate(exps.q2);
    let t_err = ctx.abs_error_pow(qi);
    let z = ctx.z;
    let phi = &ctx.phi;
    let lse = |a: f64, b: f64| {
        let lo = a.min(b);
        -lo + (-(a - b).abs()).exp().ln_1p()
    };
    let t1 = ctx.table.map_indexed(|_, k, x| (2.0 * q1 * lse(0.5 * phi[k], 0.5 * x)).exp());
    let t2 = ctx.table.map_indexed(|j, k, x| {
        let ln_zn = ctx.z_n[j].ln();
        (q1 * (ln_zn + (-3.0 * z.ln()).max(-3.0 * ln_zn) + 2.0 * lse(phi[k], x))).exp()
    });
    let prior = &ctx.prior;
    let rhs = jackknife(&[&t1, &t2, &t_err], |m| {
        let f = |v: &Vec<f64>, qin: f64, qout: f64| {
            let node: Vec<f64> = v.iter().map(|x| x.powf(1.0 / qin)).collect();
            crate::norms::lq_norm(&node, qout, prior).unwrap_or(f64::NAN)
        };
        (f(&m[0], q1, exps.q2) + f(&m[1], q1, exps.q2)) * f(&m[2], qi, qo)
    })?;

    let mut row = BoundRow::new(ctx.n, ctx.m, RowKind::Thm1, lhs.value, rhs.value, norm.value);
    row.lhs_se = lhs.se;
    row.rhs_se = rhs.se;
    row.d1 = Some(cond.d1.value);
    row.d2 = Some(cond.d2.value);
    let slack = policy.se_multiplier * (lhs.se.powi(2) + rhs.se.powi(2)).sqrt();
    row.verdict = Verdict::from_bool(row.lhs <= row.rhs + slack);
    Ok(row)
}

/// One row of the marginal-posterior bound: `lhs = d_H(μ, μ_N^marg)`,
/// `rhs = ‖E[|Φ−Φ_N|^{p₂'}]^{1/p₂'}‖_{L^{2p₁'p₃'}}`. The row verdict is
/// settled by [`finalize_ratio_rows`].
pub fn check_thm2(ctx: &RowContext, exps: &ExponentSet) -> Result<BoundRow> {
    let cond = thm2_conditions(&ctx.phi, &ctx.table, exps, &ctx.prior)?;
    let norm = thm2_error_norm(&ctx.phi, &ctx.table, exps, &ctx.prior)?;
    let lhs = ctx.marginal_lhs()?;
    let mut row = BoundRow::new(ctx.n, ctx.m, RowKind::Thm2, lhs.value, norm.value, norm.value);
    row.lhs_se = lhs.se;
    row.rhs_se = norm.se;
    row.c1 = Some(cond.c1);
    row.c2 = Some(cond.c2.value);
    row.c3_lo = Some(cond.c3_lo);
    row.c3_hi = Some(cond.c3_hi);
    if !(cond.c1.is_finite() && cond.c2.value.is_finite() && cond.c3_lo > 0.0) {
        row.verdict = Verdict::Fail;
    }
    Ok(row)
}

/// Applies the ratio-boundedness and slope-dominance rules to rows of one
/// kind, filling slopes and verdicts. Returns the combined verdict.
pub fn finalize_ratio_rows(rows: &mut [BoundRow], policy: &VerdictPolicy) -> Verdict {
    if rows.is_empty() {
        return Verdict::Indeterminate;
    }
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_by(|a, b| a.total_cmp(b));
    let mid = ratios.len() / 2;
    let median = if ratios.len() % 2 == 1 {
        ratios[mid]
    } else {
        0.5 * (ratios[mid - 1] + ratios[mid])
    };
    let cap = policy.ratio_cap * median;

    let (slope_lhs, slope_rhs) = fit_slopes(rows);
    let slopes_ok = match (slope_lhs, slope_rhs) {
        (Some(l), Some(r)) => l <= r + policy.slope_slack,
        _ => true,
    };
    let mut all = Verdict::from_bool(slopes_ok);
    for r in rows.iter_mut() {
        r.slope_lhs = slope_lhs;
        r.slope_rhs = slope_rhs;
        let ok = r.ratio.is_finite() && r.ratio <= cap && r.lhs.is_finite() && r.rhs.is_finite();
        r.verdict = r.verdict.and(Verdict::from_bool(ok));
        all = all.and(r.verdict);
    }
    all
}

fn fit_slopes(rows: &[BoundRow]) -> (Option<f64>, Option<f64>) {
    let fit = |f: &dyn Fn(&BoundRow) -> f64| {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, f(r))).collect();
        fit_rate(&pts).ok().map(|r| r.slope)
    };
    (fit(&|r| r.lhs), fit(&|r| r.rhs_norm))
}

fn finalize_thm1_rows(rows: &mut [BoundRow]) -> Verdict {
    if rows.is_empty() {
        return Verdict::Indeterminate;
    }
    let (sl, sr) = fit_slopes(rows);
    let mut v = Verdict::Pass;
    for r in rows.iter_mut() {
        r.slope_lhs = sl;
        r.slope_rhs = sr;
        v = v.and(r.verdict);
    }
    v
}

/// Lower bound `C₀` with `Φ_N ≥ −C₀` that holds by construction, if any.
pub fn construction_lower_bound(family: &RandomMisfitFamily) -> Option<f64> {
    match family.kind() {
        FamilyKind::SketchedQuadratic { .. } | FamilyKind::PerturbedForward { .. } => Some(0.0),
        FamilyKind::DirectPerturbation { scale, noise, .. } => match noise {
            PerturbationNoise::Uniform => Some(*scale),
            PerturbationNoise::Gaussian => None,
        },
    }
}

/// Index of the first sweep entry from which `ok` holds for every later entry.
fn first_stable(values: &[bool]) -> Option<usize> {
    let mut start = None;
    for (i, &ok) in values.iter().enumerate() {
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, _) => start = None,
            _ => {}
        }
    }
    start
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryOptions {
    /// Defaults to `2·max(Z, 1/Z)`.
    pub c3: Option<f64>,
    /// Defaults to the family's construction bound, else the observed minimum.
    pub c0: Option<f64>,
}

/// Corollary conditions (i)–(iii) and both conclusions over a sweep.
pub fn check_corollary(
    contexts: &[RowContext],
    family: &RandomMisfitFamily,
    exps: &ExponentSet,
    opts: &CorollaryOptions,
    policy: &VerdictPolicy,
) -> Result<BoundReport> {
    let first = contexts.first().ok_or_else(|| Error::invalid("sweep", "no rows"))?;
    let z = first.z;
    let c3 = opts.c3.unwrap_or(2.0 * z.max(1.0 / z));
    if !(c3 > z.max(1.0 / z)) {
        return Err(Error::invalid("C3", format!("need C3⁻¹ < Z < C3, got C3 = {c3}, Z = {z}")));
    }
    let rho = exps.rho_star;
    let mut extras = ReportExtras {
        c3: Some(c3),
        notes: vec!["almost-sure conditions certified over sampled realizations only".to_owned()],
        ..Default::default()
    };

    // (i)
    let observed_min = contexts
        .iter()
        .map(|c| c.table.min())
        .fold(first.phi.iter().copied().fold(f64::INFINITY, f64::min), f64::min);
    let c0 = match opts.c0.or_else(|| construction_lower_bound(family)) {
        Some(c0) => c0,
        None => {
            extras.notes.push("C0 taken from the observed minimum".to_owned());
            (-observed_min).max(0.0)
        }
    };
    let condition_i = observed_min >= -c0;
    extras.c0 = Some(c0);
    extras.min_misfit = Some(observed_min);
    extras.condition_i = Some(condition_i);

    // (ii)
    let threshold = 0.5 * (-c0).exp() * (z - 1.0 / c3).min(c3 - z);
    extras.threshold = Some(threshold);
    let mut l1 = Vec::with_capacity(contexts.len());
    for c in contexts {
        let v = norm_of_means(&c.abs_error_pow(1.0), 1.0, 1.0, 1.0, &c.prior)?.value;
        extras.condition_values.push((c.n, v));
        l1.push(v <= threshold);
    }
    let start = first_stable(&l1);
    extras.n_star = start.map(|i| contexts[i].n);

    // (iii)
    for c in contexts {
        extras.exp_integrals.push((c.n, c.exp_integral(rho)?));
    }
    let Some(start) = start else {
        extras.notes.push("N* not reached within the sweep".to_owned());
        return Ok(BoundReport {
            check: CheckName::Corollary,
            rows: vec![],
            extras,
            failures: vec![],
            verdict: if condition_i { Verdict::Indeterminate } else { Verdict::Fail },
        });
    };
    let sup = extras.exp_integrals[start..].iter().map(|e| e.1).fold(0.0, f64::max);
    extras.sup_exp_integral = Some(sup);

    let n_star = contexts[start].n;
    let q6 = exps.rho_marginal();
    let q7 = exps.rho_random();
    let mut marg_rows = Vec::new();
    let mut rand_rows = Vec::new();
    for c in &contexts[start..] {
        let lhs = c.marginal_lhs()?;
        let rhs = norm_of_means(&c.abs_error_pow(1.0), 1.0, q6, 1.0, &c.prior)?;
        let mut r = BoundRow::new(c.n, c.m, RowKind::CorollaryMarginal, lhs.value, rhs.value, rhs.value);
        r.lhs_se = lhs.se;
        r.rhs_se = rhs.se;
        r.n_star = Some(n_star);
        marg_rows.push(r);

        let lhs = c.random_lhs()?;
        let rhs = norm_of_means(&c.abs_error_pow(q7), q7, 1.0, 1.0, &c.prior)?;
        let mut r = BoundRow::new(c.n, c.m, RowKind::CorollaryRandom, lhs.value, rhs.value, rhs.value);
        r.lhs_se = lhs.se;
        r.rhs_se = rhs.se;
        r.n_star = Some(n_star);
        rand_rows.push(r);
    }
    let verdict = Verdict::from_bool(condition_i && sup.is_finite())
        .and(finalize_ratio_rows(&mut marg_rows, policy))
        .and(finalize_ratio_rows(&mut rand_rows, policy));
    marg_rows.extend(rand_rows);
    Ok(BoundReport {
        check: CheckName::Corollary,
        rows: marg_rows,
        extras,
        failures: vec![],
        verdict,
    })
}

/// Random forward-model bound: smallness threshold, exponential
/// integrability, and both conclusions over a sweep.
pub fn check_forward(contexts: &[RowContext], exps: &ExponentSet, policy: &VerdictPolicy) -> Result<BoundReport> {
    if contexts.is_empty() {
        return Err(Error::invalid("sweep", "no rows"));
    }
    let rho = exps.rho_star;
    let q_marg = exps.rho_marginal();
    let q_rand = exps.rho_random();
    let mut extras = ReportExtras::default();

    let mut small = Vec::with_capacity(contexts.len());
    let mut errs = Vec::with_capacity(contexts.len());
    for c in contexts {
        let err = c
            .forward_error
            .as_ref()
            .ok_or_else(|| Error::invalid("family", "forward check needs a perturbed_forward family"))?;
        // ‖E[‖G−G_N‖^{4ρ/(ρ−2)}]^{(ρ−2)/(2ρ)}‖_{L^{2ρ/(ρ−1)}}
        let s = norm_of_means(&err.map(|e| e.powf(2.0 * q_rand)), q_rand, q_marg, 1.0, &c.prior)?.value;
        extras.condition_values.push((c.n, s));
        small.push(s <= 1.0);
        errs.push(err);
        extras.exp_integrals.push((c.n, c.exp_integral(rho)?));
    }
    let sup = extras.exp_integrals.iter().map(|e| e.1).fold(0.0, f64::max);
    extras.sup_exp_integral = Some(sup);
    let Some(start) = first_stable(&small) else {
        extras.notes.push("N* not reached within the sweep".to_owned());
        return Ok(BoundReport {
            check: CheckName::Forward,
            rows: vec![],
            extras,
            failures: vec![],
            verdict: Verdict::Indeterminate,
        });
    };
    let n_star = contexts[start].n;
    extras.n_star = Some(n_star);

    let mut marg = Vec::new();
    let mut rand_rows = Vec::new();
    for (c, err) in contexts[start..].iter().zip(&errs[start..]) {
        let sq = err.map(|e| e * e);
        let lhs = c.marginal_lhs()?;
        let rhs = norm_of_means(&sq, 1.0, q_marg, 0.5, &c.prior)?;
        let mut r = BoundRow::new(c.n, c.m, RowKind::ForwardMarginal, lhs.value, rhs.value, rhs.value);
        r.lhs_se = lhs.se;
        r.rhs_se = rhs.se;
        r.n_star = Some(n_star);
        marg.push(r);

        let lhs = c.random_lhs()?;
        let rhs = norm_of_means(&sq.map(|x| x.powf(q_rand)), q_rand, 2.0, 0.5, &c.prior)?;
        let mut r = BoundRow::new(c.n, c.m, RowKind::ForwardRandom, lhs.value, rhs.value, rhs.value);
        r.lhs_se = lhs.se;
        r.rhs_se = rhs.se;
        r.n_star = Some(n_star);
        rand_rows.push(r);
    }
    let verdict = Verdict::from_bool(sup.is_finite())
        .and(finalize_ratio_rows(&mut marg, policy))
        .and(finalize_ratio_rows(&mut rand_rows, policy));
    marg.extend(rand_rows);
    Ok(BoundReport {
        check: CheckName::Forward,
        rows: marg,
        extras,
        failures: vec![],
        verdict,
    })
}

pub(crate) fn thm1_report(contexts: &[RowContext], exps: &ExponentSet, policy: &VerdictPolicy) -> BoundReport {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for c in contexts {
        match check_thm1(c, exps, policy) {
            Ok(r) => rows.push(r),
            Err(e) => failures.push((c.n, e.to_string())),
        }
    }
    let mut verdict = finalize_thm1_rows(&mut rows);
    if !failures.is_empty() {
        verdict = Verdict::Fail;
    }
    BoundReport {
        check: CheckName::Thm1,
        rows,
        extras: ReportExtras::default(),
        failures,
        verdict,
    }
}

pub(crate) fn thm2_report(contexts: &[RowContext], exps: &ExponentSet, policy: &VerdictPolicy) -> BoundReport {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for c in contexts {
        match check_thm2(c, exps) {
            Ok(r) => rows.push(r),
            Err(e) => failures.push((c.n, e.to_string())),
        }
    }
    let mut verdict = finalize_ratio_rows(&mut rows, policy);
    if !failures.is_empty() {
        verdict = Verdict::Fail;
    }
    BoundReport {
        check: CheckName::Thm2,
        rows,
        extras: ReportExtras::default(),
        failures,
        verdict,
    }
}
