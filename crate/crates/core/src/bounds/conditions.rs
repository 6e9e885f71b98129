//! Condition quantities of the error bounds, from a misfit `Φ` on the grid
//! and an `M × K` table of realizations `Φ_N(ω_j, u_k)`.

use serde::{Deserialize, Serialize};

use super::exponents::{conjugate, ExponentSet};
use crate::error::{Error, Result};
use crate::measure::PriorDensity;
use crate::norms::{jackknife, lq_norm, Estimate, SampleTable};

/// `‖ (mean_ω t)^{1/q_in} ‖_{L^{q_out}}` raised to `power`, with a jackknife
/// standard error. `t` holds per-realization contributions already raised
/// to the inner exponent.
pub(crate) fn norm_of_means(
    t: &SampleTable,
    q_in: f64,
    q_out: f64,
    power: f64,
    prior: &PriorDensity,
) -> Result<Estimate> {
    prior.grid().check_len("table columns", t.cols())?;
    jackknife(&[t], |means| {
        let node: Vec<f64> = means[0].iter().map(|m| m.powf(1.0 / q_in)).collect();
        lq_norm(&node, q_out, prior).map_or(f64::NAN, |v| v.powf(power))
    })
}

/// `ln(e^{−a} + e^{−b})` without overflow.
fn log_sum_neg_exp(a: f64, b: f64) -> f64 {
    let lo = a.min(b);
    -lo + (-(a - b).abs()).exp().ln_1p()
}

fn check_shapes(phi: &[f64], table: &SampleTable, prior: &PriorDensity) -> Result<()> {
    prior.grid().check_len("phi", phi.len())?;
    prior.grid().check_len("table columns", table.cols())?;
    if table.rows() == 0 {
        return Err(Error::invalid("M", "need at least one realization"));
    }
    if phi.iter().any(|x| !x.is_finite()) || !table.all_finite() {
        return Err(Error::NonFinite("misfit"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm1Conditions {
    pub d1: Estimate,
    pub d2: Estimate,
}

/// `D₁ = ‖E[(e^{−Φ/2}+e^{−Φ_N/2})^{2q₁}]^{1/q₁}‖_{L^{q₂}}` and
/// `D₂ = ‖E[(Z_N max{Z^{−3}, Z_N^{−3}} (e^{−Φ}+e^{−Φ_N})²)^{q₁}]^{1/q₁}‖_{L^{q₂}}`.
///
/// Integrands are formed in the log domain. An underflowed `Z_N` yields an
/// infinite `D₂`.
pub fn thm1_conditions(
    phi: &[f64],
    table: &SampleTable,
    z: f64,
    z_n: &[f64],
    exps: &ExponentSet,
    prior: &PriorDensity,
) -> Result<Thm1Conditions> {
    check_shapes(phi, table, prior)?;
    if z_n.len() != table.rows() {
        return Err(Error::LengthMismatch {
            what: "Z_N",
            expected: table.rows(),
            got: z_n.len(),
        });
    }
    if !(z > 0.0) || z_n.iter().any(|&v| v < 0.0 || v.is_nan()) {
        return Err(Error::invalid("Z", "normalizers must be positive"));
    }
    let q1 = exps.q1;
    let t1 = table.map_indexed(|_, k, x| (2.0 * q1 * log_sum_neg_exp(0.5 * phi[k], 0.5 * x)).exp());
    let ln_z = z.ln();
    let t2 = table.map_indexed(|j, k, x| {
        if z_n[j] == 0.0 {
            return f64::INFINITY;
        }
        let ln_zn = z_n[j].ln();
        let scale = ln_zn + (-3.0 * ln_z).max(-3.0 * ln_zn);
        (q1 * (scale + 2.0 * log_sum_neg_exp(phi[k], x))).exp()
    });
    Ok(Thm1Conditions {
        d1: norm_of_means(&t1, q1, exps.q2, 1.0, prior)?,
        d2: norm_of_means(&t2, q1, exps.q2, 1.0, prior)?,
    })
}

/// `‖E[|Φ−Φ_N|^{2q₁'}]^{1/(2q₁')}‖_{L^{2q₂'}}`.
pub fn thm1_error_norm(phi: &[f64], table: &SampleTable, exps: &ExponentSet, prior: &PriorDensity) -> Result<Estimate> {
    check_shapes(phi, table, prior)?;
    let qi = 2.0 * conjugate(exps.q1);
    let qo = 2.0 * conjugate(exps.q2);
    let t = table.map_indexed(|_, k, x| (phi[k] - x).abs().powf(qi));
    norm_of_means(&t, qi, qo, 1.0, prior)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinBranch {
    /// `‖E[exp(−Φ_N)]^{−1}‖_{L^{p₁}}`
    ApproximateMisfit,
    /// `‖exp(Φ)‖_{L^{p₁}}`
    TrueMisfit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm2Conditions {
    pub c1: f64,
    pub c1_branch: MinBranch,
    pub c2: Estimate,
    pub mean_z: Estimate,
    /// `E[Z_N] ∓ 3 SE`.
    pub c3_lo: f64,
    pub c3_hi: f64,
    /// `max(E[Z_N], 1/E[Z_N])` inflated to cover the band.
    pub c3: f64,
}

/// Conditions of the marginal-posterior bound.
pub fn thm2_conditions(phi: &[f64], table: &SampleTable, exps: &ExponentSet, prior: &PriorDensity) -> Result<Thm2Conditions> {
    check_shapes(phi, table, prior)?;
    let p1 = exps.p1;
    let mean_exp = table.map(|x| (-x).exp()).column_means();
    let inv: Vec<f64> = mean_exp.iter().map(|m| 1.0 / m).collect();
    let a = lq_norm(&inv, p1, prior)?;
    let b = lq_norm(&phi.iter().map(|p| p.exp()).collect::<Vec<_>>(), p1, prior)?;
    let (c1, c1_branch) = if a <= b {
        (a, MinBranch::ApproximateMisfit)
    } else {
        (b, MinBranch::TrueMisfit)
    };

    let p2 = exps.p2;
    let t = table.map_indexed(|_, k, x| (p2 * log_sum_neg_exp(phi[k], x)).exp());
    let c2 = norm_of_means(&t, p2, 2.0 * conjugate(p1) * exps.p3, 1.0, prior)?;

    let z_n = crate::posterior::realization_normalizers(table, prior);
    let m = z_n.len() as f64;
    let mean = z_n.iter().sum::<f64>() / m;
    let se = if z_n.len() > 1 {
        (z_n.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
    } else {
        0.0
    };
    let c3_lo = mean - 3.0 * se;
    let c3_hi = mean + 3.0 * se;
    let c3 = if c3_lo > 0.0 {
        c3_hi.max(1.0 / c3_lo)
    } else {
        f64::INFINITY
    };
    Ok(Thm2Conditions {
        c1,
        c1_branch,
        c2,
        mean_z: Estimate { value: mean, se },
        c3_lo,
        c3_hi,
        c3,
    })
}

/// `‖E[|Φ−Φ_N|^{p₂'}]^{1/p₂'}‖_{L^{2p₁'p₃'}}`.
pub fn thm2_error_norm(phi: &[f64], table: &SampleTable, exps: &ExponentSet, prior: &PriorDensity) -> Result<Estimate> {
    check_shapes(phi, table, prior)?;
    let qi = conjugate(exps.p2);
    let qo = 2.0 * conjugate(exps.p1) * conjugate(exps.p3);
    let t = table.map_indexed(|_, k, x| (phi[k] - x).abs().powf(qi));
    norm_of_means(&t, qi, qo, 1.0, prior)
}
