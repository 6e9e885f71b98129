use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Outcome of a check. `Indeterminate` means the sweep could not reach the
/// regime a statement is about (e.g. no `N*` within the sweep).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Indeterminate,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Fail => "fail",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// The worse of two verdicts (`Fail` dominates `Indeterminate`).
    pub fn and(self, other: Self) -> Self {
        self.max(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Thm1,
    Thm2,
    Corollary,
    Forward,
}

impl CheckName {
    pub const ALL: [CheckName; 4] = [CheckName::Thm1, CheckName::Thm2, CheckName::Corollary, CheckName::Forward];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Thm1 => "thm1",
            CheckName::Thm2 => "thm2",
            CheckName::Corollary => "corollary",
            CheckName::Forward => "forward",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// Which inequality a row evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Thm1,
    Thm2,
    CorollaryMarginal,
    CorollaryRandom,
    ForwardMarginal,
    ForwardRandom,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Thm1 => "thm1",
            RowKind::Thm2 => "thm2",
            RowKind::CorollaryMarginal => "corollary_marginal",
            RowKind::CorollaryRandom => "corollary_random",
            RowKind::ForwardMarginal => "forward_marginal",
            RowKind::ForwardRandom => "forward_random",
        }
    }
}

/// One `N` of one inequality. `rhs` is the full right-hand side where the
/// constant is computable (`thm1`) and the error norm alone otherwise;
/// `rhs_norm` is always the error norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub m: usize,
    pub kind: RowKind,
    pub lhs: f64,
    pub rhs: f64,
    pub rhs_norm: f64,
    pub ratio: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3_lo: Option<f64>,
    pub c3_hi: Option<f64>,
    pub n_star: Option<usize>,
    pub slope_lhs: Option<f64>,
    pub slope_rhs: Option<f64>,
    pub verdict: Verdict,
}

impl BoundRow {
    pub fn new(n: usize, m: usize, kind: RowKind, lhs: f64, rhs: f64, rhs_norm: f64) -> Self {
        Self {
            n,
            m,
            kind,
            lhs,
            rhs,
            rhs_norm,
            ratio: ratio(lhs, rhs_norm),
            lhs_se: 0.0,
            rhs_se: 0.0,
            d1: None,
            d2: None,
            c1: None,
            c2: None,
            c3_lo: None,
            c3_hi: None,
            n_star: None,
            slope_lhs: None,
            slope_rhs: None,
            verdict: Verdict::Pass,
        }
    }
}

/// `lhs / rhs` with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// Check-specific quantities that do not fit the per-row table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportExtras {
    pub c0: Option<f64>,
    pub min_misfit: Option<f64>,
    pub condition_i: Option<bool>,
    pub c3: Option<f64>,
    pub threshold: Option<f64>,
    pub n_star: Option<usize>,
    /// `(N, ‖E[exp(ρ*Φ_N)]‖_{L¹})` for every sweep `N`.
    pub exp_integrals: Vec<(usize, f64)>,
    pub sup_exp_integral: Option<f64>,
    /// `(N, condition value)` for the `N*` search.
    pub condition_values: Vec<(usize, f64)>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub check: CheckName,
    pub rows: Vec<BoundRow>,
    pub extras: ReportExtras,
    /// Rows that could not be computed: `(N, error message)`.
    pub failures: Vec<(usize, String)>,
    pub verdict: Verdict,
}

pub const CSV_HEADER: &str =
    "N,M,check,lhs,rhs,ratio,lhs_se,rhs_se,D1,D2,C1,C2,C3_lo,C3_hi,N_star,slope_lhs,slope_rhs,verdict";

/// 17 significant digits, round-trip exact.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

impl BoundReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.m,
                r.kind.as_str(),
                fmt_num(r.lhs),
                fmt_num(r.rhs),
                fmt_num(r.ratio),
                fmt_num(r.lhs_se),
                fmt_num(r.rhs_se),
                opt(r.d1),
                opt(r.d2),
                opt(r.c1),
                opt(r.c2),
                opt(r.c3_lo),
                opt(r.c3_hi),
                r.n_star.map(|n| n.to_string()).unwrap_or_default(),
                opt(r.slope_lhs),
                opt(r.slope_rhs),
                r.verdict.as_str(),
            );
        }
        s
    }

    /// `log N, log value` pairs for the lhs and rhs error norm of each row kind.
    pub fn plot_csv(&self) -> String {
        let mut s = String::from("check,series,log_N,log_value\n");
        for r in &self.rows {
            for (series, v) in [("lhs", r.lhs), ("rhs_norm", r.rhs_norm)] {
                if v > 0.0 && v.is_finite() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{}",
                        r.kind.as_str(),
                        series,
                        fmt_num((r.n as f64).ln()),
                        fmt_num(v.ln())
                    );
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_ordering() {
        assert_eq!(Verdict::Pass.and(Verdict::Indeterminate), Verdict::Indeterminate);
        assert_eq!(Verdict::Indeterminate.and(Verdict::Fail), Verdict::Fail);
        assert_eq!(Verdict::Pass.and(Verdict::Pass), Verdict::Pass);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 12345.678901234567, 1e-300, -2.5e17] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn zero_over_zero_ratio() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(1.0, 4.0), 0.25);
    }

    #[test]
    fn csv_layout() {
        let mut row = BoundRow::new(4, 10, RowKind::Thm2, 0.5, 1.0, 1.0);
        row.c1 = Some(1.0);
        row.n_star = Some(4);
        let rep = BoundReport {
            check: CheckName::Thm2,
            rows: vec![row],
            extras: ReportExtras::default(),
            failures: vec![],
            verdict: Verdict::Pass,
        };
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 18);
        assert_eq!(fields[0], "4");
        assert_eq!(fields[2], "thm2");
        assert_eq!(fields[8], "");
        assert_eq!(fields[14], "4");
        assert_eq!(fields[17], "pass");
    }
}
