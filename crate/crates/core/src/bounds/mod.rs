//! Empirical checks of the Hellinger error bounds.

pub mod checks;
pub mod conditions;
pub mod exponents;
pub mod rate;
pub mod report;
pub mod sweep;

pub use checks::{
    check_corollary, check_forward, check_thm1, check_thm2, construction_lower_bound, finalize_ratio_rows,
    CorollaryOptions, RowContext, VerdictPolicy,
};
pub use conditions::{
    thm1_conditions, thm1_error_norm, thm2_conditions, thm2_error_norm, MinBranch, Thm1Conditions, Thm2Conditions,
};
pub use exponents::{conjugate, ExponentSet};
pub use rate::{fit_rate, RateFit};
pub use report::{BoundReport, BoundRow, CheckName, ReportExtras, RowKind, Verdict, CSV_HEADER};
pub use sweep::{build_contexts, run_sweep, SweepOptions, SweepSpec};
