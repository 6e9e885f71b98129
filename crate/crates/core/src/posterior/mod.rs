//! True, random-approximate, and marginal-approximate posteriors, all held
//! as densities w.r.t. the prior.

mod mcmc;

pub use mcmc::{mh_sample, ChainOutput, LogTarget, DEFAULT_STEP_SIZE};

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{log_integral_exp, DensityMeasure, PriorDensity};
use crate::models::RandomMisfitFamily;
use crate::norms::{Estimate, SampleTable};

/// Normalizers below this are treated as a degenerate posterior.
pub const Z_FLOOR: f64 = 1e-300;

/// `dμ/dμ₀ = exp(−Φ)/Z` with `Z = ∫ exp(−Φ) dμ₀`.
pub fn normalize(misfit: &[f64], prior: &Arc<PriorDensity>) -> Result<(DensityMeasure, f64)> {
    if misfit.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("misfit"));
    }
    prior.grid().check_len("misfit", misfit.len())?;
    let logs: Vec<f64> = misfit.iter().map(|m| -m).collect();
    let log_z = log_integral_exp(prior, &logs);
    if log_z < Z_FLOOR.ln() {
        return Err(Error::DegenerateNormalizer(log_z.exp()));
    }
    let m = DensityMeasure::from_log_weights(prior.clone(), logs)?;
    let z = m.normalizer();
    Ok((m, z))
}

/// `Φ_N(ω_j, ·)` for `j = 0..M` as an `M × K` table. Realizations are
/// evaluated in parallel and assembled by ω-index.
pub fn realization_table(family: &RandomMisfitFamily, prior: &PriorDensity, m: usize) -> Result<SampleTable> {
    let grid = prior.grid();
    let rows: Vec<Vec<f64>> = (0..m as u64)
        .into_par_iter()
        .map(|omega| family.misfit_on_grid(omega, grid))
        .collect::<Result<_>>()?;
    let t = SampleTable::from_rows(rows)?;
    if !t.all_finite() {
        return Err(Error::NonFinite("misfit realization"));
    }
    Ok(t)
}

/// `μ_N(ω)` and `Z_N(ω)` for one realization.
pub fn approximate_posterior(
    family: &RandomMisfitFamily,
    omega: u64,
    prior: &Arc<PriorDensity>,
) -> Result<(DensityMeasure, f64)> {
    let phi_n = family.misfit_on_grid(omega, prior.grid())?;
    normalize(&phi_n, prior)
}

#[derive(Debug, Clone)]
pub struct MarginalPosterior {
    pub measure: DensityMeasure,
    /// Empirical `E_ν[Z_N]` with its Monte Carlo standard error.
    pub mean_z: Estimate,
}

/// Marginal posterior from an `M × K` table of misfit realizations.
///
/// Node density is the ω-mean of `exp(−Φ_N)` over the ω-mean of `Z_N`; the
/// same realizations feed numerator and denominator, so the result is
/// normalized on the grid.
pub fn marginal_from_table(table: &SampleTable, prior: &Arc<PriorDensity>) -> Result<MarginalPosterior> {
    if table.rows() == 0 {
        return Err(Error::invalid("M", "need at least one realization"));
    }
    prior.grid().check_len("table columns", table.cols())?;
    let m = table.rows() as f64;
    // Node-wise log-mean-exp of −Φ_N.
    let k = table.cols();
    let mut maxes = vec![f64::NEG_INFINITY; k];
    for row in table.iter_rows() {
        for (mx, &v) in maxes.iter_mut().zip(row) {
            *mx = mx.max(-v);
        }
    }
    let mut acc = vec![0.0; k];
    for row in table.iter_rows() {
        for ((a, &v), mx) in acc.iter_mut().zip(row).zip(&maxes) {
            *a += (-v - mx).exp();
        }
    }
    let log_mean: Vec<f64> = acc.iter().zip(&maxes).map(|(a, mx)| mx + (a / m).ln()).collect();
    let measure = DensityMeasure::from_log_weights(prior.clone(), log_mean)?;
    let mean_z_value = measure.normalizer();
    if !(mean_z_value >= Z_FLOOR) {
        return Err(Error::DegenerateNormalizer(mean_z_value));
    }
    let z_n = realization_normalizers(table, prior);
    let se = if table.rows() > 1 {
        let mean = z_n.iter().sum::<f64>() / m;
        let var = z_n.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        f64::NAN
    };
    Ok(MarginalPosterior {
        measure,
        mean_z: Estimate {
            value: mean_z_value,
            se,
        },
    })
}

/// Marginal approximate posterior from the first `M` ω-streams.
pub fn marginal_posterior(
    family: &RandomMisfitFamily,
    m: usize,
    prior: &Arc<PriorDensity>,
) -> Result<MarginalPosterior> {
    if m == 0 {
        return Err(Error::invalid("M", "need at least one realization"));
    }
    let table = realization_table(family, prior, m)?;
    marginal_from_table(&table, prior)
}

/// `Z_N(ω)` for every row of a realization table.
pub fn realization_normalizers(table: &SampleTable, prior: &PriorDensity) -> Vec<f64> {
    table
        .iter_rows()
        .map(|row| {
            let logs: Vec<f64> = row.iter().map(|v| -v).collect();
            log_integral_exp(prior, &logs).exp()
        })
        .collect()
}

/// Everything built from one family at one `N`.
#[derive(Debug, Clone)]
pub struct PosteriorBundle {
    pub true_posterior: DensityMeasure,
    pub z: f64,
    pub realizations: Vec<(u64, DensityMeasure, f64)>,
    pub marginal: Option<MarginalPosterior>,
}

impl PosteriorBundle {
    pub fn build(
        misfit: &[f64],
        family: &RandomMisfitFamily,
        m: usize,
        prior: &Arc<PriorDensity>,
        with_marginal: bool,
    ) -> Result<Self> {
        let (true_posterior, z) = normalize(misfit, prior)?;
        let table = realization_table(family, prior, m)?;
        let realizations = table
            .iter_rows()
            .enumerate()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(j, row)| normalize(row, prior).map(|(mu, zn)| (j as u64, mu, zn)))
            .collect::<Result<Vec<_>>>()?;
        let marginal = if with_marginal {
            Some(marginal_from_table(&table, prior)?)
        } else {
            None
        };
        Ok(Self {
            true_posterior,
            z,
            realizations,
            marginal,
        })
    }
}

/// Quadrature mean and per-dimension variance under a measure.
pub fn moments(measure: &DensityMeasure) -> (Vec<f64>, Vec<f64>) {
    let grid = measure.grid();
    let dim = grid.dim();
    let mut mean = Vec::with_capacity(dim);
    let mut var = Vec::with_capacity(dim);
    for d in 0..dim {
        let x: Vec<f64> = grid.nodes().map(|u| u[d]).collect();
        let m = measure.expect(&x).expect("grid-shaped");
        let sq: Vec<f64> = x.iter().map(|v| (v - m).powi(2)).collect();
        mean.push(m);
        var.push(measure.expect(&sq).expect("grid-shaped"));
    }
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuadratureRule;
    use crate::measure::hellinger_wrt_prior;
    use crate::models::{FamilyKind, PerturbationNoise, PerturbationProfile, SketchDistribution};
    use crate::problem::problems::{tp1, tp2, unit_line};
    use crate::stream::StreamRoot;

    fn truncated_normal_mean() -> f64 {
        use statrs::distribution::{Continuous, ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        // N(0.5, 1) restricted to [-1, 1]: standardized bounds -1.5, 0.5.
        0.5 + (n.pdf(-1.5) - n.pdf(0.5)) / (n.cdf(0.5) - n.cdf(-1.5))
    }

    #[test]
    fn flat_misfit_gives_prior() {
        let g = unit_line(9, QuadratureRule::Trapezoid);
        let prior = Arc::new(PriorDensity::uniform(g));
        let (mu, z) = normalize(&[0.0; 9], &prior).unwrap();
        assert!((z - 1.0).abs() < 1e-15);
        assert!(mu.density_wrt_prior().iter().all(|d| (d - 1.0).abs() < 1e-14));
    }

    #[test]
    fn constant_misfit_cancels() {
        let g = unit_line(9, QuadratureRule::Trapezoid);
        let prior = Arc::new(PriorDensity::uniform(g));
        let (mu, z) = normalize(&[2.5; 9], &prior).unwrap();
        assert!((z - (-2.5f64).exp()).abs() < 1e-15);
        assert!(mu.density_wrt_prior().iter().all(|d| (d - 1.0).abs() < 1e-14));
    }

    #[test]
    fn tp1_density_at_half() {
        let p = tp1(unit_line(201, QuadratureRule::Trapezoid)).unwrap();
        // Trapezoid with 201 nodes: node 150 is u = 0.5 exactly.
        assert_eq!(p.grid().node(150)[0], 0.5);
        let d = p.posterior().density_wrt_prior()[150];
        assert!((d - 1.277312).abs() < 2e-5, "{d}");
        assert!((p.z() - 0.782894).abs() < 1e-5);
    }

    #[test]
    fn degenerate_and_nonfinite_misfits_rejected() {
        let g = unit_line(5, QuadratureRule::Trapezoid);
        let prior = Arc::new(PriorDensity::uniform(g));
        assert!(matches!(normalize(&[800.0; 5], &prior), Err(Error::DegenerateNormalizer(_))));
        assert!(normalize(&[0.0, f64::NAN, 0.0, 0.0, 0.0], &prior).is_err());
    }

    #[test]
    fn offset_invariance() {
        let p = tp2(unit_line(32, QuadratureRule::GaussLegendre)).unwrap();
        let shifted: Vec<f64> = p.misfit().iter().map(|m| m + 3.7).collect();
        let (mu, z) = normalize(&shifted, p.prior()).unwrap();
        for (a, b) in mu.density_wrt_prior().iter().zip(p.posterior().density_wrt_prior()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((z - p.z() * (-3.7f64).exp()).abs() < 1e-12 * p.z());
    }

    #[test]
    fn constant_shift_family_keeps_posterior_shape() {
        let p = tp2(unit_line(32, QuadratureRule::GaussLegendre)).unwrap();
        let fam = RandomMisfitFamily::new(
            p.model().clone(),
            FamilyKind::DirectPerturbation {
                scale: 0.7,
                noise: PerturbationNoise::Uniform,
                profile: PerturbationProfile::Constant,
            },
            4,
            StreamRoot::new(1, "shift"),
        )
        .unwrap();
        for omega in 0..10 {
            let (mu_n, z_n) = approximate_posterior(&fam, omega, p.prior()).unwrap();
            let shift = fam.misfit_on_grid(omega, p.grid()).unwrap()[0] - p.misfit()[0];
            assert!(hellinger_wrt_prior(p.posterior(), &mu_n).unwrap() < 1e-7);
            assert!((z_n - (-shift).exp() * p.z()).abs() < 1e-10);
        }
    }

    #[test]
    fn marginal_with_one_sample_is_the_realization() {
        let p = tp2(unit_line(32, QuadratureRule::GaussLegendre)).unwrap();
        let fam = RandomMisfitFamily::new(
            p.model().clone(),
            FamilyKind::SketchedQuadratic {
                sketch: SketchDistribution::Rademacher,
            },
            3,
            StreamRoot::new(2, "m1"),
        )
        .unwrap();
        let marg = marginal_posterior(&fam, 1, p.prior()).unwrap();
        let (mu0, z0) = approximate_posterior(&fam, 0, p.prior()).unwrap();
        for (a, b) in marg.measure.density_wrt_prior().iter().zip(mu0.density_wrt_prior()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((marg.mean_z.value - z0).abs() < 1e-14);
    }

    #[test]
    fn marginal_of_exact_family_is_true_posterior() {
        let p = tp2(unit_line(32, QuadratureRule::GaussLegendre)).unwrap();
        let fam = RandomMisfitFamily::new(
            p.model().clone(),
            FamilyKind::PerturbedForward { scale: 0.0 },
            3,
            StreamRoot::new(2, "exact"),
        )
        .unwrap();
        let marg = marginal_posterior(&fam, 5, p.prior()).unwrap();
        assert!(hellinger_wrt_prior(p.posterior(), &marg.measure).unwrap() < 1e-7);
        assert!((marg.mean_z.value - p.z()).abs() < 1e-14);
    }

    #[test]
    fn bundle_sizes_and_normalization() {
        let p = tp2(unit_line(16, QuadratureRule::GaussLegendre)).unwrap();
        let fam = RandomMisfitFamily::new(
            p.model().clone(),
            FamilyKind::SketchedQuadratic {
                sketch: SketchDistribution::Rademacher,
            },
            4,
            StreamRoot::new(3, "bundle"),
        )
        .unwrap();
        let b = PosteriorBundle::build(p.misfit(), &fam, 12, p.prior(), true).unwrap();
        assert_eq!(b.realizations.len(), 12);
        for (j, (omega, mu, zn)) in b.realizations.iter().enumerate() {
            assert_eq!(*omega, j as u64);
            assert!((mu.mass() - 1.0).abs() < 1e-8);
            assert!(*zn > 0.0 && zn.is_finite());
        }
        assert!((b.marginal.unwrap().measure.mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn moments_of_uniform_and_tp1() {
        let g = unit_line(64, QuadratureRule::GaussLegendre);
        let prior = Arc::new(PriorDensity::uniform(g.clone()));
        let (mu, _) = normalize(&vec![0.0; 64], &prior).unwrap();
        let (m, v) = moments(&mu);
        assert!(m[0].abs() < 1e-14);
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-12);

        let p = tp1(g).unwrap();
        let (m, _) = moments(p.posterior());
        let oracle = truncated_normal_mean();
        assert!((oracle - 0.1437).abs() < 1e-4);
        assert!((m[0] - oracle).abs() < 1e-10, "{} vs {oracle}", m[0]);
    }

    #[test]
    fn point_mass_like_density_mean() {
        let g = unit_line(11, QuadratureRule::Trapezoid);
        let prior = Arc::new(PriorDensity::uniform(g.clone()));
        let mut logs = vec![f64::NEG_INFINITY; 11];
        logs[7] = 0.0;
        let mu = DensityMeasure::from_log_weights(prior, logs).unwrap();
        let (m, v) = moments(&mu);
        assert!((m[0] - g.node(7)[0]).abs() < 1e-15);
        assert!(v[0].abs() < 1e-15);
    }
}
