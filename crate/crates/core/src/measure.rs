//! Probability measures on a [`GridSpace`], quadrature, and the Hellinger metric.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridSpace;

/// Lebesgue density of a probability measure, tabulated on the grid nodes.
/// Used both for the prior and for alternative Hellinger reference measures.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDensity {
    grid: Arc<GridSpace>,
    density: Vec<f64>,
}

impl PriorDensity {
    pub fn uniform(grid: Arc<GridSpace>) -> Self {
        let v = 1.0 / grid.volume();
        let density = vec![v; grid.len()];
        Self { grid, density }
    }

    /// Product of independent Gaussians restricted to the box, renormalized
    /// by quadrature so that it integrates to one on the grid.
    pub fn truncated_gaussian(grid: Arc<GridSpace>, mean: &[f64], std: &[f64]) -> Result<Self> {
        let dim = grid.dim();
        if mean.len() != dim || std.len() != dim {
            return Err(Error::LengthMismatch {
                what: "truncated_gaussian parameters",
                expected: dim,
                got: mean.len().min(std.len()),
            });
        }
        if std.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("std", "must be positive and finite"));
        }
        let raw: Vec<f64> = grid
            .nodes()
            .map(|u| {
                let q: f64 = u
                    .iter()
                    .zip(mean)
                    .zip(std)
                    .map(|((x, m), s)| ((x - m) / s).powi(2))
                    .sum();
                (-0.5 * q).exp()
            })
            .collect();
        let mass = integrate(&raw, &grid, None)?;
        let density = raw.into_iter().map(|d| d / mass).collect();
        Self::from_values(grid, density)
    }

    /// Validates a tabulated density: strictly positive, finite, unit mass
    /// within `1e-8`.
    pub fn from_values(grid: Arc<GridSpace>, density: Vec<f64>) -> Result<Self> {
        grid.check_len("density", density.len())?;
        if density.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("prior density"));
        }
        if density.iter().any(|&d| d <= 0.0) {
            return Err(Error::invalid("density", "must be strictly positive at every node"));
        }
        let mass = integrate(&density, &grid, None)?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("density", format!("integrates to {mass}, not 1")));
        }
        Ok(Self { grid, density })
    }

    /// Equal mixture of the two measures, a common dominating reference.
    pub fn mixture(mu: &DensityMeasure, nu: &DensityMeasure) -> Result<Self> {
        same_grid(mu.grid(), nu.grid())?;
        let a = mu.lebesgue_density();
        let b = nu.lebesgue_density();
        let density = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        Self::from_values(mu.grid().clone(), density)
    }

    pub fn grid(&self) -> &Arc<GridSpace> {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `∫ f dμ₀`.
    pub fn expect(&self, values: &[f64]) -> Result<f64> {
        integrate(values, &self.grid, Some(&self.density))
    }
}

/// `Σ_k w_k · values_k · weight_density_k`, summed in node order.
pub fn integrate(values: &[f64], grid: &GridSpace, weight_density: Option<&[f64]>) -> Result<f64> {
    grid.check_len("values", values.len())?;
    match weight_density {
        None => Ok(grid.weights().iter().zip(values).map(|(w, v)| w * v).sum()),
        Some(d) => {
            grid.check_len("weight_density", d.len())?;
            if d.iter().any(|&x| x < 0.0) {
                return Err(Error::invalid("weight_density", "must be nonnegative"));
            }
            Ok(grid
                .weights()
                .iter()
                .zip(values)
                .zip(d)
                .map(|((w, v), p)| w * v * p)
                .sum())
        }
    }
}

pub(crate) fn same_grid(a: &Arc<GridSpace>, b: &Arc<GridSpace>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// A probability measure absolutely continuous w.r.t. the prior, stored as
/// unnormalized log-density `ℓ` together with `log Z`, so that
/// `dμ/dμ₀ = exp(ℓ) / Z`.
#[derive(Debug, Clone)]
pub struct DensityMeasure {
    prior: Arc<PriorDensity>,
    log_density: Vec<f64>,
    log_normalizer: f64,
}

impl DensityMeasure {
    /// Builds the measure from unnormalized log weights. Entries may be `-∞`
    /// (zero density) but not `+∞` or NaN.
    pub fn from_log_weights(prior: Arc<PriorDensity>, log_density: Vec<f64>) -> Result<Self> {
        prior.grid().check_len("log_density", log_density.len())?;
        if log_density.iter().any(|&l| l.is_nan() || l == f64::INFINITY) {
            return Err(Error::NonFinite("log density"));
        }
        let log_normalizer = log_integral_exp(&prior, &log_density);
        if !log_normalizer.is_finite() {
            return Err(Error::DegenerateNormalizer(0.0));
        }
        Ok(Self {
            prior,
            log_density,
            log_normalizer,
        })
    }

    /// Builds the measure from a nonnegative density w.r.t. the prior
    /// (normalization is applied).
    pub fn from_prior_density(prior: Arc<PriorDensity>, density: &[f64]) -> Result<Self> {
        if density.iter().any(|&d| !d.is_finite() || d < 0.0) {
            return Err(Error::NonFinite("density"));
        }
        let logs = density.iter().map(|d| d.ln()).collect();
        Self::from_log_weights(prior, logs)
    }

    pub fn prior(&self) -> &Arc<PriorDensity> {
        &self.prior
    }

    pub fn grid(&self) -> &Arc<GridSpace> {
        self.prior.grid()
    }

    pub fn log_density_wrt_prior(&self) -> &[f64] {
        &self.log_density
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn normalizer(&self) -> f64 {
        self.log_normalizer.exp()
    }

    /// Normalized `dμ/dμ₀` at every node.
    pub fn density_wrt_prior(&self) -> Vec<f64> {
        self.log_density
            .iter()
            .map(|l| (l - self.log_normalizer).exp())
            .collect()
    }

    /// Normalized Lebesgue density at every node.
    pub fn lebesgue_density(&self) -> Vec<f64> {
        self.density_wrt_prior()
            .iter()
            .zip(self.prior.density())
            .map(|(r, p)| r * p)
            .collect()
    }

    /// Total mass on the grid; one up to rounding.
    pub fn mass(&self) -> f64 {
        self.prior
            .expect(&self.density_wrt_prior())
            .expect("lengths checked at construction")
    }

    /// `∫ f dμ`.
    pub fn expect(&self, values: &[f64]) -> Result<f64> {
        let w: Vec<f64> = self
            .density_wrt_prior()
            .iter()
            .zip(values)
            .map(|(r, v)| r * v)
            .collect();
        self.prior.expect(&w)
    }
}

/// `log ∫ exp(ℓ) dμ₀`, with max-subtraction.
pub(crate) fn log_integral_exp(prior: &PriorDensity, log_values: &[f64]) -> f64 {
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = prior
        .grid()
        .weights()
        .iter()
        .zip(prior.density())
        .zip(log_values)
        .map(|((w, p), l)| w * p * (l - max).exp())
        .sum();
    max + s.ln()
}

/// Hellinger distance `sqrt(½ ∫ |√(dμ/dπ) − √(dν/dπ)|² dπ)`, clamped to
/// `[0, 1]` against rounding.
pub fn hellinger(mu: &DensityMeasure, nu: &DensityMeasure, reference: &PriorDensity) -> Result<f64> {
    same_grid(mu.grid(), nu.grid())?;
    same_grid(mu.grid(), reference.grid())?;
    let f = mu.lebesgue_density();
    let g = nu.lebesgue_density();
    if f.iter().chain(&g).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("density"));
    }
    let grid = reference.grid();
    let mut acc = 0.0;
    for (((w, r), a), b) in grid.weights().iter().zip(reference.density()).zip(&f).zip(&g) {
        let diff = (a / r).sqrt() - (b / r).sqrt();
        acc += w * r * diff * diff;
    }
    Ok((0.5 * acc).clamp(0.0, 1.0).sqrt())
}

/// Hellinger distance using the first measure's prior as the reference.
pub fn hellinger_wrt_prior(mu: &DensityMeasure, nu: &DensityMeasure) -> Result<f64> {
    hellinger(mu, nu, mu.prior())
}
