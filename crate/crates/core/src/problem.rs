//! A discretized Bayesian inverse problem: grid, prior, likelihood, and the
//! true posterior on the grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::measure::{DensityMeasure, PriorDensity};
use crate::models::{ForwardModel, GaussianNoise, ObservationModel};
use crate::posterior::normalize;

/// Continuous prior family on the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorKind {
    Uniform,
    TruncatedGaussian { mean: Vec<f64>, std: Vec<f64> },
}

impl PriorKind {
    pub fn tabulate(&self, grid: Arc<GridSpace>) -> Result<PriorDensity> {
        match self {
            PriorKind::Uniform => Ok(PriorDensity::uniform(grid)),
            PriorKind::TruncatedGaussian { mean, std } => PriorDensity::truncated_gaussian(grid, mean, std),
        }
    }

    /// Unnormalized log density at an arbitrary point of the box.
    pub fn log_density_unnormalized(&self, u: &[f64]) -> f64 {
        match self {
            PriorKind::Uniform => 0.0,
            PriorKind::TruncatedGaussian { mean, std } => {
                -0.5 * u
                    .iter()
                    .zip(mean)
                    .zip(std)
                    .map(|((x, m), s)| ((x - m) / s).powi(2))
                    .sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct InverseProblem {
    grid: Arc<GridSpace>,
    prior_kind: PriorKind,
    prior: Arc<PriorDensity>,
    model: ObservationModel,
    misfit: Vec<f64>,
    posterior: DensityMeasure,
}

impl InverseProblem {
    pub fn new(grid: Arc<GridSpace>, prior_kind: PriorKind, model: ObservationModel) -> Result<Self> {
        let prior = Arc::new(prior_kind.tabulate(grid.clone())?);
        let misfit = model.misfit_on_grid(&grid)?;
        let (posterior, _) = normalize(&misfit, &prior)?;
        Ok(Self {
            grid,
            prior_kind,
            prior,
            model,
            misfit,
            posterior,
        })
    }

    pub fn grid(&self) -> &Arc<GridSpace> {
        &self.grid
    }

    pub fn prior(&self) -> &Arc<PriorDensity> {
        &self.prior
    }

    pub fn prior_kind(&self) -> &PriorKind {
        &self.prior_kind
    }

    pub fn model(&self) -> &ObservationModel {
        &self.model
    }

    /// `Φ` at every node.
    pub fn misfit(&self) -> &[f64] {
        &self.misfit
    }

    pub fn posterior(&self) -> &DensityMeasure {
        &self.posterior
    }

    /// `Z = ∫ exp(−Φ) dμ₀`.
    pub fn z(&self) -> f64 {
        self.posterior.normalizer()
    }

    /// Unnormalized posterior log density w.r.t. Lebesgue measure at any
    /// point of the box, for samplers.
    pub fn log_target(&self, u: &[f64]) -> Result<f64> {
        if !self.grid.contains(u) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-self.model.misfit(u)? + self.prior_kind.log_density_unnormalized(u))
    }
}

impl crate::posterior::LogTarget for InverseProblem {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn bounds(&self) -> &[crate::grid::Interval] {
        self.grid.bounds()
    }

    fn log_density(&self, u: &[f64]) -> f64 {
        self.log_target(u).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Reference problems used throughout the tests and the shipped configs.
pub mod problems {
    use super::*;
    use crate::grid::{build_grid, Interval, QuadratureRule};
    use crate::models::TrigTerm;

    /// Offset added to `G(0.3)` to form the TP2 data.
    pub const TP2_OFFSET: [f64; 3] = [0.1, -0.05, 0.02];
    pub const TP2_TRUTH: f64 = 0.3;

    pub fn unit_line(nodes: usize, rule: QuadratureRule) -> Arc<GridSpace> {
        Arc::new(build_grid(1, &[Interval::new(-1.0, 1.0)], nodes, rule).expect("valid grid"))
    }

    /// `G(u) = (u, u², sin u)`.
    pub fn tp2_forward() -> ForwardModel {
        ForwardModel::Stack {
            parts: vec![
                ForwardModel::Polynomial {
                    coefficients: vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 0.0, 1.0]]],
                },
                ForwardModel::Trigonometric {
                    terms: vec![vec![TrigTerm {
                        amplitude: 1.0,
                        frequency: vec![1.0],
                        phase: 0.0,
                    }]],
                },
            ],
        }
    }

    pub fn tp2_data() -> Vec<f64> {
        use crate::models::ForwardMap;
        tp2_forward()
            .eval(&[TP2_TRUTH])
            .iter()
            .zip(TP2_OFFSET)
            .map(|(g, o)| g + o)
            .collect()
    }

    /// Uniform prior on `[-1, 1]`, `G(u) = u`, `Γ = 1`, `y = 0.5`.
    pub fn tp1(grid: Arc<GridSpace>) -> Result<InverseProblem> {
        let model = ObservationModel::new(ForwardModel::identity(1), GaussianNoise::identity(1), vec![0.5], 1)?;
        InverseProblem::new(grid, PriorKind::Uniform, model)
    }

    /// Uniform prior on `[-1, 1]`, `G(u) = (u, u², sin u)`, `Γ = I₃`,
    /// `y = G(0.3) + (0.1, −0.05, 0.02)`.
    pub fn tp2(grid: Arc<GridSpace>) -> Result<InverseProblem> {
        if grid.dim() != 1 {
            return Err(Error::invalid("grid", "TP2 is one-dimensional"));
        }
        let model = ObservationModel::new(tp2_forward(), GaussianNoise::identity(3), tp2_data(), 1)?;
        InverseProblem::new(grid, PriorKind::Uniform, model)
    }
}

pub use problems::{tp2_data, tp2_forward};
