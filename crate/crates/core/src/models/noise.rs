use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centered Gaussian observational noise `N(0, Γ)` with its symmetric
/// inverse square root precomputed by eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNoise {
    gamma: DMatrix<f64>,
    gamma_inv_sqrt: DMatrix<f64>,
}

/// Serialized form: the covariance as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub gamma: Vec<Vec<f64>>,
}

impl GaussianNoise {
    pub fn new(gamma: DMatrix<f64>) -> Result<Self> {
        let d = gamma.nrows();
        if d == 0 || gamma.ncols() != d {
            return Err(Error::invalid("gamma", "must be a nonempty square matrix"));
        }
        if gamma.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gamma"));
        }
        let scale = gamma.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (gamma[(i, j)] - gamma[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid("gamma", "not symmetric"));
                }
            }
        }
        let eig = gamma.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::invalid("gamma", "not positive definite"));
        }
        let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
        let v = &eig.eigenvectors;
        let gamma_inv_sqrt = v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose();
        // Re-symmetrize against rounding in the product.
        let gamma_inv_sqrt = (&gamma_inv_sqrt + gamma_inv_sqrt.transpose()) * 0.5;
        Ok(Self {
            gamma,
            gamma_inv_sqrt,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("gamma", "must be square"));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d)).expect("identity is SPD")
    }

    pub fn scalar(variance: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, variance))
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn gamma_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.gamma_inv_sqrt
    }

    /// `Γ^{-1/2} r`.
    pub fn whiten(&self, residual: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.gamma_inv_sqrt[(i, j)] * residual[j]).sum())
            .collect()
    }

    pub fn to_spec(&self) -> NoiseSpec {
        NoiseSpec {
            gamma: self
                .gamma
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}
