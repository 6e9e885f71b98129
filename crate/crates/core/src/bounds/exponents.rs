use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integrability exponents for the three bounds. Every exponent is `> 1`;
/// `rho_star > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSet {
    #[serde(default = "two")]
    pub q1: f64,
    #[serde(default = "two")]
    pub q2: f64,
    #[serde(default = "two")]
    pub p1: f64,
    #[serde(default = "two")]
    pub p2: f64,
    #[serde(default = "two")]
    pub p3: f64,
    #[serde(default = "three")]
    pub rho_star: f64,
}

fn two() -> f64 {
    2.0
}

fn three() -> f64 {
    3.0
}

impl Default for ExponentSet {
    fn default() -> Self {
        Self {
            q1: 2.0,
            q2: 2.0,
            p1: 2.0,
            p2: 2.0,
            p3: 2.0,
            rho_star: 3.0,
        }
    }
}

/// Hölder conjugate `q / (q − 1)`.
pub fn conjugate(q: f64) -> f64 {
    if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

impl ExponentSet {
    pub fn validate(&self) -> Result<()> {
        for (name, q) in [
            ("q1", self.q1),
            ("q2", self.q2),
            ("p1", self.p1),
            ("p2", self.p2),
            ("p3", self.p3),
        ] {
            if !(q > 1.0 && q.is_finite()) {
                return Err(Error::InvalidArgument {
                    name,
                    reason: format!("must be a finite real > 1, got {q}"),
                });
            }
        }
        if !(self.rho_star > 2.0 && self.rho_star.is_finite()) {
            return Err(Error::invalid("rho_star", format!("must be finite and > 2, got {}", self.rho_star)));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.q1, self.q2, self.p1, self.p2, self.p3, self.rho_star]
    }

    /// `2ρ*/(ρ*−1)`, the outer exponent of the marginal-posterior conclusions.
    pub fn rho_marginal(&self) -> f64 {
        2.0 * self.rho_star / (self.rho_star - 1.0)
    }

    /// `2ρ*/(ρ*−2)`, the inner exponent of the random-posterior conclusions.
    pub fn rho_random(&self) -> f64 {
        2.0 * self.rho_star / (self.rho_star - 2.0)
    }
}
