use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of one sketching vector `X` with `E[X] = 0`, `E[XXᵀ] = I`, drawn
/// componentwise i.i.d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SketchDistribution {
    Rademacher,
    /// Zero with probability `ell`, otherwise `±(1-ell)^{-1/2}` with equal
    /// probability. `ell = 0` is Rademacher.
    EllSparse { ell: f64 },
    Gaussian,
}

impl SketchDistribution {
    pub fn ell_sparse(ell: f64) -> Result<Self> {
        let d = SketchDistribution::EllSparse { ell };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if let SketchDistribution::EllSparse { ell } = *self {
            if !(0.0..1.0).contains(&ell) {
                return Err(Error::invalid("ell", format!("must lie in [0, 1), got {ell}")));
            }
        }
        Ok(())
    }

    /// Draws one component.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SketchDistribution::Rademacher => sign(rng),
            SketchDistribution::EllSparse { ell } => {
                let u: f64 = rng.random();
                if u < ell {
                    0.0
                } else {
                    let s = if u < ell + 0.5 * (1.0 - ell) { -1.0 } else { 1.0 };
                    s / (1.0 - ell).sqrt()
                }
            }
            SketchDistribution::Gaussian => rng.sample(StandardNormal),
        }
    }
}

fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

pub fn sample_sketch<R: Rng + ?Sized>(
    dist: &SketchDistribution,
    d: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    dist.validate()?;
    Ok((0..d).map(|_| dist.draw(rng)).collect())
}
