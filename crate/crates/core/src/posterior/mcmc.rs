//! Random-walk Metropolis on a box, as an independent check of quadrature
//! posteriors.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::Interval;
use crate::measure::DensityMeasure;
use crate::stream::{Label, StreamRoot};

/// Unnormalized log density on a box; `-∞` outside.
pub trait LogTarget {
    fn dim(&self) -> usize;
    fn bounds(&self) -> &[Interval];
    fn log_density(&self, u: &[f64]) -> f64;
}

/// A grid measure seen as a continuous target: multilinear interpolation of
/// the Lebesgue log density between nodes, held constant beyond the outer
/// nodes.
impl LogTarget for DensityMeasure {
    fn dim(&self) -> usize {
        self.grid().dim()
    }

    fn bounds(&self) -> &[Interval] {
        self.grid().bounds()
    }

    fn log_density(&self, u: &[f64]) -> f64 {
        let grid = self.grid();
        if !grid.contains(u) {
            return f64::NEG_INFINITY;
        }
        let dim = grid.dim();
        let n = grid.nodes_per_dim();
        let cells: Vec<(usize, f64)> = (0..dim)
            .map(|d| {
                let a = grid.axis(d);
                let x = u[d];
                if x <= a[0] {
                    (0, 0.0)
                } else if x >= a[n - 1] {
                    (n - 2, 1.0)
                } else {
                    let i = a.partition_point(|&t| t <= x).saturating_sub(1).min(n - 2);
                    (i, (x - a[i]) / (a[i + 1] - a[i]))
                }
            })
            .collect();
        let logs = self.log_density_wrt_prior();
        let prior = self.prior().density();
        let mut acc = 0.0;
        let mut any = false;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for (d, &(i, t)) in cells.iter().enumerate() {
                let up = (corner >> (dim - 1 - d)) & 1 == 1;
                w *= if up { t } else { 1.0 - t };
                flat = flat * n + i + up as usize;
            }
            if w > 0.0 {
                let l = logs[flat] + prior[flat].ln();
                if l == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                acc += w * l;
                any = true;
            }
        }
        if any {
            acc
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub samples: Vec<Vec<f64>>,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub seed: Vec<Label>,
}

impl ChainOutput {
    pub fn mean(&self) -> Vec<f64> {
        let dim = self.samples.first().map_or(0, Vec::len);
        let n = self.samples.len() as f64;
        (0..dim)
            .map(|d| self.samples.iter().map(|s| s[d]).sum::<f64>() / n)
            .collect()
    }

    /// Batch-means standard error of the chain mean, per dimension, using
    /// `⌊√n⌋` batches.
    pub fn effective_standard_error(&self) -> Vec<f64> {
        let n = self.samples.len();
        let dim = self.samples.first().map_or(0, Vec::len);
        let batches = ((n as f64).sqrt().floor() as usize).max(2);
        let size = n / batches;
        if size == 0 {
            return vec![f64::NAN; dim];
        }
        let used = batches * size;
        (0..dim)
            .map(|d| {
                let means: Vec<f64> = (0..batches)
                    .map(|b| self.samples[b * size..(b + 1) * size].iter().map(|s| s[d]).sum::<f64>() / size as f64)
                    .collect();
                let grand = means.iter().sum::<f64>() / batches as f64;
                let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
                (var * size as f64 / used as f64).sqrt()
            })
            .collect()
    }
}

/// Proposal scale as a fraction of the box width.
pub const DEFAULT_STEP_SIZE: f64 = 0.5;

/// Random-walk Metropolis started at the box center. Proposals are
/// `u + step_size · width_i · ξ_i` with standard normal `ξ`; anything that
/// leaves the box is rejected.
pub fn mh_sample(target: &impl LogTarget, steps: usize, step_size: f64, root: &StreamRoot) -> Result<ChainOutput> {
    if steps == 0 {
        return Err(Error::invalid("steps", "need at least one step"));
    }
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::invalid("step_size", "must be positive and finite"));
    }
    let bounds = target.bounds();
    let widths: Vec<f64> = bounds.iter().map(Interval::width).collect();
    let mut rng = root.stream();
    let mut x: Vec<f64> = bounds.iter().map(|b| 0.5 * (b.lo + b.hi)).collect();
    let mut lx = target.log_density(&x);
    if lx == f64::NEG_INFINITY {
        return Err(Error::invalid("target", "zero density at the box center"));
    }
    let mut samples = Vec::with_capacity(steps);
    let mut accepted = 0usize;
    let mut prop = vec![0.0; x.len()];
    for _ in 0..steps {
        for ((p, xi), w) in prop.iter_mut().zip(&x).zip(&widths) {
            let z: f64 = rng.sample(StandardNormal);
            *p = xi + step_size * w * z;
        }
        let inside = bounds.iter().zip(&prop).all(|(b, &v)| b.contains(v));
        // Always consume the uniform so the stream layout is fixed.
        let log_u = rng.random::<f64>().ln();
        if inside {
            let lp = target.log_density(&prop);
            if log_u < lp - lx {
                x.copy_from_slice(&prop);
                lx = lp;
                accepted += 1;
            }
        }
        samples.push(x.clone());
    }
    let acceptance_rate = accepted as f64 / steps as f64;
    if !(0.1..=0.9).contains(&acceptance_rate) {
        log::warn!("metropolis acceptance rate {acceptance_rate:.3} outside [0.1, 0.9]");
    }
    Ok(ChainOutput {
        samples,
        accepted,
        acceptance_rate,
        seed: root.path.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuadratureRule;
    use crate::measure::PriorDensity;
    use crate::posterior::{moments, normalize};
    use crate::problem::problems::{tp1, unit_line};
    use std::sync::Arc;

    #[test]
    fn flat_target_accepts_everything_inside() {
        let g = unit_line(16, QuadratureRule::Trapezoid);
        let prior = Arc::new(PriorDensity::uniform(g));
        let (flat, _) = normalize(&[0.0; 16], &prior).unwrap();
        let out = mh_sample(&flat, 500, 1e-3, &StreamRoot::new(1, "flat")).unwrap();
        assert_eq!(out.acceptance_rate, 1.0);
        assert_eq!(out.accepted, 500);
    }

    #[test]
    fn same_seed_same_chain() {
        let p = tp1(unit_line(32, QuadratureRule::GaussLegendre)).unwrap();
        let root = StreamRoot::new(5, "mh");
        let a = mh_sample(&p, 300, 0.5, &root).unwrap();
        let b = mh_sample(&p, 300, 0.5, &root).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.iter().all(|s| (-1.0..=1.0).contains(&s[0])));
        assert_eq!(a.acceptance_rate, a.accepted as f64 / 300.0);
    }

    #[test]
    fn grid_target_chain_matches_quadrature_mean() {
        let p = tp1(unit_line(101, QuadratureRule::Trapezoid)).unwrap();
        let (qmean, _) = moments(p.posterior());
        let out = mh_sample(p.posterior(), 40_000, 0.5, &StreamRoot::new(8, "grid-mh")).unwrap();
        let m = out.mean()[0];
        let se = out.effective_standard_error()[0];
        // 1e-3 covers the interpolation-vs-trapezoid discretization gap.
        assert!((m - qmean[0]).abs() < 3.0 * se + 1e-3, "{m} vs {} (se {se})", qmean[0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = tp1(unit_line(8, QuadratureRule::GaussLegendre)).unwrap();
        assert!(mh_sample(&p, 0, 0.5, &StreamRoot::new(0, "x")).is_err());
        assert!(mh_sample(&p, 10, 0.0, &StreamRoot::new(0, "x")).is_err());
    }
}
