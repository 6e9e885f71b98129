//! Mixed expectation norms `‖E_ν[f]‖_{L^q_{μ₀}}` with the inner expectation
//! realized as an empirical mean over `M` explicit ω-realizations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::PriorDensity;

/// Values indexed by (ω-realization, grid node), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SampleTable {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "sample table",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("rows", "ragged sample table"));
        }
        Self::new(m, k, rows.into_iter().flatten().collect())
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Number of ω-realizations.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of grid nodes.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise combination of two same-shaped tables.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::invalid("table", "shape mismatch"));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Elementwise map with `(row, column)` indices available, for
    /// per-ω scalars and per-node reference values.
    pub fn map_indexed(&self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        let cols = self.cols.max(1);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .enumerate()
                .map(|(i, &x)| f(i / cols, i % cols, x))
                .collect(),
        }
    }

    /// Node-wise empirical mean over rows.
    pub fn column_means(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        let m = self.rows as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }

    pub fn column_max(&self) -> Vec<f64> {
        let mut acc = vec![f64::NEG_INFINITY; self.cols];
        for row in self.iter_rows() {
            for (a, &x) in acc.iter_mut().zip(row) {
                *a = a.max(x);
            }
        }
        acc
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub q_inner: f64,
    pub q_outer: f64,
    pub omega_samples: usize,
}

impl MixedNormSpec {
    pub fn new(q_inner: f64, q_outer: f64, omega_samples: usize) -> Result<Self> {
        for (name, q) in [("q_inner", q_inner), ("q_outer", q_outer)] {
            if q.is_nan() || q < 1.0 {
                return Err(Error::InvalidArgument {
                    name,
                    reason: format!("exponent must be in [1, ∞], got {q}"),
                });
            }
        }
        if omega_samples == 0 {
            return Err(Error::invalid("omega_samples", "need at least one realization"));
        }
        Ok(Self {
            q_inner,
            q_outer,
            omega_samples,
        })
    }
}

/// A Monte Carlo estimate with its (jackknife) standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }
}

/// `‖v‖_{L^q_{μ₀}}`; `q = ∞` is the maximum over nodes.
pub fn lq_norm(values: &[f64], q: f64, prior: &PriorDensity) -> Result<f64> {
    prior.grid().check_len("values", values.len())?;
    if q.is_infinite() {
        return Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let pow: Vec<f64> = values.iter().map(|v| v.abs().powf(q)).collect();
    Ok(prior.expect(&pow)?.powf(1.0 / q))
}

fn power_table(samples: &SampleTable, inner_map: &impl Fn(f64) -> f64, q_inner: f64) -> SampleTable {
    samples.map(|s| inner_map(s).abs().powf(q_inner))
}

fn validate(samples: &SampleTable, spec: &MixedNormSpec, prior: &PriorDensity) -> Result<()> {
    if samples.rows() == 0 {
        return Err(Error::invalid("samples", "M = 0"));
    }
    if samples.rows() != spec.omega_samples {
        return Err(Error::LengthMismatch {
            what: "omega samples",
            expected: spec.omega_samples,
            got: samples.rows(),
        });
    }
    prior.grid().check_len("sample columns", samples.cols())?;
    if !samples.all_finite() {
        return Err(Error::NonFinite("samples"));
    }
    Ok(())
}

/// `( ∫ | ( (1/M) Σ_j |f(s_j(u))|^{q_in} )^{1/q_in} |^{q_out} dμ₀ )^{1/q_out}`.
///
/// `q_inner = ∞` takes the maximum over realizations, `q_outer = ∞` the
/// maximum over nodes.
pub fn mixed_norm(
    samples: &SampleTable,
    inner_map: impl Fn(f64) -> f64,
    spec: &MixedNormSpec,
    prior: &PriorDensity,
) -> Result<f64> {
    validate(samples, spec, prior)?;
    let node = if spec.q_inner.is_infinite() {
        samples.map(|s| inner_map(s).abs()).column_max()
    } else {
        let q = spec.q_inner;
        power_table(samples, &inner_map, q)
            .column_means()
            .into_iter()
            .map(|m| m.powf(1.0 / q))
            .collect()
    };
    lq_norm(&node, spec.q_outer, prior)
}

/// [`mixed_norm`] with a leave-one-out jackknife standard error. The inner
/// exponent must be finite.
pub fn mixed_norm_estimate(
    samples: &SampleTable,
    inner_map: impl Fn(f64) -> f64,
    spec: &MixedNormSpec,
    prior: &PriorDensity,
) -> Result<Estimate> {
    validate(samples, spec, prior)?;
    if spec.q_inner.is_infinite() {
        return Err(Error::invalid("q_inner", "jackknife needs a finite inner exponent"));
    }
    let q = spec.q_inner;
    let table = power_table(samples, &inner_map, q);
    jackknife(&[&table], |means| {
        let node: Vec<f64> = means[0].iter().map(|m| m.powf(1.0 / q)).collect();
        lq_norm(&node, spec.q_outer, prior).unwrap_or(f64::NAN)
    })
}

/// Leave-one-out jackknife for a statistic of node-wise means.
///
/// `stat` receives one node-mean vector per table. All tables must share
/// the same number of rows. Leave-one-out replicates are evaluated in
/// parallel and reduced in row order, so the result does not depend on the
/// thread count.
pub fn jackknife<F>(tables: &[&SampleTable], stat: F) -> Result<Estimate>
where
    F: Fn(&[Vec<f64>]) -> f64 + Sync,
{
    let m = tables.first().map_or(0, |t| t.rows());
    if m == 0 {
        return Err(Error::invalid("samples", "M = 0"));
    }
    if tables.iter().any(|t| t.rows() != m) {
        return Err(Error::invalid("tables", "row counts differ"));
    }
    let sums: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| t.column_means().into_iter().map(|x| x * m as f64).collect())
        .collect();
    let full_means: Vec<Vec<f64>> = sums
        .iter()
        .map(|s| s.iter().map(|x| x / m as f64).collect())
        .collect();
    let value = stat(&full_means);
    if m == 1 {
        return Ok(Estimate { value, se: f64::NAN });
    }
    let denom = (m - 1) as f64;
    let replicates: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let loo: Vec<Vec<f64>> = sums
                .iter()
                .zip(tables)
                .map(|(s, t)| s.iter().zip(t.row(j)).map(|(a, x)| (a - x) / denom).collect())
                .collect();
            stat(&loo)
        })
        .collect();
    let mean = replicates.iter().sum::<f64>() / m as f64;
    let ss: f64 = replicates.iter().map(|r| (r - mean).powi(2)).sum();
    Ok(Estimate {
        value,
        se: (denom / m as f64 * ss).sqrt(),
    })
}
