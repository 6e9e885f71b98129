use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that maps a parameter point to a data vector.
pub trait ForwardMap {
    fn out_dim(&self) -> usize;
    fn eval(&self, u: &[f64]) -> Vec<f64>;
}

/// `a · sin(f · u + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

/// Closed-form forward operators. `Stack` concatenates the outputs of its
/// parts, which is how mixed models such as `(u, u², sin u)` are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForwardModel {
    /// `A u + b` with `A` given as `d` rows of length `p`.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// Separable polynomial: `G_i(u) = Σ_dim Σ_k c[i][dim][k] u_dim^k`.
    Polynomial { coefficients: Vec<Vec<Vec<f64>>> },
    /// `G_i(u) = Σ_terms a sin(f·u + φ)`.
    Trigonometric { terms: Vec<Vec<TrigTerm>> },
    /// Multilinear interpolation of values on a tensor grid; `values[i]` is
    /// output `i` flattened row-major (last axis fastest). Points outside the
    /// table are clamped to its edge.
    Tabulated { axes: Vec<Vec<f64>>, values: Vec<Vec<f64>> },
    Stack { parts: Vec<ForwardModel> },
}

impl ForwardModel {
    pub fn identity(dim: usize) -> Self {
        ForwardModel::Affine {
            matrix: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            offset: vec![0.0; dim],
        }
    }

    /// Checks the parameters against a parameter-space dimension.
    pub fn validate(&self, param_dim: usize) -> Result<()> {
        let bad = |r: &str| Err(Error::invalid("forward", r.to_owned()));
        match self {
            ForwardModel::Affine { matrix, offset } => {
                if matrix.is_empty() || matrix.len() != offset.len() {
                    return bad("affine matrix rows must match offset length");
                }
                if matrix.iter().any(|r| r.len() != param_dim) {
                    return bad("affine matrix columns must match parameter dimension");
                }
            }
            ForwardModel::Polynomial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| c.len() != param_dim) {
                    return bad("polynomial needs one coefficient list per parameter dimension");
                }
            }
            ForwardModel::Trigonometric { terms } => {
                if terms.is_empty() || terms.iter().flatten().any(|t| t.frequency.len() != param_dim) {
                    return bad("trigonometric frequency length must match parameter dimension");
                }
            }
            ForwardModel::Tabulated { axes, values } => {
                if axes.len() != param_dim || values.is_empty() {
                    return bad("tabulated needs one axis per parameter dimension");
                }
                if axes.iter().any(|a| a.len() < 2 || a.windows(2).any(|w| w[0] >= w[1])) {
                    return bad("tabulated axes must be strictly increasing with ≥ 2 points");
                }
                let n: usize = axes.iter().map(Vec::len).product();
                if values.iter().any(|v| v.len() != n) {
                    return bad("tabulated values must match the axis grid size");
                }
            }
            ForwardModel::Stack { parts } => {
                if parts.is_empty() {
                    return bad("stack needs at least one part");
                }
                for p in parts {
                    p.validate(param_dim)?;
                }
            }
        }
        let flat = self.all_params();
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("forward parameters"));
        }
        Ok(())
    }

    fn all_params(&self) -> Vec<f64> {
        match self {
            ForwardModel::Affine { matrix, offset } => {
                matrix.iter().flatten().chain(offset).copied().collect()
            }
            ForwardModel::Polynomial { coefficients } => {
                coefficients.iter().flatten().flatten().copied().collect()
            }
            ForwardModel::Trigonometric { terms } => terms
                .iter()
                .flatten()
                .flat_map(|t| std::iter::once(t.amplitude).chain(t.frequency.iter().copied()).chain([t.phase]))
                .collect(),
            ForwardModel::Tabulated { axes, values } => {
                axes.iter().flatten().chain(values.iter().flatten()).copied().collect()
            }
            ForwardModel::Stack { parts } => parts.iter().flat_map(|p| p.all_params()).collect(),
        }
    }

    fn eval_into(&self, u: &[f64], out: &mut Vec<f64>) {
        match self {
            ForwardModel::Affine { matrix, offset } => {
                for (row, b) in matrix.iter().zip(offset) {
                    out.push(row.iter().zip(u).map(|(a, x)| a * x).sum::<f64>() + b);
                }
            }
            ForwardModel::Polynomial { coefficients } => {
                for per_dim in coefficients {
                    let mut acc = 0.0;
                    for (c, &x) in per_dim.iter().zip(u) {
                        // Horner
                        acc += c.iter().rev().fold(0.0, |s, &ck| s * x + ck);
                    }
                    out.push(acc);
                }
            }
            ForwardModel::Trigonometric { terms } => {
                for comp in terms {
                    out.push(
                        comp.iter()
                            .map(|t| {
                                let arg: f64 =
                                    t.frequency.iter().zip(u).map(|(f, x)| f * x).sum::<f64>() + t.phase;
                                t.amplitude * arg.sin()
                            })
                            .sum(),
                    );
                }
            }
            ForwardModel::Tabulated { axes, values } => {
                let cells = locate(axes, u);
                for v in values {
                    out.push(multilinear(axes, v, &cells));
                }
            }
            ForwardModel::Stack { parts } => {
                for p in parts {
                    p.eval_into(u, out);
                }
            }
        }
    }
}

impl ForwardMap for ForwardModel {
    fn out_dim(&self) -> usize {
        match self {
            ForwardModel::Affine { offset, .. } => offset.len(),
            ForwardModel::Polynomial { coefficients } => coefficients.len(),
            ForwardModel::Trigonometric { terms } => terms.len(),
            ForwardModel::Tabulated { values, .. } => values.len(),
            ForwardModel::Stack { parts } => parts.iter().map(ForwardMap::out_dim).sum(),
        }
    }

    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.out_dim());
        self.eval_into(u, &mut out);
        out
    }
}

/// Per axis: (lower index, fractional position in the cell).
fn locate(axes: &[Vec<f64>], u: &[f64]) -> Vec<(usize, f64)> {
    axes.iter()
        .zip(u)
        .map(|(a, &x)| {
            let n = a.len();
            if x <= a[0] {
                return (0, 0.0);
            }
            if x >= a[n - 1] {
                return (n - 2, 1.0);
            }
            let i = a.partition_point(|&t| t <= x).saturating_sub(1).min(n - 2);
            (i, (x - a[i]) / (a[i + 1] - a[i]))
        })
        .collect()
}

fn multilinear(axes: &[Vec<f64>], values: &[f64], cells: &[(usize, f64)]) -> f64 {
    let dim = axes.len();
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for d in 0..dim {
            let (i, t) = cells[d];
            let up = (corner >> (dim - 1 - d)) & 1 == 1;
            w *= if up { t } else { 1.0 - t };
            flat = flat * axes[d].len() + i + up as usize;
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacked_polynomial_and_sine() {
        let g = ForwardModel::Stack {
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
        };
        g.validate(1).unwrap();
        assert_eq!(g.out_dim(), 3);
        let v = g.eval(&[0.3]);
        assert!((v[0] - 0.3).abs() < 1e-15);
        assert!((v[1] - 0.09).abs() < 1e-15);
        assert!((v[2] - 0.3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn affine_two_dims() {
        let g = ForwardModel::Affine {
            matrix: vec![vec![1.0, 2.0], vec![0.0, -1.0]],
            offset: vec![0.5, 0.0],
        };
        g.validate(2).unwrap();
        assert_eq!(g.eval(&[1.0, 1.0]), vec![3.5, -1.0]);
        assert!(g.validate(3).is_err());
    }

    #[test]
    fn tabulated_reproduces_bilinear_function() {
        // f(x, y) = 1 + 2x - y + 3xy is reproduced exactly by bilinear interpolation.
        let ax = vec![0.0, 0.5, 1.0];
        let ay = vec![-1.0, 0.0, 2.0];
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - y + 3.0 * x * y;
        let mut vals = Vec::new();
        for &x in &ax {
            for &y in &ay {
                vals.push(f(x, y));
            }
        }
        let g = ForwardModel::Tabulated {
            axes: vec![ax, ay],
            values: vec![vals],
        };
        g.validate(2).unwrap();
        for (x, y) in [(0.2, -0.3), (0.75, 1.5), (1.0, 2.0), (0.0, -1.0)] {
            assert!((g.eval(&[x, y])[0] - f(x, y)).abs() < 1e-12);
        }
        // clamped outside
        assert!((g.eval(&[2.0, 5.0])[0] - f(1.0, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonfinite_params() {
        let g = ForwardModel::Polynomial {
            coefficients: vec![vec![vec![f64::NAN]]],
        };
        assert!(g.validate(1).is_err());
    }
}
