//! Tensor-product quadrature on a compact box of dimension one to three.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Trapezoid,
    GaussLegendre,
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Discretized parameter box. Nodes are stored flat in row-major order with
/// the last dimension varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpace {
    dim: usize,
    bounds: Vec<Interval>,
    nodes_per_dim: usize,
    rule: QuadratureRule,
    axes: Vec<Vec<f64>>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub fn build_grid(
    dim: usize,
    bounds: &[Interval],
    nodes_per_dim: usize,
    rule: QuadratureRule,
) -> Result<GridSpace> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::invalid("dim", format!("must be in 1..={MAX_DIM}, got {dim}")));
    }
    if bounds.len() != dim {
        return Err(Error::LengthMismatch {
            what: "bounds",
            expected: dim,
            got: bounds.len(),
        });
    }
    for b in bounds {
        if !(b.lo.is_finite() && b.hi.is_finite()) || b.lo >= b.hi {
            return Err(Error::invalid(
                "bounds",
                format!("degenerate interval [{}, {}]", b.lo, b.hi),
            ));
        }
    }
    if nodes_per_dim < 2 {
        return Err(Error::invalid("nodes_per_dim", "need at least 2 nodes"));
    }

    let (ref_nodes, ref_weights) = match rule {
        QuadratureRule::Trapezoid => trapezoid_reference(nodes_per_dim),
        QuadratureRule::GaussLegendre => gauss_legendre(nodes_per_dim),
    };

    let mut axes = Vec::with_capacity(dim);
    let mut axis_weights = Vec::with_capacity(dim);
    for b in bounds {
        let half = 0.5 * b.width();
        let mid = 0.5 * (b.lo + b.hi);
        axes.push(
            ref_nodes
                .iter()
                .map(|&x| (mid + half * x).clamp(b.lo, b.hi))
                .collect::<Vec<_>>(),
        );
        axis_weights.push(ref_weights.iter().map(|&w| half * w).collect::<Vec<_>>());
    }

    let total = nodes_per_dim.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for d in 0..dim {
            nodes.push(axes[d][idx[d]]);
            w *= axis_weights[d][idx[d]];
        }
        weights.push(w);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < nodes_per_dim {
                break;
            }
            idx[d] = 0;
        }
    }

    Ok(GridSpace {
        dim,
        bounds: bounds.to_vec(),
        nodes_per_dim,
        rule,
        axes,
        nodes,
        weights,
    })
}

impl GridSpace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One-dimensional node coordinates along axis `d`.
    pub fn axis(&self, d: usize) -> &[f64] {
        &self.axes[d]
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(Interval::width).product()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim && self.bounds.iter().zip(u).all(|(b, &x)| b.contains(x))
    }

    pub(crate) fn check_len(&self, what: &'static str, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch {
                what,
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

fn trapezoid_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 / (n - 1) as f64;
    let nodes = (0..n).map(|i| -1.0 + h * i as f64).collect();
    let weights = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending, by Newton
/// iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
