//! Random approximate misfits `Φ_N(ω, ·)`.
//!
//! A realization is a pure function of `(stream_root, N, ω)`. Sketch draws
//! are keyed by `N`; the perturbation families draw their random field from
//! a stream keyed by `ω` alone, so at fixed `ω` the perturbation magnitude
//! scales exactly as `c/√N`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::forward::{ForwardMap, ForwardModel};
use super::noise::GaussianNoise;
use super::sketch::SketchDistribution;
use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::stream::StreamRoot;

/// Gaussian likelihood pieces `(G, Γ, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    pub forward: ForwardModel,
    pub noise: GaussianNoise,
    pub y: Vec<f64>,
}

impl ObservationModel {
    pub fn new(forward: ForwardModel, noise: GaussianNoise, y: Vec<f64>, param_dim: usize) -> Result<Self> {
        forward.validate(param_dim)?;
        let d = forward.out_dim();
        if noise.dim() != d {
            return Err(Error::LengthMismatch {
                what: "noise dimension",
                expected: d,
                got: noise.dim(),
            });
        }
        if y.len() != d {
            return Err(Error::LengthMismatch {
                what: "data vector",
                expected: d,
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("data vector"));
        }
        Ok(Self { forward, noise, y })
    }

    pub fn data_dim(&self) -> usize {
        self.y.len()
    }

    /// Whitened residual `Γ^{-1/2}(y − G(u))` for an arbitrary forward map.
    pub fn whitened_residual(&self, g: &impl ForwardMap, u: &[f64]) -> Result<Vec<f64>> {
        let gu = g.eval(u);
        if gu.len() != self.y.len() {
            return Err(Error::LengthMismatch {
                what: "forward output",
                expected: self.y.len(),
                got: gu.len(),
            });
        }
        if gu.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("forward evaluation"));
        }
        let r: Vec<f64> = self.y.iter().zip(&gu).map(|(y, g)| y - g).collect();
        Ok(self.noise.whiten(&r))
    }

    /// `Φ(u)`.
    pub fn misfit(&self, u: &[f64]) -> Result<f64> {
        quadratic_misfit(&self.forward, &self.noise, &self.y, u)
    }

    pub fn misfit_on_grid(&self, grid: &GridSpace) -> Result<Vec<f64>> {
        grid.nodes().map(|u| self.misfit(u)).collect()
    }
}

/// `½ ‖Γ^{-1/2}(y − G(u))‖²`.
pub fn quadratic_misfit(g: &impl ForwardMap, noise: &GaussianNoise, y: &[f64], u: &[f64]) -> Result<f64> {
    let gu = g.eval(u);
    if gu.len() != noise.dim() || y.len() != noise.dim() {
        return Err(Error::LengthMismatch {
            what: "data dimension",
            expected: noise.dim(),
            got: if gu.len() != noise.dim() { gu.len() } else { y.len() },
        });
    }
    if gu.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("forward evaluation"));
    }
    let r: Vec<f64> = y.iter().zip(&gu).map(|(a, b)| a - b).collect();
    Ok(0.5 * noise.whiten(&r).iter().map(|v| v * v).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationNoise {
    /// Uniform on `[-1, 1]`.
    #[default]
    Uniform,
    /// Standard normal (unbounded below).
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationProfile {
    /// The same variate at every `u`: a pure offset.
    #[default]
    Constant,
    /// Variate rotated through a sawtooth in `u`, keeping the marginal law
    /// at every point.
    Sawtooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyKind {
    SketchedQuadratic {
        sketch: SketchDistribution,
    },
    PerturbedForward {
        scale: f64,
    },
    DirectPerturbation {
        scale: f64,
        #[serde(default)]
        noise: PerturbationNoise,
        #[serde(default)]
        profile: PerturbationProfile,
    },
}

impl FamilyKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilyKind::SketchedQuadratic { sketch } => sketch.validate(),
            FamilyKind::PerturbedForward { scale } | FamilyKind::DirectPerturbation { scale, .. } => {
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::invalid("scale", "must be finite and nonnegative"));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::SketchedQuadratic { .. } => "sketched_quadratic",
            FamilyKind::PerturbedForward { .. } => "perturbed_forward",
            FamilyKind::DirectPerturbation { .. } => "direct_perturbation",
        }
    }
}

/// The law `ν_N` of `Φ_N`, realized through seed streams.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMisfitFamily {
    base: ObservationModel,
    kind: FamilyKind,
    n: usize,
    root: StreamRoot,
}

impl RandomMisfitFamily {
    pub fn new(base: ObservationModel, kind: FamilyKind, n: usize, root: StreamRoot) -> Result<Self> {
        kind.validate()?;
        if n == 0 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        Ok(Self { base, kind, n, root })
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.base.clone(), self.kind.clone(), n, self.root.clone())
    }

    pub fn base(&self) -> &ObservationModel {
        &self.base
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> &StreamRoot {
        &self.root
    }

    /// True when every realization is a forward-model perturbation.
    pub fn is_forward_family(&self) -> bool {
        matches!(self.kind, FamilyKind::PerturbedForward { .. })
    }

    /// `c / √N`.
    fn amplitude(&self, scale: f64) -> f64 {
        scale / (self.n as f64).sqrt()
    }

    pub fn realization(&self, omega: u64) -> Realization<'_> {
        let inner = match self.kind {
            FamilyKind::SketchedQuadratic { sketch } => {
                let d = self.base.data_dim();
                let mut rng = self.root.child("sketch").child(self.n).child(omega).stream();
                // S = (1/N) Σ X_j X_jᵀ, so that Φ_N = ½ vᵀ S v.
                let mut s = vec![0.0; d * d];
                let mut x = vec![0.0; d];
                for _ in 0..self.n {
                    for xi in x.iter_mut() {
                        *xi = sketch.draw(&mut rng);
                    }
                    for i in 0..d {
                        for j in 0..d {
                            s[i * d + j] += x[i] * x[j];
                        }
                    }
                }
                let n = self.n as f64;
                s.iter_mut().for_each(|v| *v /= n);
                RealizationKind::Sketched { gram: s }
            }
            FamilyKind::PerturbedForward { scale } => RealizationKind::Forward(PerturbedForward {
                base: &self.base.forward,
                amplitude: self.amplitude(scale),
                field: RandomField::draw(
                    self.base.data_dim(),
                    &mut self.root.child("forward").child(omega).stream(),
                ),
            }),
            FamilyKind::DirectPerturbation { scale, noise, profile } => {
                let mut rng = self.root.child("direct").child(omega).stream();
                RealizationKind::Direct {
                    amplitude: self.amplitude(scale),
                    phase: rng.random::<f64>(),
                    noise,
                    profile,
                }
            }
        };
        Realization {
            base: &self.base,
            inner,
        }
    }

    /// `Φ_N(ω, u)` on every grid node.
    pub fn misfit_on_grid(&self, omega: u64, grid: &GridSpace) -> Result<Vec<f64>> {
        let r = self.realization(omega);
        grid.nodes().map(|u| r.misfit(u)).collect()
    }
}

/// Bounded smooth field `ξ(u)` with `‖ξ(u)‖₂ ≤ 1`: each output is a
/// combination of `{1, cos(k u_i), sin(k u_i) : k = 1..3}` whose coefficients
/// (over all outputs) have absolute sum one.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomField {
    out_dim: usize,
    coefficients: Vec<f64>,
}

const FIELD_FREQUENCIES: usize = 3;

impl RandomField {
    fn draw<R: Rng + ?Sized>(out_dim: usize, rng: &mut R) -> Self {
        // Lazily sized: the parameter dimension is only known at evaluation,
        // so draw enough coefficients for the largest supported box.
        let k = basis_len(crate::grid::MAX_DIM);
        let raw: Vec<f64> = (0..out_dim * k)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            })
            .collect();
        Self {
            out_dim,
            coefficients: raw,
        }
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        let k = basis_len(u.len());
        let stride = basis_len(crate::grid::MAX_DIM);
        // Normalize over the coefficients actually used at this dimension.
        let total: f64 = (0..self.out_dim)
            .flat_map(|i| self.coefficients[i * stride..i * stride + k].iter())
            .map(|c| c.abs())
            .sum();
        let basis = basis(u);
        (0..self.out_dim)
            .map(|i| {
                let c = &self.coefficients[i * stride..i * stride + k];
                c.iter().zip(&basis).map(|(a, b)| a * b).sum::<f64>() / total
            })
            .collect()
    }
}

fn basis_len(dim: usize) -> usize {
    1 + 2 * FIELD_FREQUENCIES * dim
}

fn basis(u: &[f64]) -> Vec<f64> {
    let mut b = Vec::with_capacity(basis_len(u.len()));
    b.push(1.0);
    for &x in u {
        for k in 1..=FIELD_FREQUENCIES {
            let t = k as f64 * x;
            b.push(t.cos());
            b.push(t.sin());
        }
    }
    b
}

/// `G_N(u) = G(u) + (c/√N) ξ_ω(u)`.
#[derive(Debug, Clone)]
pub struct PerturbedForward<'a> {
    base: &'a ForwardModel,
    amplitude: f64,
    field: RandomField,
}

impl PerturbedForward<'_> {
    /// `G_N(u) − G(u)`.
    pub fn error(&self, u: &[f64]) -> Vec<f64> {
        self.field.eval(u).into_iter().map(|x| self.amplitude * x).collect()
    }
}

impl ForwardMap for PerturbedForward<'_> {
    fn out_dim(&self) -> usize {
        self.base.out_dim()
    }

    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let g = self.base.eval(u);
        if self.amplitude == 0.0 {
            return g;
        }
        g.iter().zip(self.error(u)).map(|(a, e)| a + e).collect()
    }
}

#[derive(Debug, Clone)]
enum RealizationKind<'a> {
    Sketched {
        gram: Vec<f64>,
    },
    Forward(PerturbedForward<'a>),
    Direct {
        amplitude: f64,
        phase: f64,
        noise: PerturbationNoise,
        profile: PerturbationProfile,
    },
}

/// One draw `Φ_N(ω, ·)`.
#[derive(Debug, Clone)]
pub struct Realization<'a> {
    base: &'a ObservationModel,
    inner: RealizationKind<'a>,
}

const SAWTOOTH_RATE: f64 = 1.618_033_988_749_895;

impl Realization<'_> {
    pub fn misfit(&self, u: &[f64]) -> Result<f64> {
        match &self.inner {
            RealizationKind::Sketched { gram } => {
                let v = self.base.whitened_residual(&self.base.forward, u)?;
                let d = v.len();
                let mut q = 0.0;
                for i in 0..d {
                    let row = &gram[i * d..(i + 1) * d];
                    q += v[i] * row.iter().zip(&v).map(|(s, x)| s * x).sum::<f64>();
                }
                Ok(0.5 * q)
            }
            RealizationKind::Forward(g) => quadratic_misfit(g, &self.base.noise, &self.base.y, u),
            RealizationKind::Direct {
                amplitude,
                phase,
                noise,
                profile,
            } => {
                let phi = self.base.misfit(u)?;
                if *amplitude == 0.0 {
                    return Ok(phi);
                }
                let t = match profile {
                    PerturbationProfile::Constant => *phase,
                    PerturbationProfile::Sawtooth => {
                        (phase + SAWTOOTH_RATE * u.iter().sum::<f64>()).rem_euclid(1.0)
                    }
                };
                let eta = match noise {
                    PerturbationNoise::Uniform => 2.0 * t - 1.0,
                    PerturbationNoise::Gaussian => {
                        let p = t.clamp(1e-15, 1.0 - 1e-15);
                        Normal::standard().inverse_cdf(p)
                    }
                };
                Ok(phi + amplitude * eta)
            }
        }
    }

    /// The perturbed forward map, for forward-model families.
    pub fn forward(&self) -> Option<&PerturbedForward<'_>> {
        match &self.inner {
            RealizationKind::Forward(g) => Some(g),
            _ => None,
        }
    }
}

/// `(1/2N) Σ_j (X_jᵀ Γ^{-1/2}(y − G(u)))²` for a sketched family.
pub fn sketched_misfit(family: &RandomMisfitFamily, omega: u64, u: &[f64]) -> Result<f64> {
    match family.kind() {
        FamilyKind::SketchedQuadratic { .. } => family.realization(omega).misfit(u),
        other => Err(Error::invalid("family", format!("expected sketched_quadratic, got {}", other.name()))),
    }
}

/// `Φ(u) + (c/√N) η_ω(u)` for a direct-perturbation family.
pub fn direct_perturbation_misfit(family: &RandomMisfitFamily, omega: u64, u: &[f64]) -> Result<f64> {
    match family.kind() {
        FamilyKind::DirectPerturbation { .. } => family.realization(omega).misfit(u),
        other => Err(Error::invalid("family", format!("expected direct_perturbation, got {}", other.name()))),
    }
}

/// `G_N(ω, u)` for a perturbed-forward family.
pub fn perturbed_forward(family: &RandomMisfitFamily, omega: u64, u: &[f64]) -> Result<Vec<f64>> {
    match family.kind() {
        FamilyKind::PerturbedForward { .. } => {
            let r = family.realization(omega);
            Ok(r.forward().expect("forward family").eval(u))
        }
        other => Err(Error::invalid("family", format!("expected perturbed_forward, got {}", other.name()))),
    }
}
