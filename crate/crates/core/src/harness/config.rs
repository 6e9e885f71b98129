//! Experiment configuration: parsing, validation, canonical hashing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{CheckName, CorollaryOptions, ExponentSet, SweepSpec, VerdictPolicy};
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpace, Interval, QuadratureRule, MAX_DIM};
use crate::models::{FamilyKind, ForwardMap, ForwardModel, GaussianNoise, ObservationModel, RandomMisfitFamily};
use crate::problem::{InverseProblem, PriorKind};
use crate::stream::StreamRoot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    /// One `[lo, hi]` pair per dimension.
    pub bounds: Vec<[f64; 2]>,
    pub nodes_per_dim: usize,
    pub quadrature_rule: QuadratureRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSpec {
    pub out_dim: usize,
    pub model: ForwardModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub gamma: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Plotdata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: BTreeSet<OutputFormat>,
}

fn default_formats() -> BTreeSet<OutputFormat> {
    [OutputFormat::Csv, OutputFormat::Plotdata].into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub problem: ProblemSpec,
    pub prior: PriorKind,
    pub forward: ForwardSpec,
    pub noise: NoiseConfig,
    pub data: DataSpec,
    pub family: FamilyKind,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub exponents: ExponentSet,
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub corollary: CorollaryOptions,
    #[serde(default)]
    pub policy: VerdictPolicy,
    pub output: OutputSpec,
}

/// Everything built from a validated config.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: InverseProblem,
    pub family: RandomMisfitFamily,
}

fn keyed(key: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(key, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("<json>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    /// Checks cross-field consistency; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.dim == 0 || p.dim > MAX_DIM {
            return Err(Error::config("problem.dim", format!("must be in 1..={MAX_DIM}")));
        }
        if p.bounds.len() != p.dim {
            return Err(Error::config("problem.bounds", format!("expected {} intervals, got {}", p.dim, p.bounds.len())));
        }
        self.grid().map_err(keyed("problem"))?;
        match &self.prior {
            PriorKind::Uniform => {}
            PriorKind::TruncatedGaussian { mean, std } => {
                if mean.len() != p.dim || std.len() != p.dim {
                    return Err(Error::config("prior", format!("mean and std need {} entries", p.dim)));
                }
            }
        }
        self.forward.model.validate(p.dim).map_err(keyed("forward.model"))?;
        let probe = vec![0.0; p.dim];
        let got = self.forward.model.eval(&probe).len();
        if got != self.forward.out_dim {
            return Err(Error::config("forward.out_dim", format!("model produces {got} outputs, declared {}", self.forward.out_dim)));
        }
        if self.noise.gamma.len() != self.forward.out_dim {
            return Err(Error::config("noise.gamma", format!("expected {0}×{0}", self.forward.out_dim)));
        }
        GaussianNoise::from_rows(&self.noise.gamma).map_err(keyed("noise.gamma"))?;
        if self.data.y.len() != self.forward.out_dim {
            return Err(Error::config("data.y", format!("expected {} entries, got {}", self.forward.out_dim, self.data.y.len())));
        }
        if self.data.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("data.y", "non-finite entry"));
        }
        self.family.validate().map_err(keyed("family"))?;
        self.sweep.validate().map_err(keyed("sweep"))?;
        self.exponents.validate().map_err(keyed("exponents"))?;
        if self.checks.is_empty() {
            return Err(Error::config("checks", "no checks requested"));
        }
        let mut seen = BTreeSet::new();
        for c in &self.checks {
            if !seen.insert(*c) {
                return Err(Error::config("checks", format!("`{}` listed twice", c.as_str())));
            }
        }
        if self.checks.contains(&CheckName::Forward) && !matches!(self.family, FamilyKind::PerturbedForward { .. }) {
            return Err(Error::config("checks", "`forward` needs a perturbed_forward family"));
        }
        let pol = &self.policy;
        if !(pol.se_multiplier >= 0.0 && pol.ratio_cap >= 1.0 && pol.slope_slack >= 0.0) {
            return Err(Error::config("policy", "se_multiplier ≥ 0, ratio_cap ≥ 1, slope_slack ≥ 0"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<GridSpace>> {
        let p = &self.problem;
        let bounds: Vec<Interval> = p.bounds.iter().map(|b| Interval { lo: b[0], hi: b[1] }).collect();
        Ok(Arc::new(build_grid(p.dim, &bounds, p.nodes_per_dim, p.quadrature_rule)?))
    }

    /// Builds the problem and the random family at the first sweep `N`.
    pub fn build(&self) -> Result<Experiment> {
        let noise = GaussianNoise::from_rows(&self.noise.gamma).map_err(keyed("noise.gamma"))?;
        let model = ObservationModel::new(self.forward.model.clone(), noise, self.data.y.clone(), self.problem.dim)
            .map_err(keyed("forward"))?;
        let problem = InverseProblem::new(self.grid()?, self.prior.clone(), model.clone()).map_err(keyed("problem"))?;
        let root = StreamRoot::new(self.master_seed, "experiment");
        let family = RandomMisfitFamily::new(model, self.family.clone(), self.sweep.ns[0], root).map_err(keyed("family"))?;
        Ok(Experiment { problem, family })
    }

    /// Key-sorted JSON of the config, the input to [`Self::hash`].
    pub fn canonical_json(&self) -> String {
        // serde_json::Value maps are BTreeMaps, so keys come out sorted.
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
