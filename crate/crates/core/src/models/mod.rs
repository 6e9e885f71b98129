//! Forward models, Gaussian noise, sketching laws, and random misfit families.

pub mod family;
pub mod forward;
pub mod noise;
pub mod sketch;

pub use family::{
    direct_perturbation_misfit, perturbed_forward, quadratic_misfit, sketched_misfit, FamilyKind,
    ObservationModel, PerturbationNoise, PerturbationProfile, PerturbedForward, RandomMisfitFamily,
    Realization,
};
pub use forward::{ForwardMap, ForwardModel, TrigTerm};
pub use noise::{GaussianNoise, NoiseSpec};
pub use sketch::{sample_sketch, SketchDistribution};
