//! Integer-matrix actions on tori: exact matrix arithmetic, spectral
//! hyperbolicity, orbit shadowing and the conjugacy experiment for
//! perturbed actions.

pub mod action;
pub mod compare;
pub mod conjugacy;
pub mod linalg;
pub mod matrix;
pub mod perturb;
pub mod spectrum;
pub mod torus;

pub use action::{build_heisenberg_example, RelationCheck, ToralActionSpec};
pub use linalg::DenseMatrix;
pub use matrix::IntegerMatrix;
pub use spectrum::{hyperbolicity_check, shadowing_constant, Eigenvalue, Hyperbolicity, HyperbolicityReport, DEFAULT_MODULUS_TOLERANCE};
pub use torus::{toral_trace, HyperbolicSplitting, ToralPoint, ToralTrace};
pub use compare::{generating_set_compare, CompareOptions, CompareReport, CompareSample, GeneratorLength};
pub use conjugacy::{
    compute_conjugacy, compute_conjugacy_with, injectivity_probe, ConjugacyOptions, ConjugacySample, GeneratorResidual,
    InjectivityProbe, WordLengthResidual,
};
pub use perturb::{perturb_action, sample_points, FourierDisplacement, FourierTerm, PerturbationSummary, PerturbedToralAction};
