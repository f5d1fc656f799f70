//! Pseudo-orbit tracing for finitely generated group actions: Cayley balls,
//! subshifts of finite type, toral automorphism actions and profinite
//! odometers, with explicit radius bookkeeping for every truncated claim.

pub mod catalog;
pub mod dyadic;
pub mod error;
mod fill;
pub mod group;
pub mod profinite;
pub mod scalar;
pub mod shadowing;
pub mod shift;
pub mod toral;

pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use group::{ball, rewrite_generator, word_length, Ball, GroupElement, GroupFamily, GroupSpec, Letter};
pub use shift::{Alphabet, Configuration, Pattern, SftSpec, ShiftDistance, ShiftSpace};
pub use scalar::Scalar;
pub use toral::{
    build_heisenberg_example, compute_conjugacy, generating_set_compare, hyperbolicity_check, perturb_action,
    toral_trace, IntegerMatrix, ToralActionSpec,
};
pub use profinite::{
    boundary_distance, equicontinuity_modulus, profinite_act, trace_equicontinuous, BoundaryPoint,
    EquicontinuousActionSpec, SubgroupChain,
};

pub type ToralPoint64 = toral::ToralPoint<f64>;
pub type ToralPoint32 = toral::ToralPoint<f32>;
pub type HyperbolicSplitting64 = toral::HyperbolicSplitting<f64>;
pub type PerturbedToralAction64 = toral::PerturbedToralAction<f64>;
pub type ConjugacySample64 = toral::ConjugacySample<f64>;
