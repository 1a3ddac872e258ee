//! Exact computation of joint moments of multiple Wigner integrals with
//! piecewise-constant kernels.
//!
//! The crate is organized around five pieces:
//!
//! - [`kernel`]: step kernels on a uniform grid with the full L² toolkit
//!   (inner products, adjoints, symmetry tests, contractions, refinement).
//! - [`pairing`]: pairings of `[n]`, crossing detection, block structures,
//!   link graphs, and streaming enumerators.
//! - [`moment`]: pairing integrals and the two moment engines — the free
//!   engine summing over respectful non-crossing pairings and the classical
//!   engine summing over all respectful pairings — plus closed-form
//!   semicircular and Gaussian targets.
//! - [`experiment`]: explicit kernel families and convergence experiments
//!   (componentwise, joint, and the classical/free transfer comparison).
//! - [`rmsim`]: Monte Carlo cross-validation against correlated GUE random
//!   matrices with a deterministic, seedable sampling scheme.
//!
//! All computations on step kernels are exact finite sums; floating point is
//! the only source of error. Every operation is a pure function over
//! immutable values and safe to share across threads.

pub mod experiment;
pub mod kernel;
pub mod moment;
pub mod numfmt;
pub mod pairing;
pub mod rmsim;

pub use kernel::{Grid, KernelError, StepKernel};
pub use moment::{
    classical_joint_moment, free_joint_moment, gaussian_family_moment, pairing_integral,
    semicircular_family_moment, semicircular_moment, CovarianceMatrix, EngineKind, MomentError,
    MomentReport, MomentRequest,
};
pub use pairing::{
    catalan, enumerate_nc_pairings, enumerate_pairings, enumerate_respectful_nc,
    enumerate_respectful_pairings, BlockStructure, LinkGraph, Pairing, PairingError,
};
