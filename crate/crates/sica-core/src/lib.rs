//! Core numerics for sparse-source recovery from multivariate signals.
//!
//! The crate decomposes an observed signal matrix into a whitened component
//! subspace ([`whiten`]), rotates it to maximally non-Gaussian marginals
//! ([`fastica`]), and selects per-component supports with thresholds
//! calibrated against the isotropy null hypothesis ([`isonull`]). A
//! univariate mixture-model baseline ([`mixbase`]), a ground-truthed
//! simulator ([`simgen`]), and scoring utilities ([`eval`]) round out the
//! toolkit.
//!
//! The crate is `no_std` (with `alloc`); file formats, reports, and the
//! command-line frontend live in the companion `sica-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assign;
pub mod datamodel;
pub mod eval;
pub mod fastica;
pub mod isonull;
pub mod mat;
pub mod mixbase;
pub mod rng;
pub mod simgen;
pub mod stats;
pub mod whiten;

pub use datamodel::{BoolMat, ComponentSet, Dataset, Grid, MixingMatrix, ThresholdResult};
pub use mat::Mat;
