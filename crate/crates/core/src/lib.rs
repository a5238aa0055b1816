//! Penalized likelihood estimation for generalized linear models whose
//! covariates carry a multi-level taxonomy.
//!
//! Every coefficient is factored along its lineage as `beta_j = alpha_j *
//! prod_t d_{tau^t(j)}`, with one nonnegative multiplier per taxon per level.
//! Penalizing the multipliers and `alpha` jointly yields a hierarchical,
//! non-convex group penalty; it is fitted by iterative adaptive reweighting of
//! a weighted LASSO.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line and
//! the parallel runners live in the `philasso` companion crate.
//!
//! Module map:
//!
//! * [`taxonomy`]: level-wise partitions of the covariates and their lineages.
//! * [`decompose`]: compose map, partial inverse, adaptive weights, penalties.
//! * [`glm`]: Gaussian and Bernoulli-logit likelihood layer.
//! * [`solver`]: coordinate descent weighted LASSO and the reweighting loop.
//! * [`tuning`]: lambda grids, cross-validation and evaluation metrics.
//! * [`sim`]: simulation study with taxon-wise correlated designs.
//! * [`rng`]: seeded random streams keyed by purpose and index.

#![no_std]

extern crate alloc;

pub mod decompose;
mod error;
pub mod glm;
pub mod matrix;
mod num;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod taxonomy;
pub mod tuning;

pub use error::{Error, Result};
pub use matrix::Matrix;
