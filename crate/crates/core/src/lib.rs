//! Distributed target estimation and sensor localization in sensor networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`network`]: graphs, consensus weights, matrix-weighted Laplacians and the
//!   Jacobi stability check.
//! - [`models`]: target dynamics, sensor observation models (linear, range-bearing,
//!   gridded field) and relative-measurement sampling.
//! - [`estimation`]: the information-form distributed linear estimator.
//! - [`localization`]: distributed Jacobi localization and the centralized BLUE.
//! - [`joint`]: localization-aware target estimation and its asymptotic error.
//! - [`sim`]: scenario configuration, Monte Carlo replication and output files.
//!
//! Node indices are 0-based everywhere in the library; node 0 is the anchor that
//! defines the localization frame. File formats use 1-based indices.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod error;
pub mod estimation;
pub mod joint;
pub mod linalg;
pub mod localization;
pub mod models;
pub mod network;
pub mod sim;

pub use error::{Error, Result};

/// Seeded random stream used throughout the simulator.
pub type SimRng = rand_chacha::ChaCha8Rng;
