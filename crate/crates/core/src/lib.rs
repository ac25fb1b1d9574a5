//! Best-arm identification from an explorative user's revealed preferences.
//!
//! A recommender proposes arms; a simulated user accepts or rejects each
//! proposal according to its own confidence intervals, and only the binary
//! verdict reaches the recommender. The crate provides:
//!
//! - [`env`]: problem instances, reward noise and seeded instance batches.
//! - [`user`]: the confidence-interval user and its decision rule.
//! - [`algorithms`]: the two-phase BAIR policy and the UNI, EXP3 and
//!   Track-and-Stop baselines.
//! - [`harness`]: replicated experiments, budget matching and metrics.
//! - [`lowerbound`]: the indistinguishable instance pair and its probe.
//! - [`validation`]: named invariant checks shared by tests and the CLI.

pub mod algorithms;
pub mod env;
pub mod error;
pub mod harness;
pub mod lowerbound;
pub mod rng;
pub mod user;
pub mod validation;

pub use error::{Error, Result};
