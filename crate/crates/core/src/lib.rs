//! Exact and random-sampling permutation tests.
//!
//! The crate is organised around finite transformation groups acting on a
//! data vector:
//!
//! - [`group`]: group elements (index permutations, sign masks, cyclic
//!   shifts), group families, enumeration, uniform sampling and axiom checks.
//! - [`statistics`]: test statistics and their values over a set of
//!   transformations.
//! - [`exact`]: tests and p-values that use the whole group, including the
//!   randomized boundary rule that makes the test exact under ties.
//! - [`random`]: tests and p-values based on randomly drawn transformations
//!   with the identity included, the coset scheme, naive estimates and a
//!   plain Monte Carlo test.
//! - [`simulation`]: a seeded, parallel calibration harness.
//! - [`cli`]: the `permtest` command-line front end.

pub mod cli;
pub mod error;
pub mod exact;
pub mod group;
pub mod random;
pub mod simulation;
pub mod statistics;

pub use error::{Error, Result};
pub use exact::{ClassRepresentatives, Decision, TestReport};
pub use group::{DataVector, GroupElement, GroupSpec};
pub use random::{RandomDraw, SamplingMode, SamplingPlan};

pub use statistics::{OrbitStatistics, Statistic, StatisticSpec};

/// Version tag carried by every JSON document the crate emits.
pub const SCHEMA: &str = "permtest/1";
