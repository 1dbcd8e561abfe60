//! Evaluation of the family of fully nonlinear integro-differential operators
//! `F_k^s` that interpolates between the fractional Laplacian (`k = 1`) and the
//! nonlocal Monge-Ampère operator (`k = n`) on convex functions.
//!
//! The crate is organized around six subsystems:
//!
//! * [`numerics`] — special functions, adaptive quadrature, Monte Carlo volume
//!   estimation, and the `W` kernel that the layer-cake route consumes.
//! * [`convex`] — a library of analytic convex test functions with excess
//!   functions, growth certificates, and closed-form sublevel-slice measures.
//! * [`rearrangement`] — decreasing/increasing rearrangements, k-symmetric
//!   rearrangements, 1-D Ryff maps, and Hardy–Littlewood oracles.
//! * [`operator`] — the two independent evaluation routes (layer-cake and
//!   rearranged fractional Laplacian), case classification, optimal kernels,
//!   kernel membership, local limits, Hölder probes, and the 1-D transport
//!   verifier.
//! * [`poisson`] — a monotone Perron-style iteration for the global problem
//!   `F_k^s u = u - φ` with data prescribed at infinity, plus barriers and
//!   solution verification.
//! * [`report`] — serializable run reports shared with the CLI.

pub mod convex;
pub mod error;
pub mod numerics;
pub mod operator;
pub mod parallel;
pub mod poisson;
pub mod rearrangement;
pub mod report;

pub use error::{Error, Result};
pub use numerics::{ExtendedMeasure, OperatorParams, QuadratureSpec};
