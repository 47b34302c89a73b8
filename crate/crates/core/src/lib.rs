//! Radially symmetric blow-up for `u_t = Δu − h(|∇u|) + f(u)` on a ball.
//!
//! The crate provides a finite-difference solver for the nonlinear problem, an
//! exact oracle for the model case `h(s) = s²`, `f(u) = e^u` built on the
//! linearizing substitution `v = 1 − e^{−u}`, the closed-form bounds of the
//! estimate families, and routines that extract blow-up times and rates from
//! traces and check them against those bounds.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod problem;
pub mod report;
pub mod solver;
pub mod transform;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{Profile, RadialGrid};
pub use problem::{make_problem, GradientTerm, InitialData, ProblemSpec, Reaction};
pub use solver::{solve, Snapshot, SolverConfig, Trace};
pub use transform::{find_blowup, OracleOptions, OracleResult};
