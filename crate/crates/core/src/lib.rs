//! Fully discrete finite-difference solver for the nonlinear damped
//! viscoelastic Euler–Bernoulli beam
//!
//! ```text
//! u_tt + G(‖u_xx‖²) u_t + u_xxxx − ∫_0^t β(t−s) u_xxxx(s) ds = f,   x ∈ (0, 1)
//! ```
//!
//! with hinged ends and a tempered power-law relaxation kernel `β`.
//! Time stepping is backward Euler with an averaged product-integration rule
//! for the memory term; each step is a fixed-point iteration around a banded
//! symmetric solve.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod model;
pub mod quadrature;
pub mod stepper;
pub mod study;

pub use error::{Error, ErrorCategory, Result};
pub use grid::{BandedMatrix, Grid};
pub use kernel::{KernelFamily, KernelSpec, KernelTables};
pub use model::{DampingFunction, Forcing, Profile, ProblemSpec};
pub use stepper::{run, SolverConfig, SolverState, TimeSeries};
