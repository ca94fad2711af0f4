//! Proximal distance algorithms.
//!
//! A constrained problem `min f(x)` over `C = C_1 ∩ ... ∩ C_m` is replaced by
//! the penalized loss `f(x) + ρ q(x)` with `q(x) = (1/2m) Σ dist(x, C_i)²`.
//! Each squared distance is majorized at the current iterate `x_k` by
//! `‖x − P_{C_i}(x_k)‖²`, so one MM step is the proximal map of `ρ⁻¹f`
//! evaluated at the averaged projection. The penalty constant `ρ` is annealed
//! upward on a schedule while Nesterov extrapolation accelerates each
//! fixed-`ρ` stage.
//!
//! Layout:
//!
//! - [`linalg`]: factorizations, cached shifted solves, CG and LSQR.
//! - [`projections`]: the catalog of projection and proximal operators.
//! - [`engine`]: the generic annealed MM driver and its trace.
//! - [`solvers`]: linear programming, nonnegative quadratic programming,
//!   closest kinship matrix, second-order cone projection, copositivity
//!   index, linear complementarity and sparse PCA.
//! - [`oracles`]: slow, independent reference methods used for verification.
//! - [`generate`]: seeded instance generators.

pub mod engine;
pub mod error;
pub mod generate;
pub mod linalg;
pub mod oracles;
pub mod projections;
pub mod solvers;

pub use error::{Error, Result};
