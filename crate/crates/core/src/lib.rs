//! Heat kernels of the Bessel operator `Δ_ν` on `(0, ∞)^n`, higher-order
//! Riesz transforms `δ_ν^k Δ_ν^{-|k|/2}`, and the local Hardy / Campanato
//! machinery built on the critical function `ρ(x) = min_j x_j / 16`.
//!
//! - [`special`]: Gamma and modified Bessel functions.
//! - [`heat`]: pointwise heat kernels, their `δ` derivatives and the
//!   right-hand sides of the Gaussian estimates.
//! - [`grid`]: tensor grids, the semigroup on grid functions, maximal
//!   functions and finite differences.
//! - [`riesz`]: subordination, Riesz kernels and operators.
//! - [`spaces`]: atoms, minimizing polynomials, Campanato norms, coverings.
//! - [`harness`]: sampling campaigns that fit empirical constants.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod heat;
pub mod quad;
pub mod report;
pub mod riesz;
pub mod sampling;
pub mod spaces;
pub mod special;

pub use error::{Error, Result};
pub use grid::{Axis, Grid, GridFunction, Spacing};
pub use harness::{CampaignConfig, CampaignId};
pub use heat::{KernelPoint, NuVector};
pub use report::{BoundReport, Sample, Verdict};
pub use riesz::{MultiIndex, SubordinationPlan};
pub use spaces::{AtomCandidate, Ball, PolyND};
