//! Weighted occupation times of the drawdown of a spectrally negative Levy
//! surplus process, up to first-exit times, computed through generalized
//! scale functions.
//!
//! The crate has three layers:
//!
//! * closed-form scale functions `W^(q)`, `Z^(q)` for the two supported
//!   surplus models ([`models`], [`scale`]);
//! * a Volterra solver for the two-argument `W^(omega)(x, y)` and its
//!   companions `Zhat^(omega)`, together with step-weight recursions that
//!   provide an independent route to the same values ([`omega`],
//!   [`recursion`]);
//! * exit functionals built on top of those grids (up/down exit Laplace
//!   transforms, potential densities, a Gerber-Shiu density) and a Monte
//!   Carlo path oracle that cross-validates them ([`exits`], [`mc`]).
//!
//! Everything downstream of a built grid is pure and cheap; building a grid
//! is the only heavy step and is O(n^2) in the number of mesh nodes.

// Validations are written as negated comparisons (`!(x > 0.0)`) on purpose:
// they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod mc;
pub mod mesh;
pub mod models;
pub mod omega;
pub mod quad;
pub mod recursion;
pub mod scale;
pub mod weight;

pub mod exits;

pub use error::{Error, Result};
pub use exits::{ExitLaplaceReport, GerberShiuDensity, HFunction};
pub use mc::{Engine, McEstimate, PathOutcome};
pub use models::LevyModel;
pub use omega::OmegaScaleGrid;
pub use scale::ScaleEval;
pub use weight::WeightFunction;
