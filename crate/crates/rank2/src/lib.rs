//! Rank-2 commuting difference operators built from elliptic spectral data.
//!
//! The crate has two independent routes to the same operators:
//!
//! * [`construction`] evaluates closed-form coefficient formulas for the
//!   fourth-order operator `L4 = L2^2 + u` and finds its sixth-order partner
//!   numerically.
//! * [`baker`] solves for the vector Baker-Akhiezer function on the curve and
//!   recovers operators by least squares from the eigen-relation.
//!
//! Both sit on top of [`elliptic`] (Weierstrass functions and Laurent jets)
//! and [`diffop`] (finite-window banded operators). [`flows`] integrates the
//! lattice flow on the `(c_n, v_n)` coefficients.

// `!(x <= tol)` also rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baker;
pub mod construction;
pub mod diffop;
pub mod elliptic;
mod error;
pub mod flows;
pub mod jet;
pub mod linalg;

pub use error::Error;
pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Result<T> = std::result::Result<T, Error>;
