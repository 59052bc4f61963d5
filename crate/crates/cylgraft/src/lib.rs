//! Harmonic 1-forms, Gram period matrices and cylinder degeneration on flat model surfaces.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the matrix formulas
#![allow(clippy::needless_range_loop)]

pub mod cochain;
pub mod cylinder;
pub mod error;
pub mod family;
pub mod harmonic;
pub mod homology;
pub mod hyperbolic;
pub mod mesh;
pub mod package;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
