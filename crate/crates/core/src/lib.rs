//! Perturbation bounds, root tracking and multiple-root splitting for
//! square systems of real polynomial equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod error;
pub mod homotopy;
pub mod ideal;
pub mod linalg;
pub mod poly;
pub mod region;
pub mod rootfind;
pub mod splitter;
pub mod system;

pub use error::{Error, Result};
pub use poly::{Exponent, MultiPoly, Term};
pub use region::IntervalBox;
pub use system::{EquationSet, PolySystem};
