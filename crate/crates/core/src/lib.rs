//! Dyadic lattice toolkit for bilinear fractional integrals, their
//! commutators and maximal operators, Morrey norms and multi-weight
//! conditions, with a harness for estimating empirical constants.

pub mod czd;
pub mod dyadic;
pub mod error;
pub mod exponents;
pub mod field;
pub mod harness;
pub mod maximal;
pub mod operators;
pub mod quadrature;
pub mod weights_norms;

pub use dyadic::{BoxRegion, Cube, Window};
pub use error::{Error, Result, Violation};
pub use field::{LatticeFunction, Weight};
