//! Exact verification, comparison, and search of fan subsolutions for the
//! two-dimensional barotropic Euler equations.

pub mod convexint;
pub mod error;
pub mod exactnum;
pub mod fan;
pub mod hull;
pub mod model;
pub mod riemann;
pub mod search;
pub mod wavecone;

pub use error::{Error, Result};
pub use exactnum::{IntervalExpr, QuadExt, Rational, XReal};
