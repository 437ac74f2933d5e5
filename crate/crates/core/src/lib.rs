//! Extremal structure of Lipschitz-free spaces over finite pointed metric
//! spaces.

pub mod cantor;
pub mod cli;
pub mod error;
pub mod extremal;
pub mod free_ball;
pub mod grid;
pub mod io;
pub mod lip;
pub mod lp;
pub mod metric;
pub mod random;
pub mod scalar;

pub use error::{Error, Result};
pub use metric::{FiniteMetricSpace, GridPoint, NormP};
pub use scalar::{Rational, Scalar};
