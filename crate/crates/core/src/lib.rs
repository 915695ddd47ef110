//! Exact volumes, lattice-ball enumeration and orbit equidistribution
//! experiments for subgroups of `SL(n, R) x SL(n, Q_p)`.

pub mod error;
pub mod exact_arith;
pub mod linalg;
pub mod enumerate;
pub mod volume;
pub mod equidist;
pub mod cli;

pub use error::{Error, Result};
