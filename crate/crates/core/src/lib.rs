//! Construction, verification and certification of equi-isoclinic subspace
//! packings and equi-isoclinic tight fusion frames over ℝ and ℂ.

pub mod error;
pub mod fusion;
pub mod bounds;
pub mod corner;
pub mod numerics;
pub mod rho;
pub mod subspaces;

pub use error::{Error, Result};
pub use numerics::{Field, Scalar, Tolerances};
