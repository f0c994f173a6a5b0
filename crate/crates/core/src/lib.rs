//! Symbolic-numeric workbench for homogeneous real hypersurfaces in C^3.

pub mod catalog;
pub mod error;
pub mod expr;
pub mod fields;
pub mod lie;
pub mod linalg;
pub mod params;
pub mod scalar;
pub mod surface;
pub mod verify;

pub use error::*;
pub use expr::{Expr, Var};
pub use scalar::Scalar;
