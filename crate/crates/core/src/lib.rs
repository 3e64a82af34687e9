//! Numerical core for fuzzy-torus experiments: lattice length functions,
//! twisted Laurent polynomials, explicit matrix models and Lipschitz seminorms.

pub mod error;
pub mod lattice;
pub mod linalg;
pub mod lip;
pub mod model;
pub mod ncpoly;
pub mod oracle;

pub use error::{Error, Result};
