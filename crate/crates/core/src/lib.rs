//! Nyström solvers for two-dimensional Helmholtz transmission problems on
//! curves with corners, using sigmoid-graded meshes and weighted densities.

pub mod cli;
pub mod error;
pub mod formulations;
pub mod geometry;
pub mod integrate;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod postprocess;
pub mod quadrature;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
