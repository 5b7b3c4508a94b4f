//! Compatible finite element discretizations of the compressible Euler
//! vertical slice and the planar thermal shallow water equations, built on an
//! almost-Poisson bracket with SUPG-stabilized thermal transport.

pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};
pub mod discretization;
pub mod operators;
pub mod physics;
pub mod timestepping;
pub mod diagnostics;
pub mod cases;
pub mod io;
pub mod verify;
