//! Finite-element laboratory for planar Aharonov-Bohm operators with a
//! movable pole.
//!
//! The crate meshes a polygonal domain with grading toward the pole,
//! assembles the magnetic stiffness and mass forms with P1 elements, solves
//! the lowest eigenpairs, and measures the local structure of eigenfunctions
//! at the pole: Fourier coefficients, vanishing order, Almgren frequency,
//! blow-up limits and eigenvalue variation rates.

pub mod almgren;
pub mod assembly;
pub mod asymptotics;
pub mod clip;
pub mod eigensolve;
pub mod error;
pub mod fields;
pub mod gauge;
pub mod geometry;
pub mod linalg;
pub mod locate;
pub mod oracle;
pub mod overlay;
pub mod par;
pub mod quad;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use par::Execution;
