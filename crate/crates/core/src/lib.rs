//! Geometry of the solvable Lie groups `G_A = R^n x_A R` with diagonal `A`, their
//! boundaries, and verification campaigns for the associated distortion estimates.

pub mod boundary;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod maps;
pub mod modulus;
pub mod ode;
pub mod sampling;
pub mod spectrum;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{BoundaryPoint, GroupPoint};
pub use spectrum::{BoundaryVector, Spectrum};
