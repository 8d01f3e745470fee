//! Numerical laboratory for first-order elliptic operators on the model
//! cylinder `[0, l] x S^1` with a Fourier-truncated boundary circle.
//!
//! The crate realizes, at desk scale, the pieces needed to study boundary
//! value problems of such operators: a dense complex kernel, contour-integral
//! sectorial projections, circle and collar operators, the invertible double
//! with its Poisson and Calderon operators, finite-dimensional symplectic
//! algebra with cobordism-style signature and index checks, metrics and
//! continuity experiments under parameter variation, and the symmetric
//! constant-coefficient extension across an attached collar.

pub mod error;
pub mod util;
pub mod policy;
pub mod rng;

pub mod numkernel;

pub mod sectorial;

pub mod circleop;

pub mod collar;

pub mod calderon;

pub mod symplectic;

pub mod cobordism;

pub mod paramflow;

pub mod extension;

pub mod report;

pub mod scenario;

pub mod suites;

pub use error::{Error, Result};
pub use numkernel::{C64, ComplexMatrix, Subspace};
pub use policy::NumericPolicy;
