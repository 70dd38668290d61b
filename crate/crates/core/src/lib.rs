//! Construction and numerical certification of real hypersurfaces with two
//! principal curvatures in the complex projective and hyperbolic planes.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`curvatureflow`] integrates the curvature ODE for `(alpha, beta, phi)`
//!    starting from data read off a principal torus orbit ([`orbits`]).
//! 2. [`curvebuilder`] rebuilds the generating curve inside the totally
//!    geodesic, totally real section with curvature `beta`.
//! 3. [`hypersurface`] sweeps the torus action over the curve and estimates
//!    the shape operator by finite differences.
//! 4. The estimated spectrum is compared with the ODE solution.
//!
//! [`spaceform`] holds the ambient geometry and [`pipeline`] wires the stages
//! together for the `hyperforge` binary.

pub mod curvatureflow;
pub mod curvebuilder;
pub mod error;
pub mod hypersurface;
pub mod lift;
pub mod orbits;
pub mod pipeline;
pub mod spaceform;

pub use error::{Error, Result};
