//! Phase-field gradient flows on 2D P1 triangulations with a topological
//! connectedness penalty.
//!
//! The penalty measures how far apart the connected pieces of a diffuse
//! interface band are, using shortest paths on the dual graph of the mesh with
//! edge weights that vanish inside the band. It is added explicitly to
//! semi-implicit gradient flows of perimeter, curvature and image-segmentation
//! energies.

pub mod cli;
pub mod connectivity;
pub mod error;
pub mod field;
pub mod flow;
pub mod functionals;
pub mod io;
pub mod mesh;
pub mod penalty;
pub mod sparse;

pub use error::{Error, Result};
pub use field::PhaseField;
