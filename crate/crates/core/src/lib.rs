//! Harmonic tilings of planar cell complexes by rectangles.

pub mod bvp;
pub mod cli;
pub mod complex;
pub mod decomp;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod morse;
pub mod network;
pub mod refine;
pub mod svg;
pub mod tiler;

pub use complex::{load_complex, BoundarySpec, CellComplex, Role, VertexId};
pub use error::{Error, Result};
