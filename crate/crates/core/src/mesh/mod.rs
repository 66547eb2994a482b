//! Tetrahedral primal mesh, its face-centred dual, and the text mesh format.

pub mod dual;
pub mod io;
pub mod primal;

pub use dual::{build_dual, DualCell, DualFacet, DualMesh};
pub use primal::{build_cube_primal, Face, PrimalMesh};
