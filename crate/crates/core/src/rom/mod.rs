//! Galerkin reduction of the momentum, pressure, and species equations onto
//! the compressed bases: offline operator assembly, binary persistence, and
//! the online coefficient integrator.

pub mod integrate;
pub mod io;
pub mod operators;

pub use integrate::{project_initial, reconstruct, ReducedSystem, RomState};
pub use io::{read_operators, write_coefficient_csv, write_operators};
pub use operators::{assemble_operators, boundary_accel, BoundaryAccel, RomOperators};
