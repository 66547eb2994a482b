//! Snapshot compression: inner-product spaces, the correlation eigenproblem
//! and truncated basis construction.

pub mod basis;
pub mod eig;
pub mod io;
pub mod space;

pub use basis::{
    build_basis, build_lifting, build_source_basis, correlation_matrix, select_modes, PodBasis,
    Variable,
};
pub use eig::{sym_eig, SymEig};
pub use io::{read_basis, write_basis};
pub use space::{flatten_vectors, unflatten_vectors, ProductSpace};
