//! Incompressible Navier-Stokes and passive species transport on tetrahedral
//! meshes, with snapshot compression and a Galerkin reduced model on top.
//!
//! The full-order solver advances momentum and species with a first-order
//! finite-volume scheme on a face-centred dual mesh, then projects momentum
//! onto a discretely divergence-free space through a P1 pressure correction
//! on the primal mesh. Snapshot sets from that solver feed a proper-orthogonal
//! basis builder ([`pod`]) and a reduced model ([`rom`]) whose pressure is
//! recovered algebraically from a reduced Poisson system.
//!
//! [`cases`] wires the two shipped configurations (a manufactured solution
//! with exact source terms and a lid-driven cavity with a species ball) into
//! an end-to-end pipeline; the `hfvrom` binary exposes each stage on the
//! command line.

pub mod binfmt;
pub mod calculus;
pub mod cases;
pub mod error;
pub mod fom;
pub mod math;
pub mod mesh;
pub mod pod;
pub mod rom;
pub mod vtk;

pub use error::{Error, Result};
