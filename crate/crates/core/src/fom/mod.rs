//! Full-order solver: an explicit transport-diffusion stage on the dual
//! cells followed by a vertex pressure correction that projects the momentum
//! field onto the discretely divergence-free subspace.

pub mod flux;
pub mod projection;
pub mod snapshots;
pub mod stage;
pub mod stepper;
pub mod types;

pub use flux::rusanov_flux;
pub use projection::{PressureProjector, ProjectionResult};
pub use snapshots::{read_snapshots, write_snapshots, SnapshotSet};
pub use stage::{pressure_face_value, transport_diffusion_stage};
pub use stepper::{compute_dt, run_fom, RunDiagnostics};
pub use types::{
    BoundaryConditions, BoundaryFunctions, FluidParams, FomState, Problem, ScalarFn, SourceTerm,
    TimeControls, VectorFn,
};
