//! Shipped problem setups and the end-to-end pipeline built on them.

pub mod cavity;
pub mod manufactured;
pub mod pipeline;
pub mod report;

pub use pipeline::{
    build_case, run_pipeline, run_reduced, stage_compare, stage_fom, stage_offline, stage_pod,
    stage_pod_from, stage_rom, CaseKind, CaseSetup, PipelineConfig,
};
pub use report::{guarded_relative_error, relative_error, write_error_csv, ErrorReport};
