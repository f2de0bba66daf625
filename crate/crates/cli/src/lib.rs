//! Pipeline crate: configuration ingestion, the constants cache, census
//! orchestration, certificate emission and sensitivity sweeps.
//!
//! The `cr-census` binary wraps this library; everything here is callable
//! directly so the pipeline is testable without process spawning.

pub mod cache;
pub mod certificate;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod verify;

pub use certificate::Certificate;
pub use config::{load_config, CensusConfig, ConfigError};
pub use pipeline::{run_census, sensitivity_sweep, PipelineError};

/// Process exit codes of the binary.
pub mod exit_codes {
    pub const OK: i32 = 0;
    pub const GENERAL: i32 = 1;
    pub const CONFIG_INVALID: i32 = 2;
    pub const QUADRATURE_FAILED: i32 = 3;
    pub const MARGINAL_MATRIX: i32 = 4;
}
