//! Configuration, presets and run orchestration behind the `isokin` binary.

pub mod checks;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod presets;
pub mod sweep;
