//! Scenario harness: configuration, named scenarios, metrics, exports.

pub mod config;
pub mod export;
pub mod metrics;
pub mod scenario;
pub mod svg;
