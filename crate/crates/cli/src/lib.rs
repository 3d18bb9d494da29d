//! File formats, mesh loading, parallel execution and the pipeline behind
//! the `omnitree` command.

pub mod config;
pub mod exec;
pub mod export;
pub mod meshio;
pub mod pipeline;
pub mod shape;
