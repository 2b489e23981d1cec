//! Configuration, task orchestration and serialisation behind the `cca` binary.

pub mod config;
pub mod figures;
pub mod output;
pub mod tasks;
