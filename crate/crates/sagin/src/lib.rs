//! File formats, batch execution and benchmarks around the scheduling core.

pub mod bench;
pub mod cli;
pub mod config_io;
pub mod output;
pub mod radar;
pub mod runner;
