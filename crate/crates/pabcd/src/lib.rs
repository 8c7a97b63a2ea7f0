//! Threaded solver, file formats and benchmark harness on top of `pabcd-core`.

pub mod bench;
pub mod exec;
pub mod io;

pub use exec::{solve, ThreadedExecutor};
pub use pabcd_core as core;
