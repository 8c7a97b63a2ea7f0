//! Parallel active block coordinate descent for the nonnegative split Lasso.
//!
//! `no_std` with `alloc`. Threads, timing and file formats live in the
//! `pabcd` crate; this crate holds the algorithm, the instance generator and
//! the verification checks.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod generator;
pub mod identify;
pub mod problem;
pub mod sampler;
pub mod solvers;
pub mod sparse;
pub mod subproblem;
pub mod verify;

pub use error::{Error, Result};
pub use generator::{describe, generate, GeneratorSpec, Instance, InstanceSummary};
pub use identify::{IdentifyParams, Partition};
pub use problem::{build_lasso, default_lambda, CompositeProblem, SolverState};
pub use sampler::{BlockRng, Multiset, SamplerSpec};
pub use solvers::{
    solve_serial, solve_with, CycleExecutor, EpochRecord, Mode, RunRecord, SerialExecutor,
    SolveOutcome, SolverParams, Termination,
};
pub use sparse::SparseMatrix;
