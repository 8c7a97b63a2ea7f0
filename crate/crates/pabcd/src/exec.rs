//! Threaded cycles and the timed solve entry point.

use std::thread;
use std::time::Instant;

use pabcd_core::problem::{CompositeProblem, SolverState};
use pabcd_core::sampler::{BlockRng, SamplerSpec};
use pabcd_core::solvers::{
    solve_with, worker_loop, CycleExecutor, Mode, SerialExecutor, SharedState, SolveOutcome,
    SolverParams,
};

/// One OS thread per worker stream, lock-free updates on shared atomics.
#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadedExecutor;

impl CycleExecutor for ThreadedExecutor {
    fn run_cycle(
        &mut self,
        p: &CompositeProblem,
        state: &mut SolverState,
        sampler: &SamplerSpec,
        beta: f64,
        rounds: usize,
        rngs: &mut [BlockRng],
    ) {
        let shared = SharedState::from_state(state);
        if let [rng] = rngs {
            worker_loop(p, &mut shared.view(), sampler, beta, rounds, rng);
        } else {
            thread::scope(|s| {
                for rng in rngs.iter_mut() {
                    let mut view = shared.view();
                    s.spawn(move || worker_loop(p, &mut view, sampler, beta, rounds, rng));
                }
            });
        }
        shared.write_back(state);
    }
}

/// Runs `params` from `x0`, timing the solve loop.
///
/// Serial mode runs on the calling thread; parallel modes use
/// [`ThreadedExecutor`].
pub fn solve(
    p: &CompositeProblem,
    params: &SolverParams,
    x0: Vec<f64>,
) -> pabcd_core::Result<SolveOutcome> {
    let start = Instant::now();
    let mut out = match params.mode {
        Mode::SerialActive => solve_with(p, params, x0, &mut SerialExecutor)?,
        _ => solve_with(p, params, x0, &mut ThreadedExecutor)?,
    };
    out.record.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}
