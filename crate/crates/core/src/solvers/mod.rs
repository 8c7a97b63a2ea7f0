//! Serial and parallel active block coordinate descent, plus the uniform baseline.
//!
//! A run alternates cycles and synchronization points. Inside a cycle each of
//! the `τ` workers performs `⌊c_s/τ⌋` sampled block updates against the shared
//! residual. At the cycle boundary the residual is recomputed, `h(x)` is
//! evaluated, the `(I, J)` split and cycle size are updated and the stopping
//! rules are checked.
//!
//! Threads are not available here; [`CycleExecutor`] abstracts how a cycle's
//! updates are carried out. [`SerialExecutor`] runs them in place.

mod kernel;

pub use kernel::{update_block, worker_loop, BlockStore};
#[cfg(target_has_atomic = "64")]
pub use kernel::{AtomicF64, SharedState, SharedView};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::identify::{self, IdentifyParams, Partition};
use crate::problem::{CompositeProblem, SolverState};
use crate::sampler::{worker_rng, BlockRng, SamplerSpec};
use crate::subproblem::full_direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Mode {
    /// One update at a time with `β = 1`.
    SerialActive,
    /// `τ` workers, nonuniform sampling, `β` from the partition.
    ParallelActive,
    /// `τ` workers, uniform sampling, no identification.
    ParallelUniform,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::SerialActive => "serial-active",
            Mode::ParallelActive => "parallel-active",
            Mode::ParallelUniform => "parallel-uniform",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serial" | "serial-active" | "serial_active" => Ok(Mode::SerialActive),
            "parallel-active" | "parallel_active" => Ok(Mode::ParallelActive),
            "parallel-uniform" | "parallel_uniform" | "uniform" => Ok(Mode::ParallelUniform),
            other => Err(Error::InvalidParameter(alloc::format!("unknown mode `{other}`"))),
        }
    }
}

/// Run configuration. `c0` and `l_max` default to `2N` and `1000·2N`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverParams {
    pub mode: Mode,
    pub tau: usize,
    pub delta_dp: usize,
    pub delta_f: usize,
    pub alpha: f64,
    pub c0: Option<usize>,
    pub epsilon: f64,
    pub l_max: Option<u64>,
    pub f_target: Option<f64>,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            mode: Mode::ParallelActive,
            tau: 1,
            delta_dp: 10,
            delta_f: 1,
            alpha: 0.5,
            c0: None,
            epsilon: 1e-6,
            l_max: None,
            f_target: None,
            seed: 0,
        }
    }
}

impl SolverParams {
    /// Fills `c0` and `l_max` for a problem with `m` blocks and checks invariants.
    pub fn resolve(&self, m: usize) -> Result<SolverParams> {
        let mut out = self.clone();
        let c0 = *out.c0.get_or_insert(m);
        let l_max = *out.l_max.get_or_insert(1000 * m as u64);
        if out.mode == Mode::SerialActive {
            out.tau = 1;
        }
        if out.mode == Mode::ParallelUniform {
            out.delta_dp = 1;
        }
        if out.tau == 0 {
            return Err(Error::InvalidParameter("tau must be at least 1".into()));
        }
        if out.epsilon.is_nan() || out.epsilon < 0.0 {
            return Err(Error::InvalidParameter("epsilon must be nonnegative".into()));
        }
        if l_max < c0 as u64 {
            return Err(Error::InvalidParameter(alloc::format!(
                "l_max ({l_max}) must be at least c0 ({c0})"
            )));
        }
        IdentifyParams {
            alpha: out.alpha,
            delta_f: out.delta_f,
            c0,
            delta_dp: out.delta_dp,
        }
        .validate()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Termination {
    TargetReached,
    VSmall,
    Budget,
    NumericalFailure,
}

/// State at the end of one cycle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// Updates performed so far (`ℓ`).
    pub iter: u64,
    pub objective: f64,
    /// `‖h(x^ℓ)‖₂` at `β = 1`.
    pub h_norm: f64,
    /// `|I|` and `|J|` after re-partitioning.
    pub n_inactive: usize,
    pub n_active: usize,
    /// Penalty used during the cycle.
    pub beta: f64,
    /// `‖r_stored − r_fresh‖∞` at the correction.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunRecord {
    pub params: SolverParams,
    pub termination: Termination,
    pub total_updates: u64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub epochs: Vec<EpochRecord>,
    /// Seconds spent in the solve loop; left at 0 where no clock exists.
    pub wall_time: f64,
    pub final_x_nnz: usize,
}

/// Result of [`solve_with`]: the record plus the final state.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub record: RunRecord,
    pub state: SolverState,
}

/// `β = (τ−1)(δ_DP·min(|I|,ω) + min(|J|,ω))/q + 1`, `q = δ_DP|I| + |J|`.
pub fn beta(tau: usize, delta_dp: usize, size_inactive: usize, size_active: usize, omega: usize) -> f64 {
    let q = (delta_dp * size_inactive + size_active) as f64;
    let spread = (delta_dp * size_inactive.min(omega) + size_active.min(omega)) as f64;
    (tau as f64 - 1.0) * spread / q + 1.0
}

/// `‖v‖₂`.
pub fn stopping_norm(s: &SolverState) -> f64 {
    libm::sqrt(s.v.iter().map(|v| v * v).sum::<f64>())
}

/// Carries out the block updates of one cycle.
pub trait CycleExecutor {
    /// Each of the `rngs.len()` workers performs `rounds` updates on `state`.
    fn run_cycle(
        &mut self,
        p: &CompositeProblem,
        state: &mut SolverState,
        sampler: &SamplerSpec,
        beta: f64,
        rounds: usize,
        rngs: &mut [BlockRng],
    );
}

/// In-place, single worker. Extra streams, if any, run one after another.
#[derive(Debug, Default, Clone, Copy)]
pub struct SerialExecutor;

impl CycleExecutor for SerialExecutor {
    fn run_cycle(
        &mut self,
        p: &CompositeProblem,
        state: &mut SolverState,
        sampler: &SamplerSpec,
        beta: f64,
        rounds: usize,
        rngs: &mut [BlockRng],
    ) {
        for rng in rngs {
            worker_loop(p, state, sampler, beta, rounds, rng);
        }
    }
}

/// Runs the method from `x0` with the given executor.
pub fn solve_with<E: CycleExecutor>(
    p: &CompositeProblem,
    params: &SolverParams,
    x0: Vec<f64>,
    executor: &mut E,
) -> Result<SolveOutcome> {
    let m = p.n_vars();
    let params = params.resolve(m)?;
    let c0 = params.c0.expect("resolved");
    let l_max = params.l_max.expect("resolved");
    let tau = params.tau;
    let identify = params.mode != Mode::ParallelUniform;
    let omega = p.omega();

    let mut state = p.initial_state(x0, params.epsilon, c0)?;
    let mut rngs: Vec<BlockRng> = (0..tau).map(|w| worker_rng(params.seed, w)).collect();
    let initial_objective = p.objective(&state);
    let mut epochs = Vec::new();

    let termination = loop {
        let n_inactive = state.partition.inactive().len();
        let n_active = state.partition.active().len();
        let beta_k = match params.mode {
            Mode::SerialActive => 1.0,
            _ => beta(tau, params.delta_dp, n_inactive, n_active, omega),
        };
        let rounds = (state.cycle_size / tau).max(1);
        let sampler = SamplerSpec::new(&state.partition, params.delta_dp)?;

        executor.run_cycle(p, &mut state, &sampler, beta_k, rounds, &mut rngs);
        state.iter_count += (rounds * tau) as u64;

        let drift = p.residual_refresh(&mut state);
        let objective = p.objective(&state);
        let h = full_direction(p, &state, 1.0);
        let h_norm = libm::sqrt(h.iter().map(|v| v * v).sum::<f64>());

        let next = if identify {
            let candidates = identify::candidate_active_set(&state.x, &h, params.alpha);
            identify::update_partition(m, candidates)?
        } else {
            Partition::all_inactive(m)
        };
        state.cycle_size =
            identify::next_cycle_size(next.inactive().len(), params.delta_f, m, c0);
        epochs.push(EpochRecord {
            iter: state.iter_count,
            objective,
            h_norm,
            n_inactive: next.inactive().len(),
            n_active: next.active().len(),
            beta: beta_k,
            drift,
        });
        state.partition = next;

        if !objective.is_finite() || !drift.is_finite() {
            break Termination::NumericalFailure;
        }
        if params.f_target.is_some_and(|t| objective <= t) {
            break Termination::TargetReached;
        }
        if stopping_norm(&state) <= params.epsilon {
            break Termination::VSmall;
        }
        if state.iter_count >= l_max {
            break Termination::Budget;
        }
    };

    let final_objective = p.objective(&state);
    let record = RunRecord {
        params,
        termination,
        total_updates: state.iter_count,
        initial_objective,
        final_objective,
        epochs,
        wall_time: 0.0,
        final_x_nnz: state.x.iter().filter(|&&x| x != 0.0).count(),
    };
    Ok(SolveOutcome { record, state })
}

/// [`solve_with`] on the [`SerialExecutor`] from the null vector.
pub fn solve_serial(p: &CompositeProblem, params: &SolverParams) -> Result<SolveOutcome> {
    solve_with(p, params, vec![0.0; p.n_vars()], &mut SerialExecutor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_lasso;
    use crate::sparse::SparseMatrix;

    #[test]
    fn beta_values() {
        for (i, j) in [(10, 0), (3, 7), (0, 5)] {
            assert_eq!(beta(1, 7, i, j, 4), 1.0);
        }
        // J = ∅ reduces to the uniform value
        let m = 12;
        let omega = 5;
        let expect = 1.0 + 3.0 * omega as f64 / m as f64;
        assert!((beta(4, 9, m, 0, omega) - expect).abs() < 1e-15);
        assert!((beta(4, 5, 4, 6, 3) - (1.0 + 54.0 / 26.0)).abs() < 1e-15);
    }

    #[test]
    fn stopping_norm_cases() {
        let p = build_lasso(SparseMatrix::identity(2).unwrap(), vec![1.0, 1.0], 0.0).unwrap();
        let eps = 1e-3;
        let mut s = p.zero_state(eps, 4);
        assert!((stopping_norm(&s) - 2.0 * eps * 2.0).abs() < 1e-15);
        assert!(stopping_norm(&s) > eps);
        s.v.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(stopping_norm(&s), 0.0);
    }

    #[test]
    fn identity_converges_quickly() {
        let p = build_lasso(SparseMatrix::identity(2).unwrap(), vec![1.0, -1.0], 0.0).unwrap();
        let params = SolverParams {
            mode: Mode::SerialActive,
            f_target: Some(1e-12),
            seed: 3,
            ..Default::default()
        };
        let out = solve_serial(&p, &params).unwrap();
        assert_eq!(out.record.termination, Termination::TargetReached);
        assert!(out.record.epochs.len() <= 2, "{:?}", out.record.epochs);
        assert!(out.record.final_objective <= 1e-12);
    }

    #[test]
    fn params_resolution() {
        let base = SolverParams::default();
        let r = base.resolve(10).unwrap();
        assert_eq!(r.c0, Some(10));
        assert_eq!(r.l_max, Some(10_000));
        let serial = SolverParams { mode: Mode::SerialActive, tau: 8, ..base.clone() };
        assert_eq!(serial.resolve(10).unwrap().tau, 1);
        assert!(SolverParams { l_max: Some(3), ..base.clone() }.resolve(10).is_err());
        assert!(SolverParams { tau: 0, ..base.clone() }.resolve(10).is_err());
        assert!(SolverParams { alpha: 1.5, ..base }.resolve(10).is_err());
        assert_eq!("serial".parse::<Mode>().unwrap(), Mode::SerialActive);
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let p = build_lasso(SparseMatrix::identity(2).unwrap(), vec![1.0, -1.0], 0.0).unwrap();
        let err = solve_with(&p, &SolverParams::default(), vec![-1.0, 0.0, 0.0, 0.0], &mut SerialExecutor);
        assert!(matches!(err, Err(Error::InfeasibleStart { .. })));
    }
}
