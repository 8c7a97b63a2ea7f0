//! Empirical checks of the sampling and expected-descent results the solver
//! relies on.
//!
//! Frequencies are compared at 4 binomial standard errors, expectations at 3.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::{generate, GeneratorSpec, Instance};
use crate::identify::{candidate_active_set, Partition};
use crate::problem::CompositeProblem;
use crate::sampler::{
    conditional_probability_formula, intersection_count_pmf, intersection_second_moment, worker_rng,
    SamplerSpec,
};
use crate::solvers::{beta, solve_serial, Mode, SolverParams};
use crate::subproblem::{block_model, full_direction};

pub const FREQUENCY_SIGMAS: f64 = 4.0;
pub const EXPECTATION_SIGMAS: f64 = 3.0;
/// Strata with fewer samples than this are skipped.
pub const MIN_STRATUM: u64 = 100;

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            libm::sqrt(self.variance() / self.n as f64)
        }
    }
}

/// One `(k, i)` stratum of the conditional-probability check.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumCheck {
    pub k: usize,
    pub i: usize,
    /// Draws with `|S ∩ 𝓑| = k`.
    pub samples: u64,
    pub formula: f64,
    /// Mean number of copies of `i` in `𝓑` over the stratum.
    pub empirical: f64,
    /// Binomial standard error of `empirical`.
    pub sigma: f64,
    pub passed: bool,
}

/// `ℙ(|S ∩ 𝓑| = k)` against its binomial form.
#[derive(Debug, Clone, PartialEq)]
pub struct CountCheck {
    pub k: usize,
    pub formula: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub formula: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalReport {
    pub trials: u64,
    pub strata: Vec<StratumCheck>,
    pub counts: Vec<CountCheck>,
    pub second_moment: MomentCheck,
    /// `k = 0` draws in which some `i ∈ S` appeared (must be zero).
    pub zero_stratum_hits: u64,
    pub skipped: Vec<String>,
}

impl ConditionalReport {
    pub fn passed(&self) -> bool {
        self.zero_stratum_hits == 0
            && self.second_moment.passed
            && self.strata.iter().all(|s| s.passed)
            && self.counts.iter().all(|c| c.passed)
    }
}

fn within(empirical: f64, formula: f64, sigma: f64, sigmas: f64) -> bool {
    (empirical - formula).abs() <= sigmas * sigma
}

/// Monte-Carlo check of the conditional-membership formula, the binomial law
/// of `|S ∩ 𝓑|` and its second moment.
///
/// Given `|S ∩ 𝓑| = k`, the `k` draws in `S` are i.i.d. with
/// `ℙ(i | S) = w_i / Σ_S w`, so the copies of `i` are `Binomial(k, ·)` with
/// mean `kw_i/Σ_S w`, the formula under test; `σ` is that binomial's
/// standard error. For `k = 1` this is exactly the membership probability.
pub fn check_conditional_probability(
    spec: &SamplerSpec,
    set: &[usize],
    tau: usize,
    trials: u64,
    seed: u64,
) -> ConditionalReport {
    let mut rng = worker_rng(seed, 0);
    let width = set.len();
    let mut per_k = vec![0u64; tau + 1];
    // copies[k][pos] = total copies of set[pos] over draws in stratum k
    let mut copies = vec![vec![0u64; width]; tau + 1];
    let mut zero_hits = 0u64;
    let mut k2 = Moments::default();
    let mut draw = vec![0usize; tau];
    let mut local = vec![0u64; width];

    for _ in 0..trials {
        local.iter_mut().for_each(|c| *c = 0);
        for slot in draw.iter_mut() {
            *slot = spec.draw(&mut rng);
        }
        let mut k = 0;
        for &e in &draw {
            if let Some(pos) = set.iter().position(|&s| s == e) {
                local[pos] += 1;
                k += 1;
            }
        }
        per_k[k] += 1;
        if k == 0 {
            zero_hits += local.iter().sum::<u64>();
        }
        for (acc, &c) in copies[k].iter_mut().zip(&local) {
            *acc += c;
        }
        k2.push((k * k) as f64);
    }

    let mut strata = Vec::new();
    let mut skipped = Vec::new();
    for k in 1..=tau {
        let n = per_k[k];
        if n < MIN_STRATUM {
            skipped.push(format!("k={k}: {n} samples (< {MIN_STRATUM})"));
            continue;
        }
        for (pos, &i) in set.iter().enumerate() {
            let formula = conditional_probability_formula(spec, set, k, tau, i);
            let slot_p = formula / k as f64;
            let sigma = libm::sqrt(k as f64 * slot_p * (1.0 - slot_p) / n as f64);
            let empirical = copies[k][pos] as f64 / n as f64;
            strata.push(StratumCheck {
                k,
                i,
                samples: n,
                formula,
                empirical,
                sigma,
                passed: within(empirical, formula, sigma, FREQUENCY_SIGMAS),
            });
        }
    }

    let counts = (0..=tau)
        .map(|k| {
            let formula = intersection_count_pmf(spec, set, k, tau);
            let empirical = per_k[k] as f64 / trials as f64;
            let sigma = libm::sqrt(formula * (1.0 - formula) / trials as f64);
            CountCheck {
                k,
                formula,
                empirical,
                sigma,
                passed: within(empirical, formula, sigma, FREQUENCY_SIGMAS),
            }
        })
        .collect();

    let formula = intersection_second_moment(spec, set, tau);
    let second_moment = MomentCheck {
        formula,
        empirical: k2.mean(),
        sigma: k2.std_error(),
        passed: within(k2.mean(), formula, k2.std_error(), FREQUENCY_SIGMAS),
    };

    ConditionalReport {
        trials,
        strata,
        counts,
        second_moment,
        zero_stratum_hits: zero_hits,
        skipped,
    }
}

/// Pads every set so it meets `I` in `min(|I|, ω)` and `J` in `min(|J|, ω)`
/// indices, adding the smallest missing indices first. Output sets are sorted.
///
/// Sets may not already exceed either target, which holds whenever
/// `|S| ≤ ω` and for any output of this function, so it is idempotent.
pub fn extend_decomposition(
    family: &[Vec<usize>],
    partition: &Partition,
    omega: usize,
) -> Result<Vec<Vec<usize>>> {
    let m = partition.len();
    let want_i = partition.inactive().len().min(omega);
    let want_j = partition.active().len().min(omega);
    let mut out = Vec::with_capacity(family.len());
    for set in family {
        let mut member = vec![false; m];
        for &i in set {
            if i >= m {
                return Err(Error::InvalidParameter(format!("index {i} outside [m]")));
            }
            member[i] = true;
        }
        for (class, want) in [(partition.inactive(), want_i), (partition.active(), want_j)] {
            let have = class.iter().filter(|&&i| member[i]).count();
            if have > want {
                return Err(Error::InvalidParameter(format!(
                    "set meets a class in {have} indices, more than the degree {omega} allows"
                )));
            }
            let missing: Vec<usize> = class
                .iter()
                .copied()
                .filter(|&i| !member[i])
                .take(want - have)
                .collect();
            for i in missing {
                member[i] = true;
            }
        }
        out.push((0..m).filter(|&i| member[i]).collect());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub tau: usize,
    pub delta_dp: usize,
    pub beta: f64,
    pub objective: f64,
    /// `F(x) + τ·Σ_i ℙ(i)·G_i(h^β_i, βL_i)`.
    pub rhs: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    /// `Σ_i ℙ(i)·F(x + U_i h^β_i)`, the exact expectation when `τ = 1`.
    pub exact_single_step: f64,
    pub bound_holds: bool,
    pub descent_holds: bool,
    /// `exact_single_step ≤ rhs` up to rounding; checked only when `τ = 1`.
    pub exact_holds: bool,
}

impl DescentReport {
    pub fn passed(&self) -> bool {
        self.bound_holds && self.descent_holds && self.exact_holds
    }
}

/// Estimates `E[F(x + Σ_{i∈𝓑} U_i h^β_i)]` for one synchronous step.
///
/// Repeated indices move the iterate by `c·h_i`; `ψ` is evaluated as
/// `λ·Σx`, its linear formula, also where such a step leaves the box.
pub fn check_expected_descent(
    p: &CompositeProblem,
    x: &[f64],
    partition: &Partition,
    delta_dp: usize,
    tau: usize,
    trials: u64,
    seed: u64,
) -> Result<DescentReport> {
    let state = p.initial_state(x.to_vec(), 0.0, 1)?;
    let sampler = SamplerSpec::new(partition, delta_dp)?;
    let beta_v = beta(
        tau,
        delta_dp,
        partition.inactive().len(),
        partition.active().len(),
        p.omega(),
    );
    let h = full_direction(p, &state, beta_v);
    let objective = p.objective(&state);
    let lambda = p.lambda();
    let x_sum: f64 = state.x.iter().sum();

    let mut model = 0.0;
    let mut exact = 0.0;
    let mut scratch = state.r.clone();
    for j in 0..p.n_vars() {
        let prob = sampler.probability(j);
        let g = p.gradient_block(&state, j);
        model += prob * block_model(g, h[j], beta_v * p.lipschitz(j), lambda);

        let (col, sign) = p.block_column(j);
        scratch.copy_from_slice(&state.r);
        for (r, v) in col.iter() {
            scratch[r] += sign * h[j] * v;
        }
        exact += prob * (0.5 * scratch.iter().map(|v| v * v).sum::<f64>() + lambda * (x_sum + h[j]));
    }
    let rhs = objective + tau as f64 * model;

    let mut rng = worker_rng(seed, 0);
    let mut moments = Moments::default();
    for _ in 0..trials {
        scratch.copy_from_slice(&state.r);
        let mut moved = 0.0;
        for _ in 0..tau {
            let j = sampler.draw(&mut rng);
            let (col, sign) = p.block_column(j);
            for (r, v) in col.iter() {
                scratch[r] += sign * h[j] * v;
            }
            moved += h[j];
        }
        let f = 0.5 * scratch.iter().map(|v| v * v).sum::<f64>() + lambda * (x_sum + moved);
        moments.push(f);
    }
    let se = moments.std_error();
    let mean = moments.mean();
    Ok(DescentReport {
        tau,
        delta_dp,
        beta: beta_v,
        objective,
        rhs,
        mc_mean: mean,
        mc_std_error: se,
        exact_single_step: exact,
        bound_holds: mean <= rhs + EXPECTATION_SIGMAS * se,
        descent_holds: rhs > objective || mean <= objective + EXPECTATION_SIGMAS * se,
        exact_holds: tau != 1 || exact <= rhs + 1e-12 * (1.0 + rhs.abs()),
    })
}

/// Identification partition `J = C(x)` at `x`.
pub fn identified_partition(p: &CompositeProblem, x: &[f64], alpha: f64) -> Result<Partition> {
    let s = p.initial_state(x.to_vec(), 0.0, 1)?;
    let h = full_direction(p, &s, 1.0);
    Partition::from_active(p.n_vars(), candidate_active_set(x, &h, alpha))
}

/// Random family of sets of size at most `omega` over `[m]`.
pub fn random_family<R: Rng>(rng: &mut R, m: usize, omega: usize, count: usize) -> Vec<Vec<usize>> {
    (0..count)
        .map(|_| {
            let size = rng.random_range(0..=omega.min(m));
            let mut s = rand::seq::index::sample(rng, m, size).into_vec();
            s.sort_unstable();
            s
        })
        .collect()
}

/// Outcome of one named check in [`standard_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Small instance (20 split variables) used by the expected-descent checks.
pub fn descent_instance(seed: u64) -> Result<Instance> {
    generate(&GeneratorSpec::new(8, 10, 3, seed).with_support(3))
}

/// Three iterates of a serial run: the origin, the end of the first cycle
/// and the first cycle end within `10⁻³` of `F*`.
pub fn descent_states(inst: &Instance, seed: u64) -> Result<[Vec<f64>; 3]> {
    let p = inst.problem()?;
    let m = p.n_vars();
    let run = |l_max: u64, f_target: Option<f64>| {
        let params = SolverParams {
            mode: Mode::SerialActive,
            c0: Some(m),
            l_max: Some(l_max),
            f_target,
            epsilon: 0.0,
            seed,
            ..Default::default()
        };
        solve_serial(&p, &params).map(|o| o.state.x)
    };
    Ok([
        vec![0.0; m],
        run(m as u64, None)?,
        run(1000 * m as u64, Some(inst.f_star * (1.0 + 1e-3)))?,
    ])
}

/// The battery behind `pabcd verify`.
pub fn standard_suite(trials: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    // Conditional membership, m = 10 two-class case.
    let part = Partition::from_active(10, (4..10).collect())?;
    let spec = SamplerSpec::new(&part, 5)?;
    let rep = check_conditional_probability(&spec, &[1, 2, 4, 6], 4, trials, seed);
    out.push(CheckOutcome {
        name: "conditional membership (m=10, delta_dp=5, tau=4)".into(),
        passed: rep.passed(),
        detail: format!(
            "{} strata, worst |z| = {:.2}, k=0 hits = {}, E[k^2] {:.5} vs {:.5}",
            rep.strata.len(),
            rep.strata
                .iter()
                .filter(|s| s.sigma > 0.0)
                .map(|s| (s.empirical - s.formula).abs() / s.sigma)
                .fold(0.0, f64::max),
            rep.zero_stratum_hits,
            rep.second_moment.empirical,
            rep.second_moment.formula
        ),
    });

    let uni = SamplerSpec::uniform(6)?;
    let all: Vec<usize> = (0..6).collect();
    let rep = check_conditional_probability(&uni, &all, 3, trials, seed + 1);
    out.push(CheckOutcome {
        name: "conditional membership (uniform, S=[m])".into(),
        passed: rep.passed(),
        detail: format!("{} strata", rep.strata.len()),
    });

    // Decomposition extension: I = {1,2}, J = {3..7}, ω = 3, shifted to 0-based.
    let example = Partition::from_sets(7, vec![0, 1], vec![2, 3, 4, 5, 6])?;
    let family = vec![vec![0, 3], vec![1], vec![1, 4, 5], vec![0, 2, 6]];
    let ext = extend_decomposition(&family, &example, 3)?;
    let expected = vec![
        vec![0, 1, 2, 3, 4],
        vec![0, 1, 2, 3, 4],
        vec![0, 1, 2, 4, 5],
        vec![0, 1, 2, 3, 6],
    ];
    out.push(CheckOutcome {
        name: "decomposition extension (worked example)".into(),
        passed: ext == expected,
        detail: format!("{ext:?}"),
    });

    // Expected descent on a 20-variable instance.
    let inst = descent_instance(seed)?;
    let p = inst.problem()?;
    let states = descent_states(&inst, seed)?;
    for (label, x) in ["x=0", "mid-run", "near-optimal"].iter().zip(&states) {
        for tau in [1usize, 4] {
            let part = identified_partition(&p, x, 0.5)?;
            let rep = check_expected_descent(&p, x, &part, 10, tau, trials, seed + tau as u64)?;
            out.push(CheckOutcome {
                name: format!("expected descent ({label}, tau={tau}, delta_dp=10)"),
                passed: rep.passed(),
                detail: format!(
                    "E[F] ~ {:.6} +- {:.1e}, bound {:.6}, F(x) {:.6}",
                    rep.mc_mean, rep.mc_std_error, rep.rhs, rep.objective
                ),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_constant_sequence_is_exact() {
        let mut m = Moments::default();
        for _ in 0..1000 {
            m.push(0.1 + 0.2);
        }
        assert_eq!(m.mean(), 0.1 + 0.2);
        assert_eq!(m.std_error(), 0.0);
    }

    #[test]
    fn saturated_set_is_unchanged() {
        let part = Partition::from_sets(4, vec![0, 1], vec![2, 3]).unwrap();
        let fam = vec![vec![0, 1, 2, 3]];
        assert_eq!(extend_decomposition(&fam, &part, 4).unwrap(), fam);
    }

    #[test]
    fn oversize_set_rejected() {
        let part = Partition::all_inactive(4);
        assert!(extend_decomposition(&[vec![0, 1, 2]], &part, 2).is_err());
    }
}
