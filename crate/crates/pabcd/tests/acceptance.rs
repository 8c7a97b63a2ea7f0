//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pabcd::{solve, ThreadedExecutor};
use pabcd_core::identify::Partition;
use pabcd_core::sampler::{conditional_probability_formula, worker_rng, SamplerSpec};
use pabcd_core::solvers::{solve_with, Mode, SerialExecutor, SolverParams, Termination};
use pabcd_core::subproblem::{block_direction, BlockDirectionInput};
use pabcd_core::verify::{
    check_conditional_probability, check_expected_descent, descent_instance, descent_states,
    extend_decomposition, identified_partition, random_family,
};
use pabcd_core::{generate, GeneratorSpec, Instance};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn target(inst: &Instance) -> f64 {
    inst.f_star * (1.0 + 1e-4)
}

fn params(mode: Mode, tau: usize, seed: u64, f_target: f64) -> SolverParams {
    SolverParams {
        mode,
        tau,
        seed,
        f_target: Some(f_target),
        ..Default::default()
    }
}

fn end_to_end_instance() -> Instance {
    generate(&GeneratorSpec::new(500, 1000, 10, 2024).with_support(50).with_lambda(1.0))
        .expect("generator")
}

/// Ternary search for the minimizer of `gh + (c/2)h² + λh` on `[lo, hi]`,
/// comparing `f(a) − f(b) = (a − b)(g + λ + c(a + b)/2)` exactly in sign.
fn ternary_min(g: f64, c: f64, lambda: f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 1e-9 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if g + lambda + 0.5 * c * (a + b) > 0.0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn direction_oracle() -> Outcome {
    let mut rng = worker_rng(1, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let x = if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..5.0) };
        let input = BlockDirectionInput::nonneg(
            rng.random_range(-10.0..10.0),
            rng.random_range(0.01..20.0),
            rng.random_range(1.0..16.0),
            rng.random_range(0.0..3.0),
            x,
        );
        let c = input.beta * input.lipschitz;
        let hi = (input.g.abs() + input.lambda) / c + 1.0;
        let oracle = ternary_min(input.g, c, input.lambda, -input.x, hi);
        worst = worst.max((block_direction(&input) - oracle).abs());
    }
    outcome(worst <= 1e-8, format!("10^4 cases, max |h - oracle| = {worst:.2e}"))
}

fn conditional_membership() -> Outcome {
    let part = Partition::from_active(10, (4..10).collect()).expect("partition");
    let spec = SamplerSpec::new(&part, 5).expect("sampler");
    let set = [1, 2, 4, 6];
    let rep = check_conditional_probability(&spec, &set, 4, 10_000_000, 11);
    let worst = rep
        .strata
        .iter()
        .filter(|s| s.sigma > 0.0)
        .map(|s| (s.empirical - s.formula).abs() / s.sigma)
        .fold(0.0, f64::max);
    let worst_count = rep
        .counts
        .iter()
        .filter(|c| c.sigma > 0.0)
        .map(|c| (c.empirical - c.formula).abs() / c.sigma)
        .fold(0.0, f64::max);
    let k2 = conditional_probability_formula(&spec, &set, 2, 4, 1);
    outcome(
        rep.passed(),
        format!(
            "{} strata, max z = {worst:.2}, count max z = {worst_count:.2}, \
             k=0 hits = {}, value at (k=2, i=1) = {k2:.4}",
            rep.strata.len(),
            rep.zero_stratum_hits
        ),
    )
}

fn expected_descent() -> Outcome {
    let inst = descent_instance(17).expect("instance");
    let p = inst.problem().expect("problem");
    let states = descent_states(&inst, 17).expect("states");
    let mut cells = 0;
    let mut failures = Vec::new();
    let mut worst_margin = f64::INFINITY;
    for (s, x) in states.iter().enumerate() {
        let part = identified_partition(&p, x, 0.5).expect("partition");
        for tau in [2, 4, 8] {
            for delta in [1, 10] {
                let rep = check_expected_descent(&p, x, &part, delta, tau, 100_000, 100 + cells)
                    .expect("descent");
                cells += 1;
                let margin = rep.rhs + 3.0 * rep.mc_std_error - rep.mc_mean;
                worst_margin = worst_margin.min(margin);
                if !rep.passed() {
                    failures.push(format!("state {s} tau {tau} delta {delta}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{cells} cells, min(RHS + 3SE - mean) = {worst_margin:.3e}{}",
            if failures.is_empty() { String::new() } else { format!(", failed: {failures:?}") }
        ),
    )
}

fn decomposition_extension() -> Outcome {
    let mut rng = worker_rng(5, 0);
    let mut bad = 0;
    for _ in 0..1000 {
        let m = rng.random_range(1..40);
        let omega = rng.random_range(1..12);
        let active: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.5)).collect();
        let part = Partition::from_active(m, active).expect("partition");
        let family = random_family(&mut rng, m, omega, 8);
        let ext = extend_decomposition(&family, &part, omega).expect("extend");
        let want_i = part.inactive().len().min(omega);
        let want_j = part.active().len().min(omega);
        let ok = family.iter().zip(&ext).all(|(s, e)| {
            s.iter().all(|i| e.contains(i))
                && e.iter().filter(|i| part.inactive().contains(i)).count() == want_i
                && e.iter().filter(|i| part.active().contains(i)).count() == want_j
                && e.len() == want_i + want_j
                && e.len() <= 2 * omega
        });
        bad += usize::from(!ok);
    }
    // 1-based I = {1,2}, J = {3..7}, ω = 3
    let part = Partition::from_sets(7, vec![0, 1], vec![2, 3, 4, 5, 6]).expect("partition");
    let ext = extend_decomposition(&[vec![0, 3]], &part, 3).expect("extend");
    let first: Vec<usize> = ext[0].iter().map(|i| i + 1).collect();
    let example = first == [1, 2, 3, 4, 5];
    outcome(
        bad == 0 && example,
        format!("1000 random cases, {bad} violations; worked example S'1 = {first:?}, degree {}", first.len()),
    )
}

fn end_to_end(inst: &Instance) -> (Outcome, Vec<f64>) {
    let p = inst.problem().expect("problem");
    let mut misses = Vec::new();
    let mut agreements = Vec::new();
    let x_split = inst.split_optimum();
    let configs = [
        (Mode::SerialActive, 1),
        (Mode::ParallelActive, 4),
        (Mode::ParallelUniform, 4),
    ];
    for seed in 0..20 {
        for (mode, tau) in configs {
            let out = solve(&p, &params(mode, tau, seed, target(inst)), vec![0.0; p.n_vars()])
                .expect("solve");
            if out.record.termination != Termination::TargetReached {
                misses.push(format!("{} seed {seed}", mode.as_str()));
            }
            if mode == Mode::SerialActive {
                let mask = out.state.partition.active_mask();
                let agree = mask
                    .iter()
                    .zip(&x_split)
                    .filter(|(&active, &xs)| active == (xs == 0.0))
                    .count();
                agreements.push(agree as f64 / mask.len() as f64);
            }
        }
    }
    (
        outcome(
            misses.is_empty(),
            format!("60 runs, {} missed the target{}", misses.len(),
                if misses.is_empty() { String::new() } else { format!(": {misses:?}") }),
        ),
        agreements,
    )
}

fn identification(agreements: Vec<f64>) -> Outcome {
    let lo = agreements.iter().copied().fold(f64::INFINITY, f64::min);
    let med = median(agreements);
    outcome(med >= 0.95, format!("median agreement {:.4}, min {:.4}", med, lo))
}

fn degeneracy(inst: &Instance) -> Outcome {
    let p = inst.problem().expect("problem");
    let mut same = 0;
    for seed in 0..5 {
        let serial = solve_with(
            &p,
            &params(Mode::SerialActive, 1, seed, target(inst)),
            vec![0.0; p.n_vars()],
            &mut SerialExecutor,
        )
        .expect("serial");
        let parallel = solve_with(
            &p,
            &params(Mode::ParallelActive, 1, seed, target(inst)),
            vec![0.0; p.n_vars()],
            &mut ThreadedExecutor,
        )
        .expect("parallel");
        let bitwise = serial.state.x.len() == parallel.state.x.len()
            && serial
                .state
                .x
                .iter()
                .zip(&parallel.state.x)
                .all(|(a, b)| a.to_bits() == b.to_bits());
        if bitwise
            && serial.record.epochs == parallel.record.epochs
            && serial.state.r == parallel.state.r
        {
            same += 1;
        }
    }
    outcome(same == 5, format!("{same}/5 seeds bitwise identical"))
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn monotone_and_rate(inst: &Instance) -> Outcome {
    let p = inst.problem().expect("problem");
    let mut increases = 0;
    let mut checked = 0;
    for seed in 0..5 {
        let out = solve(&p, &params(Mode::SerialActive, 1, seed, target(inst)), vec![0.0; p.n_vars()])
            .expect("solve");
        let f: Vec<f64> = std::iter::once(out.record.initial_objective)
            .chain(out.record.epochs.iter().map(|e| e.objective))
            .collect();
        checked += f.len() - 1;
        increases += f.windows(2).filter(|w| w[1] > w[0]).count();
    }

    let tall = generate(&GeneratorSpec::new(2000, 200, 40, 8).with_lambda(1.0)).expect("generator");
    let pt = tall.problem().expect("problem");
    let run = SolverParams {
        mode: Mode::SerialActive,
        epsilon: 0.0,
        l_max: Some(60 * pt.n_vars() as u64),
        seed: 8,
        ..Default::default()
    };
    let out = solve(&pt, &run, vec![0.0; pt.n_vars()]).expect("solve");
    let pts: Vec<(f64, f64)> = out
        .record
        .epochs
        .iter()
        .filter(|e| e.objective - tall.f_star > 1e-12 * tall.f_star)
        .map(|e| (e.iter as f64, (e.objective - tall.f_star).ln()))
        .collect();
    let half = &pts[pts.len() / 2..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = half.iter().copied().unzip();
    let slope = if xs.len() >= 2 { least_squares_slope(&xs, &ys) } else { f64::NAN };
    let gap = out.record.final_objective - tall.f_star;
    outcome(
        increases == 0 && slope < 0.0,
        format!(
            "{increases} increases over {checked} cycle steps; tall instance slope of \
             log(F-F*) per update = {slope:.3e} over {} cycles, final gap {gap:.2e}",
            xs.len()
        ),
    )
}

fn identification_payoff() -> Outcome {
    let inst = generate(&GeneratorSpec::new(1000, 2000, 10, 95).with_support(100).with_lambda(1.0))
        .expect("generator");
    let zero = pabcd_core::describe(&inst.a, &inst.x_star).zero_percent;
    let p = inst.problem().expect("problem");
    let mut active = Vec::new();
    let mut uniform = Vec::new();
    let mut misses = 0;
    for seed in 0..20 {
        for (mode, store) in [(Mode::ParallelActive, &mut active), (Mode::ParallelUniform, &mut uniform)] {
            let mut prm = params(mode, 4, seed, target(&inst));
            prm.delta_dp = 10;
            let out = solve(&p, &prm, vec![0.0; p.n_vars()]).expect("solve");
            misses += usize::from(out.record.termination != Termination::TargetReached);
            store.push(out.record.total_updates as f64);
        }
    }
    let (ma, mu) = (median(active), median(uniform));
    let factor = mu / ma;
    outcome(
        misses == 0 && ma <= mu,
        format!(
            "{zero:.0}% zero solution; median updates active {ma:.0} vs uniform {mu:.0}, \
             factor {factor:.3} ({} 1.3){}",
            if factor >= 1.3 { ">=" } else { "<" },
            if misses > 0 { format!(", {misses} runs missed the target") } else { String::new() }
        ),
    )
}

fn parallel_consistency(inst: &Instance) -> Outcome {
    let p = inst.problem().expect("problem");
    let bound = 1e-6 * (1.0 + inst.b.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let mut worst_drift: f64 = 0.0;
    let mut problems = Vec::new();
    for tau in [2, 4, 8] {
        for mode in [Mode::ParallelActive, Mode::ParallelUniform] {
            for seed in 0..3 {
                let out = solve(&p, &params(mode, tau, seed, target(inst)), vec![0.0; p.n_vars()])
                    .expect("solve");
                let drift = out.record.epochs.iter().map(|e| e.drift).fold(0.0, f64::max);
                worst_drift = worst_drift.max(drift);
                let ok = out.state.x.iter().all(|&v| v >= 0.0)
                    && drift < bound
                    && out.record.final_objective <= target(inst);
                if !ok {
                    problems.push(format!("{} tau {tau} seed {seed}", mode.as_str()));
                }
            }
        }
    }
    outcome(
        problems.is_empty(),
        format!("18 runs, max drift {worst_drift:.2e} (bound {bound:.2e}){}",
            if problems.is_empty() { String::new() } else { format!(", failed: {problems:?}") }),
    )
}

fn run(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let passed = out.passed && in_time;
    let budget = limit.map(|l| format!(" / {}s", l.as_secs())).unwrap_or_default();
    println!(
        "criterion {id:>2} [{}] {name}: {} ({:.2}s{budget})",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
    );
    passed
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let inst = end_to_end_instance();
    let mut agreements = Vec::new();
    let results = [
        run(1, "block direction vs ternary search", Some(secs(5)), direction_oracle),
        run(2, "conditional membership Monte Carlo", Some(secs(60)), conditional_membership),
        run(3, "expected-descent bound", Some(secs(120)), expected_descent),
        run(4, "decomposition extension", Some(secs(5)), decomposition_extension),
        run(5, "end-to-end optimality", Some(secs(60)), || {
            let (o, a) = end_to_end(&inst);
            agreements = a;
            o
        }),
        run(6, "identification correctness", None, || identification(agreements)),
        run(7, "serial/parallel degeneracy", None, || degeneracy(&inst)),
        run(8, "monotone descent and rate", None, || monotone_and_rate(&inst)),
        run(9, "identification payoff", None, identification_payoff),
        run(10, "parallel consistency", None, || parallel_consistency(&inst)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
