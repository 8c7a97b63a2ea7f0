use pabcd::{solve, ThreadedExecutor};
use pabcd_core::solvers::{solve_with, Mode, SerialExecutor, SolverParams, Termination};
use pabcd_core::{generate, GeneratorSpec};

fn instance() -> pabcd_core::Instance {
    generate(&GeneratorSpec::new(120, 200, 6, 4).with_support(10)).unwrap()
}

#[test]
fn single_thread_matches_serial_bitwise() {
    let inst = instance();
    let p = inst.problem().unwrap();
    for seed in 0..3 {
        let params = SolverParams {
            mode: Mode::SerialActive,
            seed,
            f_target: Some(inst.f_star * (1.0 + 1e-4)),
            ..Default::default()
        };
        let serial = solve_with(&p, &params, vec![0.0; 400], &mut SerialExecutor).unwrap();
        let par = SolverParams {
            mode: Mode::ParallelActive,
            tau: 1,
            ..params.clone()
        };
        let threaded = solve_with(&p, &par, vec![0.0; 400], &mut ThreadedExecutor).unwrap();
        assert_eq!(serial.state.x, threaded.state.x);
        assert_eq!(serial.record.epochs, threaded.record.epochs);
    }
}

#[test]
fn four_threads_reach_target() {
    let inst = instance();
    let p = inst.problem().unwrap();
    for mode in [Mode::ParallelActive, Mode::ParallelUniform] {
        let params = SolverParams {
            mode,
            tau: 4,
            seed: 1,
            f_target: Some(inst.f_star * (1.0 + 1e-4)),
            ..Default::default()
        };
        let out = solve(&p, &params, vec![0.0; 400]).unwrap();
        assert_eq!(out.record.termination, Termination::TargetReached, "{mode:?}");
        assert!(out.state.x.iter().all(|&v| v >= 0.0));
        assert!(out.record.wall_time > 0.0);
    }
}
