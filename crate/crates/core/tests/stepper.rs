use std::f64::consts::PI;
use std::sync::Arc;

use beamfd::diagnostics::{check_energy_invariants, monitored_run, StabilityVerdict};
use beamfd::stepper::run_with_tables;
use beamfd::{
    run, DampingFunction, Error, ErrorCategory, Forcing, Grid, KernelSpec, KernelTables, Profile,
    ProblemSpec, SolverConfig, SolverState,
};

fn sine_spec(kernel: KernelSpec, damping: DampingFunction) -> ProblemSpec {
    ProblemSpec {
        u0: Profile::SinMode {
            mode: 1,
            amplitude: 1.0,
        },
        u1: Profile::SinMode {
            mode: 1,
            amplitude: 0.5,
        },
        forcing: Forcing::TemperedSine {
            amplitude: 1.0,
            sigma: 1.2,
            alpha: 0.5,
            mode: 1,
        },
        damping,
        kernel,
        horizon: 1.0,
    }
}

fn every_step() -> SolverConfig {
    SolverConfig {
        snapshot_stride: 1,
        ..SolverConfig::default()
    }
}

/// Eigenvalue of the discrete biharmonic on the first sine mode.
fn lambda(grid: &Grid) -> f64 {
    let h = grid.h();
    (4.0 / (h * h) * (PI * h / 2.0).sin().powi(2)).powi(2)
}

fn phi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.2 * t).exp() * t.sqrt()
    } else {
        0.0
    }
}

fn compare_modes(grid: &Grid, snapshots: &[(usize, Vec<f64>)], xi: &[f64], tol: f64) {
    let s = grid.sample(|x| (PI * x).sin());
    assert_eq!(snapshots.len(), xi.len() - 1);
    for (n, u) in snapshots {
        for (a, b) in u.iter().zip(&s) {
            assert!(
                (a - xi[*n] * b).abs() <= tol,
                "step {n}: {a} vs {}",
                xi[*n] * b
            );
        }
    }
}

#[test]
fn memory_free_sine_mode_matches_scalar_recurrence() {
    let grid = Grid::new(32).unwrap();
    let c = 0.7;
    let spec = sine_spec(KernelSpec::none(), DampingFunction::constant(c));
    let n_steps = 1000;
    let dt = 1.0 / n_steps as f64;
    let lam = lambda(&grid);
    let mut xi = vec![1.0, 1.0 + 0.5 * dt];
    for n in 2..=n_steps {
        let (a, b) = (xi[n - 1], xi[n - 2]);
        let rhs = phi(n as f64 * dt) + (2.0 * a - b) / (dt * dt) + c * a / dt;
        xi.push(rhs / (1.0 / (dt * dt) + c / dt + lam));
    }
    let start = std::time::Instant::now();
    let (_, series) = run(&spec, grid, n_steps, &every_step()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    compare_modes(&grid, &series.snapshots, &xi, 1e-10);
    assert!(series.records.iter().skip(1).all(|r| r.fp_iters <= 2));
}

#[test]
fn sine_mode_with_memory_matches_scalar_volterra_recurrence() {
    let grid = Grid::new(16).unwrap();
    let c = 0.4;
    let kernel = KernelSpec::oscillatory(1.2, 0.5, 0.5).unwrap();
    let spec = sine_spec(kernel, DampingFunction::constant(c));
    let n_steps = 200;
    let dt = 1.0 / n_steps as f64;
    let tables = KernelTables::new(kernel, dt, n_steps).unwrap();
    let (w, mu0) = (tables.weights(), tables.mu0());
    let lam = lambda(&grid);
    let mut xi = vec![1.0, 1.0 + 0.5 * dt];
    for n in 2..=n_steps {
        let (a, b) = (xi[n - 1], xi[n - 2]);
        let history: f64 = (1..n).map(|p| w[n - p] * (xi[p] - xi[p - 1]) / dt).sum();
        let rhs = phi(n as f64 * dt) - tables.tail_at_step(n) * lam * xi[0]
            + (2.0 * a - b) / (dt * dt)
            + c * a / dt
            + lam * w[0] * a / dt
            - lam * history;
        xi.push(rhs / (1.0 / (dt * dt) + c / dt + lam * (mu0 + w[0] / dt)));
    }
    let (_, series) = run(&spec, grid, n_steps, &every_step()).unwrap();
    compare_modes(&grid, &series.snapshots, &xi, 1e-10);
}

#[test]
fn nonlinear_damping_sine_mode_matches_scalar_newton() {
    let grid = Grid::new(16).unwrap();
    let spec = sine_spec(KernelSpec::none(), DampingFunction::affine(1.0, 1.0));
    let n_steps = 100;
    let dt = 1.0 / n_steps as f64;
    let lam = lambda(&grid);
    // ‖D2(ξ s)‖² = λ ξ² ‖s‖² with ‖s‖² = 1/2.
    let mut xi = vec![1.0, 1.0 + 0.5 * dt];
    for n in 2..=n_steps {
        let (a, b) = (xi[n - 1], xi[n - 2]);
        let base = phi(n as f64 * dt) + (2.0 * a - b) / (dt * dt);
        let f = |x: f64| {
            let g = 1.0 + 0.5 * lam * x * x;
            x / (dt * dt) + g * (x - a) / dt + lam * x - base
        };
        let df = |x: f64| {
            let g = 1.0 + 0.5 * lam * x * x;
            1.0 / (dt * dt) + g / dt + lam * x * (x - a) / dt + lam
        };
        let mut x = 2.0 * a - b;
        for _ in 0..50 {
            let step = f(x) / df(x);
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        xi.push(x);
    }
    let (_, series) = run(&spec, grid, n_steps, &every_step()).unwrap();
    compare_modes(&grid, &series.snapshots, &xi, 1e-10);
}

#[test]
fn mirror_symmetry_is_preserved() {
    let spec = ProblemSpec::example2(1.5, 0.5).unwrap();
    let grid = Grid::new(64).unwrap();
    let cfg = SolverConfig {
        snapshot_stride: 16,
        ..SolverConfig::default()
    };
    let (state, series) = run(&spec, grid, 1024, &cfg).unwrap();
    let check = |u: &[f64]| {
        let m = u.len();
        (0..m).map(|i| (u[i] - u[m - 1 - i]).abs()).fold(0.0, f64::max)
    };
    for (_, u) in &series.snapshots {
        assert!(check(u) <= 1e-12);
    }
    assert!(check(state.solution()) <= 1e-12);
}

#[test]
fn zero_data_gives_exactly_zero() {
    let mut spec = ProblemSpec::example2(1.5, 0.5).unwrap();
    spec.u0 = Profile::Zero;
    spec.u1 = Profile::Zero;
    let (state, series) = run(&spec, Grid::new(16).unwrap(), 64, &every_step()).unwrap();
    assert!(state.solution().iter().all(|&x| x == 0.0));
    assert!(series.snapshots.iter().all(|(_, u)| u.iter().all(|&x| x == 0.0)));
    assert!(series.energies().iter().all(|e| e.total == 0.0));
}

#[test]
fn reruns_are_bit_identical() {
    let spec = ProblemSpec::example1(1.2, 1.0, 0.5).unwrap();
    let a = run(&spec, Grid::new(32).unwrap(), 128, &every_step()).unwrap();
    let b = run(&spec, Grid::new(32).unwrap(), 128, &every_step()).unwrap();
    let bits = |u: &[f64]| u.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a.0.solution()), bits(b.0.solution()));
    assert_eq!(a.1, b.1);
}

#[test]
fn example2_energy_baseline() {
    let spec = ProblemSpec::example2(1.5, 0.5).unwrap();
    let (_, series) = run(&spec, Grid::new(64).unwrap(), 128, &SolverConfig::default()).unwrap();
    let energies = series.energies();
    assert_eq!(check_energy_invariants(&energies), None);
    let last = energies.last().unwrap();
    assert_eq!(last.n, 128);
    assert!(last.total.is_finite() && last.total > 0.0);
    assert!((last.total - 0.01822032982504688).abs() <= 1e-10);
}

#[test]
fn residual_of_accepted_step_is_small() {
    let spec = ProblemSpec::example1(1.2, 0.5, 0.5).unwrap();
    let cfg = SolverConfig::default();
    let dt = 1.0 / 32.0;
    let tables = Arc::new(KernelTables::new(spec.kernel, dt, 32).unwrap());
    let mut state = SolverState::initialize(&spec, Grid::new(16).unwrap(), dt, tables).unwrap();
    let bound = 10.0 * cfg.fp_tol / (dt * dt);
    for _ in 2..=10 {
        state.step(&cfg).unwrap();
        let r = state.last_step_residual().unwrap();
        let norm = state.grid().norm(&r).unwrap();
        assert!(norm <= bound, "{norm} > {bound}");
    }
}

#[test]
fn non_convergence_is_a_numerical_error() {
    let spec = ProblemSpec::example1(1.2, 1.0, 0.5).unwrap();
    let cfg = SolverConfig {
        fp_max_iters: 1,
        ..SolverConfig::default()
    };
    let err = run(&spec, Grid::new(16).unwrap(), 16, &cfg).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Numerical);
    match err {
        Error::Step { step, source } => {
            assert_eq!(step, 2);
            assert!(matches!(*source, Error::NonConvergence { step: 2, .. }));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn tables_must_cover_the_run() {
    let spec = ProblemSpec::example2(1.5, 0.5).unwrap();
    let tables = Arc::new(KernelTables::new(spec.kernel, 1.0 / 8.0, 8).unwrap());
    let err = run_with_tables(&spec, Grid::new(8).unwrap(), 16, &SolverConfig::default(), tables);
    assert!(matches!(err, Err(Error::Config(_))));
}

#[test]
fn invalid_problem_is_rejected_before_stepping() {
    let mut spec = ProblemSpec::example2(1.5, 0.5).unwrap();
    spec.u0 = Profile::SinMode {
        mode: 1,
        amplitude: f64::NAN,
    };
    spec.damping = DampingFunction::affine(-1.0, 1.0);
    match run(&spec, Grid::new(8).unwrap(), 8, &SolverConfig::default()) {
        Err(Error::Validation(v)) => assert!(v.len() >= 2, "{v:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn monitor_passes_long_run_and_catches_negated_history() {
    let spec = ProblemSpec {
        horizon: 50.0,
        ..ProblemSpec::example2(1.5, 0.5).unwrap()
    };
    let grid = Grid::new(64).unwrap();
    let n = 5000;
    let tables = KernelTables::new(spec.kernel, spec.horizon / n as f64, n).unwrap();
    let cfg = SolverConfig::default();
    let (ok, _) = monitored_run(&spec, grid, n, &cfg, Arc::new(tables.clone()), 1e3, 0.1).unwrap();
    assert!(ok.verdict.passed(), "{ok:?}");
    assert_eq!(ok.steps_completed, n);
    assert!(ok.tail_excess <= 0.01);

    let faulty = Arc::new(tables.with_history_weights_scaled(-1.0));
    let (bad, series) = monitored_run(&spec, grid, n, &cfg, faulty, 1e3, 0.1).unwrap();
    match bad.verdict {
        StabilityVerdict::Fail {
            first_violation, ..
        } => assert_eq!(first_violation, bad.steps_completed),
        v => panic!("{v:?}"),
    }
    assert!(series.records.len() < n);
}
