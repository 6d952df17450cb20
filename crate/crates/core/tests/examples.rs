//! Every example runs (at reduced size) as part of the test suite.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }
    };
}

example!(solve_default);
example!(mobility_sweep);
example!(inner_solver);
example!(spectral_norms);
example!(custom_objective);
example!(dense_ppgd);
example!(theory_checks);
example!(render_traces);

#[test]
fn solve_default_converges() {
    let s = solve_default::run_example(32, 0.1).unwrap();
    assert_eq!(s.status, ppgd::ch::SolveStatus::Converged);
}

#[test]
fn mobility_sweep_costs_grow() {
    let dir = tempfile::tempdir().unwrap();
    let r = mobility_sweep::run_example(32, dir.path()).unwrap();
    assert!(r.failures.is_empty());
    assert!(r.rows.windows(2).all(|w| w[0].fft_count <= w[1].fft_count));
}

#[test]
fn inner_iterations_grow_with_mobility_ratio() {
    let counts = inner_solver::run_example(32).unwrap();
    assert!(counts.windows(2).all(|w| w[0].1 <= w[1].1), "{counts:?}");
}

#[test]
fn spectral_norms_match_closed_forms() {
    assert!(spectral_norms::run_example(16).unwrap() < 1e-10);
}

#[test]
fn custom_objective_converges() {
    let (iters, g) = custom_objective::run_example(10).unwrap();
    assert!(iters < 500 && g < 1e-10);
}

#[test]
fn dense_ppgd_stays_in_the_invariant_ball() {
    for (name, d) in dense_ppgd::run_example(1, 500).unwrap() {
        assert!(d.iter().all(|x| *x <= d[0] * (1.0 + 1e-10)), "{name}");
    }
}

#[test]
fn theory_checks_pass() {
    assert!(theory_checks::run_example(3)
        .unwrap()
        .iter()
        .all(|r| r.passed()));
}

#[test]
fn render_traces_writes_plots() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(render_traces::run_example(dir.path()).unwrap().len(), 4);
}
