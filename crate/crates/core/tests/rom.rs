mod common;

use burgers_rom::analysis::{constant_baseline_error, field_error, field_error_of, l2_modal_error, relative_frobenius_error, true_coefficients};
use burgers_rom::deim::build_deim;
use burgers_rom::pde::{linear_operator, BurgersParams, Grid};
use burgers_rom::pod::{compute_pod, PodBasis};
use burgers_rom::rom::*;
use burgers_rom::surrogate::{fit_surrogate, SmoothingConfig, TrainConfig};
use burgers_rom::Error;
use ndarray::{array, Array1, Array2, ArrayView1};

struct Zero(usize);

impl NonlinearClosure for Zero {
    fn evaluate(&mut self, _step: usize, _a: ArrayView1<f64>) -> burgers_rom::Result<Array1<f64>> {
        Ok(Array1::zeros(self.0))
    }
    fn calls(&self) -> NonlinearCalls {
        NonlinearCalls::default()
    }
    fn warm_start_steps(&self) -> usize {
        0
    }
}

fn scalar_decay(dt: f64, n_steps: usize) -> ReducedSystem {
    ReducedSystem {
        linear_reduced: array![[1.0]],
        mean_forcing: array![0.0],
        initial_coeffs: array![1.0],
        dt,
        n_steps,
    }
}

#[test]
fn euler_step_and_first_order_convergence() {
    let one = integrate_with(&scalar_decay(0.1, 1), &mut Zero(1), Method::Gp).unwrap();
    assert_eq!(one.coeffs[[0, 1]], 0.9);

    let err = |n: usize| {
        let t = integrate_with(&scalar_decay(1.0 / n as f64, n), &mut Zero(1), Method::Gp).unwrap();
        (t.coeffs[[0, n]] - (-1.0f64).exp()).abs()
    };
    let ratio = err(10) / err(20);
    assert!((1.8..=2.2).contains(&ratio), "{ratio}");
}

/// Random orthonormal basis with a nonzero mean on a small grid.
fn small_problem(seed: u64) -> (Grid, BurgersParams, PodBasis) {
    let grid = Grid::new(64, 1.0).unwrap();
    let params = BurgersParams::new(1000.0, 2.0, 21).unwrap();
    let mut rng = common::rng(seed);
    let x = common::random_matrix(64, 10, &mut rng);
    let basis = compute_pod(x.view(), 6, true).unwrap();
    (grid, params, basis)
}

#[test]
fn reduced_operator_matches_triple_product() {
    let (grid, params, basis) = small_problem(1);
    let sys = build_reduced_system(&basis, &grid, &params, 0.1).unwrap();
    let l = linear_operator(&grid, params.viscosity).unwrap().to_dense();
    let psi_t = basis.modes.t().to_owned();
    let oracle = common::matmul(&psi_t, &common::matmul(&l, &basis.modes));
    assert!(common::max_abs_diff(&sys.linear_reduced, &oracle) < 1e-12);
    let mean = basis.mean_field.clone().insert_axis(ndarray::Axis(1));
    let b_oracle = common::matmul(&psi_t, &common::matmul(&l, &mean));
    for (a, b) in sys.mean_forcing.iter().zip(b_oracle.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(sys.n_steps, 20);
}

#[test]
fn galerkin_rhs_matches_dense_path() {
    let (grid, params, basis) = small_problem(2);
    let sys = build_reduced_system(&basis, &grid, &params, 0.1).unwrap();
    let l = linear_operator(&grid, params.viscosity).unwrap().to_dense();
    let mut rng = common::rng(3);
    for _ in 0..10 {
        let a = common::random_vector(6, &mut rng);
        let fast = rhs_gp(&sys, &basis, &grid, a.view()).unwrap();
        let u: Vec<f64> = (0..64)
            .map(|i| basis.mean_field[i] + (0..6).map(|k| basis.modes[[i, k]] * a[k]).sum::<f64>())
            .collect();
        let n = common::nonlinear_loop(&u, grid.spacing());
        let dense: Vec<f64> = (0..6)
            .map(|k| {
                (0..64)
                    .map(|i| {
                        let lu: f64 = (0..64).map(|j| l[[i, j]] * u[j]).sum();
                        -basis.modes[[i, k]] * (lu + n[i])
                    })
                    .sum()
            })
            .collect();
        for (x, y) in fast.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-11 * y.abs().max(1.0), "{x} vs {y}");
        }
    }
}

/// `exp(M)` by scaling and squaring of a truncated Taylor series.
fn expm(m: &Array2<f64>) -> Array2<f64> {
    let norm = m.iter().fold(0.0f64, |a, v| a.max(v.abs())) * m.nrows() as f64;
    let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
    let scaled = m / 2f64.powi(squarings);
    let n = m.nrows();
    let mut term = Array2::<f64>::eye(n);
    let mut sum = Array2::<f64>::eye(n);
    for k in 1..30 {
        term = common::matmul(&term, &scaled) / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = common::matmul(&sum, &sum);
    }
    sum
}

#[test]
fn linear_part_is_second_order_accurate_per_step() {
    let b = common::burgers();
    let basis = compute_pod(b.snapshots.states.view(), 12, false).unwrap();
    let base = build_reduced_system(&basis, &b.grid, &b.params, 2.0 / 299.0).unwrap();
    assert_eq!(base.linear_reduced.dim(), (12, 12));
    let norm_l = base.linear_reduced.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_a = base.initial_coeffs.dot(&base.initial_coeffs).sqrt();
    let step_error = |dt: f64| {
        let sys = ReducedSystem {
            dt,
            n_steps: 1,
            ..base.clone()
        };
        let t = integrate_with(&sys, &mut Zero(12), Method::Gp).unwrap();
        let exact = expm(&(&sys.linear_reduced * -dt)).dot(&sys.initial_coeffs);
        let d = &t.coeffs.column(1) - &exact;
        d.dot(&d).sqrt()
    };
    for dt in [0.1, 0.05, 0.01] {
        let e = step_error(dt);
        assert!(e <= 0.5 * dt * dt * norm_l * norm_l * norm_a * 1.01, "dt {dt}: {e}");
    }
    let ratio = step_error(0.02) / step_error(0.01);
    assert!((3.6..=4.4).contains(&ratio), "{ratio}");
}

#[test]
fn zero_closures_give_identical_paths() {
    let (grid, params, basis) = small_problem(4);
    let sys = build_reduced_system(&basis, &grid, &params, 0.1).unwrap();
    let gp = integrate_with(&sys, &mut Zero(6), Method::Gp).unwrap();
    let deim = integrate_with(&sys, &mut Zero(6), Method::Deim).unwrap();
    assert_eq!(gp.coeffs, deim.coeffs);
}

#[test]
fn incommensurate_time_step_is_rejected() {
    let (grid, params, basis) = small_problem(5);
    assert!(matches!(
        build_reduced_system(&basis, &grid, &params, 0.3),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn runaway_coefficients_are_reported() {
    let sys = ReducedSystem {
        linear_reduced: array![[-1e4]],
        mean_forcing: array![0.0],
        initial_coeffs: array![1.0],
        dt: 0.1,
        n_steps: 10,
    };
    match integrate_with(&sys, &mut Zero(1), Method::Gp) {
        Err(Error::Diverged { method, step }) => {
            assert_eq!(method, "GP");
            assert!(step >= 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn burgers_gp_deim_and_warm_started_ml() {
    let b = common::burgers();
    let dt = 2.0 / 299.0;
    let basis = compute_pod(b.snapshots.states.view(), 12, false).unwrap();
    let op = build_deim(&basis, b.snapshots.nonlinear_terms.view(), 24).unwrap();
    let sys = build_reduced_system(&basis, &b.grid, &b.params, dt).unwrap();
    let truth = true_coefficients(&b.snapshots, &basis).unwrap();

    // DEIM right-hand side is close to the Galerkin one over the projected
    // snapshot set; single late-time snapshots reach ~6e-2
    let (mut diff_sq, mut gp_sq) = (0.0, 0.0);
    let mut ratios = Vec::new();
    for a in truth.columns() {
        let gp = rhs_gp(&sys, &basis, &b.grid, a).unwrap();
        let de = rhs_deim(&sys, &op, &basis, &b.grid, a).unwrap();
        let d = &gp - &de;
        diff_sq += d.dot(&d);
        gp_sq += gp.dot(&gp);
        ratios.push((d.dot(&d) / gp.dot(&gp)).sqrt());
    }
    assert!((diff_sq / gp_sq).sqrt() <= 1e-2, "{}", (diff_sq / gp_sq).sqrt());
    ratios.sort_by(f64::total_cmp);
    assert!(ratios[150] <= 1e-2);

    let gp = integrate(&sys, Strategy::Galerkin { basis: &basis, grid: &b.grid }).unwrap();
    let deim = integrate(&sys, Strategy::Deim { op: &op, basis: &basis, grid: &b.grid }).unwrap();
    assert_eq!(gp.coeffs.dim(), (12, 300));
    assert!(gp.coeffs.iter().chain(deim.coeffs.iter()).all(|v| v.is_finite()));
    assert_eq!(gp.calls.full_space, 300);
    assert_eq!(deim.calls.deim, 300);
    assert_eq!(deim.calls.full_space, 0);
    assert!(relative_frobenius_error(deim.coeffs.view(), gp.coeffs.view()).unwrap() < 5e-2);

    let baseline = constant_baseline_error(truth.view()).unwrap();
    for t in [&gp, &deim] {
        let e = l2_modal_error(t, truth.view()).unwrap();
        assert!((0.02..=0.13).contains(&e), "{}: {e}", t.method);
        assert!(e < baseline);
        // projection is the best approximation within the subspace
        let projected = field_error_of(truth.view(), &basis, &b.snapshots).unwrap();
        assert!(field_error(t, &basis, &b.snapshots).unwrap() >= projected);
    }

    let series = burgers_rom::deim::deim_coefficient_series(&op, &basis, &b.snapshots).unwrap();
    let quick = TrainConfig {
        epochs: 2,
        hidden_dim: 6,
        ..TrainConfig::default()
    };
    let fitted = fit_surrogate(series.view(), &SmoothingConfig::default(), &quick).unwrap();
    let ml = integrate(
        &sys,
        Strategy::Surrogate {
            surrogate: &fitted.surrogate,
            op: &op,
            basis: &basis,
            grid: &b.grid,
            warm_start: WarmStart::Deim,
        },
    );
    // a barely trained model may or may not stay bounded; only the warm
    // start and the counters are checked here
    if let Ok(ml) = ml {
        for k in 0..10 {
            assert_eq!(ml.nonlinear_history.column(k), deim.nonlinear_history.column(k));
            assert_eq!(ml.coeffs.column(k), deim.coeffs.column(k));
        }
        assert_eq!(ml.calls_after_warm_start.full_space, 0);
        assert_eq!(ml.calls_after_warm_start.deim, 0);
        assert_eq!(ml.calls.deim, 10);
        assert_eq!(ml.calls_after_warm_start.surrogate, 290);
    }
}
