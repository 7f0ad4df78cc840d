mod common;

use burgers_rom::deim::*;
use burgers_rom::linalg::gram_schmidt;
use burgers_rom::pde::nonlinear_term;
use burgers_rom::pod::{compute_pod, PodBasis};
use burgers_rom::Error;
use ndarray::{array, Array1, Array2, Axis};
use proptest::prelude::*;

fn orthonormal(rows: usize, cols: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Array2<f64> {
    let mut q = common::random_matrix(rows, cols, rng);
    gram_schmidt(&mut q).unwrap();
    q
}

fn basis_from(modes: Array2<f64>) -> PodBasis {
    let (nf, r) = modes.dim();
    PodBasis {
        modes,
        singular_values: Array1::ones(r),
        mean_field: Array1::zeros(nf),
        n_retained: r,
    }
}

/// `φ (Pᵀφ)⁻¹ Pᵀ` as an explicit `N_f × N_f` matrix.
fn dense_projector(phi: &Array2<f64>, indices: &[usize]) -> Array2<f64> {
    let nf = phi.nrows();
    let sampled = phi.select(Axis(0), indices);
    let inv = common::dense_inverse(&sampled);
    let mut pt = Array2::zeros((indices.len(), nf));
    for (row, &p) in indices.iter().enumerate() {
        pt[[row, p]] = 1.0;
    }
    common::matmul(&common::matmul(phi, &inv), &pt)
}

fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn greedy_trace_on_unit_vectors() {
    let phi = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]];
    assert_eq!(select_points(phi.view()).unwrap(), vec![0, 1]);
}

#[test]
fn dependent_columns_are_degenerate() {
    let phi = array![[1.0, 2.0], [0.5, 1.0], [0.25, 0.5]];
    assert!(matches!(select_points(phi.view()), Err(Error::DegenerateBasis { step: 2 })));
}

#[test]
fn reduced_projector_matches_dense_composition() {
    let mut rng = common::rng(21);
    let psi = orthonormal(40, 5, &mut rng);
    let phi = orthonormal(40, 8, &mut rng);
    let basis = basis_from(psi.clone());
    let op = DeimOperator::from_modes(&basis, phi.clone()).unwrap();
    assert_eq!(op.reduced_projector.dim(), (5, 8));
    let proj = dense_projector(&phi, &op.indices);
    let f = common::random_vector(40, &mut rng);
    let fast = op.project_sampled(f.view()).unwrap();
    let dense = psi.t().dot(&proj.dot(&f));
    assert!(inf_norm(&(&fast - &dense)) < 1e-10 * inf_norm(&dense).max(1.0));
    assert!(op.condition_number >= 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oblique_projector_properties(seed in any::<u64>(), nf in 8usize..=64, nm_frac in 0.1f64..0.6) {
        let mut rng = common::rng(seed);
        let nm = ((nf as f64 * nm_frac) as usize).max(1);
        let psi = orthonormal(nf, nm.min(4), &mut rng);
        let phi = orthonormal(nf, nm, &mut rng);
        let op = DeimOperator::from_modes(&basis_from(psi), phi.clone()).unwrap();
        let proj = dense_projector(&phi, &op.indices);
        let f = common::random_vector(nf, &mut rng);
        let pf = proj.dot(&f);
        let scale = inf_norm(&f).max(inf_norm(&pf));
        // interpolation
        for &p in &op.indices {
            prop_assert!((pf[p] - f[p]).abs() <= 1e-10 * scale);
        }
        // idempotence
        let ppf = proj.dot(&pf);
        prop_assert!(inf_norm(&(&ppf - &pf)) <= 1e-10 * scale);
        // exactness on span(φ)
        let c = common::random_vector(nm, &mut rng);
        let g = phi.dot(&c);
        let pg = proj.dot(&g);
        prop_assert!(inf_norm(&(&pg - &g)) <= 1e-10 * inf_norm(&g));
    }

    #[test]
    fn indices_are_distinct_and_in_range(seed in any::<u64>(), nf in 4usize..=64) {
        let mut rng = common::rng(seed);
        let nm = nf / 2;
        let phi = orthonormal(nf, nm, &mut rng);
        let idx = select_points(phi.view()).unwrap();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), nm);
        prop_assert!(idx.iter().all(|&p| p < nf));
    }
}

struct Setup {
    b: common::Burgers,
    basis: PodBasis,
    op: DeimOperator,
}

fn shipped_setup() -> Setup {
    let b = common::burgers();
    let basis = compute_pod(b.snapshots.states.view(), 12, false).unwrap();
    let op = build_deim(&basis, b.snapshots.nonlinear_terms.view(), 24).unwrap();
    Setup { b, basis, op }
}

#[test]
fn burgers_operator_shapes_and_dense_oracle() {
    let Setup { b, basis, op } = shipped_setup();
    assert_eq!(op.reduced_projector.dim(), (12, 24));
    assert_eq!(op.indices.len(), 24);
    assert!(op.warnings().is_empty(), "{:?}", op.warnings());

    let proj = dense_projector(&op.nonlinear_modes, &op.indices);
    let mut rng = common::rng(5);
    for _ in 0..5 {
        // a random state near the snapshot manifold
        let k = rand::Rng::random_range(&mut rng, 0..300);
        let a = basis.project(b.snapshots.states.column(k)).unwrap() + common::random_vector(12, &mut rng) * 0.01;
        let fast = deim_nonlinear(&op, &basis, a.view(), &b.grid).unwrap();
        let u = basis.reconstruct(a.view()).unwrap();
        let n = nonlinear_term(u.view(), &b.grid).unwrap();
        let dense = basis.modes.t().dot(&proj.dot(&n));
        assert!(inf_norm(&(&fast - &dense)) <= 1e-10 * inf_norm(&dense).max(1e-3), "{fast} vs {dense}");
    }

    let series = deim_coefficient_series(&op, &basis, &b.snapshots).unwrap();
    assert_eq!(series.dim(), (12, 300));
}

#[test]
fn more_points_interpolate_better() {
    let Setup { b, basis, op } = shipped_setup();
    let coarse = build_deim(&basis, b.snapshots.nonlinear_terms.view(), 12).unwrap();
    let exact = basis.modes.t().dot(&b.snapshots.nonlinear_terms);
    let mean_err = |op: &DeimOperator| {
        let approx = deim_coefficient_series(op, &basis, &b.snapshots).unwrap();
        let diff = &approx - &exact;
        diff.columns().into_iter().map(|c| c.dot(&c).sqrt()).sum::<f64>() / 300.0
    };
    let (fine_err, coarse_err) = (mean_err(&op), mean_err(&coarse));
    assert!(fine_err <= coarse_err, "{fine_err} > {coarse_err}");
}

#[test]
fn full_rank_bases_make_interpolation_exact() {
    let b = common::burgers();
    let rank_of = |x: ndarray::ArrayView2<f64>| match compute_pod(x, 300, false) {
        Ok(p) => p.n_retained,
        Err(Error::RankDeficient { achievable, .. }) => achievable,
        Err(e) => panic!("{e}"),
    };
    let r_state = rank_of(b.snapshots.states.view());
    let r_nl = rank_of(b.snapshots.nonlinear_terms.view());
    let basis = compute_pod(b.snapshots.states.view(), r_state, false).unwrap();
    let op = build_deim(&basis, b.snapshots.nonlinear_terms.view(), r_nl).unwrap();

    let series = deim_coefficient_series(&op, &basis, &b.snapshots).unwrap();
    let exact = basis.modes.t().dot(&b.snapshots.nonlinear_terms);
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..300 {
        let d = (&series.column(k) - &exact.column(k)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(d < 1e-8 * scale.max(1.0), "column {k}: {d}");
    }
    for k in [0, 100, 200, 299] {
        let a = basis.project(b.snapshots.states.column(k)).unwrap();
        let online = deim_nonlinear(&op, &basis, a.view(), &b.grid).unwrap();
        let d1 = inf_norm(&(&online - &series.column(k)));
        let d2 = inf_norm(&(&online - &exact.column(k)));
        assert!(d1 < 1e-8 * scale.max(1.0), "series consistency at {k}: {d1}");
        assert!(d2 < 1e-6, "snapshot exactness at {k}: {d2}");
    }
}

#[test]
fn stored_operator_round_trips() {
    let Setup { op, .. } = shipped_setup();
    let rebuilt = DeimOperator::from_parts(
        op.nonlinear_modes.clone(),
        op.indices.clone(),
        op.reduced_projector.clone(),
        op.condition_number,
        op.stencil_nodes.clone(),
        op.stencil_modes.clone(),
        op.stencil_mean.clone(),
    )
    .unwrap();
    assert_eq!(rebuilt, op);
    let mut bad_nodes = op.stencil_nodes.clone();
    bad_nodes.pop();
    assert!(DeimOperator::from_parts(
        op.nonlinear_modes.clone(),
        op.indices.clone(),
        op.reduced_projector.clone(),
        op.condition_number,
        bad_nodes,
        op.stencil_modes.clone(),
        op.stencil_mean.clone(),
    )
    .is_err());
}
