mod common;

use common::{plaquette_chern, trace_log};
use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topo_index::bott::{
    bott_index_large, bott_index_small, group_commutator, log_eig_trace, BottOptions, CompressedPair,
    DEFAULT_BRANCH_TOLERANCE,
};
use topo_index::model::{periodic_observables, Boundary, ModelSpec, Sample};
use topo_index::spectral::{diagonalize, fermi_basis, projector};

fn clean_pair(spec: &ModelSpec) -> CompressedPair {
    let s = Sample::generate(spec, 0).unwrap();
    let eig = diagonalize(&s.hamiltonian).unwrap();
    let obs = periodic_observables(&s.lattice).unwrap();
    CompressedPair::from_fermi(&fermi_basis(&eig, 0.0), &obs).unwrap()
}

#[test]
fn plaquette_oracle_is_integer_and_mesh_independent() {
    for n in [16, 24, 40] {
        let c = plaquette_chern(1.0, -1.0, -2.0, n);
        assert!((c - c.round()).abs() < 1e-9, "n={n}: {c}");
        assert_eq!(c.round(), 1.0);
    }
    assert_eq!(plaquette_chern(1.0, -1.0, 2.0, 24).round(), 0.0);
}

#[test]
fn bott_matches_plaquette_chern_on_clean_torus() {
    for (m, side) in [(-2.0, 12), (-2.0, 16), (2.0, 12), (-6.0, 12)] {
        let spec = ModelSpec {
            m,
            ..ModelSpec::chern(side, Boundary::Periodic)
        };
        let chern = plaquette_chern(spec.a, spec.b, spec.m, 32).round() as i64;
        let pair = clean_pair(&spec);
        let bott = bott_index_small(pair.u1.as_ref(), pair.v1.as_ref(), BottOptions::default()).unwrap();
        assert_eq!(bott.index, chern, "M={m} L={side}: {bott:?}");
        assert!(bott.integer_error < 1e-8);
    }
}

#[test]
fn eigenvalue_log_trace_matches_series_logarithm() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [3, 8, 20] {
        let s = Mat::<C64>::from_fn(n, n, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            C64::new(d + 0.2 * rng.random_range(-1.0..1.0), 0.2 * rng.random_range(-1.0..1.0))
        });
        let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-2.5..2.5)).collect();
        let d = Mat::<C64>::from_fn(n, n, |i, j| if i == j { C64::from_polar(1.0, theta[i]) } else { C64::default() });
        let s_inv = {
            use faer::linalg::solvers::DenseSolveCore;
            s.partial_piv_lu().inverse()
        };
        let x = &s * &d * &s_inv;
        let via_eigen = log_eig_trace(x.as_ref(), DEFAULT_BRANCH_TOLERANCE).unwrap();
        let via_series = trace_log(x.as_ref()).im / (2.0 * std::f64::consts::PI);
        let exact: f64 = theta.iter().sum::<f64>() / (2.0 * std::f64::consts::PI);
        assert!((via_eigen - via_series).abs() < 1e-9, "n={n}: {via_eigen} vs {via_series}");
        assert!((via_eigen - exact).abs() < 1e-9);
    }
}

#[test]
fn bott_commutator_log_matches_series_logarithm() {
    let pair = clean_pair(&ModelSpec::chern(8, Boundary::Periodic));
    let c = group_commutator(pair.u1.as_ref(), pair.v1.as_ref());
    let via_eigen = log_eig_trace(c.as_ref(), DEFAULT_BRANCH_TOLERANCE).unwrap();
    let via_series = trace_log(c.as_ref()).im / (2.0 * std::f64::consts::PI);
    assert!((via_eigen - via_series).abs() < 1e-8, "{via_eigen} vs {via_series}");
}

#[test]
fn small_and_large_formulas_agree_on_disordered_torus() {
    let spec = ModelSpec::chern(8, Boundary::Periodic).with_disorder(6.0, 5);
    for idx in 0..3 {
        let s = Sample::generate(&spec, idx).unwrap();
        let eig = diagonalize(&s.hamiltonian).unwrap();
        let obs = periodic_observables(&s.lattice).unwrap();
        let fermi = fermi_basis(&eig, -0.5);
        let pair = CompressedPair::from_fermi(&fermi, &obs).unwrap();
        let small = bott_index_small(pair.u1.as_ref(), pair.v1.as_ref(), BottOptions::default()).unwrap();
        let n = obs.u.len();
        let diag = |d: &[C64]| Mat::<C64>::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::default() });
        let p = projector(&fermi).to_dense();
        let large = bott_index_large(diag(&obs.u).as_ref(), diag(&obs.v).as_ref(), p.as_ref(), BottOptions::default())
            .unwrap();
        assert_eq!(small.index, large.index);
        assert!((small.raw - large.raw).abs() < 1e-8, "{} vs {}", small.raw, large.raw);
    }
}
