use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topo_index::bott::{
    bott_index_small, trig_method_index, BottOptions, CompressedPair, TrigOptions, TrigPolynomialTriple,
};
use topo_index::ldlt::signature;
use topo_index::localizer::{assemble_general, localizer_gap, localizer_index, LocalizerProbe};
use topo_index::model::{periodic_observables, position_operators, Boundary, ModelSpec, PositionScaling, Sample};
use topo_index::operator::HermitianOperator;
use topo_index::spectral::{diagonalize, fermi_basis};

fn pair(side: usize, width: f64, seed: u64, ef: f64) -> CompressedPair {
    let spec = ModelSpec::chern(side, Boundary::Periodic).with_disorder(width, seed);
    let s = Sample::generate(&spec, 0).unwrap();
    let eig = diagonalize(&s.hamiltonian).unwrap();
    let obs = periodic_observables(&s.lattice).unwrap();
    CompressedPair::from_fermi(&fermi_basis(&eig, ef), &obs).unwrap()
}

/// Unitary `Q` from a Gram–Schmidt pass over a random matrix.
fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> Mat<C64> {
    let mut cols: Vec<Vec<C64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        for _ in 0..2 {
            for c in &cols {
                let dot: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Mat::from_fn(n, n, |i, j| cols[j][i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bott_is_antisymmetric_under_swap(seed in 0u64..1000, ef in -1.5f64..0.5) {
        let p = pair(6, 4.0, seed, ef);
        prop_assume!(p.size() > 0);
        let opts = BottOptions::default();
        let uv = bott_index_small(p.u1.as_ref(), p.v1.as_ref(), opts);
        let vu = bott_index_small(p.v1.as_ref(), p.u1.as_ref(), opts);
        prop_assume!(uv.is_ok() && vu.is_ok());
        let (uv, vu) = (uv.unwrap(), vu.unwrap());
        prop_assert!((uv.raw + vu.raw).abs() < 1e-9);
        prop_assert_eq!(uv.index, -vu.index);
    }

    #[test]
    fn bott_is_invariant_under_unitary_change_of_basis(seed in 0u64..1000) {
        let p = pair(6, 4.0, seed, -0.5);
        prop_assume!(p.size() > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_unitary(p.size(), &mut rng);
        let u = &w * &p.u1 * w.adjoint();
        let v = &w * &p.v1 * w.adjoint();
        let opts = BottOptions::default();
        let before = bott_index_small(p.u1.as_ref(), p.v1.as_ref(), opts);
        prop_assume!(before.is_ok());
        let before = before.unwrap();
        let after = bott_index_small(u.as_ref(), v.as_ref(), opts).unwrap();
        prop_assert!((before.raw - after.raw).abs() < 1e-9);
    }

    #[test]
    fn gap_is_one_lipschitz_in_the_probe(
        seed in 0u64..1000,
        a in prop::array::uniform3(-3.0f64..3.0),
        b in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let spec = ModelSpec::chern(5, Boundary::Open).with_disorder(8.0, seed);
        let s = Sample::generate(&spec, 0).unwrap();
        let (x, y) = position_operators(&s.lattice, PositionScaling::Raw).unwrap();
        let ga = localizer_gap(&x, &y, &s.hamiltonian, &LocalizerProbe::new(a, 0.5).unwrap()).unwrap();
        let gb = localizer_gap(&x, &y, &s.hamiltonian, &LocalizerProbe::new(b, 0.5).unwrap()).unwrap();
        let dist = ((a[0]-b[0]).powi(2) + (a[1]-b[1]).powi(2) + (a[2]-b[2]).powi(2)).sqrt();
        prop_assert!((ga - gb).abs() <= dist + 1e-10);
    }
}

#[test]
fn trig_count_is_minus_twice_bott() {
    for (side, width, ef) in [(8, 0.0, 0.0), (8, 2.0, 0.0), (10, 3.0, -1.0)] {
        let p = pair(side, width, 1, ef);
        let bott = bott_index_small(p.u1.as_ref(), p.v1.as_ref(), BottOptions::default()).unwrap();
        assert!(bott.integer_error < 1e-6, "{bott:?}");
        let count = trig_method_index(
            p.u1.as_ref(),
            p.v1.as_ref(),
            &TrigPolynomialTriple::default_projector(),
            TrigOptions::default(),
        )
        .unwrap();
        assert_eq!(count, -2 * bott.index, "L={side} W={width} E={ef} {bott:?} size {}", p.size());
    }
}

#[test]
fn folded_triple_always_counts_zero() {
    let p = pair(8, 0.0, 0, 0.0);
    let count = trig_method_index(p.u1.as_ref(), p.v1.as_ref(), &TrigPolynomialTriple::folded(), TrigOptions::default())
        .unwrap();
    assert_eq!(count, 0);
}

#[test]
fn pauli_triple_localizer() {
    let sx = HermitianOperator::from_triplets(2, [(0, 1, C64::new(1.0, 0.0)), (1, 0, C64::new(1.0, 0.0))]).unwrap();
    let sy = HermitianOperator::from_triplets(2, [(0, 1, C64::new(0.0, -1.0)), (1, 0, C64::new(0.0, 1.0))]).unwrap();
    let sz = HermitianOperator::diagonal(&[1.0, -1.0]);
    let probe = LocalizerProbe::origin(1.0).unwrap();
    let gap = localizer_gap(&sx, &sy, &sz, &probe).unwrap();
    assert!((gap - 1.0).abs() < 1e-12);
    let l = assemble_general(&sx, &sy, &sz, &probe).unwrap();
    assert_eq!(signature(&l).unwrap().signature / 2, 1);
    // The index entry point wants commuting positions.
    assert!(localizer_index(&sx, &sy, &sz, &probe).is_err());
}

#[test]
fn single_site_localizer() {
    let zero = HermitianOperator::zeros(1);
    let h = HermitianOperator::diagonal(&[2.0]);
    let r = localizer_index(&zero, &zero, &h, &LocalizerProbe::origin(1.0).unwrap()).unwrap();
    assert_eq!(r.index, 0);
    assert!((r.gap - 2.0).abs() < 1e-12);
}
