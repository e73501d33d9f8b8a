//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;
use rand::Rng;
use std::f64::consts::PI;
use topo_index::operator::HermitianOperator;

/// Lattice Chern number of the lower band of the two-band Bloch
/// Hamiltonian `d(k)·σ` with `d = (2A sin kx, 2A sin ky, M − 4B + 2B(cos kx + cos ky))`,
/// from plaquette Berry fluxes on an `n × n` Brillouin-zone mesh.
pub fn plaquette_chern(a: f64, b: f64, m: f64, n: usize) -> f64 {
    let lower_band = |kx: f64, ky: f64| {
        let d = [2.0 * a * kx.sin(), 2.0 * a * ky.sin(), m - 4.0 * b + 2.0 * b * (kx.cos() + ky.cos())];
        let h = Mat::<C64>::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(d[2], 0.0),
            (1, 1) => C64::new(-d[2], 0.0),
            (0, 1) => C64::new(d[0], -d[1]),
            _ => C64::new(d[0], d[1]),
        });
        let e = h.self_adjoint_eigen(Side::Lower).unwrap();
        [e.U()[(0, 0)], e.U()[(1, 0)]]
    };
    let step = 2.0 * PI / n as f64;
    let states: Vec<Vec<[C64; 2]>> = (0..n)
        .map(|i| (0..n).map(|j| lower_band(step * i as f64, step * j as f64)).collect())
        .collect();
    let link = |x: [C64; 2], y: [C64; 2]| x[0].conj() * y[0] + x[1].conj() * y[1];
    let mut flux = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (i1, j1) = ((i + 1) % n, (j + 1) % n);
            let (s0, s1, s2, s3) = (states[i][j], states[i1][j], states[i1][j1], states[i][j1]);
            flux += (link(s0, s1) * link(s1, s2) * link(s2, s3) * link(s3, s0)).arg();
        }
    }
    flux / (2.0 * PI)
}

fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

fn frobenius(a: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// `Tr log(x)` by inverse scaling and squaring: Denman–Beavers square roots
/// until `x^(1/2^k)` is close to the identity, then the Mercator series.
/// Requires no eigenvalue on the closed negative real axis.
pub fn trace_log(x: MatRef<'_, C64>) -> C64 {
    let n = x.nrows();
    let id = identity(n);
    let mut y = x.to_owned();
    let mut k = 0;
    while frobenius((&y - &id).as_ref()) > 0.1 {
        let mut z = id.clone();
        for _ in 0..100 {
            let y_inv = y.partial_piv_lu().inverse();
            let z_inv = z.partial_piv_lu().inverse();
            let y_next = faer::Scale(C64::new(0.5, 0.0)) * (&y + &z_inv);
            let z_next = faer::Scale(C64::new(0.5, 0.0)) * (&z + &y_inv);
            let change = frobenius((&y_next - &y).as_ref());
            y = y_next;
            z = z_next;
            if change < 1e-15 * frobenius(y.as_ref()) {
                break;
            }
        }
        k += 1;
        assert!(k < 60, "square-root ladder did not approach the identity");
    }
    let e = &y - &id;
    let mut power = e.clone();
    let mut trace = C64::new(0.0, 0.0);
    for j in 1..=60 {
        let t: C64 = (0..n).map(|i| power[(i, i)]).sum();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        trace += t * (sign / j as f64);
        power = &power * &e;
    }
    trace * 2f64.powi(k)
}

/// Dense Hermitian matrix with i.i.d. complex Gaussian-ish entries.
pub fn random_hermitian_dense<R: Rng>(n: usize, rng: &mut R) -> Mat<C64> {
    let a = Mat::<C64>::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Sparse random Hermitian operator with about `per_row` entries per row.
pub fn random_sparse_hermitian<R: Rng>(n: usize, per_row: usize, rng: &mut R) -> HermitianOperator {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, C64::new(rng.random_range(-2.0..2.0), 0.0)));
        for _ in 0..per_row {
            let j = rng.random_range(0..n);
            if j == i {
                continue;
            }
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            t.push((i, j, z));
            t.push((j, i, z.conj()));
        }
    }
    HermitianOperator::from_triplets(n, t).unwrap()
}

/// Eigenvalues of a dense Hermitian matrix, ascending.
pub fn dense_eigenvalues(m: MatRef<'_, C64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.self_adjoint_eigenvalues(Side::Lower).unwrap();
    v.sort_by(f64::total_cmp);
    v
}

/// `#positive − #negative` eigenvalues, with the smallest `|λ|`.
pub fn eigen_signature(m: MatRef<'_, C64>) -> (i64, f64) {
    let ev = dense_eigenvalues(m);
    let pos = ev.iter().filter(|v| **v > 0.0).count() as i64;
    let min_abs = ev.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    (2 * pos - ev.len() as i64, min_abs)
}
