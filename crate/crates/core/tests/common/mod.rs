//! Test-only constants and random-matrix helpers.
#![allow(dead_code)]

use mphd_core::{CMatrix, Complex64, RMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Detection matrix for four flip modes on four equal pixels.
pub fn u_t_flip4() -> CMatrix {
    let rows = [[1., 1., -1., 1.], [1., 1., 1., -1.], [1., -1., 1., 1.], [1., -1., -1., -1.]];
    CMatrix::from_fn(4, 4, |i, j| c(0.5 * rows[i][j], 0.0))
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries))
}

pub fn u_lin4() -> CMatrix {
    let (a, b) = (1.0 / 2f64.sqrt(), 1.0 / 10f64.sqrt());
    CMatrix::from_row_slice(
        4,
        4,
        &[
            c(a, 0.), c(b, 0.), c(0., 2. * b), c(0., 0.),
            c(0., a), c(0., -b), c(2. * b, 0.), c(0., 0.),
            c(0., 0.), c(-2. * b, 0.), c(0., b), c(0., a),
            c(0., 0.), c(0., -2. * b), c(-b, 0.), c(a, 0.),
        ],
    )
}

pub fn u_lin3_asym() -> CMatrix {
    let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
    CMatrix::from_row_slice(
        3,
        3,
        &[
            c(0., 0.), c(-(2f64 / 3.).sqrt(), 0.), c(0., -1. / s3),
            c(0., -1. / s2), c(0., -1. / s6), c(-1. / s3, 0.),
            c(-1. / s2, 0.), c(1. / s6, 0.), c(0., -1. / s3),
        ],
    )
}

pub fn u_tf() -> CMatrix {
    let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
    CMatrix::from_row_slice(
        4,
        4,
        &[
            c(0., 1. / s2), c(0., 0.), c(1. / s3, 0.), c(0., 1. / s6),
            c(-1. / s2, 0.), c(0., 0.), c(0., -1. / s3), c(1. / s6, 0.),
            c(0., 0.), c(0., -1. / s2), c(0., -1. / s6), c(-1. / s3, 0.),
            c(0., 0.), c(-1. / s2, 0.), c(1. / s6, 0.), c(0., -1. / s3),
        ],
    )
}

/// `[[X, −Y], [Y, X]]` built directly from the entries.
pub fn symplectic(u: &CMatrix) -> RMatrix {
    let n = u.nrows();
    RMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = u[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn p_squeezed_cov(n: usize, r: f64) -> RMatrix {
    RMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if i != j {
            0.0
        } else if i < n {
            (2.0 * r).exp()
        } else {
            (-2.0 * r).exp()
        }
    })
}

/// Haar-like random orthogonal matrix from QR with sign fix.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> RMatrix {
    let m = RMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = d / d.norm();
        q.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }
    q
}

pub fn random_phases<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

pub fn phase_diag(phases: &[f64]) -> CMatrix {
    let e: Vec<_> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    diag(&e)
}

pub fn to_c(m: &RMatrix) -> CMatrix {
    m.map(|x| c(x, 0.0))
}
