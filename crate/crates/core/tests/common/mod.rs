#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random orthogonal `n × n` matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n).qr().q()
}

/// `Q diag(eigs) Qᵀ` for a random orthogonal `Q`.
pub fn with_spectrum(rng: &mut ChaCha8Rng, eigs: &[f64]) -> DMatrix<f64> {
    let n = eigs.len();
    let q = random_orthogonal(rng, n);
    let m = &q * DMatrix::from_diagonal(&DVector::from_column_slice(eigs)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Symmetric positive definite matrix with eigenvalues drawn from `[lo, hi]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let eigs: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    with_spectrum(rng, &eigs)
}

/// Strictly increasing shifts drawn log-uniformly from `[10^lo, 10^hi]`.
pub fn random_shifts(rng: &mut ChaCha8Rng, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let mut s: Vec<f64> = (0..count).map(|_| 10f64.powf(rng.random_range(lo..hi))).collect();
        s.sort_by(f64::total_cmp);
        if s.windows(2).all(|w| w[1] > w[0] * 1.01) {
            return s;
        }
    }
}

pub fn apply(m: &DMatrix<f64>) -> impl FnMut(&[f64], &mut [f64]) + '_ {
    move |v, out| {
        let r = m * DVector::from_column_slice(v);
        out.copy_from_slice(r.as_slice());
    }
}

pub fn apply_transpose(m: &DMatrix<f64>) -> impl FnMut(&[f64], &mut [f64]) + '_ {
    move |v, out| {
        let r = m.tr_mul(&DVector::from_column_slice(v));
        out.copy_from_slice(r.as_slice());
    }
}

/// Dense solve of `(M + λI) x = b`.
pub fn shifted_solve(m: &DMatrix<f64>, lambda: f64, b: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let a = m + DMatrix::identity(n, n) * lambda;
    a.lu().solve(&DVector::from_column_slice(b)).expect("nonsingular").as_slice().to_vec()
}

/// Dense solve of `(AᵀA + λI) x = Aᵀb`.
pub fn normal_solve(a: &DMatrix<f64>, lambda: f64, b: &[f64]) -> Vec<f64> {
    let n = a.ncols();
    let g = a.tr_mul(a) + DMatrix::identity(n, n) * lambda;
    let rhs = a.tr_mul(&DVector::from_column_slice(b));
    g.cholesky().expect("positive definite").solve(&rhs).as_slice().to_vec()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff: Vec<f64> = got.iter().zip(want).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(want).max(f64::MIN_POSITIVE)
}

/// `‖b − (M + λI)x‖`, computed densely.
pub fn shifted_residual(m: &DMatrix<f64>, lambda: f64, x: &[f64], b: &[f64]) -> f64 {
    let mx = m * DVector::from_column_slice(x);
    let r: Vec<f64> = (0..b.len()).map(|k| b[k] - mx[k] - lambda * x[k]).collect();
    norm(&r)
}
