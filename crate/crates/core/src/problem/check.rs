//! Finite-difference derivative checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{LeastSquaresProblem, ProblemError, SmoothProblem};
use crate::vecops::{all_finite, dot, norm, norm_inf};

/// Errors above this relative level set the failure flag.
pub const FAIL_THRESHOLD: f64 = 1e-4;

const DIRECTIONS: usize = 3;
const SEED: u64 = 0x5eed;

/// Discrepancies found by [`check_derivatives`]; all are relative.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub grad_error: f64,
    /// `NaN` when the problem declares an inexact Hessian.
    pub hvp_error: f64,
    pub linearity_error: f64,
    pub symmetry_error: f64,
    pub failed: bool,
}

/// Discrepancies found by [`check_least_squares`]; all are relative.
#[derive(Debug, Clone, Serialize)]
pub struct LeastSquaresReport {
    pub grad_error: f64,
    pub jprod_error: f64,
    pub adjoint_error: f64,
    pub failed: bool,
}

fn fd_step(x: &[f64]) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + norm_inf(x))
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1.0)
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn location(x: &[f64]) -> String {
    let head: Vec<String> = x.iter().take(4).map(|v| format!("{v:.6e}")).collect();
    let tail = if x.len() > 4 { ", …" } else { "" };
    format!("x = [{}{tail}]", head.join(", "))
}

fn finite(what: &'static str, v: &[f64], x: &[f64]) -> Result<(), ProblemError> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(ProblemError::NonFinite { what, location: location(x) })
    }
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..DIRECTIONS)
        .map(|_| {
            let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = norm(&d).max(f64::MIN_POSITIVE);
            d.iter_mut().for_each(|v| *v /= s);
            d
        })
        .collect()
}

fn shifted(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + t * di).collect()
}

/// Compares the gradient and Hessian products of `p` at `x` with central
/// differences, and tests linearity and symmetry of the Hessian product.
pub fn check_derivatives<P: SmoothProblem + ?Sized>(
    p: &P,
    x: &[f64],
) -> Result<DerivativeReport, ProblemError> {
    let n = p.dim();
    let h = fd_step(x);
    let fx = p.objective(x);
    finite("objective", &[fx], x)?;
    let mut g = vec![0.0; n];
    p.gradient(x, &mut g);
    finite("gradient", &g, x)?;

    let mut g_fd = vec![0.0; n];
    let mut xp = x.to_vec();
    for i in 0..n {
        let xi = xp[i];
        xp[i] = xi + h;
        let fp = p.objective(&xp);
        xp[i] = xi - h;
        let fm = p.objective(&xp);
        xp[i] = xi;
        finite("objective", &[fp, fm], x)?;
        g_fd[i] = (fp - fm) / (2.0 * h);
    }
    let grad_error = rel(diff_norm(&g_fd, &g), norm(&g));

    let dirs = directions(n);
    let hv: Vec<Vec<f64>> = dirs
        .iter()
        .map(|d| {
            let mut out = vec![0.0; n];
            p.hess_vec(x, d, &mut out);
            out
        })
        .collect();
    for v in &hv {
        finite("Hessian product", v, x)?;
    }

    let mut hvp_error = f64::NAN;
    if p.exact_hessian() {
        hvp_error = 0.0;
        let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
        for (d, hd) in dirs.iter().zip(&hv) {
            p.gradient(&shifted(x, h, d), &mut gp);
            p.gradient(&shifted(x, -h, d), &mut gm);
            finite("gradient", &gp, x)?;
            finite("gradient", &gm, x)?;
            let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            hvp_error = hvp_error.max(rel(diff_norm(&fd, hd), norm(hd)));
        }
    }

    let (a, b) = (0.7, -1.3);
    let combo: Vec<f64> = dirs[0].iter().zip(&dirs[1]).map(|(u, v)| a * u + b * v).collect();
    let mut h_combo = vec![0.0; n];
    p.hess_vec(x, &combo, &mut h_combo);
    let expect: Vec<f64> = hv[0].iter().zip(&hv[1]).map(|(u, v)| a * u + b * v).collect();
    let scale = a.abs() * norm(&hv[0]) + b.abs() * norm(&hv[1]);
    let linearity_error = diff_norm(&h_combo, &expect) / scale.max(f64::MIN_POSITIVE);

    let mut symmetry_error: f64 = 0.0;
    for i in 0..DIRECTIONS {
        for j in i + 1..DIRECTIONS {
            let lhs = dot(&dirs[i], &hv[j]);
            let rhs = dot(&dirs[j], &hv[i]);
            let scale = norm(&hv[i]) + norm(&hv[j]);
            symmetry_error = symmetry_error.max((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE));
        }
    }

    let worst = [grad_error, hvp_error, linearity_error, symmetry_error]
        .into_iter()
        .filter(|e| !e.is_nan())
        .fold(0.0, f64::max);
    Ok(DerivativeReport {
        grad_error,
        hvp_error,
        linearity_error,
        symmetry_error,
        failed: worst > FAIL_THRESHOLD,
    })
}

/// Checks `JᵀF` against differences of `½‖F‖²`, `J v` against differences
/// of `F`, and the adjoint identity `uᵀ(Jv) = (Jᵀu)ᵀv`.
pub fn check_least_squares<P: LeastSquaresProblem + ?Sized>(
    p: &P,
    x: &[f64],
) -> Result<LeastSquaresReport, ProblemError> {
    let (n, m) = (p.dim(), p.nres());
    let h = fd_step(x);
    let half_sq = |y: &[f64]| -> Result<f64, ProblemError> {
        let mut r = vec![0.0; m];
        p.residual(y, &mut r);
        finite("residual", &r, x)?;
        Ok(0.5 * dot(&r, &r))
    };
    let mut r = vec![0.0; m];
    p.residual(x, &mut r);
    finite("residual", &r, x)?;
    let mut g = vec![0.0; n];
    p.jtprod(x, &r, &mut g);
    finite("Jacobian-transpose product", &g, x)?;

    let mut g_fd = vec![0.0; n];
    let mut xp = x.to_vec();
    for i in 0..n {
        let xi = xp[i];
        xp[i] = xi + h;
        let fp = half_sq(&xp)?;
        xp[i] = xi - h;
        let fm = half_sq(&xp)?;
        xp[i] = xi;
        g_fd[i] = (fp - fm) / (2.0 * h);
    }
    let grad_error = rel(diff_norm(&g_fd, &g), norm(&g));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut jprod_error: f64 = 0.0;
    let mut adjoint_error: f64 = 0.0;
    let (mut rp, mut rm, mut jv, mut jtu) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; n]);
    for _ in 0..DIRECTIONS {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        p.jprod(x, &v, &mut jv);
        p.jtprod(x, &u, &mut jtu);
        finite("Jacobian product", &jv, x)?;
        finite("Jacobian-transpose product", &jtu, x)?;
        p.residual(&shifted(x, h, &v), &mut rp);
        p.residual(&shifted(x, -h, &v), &mut rm);
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        jprod_error = jprod_error.max(rel(diff_norm(&fd, &jv), norm(&jv)));
        let lhs = dot(&u, &jv);
        let rhs = dot(&jtu, &v);
        let scale = norm(&u) * norm(&jv) + norm(&jtu) * norm(&v);
        adjoint_error = adjoint_error.max((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE));
    }

    let failed = grad_error.max(jprod_error).max(adjoint_error) > FAIL_THRESHOLD;
    Ok(LeastSquaresReport { grad_error, jprod_error, adjoint_error, failed })
}

/// The start point followed by `count` seeded perturbations of it.
pub fn check_points(x0: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![x0.to_vec()];
    for _ in 0..count {
        pts.push(
            x0.iter()
                .map(|xi| xi + 0.5 * (1.0 + xi.abs()) * rng.random_range(-1.0..1.0))
                .collect(),
        );
    }
    pts
}
