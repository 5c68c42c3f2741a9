//! Multishift Lanczos-CG kernels.
//!
//! Both solvers share the Krylov basis across every shift of a [`ShiftGrid`]
//! and differ only in how the basis is generated: [`multishift_cg`] applies a
//! symmetric operator `M`, [`multishift_cgls`] applies `A` and `Aᵀ` to solve
//! the regularized normal equations without forming `AᵀA`.
//!
//! Counting convention: the basis is generated one vector ahead, so each
//! operator is applied once at initialization and once per joint iteration.
//! When the Krylov space is exhausted the look-ahead product is skipped.

mod cg;
mod cgls;

use serde::Serialize;
use thiserror::Error;

use crate::shifts::ShiftGrid;
use crate::vecops::axpy;

pub use cg::{multishift_cg, MultishiftCg};
pub use cgls::{multishift_cgls, MultishiftCgls};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftStatus {
    Running,
    Converged,
    /// `M + λI` is not positive definite; the direction is unusable.
    Indefinite,
    /// The iteration limit was reached first.
    Capped,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
    #[error("{what} has length {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("max_iter must be at least 1")]
    ZeroMaxIter,
    #[error("tolerance {0} must be finite and non-negative")]
    InvalidTolerance(f64),
}

/// Residual tolerance for each shift.
#[derive(Debug, Clone, PartialEq)]
pub enum Tolerance {
    Uniform(f64),
    PerShift(Vec<f64>),
}

impl Tolerance {
    fn resolve(&self, m: usize) -> Result<Vec<f64>, KrylovError> {
        let tol = match self {
            Self::Uniform(t) => vec![*t; m],
            Self::PerShift(v) if v.len() == m => v.clone(),
            Self::PerShift(v) => {
                return Err(KrylovError::Dimension { what: "tolerance", expected: m, got: v.len() })
            }
        };
        match tol.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            Some(&t) => Err(KrylovError::InvalidTolerance(t)),
            None => Ok(tol),
        }
    }
}

impl From<f64> for Tolerance {
    fn from(t: f64) -> Self {
        Self::Uniform(t)
    }
}

/// Default iteration limit for an `n`-dimensional solve.
pub fn default_max_iter(n: usize) -> usize {
    (2 * n).max(1)
}

/// Per-iteration observer: joint iteration index, `|σ|` per shift, statuses.
pub type TraceFn<'a> = Box<dyn FnMut(usize, &[f64], &[ShiftStatus]) + 'a>;

/// Result of a multishift solve. Index `i` refers to shift `λ_i` of the grid.
#[derive(Debug, Clone, Serialize)]
pub struct MultishiftSolution {
    pub shifts: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    /// Recurred residual norm `|σ|` of the shifted system.
    pub residual_norms: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub statuses: Vec<ShiftStatus>,
    pub iterations: Vec<usize>,
    /// Products with `M`, or with `A` for the least-squares kernel.
    pub operator_products: usize,
    /// Products with `Aᵀ`; zero for the symmetric kernel.
    pub adjoint_products: usize,
    pub total_iterations: usize,
    /// The Krylov space was exhausted: every shift still running at that
    /// point is exact in it, and the final look-ahead product was skipped.
    pub breakdown: bool,
    /// `‖b − A d‖` per shift when requested from the least-squares kernel.
    pub ls_residual_norms: Option<Vec<f64>>,
}

impl MultishiftSolution {
    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Converged, or capped with the residual already within tolerance.
    pub fn usable(&self, i: usize) -> bool {
        match self.statuses[i] {
            ShiftStatus::Converged => true,
            ShiftStatus::Capped => self.residual_norms[i] <= self.tolerances[i],
            _ => false,
        }
    }

    pub fn max_shift_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    fn trivial(grid: &ShiftGrid, n: usize, tol: Vec<f64>) -> Self {
        let m = grid.len();
        Self {
            shifts: grid.lambdas().to_vec(),
            directions: vec![vec![0.0; n]; m],
            residual_norms: vec![0.0; m],
            tolerances: tol,
            statuses: vec![ShiftStatus::Converged; m],
            iterations: vec![0; m],
            operator_products: 0,
            adjoint_products: 0,
            total_iterations: 0,
            breakdown: false,
            ls_residual_norms: None,
        }
    }
}

/// Per-shift CG quantities driven by a shared Lanczos basis.
#[derive(Debug, Clone)]
pub(crate) struct ShiftBlocks {
    lambdas: Vec<f64>,
    tol: Vec<f64>,
    max_iter: usize,
    gamma: Vec<f64>,
    omega: Vec<f64>,
    sigma: Vec<f64>,
    pi: Vec<f64>,
    /// Pivot `δ_j + λ − ω/γ` that froze the shift, for the curvature certificate.
    frozen_pivot: Vec<f64>,
    x: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    status: Vec<ShiftStatus>,
    iters: Vec<usize>,
}

impl ShiftBlocks {
    fn new(grid: &ShiftGrid, tol: Vec<f64>, max_iter: usize, beta0: f64, v0: &[f64]) -> Self {
        let m = grid.len();
        let n = v0.len();
        let p0: Vec<f64> = v0.iter().map(|v| beta0 * v).collect();
        Self {
            lambdas: grid.lambdas().to_vec(),
            tol,
            max_iter,
            gamma: vec![1.0; m],
            omega: vec![0.0; m],
            sigma: vec![beta0; m],
            pi: vec![beta0 * beta0; m],
            frozen_pivot: vec![f64::NAN; m],
            x: vec![vec![0.0; n]; m],
            p: vec![p0; m],
            status: vec![ShiftStatus::Running; m],
            iters: vec![0; m],
        }
    }

    fn any_running(&self) -> bool {
        self.status.contains(&ShiftStatus::Running)
    }

    fn pivot(&self, i: usize, delta: f64) -> f64 {
        delta + self.lambdas[i] - self.omega[i] / self.gamma[i]
    }

    /// One CG update for every running shift, given the current Lanczos
    /// coefficient `delta`, the next `beta_next` and the next basis vector
    /// (`None` when the Krylov space is exhausted).
    fn step(&mut self, delta: f64, beta_next: f64, v_next: Option<&[f64]>) {
        for i in 0..self.lambdas.len() {
            if self.status[i] != ShiftStatus::Running {
                continue;
            }
            self.iters[i] += 1;
            let pivot = self.pivot(i, delta);
            if pivot <= 0.0 {
                self.frozen_pivot[i] = pivot;
                self.status[i] = ShiftStatus::Indefinite;
                continue;
            }
            let gamma = 1.0 / pivot;
            axpy(gamma, &self.p[i], &mut self.x[i]);
            let bg = beta_next * gamma;
            self.sigma[i] *= -bg;
            self.omega[i] = bg * bg;
            self.gamma[i] = gamma;
            let Some(v) = v_next else {
                self.frozen_pivot[i] = f64::NAN;
                self.status[i] = ShiftStatus::Converged;
                continue;
            };
            let (s, w) = (self.sigma[i], self.omega[i]);
            // p ← σ v + ω p
            xpay_scaled(s, v, w, &mut self.p[i]);
            self.pi[i] = s * s + w * w * self.pi[i];
            if self.sigma[i].abs() <= self.tol[i] {
                self.status[i] = ShiftStatus::Converged;
            } else if self.iters[i] >= self.max_iter {
                self.status[i] = ShiftStatus::Capped;
            }
        }
    }

    fn certificate(&self, i: usize, delta: f64) -> f64 {
        let pivot = match self.status[i] {
            ShiftStatus::Running => self.pivot(i, delta),
            _ if !self.frozen_pivot[i].is_nan() => self.frozen_pivot[i],
            _ => self.pivot(i, delta),
        };
        self.sigma[i] * self.sigma[i] * pivot
    }

    fn abs_sigma(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s.abs()).collect()
    }

    fn into_solution(self, products: usize, adjoint: usize, steps: usize, breakdown: bool) -> MultishiftSolution {
        MultishiftSolution {
            residual_norms: self.abs_sigma(),
            shifts: self.lambdas,
            directions: self.x,
            tolerances: self.tol,
            statuses: self.status,
            iterations: self.iters,
            operator_products: products,
            adjoint_products: adjoint,
            total_iterations: steps,
            breakdown,
            ls_residual_norms: None,
        }
    }
}

/// `p ← s·v + w·p`
fn xpay_scaled(s: f64, v: &[f64], w: f64, p: &mut [f64]) {
    for (pi, vi) in p.iter_mut().zip(v) {
        *pi = s * vi + w * *pi;
    }
}
