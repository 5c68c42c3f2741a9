//! Problem abstractions consumed by the solvers.
//!
//! A [`SmoothProblem`] supplies the objective, its gradient and a
//! Hessian-vector product. A [`LeastSquaresProblem`] supplies residuals and
//! products with the Jacobian and its transpose. Solvers never call the traits
//! directly: they go through [`Counted`] / [`CountedLs`], which tally every
//! underlying evaluation.

mod check;
pub mod suite;

use std::cell::Cell;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vecops;

pub use check::{
    check_derivatives, check_least_squares, check_points, DerivativeReport, LeastSquaresReport,
};
pub use suite::{problem_by_name, suite_problems, SuiteFilter, SuiteProblem};

/// Errors raised while building or checking problems.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem `{name}` (available: {available})")]
    UnknownProblem { name: String, available: String },
    #[error("problem `{name}` does not accept dimension {n}: {reason}")]
    InvalidDimension { name: String, n: usize, reason: String },
    #[error("non-finite {what} at {location}")]
    NonFinite { what: &'static str, location: String },
}

/// A twice continuously differentiable objective `f: R^n -> R`.
///
/// `hess_vec` returns `∇²f(x)·v`, or `B·v` for a symmetric approximation `B`
/// when [`SmoothProblem::exact_hessian`] is `false`.
pub trait SmoothProblem: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn x0(&self) -> Vec<f64>;
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]);

    /// A known minimizer, when one exists in closed form.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    fn exact_hessian(&self) -> bool {
        true
    }
}

/// A nonlinear least-squares problem `f(x) = ½‖F(x)‖²`.
pub trait LeastSquaresProblem: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn nres(&self) -> usize;
    fn x0(&self) -> Vec<f64>;
    fn residual(&self, x: &[f64], r: &mut [f64]);
    /// `J(x)·v`, length `nres`.
    fn jprod(&self, x: &[f64], v: &[f64], jv: &mut [f64]);
    /// `J(x)ᵀ·u`, length `dim`.
    fn jtprod(&self, x: &[f64], u: &[f64], jtu: &mut [f64]);

    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }
}

macro_rules! forward_smooth {
    ($ty:ty) => {
        impl<P: SmoothProblem + ?Sized> SmoothProblem for $ty {
            fn name(&self) -> &str {
                (**self).name()
            }
            fn dim(&self) -> usize {
                (**self).dim()
            }
            fn x0(&self) -> Vec<f64> {
                (**self).x0()
            }
            fn objective(&self, x: &[f64]) -> f64 {
                (**self).objective(x)
            }
            fn gradient(&self, x: &[f64], g: &mut [f64]) {
                (**self).gradient(x, g)
            }
            fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
                (**self).hess_vec(x, v, hv)
            }
            fn minimizer(&self) -> Option<Vec<f64>> {
                (**self).minimizer()
            }
            fn exact_hessian(&self) -> bool {
                (**self).exact_hessian()
            }
        }
    };
}

macro_rules! forward_ls {
    ($ty:ty) => {
        impl<P: LeastSquaresProblem + ?Sized> LeastSquaresProblem for $ty {
            fn name(&self) -> &str {
                (**self).name()
            }
            fn dim(&self) -> usize {
                (**self).dim()
            }
            fn nres(&self) -> usize {
                (**self).nres()
            }
            fn x0(&self) -> Vec<f64> {
                (**self).x0()
            }
            fn residual(&self, x: &[f64], r: &mut [f64]) {
                (**self).residual(x, r)
            }
            fn jprod(&self, x: &[f64], v: &[f64], jv: &mut [f64]) {
                (**self).jprod(x, v, jv)
            }
            fn jtprod(&self, x: &[f64], u: &[f64], jtu: &mut [f64]) {
                (**self).jtprod(x, u, jtu)
            }
            fn minimizer(&self) -> Option<Vec<f64>> {
                (**self).minimizer()
            }
        }
    };
}

forward_smooth!(Box<P>);
forward_smooth!(&P);
forward_ls!(Box<P>);
forward_ls!(&P);

/// Evaluation tallies. Every field counts underlying evaluations exactly once.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub neval_f: usize,
    pub neval_grad: usize,
    pub neval_hvp: usize,
    pub neval_jprod: usize,
    pub neval_jtprod: usize,
}

impl fmt::Display for Counters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#f={} #g={} #Hv={} #Jv={} #Jtv={}",
            self.neval_f, self.neval_grad, self.neval_hvp, self.neval_jprod, self.neval_jtprod
        )
    }
}

/// A smooth problem together with its own evaluation counters.
///
/// Counters use interior mutability so that operator closures can borrow the
/// evaluator immutably; a `Counted` value is confined to one thread.
pub struct Counted<'p, P: ?Sized> {
    problem: &'p P,
    counts: Cell<Counters>,
}

impl<'p, P: SmoothProblem + ?Sized> Counted<'p, P> {
    pub fn new(problem: &'p P) -> Self {
        Self { problem, counts: Cell::new(Counters::default()) }
    }

    pub fn problem(&self) -> &'p P {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn counters(&self) -> Counters {
        self.counts.get()
    }

    fn bump(&self, f: impl FnOnce(&mut Counters)) {
        let mut c = self.counts.get();
        f(&mut c);
        self.counts.set(c);
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.bump(|c| c.neval_f += 1);
        self.problem.objective(x)
    }

    pub fn grad(&self, x: &[f64], g: &mut [f64]) {
        self.bump(|c| c.neval_grad += 1);
        self.problem.gradient(x, g)
    }

    pub fn grad_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.grad(x, &mut g);
        g
    }

    pub fn hvp(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        self.bump(|c| c.neval_hvp += 1);
        self.problem.hess_vec(x, v, hv)
    }
}

/// A least-squares problem together with its own evaluation counters.
///
/// A residual evaluation counts as one objective evaluation.
pub struct CountedLs<'p, P: ?Sized> {
    problem: &'p P,
    counts: Cell<Counters>,
}

impl<'p, P: LeastSquaresProblem + ?Sized> CountedLs<'p, P> {
    pub fn new(problem: &'p P) -> Self {
        Self { problem, counts: Cell::new(Counters::default()) }
    }

    pub fn problem(&self) -> &'p P {
        self.problem
    }

    pub fn counters(&self) -> Counters {
        self.counts.get()
    }

    fn bump(&self, f: impl FnOnce(&mut Counters)) {
        let mut c = self.counts.get();
        f(&mut c);
        self.counts.set(c);
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.bump(|c| c.neval_f += 1);
        let mut r = vec![0.0; self.problem.nres()];
        self.problem.residual(x, &mut r);
        r
    }

    /// `∇f = JᵀF` from an already evaluated residual; counts one gradient.
    pub fn grad_from_residual(&self, x: &[f64], r: &[f64]) -> Vec<f64> {
        self.bump(|c| c.neval_grad += 1);
        let mut g = vec![0.0; self.problem.dim()];
        self.problem.jtprod(x, r, &mut g);
        g
    }

    pub fn jprod(&self, x: &[f64], v: &[f64], jv: &mut [f64]) {
        self.bump(|c| c.neval_jprod += 1);
        self.problem.jprod(x, v, jv)
    }

    pub fn jtprod(&self, x: &[f64], u: &[f64], jtu: &mut [f64]) {
        self.bump(|c| c.neval_jtprod += 1);
        self.problem.jtprod(x, u, jtu)
    }
}

/// Gauss-Newton view of a least-squares problem: the Hessian products apply
/// `JᵀJ`, so the resulting smooth problem has an inexact Hessian.
pub struct GaussNewton<P> {
    inner: P,
}

impl<P: LeastSquaresProblem> GaussNewton<P> {
    pub fn new(inner: P) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: LeastSquaresProblem> SmoothProblem for GaussNewton<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn x0(&self) -> Vec<f64> {
        self.inner.x0()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        let mut r = vec![0.0; self.inner.nres()];
        self.inner.residual(x, &mut r);
        0.5 * vecops::dot(&r, &r)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let mut r = vec![0.0; self.inner.nres()];
        self.inner.residual(x, &mut r);
        self.inner.jtprod(x, &r, g);
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        let mut jv = vec![0.0; self.inner.nres()];
        self.inner.jprod(x, v, &mut jv);
        self.inner.jtprod(x, &jv, hv);
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.inner.minimizer()
    }
    fn exact_hessian(&self) -> bool {
        false
    }
}

type HessOp = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// Replaces the Hessian products of a smooth problem with a user-supplied
/// symmetric operator `B(x)·v`.
pub struct InexactHessian<P> {
    inner: P,
    op: Box<HessOp>,
}

impl<P: SmoothProblem> InexactHessian<P> {
    pub fn new(
        inner: P,
        op: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { inner, op: Box::new(op) }
    }
}

impl<P: SmoothProblem> SmoothProblem for InexactHessian<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn x0(&self) -> Vec<f64> {
        self.inner.x0()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(x)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.inner.gradient(x, g)
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        (self.op)(x, v, hv)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.inner.minimizer()
    }
    fn exact_hessian(&self) -> bool {
        false
    }
}

/// Overrides the start point of a problem.
pub struct Restart<P> {
    inner: P,
    x0: Vec<f64>,
}

impl<P> Restart<P> {
    pub fn new(inner: P, x0: Vec<f64>) -> Self {
        Self { inner, x0 }
    }
}

impl<P: SmoothProblem> SmoothProblem for Restart<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(x)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.inner.gradient(x, g)
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        self.inner.hess_vec(x, v, hv)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.inner.minimizer()
    }
    fn exact_hessian(&self) -> bool {
        self.inner.exact_hessian()
    }
}

impl<P: LeastSquaresProblem> LeastSquaresProblem for Restart<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn nres(&self) -> usize {
        self.inner.nres()
    }
    fn x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn residual(&self, x: &[f64], r: &mut [f64]) {
        self.inner.residual(x, r)
    }
    fn jprod(&self, x: &[f64], v: &[f64], jv: &mut [f64]) {
        self.inner.jprod(x, v, jv)
    }
    fn jtprod(&self, x: &[f64], u: &[f64], jtu: &mut [f64]) {
        self.inner.jtprod(x, u, jtu)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.inner.minimizer()
    }
}

type ObjFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A smooth problem assembled from closures.
pub struct FnProblem {
    name: String,
    x0: Vec<f64>,
    f: Box<ObjFn>,
    g: Box<GradFn>,
    hv: Box<HessOp>,
}

impl FnProblem {
    pub fn new(
        name: impl Into<String>,
        x0: Vec<f64>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        g: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        hv: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), x0, f: Box::new(f), g: Box::new(g), hv: Box::new(hv) }
    }
}

impl SmoothProblem for FnProblem {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.x0.len()
    }
    fn x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        (self.g)(x, g)
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        (self.hv)(x, v, hv)
    }
}
