//! Adaptive cubic regularization driven by multishift Krylov solves.
//!
//! Each outer iteration solves `(H + λ_i I) d_i = −g` once for every shift of
//! the grid, then picks the shift whose step length best matches the cubic
//! optimality condition `α·λ = ‖d‖`. Acceptance uses the quadratic model.
//! After a rejected step the next shifts' directions, already computed, are
//! tried in turn until `α` has dropped by at least the factor `γ₁`.

use serde::Serialize;

use crate::bench::BenchRecord;
use crate::krylov::{
    default_max_iter, multishift_cg, multishift_cgls, KrylovError, MultishiftSolution, ShiftStatus,
    Tolerance,
};
use crate::outcome::{
    check_nonnegative, check_positive, check_unit_interval, degenerate_decrease, parse_value,
    Clock, SolveError, Status, StopRule,
};
use crate::problem::{Counted, CountedLs, Counters, LeastSquaresProblem, SmoothProblem};
use crate::shifts::ShiftGrid;
use crate::vecops::{add, all_finite, dot, norm};

/// Parameters of [`arcqk_minimize`].
#[derive(Debug, Clone, Serialize)]
pub struct ArcParams {
    /// Initial regularization `α₀`. Default 1.
    pub alpha0: f64,
    /// Successful-step threshold. Default 0.1.
    pub eta1: f64,
    /// Very-successful-step threshold. Default 0.75.
    pub eta2: f64,
    /// Minimum decrease factor of `α` after a rejected step. Default 0.1.
    pub gamma1: f64,
    /// Increase factor of `α` after a very successful step. Default 5.
    pub gamma2: f64,
    /// Residual exponent: subproblems are solved to `‖r‖ ≤ ξ‖g‖^{1+ζ}`. Default 0.5.
    pub zeta: f64,
    /// Residual scale `ξ`. Default 1.
    pub xi: f64,
    pub grid: ShiftGrid,
    /// Default 1e-5.
    pub eps_abs: f64,
    /// Default 1e-6.
    pub eps_rel: f64,
    /// Limit on outer iterations, one multishift solve each. Default 1000.
    pub max_outer_iter: usize,
    /// Wall-clock budget in seconds. Default 3600.
    pub time_budget: f64,
    /// Krylov iteration limit per solve; `None` means `2n`.
    pub max_inner_iter: Option<usize>,
}

impl Default for ArcParams {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            eta1: 0.1,
            eta2: 0.75,
            gamma1: 0.1,
            gamma2: 5.0,
            zeta: 0.5,
            xi: 1.0,
            grid: ShiftGrid::default(),
            eps_abs: 1e-5,
            eps_rel: 1e-6,
            max_outer_iter: 1000,
            time_budget: 3600.0,
            max_inner_iter: None,
        }
    }
}

impl ArcParams {
    pub fn validate(&self) -> Result<(), SolveError> {
        check_positive("alpha0", self.alpha0)?;
        check_unit_interval("eta1", self.eta1)?;
        check_unit_interval("eta2", self.eta2)?;
        if self.eta1 >= self.eta2 {
            return Err(SolveError::InvalidParam {
                name: "eta2",
                reason: format!("eta1 = {} must be below eta2 = {}", self.eta1, self.eta2),
            });
        }
        check_unit_interval("gamma1", self.gamma1)?;
        if !(self.gamma2 > 1.0 && self.gamma2.is_finite()) {
            return Err(SolveError::InvalidParam {
                name: "gamma2",
                reason: format!("{} must exceed 1", self.gamma2),
            });
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(SolveError::InvalidParam {
                name: "zeta",
                reason: format!("{} must lie in (0, 1]", self.zeta),
            });
        }
        check_positive("xi", self.xi)?;
        check_nonnegative("eps_abs", self.eps_abs)?;
        check_nonnegative("eps_rel", self.eps_rel)?;
        if !(self.time_budget > 0.0) {
            return Err(SolveError::InvalidParam {
                name: "time_budget",
                reason: format!("{} must be positive", self.time_budget),
            });
        }
        if self.max_inner_iter == Some(0) {
            return Err(SolveError::InvalidParam {
                name: "max_inner_iter",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Sets a field from its textual value; `grid` takes a comma-separated list.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SolveError> {
        match key {
            "alpha0" => self.alpha0 = parse_value("alpha0", value)?,
            "eta1" => self.eta1 = parse_value("eta1", value)?,
            "eta2" => self.eta2 = parse_value("eta2", value)?,
            "gamma1" => self.gamma1 = parse_value("gamma1", value)?,
            "gamma2" => self.gamma2 = parse_value("gamma2", value)?,
            "zeta" => self.zeta = parse_value("zeta", value)?,
            "xi" => self.xi = parse_value("xi", value)?,
            "eps_abs" => self.eps_abs = parse_value("eps_abs", value)?,
            "eps_rel" => self.eps_rel = parse_value("eps_rel", value)?,
            "max_outer_iter" => self.max_outer_iter = parse_value("max_outer_iter", value)?,
            "time_budget" => self.time_budget = parse_value("time_budget", value)?,
            "max_inner_iter" => self.max_inner_iter = Some(parse_value("max_inner_iter", value)?),
            "grid" => {
                let values = value
                    .split(',')
                    .map(|s| parse_value("grid", s))
                    .collect::<Result<Vec<f64>, _>>()?;
                self.grid = ShiftGrid::new(values)?;
            }
            _ => return Err(SolveError::UnknownParam(key.to_owned())),
        }
        Ok(())
    }
}

/// Inner residual tolerance `max(1e-12(1 + ‖g‖), ‖g‖^{1+ζ})`.
pub fn per_shift_tolerance(grad_norm: f64, zeta: f64) -> f64 {
    (1e-12 * (1.0 + grad_norm)).max(grad_norm.powf(1.0 + zeta))
}

/// One step attempt of the outer loop.
#[derive(Debug, Clone, Serialize)]
pub struct ArcTraceRecord {
    /// Outer iteration; all attempts of one iteration share its multishift solve.
    pub k: usize,
    /// Attempt counter, rejected attempts included.
    pub attempt: usize,
    pub alpha: f64,
    pub alpha_next: f64,
    pub shift_index: usize,
    pub shift: f64,
    pub step_norm: f64,
    pub residual_norm: f64,
    pub tolerance: f64,
    pub f: f64,
    pub f_trial: f64,
    pub grad_norm: f64,
    /// Quadratic-model decrease `q(0) − q(d)`.
    pub model_decrease: f64,
    /// Cubic model value `gᵀd + ½dᵀHd + ‖d‖³/(3α)`.
    pub cubic_value: f64,
    pub rho: f64,
    pub success: bool,
    pub very_successful: bool,
    pub statuses: Vec<ShiftStatus>,
}

/// Final state of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct ArcState {
    pub x: Vec<f64>,
    pub alpha: f64,
    /// Outer iterations performed, one multishift solve each.
    pub k: usize,
    /// Step attempts performed, rejected ones included.
    pub attempts: usize,
    pub grad_norm: f64,
    pub f_val: f64,
    pub status: Status,
    pub counters: Counters,
    pub elapsed_seconds: f64,
    pub max_alpha: f64,
    pub trace: Vec<ArcTraceRecord>,
}

/// Quadratic and cubic model values at a step.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicModelEval {
    /// `q(0) − q(d) = −gᵀd − ½dᵀHd`.
    pub quadratic_decrease: f64,
    /// `c^α(d) = gᵀd + ½dᵀHd + ‖d‖³/(3α)`.
    pub cubic_value: f64,
    /// `∇c^α(d) = g + Hd + (‖d‖/α) d`.
    pub gradient: Vec<f64>,
}

impl CubicModelEval {
    pub fn new(g: &[f64], d: &[f64], hd: &[f64], alpha: f64) -> Self {
        let gd = dot(g, d);
        let dhd = dot(d, hd);
        let dn = norm(d);
        let gradient = g.iter().zip(hd).zip(d).map(|((gi, hi), di)| gi + hi + dn / alpha * di).collect();
        Self {
            quadratic_decrease: -gd - 0.5 * dhd,
            cubic_value: gd + 0.5 * dhd + dn.powi(3) / (3.0 * alpha),
            gradient,
        }
    }
}

/// Outcome of [`acceptance_ratio`].
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEval {
    pub rho: f64,
    pub f_trial: f64,
    pub model_decrease: f64,
    /// `dᵀHd`.
    pub curvature: f64,
    /// The model decrease is too small to divide by; the step must be rejected.
    pub degenerate: bool,
}

impl RatioEval {
    fn from_parts(f_x: f64, f_trial: f64, g: &[f64], d: &[f64], curvature: f64) -> Self {
        let model_decrease = -dot(g, d) - 0.5 * curvature;
        let degenerate = !(model_decrease > degenerate_decrease(f_x));
        Self { rho: (f_x - f_trial) / model_decrease, f_trial, model_decrease, curvature, degenerate }
    }

    /// Objective NaN or −∞ at the trial point.
    pub fn unbounded(&self) -> bool {
        self.f_trial.is_nan() || self.f_trial == f64::NEG_INFINITY
    }
}

/// `ρ = (f(x) − f(x+d)) / (q(0) − q(d))` at the cost of one Hessian product
/// and one objective evaluation.
pub fn acceptance_ratio<P: SmoothProblem + ?Sized>(
    ev: &Counted<'_, P>,
    x: &[f64],
    d: &[f64],
    f_x: f64,
    g_x: &[f64],
) -> RatioEval {
    let mut hd = vec![0.0; d.len()];
    ev.hvp(x, d, &mut hd);
    let f_trial = ev.f(&add(x, d));
    RatioEval::from_parts(f_x, f_trial, g_x, d, dot(d, &hd))
}

/// Shift chosen from a multishift solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Smallest shift without detected negative curvature.
    pub i_plus: usize,
    pub j: usize,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("negative curvature detected for every shift")]
    HessianTooIndefinite,
    #[error("no shift at or above the smallest admissible one produced a usable step")]
    NoUsableShift,
}

/// Picks `j = argmin_{i ≥ i⁺} |α λ_i − ‖d_i‖|` over usable shifts, ties
/// going to the smaller shift.
pub fn select_step(sol: &MultishiftSolution, alpha: f64) -> Result<Selection, SelectError> {
    let i_plus = sol
        .statuses
        .iter()
        .position(|s| *s != ShiftStatus::Indefinite)
        .ok_or(SelectError::HessianTooIndefinite)?;
    let mut best: Option<(usize, f64)> = None;
    for i in i_plus..sol.len() {
        if !sol.usable(i) {
            continue;
        }
        let score = (alpha * sol.shifts[i] - norm(&sol.directions[i])).abs();
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    let (j, _) = best.ok_or(SelectError::NoUsableShift)?;
    Ok(Selection { i_plus, j, d: sol.directions[j].clone() })
}

/// After a rejected step with shift `j`, walks up the grid to the first
/// usable shift whose implied `α = ‖d‖/λ` is at most `γ₁·α_k`.
/// `None` means the grid is exhausted.
pub fn advance_shift_on_failure(
    sol: &MultishiftSolution,
    j: usize,
    alpha_k: f64,
    gamma1: f64,
) -> Option<(usize, f64)> {
    (j + 1..sol.len()).filter(|&i| sol.usable(i)).find_map(|i| {
        let alpha = norm(&sol.directions[i]) / sol.shifts[i];
        (alpha > 0.0 && alpha <= gamma1 * alpha_k).then_some((i, alpha))
    })
}

/// Per-attempt view handed to observers, with the full vectors involved.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub record: &'a ArcTraceRecord,
    pub x: &'a [f64],
    pub g: &'a [f64],
    pub d: &'a [f64],
    pub solution: &'a MultishiftSolution,
}

/// Instrumented access to the objective for the outer loop.
trait Model {
    fn dim(&self) -> usize;
    fn x0(&self) -> Vec<f64>;
    fn f(&mut self, x: &[f64]) -> f64;
    /// Gradient at a point whose objective was evaluated last.
    fn grad(&mut self, x: &[f64]) -> Vec<f64>;
    fn solve(
        &mut self,
        x: &[f64],
        g: &[f64],
        grid: &ShiftGrid,
        tol: &Tolerance,
        max_iter: usize,
    ) -> Result<MultishiftSolution, KrylovError>;
    /// `dᵀHd`, one Hessian product.
    fn curvature(&mut self, x: &[f64], d: &[f64]) -> f64;
    fn counters(&self) -> Counters;
    fn hvp_count(&self) -> usize;
    fn name(&self) -> String;
}

struct Smooth<'a, 'p, P: ?Sized>(&'a Counted<'p, P>);

impl<P: SmoothProblem + ?Sized> Model for Smooth<'_, '_, P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn x0(&self) -> Vec<f64> {
        self.0.problem().x0()
    }
    fn f(&mut self, x: &[f64]) -> f64 {
        self.0.f(x)
    }
    fn grad(&mut self, x: &[f64]) -> Vec<f64> {
        self.0.grad_vec(x)
    }
    fn solve(
        &mut self,
        x: &[f64],
        g: &[f64],
        grid: &ShiftGrid,
        tol: &Tolerance,
        max_iter: usize,
    ) -> Result<MultishiftSolution, KrylovError> {
        let b: Vec<f64> = g.iter().map(|v| -v).collect();
        let ev = self.0;
        multishift_cg(|v: &[f64], out: &mut [f64]| ev.hvp(x, v, out), &b, grid, tol, max_iter)
    }
    fn curvature(&mut self, x: &[f64], d: &[f64]) -> f64 {
        let mut hd = vec![0.0; d.len()];
        self.0.hvp(x, d, &mut hd);
        dot(d, &hd)
    }
    fn counters(&self) -> Counters {
        self.0.counters()
    }
    fn hvp_count(&self) -> usize {
        self.0.counters().neval_hvp
    }
    fn name(&self) -> String {
        self.0.problem().name().to_owned()
    }
}

struct GaussNewtonModel<'a, 'p, P: ?Sized> {
    ev: &'a CountedLs<'p, P>,
    last: Option<(Vec<f64>, Vec<f64>)>,
}

impl<P: LeastSquaresProblem + ?Sized> Model for GaussNewtonModel<'_, '_, P> {
    fn dim(&self) -> usize {
        self.ev.problem().dim()
    }
    fn x0(&self) -> Vec<f64> {
        self.ev.problem().x0()
    }
    fn f(&mut self, x: &[f64]) -> f64 {
        let r = self.ev.residual(x);
        let f = 0.5 * dot(&r, &r);
        self.last = Some((x.to_vec(), r));
        f
    }
    fn grad(&mut self, x: &[f64]) -> Vec<f64> {
        let r = match self.last.take() {
            Some((xl, r)) if xl == x => r,
            _ => self.ev.residual(x),
        };
        let g = self.ev.grad_from_residual(x, &r);
        self.last = Some((x.to_vec(), r));
        g
    }
    fn solve(
        &mut self,
        x: &[f64],
        g: &[f64],
        grid: &ShiftGrid,
        tol: &Tolerance,
        max_iter: usize,
    ) -> Result<MultishiftSolution, KrylovError> {
        let r = match &self.last {
            Some((xl, r)) if xl == x => r.clone(),
            _ => self.ev.residual(x),
        };
        debug_assert_eq!(g.len(), self.dim());
        let b: Vec<f64> = r.iter().map(|v| -v).collect();
        let ev = self.ev;
        multishift_cgls(
            |v: &[f64], out: &mut [f64]| ev.jprod(x, v, out),
            |u: &[f64], out: &mut [f64]| ev.jtprod(x, u, out),
            self.dim(),
            &b,
            grid,
            tol,
            max_iter,
        )
    }
    fn curvature(&mut self, x: &[f64], d: &[f64]) -> f64 {
        let mut jd = vec![0.0; self.ev.problem().nres()];
        self.ev.jprod(x, d, &mut jd);
        dot(&jd, &jd)
    }
    fn counters(&self) -> Counters {
        self.ev.counters()
    }
    fn hvp_count(&self) -> usize {
        self.ev.counters().neval_jprod
    }
    fn name(&self) -> String {
        self.ev.problem().name().to_owned()
    }
}

/// Minimizes a smooth problem from its start point.
pub fn arcqk_minimize<P: SmoothProblem + ?Sized>(
    p: &P,
    params: &ArcParams,
) -> Result<(ArcState, BenchRecord), SolveError> {
    arcqk_minimize_observed(p, params, |_| {})
}

/// [`arcqk_minimize`] with a callback invoked after every step attempt.
pub fn arcqk_minimize_observed<P: SmoothProblem + ?Sized>(
    p: &P,
    params: &ArcParams,
    observer: impl FnMut(&StepEvent<'_>),
) -> Result<(ArcState, BenchRecord), SolveError> {
    let ev = Counted::new(p);
    run(Smooth(&ev), params, observer)
}

/// Minimizes `½‖F(x)‖²` with Gauss-Newton curvature `JᵀJ`, solving the
/// regularized normal equations with the least-squares kernel. Hessian
/// products are reported as Jacobian products.
pub fn arcqk_minimize_gauss_newton<P: LeastSquaresProblem + ?Sized>(
    p: &P,
    params: &ArcParams,
) -> Result<(ArcState, BenchRecord), SolveError> {
    arcqk_minimize_gauss_newton_observed(p, params, |_| {})
}

pub fn arcqk_minimize_gauss_newton_observed<P: LeastSquaresProblem + ?Sized>(
    p: &P,
    params: &ArcParams,
    observer: impl FnMut(&StepEvent<'_>),
) -> Result<(ArcState, BenchRecord), SolveError> {
    let ev = CountedLs::new(p);
    run(GaussNewtonModel { ev: &ev, last: None }, params, observer)
}

fn run<M: Model>(
    mut m: M,
    params: &ArcParams,
    mut observer: impl FnMut(&StepEvent<'_>),
) -> Result<(ArcState, BenchRecord), SolveError> {
    params.validate()?;
    let clock = Clock::start(params.time_budget);
    let n = m.dim();
    let mut x = m.x0();
    if x.len() != n {
        return Err(SolveError::Dimension { expected: n, got: x.len() });
    }
    let max_inner = params.max_inner_iter.unwrap_or_else(|| default_max_iter(n));
    let mut f = m.f(&x);
    if !f.is_finite() {
        return Err(SolveError::NonFinite { what: "objective", iteration: 0 });
    }
    let mut g = m.grad(&x);
    if !all_finite(&g) {
        return Err(SolveError::NonFinite { what: "gradient", iteration: 0 });
    }
    let mut gn = norm(&g);
    let stop = StopRule::new(params.eps_abs, params.eps_rel, gn);
    let mut alpha = params.alpha0;
    let mut max_alpha = alpha;
    let (mut k, mut attempts) = (0usize, 0usize);
    let mut trace = Vec::new();

    let status = 'outer: loop {
        if stop.satisfied(gn) {
            break Status::FirstOrderStationary;
        }
        if k >= params.max_outer_iter {
            break Status::MaxIter;
        }
        if clock.expired() {
            break Status::TimeExceeded;
        }
        let tol = (1e-12 * (1.0 + gn)).max(params.xi * gn.powf(1.0 + params.zeta));
        let sol = m
            .solve(&x, &g, &params.grid, &Tolerance::Uniform(tol), max_inner)
            .map_err(|source| SolveError::Krylov { iteration: k, source })?;
        k += 1;
        let mut j = match select_step(&sol, alpha) {
            Ok(sel) => sel.j,
            Err(SelectError::HessianTooIndefinite) => break Status::HessianTooIndefinite,
            Err(SelectError::NoUsableShift) => break Status::GridExhausted,
        };
        loop {
            if clock.expired() {
                break 'outer Status::TimeExceeded;
            }
            let d = &sol.directions[j];
            let curvature = m.curvature(&x, d);
            let x_trial = add(&x, d);
            let f_trial = m.f(&x_trial);
            let ratio = RatioEval::from_parts(f, f_trial, &g, d, curvature);
            let dn = norm(d);
            let success = !ratio.unbounded() && !ratio.degenerate && ratio.rho >= params.eta1;
            let very = success && ratio.rho > params.eta2;
            let mut next = None;
            let alpha_next = if success {
                if very {
                    params.gamma2 * alpha
                } else {
                    alpha
                }
            } else {
                next = advance_shift_on_failure(&sol, j, alpha, params.gamma1);
                next.map_or(alpha, |(_, a)| a)
            };
            let record = ArcTraceRecord {
                k: k - 1,
                attempt: attempts,
                alpha,
                alpha_next,
                shift_index: j,
                shift: sol.shifts[j],
                step_norm: dn,
                residual_norm: sol.residual_norms[j],
                tolerance: tol,
                f,
                f_trial,
                grad_norm: gn,
                model_decrease: ratio.model_decrease,
                cubic_value: -ratio.model_decrease + dn.powi(3) / (3.0 * alpha),
                rho: ratio.rho,
                success,
                very_successful: very,
                statuses: sol.statuses.clone(),
            };
            observer(&StepEvent { record: &record, x: &x, g: &g, d, solution: &sol });
            trace.push(record);
            attempts += 1;
            if ratio.unbounded() {
                break 'outer Status::UnboundedBelow;
            }
            alpha = alpha_next;
            max_alpha = max_alpha.max(alpha);
            if success {
                x = x_trial;
                f = f_trial;
                g = m.grad(&x);
                if !all_finite(&g) {
                    return Err(SolveError::NonFinite { what: "gradient", iteration: k });
                }
                gn = norm(&g);
                break;
            }
            match next {
                Some((j_next, _)) => j = j_next,
                None => break 'outer Status::GridExhausted,
            }
        }
    };

    let elapsed = clock.elapsed();
    let counters = m.counters();
    let record = BenchRecord::from_run(
        "arcqk",
        &m.name(),
        n,
        f,
        gn,
        k,
        counters,
        m.hvp_count(),
        elapsed,
        status,
    );
    let state = ArcState {
        x,
        alpha,
        k,
        attempts,
        grad_norm: gn,
        f_val: f,
        status,
        counters,
        elapsed_seconds: elapsed,
        max_alpha,
        trace,
    };
    Ok((state, record))
}
