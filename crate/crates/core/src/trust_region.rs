//! Trust-region baseline with Steihaug-Toint truncated conjugate gradient.

use serde::Serialize;

use crate::bench::BenchRecord;
use crate::krylov::default_max_iter;
use crate::outcome::{
    check_nonnegative, check_positive, check_unit_interval, degenerate_decrease, parse_value,
    Clock, SolveError, Status, StopRule,
};
use crate::problem::{Counted, Counters, SmoothProblem};
use crate::vecops::{add, all_finite, axpy, dot, norm, xpay};

/// Parameters of [`st_minimize`]. The acceptance and update constants share
/// their defaults with the cubic-regularization solver.
#[derive(Debug, Clone, Serialize)]
pub struct TrParams {
    /// Initial radius. Default 1.
    pub delta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Radius shrink factor after a rejected step. Default 0.1.
    pub gamma1: f64,
    /// Radius growth factor after a very successful step. Default 5.
    pub gamma2: f64,
    pub zeta: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_outer_iter: usize,
    pub time_budget: f64,
    /// Inner CG limit; `None` means `2n`.
    pub max_inner_iter: Option<usize>,
}

impl Default for TrParams {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            eta1: 0.1,
            eta2: 0.75,
            gamma1: 0.1,
            gamma2: 5.0,
            zeta: 0.5,
            eps_abs: 1e-5,
            eps_rel: 1e-6,
            max_outer_iter: 1000,
            time_budget: 3600.0,
            max_inner_iter: None,
        }
    }
}

impl TrParams {
    pub fn validate(&self) -> Result<(), SolveError> {
        check_positive("delta0", self.delta0)?;
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

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SolveError> {
        match key {
            "delta0" => self.delta0 = parse_value("delta0", value)?,
            "eta1" => self.eta1 = parse_value("eta1", value)?,
            "eta2" => self.eta2 = parse_value("eta2", value)?,
            "gamma1" => self.gamma1 = parse_value("gamma1", value)?,
            "gamma2" => self.gamma2 = parse_value("gamma2", value)?,
            "zeta" => self.zeta = parse_value("zeta", value)?,
            "eps_abs" => self.eps_abs = parse_value("eps_abs", value)?,
            "eps_rel" => self.eps_rel = parse_value("eps_rel", value)?,
            "max_outer_iter" => self.max_outer_iter = parse_value("max_outer_iter", value)?,
            "time_budget" => self.time_budget = parse_value("time_budget", value)?,
            "max_inner_iter" => self.max_inner_iter = Some(parse_value("max_inner_iter", value)?),
            _ => return Err(SolveError::UnknownParam(key.to_owned())),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CgExit {
    /// Residual tolerance met strictly inside the region.
    Interior,
    Boundary,
    NegativeCurvature,
    /// Iteration limit reached inside the region.
    Capped,
}

#[derive(Debug, Clone)]
pub struct TruncatedCg {
    pub d: Vec<f64>,
    pub exit: CgExit,
    pub iterations: usize,
    pub products: usize,
    /// `‖d‖` after each inner iteration.
    pub iterate_norms: Vec<f64>,
}

/// Positive `τ` with `‖d + τp‖ = Δ`, assuming `‖d‖ ≤ Δ`.
fn boundary_root(d: &[f64], p: &[f64], delta: f64) -> f64 {
    let a = dot(p, p);
    let b = 2.0 * dot(d, p);
    let c = (dot(d, d) - delta * delta).min(0.0);
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    if b > 0.0 {
        -2.0 * c / (b + disc)
    } else {
        (-b + disc) / (2.0 * a)
    }
}

/// Rescales a boundary step onto the sphere to remove rounding drift.
fn snap_to_radius(d: &mut [f64], delta: f64) {
    let dn = norm(d);
    if dn > 0.0 {
        let s = delta / dn;
        d.iter_mut().for_each(|v| *v *= s);
    }
}

/// Approximately minimizes `gᵀd + ½dᵀHd` subject to `‖d‖ ≤ Δ` by CG from
/// `d = 0`, stopping on the residual tolerance, at the boundary, or on
/// negative curvature. Like the multishift kernel, at least one CG step is
/// taken even when the tolerance already holds at `d = 0`.
pub fn truncated_cg(
    mut apply_h: impl FnMut(&[f64], &mut [f64]),
    g: &[f64],
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<TruncatedCg, SolveError> {
    let n = g.len();
    let mut d = vec![0.0; n];
    let mut r = g.to_vec();
    let mut p: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut hp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut norms = Vec::new();
    let mut products = 0;
    for it in 0..max_iter.max(1) {
        apply_h(&p, &mut hp);
        products += 1;
        if !all_finite(&hp) {
            return Err(SolveError::NonFinite { what: "Hessian product", iteration: it });
        }
        let curv = dot(&p, &hp);
        if curv <= 0.0 {
            let tau = boundary_root(&d, &p, delta);
            axpy(tau, &p, &mut d);
            snap_to_radius(&mut d, delta);
            norms.push(norm(&d));
            return Ok(TruncatedCg {
                d,
                exit: CgExit::NegativeCurvature,
                iterations: it + 1,
                products,
                iterate_norms: norms,
            });
        }
        let step = rr / curv;
        let trial = {
            let mut t = d.clone();
            axpy(step, &p, &mut t);
            t
        };
        if norm(&trial) >= delta {
            let tau = boundary_root(&d, &p, delta);
            axpy(tau, &p, &mut d);
            snap_to_radius(&mut d, delta);
            norms.push(norm(&d));
            return Ok(TruncatedCg {
                d,
                exit: CgExit::Boundary,
                iterations: it + 1,
                products,
                iterate_norms: norms,
            });
        }
        d = trial;
        norms.push(norm(&d));
        axpy(step, &hp, &mut r);
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= tol {
            return Ok(TruncatedCg {
                d,
                exit: CgExit::Interior,
                iterations: it + 1,
                products,
                iterate_norms: norms,
            });
        }
        // p ← −r + (rr_next/rr) p
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        xpay(&neg_r, rr_next / rr, &mut p);
        rr = rr_next;
    }
    Ok(TruncatedCg { d, exit: CgExit::Capped, iterations: max_iter.max(1), products, iterate_norms: norms })
}

/// One step attempt of the trust-region loop.
#[derive(Debug, Clone, Serialize)]
pub struct TrTraceRecord {
    pub k: usize,
    pub radius: f64,
    pub radius_next: f64,
    pub step_norm: f64,
    pub exit: CgExit,
    pub inner_iterations: usize,
    pub f: f64,
    pub f_trial: f64,
    pub grad_norm: f64,
    pub model_decrease: f64,
    pub rho: f64,
    pub success: bool,
    /// `‖d‖` after each inner CG iteration.
    pub iterate_norms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrState {
    pub x: Vec<f64>,
    pub radius: f64,
    pub k: usize,
    pub grad_norm: f64,
    pub f_val: f64,
    pub status: Status,
    pub counters: Counters,
    pub elapsed_seconds: f64,
    pub trace: Vec<TrTraceRecord>,
}

/// Trust-region minimization with the quadratic model and truncated CG.
pub fn st_minimize<P: SmoothProblem + ?Sized>(
    p: &P,
    params: &TrParams,
) -> Result<(TrState, BenchRecord), SolveError> {
    params.validate()?;
    let clock = Clock::start(params.time_budget);
    let ev = Counted::new(p);
    let n = p.dim();
    let mut x = p.x0();
    if x.len() != n {
        return Err(SolveError::Dimension { expected: n, got: x.len() });
    }
    let max_inner = params.max_inner_iter.unwrap_or_else(|| default_max_iter(n));
    let mut f = ev.f(&x);
    if !f.is_finite() {
        return Err(SolveError::NonFinite { what: "objective", iteration: 0 });
    }
    let mut g = ev.grad_vec(&x);
    if !all_finite(&g) {
        return Err(SolveError::NonFinite { what: "gradient", iteration: 0 });
    }
    let mut gn = norm(&g);
    let stop = StopRule::new(params.eps_abs, params.eps_rel, gn);
    let mut radius = params.delta0;
    let mut k = 0;
    let mut trace = Vec::new();

    let status = loop {
        if stop.satisfied(gn) {
            break Status::FirstOrderStationary;
        }
        if k >= params.max_outer_iter {
            break Status::MaxIter;
        }
        if clock.expired() {
            break Status::TimeExceeded;
        }
        let tol = crate::arc::per_shift_tolerance(gn, params.zeta);
        let xk = x.clone();
        let inner = truncated_cg(|v, out| ev.hvp(&xk, v, out), &g, radius, tol, max_inner)?;
        let d = &inner.d;
        let mut hd = vec![0.0; n];
        ev.hvp(&x, d, &mut hd);
        let decrease = -dot(&g, d) - 0.5 * dot(d, &hd);
        let x_trial = add(&x, d);
        let f_trial = ev.f(&x_trial);
        let rho = (f - f_trial) / decrease;
        let unbounded = f_trial.is_nan() || f_trial == f64::NEG_INFINITY;
        let degenerate = !(decrease > degenerate_decrease(f));
        let success = !unbounded && !degenerate && rho >= params.eta1;
        let radius_next = if !success {
            params.gamma1 * radius
        } else if rho > params.eta2 {
            params.gamma2 * radius
        } else {
            radius
        };
        trace.push(TrTraceRecord {
            k,
            radius,
            radius_next,
            step_norm: norm(d),
            exit: inner.exit,
            inner_iterations: inner.iterations,
            f,
            f_trial,
            grad_norm: gn,
            model_decrease: decrease,
            rho,
            success,
            iterate_norms: inner.iterate_norms.clone(),
        });
        k += 1;
        if unbounded {
            break Status::UnboundedBelow;
        }
        radius = radius_next;
        if success {
            x = x_trial;
            f = f_trial;
            g = ev.grad_vec(&x);
            if !all_finite(&g) {
                return Err(SolveError::NonFinite { what: "gradient", iteration: k });
            }
            gn = norm(&g);
        }
    };

    let elapsed = clock.elapsed();
    let counters = ev.counters();
    let record = BenchRecord::from_run(
        "steihaug_toint",
        p.name(),
        n,
        f,
        gn,
        k,
        counters,
        counters.neval_hvp,
        elapsed,
        status,
    );
    let state = TrState {
        x,
        radius,
        k,
        grad_norm: gn,
        f_val: f,
        status,
        counters,
        elapsed_seconds: elapsed,
        trace,
    };
    Ok((state, record))
}
