//! C interface to the arcqk solvers.
//!
//! Every fallible function returns an [`ArcqkCode`]; on failure a message is
//! kept per thread and can be read with [`arcqk_last_error`]. Handles are
//! opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use arcqk::krylov::{multishift_cg, ShiftStatus};
use arcqk::problem::{problem_by_name, GaussNewton, SmoothProblem, SuiteProblem};
use arcqk::{
    arcqk_minimize, arcqk_minimize_gauss_newton, st_minimize, ArcParams, ShiftGrid, SolveError, Status, TrParams,
};

/// Return codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcqkCode {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownProblem = 3,
    SolveFailed = 4,
    Panic = 5,
}

/// Why a solve stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcqkTermination {
    FirstOrderStationary = 0,
    MaxIter = 1,
    TimeExceeded = 2,
    UnboundedBelow = 3,
    GridExhausted = 4,
    HessianTooIndefinite = 5,
    Running = 6,
}

impl From<Status> for ArcqkTermination {
    fn from(s: Status) -> Self {
        match s {
            Status::FirstOrderStationary => Self::FirstOrderStationary,
            Status::MaxIter => Self::MaxIter,
            Status::TimeExceeded => Self::TimeExceeded,
            Status::UnboundedBelow => Self::UnboundedBelow,
            Status::GridExhausted => Self::GridExhausted,
            Status::HessianTooIndefinite => Self::HessianTooIndefinite,
            Status::Running => Self::Running,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcqkSolver {
    Arcqk = 0,
    SteihaugToint = 1,
}

/// Per-shift outcome of `arcqk_multishift_cg`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcqkShiftStatus {
    Converged = 0,
    Indefinite = 1,
    Capped = 2,
    Running = 3,
}

impl From<ShiftStatus> for ArcqkShiftStatus {
    fn from(s: ShiftStatus) -> Self {
        match s {
            ShiftStatus::Converged => Self::Converged,
            ShiftStatus::Indefinite => Self::Indefinite,
            ShiftStatus::Capped => Self::Capped,
            ShiftStatus::Running => Self::Running,
        }
    }
}

/// Summary of a finished solve.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArcqkResult {
    pub termination: ArcqkTermination,
    pub iterations: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub neval_f: usize,
    pub neval_grad: usize,
    pub neval_hvp: usize,
    pub elapsed_seconds: f64,
}

/// `f(x)`; `x` has `n` entries.
pub type ArcqkObjectiveFn = Option<extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize) -> f64>;
/// Writes `∇f(x)` into `out`.
pub type ArcqkGradientFn = Option<extern "C" fn(user_data: *mut c_void, x: *const f64, out: *mut f64, n: usize)>;
/// Writes `∇²f(x)·v` into `out`.
pub type ArcqkHessVecFn =
    Option<extern "C" fn(user_data: *mut c_void, x: *const f64, v: *const f64, out: *mut f64, n: usize)>;
/// Writes `M·v` into `out`.
pub type ArcqkOperatorFn = Option<extern "C" fn(user_data: *mut c_void, v: *const f64, out: *mut f64, n: usize)>;

struct CallbackProblem {
    n: usize,
    x0: Vec<f64>,
    objective: extern "C" fn(*mut c_void, *const f64, usize) -> f64,
    gradient: extern "C" fn(*mut c_void, *const f64, *mut f64, usize),
    hess_vec: extern "C" fn(*mut c_void, *const f64, *const f64, *mut f64, usize),
    user_data: *mut c_void,
}

// A solve is sequential and runs on the caller's thread; the caller owns the
// thread-safety of `user_data`.
unsafe impl Send for CallbackProblem {}
unsafe impl Sync for CallbackProblem {}

impl SmoothProblem for CallbackProblem {
    fn name(&self) -> &str {
        "callback"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(self.user_data, x.as_ptr(), self.n)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        (self.gradient)(self.user_data, x.as_ptr(), g.as_mut_ptr(), self.n)
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        (self.hess_vec)(self.user_data, x.as_ptr(), v.as_ptr(), hv.as_mut_ptr(), self.n)
    }
}

enum Source {
    Suite(SuiteProblem),
    Callbacks(CallbackProblem),
}

/// Opaque problem handle.
pub struct ArcqkProblem {
    source: Source,
}

impl ArcqkProblem {
    fn dim(&self) -> usize {
        match &self.source {
            Source::Suite(p) => p.dim(),
            Source::Callbacks(p) => p.n,
        }
    }
}

/// Opaque parameter set shared by both solvers.
#[derive(Default)]
pub struct ArcqkParams {
    arc: ArcParams,
    tr: TrParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(code: ArcqkCode, msg: impl Into<String>) -> ArcqkCode {
    set_error(msg);
    code
}

/// Runs `body`, turning panics into [`ArcqkCode::Panic`].
fn guard(body: impl FnOnce() -> ArcqkCode) -> ArcqkCode {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(e) => {
            let msg = e
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| e.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(ArcqkCode::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, ArcqkCode> {
    if s.is_null() {
        return Err(fail(ArcqkCode::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(ArcqkCode::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failure on this thread, or an empty string. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn arcqk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a built-in suite problem. `n = 0` selects its default dimension.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arcqk_problem_from_suite(
    name: *const c_char,
    n: usize,
    out: *mut *mut ArcqkProblem,
) -> ArcqkCode {
    guard(|| {
        if out.is_null() {
            return fail(ArcqkCode::NullPointer, "out is null");
        }
        let name = match read_str(name, "name") {
            Ok(s) => s,
            Err(code) => return code,
        };
        match problem_by_name(name, (n > 0).then_some(n)) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(ArcqkProblem { source: Source::Suite(p) }));
                ArcqkCode::Ok
            }
            Err(e) => fail(ArcqkCode::UnknownProblem, e.to_string()),
        }
    })
}

/// Creates a problem from callbacks. `x0` is copied.
///
/// # Safety
/// `x0` must point to `n` doubles and `out` must be valid. The callbacks must
/// be safe to call with `user_data` for as long as the handle lives.
#[no_mangle]
pub unsafe extern "C" fn arcqk_problem_from_callbacks(
    n: usize,
    x0: *const f64,
    objective: ArcqkObjectiveFn,
    gradient: ArcqkGradientFn,
    hess_vec: ArcqkHessVecFn,
    user_data: *mut c_void,
    out: *mut *mut ArcqkProblem,
) -> ArcqkCode {
    guard(|| {
        if out.is_null() || x0.is_null() {
            return fail(ArcqkCode::NullPointer, "x0 and out must not be null");
        }
        let (Some(objective), Some(gradient), Some(hess_vec)) = (objective, gradient, hess_vec) else {
            return fail(ArcqkCode::NullPointer, "all three callbacks are required");
        };
        if n == 0 {
            return fail(ArcqkCode::InvalidArgument, "dimension must be positive");
        }
        let x0 = std::slice::from_raw_parts(x0, n).to_vec();
        let p = CallbackProblem { n, x0, objective, gradient, hess_vec, user_data };
        *out = Box::into_raw(Box::new(ArcqkProblem { source: Source::Callbacks(p) }));
        ArcqkCode::Ok
    })
}

/// Dimension of a problem, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arcqk_problem_dim(problem: *const ArcqkProblem) -> usize {
    problem.as_ref().map_or(0, ArcqkProblem::dim)
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arcqk_problem_free(problem: *mut ArcqkProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// New parameter set with default values.
#[no_mangle]
pub extern "C" fn arcqk_params_new() -> *mut ArcqkParams {
    Box::into_raw(Box::default())
}

/// Sets a parameter by field name, e.g. `"alpha0"`, `"delta0"`, `"grid"`.
/// Keys shared by both solvers update both.
///
/// # Safety
/// `params` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn arcqk_params_set(
    params: *mut ArcqkParams,
    key: *const c_char,
    value: *const c_char,
) -> ArcqkCode {
    guard(|| {
        let Some(params) = params.as_mut() else {
            return fail(ArcqkCode::NullPointer, "params is null");
        };
        let (key, value) = match (read_str(key, "key"), read_str(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(code), _) | (_, Err(code)) => return code,
        };
        let arc = params.arc.set(key, value);
        let tr = params.tr.set(key, value);
        match (arc, tr) {
            (Err(SolveError::UnknownParam(_)), Err(SolveError::UnknownParam(_))) => {
                fail(ArcqkCode::InvalidArgument, format!("unknown parameter `{key}`"))
            }
            (Err(e @ SolveError::InvalidParam { .. }), _) | (_, Err(e @ SolveError::InvalidParam { .. })) => {
                fail(ArcqkCode::InvalidArgument, e.to_string())
            }
            (Err(e), Err(SolveError::UnknownParam(_))) | (Err(SolveError::UnknownParam(_)), Err(e)) => {
                fail(ArcqkCode::InvalidArgument, e.to_string())
            }
            _ => ArcqkCode::Ok,
        }
    })
}

/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arcqk_params_free(params: *mut ArcqkParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Minimizes `problem` from its start point. `params` may be null for the
/// defaults; `x_out`, when not null, receives the final point (`n` doubles).
/// Least-squares suite problems run through their Gauss-Newton formulation.
///
/// # Safety
/// Handles must be live; `x_out` must be null or hold `arcqk_problem_dim`
/// doubles; `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcqk_solve(
    problem: *const ArcqkProblem,
    params: *const ArcqkParams,
    solver: ArcqkSolver,
    x_out: *mut f64,
    result: *mut ArcqkResult,
) -> ArcqkCode {
    guard(|| {
        let (Some(problem), false) = (problem.as_ref(), result.is_null()) else {
            return fail(ArcqkCode::NullPointer, "problem and result must not be null");
        };
        let defaults = ArcqkParams::default();
        let params = params.as_ref().unwrap_or(&defaults);
        let outcome = match (solver, &problem.source) {
            (ArcqkSolver::Arcqk, Source::Suite(SuiteProblem::Smooth(p))) => {
                arcqk_minimize(p.as_ref(), &params.arc).map(|(s, r)| (s.x, s.status, r))
            }
            (ArcqkSolver::Arcqk, Source::Suite(SuiteProblem::LeastSquares(p))) => {
                arcqk_minimize_gauss_newton(p.as_ref(), &params.arc).map(|(s, r)| (s.x, s.status, r))
            }
            (ArcqkSolver::Arcqk, Source::Callbacks(p)) => {
                arcqk_minimize(p, &params.arc).map(|(s, r)| (s.x, s.status, r))
            }
            (ArcqkSolver::SteihaugToint, Source::Suite(SuiteProblem::Smooth(p))) => {
                st_minimize(p.as_ref(), &params.tr).map(|(s, r)| (s.x, s.status, r))
            }
            (ArcqkSolver::SteihaugToint, Source::Suite(SuiteProblem::LeastSquares(p))) => {
                st_minimize(&GaussNewton::new(p.as_ref()), &params.tr).map(|(s, r)| (s.x, s.status, r))
            }
            (ArcqkSolver::SteihaugToint, Source::Callbacks(p)) => {
                st_minimize(p, &params.tr).map(|(s, r)| (s.x, s.status, r))
            }
        };
        match outcome {
            Ok((x, status, rec)) => {
                if !x_out.is_null() {
                    ptr::copy_nonoverlapping(x.as_ptr(), x_out, x.len());
                }
                *result = ArcqkResult {
                    termination: status.into(),
                    iterations: rec.iter,
                    f: rec.f,
                    grad_norm: rec.grad_norm,
                    neval_f: rec.neval_f,
                    neval_grad: rec.neval_grad,
                    neval_hvp: rec.neval_hvp,
                    elapsed_seconds: rec.elapsed_seconds,
                };
                ArcqkCode::Ok
            }
            Err(e) => fail(ArcqkCode::SolveFailed, e.to_string()),
        }
    })
}

/// Solves `(M + λ_i I) x_i = b` for every shift with one product per
/// iteration. `shifts` must be strictly increasing within `[1e-15, 1e15]`.
/// `x_out` receives the solutions shift by shift (`nshifts·n` doubles);
/// `statuses_out` and `products_out` may be null.
///
/// # Safety
/// `b` must hold `n` doubles, `shifts` `nshifts`, `x_out` `nshifts·n`, and
/// `statuses_out` (when not null) `nshifts` entries.
#[no_mangle]
pub unsafe extern "C" fn arcqk_multishift_cg(
    apply: ArcqkOperatorFn,
    user_data: *mut c_void,
    n: usize,
    b: *const f64,
    shifts: *const f64,
    nshifts: usize,
    tol: f64,
    max_iter: usize,
    x_out: *mut f64,
    statuses_out: *mut ArcqkShiftStatus,
    products_out: *mut usize,
) -> ArcqkCode {
    guard(|| {
        let Some(apply) = apply else {
            return fail(ArcqkCode::NullPointer, "apply is null");
        };
        if b.is_null() || shifts.is_null() || x_out.is_null() {
            return fail(ArcqkCode::NullPointer, "b, shifts and x_out must not be null");
        }
        if n == 0 || nshifts == 0 {
            return fail(ArcqkCode::InvalidArgument, "n and nshifts must be positive");
        }
        let b = std::slice::from_raw_parts(b, n);
        let grid = match ShiftGrid::new(std::slice::from_raw_parts(shifts, nshifts).to_vec()) {
            Ok(g) => g,
            Err(e) => return fail(ArcqkCode::InvalidArgument, e.to_string()),
        };
        let op = |v: &[f64], out: &mut [f64]| apply(user_data, v.as_ptr(), out.as_mut_ptr(), n);
        let sol = match multishift_cg(op, b, &grid, &tol.into(), max_iter) {
            Ok(s) => s,
            Err(e) => return fail(ArcqkCode::InvalidArgument, e.to_string()),
        };
        for (i, d) in sol.directions.iter().enumerate() {
            ptr::copy_nonoverlapping(d.as_ptr(), x_out.add(i * n), n);
            if !statuses_out.is_null() {
                *statuses_out.add(i) = sol.statuses[i].into();
            }
        }
        if !products_out.is_null() {
            *products_out = sol.operator_products;
        }
        ArcqkCode::Ok
    })
}
