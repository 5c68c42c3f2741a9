//! Solver × problem benchmarking and performance profiles.

mod emit;
mod profile;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arc::{arcqk_minimize, arcqk_minimize_gauss_newton, ArcParams};
use crate::outcome::Status;
use crate::problem::{Counters, GaussNewton, SuiteProblem};
use crate::trust_region::{st_minimize, TrParams};

pub use emit::{
    read_records_csv, read_records_json, records_to_csv, render_svg, write_curves_csv, write_curves_svg,
    write_records_csv, write_records_json, EmitError,
};
pub use profile::{performance_profile, Metric, Profile, ProfileCurve, ProfileError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchStatus {
    Success,
    Exception,
    TimeExceeded,
    Other,
}

impl BenchStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Exception => "exception",
            Self::TimeExceeded => "time_exceeded",
            Self::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "success" => Some(Self::Success),
            "exception" => Some(Self::Exception),
            "time_exceeded" => Some(Self::TimeExceeded),
            "other" => Some(Self::Other),
            _ => None,
        }
    }
}

impl From<Status> for BenchStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::FirstOrderStationary => Self::Success,
            Status::TimeExceeded => Self::TimeExceeded,
            _ => Self::Other,
        }
    }
}

/// One (problem, solver) result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRecord {
    pub name: String,
    pub nvar: usize,
    #[serde(with = "emit::float")]
    pub f: f64,
    #[serde(with = "emit::float")]
    pub grad_norm: f64,
    pub iter: usize,
    pub neval_f: usize,
    pub neval_grad: usize,
    pub neval_hvp: usize,
    #[serde(with = "emit::float")]
    pub elapsed_seconds: f64,
    pub status: BenchStatus,
    pub solver: String,
}

impl BenchRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn from_run(
        solver: &str,
        name: &str,
        nvar: usize,
        f: f64,
        grad_norm: f64,
        iter: usize,
        counters: Counters,
        neval_hvp: usize,
        elapsed_seconds: f64,
        status: Status,
    ) -> Self {
        Self {
            name: name.to_owned(),
            nvar,
            f,
            grad_norm,
            iter,
            neval_f: counters.neval_f,
            neval_grad: counters.neval_grad,
            neval_hvp,
            elapsed_seconds,
            status: status.into(),
            solver: solver.to_owned(),
        }
    }

    pub fn exception(solver: &str, name: &str, nvar: usize, elapsed_seconds: f64) -> Self {
        Self {
            name: name.to_owned(),
            nvar,
            f: f64::NAN,
            grad_norm: f64::NAN,
            iter: 0,
            neval_f: 0,
            neval_grad: 0,
            neval_hvp: 0,
            elapsed_seconds,
            status: BenchStatus::Exception,
            solver: solver.to_owned(),
        }
    }

    /// Field-wise equality treating NaNs in the same field as equal.
    pub fn same_as(&self, other: &Self) -> bool {
        let feq = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.name == other.name
            && self.nvar == other.nvar
            && feq(self.f, other.f)
            && feq(self.grad_norm, other.grad_norm)
            && self.iter == other.iter
            && self.neval_f == other.neval_f
            && self.neval_grad == other.neval_grad
            && self.neval_hvp == other.neval_hvp
            && feq(self.elapsed_seconds, other.elapsed_seconds)
            && self.status == other.status
            && self.solver == other.solver
    }
}

/// A solver usable in a benchmark matrix.
pub trait BenchSolver: Send + Sync {
    fn id(&self) -> &str;
    /// Runs from the problem's start point within `time_budget` seconds.
    fn run(&self, problem: &SuiteProblem, time_budget: f64) -> Result<BenchRecord, String>;
}

/// The cubic-regularization solver; least-squares problems use its
/// Gauss-Newton path.
#[derive(Debug, Clone, Default)]
pub struct ArcQk {
    pub params: ArcParams,
}

impl BenchSolver for ArcQk {
    fn id(&self) -> &str {
        "arcqk"
    }
    fn run(&self, problem: &SuiteProblem, time_budget: f64) -> Result<BenchRecord, String> {
        let mut params = self.params.clone();
        params.time_budget = params.time_budget.min(time_budget);
        let out = match problem {
            SuiteProblem::Smooth(p) => arcqk_minimize(p.as_ref(), &params),
            SuiteProblem::LeastSquares(p) => arcqk_minimize_gauss_newton(p.as_ref(), &params),
        };
        out.map(|(_, rec)| rec).map_err(|e| e.to_string())
    }
}

/// The trust-region baseline; least-squares problems are run through their
/// Gauss-Newton smooth view.
#[derive(Debug, Clone, Default)]
pub struct SteihaugToint {
    pub params: TrParams,
}

impl BenchSolver for SteihaugToint {
    fn id(&self) -> &str {
        "steihaug_toint"
    }
    fn run(&self, problem: &SuiteProblem, time_budget: f64) -> Result<BenchRecord, String> {
        let mut params = self.params.clone();
        params.time_budget = params.time_budget.min(time_budget);
        let out = match problem {
            SuiteProblem::Smooth(p) => st_minimize(p.as_ref(), &params),
            SuiteProblem::LeastSquares(p) => st_minimize(&GaussNewton::new(p.as_ref()), &params),
        };
        out.map(|(_, rec)| rec).map_err(|e| e.to_string())
    }
}

/// Looks up a built-in solver by id (`arcqk`, or `st` / `steihaug_toint`).
pub fn builtin_solver(id: &str) -> Option<Box<dyn BenchSolver>> {
    match id {
        "arcqk" => Some(Box::new(ArcQk::default())),
        "st" | "steihaug_toint" => Some(Box::new(SteihaugToint::default())),
        _ => None,
    }
}

/// Runs every solver on every problem, in parallel. Errors and panics become
/// `exception` records; the result is sorted by problem, then solver.
pub fn run_matrix(
    problems: &[SuiteProblem],
    solvers: &[&dyn BenchSolver],
    time_budget: f64,
) -> Vec<BenchRecord> {
    let pairs: Vec<(&SuiteProblem, &dyn BenchSolver)> =
        problems.iter().flat_map(|p| solvers.iter().map(move |s| (p, *s))).collect();
    let mut records: Vec<BenchRecord> = pairs
        .into_par_iter()
        .map(|(p, s)| {
            let start = Instant::now();
            match catch_unwind(AssertUnwindSafe(|| s.run(p, time_budget))) {
                Ok(Ok(rec)) => rec,
                Ok(Err(msg)) => {
                    log::warn!("{} on {}: {msg}", s.id(), p.name());
                    BenchRecord::exception(s.id(), p.name(), p.dim(), start.elapsed().as_secs_f64())
                }
                Err(_) => {
                    log::warn!("{} panicked on {}", s.id(), p.name());
                    BenchRecord::exception(s.id(), p.name(), p.dim(), start.elapsed().as_secs_f64())
                }
            }
        })
        .collect();
    records.sort_by(|a, b| (&a.name, a.nvar, &a.solver).cmp(&(&b.name, b.nvar, &b.solver)));
    records
}
