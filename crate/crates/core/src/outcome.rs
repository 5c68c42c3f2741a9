//! Termination bookkeeping shared by the outer solvers.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krylov::KrylovError;
use crate::shifts::GridError;

/// Why an outer solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    FirstOrderStationary,
    MaxIter,
    TimeExceeded,
    /// The objective evaluated to NaN or −∞ at a trial point.
    UnboundedBelow,
    /// No shift of the grid was large enough to produce an acceptable step.
    GridExhausted,
    /// Negative curvature was found for every shift of the grid.
    HessianTooIndefinite,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Running => "running",
            Self::FirstOrderStationary => "first_order_stationary",
            Self::MaxIter => "max_iter",
            Self::TimeExceeded => "time_exceeded",
            Self::UnboundedBelow => "unbounded_below",
            Self::GridExhausted => "grid_exhausted",
            Self::HessianTooIndefinite => "hessian_too_indefinite",
        };
        f.write_str(s)
    }
}

/// Errors that abort a solve; recoverable outcomes are [`Status`] values.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("start point has length {got}, problem dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
    #[error("subproblem solve failed at iteration {iteration}: {source}")]
    Krylov { iteration: usize, source: KrylovError },
}

/// `‖g‖ ≤ eps_abs + eps_rel·‖g₀‖`.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    threshold: f64,
}

impl StopRule {
    pub fn new(eps_abs: f64, eps_rel: f64, g0_norm: f64) -> Self {
        Self { threshold: eps_abs + eps_rel * g0_norm }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn satisfied(&self, g_norm: f64) -> bool {
        g_norm <= self.threshold
    }
}

/// Wall-clock budget started at construction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Clock {
    start: Instant,
    budget: Option<Duration>,
}

impl Clock {
    pub(crate) fn start(budget_seconds: f64) -> Self {
        let budget = (budget_seconds.is_finite()).then(|| Duration::from_secs_f64(budget_seconds));
        Self { start: Instant::now(), budget }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub(crate) fn expired(&self) -> bool {
        self.budget.is_some_and(|b| self.start.elapsed() >= b)
    }
}

/// Quadratic-model decreases at or below this level are treated as zero.
pub fn degenerate_decrease(f: f64) -> f64 {
    64.0 * f64::EPSILON * (1.0 + f.abs())
}

pub(crate) fn check_unit_interval(name: &'static str, v: f64) -> Result<(), SolveError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(SolveError::InvalidParam { name, reason: format!("{v} must lie in (0, 1)") })
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<(), SolveError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SolveError::InvalidParam { name, reason: format!("{v} must be positive and finite") })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, v: f64) -> Result<(), SolveError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SolveError::InvalidParam { name, reason: format!("{v} must be non-negative") })
    }
}

pub(crate) fn parse_value<T: std::str::FromStr>(name: &'static str, s: &str) -> Result<T, SolveError>
where
    T::Err: fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e: T::Err| SolveError::InvalidParam { name, reason: format!("`{s}`: {e}") })
}
