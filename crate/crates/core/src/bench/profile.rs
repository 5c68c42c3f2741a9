//! Dolan-Moré performance profiles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::{BenchRecord, BenchStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Time,
    NevalF,
    NevalGrad,
    NevalHvp,
    /// `#f + 3·#g`.
    NevalFPlus3G,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Self::Time, Self::NevalF, Self::NevalGrad, Self::NevalHvp, Self::NevalFPlus3G];

    pub fn of(&self, r: &BenchRecord) -> f64 {
        match self {
            Self::Time => r.elapsed_seconds,
            Self::NevalF => r.neval_f as f64,
            Self::NevalGrad => r.neval_grad as f64,
            Self::NevalHvp => r.neval_hvp as f64,
            Self::NevalFPlus3G => (r.neval_f + 3 * r.neval_grad) as f64,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Time => "time",
            Self::NevalF => "neval_f",
            Self::NevalGrad => "neval_grad",
            Self::NevalHvp => "neval_hvp",
            Self::NevalFPlus3G => "neval_f_plus_3g",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = ProfileError;
    fn from_str(s: &str) -> Result<Self, ProfileError> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ProfileError::UnknownMetric(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("no records")]
    Empty,
    #[error("solver `{solver}` has no record for problem `{problem}`")]
    Missing { solver: String, problem: String },
    #[error("duplicate record for solver `{solver}` on problem `{problem}`")]
    Duplicate { solver: String, problem: String },
    #[error("unknown metric `{0}` (expected time, neval_f, neval_grad, neval_hvp or neval_f_plus_3g)")]
    UnknownMetric(String),
}

/// Step function `ρ_s(τ)` of one solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub solver: String,
    /// Per-problem ratios in ascending order; failures are `+∞`.
    pub ratios: Vec<f64>,
    /// Distinct finite ratios, ascending.
    pub taus: Vec<f64>,
    /// `ρ_s` at each entry of `taus`.
    pub rho: Vec<f64>,
}

impl ProfileCurve {
    /// Fraction of problems with ratio `≤ τ`.
    pub fn value(&self, tau: f64) -> f64 {
        if self.ratios.is_empty() {
            return 0.0;
        }
        let count = self.ratios.partition_point(|r| *r <= tau);
        count as f64 / self.ratios.len() as f64
    }

    pub fn solved_fraction(&self) -> f64 {
        self.rho.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub metric: Metric,
    /// One curve per solver, ordered by solver id.
    pub curves: Vec<ProfileCurve>,
    /// Problems left out because the best metric value was zero.
    pub dropped: Vec<String>,
}

impl Profile {
    pub fn curve(&self, solver: &str) -> Option<&ProfileCurve> {
        self.curves.iter().find(|c| c.solver == solver)
    }
}

/// Builds the profile of `metric` over `records`, which must hold exactly one
/// record per (problem, solver) pair. Only successful runs have finite ratios.
pub fn performance_profile(records: &[BenchRecord], metric: Metric) -> Result<Profile, ProfileError> {
    if records.is_empty() {
        return Err(ProfileError::Empty);
    }
    let solvers: BTreeSet<&str> = records.iter().map(|r| r.solver.as_str()).collect();
    let mut table: BTreeMap<(String, usize), BTreeMap<&str, &BenchRecord>> = BTreeMap::new();
    for r in records {
        let row = table.entry((r.name.clone(), r.nvar)).or_default();
        if row.insert(r.solver.as_str(), r).is_some() {
            return Err(ProfileError::Duplicate { solver: r.solver.clone(), problem: r.name.clone() });
        }
    }

    let mut ratios: BTreeMap<&str, Vec<f64>> = solvers.iter().map(|s| (*s, Vec::new())).collect();
    let mut dropped = Vec::new();
    for ((name, nvar), row) in &table {
        if let Some(s) = solvers.iter().find(|s| !row.contains_key(*s)) {
            return Err(ProfileError::Missing { solver: (*s).to_owned(), problem: name.clone() });
        }
        let value = |r: &BenchRecord| {
            let v = metric.of(r);
            (r.status == BenchStatus::Success && v.is_finite()).then_some(v)
        };
        let best = row.values().filter_map(|r| value(r)).fold(f64::INFINITY, f64::min);
        if best == 0.0 {
            log::warn!("dropping {name} (n={nvar}) from the {metric} profile: best value is zero");
            dropped.push(name.clone());
            continue;
        }
        for (s, r) in row {
            let ratio = match value(r) {
                Some(v) if best.is_finite() => v / best,
                _ => f64::INFINITY,
            };
            ratios.get_mut(s).expect("solver listed").push(ratio);
        }
    }

    let curves = ratios
        .into_iter()
        .map(|(solver, mut rs)| {
            rs.sort_by(f64::total_cmp);
            let np = rs.len() as f64;
            let mut taus = Vec::new();
            let mut rho = Vec::new();
            for (i, r) in rs.iter().enumerate() {
                if !r.is_finite() {
                    break;
                }
                if rs.get(i + 1) == Some(r) {
                    continue;
                }
                taus.push(*r);
                rho.push((i + 1) as f64 / np);
            }
            ProfileCurve { solver: solver.to_owned(), ratios: rs, taus, rho }
        })
        .collect();
    Ok(Profile { metric, curves, dropped })
}
