//! Regularization shift grids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest admissible shift.
pub const MIN_SHIFT: f64 = 1e-15;
/// Largest admissible shift.
pub const MAX_SHIFT: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("shift grid is empty")]
    Empty,
    #[error("shift {index} = {value} is outside [{MIN_SHIFT:e}, {MAX_SHIFT:e}]")]
    OutOfRange { index: usize, value: f64 },
    #[error("shifts must be strictly increasing (λ[{index}] = {value} after {prev})")]
    NotIncreasing { index: usize, value: f64, prev: f64 },
    #[error("invalid geometric grid: {0}")]
    Geometric(String),
}

/// Strictly increasing positive shifts `λ_0 < … < λ_m`.
///
/// `beta` is the sampling factor: consecutive shifts of a geometric grid
/// satisfy `λ_{i+1} = β²·λ_i`. For an arbitrary list it is the square root of
/// the widest consecutive ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ShiftGrid {
    lambdas: Vec<f64>,
    beta: f64,
}

impl ShiftGrid {
    pub fn new(lambdas: Vec<f64>) -> Result<Self, GridError> {
        if lambdas.is_empty() {
            return Err(GridError::Empty);
        }
        for (index, &value) in lambdas.iter().enumerate() {
            if !(MIN_SHIFT..=MAX_SHIFT).contains(&value) {
                return Err(GridError::OutOfRange { index, value });
            }
            if index > 0 && value <= lambdas[index - 1] {
                return Err(GridError::NotIncreasing { index, value, prev: lambdas[index - 1] });
            }
        }
        let ratio = lambdas.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max);
        Ok(Self { lambdas, beta: ratio.sqrt() })
    }

    /// `λ_i = base^i` for `i = lo..=hi`, so `β = √base`.
    pub fn geometric(base: f64, lo: i32, hi: i32) -> Result<Self, GridError> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(GridError::Geometric(format!("base {base} must exceed 1")));
        }
        if lo > hi {
            return Err(GridError::Geometric(format!("empty exponent range {lo}..={hi}")));
        }
        let lambdas = (lo..=hi).map(|i| base.powi(i)).collect();
        let mut grid = Self::new(lambdas)?;
        grid.beta = base.sqrt();
        Ok(grid)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// The 31 shifts `10^i`, `i = −15..15`.
impl Default for ShiftGrid {
    fn default() -> Self {
        Self::geometric(10.0, -15, 15).expect("default grid is valid")
    }
}

impl TryFrom<Vec<f64>> for ShiftGrid {
    type Error = GridError;
    fn try_from(v: Vec<f64>) -> Result<Self, GridError> {
        Self::new(v)
    }
}

impl From<ShiftGrid> for Vec<f64> {
    fn from(g: ShiftGrid) -> Self {
        g.lambdas
    }
}
