//! Matrix-free unconstrained optimization by adaptive cubic regularization.
//!
//! Every outer iteration of [`arc::arcqk_minimize`] solves the shifted Newton
//! systems `(H + λ_i I) d = −g` for a whole grid of shifts with a single
//! multishift Krylov solve ([`krylov`]), then picks the shift whose step best
//! matches the cubic regularization `λ = ‖d‖/α`. A truncated-CG trust-region
//! solver ([`trust_region`]) serves as the baseline, and [`bench`] runs solver
//! comparisons and performance profiles over the built-in [`problem`] suite.

pub mod arc;
pub mod bench;
pub mod krylov;
pub mod outcome;
pub mod problem;
pub mod shifts;
pub mod trust_region;
pub mod vecops;

pub use arc::{arcqk_minimize, arcqk_minimize_gauss_newton, ArcParams, ArcState};
pub use outcome::{SolveError, Status};
pub use shifts::ShiftGrid;
pub use trust_region::{st_minimize, TrParams};
