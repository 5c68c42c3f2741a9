//! Built-in desk-scale test problems with analytic derivatives.
//!
//! Each problem carries its customary start point. Dimensions can be changed
//! through [`problem_by_name`] for the scalable ones.

use glob::Pattern;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LeastSquaresProblem, ProblemError, Restart, SmoothProblem};
use crate::vecops::dot;

/// Names of every suite problem, in suite order.
pub const NAMES: &[&str] = &[
    "sphere",
    "diagquad",
    "rosenbrock",
    "extrosenbrock",
    "powell",
    "extpowell",
    "wood",
    "beale",
    "himmelblau",
    "penalty1",
    "trigonometric",
    "convexquartic",
    "rosenbrock_nls",
    "expfit",
    "linear_ls",
];

/// A suite entry: either a general smooth problem or a least-squares one.
pub enum SuiteProblem {
    Smooth(Box<dyn SmoothProblem>),
    LeastSquares(Box<dyn LeastSquaresProblem>),
}

impl SuiteProblem {
    pub fn name(&self) -> &str {
        match self {
            Self::Smooth(p) => p.name(),
            Self::LeastSquares(p) => p.name(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Smooth(p) => p.dim(),
            Self::LeastSquares(p) => p.dim(),
        }
    }

    pub fn x0(&self) -> Vec<f64> {
        match self {
            Self::Smooth(p) => p.x0(),
            Self::LeastSquares(p) => p.x0(),
        }
    }

    pub fn minimizer(&self) -> Option<Vec<f64>> {
        match self {
            Self::Smooth(p) => p.minimizer(),
            Self::LeastSquares(p) => p.minimizer(),
        }
    }

    pub fn as_smooth(&self) -> Option<&dyn SmoothProblem> {
        match self {
            Self::Smooth(p) => Some(p.as_ref()),
            Self::LeastSquares(_) => None,
        }
    }

    pub fn as_least_squares(&self) -> Option<&dyn LeastSquaresProblem> {
        match self {
            Self::LeastSquares(p) => Some(p.as_ref()),
            Self::Smooth(_) => None,
        }
    }

    /// Moves the start point by seeded noise of relative size 10%.
    pub fn perturbed(self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0: Vec<f64> = self
            .x0()
            .into_iter()
            .map(|xi| xi + 0.1 * (1.0 + xi.abs()) * rng.random_range(-1.0..1.0))
            .collect();
        match self {
            Self::Smooth(p) => Self::Smooth(Box::new(Restart::new(p, x0))),
            Self::LeastSquares(p) => Self::LeastSquares(Box::new(Restart::new(p, x0))),
        }
    }
}

/// Selects suite problems.
#[derive(Debug, Clone, PartialEq)]
pub enum SuiteFilter {
    All,
    /// Comma-separated glob patterns matched against problem names.
    Pattern(String),
    /// Problems whose default dimension lies in `min..=max`.
    Size { min: usize, max: usize },
}

impl SuiteFilter {
    /// `all`/`*` select everything, `n=LO..HI` or `n=N` select by size,
    /// anything else is a name pattern.
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        if s.is_empty() || s == "all" || s == "*" {
            return Self::All;
        }
        if let Some(range) = s.strip_prefix("n=") {
            let parsed = match range.split_once("..") {
                Some((lo, hi)) => lo.parse().ok().zip(hi.parse().ok()),
                None => range.parse().ok().map(|n| (n, n)),
            };
            if let Some((min, max)) = parsed {
                return Self::Size { min, max };
            }
        }
        Self::Pattern(s.to_owned())
    }
}

/// Returns the default-sized suite problems selected by `filter`.
pub fn suite_problems(filter: &SuiteFilter) -> Result<Vec<SuiteProblem>, ProblemError> {
    let all = NAMES
        .iter()
        .map(|name| problem_by_name(name, None))
        .collect::<Result<Vec<_>, _>>()?;
    let selected: Vec<SuiteProblem> = match filter {
        SuiteFilter::All => all,
        SuiteFilter::Size { min, max } => {
            all.into_iter().filter(|p| (*min..=*max).contains(&p.dim())).collect()
        }
        SuiteFilter::Pattern(pat) => {
            let patterns = pat
                .split(',')
                .map(|s| Pattern::new(s.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| unknown(&format!("{pat} ({e})")))?;
            let selected: Vec<_> = all
                .into_iter()
                .filter(|p| patterns.iter().any(|pt| pt.matches(p.name())))
                .collect();
            if selected.is_empty() {
                return Err(unknown(pat));
            }
            selected
        }
    };
    Ok(selected)
}

fn unknown(name: &str) -> ProblemError {
    ProblemError::UnknownProblem { name: name.to_owned(), available: NAMES.join(", ") }
}

fn bad_dim(name: &str, n: usize, reason: &str) -> ProblemError {
    ProblemError::InvalidDimension { name: name.to_owned(), n, reason: reason.to_owned() }
}

/// Builds one problem by exact name, optionally overriding its dimension.
pub fn problem_by_name(name: &str, n: Option<usize>) -> Result<SuiteProblem, ProblemError> {
    use SuiteProblem::{LeastSquares as L, Smooth as S};
    let fixed = |default: usize| match n {
        Some(k) if k != default => Err(bad_dim(name, k, &format!("fixed dimension {default}"))),
        _ => Ok(()),
    };
    let positive = |default: usize| match n.unwrap_or(default) {
        0 => Err(bad_dim(name, 0, "dimension must be positive")),
        k => Ok(k),
    };
    let p = match name {
        "sphere" => S(Box::new(Sphere::new(positive(5)?))),
        "diagquad" => S(Box::new(DiagonalQuadratic::new(positive(100)?))),
        "rosenbrock" => {
            fixed(2)?;
            S(Box::new(ExtendedRosenbrock::named("rosenbrock", 2)))
        }
        "extrosenbrock" => {
            let k = positive(100)?;
            if k % 2 != 0 {
                return Err(bad_dim(name, k, "dimension must be even"));
            }
            S(Box::new(ExtendedRosenbrock::named("extrosenbrock", k)))
        }
        "powell" => {
            fixed(4)?;
            S(Box::new(PowellSingular::named("powell", 4)))
        }
        "extpowell" => {
            let k = positive(100)?;
            if k % 4 != 0 {
                return Err(bad_dim(name, k, "dimension must be a multiple of 4"));
            }
            S(Box::new(PowellSingular::named("extpowell", k)))
        }
        "wood" => {
            fixed(4)?;
            S(Box::new(Wood))
        }
        "beale" => {
            fixed(2)?;
            S(Box::new(Beale))
        }
        "himmelblau" => {
            fixed(2)?;
            S(Box::new(Himmelblau))
        }
        "penalty1" => S(Box::new(PenaltyOne::new(positive(10)?))),
        "trigonometric" => S(Box::new(Trigonometric::new(positive(10)?))),
        "convexquartic" => S(Box::new(ConvexQuartic::new(positive(100)?))),
        "rosenbrock_nls" => {
            fixed(2)?;
            L(Box::new(RosenbrockResiduals))
        }
        "expfit" => {
            let m = match n {
                None | Some(2) => 10,
                Some(k) => return Err(bad_dim(name, k, "fixed dimension 2")),
            };
            L(Box::new(ExpFit::new(m)))
        }
        "linear_ls" => {
            let k = positive(10)?;
            L(Box::new(LinearLeastSquares::seeded("linear_ls", 3 * k, k, 2019)))
        }
        _ => return Err(unknown(name)),
    };
    Ok(p)
}

/// `f(x) = ½‖x‖²`.
pub struct Sphere {
    n: usize,
}

impl Sphere {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl SmoothProblem for Sphere {
    fn name(&self) -> &str {
        "sphere"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, x)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.copy_from_slice(x);
    }
    fn hess_vec(&self, _x: &[f64], v: &[f64], hv: &mut [f64]) {
        hv.copy_from_slice(v);
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.n])
    }
}

/// `f(x) = ½ Σ i·x_i²` with Hessian spectrum `{1, …, n}`.
pub struct DiagonalQuadratic {
    n: usize,
}

impl DiagonalQuadratic {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl SmoothProblem for DiagonalQuadratic {
    fn name(&self) -> &str {
        "diagquad"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().enumerate().map(|(i, xi)| (i + 1) as f64 * xi * xi).sum::<f64>()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (i, (gi, xi)) in g.iter_mut().zip(x).enumerate() {
            *gi = (i + 1) as f64 * xi;
        }
    }
    fn hess_vec(&self, _x: &[f64], v: &[f64], hv: &mut [f64]) {
        for (i, (h, vi)) in hv.iter_mut().zip(v).enumerate() {
            *h = (i + 1) as f64 * vi;
        }
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.n])
    }
}

/// Sum of decoupled two-dimensional Rosenbrock functions.
pub struct ExtendedRosenbrock {
    name: &'static str,
    n: usize,
}

impl ExtendedRosenbrock {
    fn named(name: &'static str, n: usize) -> Self {
        debug_assert!(n.is_multiple_of(2));
        Self { name, n }
    }

    pub fn new(n: usize) -> Self {
        Self::named(if n == 2 { "rosenbrock" } else { "extrosenbrock" }, n)
    }
}

impl SmoothProblem for ExtendedRosenbrock {
    fn name(&self) -> &str {
        self.name
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        (0..self.n).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| {
                let (a, b) = (p[0], p[1]);
                100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2)
            })
            .sum()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let (a, b) = (p[0], p[1]);
            let t = b - a * a;
            gp[0] = -400.0 * a * t - 2.0 * (1.0 - a);
            gp[1] = 200.0 * t;
        }
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        for ((p, vp), hp) in x.chunks_exact(2).zip(v.chunks_exact(2)).zip(hv.chunks_exact_mut(2)) {
            let (a, b) = (p[0], p[1]);
            let haa = 1200.0 * a * a - 400.0 * b + 2.0;
            let hab = -400.0 * a;
            hp[0] = haa * vp[0] + hab * vp[1];
            hp[1] = hab * vp[0] + 200.0 * vp[1];
        }
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0; self.n])
    }
}

/// Powell's singular function, extended blockwise in groups of four.
pub struct PowellSingular {
    name: &'static str,
    n: usize,
}

impl PowellSingular {
    fn named(name: &'static str, n: usize) -> Self {
        debug_assert!(n.is_multiple_of(4));
        Self { name, n }
    }
}

impl SmoothProblem for PowellSingular {
    fn name(&self) -> &str {
        self.name
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        (0..self.n).map(|i| [3.0, -1.0, 0.0, 1.0][i % 4]).collect()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x.chunks_exact(4)
            .map(|b| {
                let t1 = b[0] + 10.0 * b[1];
                let t2 = b[2] - b[3];
                let t3 = b[1] - 2.0 * b[2];
                let t4 = b[0] - b[3];
                t1 * t1 + 5.0 * t2 * t2 + t3.powi(4) + 10.0 * t4.powi(4)
            })
            .sum()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (b, gb) in x.chunks_exact(4).zip(g.chunks_exact_mut(4)) {
            let t1 = b[0] + 10.0 * b[1];
            let t2 = b[2] - b[3];
            let t3 = b[1] - 2.0 * b[2];
            let t4 = b[0] - b[3];
            gb[0] = 2.0 * t1 + 40.0 * t4.powi(3);
            gb[1] = 20.0 * t1 + 4.0 * t3.powi(3);
            gb[2] = 10.0 * t2 - 8.0 * t3.powi(3);
            gb[3] = -10.0 * t2 - 40.0 * t4.powi(3);
        }
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        // H = 2aaᵀ + 10bbᵀ + 12t3²ccᵀ + 120t4²eeᵀ per block
        for ((b, vb), hb) in x.chunks_exact(4).zip(v.chunks_exact(4)).zip(hv.chunks_exact_mut(4)) {
            let t3 = b[1] - 2.0 * b[2];
            let t4 = b[0] - b[3];
            let av = 2.0 * (vb[0] + 10.0 * vb[1]);
            let bv = 10.0 * (vb[2] - vb[3]);
            let cv = 12.0 * t3 * t3 * (vb[1] - 2.0 * vb[2]);
            let ev = 120.0 * t4 * t4 * (vb[0] - vb[3]);
            hb[0] = av + ev;
            hb[1] = 10.0 * av + cv;
            hb[2] = bv - 2.0 * cv;
            hb[3] = -bv - ev;
        }
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.n])
    }
}

/// Wood's four-variable function.
pub struct Wood;

impl SmoothProblem for Wood {
    fn name(&self) -> &str {
        "wood"
    }
    fn dim(&self) -> usize {
        4
    }
    fn x0(&self) -> Vec<f64> {
        vec![-3.0, -1.0, -3.0, -1.0]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
        100.0 * (x2 - x1 * x1).powi(2)
            + (1.0 - x1).powi(2)
            + 90.0 * (x4 - x3 * x3).powi(2)
            + (1.0 - x3).powi(2)
            + 10.1 * ((x2 - 1.0).powi(2) + (x4 - 1.0).powi(2))
            + 19.8 * (x2 - 1.0) * (x4 - 1.0)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
        g[0] = -400.0 * x1 * (x2 - x1 * x1) - 2.0 * (1.0 - x1);
        g[1] = 200.0 * (x2 - x1 * x1) + 20.2 * (x2 - 1.0) + 19.8 * (x4 - 1.0);
        g[2] = -360.0 * x3 * (x4 - x3 * x3) - 2.0 * (1.0 - x3);
        g[3] = 180.0 * (x4 - x3 * x3) + 20.2 * (x4 - 1.0) + 19.8 * (x2 - 1.0);
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
        let h11 = 1200.0 * x1 * x1 - 400.0 * x2 + 2.0;
        let h12 = -400.0 * x1;
        let h33 = 1080.0 * x3 * x3 - 360.0 * x4 + 2.0;
        let h34 = -360.0 * x3;
        hv[0] = h11 * v[0] + h12 * v[1];
        hv[1] = h12 * v[0] + 220.2 * v[1] + 19.8 * v[3];
        hv[2] = h33 * v[2] + h34 * v[3];
        hv[3] = 19.8 * v[1] + h34 * v[2] + 200.2 * v[3];
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0; 4])
    }
}

/// Beale's function, `Σ_k (c_k − x1(1 − x2^k))²`.
pub struct Beale;

const BEALE_C: [f64; 3] = [1.5, 2.25, 2.625];

impl SmoothProblem for Beale {
    fn name(&self) -> &str {
        "beale"
    }
    fn dim(&self) -> usize {
        2
    }
    fn x0(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (1..=3)
            .map(|k| (BEALE_C[k - 1] - x[0] * (1.0 - x[1].powi(k as i32))).powi(2))
            .sum()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = 0.0;
        g[1] = 0.0;
        for k in 1..=3 {
            let kf = k as f64;
            let r = BEALE_C[k - 1] - x[0] * (1.0 - x[1].powi(k as i32));
            g[0] += 2.0 * r * -(1.0 - x[1].powi(k as i32));
            g[1] += 2.0 * r * x[0] * kf * x[1].powi(k as i32 - 1);
        }
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        let (mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0);
        for k in 1..=3 {
            let kf = k as f64;
            let ki = k as i32;
            let r = BEALE_C[k - 1] - x[0] * (1.0 - x[1].powi(ki));
            let d1 = -(1.0 - x[1].powi(ki));
            let d2 = x[0] * kf * x[1].powi(ki - 1);
            let d12 = kf * x[1].powi(ki - 1);
            let d22 = if k >= 2 { x[0] * kf * (kf - 1.0) * x[1].powi(ki - 2) } else { 0.0 };
            h11 += 2.0 * d1 * d1;
            h12 += 2.0 * (d1 * d2 + r * d12);
            h22 += 2.0 * (d2 * d2 + r * d22);
        }
        hv[0] = h11 * v[0] + h12 * v[1];
        hv[1] = h12 * v[0] + h22 * v[1];
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![3.0, 0.5])
    }
}

/// Himmelblau's function, four global minima; `(3, 2)` is the reported one.
pub struct Himmelblau;

impl SmoothProblem for Himmelblau {
    fn name(&self) -> &str {
        "himmelblau"
    }
    fn dim(&self) -> usize {
        2
    }
    fn x0(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (x[0] * x[0] + x[1] - 11.0).powi(2) + (x[0] + x[1] * x[1] - 7.0).powi(2)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let r1 = x[0] * x[0] + x[1] - 11.0;
        let r2 = x[0] + x[1] * x[1] - 7.0;
        g[0] = 4.0 * x[0] * r1 + 2.0 * r2;
        g[1] = 2.0 * r1 + 4.0 * x[1] * r2;
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        let r1 = x[0] * x[0] + x[1] - 11.0;
        let r2 = x[0] + x[1] * x[1] - 7.0;
        let h11 = 8.0 * x[0] * x[0] + 4.0 * r1 + 2.0;
        let h12 = 4.0 * (x[0] + x[1]);
        let h22 = 8.0 * x[1] * x[1] + 4.0 * r2 + 2.0;
        hv[0] = h11 * v[0] + h12 * v[1];
        hv[1] = h12 * v[0] + h22 * v[1];
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![3.0, 2.0])
    }
}

/// Penalty function I: `a Σ(x_i − 1)² + (Σx_i² − ¼)²`, `a = 1e-5`.
pub struct PenaltyOne {
    n: usize,
}

const PENALTY_A: f64 = 1e-5;

impl PenaltyOne {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl SmoothProblem for PenaltyOne {
    fn name(&self) -> &str {
        "penalty1"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        (1..=self.n).map(|i| i as f64).collect()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        let s = dot(x, x) - 0.25;
        PENALTY_A * x.iter().map(|xi| (xi - 1.0).powi(2)).sum::<f64>() + s * s
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let s = dot(x, x) - 0.25;
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = 2.0 * PENALTY_A * (xi - 1.0) + 4.0 * xi * s;
        }
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        let s = dot(x, x) - 0.25;
        let xv = dot(x, v);
        for ((h, vi), xi) in hv.iter_mut().zip(v).zip(x) {
            *h = (2.0 * PENALTY_A + 4.0 * s) * vi + 8.0 * xi * xv;
        }
    }
}

/// The trigonometric function, `Σ_i F_i²` with
/// `F_i = n − Σ_j cos x_j + i(1 − cos x_i) − sin x_i`.
pub struct Trigonometric {
    n: usize,
}

impl Trigonometric {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let nf = self.n as f64;
        let sum_cos: f64 = x.iter().map(|xi| xi.cos()).sum();
        x.iter()
            .enumerate()
            .map(|(i, xi)| nf - sum_cos + (i + 1) as f64 * (1.0 - xi.cos()) - xi.sin())
            .collect()
    }

    /// `F`, `sin x` and the Jacobian diagonal `e_i = i sin x_i − cos x_i`.
    fn parts(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let f = self.residuals(x);
        let s: Vec<f64> = x.iter().map(|xi| xi.sin()).collect();
        let e = x
            .iter()
            .enumerate()
            .map(|(i, xi)| (i + 1) as f64 * xi.sin() - xi.cos())
            .collect();
        (f, s, e)
    }
}

impl SmoothProblem for Trigonometric {
    fn name(&self) -> &str {
        "trigonometric"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        vec![1.0 / self.n as f64; self.n]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        let f = self.residuals(x);
        dot(&f, &f)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        // J_ij = s_j + δ_ij e_i, so Jᵀu = s·Σu + e∘u
        let (f, s, e) = self.parts(x);
        let sum_f: f64 = f.iter().sum();
        for j in 0..self.n {
            g[j] = 2.0 * (s[j] * sum_f + e[j] * f[j]);
        }
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        let (f, s, e) = self.parts(x);
        let sum_f: f64 = f.iter().sum();
        let sv = dot(&s, v);
        let jv: Vec<f64> = (0..self.n).map(|i| sv + e[i] * v[i]).collect();
        let sum_jv: f64 = jv.iter().sum();
        for j in 0..self.n {
            let (sj, cj) = x[j].sin_cos();
            let curv = cj * sum_f + f[j] * ((j + 1) as f64 * cj + sj);
            hv[j] = 2.0 * (s[j] * sum_jv + e[j] * jv[j] + curv * v[j]);
        }
    }
}

/// Strictly convex separable quartic `Σ ½c_i x_i² + ¼x_i⁴`, `c_i ∈ [1, 10]`.
pub struct ConvexQuartic {
    n: usize,
}

impl ConvexQuartic {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    fn coeff(&self, i: usize) -> f64 {
        if self.n == 1 {
            1.0
        } else {
            1.0 + 9.0 * i as f64 / (self.n - 1) as f64
        }
    }
}

impl SmoothProblem for ConvexQuartic {
    fn name(&self) -> &str {
        "convexquartic"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn x0(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, xi)| 0.5 * self.coeff(i) * xi * xi + 0.25 * xi.powi(4))
            .sum()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (i, (gi, xi)) in g.iter_mut().zip(x).enumerate() {
            *gi = self.coeff(i) * xi + xi.powi(3);
        }
    }
    fn hess_vec(&self, x: &[f64], v: &[f64], hv: &mut [f64]) {
        for i in 0..self.n {
            hv[i] = (self.coeff(i) + 3.0 * x[i] * x[i]) * v[i];
        }
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.n])
    }
}

/// Rosenbrock written as two residuals, `F = (10(x2 − x1²), 1 − x1)`.
pub struct RosenbrockResiduals;

impl LeastSquaresProblem for RosenbrockResiduals {
    fn name(&self) -> &str {
        "rosenbrock_nls"
    }
    fn dim(&self) -> usize {
        2
    }
    fn nres(&self) -> usize {
        2
    }
    fn x0(&self) -> Vec<f64> {
        vec![-1.2, 1.0]
    }
    fn residual(&self, x: &[f64], r: &mut [f64]) {
        r[0] = 10.0 * (x[1] - x[0] * x[0]);
        r[1] = 1.0 - x[0];
    }
    fn jprod(&self, x: &[f64], v: &[f64], jv: &mut [f64]) {
        jv[0] = -20.0 * x[0] * v[0] + 10.0 * v[1];
        jv[1] = -v[0];
    }
    fn jtprod(&self, x: &[f64], u: &[f64], jtu: &mut [f64]) {
        jtu[0] = -20.0 * x[0] * u[0] - u[1];
        jtu[1] = 10.0 * u[0];
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0, 1.0])
    }
}

/// Zero-residual exponential fit `a·exp(b t_k) − y_k` with data generated
/// from `(a, b) = (2, 0.3)`.
pub struct ExpFit {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl ExpFit {
    pub fn new(m: usize) -> Self {
        let t: Vec<f64> = (0..m).map(|k| 0.5 * k as f64).collect();
        let y = t.iter().map(|tk| 2.0 * (0.3 * tk).exp()).collect();
        Self { t, y }
    }
}

impl LeastSquaresProblem for ExpFit {
    fn name(&self) -> &str {
        "expfit"
    }
    fn dim(&self) -> usize {
        2
    }
    fn nres(&self) -> usize {
        self.t.len()
    }
    fn x0(&self) -> Vec<f64> {
        vec![1.0, 0.0]
    }
    fn residual(&self, x: &[f64], r: &mut [f64]) {
        for ((rk, tk), yk) in r.iter_mut().zip(&self.t).zip(&self.y) {
            *rk = x[0] * (x[1] * tk).exp() - yk;
        }
    }
    fn jprod(&self, x: &[f64], v: &[f64], jv: &mut [f64]) {
        for (jk, tk) in jv.iter_mut().zip(&self.t) {
            let e = (x[1] * tk).exp();
            *jk = e * v[0] + x[0] * tk * e * v[1];
        }
    }
    fn jtprod(&self, x: &[f64], u: &[f64], jtu: &mut [f64]) {
        jtu[0] = 0.0;
        jtu[1] = 0.0;
        for (uk, tk) in u.iter().zip(&self.t) {
            let e = (x[1] * tk).exp();
            jtu[0] += e * uk;
            jtu[1] += x[0] * tk * e * uk;
        }
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![2.0, 0.3])
    }
}

/// Linear residuals `F(x) = A x − b` with a dense row-major `A`.
pub struct LinearLeastSquares {
    name: String,
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    x0: Vec<f64>,
}

impl LinearLeastSquares {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), rows * cols, "A must be rows×cols, row-major");
        assert_eq!(b.len(), rows);
        Self { name: name.into(), rows, cols, a, b, x0: vec![0.0; cols] }
    }

    /// Entries of `A` and `b` uniform in `[−1, 1]` from a seeded generator.
    pub fn seeded(name: impl Into<String>, rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self::new(name, rows, cols, a, b)
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Self {
        assert_eq!(x0.len(), self.cols);
        self.x0 = x0;
        self
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
}

impl LeastSquaresProblem for LinearLeastSquares {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.cols
    }
    fn nres(&self) -> usize {
        self.rows
    }
    fn x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn residual(&self, x: &[f64], r: &mut [f64]) {
        self.jprod(x, x, r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
    }
    fn jprod(&self, _x: &[f64], v: &[f64], jv: &mut [f64]) {
        for (row, out) in self.a.chunks_exact(self.cols).zip(jv.iter_mut()) {
            *out = dot(row, v);
        }
    }
    fn jtprod(&self, _x: &[f64], u: &[f64], jtu: &mut [f64]) {
        jtu.iter_mut().for_each(|v| *v = 0.0);
        for (row, ui) in self.a.chunks_exact(self.cols).zip(u) {
            for (out, aij) in jtu.iter_mut().zip(row) {
                *out += aij * ui;
            }
        }
    }
}
