use super::{KrylovError, MultishiftSolution, ShiftBlocks, ShiftStatus, Tolerance, TraceFn};
use crate::shifts::ShiftGrid;
use crate::vecops::{all_finite, dot, norm, scale};

/// Step-wise multishift Lanczos-CG for `(M + λ_i I) x = b` over a grid.
///
/// Every joint iteration costs one application of `M`, whatever the number
/// of shifts. Shifts leave the iteration independently: once a shift is
/// converged, indefinite or capped its quantities are frozen, while the
/// Lanczos basis keeps advancing for the others.
pub struct MultishiftCg<'a, F> {
    apply_m: F,
    n: usize,
    v_prev: Vec<f64>,
    v: Vec<f64>,
    mv: Vec<f64>,
    beta: f64,
    delta: f64,
    blocks: Option<ShiftBlocks>,
    trivial: Option<MultishiftSolution>,
    products: usize,
    steps: usize,
    breakdown: bool,
    trace: Option<TraceFn<'a>>,
}

impl<'a, F: FnMut(&[f64], &mut [f64])> MultishiftCg<'a, F> {
    pub fn new(
        mut apply_m: F,
        b: &[f64],
        grid: &ShiftGrid,
        tol: &Tolerance,
        max_iter: usize,
    ) -> Result<Self, KrylovError> {
        if max_iter == 0 {
            return Err(KrylovError::ZeroMaxIter);
        }
        let n = b.len();
        let tol = tol.resolve(grid.len())?;
        if !all_finite(b) {
            return Err(KrylovError::NonFinite { what: "right-hand side", iteration: 0 });
        }
        let beta0 = norm(b);
        let mut v = b.to_vec();
        let mut mv = vec![0.0; n];
        let (mut blocks, mut trivial, mut delta, mut products) = (None, None, 0.0, 0);
        if beta0 == 0.0 {
            trivial = Some(MultishiftSolution::trivial(grid, n, tol));
        } else {
            scale(1.0 / beta0, &mut v);
            apply_m(&v, &mut mv);
            products = 1;
            if !all_finite(&mv) {
                return Err(KrylovError::NonFinite { what: "operator product", iteration: 0 });
            }
            delta = dot(&v, &mv);
            blocks = Some(ShiftBlocks::new(grid, tol, max_iter, beta0, &v));
        }
        Ok(Self {
            apply_m,
            n,
            v_prev: vec![0.0; n],
            v,
            mv,
            beta: 0.0,
            delta,
            blocks,
            trivial,
            products,
            steps: 0,
            breakdown: false,
            trace: None,
        })
    }

    pub fn with_trace(mut self, trace: impl FnMut(usize, &[f64], &[ShiftStatus]) + 'a) -> Self {
        self.trace = Some(Box::new(trace));
        self
    }

    /// Whether some shift is still iterating.
    pub fn is_running(&self) -> bool {
        self.blocks.as_ref().is_some_and(ShiftBlocks::any_running)
    }

    /// Performs one joint iteration. Returns `false` when nothing was left to do.
    pub fn step(&mut self) -> Result<bool, KrylovError> {
        if !self.is_running() {
            return Ok(false);
        }
        let blocks = self.blocks.as_mut().expect("running implies blocks");
        let n = self.n;
        // w = M v_j − δ_j v_j − β_j v_{j−1}, stored into v_prev
        let mut w = std::mem::take(&mut self.v_prev);
        for k in 0..n {
            w[k] = (self.mv[k] - self.beta * w[k]) - self.delta * self.v[k];
        }
        let beta_next = norm(&w);
        if !beta_next.is_finite() {
            return Err(KrylovError::NonFinite { what: "Lanczos coefficient", iteration: self.steps });
        }
        let exhausted = beta_next <= f64::EPSILON * (1.0 + norm(&self.mv));
        if exhausted {
            self.breakdown = true;
            blocks.step(self.delta, 0.0, None);
            self.v_prev = w;
        } else {
            scale(1.0 / beta_next, &mut w);
            blocks.step(self.delta, beta_next, Some(&w));
            self.v_prev = std::mem::replace(&mut self.v, w);
            self.beta = beta_next;
            (self.apply_m)(&self.v, &mut self.mv);
            self.products += 1;
            if !all_finite(&self.mv) {
                return Err(KrylovError::NonFinite {
                    what: "operator product",
                    iteration: self.steps + 1,
                });
            }
            self.delta = dot(&self.v, &self.mv) - self.beta * dot(&self.v, &self.v_prev);
        }
        let j = self.steps;
        self.steps += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace(j, &blocks.abs_sigma(), &blocks.status);
        }
        Ok(true)
    }

    /// `p_jᵀ(M + λ_i I)p_j` for the current search direction of shift `i`,
    /// recovered from the recurrences as `σ_j²/γ_j`. For a shift flagged
    /// indefinite it is the value at the flagging iteration.
    pub fn curvature_certificate(&self, i: usize) -> f64 {
        match &self.blocks {
            Some(b) => b.certificate(i, self.delta),
            None => 0.0,
        }
    }

    /// Number of joint iterations performed.
    pub fn iteration(&self) -> usize {
        self.steps
    }

    pub fn operator_products(&self) -> usize {
        self.products
    }

    /// Current unit Lanczos vector `v_j`.
    pub fn lanczos_vector(&self) -> &[f64] {
        &self.v
    }

    /// Signed `σ` of shift `i`; its magnitude is the residual norm.
    pub fn sigma(&self, i: usize) -> f64 {
        self.blocks.as_ref().map_or(0.0, |b| b.sigma[i])
    }

    /// Recurred `‖p‖²` of shift `i`.
    pub fn pi(&self, i: usize) -> f64 {
        self.blocks.as_ref().map_or(0.0, |b| b.pi[i])
    }

    pub fn iterate(&self, i: usize) -> &[f64] {
        match &self.blocks {
            Some(b) => &b.x[i],
            None => &self.trivial.as_ref().expect("trivial solve").directions[i],
        }
    }

    pub fn search_direction(&self, i: usize) -> Option<&[f64]> {
        self.blocks.as_ref().map(|b| b.p[i].as_slice())
    }

    pub fn status(&self, i: usize) -> ShiftStatus {
        match &self.blocks {
            Some(b) => b.status[i],
            None => ShiftStatus::Converged,
        }
    }

    /// Runs to completion.
    pub fn finish(mut self) -> Result<MultishiftSolution, KrylovError> {
        while self.step()? {}
        Ok(match (self.trivial, self.blocks) {
            (Some(t), _) => t,
            (None, Some(b)) => b.into_solution(self.products, 0, self.steps, self.breakdown),
            (None, None) => unreachable!("solver always holds blocks or a trivial result"),
        })
    }
}

/// Solves `(M + λ_i I) d_i = b` for every shift of `grid`.
///
/// A shift converges once its recurred residual is within its tolerance,
/// is flagged indefinite when a non-positive CG pivot certifies that
/// `M + λ_i I` is not positive definite, or is capped after `max_iter`
/// iterations. A zero right-hand side gives zero directions at no cost.
pub fn multishift_cg<F: FnMut(&[f64], &mut [f64])>(
    apply_m: F,
    b: &[f64],
    grid: &ShiftGrid,
    tol: &Tolerance,
    max_iter: usize,
) -> Result<MultishiftSolution, KrylovError> {
    MultishiftCg::new(apply_m, b, grid, tol, max_iter)?.finish()
}
