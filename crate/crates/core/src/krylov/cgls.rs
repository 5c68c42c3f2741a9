use super::{KrylovError, MultishiftSolution, ShiftBlocks, ShiftStatus, Tolerance, TraceFn};
use crate::shifts::ShiftGrid;
use crate::vecops::{all_finite, dot, norm, scale};

/// Step-wise multishift Lanczos-CGLS for `(AᵀA + λ_i I) x = Aᵀb`.
///
/// The Lanczos basis of `AᵀA` is generated through auxiliary vectors `u_j`
/// with `Aᵀu_j = v_j`, so only products with `A` and `Aᵀ` are needed.
pub struct MultishiftCgls<'a, FA, FT> {
    apply_a: FA,
    apply_at: FT,
    u_prev: Vec<f64>,
    u: Vec<f64>,
    /// `A v_j`
    av: Vec<f64>,
    v: Vec<f64>,
    beta: f64,
    delta: f64,
    blocks: Option<ShiftBlocks>,
    trivial: Option<MultishiftSolution>,
    products_a: usize,
    products_at: usize,
    steps: usize,
    breakdown: bool,
    rhs: Vec<f64>,
    track_ls_residual: bool,
    trace: Option<TraceFn<'a>>,
}

impl<'a, FA, FT> MultishiftCgls<'a, FA, FT>
where
    FA: FnMut(&[f64], &mut [f64]),
    FT: FnMut(&[f64], &mut [f64]),
{
    /// `n` is the number of unknowns; `b` has one entry per row of `A`.
    pub fn new(
        mut apply_a: FA,
        mut apply_at: FT,
        n: usize,
        b: &[f64],
        grid: &ShiftGrid,
        tol: &Tolerance,
        max_iter: usize,
    ) -> Result<Self, KrylovError> {
        if max_iter == 0 {
            return Err(KrylovError::ZeroMaxIter);
        }
        let tol = tol.resolve(grid.len())?;
        if !all_finite(b) {
            return Err(KrylovError::NonFinite { what: "right-hand side", iteration: 0 });
        }
        let rows = b.len();
        let mut u = b.to_vec();
        let mut v = vec![0.0; n];
        let mut av = vec![0.0; rows];
        apply_at(&u, &mut v);
        if !all_finite(&v) {
            return Err(KrylovError::NonFinite { what: "adjoint product", iteration: 0 });
        }
        let beta0 = norm(&v);
        let (mut blocks, mut trivial, mut delta, mut products_a) = (None, None, 0.0, 0);
        if beta0 == 0.0 {
            trivial = Some(MultishiftSolution::trivial(grid, n, tol));
        } else {
            scale(1.0 / beta0, &mut v);
            scale(1.0 / beta0, &mut u);
            apply_a(&v, &mut av);
            products_a = 1;
            if !all_finite(&av) {
                return Err(KrylovError::NonFinite { what: "operator product", iteration: 0 });
            }
            delta = dot(&av, &av);
            blocks = Some(ShiftBlocks::new(grid, tol, max_iter, beta0, &v));
        }
        if let Some(t) = trivial.as_mut() {
            t.adjoint_products = 1;
        }
        Ok(Self {
            apply_a,
            apply_at,
            u_prev: vec![0.0; rows],
            u,
            av,
            v,
            beta: 0.0,
            delta,
            blocks,
            trivial,
            products_a,
            products_at: 1,
            steps: 0,
            breakdown: false,
            rhs: b.to_vec(),
            track_ls_residual: false,
            trace: None,
        })
    }

    pub fn with_trace(mut self, trace: impl FnMut(usize, &[f64], &[ShiftStatus]) + 'a) -> Self {
        self.trace = Some(Box::new(trace));
        self
    }

    /// Also report `‖b − A d_i‖` per shift, at the cost of one extra product
    /// with `A` per shift after the solve (counted in `operator_products`).
    pub fn with_ls_residual(mut self, on: bool) -> Self {
        self.track_ls_residual = on;
        self
    }

    pub fn is_running(&self) -> bool {
        self.blocks.as_ref().is_some_and(ShiftBlocks::any_running)
    }

    pub fn step(&mut self) -> Result<bool, KrylovError> {
        if !self.is_running() {
            return Ok(false);
        }
        let blocks = self.blocks.as_mut().expect("running implies blocks");
        // u_{j+1} = A v_j − δ_j u_j − β_j u_{j−1}, reusing u_{j−1}'s storage
        let mut u_next = std::mem::take(&mut self.u_prev);
        for k in 0..u_next.len() {
            u_next[k] = self.av[k] - self.delta * self.u[k] - self.beta * u_next[k];
        }
        let mut v_next = vec![0.0; self.v.len()];
        (self.apply_at)(&u_next, &mut v_next);
        self.products_at += 1;
        if !all_finite(&v_next) {
            return Err(KrylovError::NonFinite { what: "adjoint product", iteration: self.steps });
        }
        let beta_next = norm(&v_next);
        let exhausted = beta_next <= f64::EPSILON * (1.0 + self.delta + self.beta);
        if exhausted {
            self.breakdown = true;
            blocks.step(self.delta, 0.0, None);
            self.u_prev = u_next;
        } else {
            scale(1.0 / beta_next, &mut v_next);
            scale(1.0 / beta_next, &mut u_next);
            blocks.step(self.delta, beta_next, Some(&v_next));
            self.u_prev = std::mem::replace(&mut self.u, u_next);
            self.v = v_next;
            self.beta = beta_next;
            (self.apply_a)(&self.v, &mut self.av);
            self.products_a += 1;
            if !all_finite(&self.av) {
                return Err(KrylovError::NonFinite {
                    what: "operator product",
                    iteration: self.steps + 1,
                });
            }
            self.delta = dot(&self.av, &self.av);
        }
        let j = self.steps;
        self.steps += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace(j, &blocks.abs_sigma(), &blocks.status);
        }
        Ok(true)
    }

    pub fn iteration(&self) -> usize {
        self.steps
    }

    pub fn lanczos_vector(&self) -> &[f64] {
        &self.v
    }

    /// The auxiliary vector `u_j`, satisfying `Aᵀu_j = v_j`.
    pub fn auxiliary_vector(&self) -> &[f64] {
        &self.u
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.blocks.as_ref().map_or(0.0, |b| b.sigma[i])
    }

    pub fn iterate(&self, i: usize) -> &[f64] {
        match &self.blocks {
            Some(b) => &b.x[i],
            None => &self.trivial.as_ref().expect("trivial solve").directions[i],
        }
    }

    pub fn finish(mut self) -> Result<MultishiftSolution, KrylovError> {
        while self.step()? {}
        let mut sol = match (self.trivial, self.blocks) {
            (Some(t), _) => t,
            (None, Some(b)) => b.into_solution(self.products_a, self.products_at, self.steps, self.breakdown),
            (None, None) => unreachable!("solver always holds blocks or a trivial result"),
        };
        if self.track_ls_residual {
            let mut ad = vec![0.0; self.rhs.len()];
            let mut norms = Vec::with_capacity(sol.len());
            for d in &sol.directions {
                (self.apply_a)(d, &mut ad);
                sol.operator_products += 1;
                norms.push(ad.iter().zip(&self.rhs).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt());
            }
            sol.ls_residual_norms = Some(norms);
        }
        Ok(sol)
    }
}

/// Solves the regularized normal equations `(AᵀA + λ_i I) d_i = Aᵀb` for
/// every shift, using only products with `A` (`n → rows`) and `Aᵀ`.
///
/// Residual norms refer to the shifted system `Aᵀb − (AᵀA + λ_i I) d_i`. The
/// Gram operator is positive semidefinite, so no shift is ever indefinite.
pub fn multishift_cgls<FA, FT>(
    apply_a: FA,
    apply_at: FT,
    n: usize,
    b: &[f64],
    grid: &ShiftGrid,
    tol: &Tolerance,
    max_iter: usize,
) -> Result<MultishiftSolution, KrylovError>
where
    FA: FnMut(&[f64], &mut [f64]),
    FT: FnMut(&[f64], &mut [f64]),
{
    MultishiftCgls::new(apply_a, apply_at, n, b, grid, tol, max_iter)?.finish()
}
