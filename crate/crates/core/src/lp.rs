//! Dense bounded-variable primal simplex.
//!
//! Solves
//!
//! ```text
//! minimize    c·x
//! subject to  A x = b
//!             0 <= x_j <= u_j      (u_j may be +inf)
//! ```
//!
//! with a two-phase method on an explicit tableau. The tableau keeps one
//! artificial column per row for the whole solve so that the simplex
//! multipliers of the original rows can be read off the reduced costs.
//!
//! Pricing is devex; after a run of degenerate pivots the solver switches to
//! Bland's rule until the objective moves again, which rules out cycling.
//!
//! Programs with many zero right-hand sides stall badly on degenerate
//! pivots, so the right-hand side is shifted by tiny random amounts. The
//! shifted program is what the solver iterates on and keeps as its warm
//! state; each reported solution comes from a copy with the exact
//! right-hand side restored and primal feasibility repaired by a few dual
//! simplex pivots. A solved program can be re-optimized for a new cost
//! vector starting from the previous basis ([`Simplex::reoptimize`]).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("problem is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("problem is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("singular basis during refactorization")]
    SingularBasis,
}

/// A linear program in equality form with box bounds `[0, upper]`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols` constraint matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(rows: usize, cols: usize) -> Self {
        LpProblem {
            rows,
            cols,
            a: vec![0.0; rows * cols],
            b: vec![0.0; rows],
            c: vec![0.0; cols],
            upper: vec![f64::INFINITY; cols],
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.a[row * self.cols + col] = v;
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.cols + col]
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.a.len() != self.rows * self.cols
            || self.b.len() != self.rows
            || self.c.len() != self.cols
            || self.upper.len() != self.cols
        {
            return Err(LpError::Malformed("dimension mismatch".into()));
        }
        if self.upper.iter().any(|&u| u.is_nan() || u < 0.0) {
            return Err(LpError::Malformed("upper bounds must be >= 0".into()));
        }
        if self.a.iter().chain(&self.b).chain(&self.c).any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite coefficient".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers of the rows of `A`, so that `c - Aᵀπ` are the
    /// reduced costs.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural columns.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 64;
const REFACTOR_EVERY: usize = 2000;
/// Relative size of the right-hand-side shift.
const PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone)]
pub struct Simplex {
    rows: usize,
    cols: usize,
    width: usize,
    problem: LpProblem,
    /// Right-hand side being iterated on; `problem.b` plus any shift.
    rhs: Vec<f64>,
    /// +1 or -1 per row so that the scaled right-hand side is non-negative.
    row_sign: Vec<f64>,
    tableau: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    /// Devex reference weights.
    weights: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

impl Simplex {
    /// Sets up the tableau and runs phase one on a shifted right-hand side,
    /// falling back to the exact one when the shift makes it infeasible.
    pub fn new(problem: LpProblem) -> Result<Self, LpError> {
        problem.validate()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let shifted: Vec<f64> = problem
            .b
            .iter()
            .map(|&b| b + PERTURBATION * (1.0 + b.abs()) * rng.random_range(0.5..1.0))
            .collect();
        match Self::with_rhs(problem.clone(), shifted) {
            Err(LpError::Infeasible(_)) => {
                let rhs = problem.b.clone();
                Self::with_rhs(problem, rhs)
            }
            other => other,
        }
    }

    fn with_rhs(problem: LpProblem, rhs: Vec<f64>) -> Result<Self, LpError> {
        let (rows, cols) = (problem.rows, problem.cols);
        let width = cols + rows;
        let row_sign: Vec<f64> = rhs
            .iter()
            .map(|&b| if b < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let mut tableau = vec![0.0; rows * width];
        for i in 0..rows {
            let s = row_sign[i];
            let dst = &mut tableau[i * width..(i + 1) * width];
            for (d, &v) in dst[..cols].iter_mut().zip(&problem.a[i * cols..(i + 1) * cols]) {
                *d = s * v;
            }
            dst[cols + i] = 1.0;
        }
        let beta: Vec<f64> = rhs.iter().zip(&row_sign).map(|(b, s)| b * s).collect();
        let mut upper = problem.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, rows));
        let mut status = vec![Status::Lower; width];
        for s in &mut status[cols..] {
            *s = Status::Basic;
        }
        let mut lp = Simplex {
            rows,
            cols,
            width,
            basis: (cols..width).collect(),
            problem,
            rhs,
            row_sign,
            tableau,
            beta,
            status,
            upper,
            cost: vec![0.0; width],
            reduced: vec![0.0; width],
            weights: vec![1.0; width],
            iterations: 0,
            max_iterations: 50 * (width + rows).max(1000),
        };
        lp.phase_one()?;
        Ok(lp)
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        let mut cost = vec![0.0; self.width];
        for c in &mut cost[self.cols..] {
            *c = 1.0;
        }
        self.set_cost(cost);
        self.iterate(true)?;
        let residual: f64 = (0..self.rows)
            .filter(|&i| self.basis[i] >= self.cols)
            .map(|i| self.beta[i].abs())
            .sum();
        if residual > FEAS_TOL * (1.0 + self.rhs.iter().map(|b| b.abs()).sum::<f64>()) {
            return Err(LpError::Infeasible(residual));
        }
        // Artificials are pinned at zero from here on; basic ones leave on
        // the first pivot that would move them.
        for j in self.cols..self.width {
            self.upper[j] = 0.0;
        }
        for i in 0..self.rows {
            if self.basis[i] >= self.cols {
                self.beta[i] = 0.0;
            }
        }
        Ok(())
    }

    /// Solves phase two for the problem's own cost vector.
    pub fn optimize(&mut self) -> Result<LpSolution, LpError> {
        let c = self.problem.c.clone();
        self.reoptimize(&c)
    }

    /// Replaces the cost vector and re-optimizes from the current basis.
    /// The feasible region is unchanged so no phase one is needed. The
    /// iteration budget and count start afresh.
    pub fn reoptimize(&mut self, c: &[f64]) -> Result<LpSolution, LpError> {
        if c.len() != self.cols || c.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("cost vector".into()));
        }
        self.problem.c = c.to_vec();
        self.iterations = 0;
        let mut cost = c.to_vec();
        cost.extend(std::iter::repeat_n(0.0, self.rows));
        self.set_cost(cost);
        self.converge()?;
        if self.rhs == self.problem.b {
            return Ok(self.solution());
        }
        let mut exact = self.clone();
        exact.iterations = 0;
        exact.rhs.clone_from(&exact.problem.b);
        if exact.rows > 0 {
            let lu = exact.basis_lu();
            exact.set_beta(&lu)?;
        }
        exact.dual_cleanup()?;
        exact.converge()?;
        let mut sol = exact.solution();
        sol.iterations += self.iterations;
        Ok(sol)
    }

    /// Primal iterations until the polished basis is optimal.
    fn converge(&mut self) -> Result<(), LpError> {
        for attempt in 0..3 {
            self.iterate(false)?;
            self.polish()?;
            if self.is_optimal() {
                return Ok(());
            }
            if attempt < 2 {
                self.refactor()?;
            }
        }
        Err(LpError::IterationLimit(self.iterations))
    }

    /// Bounded dual simplex: restores primal feasibility of a dual feasible
    /// basis whose basic values sit slightly outside their bounds.
    fn dual_cleanup(&mut self) -> Result<(), LpError> {
        let w = self.width;
        let limit = self.iterations + self.max_iterations;
        loop {
            // Most violated basic variable.
            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..self.rows {
                let u = self.upper[self.basis[i]];
                let v = self.beta[i];
                let (gap, target) = if v < -FEAS_TOL {
                    (-v, 0.0)
                } else if v > u + FEAS_TOL {
                    (v - u, u)
                } else {
                    continue;
                };
                if leave.is_none_or(|(_, g, _)| gap > g) {
                    leave = Some((i, gap, target));
                }
            }
            let Some((r, _, target)) = leave else {
                return Ok(());
            };
            if self.iterations >= limit {
                return Err(LpError::IterationLimit(self.iterations));
            }
            self.iterations += 1;
            let below = self.beta[r] < target;
            // Dual ratio test over columns that can move x_B(r) toward target.
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..w {
                let a = self.tableau[r * w + j];
                let ok = match self.status[j] {
                    Status::Basic => false,
                    _ if self.upper[j] == 0.0 => false,
                    Status::Lower => (if below { -a } else { a }) > PIVOT_TOL,
                    Status::Upper => (if below { a } else { -a }) > PIVOT_TOL,
                };
                if !ok {
                    continue;
                }
                let ratio = self.reduced[j].abs() / a.abs();
                let take = match best {
                    None => true,
                    Some((_, br, ba)) => ratio < br - OPT_TOL || (ratio <= br + OPT_TOL && a.abs() > ba),
                };
                if take {
                    best = Some((j, ratio, a.abs()));
                }
            }
            let Some((j, _, _)) = best else {
                return Err(LpError::Infeasible(self.beta[r]));
            };
            let a = self.tableau[r * w + j];
            let delta = (self.beta[r] - target) / a;
            for i in 0..self.rows {
                let t = self.tableau[i * w + j];
                if t != 0.0 {
                    self.beta[i] -= t * delta;
                }
            }
            let start = if self.status[j] == Status::Upper { self.upper[j] } else { 0.0 };
            let old = self.basis[r];
            self.status[old] = if below { Status::Lower } else { Status::Upper };
            self.status[j] = Status::Basic;
            self.basis[r] = j;
            self.beta[r] = start + delta;
            self.pivot(r, j);
        }
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.weights.fill(1.0);
        self.recompute_reduced();
    }

    fn recompute_reduced(&mut self) {
        self.reduced.clone_from(&self.cost);
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tableau[i * self.width..(i + 1) * self.width];
                for (d, &t) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * t;
                }
            }
        }
        for &j in &self.basis {
            self.reduced[j] = 0.0;
        }
    }

    fn eligible(&self, j: usize, phase_one: bool) -> bool {
        if !phase_one && j >= self.cols {
            return false;
        }
        let d = self.reduced[j];
        match self.status[j] {
            Status::Basic => false,
            Status::Lower => d < -OPT_TOL && self.upper[j] > 0.0,
            Status::Upper => d > OPT_TOL,
        }
    }

    fn is_optimal(&self) -> bool {
        (0..self.width).all(|j| !self.eligible(j, false))
    }

    fn iterate(&mut self, phase_one: bool) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..self.width).find(|&j| self.eligible(j, phase_one))
            } else {
                let score = |j: usize| self.reduced[j] * self.reduced[j] / self.weights[j];
                (0..self.width)
                    .filter(|&j| self.eligible(j, phase_one))
                    .max_by(|&a, &b| score(a).total_cmp(&score(b)))
            };
            let Some(j) = entering else {
                return Ok(());
            };
            self.iterations += 1;
            let step = self.step(j, bland)?;
            if step > FEAS_TOL {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                since_refactor = 0;
            }
        }
    }

    /// One ratio test and pivot (or bound flip) for entering column `j`.
    /// Returns the step length.
    fn step(&mut self, j: usize, bland: bool) -> Result<f64, LpError> {
        let w = self.width;
        let dir = if self.status[j] == Status::Lower { 1.0 } else { -1.0 };
        // (row, bound the leaving variable lands on, ratio, |pivot|)
        let mut best: Option<(usize, Status, f64, f64)> = None;
        for i in 0..self.rows {
            let t = dir * self.tableau[i * w + j];
            let (ratio, to) = if t > PIVOT_TOL {
                (self.beta[i].max(0.0) / t, Status::Lower)
            } else if t < -PIVOT_TOL && self.upper[self.basis[i]].is_finite() {
                (
                    (self.upper[self.basis[i]] - self.beta[i]).max(0.0) / -t,
                    Status::Upper,
                )
            } else {
                continue;
            };
            let take = match best {
                None => true,
                Some((r, _, br, bp)) => {
                    ratio < br - FEAS_TOL
                        || (ratio <= br + FEAS_TOL
                            && if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                t.abs() > bp
                            })
                }
            };
            if take {
                best = Some((i, to, ratio, t.abs()));
            }
        }
        let (theta, leave) = match best {
            Some((r, to, ratio, _)) if ratio <= self.upper[j] => (ratio, Some((r, to))),
            _ if self.upper[j].is_finite() => (self.upper[j], None),
            _ => return Err(LpError::Unbounded),
        };
        // Basic values move along the column.
        for i in 0..self.rows {
            let t = self.tableau[i * w + j];
            if t != 0.0 {
                self.beta[i] -= dir * theta * t;
            }
        }
        match leave {
            None => {
                // Bound flip.
                self.status[j] = if self.status[j] == Status::Lower {
                    Status::Upper
                } else {
                    Status::Lower
                };
            }
            Some((r, to)) => {
                let entering_value = if self.status[j] == Status::Lower {
                    theta
                } else {
                    self.upper[j] - theta
                };
                let old = self.basis[r];
                self.status[old] = to;
                self.status[j] = Status::Basic;
                self.basis[r] = j;
                self.beta[r] = entering_value;
                self.pivot(r, j);
                self.update_weights(r, j, old);
            }
        }
        Ok(theta)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.tableau[r * w + j];
        {
            let row = &mut self.tableau[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[j] = 1.0;
        }
        let (before, rest) = self.tableau.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        // The tableaus met here are sparse for many pivots; touch only the
        // pivot row's nonzeros.
        let nz: Vec<usize> = (0..w).filter(|&c| pivot_row[c] != 0.0).collect();
        let dense = nz.len() * 3 > w;
        let eliminate = |row: &mut [f64]| {
            let f = row[j];
            if f != 0.0 {
                if dense {
                    for (v, &pv) in row.iter_mut().zip(pivot_row.iter()) {
                        *v -= f * pv;
                    }
                } else {
                    for &c in &nz {
                        row[c] -= f * pivot_row[c];
                    }
                }
                row[j] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        let f = self.reduced[j];
        if f != 0.0 {
            for &c in &nz {
                self.reduced[c] -= f * pivot_row[c];
            }
            self.reduced[j] = 0.0;
        }
    }

    /// Devex update after pivoting `entering` into row `r` in place of
    /// `leaving`. Row `r` already holds the normalized pivot row.
    fn update_weights(&mut self, r: usize, entering: usize, leaving: usize) {
        let w = self.width;
        let row = &self.tableau[r * w..(r + 1) * w];
        let wq = self.weights[entering];
        for (k, &a) in row.iter().enumerate() {
            if a != 0.0 && self.status[k] != Status::Basic {
                let cand = a * a * wq;
                if cand > self.weights[k] {
                    self.weights[k] = cand;
                }
            }
        }
        // Leaving variable: alpha_{r,leaving} after pivoting is 1/alpha_rq.
        let a = row[leaving];
        self.weights[leaving] = (a * a * wq).max(1.0);
        self.weights[entering] = 1.0;
    }

    /// Column `j` of the sign-scaled constraint matrix `[S A | I]`.
    fn original_column(&self, j: usize) -> DVector<f64> {
        if j < self.cols {
            DVector::from_fn(self.rows, |i, _| self.row_sign[i] * self.problem.get(i, j))
        } else {
            let mut e = DVector::zeros(self.rows);
            e[j - self.cols] = 1.0;
            e
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let m = self.rows;
        let mut b = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            b.set_column(k, &self.original_column(j));
        }
        b
    }

    fn basis_lu(&self) -> nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
        self.basis_matrix().lu()
    }

    fn basic_rhs(&self) -> DVector<f64> {
        let mut rhs = DVector::from_fn(self.rows, |i, _| self.row_sign[i] * self.rhs[i]);
        for j in 0..self.width {
            if self.status[j] == Status::Upper {
                rhs -= self.original_column(j) * self.upper[j];
            }
        }
        rhs
    }

    /// Recomputes basic values and reduced costs from a fresh factorization
    /// of the basis, leaving the tableau body untouched.
    fn polish(&mut self) -> Result<(), LpError> {
        if self.rows == 0 {
            return Ok(());
        }
        let lu = self.basis_lu();
        self.set_beta(&lu)?;
        // PB = LU, so Bᵀπ = c_B is Uᵀ Lᵀ (Pπ) = c_B.
        let cb = DVector::from_fn(self.rows, |i, _| self.cost[self.basis[i]]);
        let z = lu.u().tr_solve_upper_triangular(&cb).ok_or(LpError::SingularBasis)?;
        let mut pi = lu.l().tr_solve_lower_triangular(&z).ok_or(LpError::SingularBasis)?;
        lu.p().inv_permute_rows(&mut pi);
        for j in 0..self.width {
            self.reduced[j] = if self.status[j] == Status::Basic {
                0.0
            } else {
                self.cost[j] - self.original_column(j).dot(&pi)
            };
        }
        Ok(())
    }

    fn set_beta(&mut self, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Result<(), LpError> {
        let beta = lu.solve(&self.basic_rhs()).ok_or(LpError::SingularBasis)?;
        self.beta.copy_from_slice(beta.as_slice());
        Ok(())
    }

    /// Rebuilds tableau, basic values and reduced costs from the basis to
    /// shed accumulated rounding error.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.rows;
        if m == 0 {
            return Ok(());
        }
        let lu = self.basis_lu();
        self.set_beta(&lu)?;
        // Full tableau B⁻¹[SA | I], built column block by column block.
        let mut full = DMatrix::zeros(m, self.width);
        for j in 0..self.width {
            full.set_column(j, &self.original_column(j));
        }
        let solved = lu.solve(&full).ok_or(LpError::SingularBasis)?;
        for i in 0..m {
            for j in 0..self.width {
                self.tableau[i * self.width + j] = solved[(i, j)];
            }
        }
        self.recompute_reduced();
        Ok(())
    }

    fn values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.width];
        for j in 0..self.width {
            if self.status[j] == Status::Upper {
                x[j] = self.upper[j];
            }
        }
        for (i, &j) in self.basis.iter().enumerate() {
            x[j] = self.beta[i];
        }
        x
    }

    fn solution(&self) -> LpSolution {
        let mut x = self.values();
        x.truncate(self.cols);
        for (v, &u) in x.iter_mut().zip(&self.upper) {
            *v = v.clamp(0.0, u);
        }
        let objective = x.iter().zip(&self.problem.c).map(|(x, c)| x * c).sum();
        let duals = (0..self.rows)
            .map(|k| -self.row_sign[k] * self.reduced[self.cols + k])
            .collect();
        LpSolution {
            x,
            objective,
            duals,
            reduced_costs: self.reduced[..self.cols].to_vec(),
            iterations: self.iterations,
        }
    }
}

/// One-shot convenience wrapper.
pub fn solve(problem: LpProblem) -> Result<LpSolution, LpError> {
    Simplex::new(problem)?.optimize()
}
