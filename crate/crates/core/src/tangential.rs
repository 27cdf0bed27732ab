//! Tangential subproblem
//!
//! ```text
//! min_u  g^T u + 1/(2 alpha) ||u||^2 + r(x_shift + u)   s.t.  J u = 0
//! ```
//!
//! For `r = 0` this is one saddle-point solve. For a weighted l1 term the
//! solver runs a splitting iteration (quadratic step on the constraint
//! manifold, soft-threshold step, dual update). Whenever the current
//! iterate suggests a zero/sign pattern for the regularized coordinates,
//! the pattern is fixed and the resulting equality-constrained quadratic
//! is solved exactly; if the result satisfies the optimality conditions it
//! is returned directly.

use crate::error::{Error, Result};
use crate::linalg::RowSpace;
use crate::problem::{Matrix, Regularizer, Vector};

/// Relative singular-value threshold below which the saddle-point system is
/// treated as singular.
pub const KKT_RANK_TOL: f64 = 1e-10;

const MAX_PENALTY_UPDATES: usize = 30;
const PENALTY_UPDATE_EVERY: usize = 10;
const POLISH_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolverConfig {
    pub sub_tol_stat: f64,
    pub sub_tol_feas: f64,
    pub max_inner_iterations: usize,
    /// Initial splitting penalty; adapted by residual balancing.
    pub penalty_rho: f64,
}

impl Default for SubsolverConfig {
    fn default() -> Self {
        Self {
            sub_tol_stat: 1e-10,
            sub_tol_feas: 1e-10,
            max_inner_iterations: 10_000,
            penalty_rho: 1.0,
        }
    }
}

impl SubsolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sub_tol_stat) || !positive(self.sub_tol_feas) {
            return Err(Error::Config("subsolver tolerances must be positive".into()));
        }
        if self.max_inner_iterations == 0 {
            return Err(Error::Config("max_inner_iterations must be at least 1".into()));
        }
        if !positive(self.penalty_rho) {
            return Err(Error::Config("penalty_rho must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TangentialSolution {
    pub u: Vector,
    /// Multiplier estimate with `g + u/alpha + g_r - J^T y ~ 0`.
    pub y: Vector,
    /// Subgradient of `r` at `x_shift + u`.
    pub g_r: Vector,
    pub stationarity_residual: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    /// True when the returned point came from the exact pattern solve.
    pub polished: bool,
}

/// Factorization of `[[d I, J^T], [J, 0]]` with `d = 1/alpha + rho`.
///
/// Only `J` is factored (thin SVD); changing `rho` is free.
#[derive(Debug, Clone)]
pub struct KktFactor {
    rows: RowSpace,
    diag: f64,
}

/// Factors the saddle-point matrix for the quadratic step.
pub fn kkt_factor(jac: &Matrix, alpha: f64, penalty_rho: f64) -> Result<KktFactor> {
    if !(alpha > 0.0 && penalty_rho >= 0.0) {
        return Err(Error::Config(format!("need alpha > 0 and rho >= 0, got {alpha}, {penalty_rho}")));
    }
    let factor = KktFactor::rank_revealing(jac, alpha, penalty_rho);
    if !factor.rows.is_full_rank() {
        return Err(Error::Factorization);
    }
    Ok(factor)
}

impl KktFactor {
    /// Keeps only the numerically nonzero singular values of `J`. Dependent
    /// rows then drop out of `J u = 0` and `y` is the minimum-norm solution.
    fn rank_revealing(jac: &Matrix, alpha: f64, penalty_rho: f64) -> Self {
        KktFactor {
            rows: RowSpace::new(jac, KKT_RANK_TOL),
            diag: 1.0 / alpha + penalty_rho,
        }
    }

    /// Solves `d u + J^T y = top`, `J u = bottom`.
    pub fn solve(&self, top: &Vector, bottom: &Vector) -> (Vector, Vector) {
        let d = self.diag;
        let u = self.rows.project_null(top) / d + self.rows.pinv_apply(bottom);
        // V^T u = Sigma^-1 U^T bottom, so J^T y = V V^T top - d V Sigma^-1 U^T bottom
        let coord_top = self.rows.row_coordinates(top);
        let coord_bottom = (self.rows.left_vectors().transpose() * bottom).component_div(self.rows.sigma());
        let y = self.rows.left_vectors() * (coord_top - coord_bottom * d).component_div(self.rows.sigma());
        (u, y)
    }

    pub fn set_penalty(&mut self, alpha: f64, penalty_rho: f64) {
        self.diag = 1.0 / alpha + penalty_rho;
    }

    pub fn diagonal(&self) -> f64 {
        self.diag
    }

    fn project_null(&self, x: &Vector) -> Vector {
        self.rows.project_null(x)
    }

    fn multiplier(&self, h: &Vector) -> Vector {
        self.rows.pinv_transpose_apply(h)
    }
}

/// Least-squares multiplier `argmin_y ||g + u/alpha + g_r - J^T y||`.
///
/// The flag is false when `J` is rank deficient; the returned `y` is then
/// the minimum-norm least-squares solution.
pub fn recover_multiplier(jac: &Matrix, g: &Vector, u: &Vector, g_r: &Vector, alpha: f64) -> (Vector, bool) {
    let rows = RowSpace::new(jac, KKT_RANK_TOL);
    let h = g + u / alpha + g_r;
    (rows.pinv_transpose_apply(&h), rows.is_full_rank())
}

/// Solver with reusable scratch state; use one instance per worker.
#[derive(Debug, Clone)]
pub struct TangentialSolver {
    cfg: SubsolverConfig,
    z: Vector,
    w: Vector,
    z_prev: Vector,
    total_iterations: usize,
}

impl TangentialSolver {
    pub fn new(cfg: SubsolverConfig) -> Self {
        Self {
            cfg,
            z: Vector::zeros(0),
            w: Vector::zeros(0),
            z_prev: Vector::zeros(0),
            total_iterations: 0,
        }
    }

    pub fn config(&self) -> &SubsolverConfig {
        &self.cfg
    }

    /// Inner iterations summed over every call on this instance.
    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn solve(
        &mut self,
        g: &Vector,
        jac: &Matrix,
        alpha: f64,
        r: &Regularizer,
        x_shift: &Vector,
    ) -> Result<TangentialSolution> {
        let n = g.len();
        if jac.ncols() != n || x_shift.len() != n {
            return Err(Error::Dimension(format!(
                "tangential subproblem: g has length {n}, J is {:?}, x_shift has length {}",
                jac.shape(),
                x_shift.len()
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        if r.max_index().is_some_and(|i| i >= n) {
            return Err(Error::Dimension("regularizer index out of range".into()));
        }

        let mut factor = KktFactor::rank_revealing(jac, alpha, 0.0);
        let scale = g.norm().max(1.0);
        let tol_stat = self.cfg.sub_tol_stat * scale;
        let tol_feas = self.cfg.sub_tol_feas * scale;

        if r.is_zero() {
            let u = -factor.project_null(g) * alpha;
            let g_r = Vector::zeros(n);
            let y = factor.multiplier(&(g + &u / alpha));
            let sol = finish(jac, g, alpha, u, y, g_r, 1, false);
            self.total_iterations += 1;
            return Ok(sol);
        }

        let lambda = r.weight();
        let mask = r.mask(n);
        let check = |sol: &TangentialSolution| {
            sol.stationarity_residual <= tol_stat
                && sol.constraint_residual <= tol_feas
                && r.contains_subgradient(&(x_shift + &sol.u), &sol.g_r, self.cfg.sub_tol_stat.max(1e-12) * scale)
        };

        // the pattern of the current point is usually right once the outer
        // iteration has settled
        if let Some(sol) = polish(jac, g, alpha, lambda, &mask, x_shift, x_shift, 0) {
            if check(&sol) {
                self.total_iterations += 1;
                return Ok(sol);
            }
        }

        let mut rho = self.cfg.penalty_rho;
        factor.set_penalty(alpha, rho);
        // start from the unregularized minimizer
        let u0 = -factor.project_null(g) * (1.0 / factor.diagonal());
        self.w = Vector::zeros(n);
        self.z = soft_shifted(&u0, &self.w, x_shift, &mask, lambda / rho);
        self.z_prev = self.z.clone();
        let zero_m = Vector::zeros(jac.nrows());
        let mut updates = 0;
        let mut last = (f64::INFINITY, f64::INFINITY);

        for it in 1..=self.cfg.max_inner_iterations {
            let top = -g + (&self.z - &self.w) * rho;
            let u = factor.solve(&top, &zero_m).0;
            std::mem::swap(&mut self.z_prev, &mut self.z);
            self.z = soft_shifted(&u, &self.w, x_shift, &mask, lambda / rho);
            self.w += &u - &self.z;

            let primal = (&u - &self.z).norm();
            let dual = rho * (&self.z - &self.z_prev).norm();
            last = (primal, dual);
            let converged = primal <= tol_feas && dual <= tol_stat;

            if converged || it % POLISH_EVERY == 0 {
                let guess = x_shift + &self.z;
                if let Some(sol) = polish(jac, g, alpha, lambda, &mask, x_shift, &guess, it) {
                    if check(&sol) {
                        self.total_iterations += it;
                        return Ok(sol);
                    }
                }
            }
            if converged {
                let g_r = &self.w * rho;
                let y = factor.multiplier(&(g + &u / alpha + &g_r));
                let sol = finish(jac, g, alpha, u.clone(), y, g_r, it, false);
                if check(&sol) {
                    self.total_iterations += it;
                    return Ok(sol);
                }
            }

            if it % PENALTY_UPDATE_EVERY == 0 && updates < MAX_PENALTY_UPDATES {
                let new_rho = if primal > 10.0 * dual {
                    rho * 2.0
                } else if dual > 10.0 * primal {
                    rho / 2.0
                } else {
                    rho
                };
                if new_rho != rho {
                    // keep the unscaled dual rho * w fixed
                    self.w *= rho / new_rho;
                    rho = new_rho;
                    factor.set_penalty(alpha, rho);
                    updates += 1;
                }
            }
        }

        self.total_iterations += self.cfg.max_inner_iterations;
        Err(Error::Subsolver {
            iterations: self.cfg.max_inner_iterations,
            stationarity: last.1,
            feasibility: last.0,
        })
    }
}

/// One-shot convenience wrapper around [`TangentialSolver::solve`].
pub fn solve_tangential(
    g: &Vector,
    jac: &Matrix,
    alpha: f64,
    r: &Regularizer,
    x_shift: &Vector,
    cfg: SubsolverConfig,
) -> Result<TangentialSolution> {
    TangentialSolver::new(cfg).solve(g, jac, alpha, r, x_shift)
}

/// Value of the tangential objective at `u`.
pub fn tangential_objective(g: &Vector, u: &Vector, alpha: f64, r: &Regularizer, x_shift: &Vector) -> f64 {
    g.dot(u) + u.norm_squared() / (2.0 * alpha) + r.value(&(x_shift + u))
}

/// `z` with `x_shift + z = soft(x_shift + u + w, t)` on regularized
/// coordinates and `z = u + w` elsewhere.
fn soft_shifted(u: &Vector, w: &Vector, x_shift: &Vector, mask: &[bool], t: f64) -> Vector {
    Vector::from_iterator(
        u.len(),
        (0..u.len()).map(|i| {
            let v = u[i] + w[i];
            if mask[i] {
                soft_threshold(x_shift[i] + v, t) - x_shift[i]
            } else {
                v
            }
        }),
    )
}

pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Fixes the zero/sign pattern of `guess` on the regularized coordinates and
/// solves the resulting equality-constrained quadratic exactly. Returns
/// `None` when the pattern is inconsistent with the solution it produces.
#[allow(clippy::too_many_arguments)]
fn polish(
    jac: &Matrix,
    g: &Vector,
    alpha: f64,
    lambda: f64,
    mask: &[bool],
    x_shift: &Vector,
    guess: &Vector,
    iterations: usize,
) -> Option<TangentialSolution> {
    let n = g.len();
    let zero: Vec<bool> = (0..n).map(|i| mask[i] && guess[i] == 0.0).collect();
    let free: Vec<usize> = (0..n).filter(|&i| !zero[i]).collect();
    let fixed: Vec<usize> = (0..n).filter(|&i| zero[i]).collect();
    let sign: Vec<f64> = (0..n)
        .map(|i| if mask[i] && !zero[i] { guess[i].signum() } else { 0.0 })
        .collect();

    let mut u = Vector::zeros(n);
    for &i in &fixed {
        u[i] = -x_shift[i];
    }
    // J_F u_F = -J_Z u_Z
    let rhs = -(jac * &u);

    let y;
    if free.is_empty() {
        if rhs.norm() > 0.0 {
            return None;
        }
        y = Vector::zeros(jac.nrows());
    } else {
        let jac_free = jac.select_columns(&free);
        let rows = RowSpace::new(&jac_free, KKT_RANK_TOL);
        let h_free = Vector::from_iterator(free.len(), free.iter().map(|&i| g[i] + lambda * sign[i]));
        let u_free = -rows.project_null(&h_free) * alpha + rows.pinv_apply(&rhs);
        for (k, &i) in free.iter().enumerate() {
            u[i] = u_free[k];
        }
        y = rows.pinv_transpose_apply(&(h_free + u_free / alpha));
    }

    let jty = jac.transpose() * &y;
    let mut g_r = Vector::zeros(n);
    for i in 0..n {
        if zero[i] {
            g_r[i] = jty[i] - g[i] - u[i] / alpha;
            if g_r[i].abs() > lambda * (1.0 + 1e-12) {
                return None;
            }
            g_r[i] = g_r[i].clamp(-lambda, lambda);
        } else if mask[i] {
            let p = x_shift[i] + u[i];
            if p == 0.0 || p.signum() != sign[i] {
                return None;
            }
            g_r[i] = lambda * sign[i];
        }
    }
    Some(finish(jac, g, alpha, u, y, g_r, iterations, true))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    jac: &Matrix,
    g: &Vector,
    alpha: f64,
    u: Vector,
    y: Vector,
    g_r: Vector,
    iterations: usize,
    polished: bool,
) -> TangentialSolution {
    let stationarity_residual = (g + &u / alpha + &g_r - jac.transpose() * &y).norm();
    let constraint_residual = (jac * &u).norm();
    TangentialSolution {
        u,
        y,
        g_r,
        stationarity_residual,
        constraint_residual,
        iterations,
        polished,
    }
}
