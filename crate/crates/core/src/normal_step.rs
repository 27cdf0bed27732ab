//! Feasibility-restoring normal step: Cauchy point, a Newton-like step in
//! the row space of `J`, and the trust-region safeguard tying the step
//! length to the proximal parameter.

use crate::error::{Error, Result};
use crate::linalg::RowSpace;
use crate::problem::{Matrix, Vector};

/// Default relative singular-value threshold for the full-row-rank test.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// One normal step `v` together with the quantities it must be compared to.
#[derive(Debug, Clone)]
pub struct NormalStepResult {
    pub v: Vector,
    pub v_cauchy: Vector,
    pub beta_cauchy: f64,
    pub used_newton: bool,
    /// `m(v) = 0.5 ||c + J v||^2`
    pub model_at_v: f64,
    pub model_at_cauchy: f64,
    /// `m(0) = 0.5 ||c||^2`
    pub model_at_zero: f64,
    /// `kappa_v * alpha * ||J^T c||`
    pub trust_radius: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub full_rank: bool,
}

/// Returned by [`newton_normal_step`] when `J` lacks full row rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficient;

/// Linearized infeasibility model `0.5 ||c + J v||^2`.
pub fn feasibility_model(jac: &Matrix, c: &Vector, v: &Vector) -> f64 {
    0.5 * (c + jac * v).norm_squared()
}

/// Minimizer of the feasibility model along `-J^T c` with
/// `0 <= beta <= kappa_v * alpha`.
pub fn cauchy_point(jac: &Matrix, c: &Vector, kappa_v: f64, alpha: f64) -> Result<(Vector, f64)> {
    check_shapes(jac, c)?;
    let jtc = jac.transpose() * c;
    let jtc_sq = jtc.norm_squared();
    if jtc_sq == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let jjtc_sq = (jac * &jtc).norm_squared();
    let cap = kappa_v * alpha;
    let beta = if jjtc_sq > 0.0 { (jtc_sq / jjtc_sq).min(cap) } else { cap };
    Ok((-jtc * beta, beta))
}

/// Minimum-norm solution of `J v = -c`, i.e. `v = J^T w` with `J J^T w = -c`.
pub fn newton_normal_step(jac: &Matrix, c: &Vector, rank_tol: f64) -> Result<Vector, RankDeficient> {
    let rows = RowSpace::new(jac, rank_tol);
    newton_from_rows(&rows, c)
}

fn newton_from_rows(rows: &RowSpace, c: &Vector) -> Result<Vector, RankDeficient> {
    if !rows.is_full_rank() {
        return Err(RankDeficient);
    }
    Ok(-rows.pinv_apply(c))
}

/// Picks the projected Newton step unless `J` is rank deficient or the
/// Cauchy point gives a strictly smaller model value.
pub fn compute_normal_step(
    jac: &Matrix,
    c: &Vector,
    kappa_v: f64,
    alpha: f64,
    rank_tol: f64,
) -> Result<NormalStepResult> {
    let (v_cauchy, beta_cauchy) = cauchy_point(jac, c, kappa_v, alpha)?;
    let rows = RowSpace::new(jac, rank_tol);
    let trust_radius = kappa_v * alpha * (jac.transpose() * c).norm();
    let model_at_cauchy = feasibility_model(jac, c, &v_cauchy);

    let projected = newton_from_rows(&rows, c).ok().and_then(|v_n| {
        let len = v_n.norm();
        if len == 0.0 {
            return None;
        }
        let scaled = if len > trust_radius { v_n * (trust_radius / len) } else { v_n };
        Some(scaled)
    });

    let (v, used_newton, model_at_v) = match projected {
        Some(v_bar) => {
            let m_bar = feasibility_model(jac, c, &v_bar);
            if model_at_cauchy < m_bar {
                (v_cauchy.clone(), false, model_at_cauchy)
            } else {
                (v_bar, true, m_bar)
            }
        }
        None => (v_cauchy.clone(), false, model_at_cauchy),
    };

    Ok(NormalStepResult {
        v,
        v_cauchy,
        beta_cauchy,
        used_newton,
        model_at_v,
        model_at_cauchy,
        model_at_zero: 0.5 * c.norm_squared(),
        trust_radius,
        sigma_min: rows.sigma_min(),
        sigma_max: rows.sigma_max(),
        full_rank: rows.is_full_rank(),
    })
}

/// Guaranteed Cauchy decrease `0.5 ||J^T c||^2 min(1 / (1 + ||J^T J||), kappa_v alpha)`.
pub fn cauchy_decrease_bound(jtc_norm: f64, sigma_max: f64, kappa_v: f64, alpha: f64) -> f64 {
    0.5 * jtc_norm * jtc_norm * (1.0 / (1.0 + sigma_max * sigma_max)).min(kappa_v * alpha)
}

/// Per-iterate contraction factor
/// `sqrt(max(1 - kappa_v alpha sigma_min^2, 1 - sigma_min^2 / ||J||^2))`, clamped to `[0, 1]`.
pub fn contraction_factor(sigma_min: f64, sigma_max: f64, kappa_v: f64, alpha: f64) -> f64 {
    if sigma_max == 0.0 {
        return 1.0;
    }
    let s2 = sigma_min * sigma_min;
    let a = 1.0 - kappa_v * alpha * s2;
    let b = 1.0 - s2 / (sigma_max * sigma_max);
    a.max(b).clamp(0.0, 1.0).sqrt()
}

fn check_shapes(jac: &Matrix, c: &Vector) -> Result<()> {
    if jac.nrows() != c.len() {
        return Err(Error::Dimension(format!(
            "J has {} rows but c has length {}",
            jac.nrows(),
            c.len()
        )));
    }
    Ok(())
}
