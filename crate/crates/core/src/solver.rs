//! Main iteration: normal step, tangential step, merit-parameter update,
//! sufficient-decrease test, and the two termination certificates.

use std::fmt;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::merit::{merit_value, model_reduction, tau_trial_parts, update_tau, TauTrial};
use crate::normal_step::{cauchy_decrease_bound, compute_normal_step, contraction_factor, DEFAULT_RANK_TOL};
use crate::problem::{Matrix, PointEval, ProblemInstance, Regularizer, Vector};
use crate::tangential::{SubsolverConfig, TangentialSolver};

/// Steps shorter than this are treated as zero.
pub const ZERO_STEP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub alpha0: f64,
    /// Merit parameter before the first iteration.
    pub tau_init: f64,
    pub kappa_v: f64,
    pub sigma_c: f64,
    pub eps_tau: f64,
    /// Proximal-parameter reduction factor on rejected steps.
    pub xi: f64,
    /// Sufficient-decrease fraction.
    pub eta: f64,
    pub sigma_u: f64,
    pub max_iterations: usize,
    pub tol_feas: f64,
    pub tol_stat: f64,
    /// Minimum `||c||` for an infeasible-stationary certificate.
    pub isp_feas_floor: f64,
    /// `||J^T c||` at or below this counts as zero.
    pub isp_stat_tol: f64,
    pub subsolver: SubsolverConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha0: 10.0,
            tau_init: 1.0,
            kappa_v: 1000.0,
            sigma_c: 0.1,
            eps_tau: 0.1,
            xi: 0.5,
            eta: 1e-4,
            sigma_u: 0.1,
            max_iterations: 1000,
            tol_feas: 1e-6,
            tol_stat: 1e-6,
            isp_feas_floor: 1e-2,
            isp_stat_tol: 1e-12,
            subsolver: SubsolverConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        positive("alpha0", self.alpha0)?;
        positive("tau_init", self.tau_init)?;
        positive("kappa_v", self.kappa_v)?;
        open_unit("sigma_c", self.sigma_c)?;
        open_unit("eps_tau", self.eps_tau)?;
        open_unit("xi", self.xi)?;
        open_unit("eta", self.eta)?;
        if !(self.sigma_u > 0.0 && self.sigma_u <= 0.5) {
            return Err(Error::Config(format!("sigma_u must lie in (0, 0.5], got {}", self.sigma_u)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        positive("tol_feas", self.tol_feas)?;
        positive("tol_stat", self.tol_stat)?;
        positive("isp_feas_floor", self.isp_feas_floor)?;
        positive("isp_stat_tol", self.isp_stat_tol)?;
        self.subsolver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    KktPoint,
    InfeasibleStationary,
    MaxIterations,
    SubsolverError,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::KktPoint => "kkt-point",
            Status::InfeasibleStationary => "infeasible-stationary",
            Status::MaxIterations => "max-iterations",
            Status::SubsolverError => "subsolver-error",
        };
        f.write_str(s)
    }
}

/// Diagnostics for one completed iteration (one trial step).
///
/// The `*_slack` fields are normalized so that a value below `-1e-10`
/// means the corresponding inequality failed; `None` means it does not
/// apply at this iterate.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vector,
    pub alpha: f64,
    pub tau: f64,
    pub tau_trial: Option<f64>,
    pub norm_v: f64,
    pub norm_u: f64,
    pub norm_s: f64,
    pub merit_before: f64,
    pub merit_after: f64,
    pub delta_q: f64,
    pub chi: f64,
    pub chi_bar: f64,
    pub feasibility: f64,
    pub stationarity: f64,
    pub norm_jtc: f64,
    pub accepted: bool,
    pub linearized_gain: f64,
    pub subsolver_iterations: usize,
    pub used_newton: bool,
    /// `m(0) - m(v_c)` minus the guaranteed Cauchy decrease, over `max(1, m(0))`.
    pub cauchy_slack: Option<f64>,
    /// `delta_q - (sigma_u tau / alpha ||s||^2 + sigma_c gain)`, over `max(1, |delta_q|)`.
    pub delta_q_slack: f64,
    /// Constraint-gain lower bound with `||c_k||` in place of a global constant.
    pub gain_slack: Option<f64>,
    /// `rho_k ||c|| - ||c + J s||`, over `max(1, ||c||)`, on full-rank iterates.
    pub contraction_slack: Option<f64>,
    /// `|v^T u| / max(1, ||v|| ||u||)`
    pub orthogonality: f64,
    /// `||J u|| / max(1, ||u||)`
    pub ju_residual: f64,
    /// `|(g + g_r)^T u + ||u||^2 / alpha| / max(1, ||u||^2 / alpha)`
    pub identity_residual: f64,
    /// Bound minus the merit-parameter denominator, over `max(1, |bound|)`.
    pub denominator_slack: f64,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub status: Status,
    pub final_x: Vector,
    /// `f + r` at `final_x`.
    pub final_objective: f64,
    pub final_feasibility: f64,
    pub final_stationarity: f64,
    pub final_multiplier: Vector,
    pub final_alpha: f64,
    pub final_tau: f64,
    pub iterations: usize,
    pub accepted_count: usize,
    pub trace: Vec<IterationRecord>,
    pub wall_time_seconds: f64,
    /// Set when the step vanished without the KKT certificate holding.
    pub stalled: bool,
    pub message: Option<String>,
}

/// Sufficient-decrease test `phi_trial <= phi_current - eta * delta_q`.
pub fn accept_step(phi_trial: f64, phi_current: f64, delta_q: f64, eta: f64) -> bool {
    phi_trial <= phi_current - eta * delta_q
}

/// KKT residual `chi = max(stationarity, feasibility)` with its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub chi: f64,
    pub stationarity: f64,
    pub feasibility: f64,
}

pub fn kkt_residual(g: &Vector, g_r: &Vector, jac: &Matrix, y: &Vector, c: &Vector) -> KktResidual {
    let stationarity = (g + g_r - jac.transpose() * y).norm();
    let feasibility = c.norm();
    KktResidual {
        chi: stationarity.max(feasibility),
        stationarity,
        feasibility,
    }
}

pub fn zero_step_test(s: &Vector, threshold: f64) -> bool {
    s.norm() <= threshold
}

/// Runs the method from `problem.x0()`.
pub fn solve(problem: &ProblemInstance, r: &Regularizer, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    if r.max_index().is_some_and(|i| i >= problem.n()) {
        return Err(Error::Dimension(format!(
            "regularizer index {} out of range for n = {}",
            r.max_index().unwrap_or_default(),
            problem.n()
        )));
    }
    Ok(Driver::new(problem, r, cfg).run())
}

struct Driver<'a> {
    problem: &'a ProblemInstance,
    r: &'a Regularizer,
    cfg: &'a SolverConfig,
    subsolver: TangentialSolver,
    started: Instant,
    trace: Vec<IterationRecord>,
    accepted_count: usize,
}

struct Snapshot {
    x: Vector,
    eval: PointEval,
    r_x: f64,
    alpha: f64,
    tau: f64,
    stationarity: f64,
    y: Vector,
}

impl<'a> Driver<'a> {
    fn new(problem: &'a ProblemInstance, r: &'a Regularizer, cfg: &'a SolverConfig) -> Self {
        Self {
            problem,
            r,
            cfg,
            subsolver: TangentialSolver::new(cfg.subsolver),
            started: Instant::now(),
            trace: Vec::new(),
            accepted_count: 0,
        }
    }

    fn run(mut self) -> SolverReport {
        let cfg = self.cfg;
        let x = self.problem.x0().clone();
        let eval = match self.problem.evaluate(&x) {
            Ok(e) => e,
            Err(err) => return self.failure(x, err, 0, cfg.alpha0, cfg.tau_init),
        };
        let mut st = Snapshot {
            r_x: self.r.value(&x),
            x,
            eval,
            alpha: cfg.alpha0,
            tau: cfg.tau_init,
            stationarity: f64::NAN,
            y: Vector::zeros(self.problem.m()),
        };
        let sigma_u_bar = cfg.sigma_u + 0.5;

        for k in 0..cfg.max_iterations {
            let PointEval { f, g, c, jac } = &st.eval;
            let c_norm = c.norm();
            let jtc_norm = (jac.transpose() * c).norm();

            let normal = if jtc_norm <= cfg.isp_stat_tol {
                if c_norm >= cfg.isp_feas_floor {
                    return self.finish(st, Status::InfeasibleStationary, k, false, None);
                }
                None
            } else {
                match compute_normal_step(jac, c, cfg.kappa_v, st.alpha, DEFAULT_RANK_TOL) {
                    Ok(step) => Some(step),
                    Err(err) => return self.failure_at(st, err, k),
                }
            };
            let v = normal.as_ref().map_or_else(|| Vector::zeros(self.problem.n()), |n| n.v.clone());

            let x_shift = &st.x + &v;
            let tang = match self.subsolver.solve(g, jac, st.alpha, self.r, &x_shift) {
                Ok(t) => t,
                Err(err) => return self.failure_at(st, err, k),
            };
            let u = &tang.u;
            let kkt = kkt_residual(g, &tang.g_r, jac, &tang.y, c);
            st.stationarity = kkt.stationarity;
            st.y = tang.y.clone();

            if kkt.feasibility <= cfg.tol_feas && kkt.stationarity <= cfg.tol_stat {
                return self.finish(st, Status::KktPoint, k, false, None);
            }
            let s = &v + u;
            if zero_step_test(&s, ZERO_STEP_THRESHOLD) {
                let msg = "trial step vanished without the KKT certificate".to_string();
                return self.finish(st, Status::MaxIterations, k, true, Some(msg));
            }

            let x_trial = &x_shift + u;
            let r_xs = self.r.value(&x_trial);
            let parts = tau_trial_parts(g, &s, st.alpha, sigma_u_bar, st.r_x, r_xs, c, jac, &v, cfg.sigma_c);
            let tau = update_tau(st.tau, parts.value, cfg.eps_tau);
            let delta_q = model_reduction(&s, tau, st.alpha, g, st.r_x, r_xs, c, jac);
            let phi_current = merit_value(tau, *f, st.r_x, c_norm);
            // a trial point where the callbacks fail is simply rejected
            let phi_trial = match (self.problem.objective(&x_trial), self.problem.constraints(&x_trial)) {
                (Ok(f_t), Ok(c_t)) => merit_value(tau, f_t, r_xs, c_t.norm()),
                _ => f64::INFINITY,
            };
            let accepted = accept_step(phi_trial, phi_current, delta_q, cfg.eta);

            // diagnostics
            let norm_v = v.norm();
            let norm_u = u.norm();
            let norm_s = s.norm();
            let (cauchy_slack, gain_slack, contraction_slack, used_newton) = match &normal {
                Some(n) => {
                    let bound = cauchy_decrease_bound(jtc_norm, n.sigma_max, cfg.kappa_v, st.alpha);
                    let cauchy = (n.model_at_zero - n.model_at_cauchy - bound) / n.model_at_zero.max(1.0);
                    let gain = (parts.linearized_gain - bound / c_norm) / c_norm.max(1.0);
                    let contraction = n.full_rank.then(|| {
                        let rho = contraction_factor(n.sigma_min, n.sigma_max, cfg.kappa_v, st.alpha);
                        (rho * c_norm - (c + jac * &s).norm()) / c_norm.max(1.0)
                    });
                    (Some(cauchy), Some(gain), contraction, n.used_newton)
                }
                None => (None, None, None, false),
            };
            let dq_bound = cfg.sigma_u * tau / st.alpha * norm_s * norm_s + cfg.sigma_c * parts.linearized_gain;
            let u_sq_over_alpha = norm_u * norm_u / st.alpha;
            let den_bound = (g.norm() + tang.g_r.norm()) * norm_v + sigma_u_bar * norm_v * norm_v / st.alpha;
            self.trace.push(IterationRecord {
                k,
                x: st.x.clone(),
                alpha: st.alpha,
                tau,
                tau_trial: match parts.value {
                    TauTrial::Unbounded => None,
                    TauTrial::Finite(t) => Some(t),
                },
                norm_v,
                norm_u,
                norm_s,
                merit_before: phi_current,
                merit_after: phi_trial,
                delta_q,
                chi: kkt.chi,
                chi_bar: kkt.stationarity.max(jtc_norm),
                feasibility: c_norm,
                stationarity: kkt.stationarity,
                norm_jtc: jtc_norm,
                accepted,
                linearized_gain: parts.linearized_gain,
                subsolver_iterations: tang.iterations,
                used_newton,
                cauchy_slack,
                delta_q_slack: (delta_q - dq_bound) / delta_q.abs().max(1.0),
                gain_slack,
                contraction_slack,
                orthogonality: v.dot(u).abs() / (norm_v * norm_u).max(1.0),
                ju_residual: (jac * u).norm() / norm_u.max(1.0),
                identity_residual: ((g + &tang.g_r).dot(u) + u_sq_over_alpha).abs() / u_sq_over_alpha.max(1.0),
                denominator_slack: (den_bound - parts.denominator) / den_bound.abs().max(1.0),
            });

            st.tau = tau;
            if accepted {
                let eval = match self.problem.evaluate(&x_trial) {
                    Ok(e) => e,
                    Err(err) => return self.failure_at(st, err, k + 1),
                };
                st.x = x_trial;
                st.eval = eval;
                st.r_x = r_xs;
                self.accepted_count += 1;
            } else {
                st.alpha *= cfg.xi;
            }
        }
        let k = cfg.max_iterations;
        self.finish(st, Status::MaxIterations, k, false, None)
    }

    fn finish(self, st: Snapshot, status: Status, iterations: usize, stalled: bool, message: Option<String>) -> SolverReport {
        SolverReport {
            status,
            final_objective: st.eval.f + st.r_x,
            final_feasibility: st.eval.c.norm(),
            final_stationarity: st.stationarity,
            final_multiplier: st.y,
            final_x: st.x,
            final_alpha: st.alpha,
            final_tau: st.tau,
            iterations,
            accepted_count: self.accepted_count,
            trace: self.trace,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            stalled,
            message,
        }
    }

    fn failure_at(self, st: Snapshot, err: Error, iterations: usize) -> SolverReport {
        let mut report = self.finish(st, Status::SubsolverError, iterations, false, None);
        report.message = Some(err.to_string());
        report
    }

    fn failure(self, x: Vector, err: Error, iterations: usize, alpha: f64, tau: f64) -> SolverReport {
        SolverReport {
            status: Status::SubsolverError,
            final_objective: f64::NAN,
            final_feasibility: f64::NAN,
            final_stationarity: f64::NAN,
            final_multiplier: Vector::zeros(self.problem.m()),
            final_x: x,
            final_alpha: alpha,
            final_tau: tau,
            iterations,
            accepted_count: 0,
            trace: self.trace,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            stalled: false,
            message: Some(err.to_string()),
        }
    }
}

/// One failed per-iteration check found by [`audit_trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub check: &'static str,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "iteration {}: {} ({:.3e})", self.k, self.check, self.value)
    }
}

/// Re-checks the inequalities every iteration of the method must satisfy.
pub fn audit_trace(trace: &[IterationRecord], cfg: &SolverConfig) -> Vec<Violation> {
    const SLACK: f64 = -1e-10;
    let mut out = Vec::new();
    let mut push = |k: usize, check: &'static str, value: f64| out.push(Violation { k, check, value });
    let mut prev: Option<&IterationRecord> = None;
    let mut prev_tau = cfg.tau_init;

    for rec in trace {
        if let Some(v) = rec.cauchy_slack.filter(|&v| v < SLACK) {
            push(rec.k, "cauchy decrease", v);
        }
        if rec.delta_q_slack < SLACK {
            push(rec.k, "model reduction lower bound", rec.delta_q_slack);
        }
        if let Some(v) = rec.gain_slack.filter(|&v| v < SLACK) {
            push(rec.k, "constraint gain bound", v);
        }
        if let Some(v) = rec.contraction_slack.filter(|&v| v < SLACK) {
            push(rec.k, "linearized contraction", v);
        }
        if rec.denominator_slack < SLACK {
            push(rec.k, "merit denominator bound", rec.denominator_slack);
        }
        if rec.ju_residual > 1e-10 {
            push(rec.k, "tangential feasibility", rec.ju_residual);
        }
        if rec.orthogonality > 1e-9 {
            push(rec.k, "normal/tangential orthogonality", rec.orthogonality);
        }
        if rec.identity_residual > 1e-8 {
            push(rec.k, "tangential optimality identity", rec.identity_residual);
        }
        if !(rec.tau > 0.0) || rec.tau > prev_tau {
            push(rec.k, "merit parameter monotone", rec.tau - prev_tau);
        } else if rec.tau < prev_tau && rec.tau > (1.0 - cfg.eps_tau) * prev_tau {
            push(rec.k, "merit parameter decrease factor", rec.tau / prev_tau);
        }
        if rec.accepted && rec.merit_after > rec.merit_before - cfg.eta * rec.delta_q {
            push(rec.k, "sufficient decrease", rec.merit_after - rec.merit_before);
        }
        if let Some(p) = prev {
            let expected = if p.accepted { p.alpha } else { p.alpha * cfg.xi };
            if rec.alpha != expected {
                push(rec.k, "proximal parameter update", rec.alpha - expected);
            }
        }
        prev_tau = rec.tau;
        prev = Some(rec);
    }
    out
}
