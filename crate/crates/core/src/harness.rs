//! Batch runs over the catalog: configuration files, CSV reports, traces,
//! and aggregate counts.

use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::library::{reformulate, CatalogEntry, LambdaPolicy, ReformulatedProblem};
use crate::problem::{Regularizer, Vector};
use crate::solver::{solve, IterationRecord, SolverConfig, SolverReport, Status};
use crate::tangential::SubsolverConfig;

pub const METHOD_NAME: &str = "eqprox";

pub const REPORT_HEADER: [&str; 8] = [
    "Problem",
    "Method",
    "Obj",
    "RE",
    "ConstraintViolation",
    "SlackInf",
    "Status",
    "TimeSec",
];

/// Violation threshold for the "feasible" count.
pub const FEASIBLE_TOL: f64 = 1e-6;
/// Slack threshold for the "small" count.
pub const SLACK_SMALL_TOL: f64 = 1e-5;

/// Flat configuration file; every key is optional and unknown keys are
/// rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    alpha0: Option<f64>,
    tau_init: Option<f64>,
    kappa_v: Option<f64>,
    sigma_c: Option<f64>,
    eps_tau: Option<f64>,
    xi: Option<f64>,
    eta: Option<f64>,
    sigma_u: Option<f64>,
    max_iterations: Option<usize>,
    tol_feas: Option<f64>,
    tol_stat: Option<f64>,
    isp_feas_floor: Option<f64>,
    isp_stat_tol: Option<f64>,
    sub_tol_stat: Option<f64>,
    sub_tol_feas: Option<f64>,
    max_inner_iterations: Option<usize>,
    penalty_rho: Option<f64>,
}

/// Parses a configuration file body over the defaults.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let d = SolverConfig::default();
    let s = SubsolverConfig::default();
    let cfg = SolverConfig {
        alpha0: file.alpha0.unwrap_or(d.alpha0),
        tau_init: file.tau_init.unwrap_or(d.tau_init),
        kappa_v: file.kappa_v.unwrap_or(d.kappa_v),
        sigma_c: file.sigma_c.unwrap_or(d.sigma_c),
        eps_tau: file.eps_tau.unwrap_or(d.eps_tau),
        xi: file.xi.unwrap_or(d.xi),
        eta: file.eta.unwrap_or(d.eta),
        sigma_u: file.sigma_u.unwrap_or(d.sigma_u),
        max_iterations: file.max_iterations.unwrap_or(d.max_iterations),
        tol_feas: file.tol_feas.unwrap_or(d.tol_feas),
        tol_stat: file.tol_stat.unwrap_or(d.tol_stat),
        isp_feas_floor: file.isp_feas_floor.unwrap_or(d.isp_feas_floor),
        isp_stat_tol: file.isp_stat_tol.unwrap_or(d.isp_stat_tol),
        subsolver: SubsolverConfig {
            sub_tol_stat: file.sub_tol_stat.unwrap_or(s.sub_tol_stat),
            sub_tol_feas: file.sub_tol_feas.unwrap_or(s.sub_tol_feas),
            max_inner_iterations: file.max_inner_iterations.unwrap_or(s.max_inner_iterations),
            penalty_rho: file.penalty_rho.unwrap_or(s.penalty_rho),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SolverConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Renders a configuration in the file format read by [`parse_config`].
pub fn render_config(cfg: &SolverConfig) -> String {
    let s = &cfg.subsolver;
    format!(
        "alpha0 = {:?}\ntau_init = {:?}\nkappa_v = {:?}\nsigma_c = {:?}\neps_tau = {:?}\nxi = {:?}\n\
         eta = {:?}\nsigma_u = {:?}\nmax_iterations = {}\ntol_feas = {:?}\ntol_stat = {:?}\n\
         isp_feas_floor = {:?}\nisp_stat_tol = {:?}\nsub_tol_stat = {:?}\nsub_tol_feas = {:?}\n\
         max_inner_iterations = {}\npenalty_rho = {:?}\n",
        cfg.alpha0,
        cfg.tau_init,
        cfg.kappa_v,
        cfg.sigma_c,
        cfg.eps_tau,
        cfg.xi,
        cfg.eta,
        cfg.sigma_u,
        cfg.max_iterations,
        cfg.tol_feas,
        cfg.tol_stat,
        cfg.isp_feas_floor,
        cfg.isp_stat_tol,
        s.sub_tol_stat,
        s.sub_tol_feas,
        s.max_inner_iterations,
        s.penalty_rho,
    )
}

/// Short status code used in reports.
pub fn status_code(status: Status) -> &'static str {
    match status {
        Status::KktPoint => "Opt",
        Status::MaxIterations => "Max",
        Status::SubsolverError => "Err",
        Status::InfeasibleStationary => "Isp",
    }
}

pub fn parse_status_code(code: &str) -> Option<Status> {
    match code {
        "Opt" => Some(Status::KktPoint),
        "Max" => Some(Status::MaxIterations),
        "Err" => Some(Status::SubsolverError),
        "Isp" => Some(Status::InfeasibleStationary),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "Problem")]
    pub problem: String,
    #[serde(rename = "Method")]
    pub method: String,
    #[serde(rename = "Obj")]
    pub obj: f64,
    #[serde(rename = "RE")]
    pub re: Option<f64>,
    #[serde(rename = "ConstraintViolation")]
    pub constraint_violation: f64,
    /// Empty for problems solved without slacks.
    #[serde(rename = "SlackInf")]
    pub slack_inf: Option<f64>,
    #[serde(rename = "Status")]
    pub status: String,
    #[serde(rename = "TimeSec")]
    pub time_sec: f64,
}

pub fn relative_error(obj: f64, reference: f64) -> f64 {
    (obj - reference).abs() / reference.abs().max(1.0)
}

/// Everything produced by one catalog run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: ReportRow,
    /// `None` when the run panicked.
    pub report: Option<SolverReport>,
    /// Present when the problem was solved through its slack reformulation.
    pub reformulated: Option<ReformulatedProblem>,
    pub error: Option<String>,
}

impl RunOutcome {
    /// Final `x` of the original variables.
    pub fn final_x(&self) -> Option<Vector> {
        let report = self.report.as_ref()?;
        Some(match &self.reformulated {
            Some(r) => r.split(&report.final_x).0,
            None => report.final_x.clone(),
        })
    }
}

/// Solves one entry: feasible entries through the slack reformulation,
/// infeasible ones as given (the slack problem is always feasible).
pub fn run_entry(entry: &CatalogEntry, cfg: &SolverConfig, policy: LambdaPolicy) -> RunOutcome {
    let started = Instant::now();
    let attempt = panic::catch_unwind(AssertUnwindSafe(|| -> Result<(SolverReport, Option<ReformulatedProblem>)> {
        if entry.feasible {
            let r = reformulate(entry, policy)?;
            let report = solve(&r.problem, &r.regularizer(), cfg)?;
            Ok((report, Some(r)))
        } else {
            let report = solve(&entry.base_problem, &Regularizer::Zero, cfg)?;
            Ok((report, None))
        }
    }));
    let elapsed = started.elapsed().as_secs_f64();
    let failed_row = |msg: &str| RunOutcome {
        row: ReportRow {
            problem: entry.name.clone(),
            method: METHOD_NAME.to_string(),
            obj: f64::NAN,
            re: None,
            constraint_violation: f64::NAN,
            slack_inf: None,
            status: status_code(Status::SubsolverError).to_string(),
            time_sec: elapsed,
        },
        report: None,
        reformulated: None,
        error: Some(msg.to_string()),
    };
    match attempt {
        Ok(Ok((report, reformulated))) => {
            let slack_inf = reformulated.as_ref().map(|r| r.split(&report.final_x).1.amax());
            let row = ReportRow {
                problem: entry.name.clone(),
                method: METHOD_NAME.to_string(),
                obj: report.final_objective,
                re: entry.reference_objective.map(|f| relative_error(report.final_objective, f)),
                constraint_violation: report.final_feasibility,
                slack_inf,
                status: status_code(report.status).to_string(),
                time_sec: report.wall_time_seconds,
            };
            RunOutcome {
                row,
                error: report.message.clone(),
                report: Some(report),
                reformulated,
            }
        }
        Ok(Err(err)) => failed_row(&err.to_string()),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "solver panicked".to_string());
            let mut out = failed_row(&msg);
            out.error = Some(format!("panic: {msg}"));
            out
        }
    }
}

/// Runs every entry, `jobs` at a time; results keep the input order.
pub fn run_suite(entries: &[CatalogEntry], cfg: &SolverConfig, policy: LambdaPolicy, jobs: usize) -> Result<Vec<RunOutcome>> {
    cfg.validate()?;
    policy.lambda(0.0)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| entries.par_iter().map(|e| run_entry(e, cfg, policy)).collect()))
}

/// Eight significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.7e}")
    } else {
        v.to_string()
    }
}

fn opt_number(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.method.clone(),
            format_number(r.obj),
            opt_number(r.re),
            format_number(r.constraint_violation),
            opt_number(r.slack_inf),
            r.status.clone(),
            format_number(r.time_sec),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report<R: std::io::Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<ReportRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?;
        if parse_status_code(&row.status).is_none() {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("unknown status `{}`", row.status),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub const TRACE_HEADER: [&str; 22] = [
    "k",
    "alpha",
    "tau",
    "tau_trial",
    "norm_v",
    "norm_u",
    "norm_s",
    "merit_before",
    "merit_after",
    "delta_q",
    "chi",
    "chi_bar",
    "feasibility",
    "stationarity",
    "norm_jtc",
    "accepted",
    "linearized_gain",
    "subsolver_iterations",
    "used_newton",
    "cauchy_slack",
    "delta_q_slack",
    "x",
];

/// One row per iteration; `x` is written as a space-separated list.
pub fn write_trace<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        let x = r.x.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(" ");
        w.write_record([
            r.k.to_string(),
            format_number(r.alpha),
            format_number(r.tau),
            opt_number(r.tau_trial),
            format_number(r.norm_v),
            format_number(r.norm_u),
            format_number(r.norm_s),
            format_number(r.merit_before),
            format_number(r.merit_after),
            format_number(r.delta_q),
            format_number(r.chi),
            format_number(r.chi_bar),
            format_number(r.feasibility),
            format_number(r.stationarity),
            format_number(r.norm_jtc),
            r.accepted.to_string(),
            format_number(r.linearized_gain),
            r.subsolver_iterations.to_string(),
            r.used_newton.to_string(),
            opt_number(r.cauchy_slack),
            format_number(r.delta_q_slack),
            x,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Summary {
    pub total: usize,
    pub feasible_count: usize,
    pub kkt_count: usize,
    /// Slack exactly zero.
    pub slack_zero_count: usize,
    /// `||a||_inf <= 1e-5`, exact zeros included.
    pub slack_small_count: usize,
}

pub fn summarize(rows: &[ReportRow]) -> Summary {
    let mut s = Summary {
        total: rows.len(),
        ..Default::default()
    };
    for r in rows {
        if r.constraint_violation <= FEASIBLE_TOL {
            s.feasible_count += 1;
        }
        if r.status == "Opt" {
            s.kkt_count += 1;
        }
        if let Some(a) = r.slack_inf {
            if a == 0.0 {
                s.slack_zero_count += 1;
            }
            if a <= SLACK_SMALL_TOL {
                s.slack_small_count += 1;
            }
        }
    }
    s
}

impl Summary {
    /// Aligned two-column table.
    pub fn table(&self) -> String {
        let rows = [
            ("Problems", self.total),
            ("Feasible", self.feasible_count),
            ("KKT Found", self.kkt_count),
            ("a is Zero", self.slack_zero_count),
            ("a is Small", self.slack_small_count),
        ];
        let mut out = String::new();
        for (label, count) in rows {
            out.push_str(&format!("{label:<12}{count:>6}\n"));
        }
        out
    }

    /// `key=value` pairs on one line.
    pub fn record(&self) -> String {
        format!(
            "total={} feasible_count={} kkt_count={} slack_zero_count={} slack_small_count={}",
            self.total, self.feasible_count, self.kkt_count, self.slack_zero_count, self.slack_small_count
        )
    }
}
