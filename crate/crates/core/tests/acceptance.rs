//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use eqprox::harness::RunOutcome;
use eqprox::library::{reformulate, CatalogEntry, LambdaPolicy};
use eqprox::tangential::solve_tangential;
use eqprox::{audit_trace, solve, SolverConfig, Status, SubsolverConfig, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn feasible_runs(runs: &[(CatalogEntry, RunOutcome)]) -> impl Iterator<Item = &(CatalogEntry, RunOutcome)> {
    runs.iter().filter(|(e, _)| e.feasible)
}

fn convergence(runs: &[(CatalogEntry, RunOutcome)], cfg: &SolverConfig) -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    for (e, o) in feasible_runs(runs) {
        count += 1;
        let ok = o.report.as_ref().is_some_and(|r| {
            r.status == Status::KktPoint
                && r.final_feasibility <= cfg.tol_feas
                && r.final_stationarity <= cfg.tol_stat
                && r.iterations <= 1000
                && r.wall_time_seconds <= 5.0
        });
        if !ok {
            failures.push(format!("{} ({})", e.name, o.row.status));
        }
    }
    let enough = count >= 10 && runs.len() >= 12;
    check(
        enough && failures.is_empty(),
        format!("{}/{count} feasible problems Opt, catalog size {}; failures: {failures:?}", count - failures.len(), runs.len()),
    )
}

fn structure(runs: &[(CatalogEntry, RunOutcome)]) -> Outcome {
    let total = feasible_runs(runs).count();
    let small = feasible_runs(runs).filter(|(_, o)| o.row.slack_inf.is_some_and(|a| a <= 1e-5)).count();
    let zero = feasible_runs(runs).filter(|(_, o)| o.row.slack_inf == Some(0.0)).count();
    let ratio = small as f64 / total.max(1) as f64;
    check(total > 0 && ratio >= 0.8, format!("{small}/{total} with ||a||_inf <= 1e-5 (ratio {ratio:.3}), {zero} exactly zero"))
}

fn accuracy(runs: &[(CatalogEntry, RunOutcome)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut failures = Vec::new();
    for (e, o) in runs {
        let (Some(re), "Opt") = (o.row.re, o.row.status.as_str()) else { continue };
        checked += 1;
        worst = worst.max(re);
        if re > 1e-5 {
            failures.push(format!("{} RE={re:.3e}", e.name));
        }
    }
    check(checked > 0 && failures.is_empty(), format!("{checked} runs checked, worst RE {worst:.3e}; failures: {failures:?}"))
}

fn infeasible_certificate(runs: &[(CatalogEntry, RunOutcome)]) -> Outcome {
    let Some((e, o)) = runs.iter().find(|(e, _)| !e.feasible) else {
        return check(false, "no infeasible catalog entry");
    };
    let Some(r) = &o.report else {
        return check(false, format!("{}: run failed", e.name));
    };
    let pe = e.base_problem.evaluate(&r.final_x).unwrap();
    let c = pe.c.norm();
    let jtc = (pe.jac.transpose() * &pe.c).norm();
    check(
        r.status == Status::InfeasibleStationary && c >= 1e-2 && jtc <= 1e-12 && r.iterations <= 1000,
        format!("{}: status {}, ||c|| = {c:.3e}, ||J^T c|| = {jtc:.3e}, {} iterations", e.name, r.status, r.iterations),
    )
}

fn invariants(runs: &[(CatalogEntry, RunOutcome)], cfg: &SolverConfig) -> Outcome {
    let mut records = 0;
    let mut violations = Vec::new();
    for (e, o) in runs {
        let Some(r) = &o.report else {
            violations.push(format!("{}: no trace", e.name));
            continue;
        };
        records += r.trace.len();
        for v in audit_trace(&r.trace, cfg) {
            if v.check != "linearized contraction" {
                violations.push(format!("{}: {v}", e.name));
            }
        }
    }
    check(violations.is_empty() && records > 0, format!("{records} iterations audited, {} violations {violations:?}", violations.len()))
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst_dist: f64 = 0.0;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..200 {
        let p = common::random_subproblem(&mut rng);
        let (u_star, obj_star) = common::brute_force(&p);
        match solve_tangential(&p.g, &p.jac, p.alpha, &p.r, &p.x_shift, SubsolverConfig::default()) {
            Ok(sol) => {
                let dist = (&sol.u - &u_star).norm();
                let gap = p.objective(&sol.u) - obj_star;
                worst_dist = worst_dist.max(dist);
                worst_gap = worst_gap.max(gap);
                if dist > 1e-6 || gap > 1e-9 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        failures == 0 && secs <= 60.0,
        format!("200 instances, {failures} mismatches, max ||u - u*|| {worst_dist:.3e}, max gap {worst_gap:.3e}, {secs:.2}s"),
    )
}

fn contraction(runs: &[(CatalogEntry, RunOutcome)], cfg: &SolverConfig) -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    for (e, o) in runs {
        let Some(r) = &o.report else { continue };
        checked += r.trace.iter().filter(|t| t.contraction_slack.is_some()).count();
        for v in audit_trace(&r.trace, cfg) {
            if v.check == "linearized contraction" {
                violations.push(format!("{}: {v}", e.name));
            }
        }
    }
    check(checked > 0 && violations.is_empty(), format!("{checked} full-rank iterations checked, violations {violations:?}"))
}

fn fixed_point(runs: &[(CatalogEntry, RunOutcome)], cfg: &SolverConfig) -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (e, o) in runs {
        if o.row.status != "Opt" || o.row.re.is_none() {
            continue;
        }
        let Some(x_star) = &e.solution else { continue };
        checked += 1;
        let r = reformulate(e, LambdaPolicy::DefaultOffset).unwrap();
        let start = r.started_at(x_star, &Vector::zeros(e.m())).unwrap();
        let report = solve(&start.problem, &start.regularizer(), cfg).unwrap();
        if report.status != Status::KktPoint || report.iterations > 2 {
            failures.push(format!("{}: {} after {}", e.name, report.status, report.iterations));
        }
    }
    check(checked > 0 && failures.is_empty(), format!("{checked} solutions restarted; failures: {failures:?}"))
}

fn main() -> ExitCode {
    let cfg = SolverConfig::default();
    let runs = common::catalog_runs();
    let results = [
        ("end-to-end convergence", convergence(&runs, &cfg)),
        ("structure preservation", structure(&runs)),
        ("objective accuracy", accuracy(&runs)),
        ("infeasible certificate", infeasible_certificate(&runs)),
        ("iteration invariants", invariants(&runs, &cfg)),
        ("subsolver oracle equivalence", oracle_equivalence()),
        ("normal-step contraction", contraction(&runs, &cfg)),
        ("KKT fixed point", fixed_point(&runs, &cfg)),
    ];
    let mut all = true;
    for (i, (name, out)) in results.iter().enumerate() {
        all &= out.pass;
        println!("criterion {} [{name}]: {} - {}", i + 1, if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
