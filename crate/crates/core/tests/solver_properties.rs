mod common;

use eqprox::library::{instantiate, reformulate, LambdaPolicy};
use eqprox::{audit_trace, solve, Regularizer, SolverConfig, Status, Vector};
use proptest::prelude::*;

const FEASIBLE: [&str; 6] = ["circle-min-x", "hs7-quartic", "sphere-plane", "cubic-curve", "exp-surface", "rosenbrock-eq"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The per-iteration inequalities hold from arbitrary starts, whether or
    /// not the run converges.
    #[test]
    fn invariants_hold_from_perturbed_starts(which in 0usize..FEASIBLE.len(), shift in prop::collection::vec(-1.5f64..1.5, 3)) {
        let e = instantiate(FEASIBLE[which]).unwrap();
        let x0 = e.base_problem.x0() + Vector::from_iterator(e.n(), shift.iter().copied().cycle().take(e.n()));
        let base = e.base_problem.clone().with_start(x0).unwrap();
        let entry = eqprox::library::CatalogEntry { base_problem: base, ..e };
        let r = reformulate(&entry, LambdaPolicy::DefaultOffset).unwrap();
        let cfg = SolverConfig { max_iterations: 300, ..Default::default() };
        let report = solve(&r.problem, &r.regularizer(), &cfg).unwrap();
        let violations = audit_trace(&report.trace, &cfg);
        prop_assert!(violations.is_empty(), "{:?}", violations);
        if report.status == Status::KktPoint {
            prop_assert!(report.final_feasibility <= cfg.tol_feas && report.final_stationarity <= cfg.tol_stat);
        }
        prop_assert_eq!(report.accepted_count, report.trace.iter().filter(|t| t.accepted).count());
    }

    /// Explicit slack weights above the multiplier norm still recover the
    /// original solution with zero slack.
    #[test]
    fn exact_penalty_weights_recover_solution(lambda in 1.0f64..50.0) {
        let e = instantiate("sphere-plane").unwrap();
        let r = reformulate(&e, LambdaPolicy::Explicit(lambda)).unwrap();
        let report = solve(&r.problem, &r.regularizer(), &SolverConfig::default()).unwrap();
        prop_assert_eq!(report.status, Status::KktPoint);
        let (x, a) = r.split(&report.final_x);
        prop_assert!(a.amax() <= 1e-8);
        prop_assert!((x - e.solution.unwrap()).norm() <= 1e-5);
    }
}

#[test]
fn base_problems_solve_without_slacks() {
    for (e, _) in common::catalog_runs() {
        if !e.feasible {
            continue;
        }
        let report = solve(&e.base_problem, &Regularizer::Zero, &SolverConfig::default()).unwrap();
        assert_eq!(report.status, Status::KktPoint, "{}", e.name);
        let re = (report.final_objective - e.reference_objective.unwrap()).abs();
        assert!(re <= 1e-5, "{}: {re:e}", e.name);
        assert!(audit_trace(&report.trace, &SolverConfig::default()).is_empty(), "{}", e.name);
    }
}

#[test]
fn rank_deficient_start_uses_cauchy_step() {
    let e = instantiate("rankdef-start").unwrap();
    let report = solve(&e.base_problem, &Regularizer::Zero, &SolverConfig::default()).unwrap();
    let first = &report.trace[0];
    assert!(!first.used_newton);
    assert!(first.contraction_slack.is_none());
    assert_eq!(report.status, Status::KktPoint);
}

#[test]
fn solves_are_deterministic_and_thread_safe() {
    let e = instantiate("hs7-quartic").unwrap();
    let r = reformulate(&e, LambdaPolicy::DefaultOffset).unwrap();
    let reference = solve(&r.problem, &r.regularizer(), &SolverConfig::default()).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let r = r.clone();
            std::thread::spawn(move || solve(&r.problem, &r.regularizer(), &SolverConfig::default()).unwrap())
        })
        .collect();
    for h in handles {
        let out = h.join().unwrap();
        assert_eq!(out.final_x, reference.final_x);
        assert_eq!(out.iterations, reference.iterations);
    }
}

#[test]
fn alpha_follows_acceptance_exactly() {
    let e = instantiate("rosenbrock-eq").unwrap();
    let r = reformulate(&e, LambdaPolicy::DefaultOffset).unwrap();
    let cfg = SolverConfig::default();
    let report = solve(&r.problem, &r.regularizer(), &cfg).unwrap();
    assert!(report.trace.iter().any(|t| !t.accepted), "expected at least one rejected step");
    for w in report.trace.windows(2) {
        let expected = if w[0].accepted { w[0].alpha } else { w[0].alpha * cfg.xi };
        assert_eq!(w[1].alpha, expected);
        if w[0].accepted {
            assert_ne!(w[0].x, w[1].x);
        } else {
            assert_eq!(w[0].x, w[1].x);
        }
    }
}
