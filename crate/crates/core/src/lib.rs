//! Proximal-gradient method for `min f(x) + r(x) s.t. c(x) = 0` with a
//! smooth objective `f`, smooth equality constraints `c`, and a weighted
//! l1 regularizer `r`.
//!
//! Each iteration combines a feasibility-restoring normal step with a
//! tangential proximal step computed in the null space of the constraint
//! Jacobian, and globalizes with an l2 merit function.
//!
//! ```
//! use eqprox::library::{instantiate, reformulate, LambdaPolicy};
//! use eqprox::{solve, SolverConfig, Status};
//!
//! let entry = instantiate("hs7-quartic")?;
//! let r = reformulate(&entry, LambdaPolicy::DefaultOffset)?;
//! let report = solve(&r.problem, &r.regularizer(), &SolverConfig::default())?;
//! assert_eq!(report.status, Status::KktPoint);
//! # Ok::<(), eqprox::Error>(())
//! ```

pub mod error;
pub mod harness;
pub mod library;
mod linalg;
pub mod merit;
pub mod normal_step;
pub mod problem;
pub mod solver;
pub mod tangential;

pub use error::{Error, Result};
pub use problem::{evaluate_point, FnModel, Matrix, PointEval, ProblemInstance, Regularizer, SmoothModel, Vector};
pub use solver::{audit_trace, solve, IterationRecord, SolverConfig, SolverReport, Status};
pub use tangential::SubsolverConfig;
