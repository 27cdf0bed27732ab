//! Test problems: the built-in catalog, the slack reformulation, and a
//! loader for problems written as expressions.

pub mod catalog;
pub mod expr;
pub mod problem_file;
pub mod reformulate;

pub use catalog::{instantiate, list_problems, CatalogEntry};
pub use problem_file::{load_problem, parse_problem};
pub use reformulate::{reformulate, reformulate_problem, LambdaPolicy, ReformulatedProblem};
