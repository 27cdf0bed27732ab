//! Slack reformulation `min f(x) + lambda ||a||_1 s.t. c(x) + a = 0`.
//!
//! The slack block makes the start feasible (`a0 = -c(x0)`) and the
//! constraint Jacobian `[J | I]` full row rank everywhere.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::{Matrix, ProblemInstance, Regularizer, SmoothModel, Vector};

use super::catalog::CatalogEntry;

/// Margin added to `||y*||_inf` by [`LambdaPolicy::DefaultOffset`].
pub const LAMBDA_OFFSET: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPolicy {
    /// `lambda = ||y*||_inf + 10`.
    DefaultOffset,
    Explicit(f64),
}

impl LambdaPolicy {
    pub fn lambda(self, reference_multiplier_norm: f64) -> Result<f64> {
        let value = match self {
            LambdaPolicy::DefaultOffset => reference_multiplier_norm + LAMBDA_OFFSET,
            LambdaPolicy::Explicit(v) => v,
        };
        if value.is_finite() && value > 0.0 {
            Ok(value)
        } else {
            Err(Error::Config(format!("slack weight must be positive, got {value}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReformulatedProblem {
    /// Problem over `(x, a)` with `n + m` variables.
    pub problem: ProblemInstance,
    pub lambda: f64,
    /// Positions of `a` inside `(x, a)`.
    pub slack_indices: Vec<usize>,
    pub base_n: usize,
}

impl ReformulatedProblem {
    pub fn regularizer(&self) -> Regularizer {
        Regularizer::weighted_l1(self.lambda, self.slack_indices.iter().copied())
            .expect("slack weight validated on construction")
    }

    /// Stacks `(x, a)`.
    pub fn lift(&self, x: &Vector, a: &Vector) -> Vector {
        let mut z = Vector::zeros(self.problem.n());
        z.rows_mut(0, self.base_n).copy_from(x);
        z.rows_mut(self.base_n, self.slack_indices.len()).copy_from(a);
        z
    }

    /// Splits `(x, a)`.
    pub fn split(&self, z: &Vector) -> (Vector, Vector) {
        let m = self.slack_indices.len();
        (z.rows(0, self.base_n).into_owned(), z.rows(self.base_n, m).into_owned())
    }

    /// Same problem started from `(x, a)`.
    pub fn started_at(&self, x: &Vector, a: &Vector) -> Result<Self> {
        if x.len() != self.base_n || a.len() != self.slack_indices.len() {
            return Err(Error::Dimension("start point does not match the reformulated problem".into()));
        }
        Ok(Self {
            problem: self.problem.clone().with_start(self.lift(x, a))?,
            ..self.clone()
        })
    }
}

struct SlackModel {
    base: Arc<dyn SmoothModel>,
    n: usize,
    m: usize,
}

impl SlackModel {
    fn x<'a>(&self, z: &'a Vector) -> nalgebra::DVectorView<'a, f64> {
        z.rows(0, self.n)
    }
}

impl SmoothModel for SlackModel {
    fn objective(&self, z: &Vector) -> f64 {
        self.base.objective(&self.x(z).into_owned())
    }

    fn gradient(&self, z: &Vector) -> Vector {
        let g = self.base.gradient(&self.x(z).into_owned());
        if g.len() != self.n {
            // wrong shapes pass through so ProblemInstance reports them
            return g;
        }
        let mut out = Vector::zeros(self.n + self.m);
        out.rows_mut(0, self.n).copy_from(&g);
        out
    }

    fn constraints(&self, z: &Vector) -> Vector {
        let c = self.base.constraints(&self.x(z).into_owned());
        if c.len() != self.m {
            return c;
        }
        c + z.rows(self.n, self.m)
    }

    fn jacobian(&self, z: &Vector) -> Matrix {
        let j = self.base.jacobian(&self.x(z).into_owned());
        if j.shape() != (self.m, self.n) {
            return j;
        }
        let mut out = Matrix::zeros(self.m, self.n + self.m);
        out.view_mut((0, 0), (self.m, self.n)).copy_from(&j);
        out.view_mut((0, self.n), (self.m, self.m)).fill_with_identity();
        out
    }
}

/// Builds the slack reformulation of `base` with weight `lambda`.
pub fn reformulate_problem(base: &ProblemInstance, lambda: f64) -> Result<ReformulatedProblem> {
    let lambda = LambdaPolicy::Explicit(lambda).lambda(0.0)?;
    let (n, m) = (base.n(), base.m());
    let c0 = base.constraints(base.x0())?;
    let mut z0 = Vector::zeros(n + m);
    z0.rows_mut(0, n).copy_from(base.x0());
    z0.rows_mut(n, m).copy_from(&(-c0));
    let model = SlackModel {
        base: base.model().clone(),
        n,
        m,
    };
    let mut problem = ProblemInstance::new(base.name(), n + m, m, z0, Arc::new(model))?;
    if let Some(f) = base.reference_objective() {
        problem = problem.with_reference_objective(f);
    }
    Ok(ReformulatedProblem {
        problem,
        lambda,
        slack_indices: (n..n + m).collect(),
        base_n: n,
    })
}

pub fn reformulate(entry: &CatalogEntry, policy: LambdaPolicy) -> Result<ReformulatedProblem> {
    let lambda = policy.lambda(entry.reference_multiplier_norm)?;
    reformulate_problem(&entry.base_problem, lambda)
}
