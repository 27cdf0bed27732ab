//! Problem abstraction: a smooth objective `f`, smooth equality constraints
//! `c(x) = 0`, and a separable convex regularizer `r`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Callbacks for the smooth part of a problem.
///
/// Implementations must be reentrant; a single model may be evaluated from
/// several worker threads at once.
pub trait SmoothModel: Send + Sync {
    fn objective(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn constraints(&self, x: &Vector) -> Vector;
    /// Dense `m x n` constraint Jacobian.
    fn jacobian(&self, x: &Vector) -> Matrix;
}

/// [`SmoothModel`] assembled from four closures.
pub struct FnModel<F, G, C, J> {
    pub objective: F,
    pub gradient: G,
    pub constraints: C,
    pub jacobian: J,
}

impl<F, G, C, J> SmoothModel for FnModel<F, G, C, J>
where
    F: Fn(&Vector) -> f64 + Send + Sync,
    G: Fn(&Vector) -> Vector + Send + Sync,
    C: Fn(&Vector) -> Vector + Send + Sync,
    J: Fn(&Vector) -> Matrix + Send + Sync,
{
    fn objective(&self, x: &Vector) -> f64 {
        (self.objective)(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }
    fn constraints(&self, x: &Vector) -> Vector {
        (self.constraints)(x)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        (self.jacobian)(x)
    }
}

/// An equality-constrained problem `min f(x) s.t. c(x) = 0` with metadata.
///
/// Immutable after construction; cloning shares the underlying model.
#[derive(Clone)]
pub struct ProblemInstance {
    name: String,
    n: usize,
    m: usize,
    x0: Vector,
    reference_objective: Option<f64>,
    model: Arc<dyn SmoothModel>,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("x0", &self.x0.as_slice())
            .field("reference_objective", &self.reference_objective)
            .finish_non_exhaustive()
    }
}

/// Quantities cached at one point: `f`, `g = grad f`, `c`, and `J`.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub f: f64,
    pub g: Vector,
    pub c: Vector,
    pub jac: Matrix,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        x0: Vector,
        model: Arc<dyn SmoothModel>,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Dimension(format!("need n >= 1 and m >= 1, got n={n}, m={m}")));
        }
        if m > n {
            return Err(Error::Dimension(format!("need m <= n, got n={n}, m={m}")));
        }
        if x0.len() != n {
            return Err(Error::Dimension(format!("x0 has length {}, expected {n}", x0.len())));
        }
        if !all_finite(x0.as_slice()) {
            return Err(Error::Evaluation { quantity: "starting point" });
        }
        Ok(Self {
            name: name.into(),
            n,
            m,
            x0,
            reference_objective: None,
            model,
        })
    }

    pub fn with_reference_objective(mut self, value: f64) -> Self {
        self.reference_objective = Some(value);
        self
    }

    pub fn with_start(mut self, x0: Vector) -> Result<Self> {
        if x0.len() != self.n {
            return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), self.n)));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn x0(&self) -> &Vector {
        &self.x0
    }
    pub fn reference_objective(&self) -> Option<f64> {
        self.reference_objective
    }
    pub fn model(&self) -> &Arc<dyn SmoothModel> {
        &self.model
    }

    pub fn objective(&self, x: &Vector) -> Result<f64> {
        self.check_len(x)?;
        let f = self.model.objective(x);
        if !f.is_finite() {
            return Err(Error::Evaluation { quantity: "objective" });
        }
        Ok(f)
    }

    pub fn constraints(&self, x: &Vector) -> Result<Vector> {
        self.check_len(x)?;
        let c = self.model.constraints(x);
        if c.len() != self.m {
            return Err(Error::Dimension(format!("c(x) has length {}, expected {}", c.len(), self.m)));
        }
        if !all_finite(c.as_slice()) {
            return Err(Error::Evaluation { quantity: "constraint value" });
        }
        Ok(c)
    }

    /// Evaluates `f`, `g`, `c` and `J` at the same point.
    pub fn evaluate(&self, x: &Vector) -> Result<PointEval> {
        let f = self.objective(x)?;
        let c = self.constraints(x)?;
        let g = self.model.gradient(x);
        if g.len() != self.n {
            return Err(Error::Dimension(format!("gradient has length {}, expected {}", g.len(), self.n)));
        }
        if !all_finite(g.as_slice()) {
            return Err(Error::Evaluation { quantity: "gradient" });
        }
        let jac = self.model.jacobian(x);
        if jac.shape() != (self.m, self.n) {
            return Err(Error::Dimension(format!(
                "Jacobian is {:?}, expected ({}, {})",
                jac.shape(),
                self.m,
                self.n
            )));
        }
        if !all_finite(jac.as_slice()) {
            return Err(Error::Evaluation { quantity: "Jacobian" });
        }
        Ok(PointEval { f, g, c, jac })
    }

    /// Compares the gradient and Jacobian callbacks against central finite
    /// differences with step `1e-6 * max(1, |x_i|)`.
    pub fn check_derivatives(&self, x: &Vector, rtol: f64) -> Result<()> {
        let eval = self.evaluate(x)?;
        let mut probe = x.clone();
        for i in 0..self.n {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let f_plus = self.objective(&probe)?;
            let c_plus = self.constraints(&probe)?;
            probe[i] = x[i] - h;
            let f_minus = self.objective(&probe)?;
            let c_minus = self.constraints(&probe)?;
            probe[i] = x[i];

            let df = (f_plus - f_minus) / (2.0 * h);
            if !close(eval.g[i], df, rtol) {
                return Err(Error::DerivativeCheck {
                    what: "gradient",
                    index: format!("{i}"),
                    analytic: eval.g[i],
                    numeric: df,
                });
            }
            for j in 0..self.m {
                let dc = (c_plus[j] - c_minus[j]) / (2.0 * h);
                if !close(eval.jac[(j, i)], dc, rtol) {
                    return Err(Error::DerivativeCheck {
                        what: "Jacobian",
                        index: format!("({j}, {i})"),
                        analytic: eval.jac[(j, i)],
                        numeric: dc,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_len(&self, x: &Vector) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("x has length {}, expected {}", x.len(), self.n)));
        }
        if !all_finite(x.as_slice()) {
            return Err(Error::Evaluation { quantity: "evaluation point" });
        }
        Ok(())
    }
}

/// Free-function form of [`ProblemInstance::evaluate`].
pub fn evaluate_point(problem: &ProblemInstance, x: &Vector) -> Result<PointEval> {
    problem.evaluate(x)
}

fn close(analytic: f64, numeric: f64, rtol: f64) -> bool {
    (analytic - numeric).abs() <= rtol * analytic.abs().max(numeric.abs()).max(1.0)
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// The convex term `r`: zero, or `weight * sum_{i in indices} |x_i|`.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    Zero,
    WeightedL1 { weight: f64, indices: Vec<usize> },
}

impl Regularizer {
    /// Weighted l1 norm over `indices`; the index list is sorted and deduplicated.
    pub fn weighted_l1(weight: f64, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Config(format!("l1 weight must be finite and nonnegative, got {weight}")));
        }
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        Ok(Regularizer::WeightedL1 { weight, indices })
    }

    pub fn weight(&self) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::WeightedL1 { weight, .. } => *weight,
        }
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            Regularizer::Zero => &[],
            Regularizer::WeightedL1 { indices, .. } => indices,
        }
    }

    /// True when `r` is identically zero (including an l1 term with weight 0).
    pub fn is_zero(&self) -> bool {
        match self {
            Regularizer::Zero => true,
            Regularizer::WeightedL1 { weight, indices } => *weight == 0.0 || indices.is_empty(),
        }
    }

    /// `mask[i]` is true when coordinate `i` carries the l1 term.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in self.indices() {
            if i < n {
                mask[i] = true;
            }
        }
        mask
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices().last().copied()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::WeightedL1 { weight, indices } => {
                weight * indices.iter().map(|&i| x[i].abs()).sum::<f64>()
            }
        }
    }

    /// Tests `g_r in dr(x)` up to `tol`. A coordinate with `|x_i| <= tol`
    /// is treated as zero, so its subgradient may be anywhere in
    /// `[-weight - tol, weight + tol]`.
    pub fn contains_subgradient(&self, x: &Vector, g_r: &Vector, tol: f64) -> bool {
        match self {
            Regularizer::Zero => g_r.amax() <= tol,
            Regularizer::WeightedL1 { weight, .. } => {
                let mask = self.mask(x.len());
                (0..x.len()).all(|i| {
                    if !mask[i] {
                        return g_r[i].abs() <= tol;
                    }
                    if g_r[i].abs() > weight + tol {
                        return false;
                    }
                    if x[i].abs() > tol {
                        let target = weight * x[i].signum();
                        return (g_r[i] - target).abs() <= tol;
                    }
                    true
                })
            }
        }
    }
}

/// Free-function form of [`Regularizer::value`].
pub fn regularizer_value(r: &Regularizer, x: &Vector) -> f64 {
    r.value(x)
}

/// Free-function form of [`Regularizer::contains_subgradient`].
pub fn subgradient_membership(r: &Regularizer, x: &Vector, g_r: &Vector, tol: f64) -> bool {
    r.contains_subgradient(x, g_r, tol)
}
