//! Built-in test problems with known solutions.
//!
//! Every feasible entry stores an analytic minimizer `x*`, the multiplier
//! `y*` solving `grad f(x*) = J(x*)^T y*`, and `f(x*)`. The unit tests
//! re-derive all three from the callbacks.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::{FnModel, Matrix, ProblemInstance, SmoothModel, Vector};

/// Relative tolerance for the derivative check run by [`instantiate`].
pub const DERIVATIVE_CHECK_RTOL: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub base_problem: ProblemInstance,
    /// `||y*||_inf`, used to pick the slack penalty weight.
    pub reference_multiplier_norm: f64,
    /// `f(x*)`; `None` when the constraints cannot be satisfied.
    pub reference_objective: Option<f64>,
    pub solution: Option<Vector>,
    pub multiplier: Option<Vector>,
    pub feasible: bool,
}

impl CatalogEntry {
    pub fn n(&self) -> usize {
        self.base_problem.n()
    }

    pub fn m(&self) -> usize {
        self.base_problem.m()
    }
}

type Builder = fn() -> CatalogEntry;

const ENTRIES: &[(&str, Builder)] = &[
    ("affine-projection", affine_projection),
    ("circle-min-x", circle_min_x),
    ("cubic-curve", cubic_curve),
    ("exp-surface", exp_surface),
    ("hs28-plane", hs28_plane),
    ("hs48-affine", hs48_affine),
    ("hs7-quartic", hs7_quartic),
    ("infeasible-parabola", infeasible_parabola),
    ("linear-circle", linear_circle),
    ("rankdef-start", rankdef_start),
    ("rosenbrock-eq", rosenbrock_eq),
    ("sphere-linear", sphere_linear),
    ("sphere-plane", sphere_plane),
    ("trig-curve", trig_curve),
];

/// Sorted names of all built-in problems.
pub fn list_problems() -> Vec<&'static str> {
    let mut names: Vec<_> = ENTRIES.iter().map(|(name, _)| *name).collect();
    names.sort_unstable();
    names
}

/// Builds a catalog entry and checks its derivatives against finite
/// differences at the start point and, when known, at the solution.
pub fn instantiate(name: &str) -> Result<CatalogEntry> {
    let build = ENTRIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, b)| *b)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))?;
    let entry = build();
    entry
        .base_problem
        .check_derivatives(entry.base_problem.x0(), DERIVATIVE_CHECK_RTOL)?;
    if let Some(x) = &entry.solution {
        entry.base_problem.check_derivatives(x, DERIVATIVE_CHECK_RTOL)?;
    }
    Ok(entry)
}

fn v(s: &[f64]) -> Vector {
    Vector::from_row_slice(s)
}

fn rows(m: usize, n: usize, s: &[f64]) -> Matrix {
    Matrix::from_row_slice(m, n, s)
}

struct Known {
    x: &'static [f64],
    y: Vec<f64>,
    f: f64,
}

fn entry(
    name: &str,
    description: &str,
    m: usize,
    x0: &[f64],
    model: Arc<dyn SmoothModel>,
    known: Option<Known>,
) -> CatalogEntry {
    let n = x0.len();
    let mut base = ProblemInstance::new(name, n, m, v(x0), model).expect("catalog dimensions");
    let (reference_objective, solution, multiplier) = match known {
        Some(k) => {
            base = base.with_reference_objective(k.f);
            (Some(k.f), Some(v(k.x)), Some(Vector::from_vec(k.y)))
        }
        None => (None, None, None),
    };
    CatalogEntry {
        name: name.to_string(),
        description: description.to_string(),
        reference_multiplier_norm: multiplier.as_ref().map_or(0.0, |y| y.amax()),
        feasible: solution.is_some(),
        base_problem: base,
        reference_objective,
        solution,
        multiplier,
    }
}

/// `f = 0.5 ||x - p||^2` with the given constraints.
fn projection<C, J>(p: &[f64], constraints: C, jacobian: J) -> Arc<dyn SmoothModel>
where
    C: Fn(&Vector) -> Vector + Send + Sync + 'static,
    J: Fn(&Vector) -> Matrix + Send + Sync + 'static,
{
    let p1 = v(p);
    let p2 = p1.clone();
    Arc::new(FnModel {
        objective: move |x: &Vector| 0.5 * (x - &p1).norm_squared(),
        gradient: move |x: &Vector| x - &p2,
        constraints,
        jacobian,
    })
}

fn circle_min_x() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| x[0],
        gradient: |_x: &Vector| v(&[1.0, 0.0]),
        constraints: |x: &Vector| v(&[x[0] * x[0] + x[1] * x[1] - 4.0]),
        jacobian: |x: &Vector| rows(1, 2, &[2.0 * x[0], 2.0 * x[1]]),
    };
    entry(
        "circle-min-x",
        "min x1 s.t. x1^2 + x2^2 = 4",
        1,
        &[1.0, 1.0],
        Arc::new(model),
        Some(Known {
            x: &[-2.0, 0.0],
            y: vec![-0.25],
            f: -2.0,
        }),
    )
}

fn rosenbrock_eq() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| (1.0 - x[0]).powi(2),
        gradient: |x: &Vector| v(&[-2.0 * (1.0 - x[0]), 0.0]),
        constraints: |x: &Vector| v(&[10.0 * (x[1] - x[0] * x[0])]),
        jacobian: |x: &Vector| rows(1, 2, &[-20.0 * x[0], 10.0]),
    };
    entry(
        "rosenbrock-eq",
        "min (1 - x1)^2 s.t. 10 (x2 - x1^2) = 0",
        1,
        &[-1.2, 1.0],
        Arc::new(model),
        Some(Known {
            x: &[1.0, 1.0],
            y: vec![0.0],
            f: 0.0,
        }),
    )
}

fn linear_circle() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| x[0] + x[1],
        gradient: |_x: &Vector| v(&[1.0, 1.0]),
        constraints: |x: &Vector| v(&[x[0] * x[0] + x[1] * x[1] - 2.0]),
        jacobian: |x: &Vector| rows(1, 2, &[2.0 * x[0], 2.0 * x[1]]),
    };
    entry(
        "linear-circle",
        "min x1 + x2 s.t. x1^2 + x2^2 = 2",
        1,
        &[1.2, -0.3],
        Arc::new(model),
        Some(Known {
            x: &[-1.0, -1.0],
            y: vec![-0.5],
            f: -2.0,
        }),
    )
}

fn sphere_linear() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| x[0] + 2.0 * x[1] + 2.0 * x[2],
        gradient: |_x: &Vector| v(&[1.0, 2.0, 2.0]),
        constraints: |x: &Vector| v(&[x.norm_squared() - 9.0]),
        jacobian: |x: &Vector| rows(1, 3, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2]]),
    };
    entry(
        "sphere-linear",
        "min x1 + 2 x2 + 2 x3 s.t. ||x||^2 = 9",
        1,
        &[2.0, -1.0, 1.0],
        Arc::new(model),
        Some(Known {
            x: &[-1.0, -2.0, -2.0],
            y: vec![-0.5],
            f: -9.0,
        }),
    )
}

fn hs28_plane() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| (x[0] + x[1]).powi(2) + (x[1] + x[2]).powi(2),
        gradient: |x: &Vector| {
            let a = 2.0 * (x[0] + x[1]);
            let b = 2.0 * (x[1] + x[2]);
            v(&[a, a + b, b])
        },
        constraints: |x: &Vector| v(&[x[0] + 2.0 * x[1] + 3.0 * x[2] - 1.0]),
        jacobian: |_x: &Vector| rows(1, 3, &[1.0, 2.0, 3.0]),
    };
    entry(
        "hs28-plane",
        "min (x1 + x2)^2 + (x2 + x3)^2 s.t. x1 + 2 x2 + 3 x3 = 1",
        1,
        &[-4.0, 1.0, 1.0],
        Arc::new(model),
        Some(Known {
            x: &[0.5, -0.5, 0.5],
            y: vec![0.0],
            f: 0.0,
        }),
    )
}

fn hs48_affine() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| (x[0] - 1.0).powi(2) + (x[1] - x[2]).powi(2) + (x[3] - x[4]).powi(2),
        gradient: |x: &Vector| {
            let a = 2.0 * (x[1] - x[2]);
            let b = 2.0 * (x[3] - x[4]);
            v(&[2.0 * (x[0] - 1.0), a, -a, b, -b])
        },
        constraints: |x: &Vector| {
            v(&[
                x.iter().sum::<f64>() - 5.0,
                x[2] - 2.0 * (x[3] + x[4]) + 3.0,
            ])
        },
        jacobian: |_x: &Vector| rows(2, 5, &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, -2.0, -2.0]),
    };
    entry(
        "hs48-affine",
        "min (x1 - 1)^2 + (x2 - x3)^2 + (x4 - x5)^2 s.t. sum x = 5, x3 - 2 (x4 + x5) = -3",
        2,
        &[3.0, 5.0, -3.0, 2.0, -2.0],
        Arc::new(model),
        Some(Known {
            x: &[1.0; 5],
            y: vec![0.0, 0.0],
            f: 0.0,
        }),
    )
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn hs7_quartic() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| (1.0 + x[0] * x[0]).ln() - x[1],
        gradient: |x: &Vector| v(&[2.0 * x[0] / (1.0 + x[0] * x[0]), -1.0]),
        constraints: |x: &Vector| v(&[(1.0 + x[0] * x[0]).powi(2) + x[1] * x[1] - 4.0]),
        jacobian: |x: &Vector| rows(1, 2, &[4.0 * x[0] * (1.0 + x[0] * x[0]), 2.0 * x[1]]),
    };
    entry(
        "hs7-quartic",
        "min log(1 + x1^2) - x2 s.t. (1 + x1^2)^2 + x2^2 = 4",
        1,
        &[2.0, 2.0],
        Arc::new(model),
        Some(Known {
            x: &[0.0, SQRT3],
            y: vec![-1.0 / (2.0 * SQRT3)],
            f: -SQRT3,
        }),
    )
}

fn trig_curve() -> CatalogEntry {
    let model = projection(
        &[0.5, -0.5],
        |x: &Vector| v(&[x[1] - x[0].sin()]),
        |x: &Vector| rows(1, 2, &[-x[0].cos(), 1.0]),
    );
    entry(
        "trig-curve",
        "min 0.5 ||x - (0.5, -0.5)||^2 s.t. x2 = sin(x1)",
        1,
        &[1.0, 0.5],
        model,
        Some(Known {
            x: &[0.0, 0.0],
            y: vec![0.5],
            f: 0.25,
        }),
    )
}

fn cubic_curve() -> CatalogEntry {
    let model = projection(
        &[1.6, 0.2],
        |x: &Vector| v(&[x[0].powi(3) + x[1] - 1.0]),
        |x: &Vector| rows(1, 2, &[3.0 * x[0] * x[0], 1.0]),
    );
    entry(
        "cubic-curve",
        "min 0.5 ||x - (1.6, 0.2)||^2 s.t. x1^3 + x2 = 1",
        1,
        &[0.5, 0.5],
        model,
        Some(Known {
            x: &[1.0, 0.0],
            y: vec![-0.2],
            f: 0.2,
        }),
    )
}

fn exp_surface() -> CatalogEntry {
    let model = projection(
        &[-0.25, -0.25, 0.5],
        |x: &Vector| v(&[x[0].exp() + x[1] + x[2] * x[2] - 2.0]),
        |x: &Vector| rows(1, 3, &[x[0].exp(), 1.0, 2.0 * x[2]]),
    );
    entry(
        "exp-surface",
        "min 0.5 ||x - (-0.25, -0.25, 0.5)||^2 s.t. exp(x1) + x2 + x3^2 = 2",
        1,
        &[0.5, 0.5, 0.5],
        model,
        Some(Known {
            x: &[0.0, 0.0, 1.0],
            y: vec![0.25],
            f: 0.1875,
        }),
    )
}

fn sphere_plane() -> CatalogEntry {
    let model = projection(
        &[0.9, 1.5, 1.2],
        |x: &Vector| v(&[x.norm_squared() - 3.0, x[0] - x[1]]),
        |x: &Vector| rows(2, 3, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2], 1.0, -1.0, 0.0]),
    );
    entry(
        "sphere-plane",
        "min 0.5 ||x - (0.9, 1.5, 1.2)||^2 s.t. ||x||^2 = 3, x1 = x2",
        2,
        &[2.0, 0.5, 1.0],
        model,
        Some(Known {
            x: &[1.0, 1.0, 1.0],
            y: vec![-0.1, 0.3],
            f: 0.15,
        }),
    )
}

fn affine_projection() -> CatalogEntry {
    let model = projection(
        &[0.5, -1.5, 0.0, 0.0],
        |x: &Vector| v(&[x[0] + x[1] + x[2] + x[3] - 2.0, x[0] - x[1] + 2.0 * x[2] - 1.0]),
        |_x: &Vector| rows(2, 4, &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 2.0, 0.0]),
    );
    entry(
        "affine-projection",
        "min 0.5 ||x - (0.5, -1.5, 0, 0)||^2 s.t. A x = b",
        2,
        &[0.0, 0.0, 0.0, 0.0],
        model,
        Some(Known {
            x: &[1.0, 0.0, 0.0, 1.0],
            y: vec![1.0, -0.5],
            f: 1.75,
        }),
    )
}

fn rankdef_start() -> CatalogEntry {
    // the two constraint gradients coincide at x1 = 0.5
    let model = projection(
        &[1.0, 0.9, 0.9],
        |x: &Vector| v(&[x[0] + x[1] + x[2] - 3.0, x[0] * x[0] + x[1] + x[2] - 3.0]),
        |x: &Vector| rows(2, 3, &[1.0, 1.0, 1.0, 2.0 * x[0], 1.0, 1.0]),
    );
    entry(
        "rankdef-start",
        "min 0.5 ||x - (1, 0.9, 0.9)||^2 s.t. x1 + x2 + x3 = 3, x1^2 + x2 + x3 = 3, rank-deficient at x0",
        2,
        &[0.5, 1.0, 1.0],
        model,
        Some(Known {
            x: &[1.0, 1.0, 1.0],
            y: vec![0.2, -0.1],
            f: 0.01,
        }),
    )
}

fn infeasible_parabola() -> CatalogEntry {
    let model = FnModel {
        objective: |x: &Vector| x[0] + (x[1] - 1.0).powi(2),
        gradient: |x: &Vector| v(&[1.0, 2.0 * (x[1] - 1.0)]),
        constraints: |x: &Vector| v(&[x[0] * x[0] + 1.0]),
        jacobian: |x: &Vector| rows(1, 2, &[2.0 * x[0], 0.0]),
    };
    entry(
        "infeasible-parabola",
        "min x1 + (x2 - 1)^2 s.t. x1^2 + 1 = 0 (no feasible point)",
        1,
        &[1.5, 0.0],
        Arc::new(model),
        None,
    )
}
