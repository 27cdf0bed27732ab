//! Loader for problems described in a small line-based text format.
//!
//! ```text
//! # comment
//! name = circle
//! n = 2
//! x0 = 1, 1
//! objective = x1
//! constraint = x1^2 + x2^2 - 4
//! reference_objective = -2          # optional
//! reference_multiplier_norm = 0.25  # optional, defaults to 0
//! ```
//!
//! `constraint` may repeat; the number of constraints is the number of
//! such lines. Expressions use the grammar in [`super::expr`].

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::{Matrix, ProblemInstance, SmoothModel, Vector};

use super::catalog::CatalogEntry;
use super::expr::Expr;

struct ExprModel {
    objective: Expr,
    constraints: Vec<Expr>,
    n: usize,
}

impl SmoothModel for ExprModel {
    fn objective(&self, x: &Vector) -> f64 {
        self.objective.eval(x.as_slice())
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.n);
        self.objective.eval_grad(x.as_slice(), g.as_mut_slice());
        g
    }

    fn constraints(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.constraints.len(), self.constraints.iter().map(|c| c.eval(x.as_slice())))
    }

    fn jacobian(&self, x: &Vector) -> Matrix {
        let mut jac = Matrix::zeros(self.constraints.len(), self.n);
        let mut row = vec![0.0; self.n];
        for (i, c) in self.constraints.iter().enumerate() {
            c.eval_grad(x.as_slice(), &mut row);
            for (j, v) in row.iter().enumerate() {
                jac[(i, j)] = *v;
            }
        }
        jac
    }
}

fn parse_number(value: &str, line: usize, key: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("`{key}` expects a number, got `{}`", value.trim()),
    })
}

/// Parses a problem description.
pub fn parse_problem(src: &str) -> Result<CatalogEntry> {
    let mut name = None;
    let mut n: Option<(usize, usize)> = None;
    let mut x0: Option<(usize, String)> = None;
    let mut objective: Option<(usize, String)> = None;
    let mut constraints: Vec<(usize, String)> = Vec::new();
    let mut reference_objective = None;
    let mut reference_multiplier_norm = 0.0;

    for (idx, raw) in src.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (key, value) = text.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let dup = |seen: bool| {
            if seen {
                Err(Error::Parse {
                    line,
                    msg: format!("duplicate key `{key}`"),
                })
            } else {
                Ok(())
            }
        };
        match key {
            "name" => {
                dup(name.is_some())?;
                if value.is_empty() {
                    return Err(Error::Parse {
                        line,
                        msg: "empty problem name".into(),
                    });
                }
                name = Some(value.to_string());
            }
            "n" => {
                dup(n.is_some())?;
                let v = value.parse::<usize>().ok().filter(|&v| v > 0).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("`n` expects a positive integer, got `{value}`"),
                })?;
                n = Some((line, v));
            }
            "x0" => {
                dup(x0.is_some())?;
                x0 = Some((line, value.to_string()));
            }
            "objective" => {
                dup(objective.is_some())?;
                objective = Some((line, value.to_string()));
            }
            "constraint" => constraints.push((line, value.to_string())),
            "reference_objective" => {
                dup(reference_objective.is_some())?;
                reference_objective = Some(parse_number(value, line, key)?);
            }
            "reference_multiplier_norm" => {
                let v = parse_number(value, line, key)?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Parse {
                        line,
                        msg: "`reference_multiplier_norm` must be nonnegative".into(),
                    });
                }
                reference_multiplier_norm = v;
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }

    let last = src.lines().count().max(1);
    let missing = |what: &str| Error::Parse {
        line: last,
        msg: format!("missing `{what}`"),
    };
    let name = name.ok_or_else(|| missing("name"))?;
    let (n_line, n) = n.ok_or_else(|| missing("n"))?;
    let (x0_line, x0_text) = x0.ok_or_else(|| missing("x0"))?;
    let (obj_line, obj_text) = objective.ok_or_else(|| missing("objective"))?;
    if constraints.is_empty() {
        return Err(missing("constraint"));
    }

    let x0 = x0_text
        .split(',')
        .map(|s| parse_number(s, x0_line, "x0"))
        .collect::<Result<Vec<_>>>()?;
    if x0.len() != n {
        return Err(Error::Parse {
            line: x0_line,
            msg: format!("`x0` has {} entries but n = {n}", x0.len()),
        });
    }
    let parse_expr = |text: &str, line: usize| {
        Expr::parse(text, n).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })
    };
    let objective = parse_expr(&obj_text, obj_line)?;
    let constraint_exprs = constraints
        .iter()
        .map(|(line, text)| parse_expr(text, *line))
        .collect::<Result<Vec<_>>>()?;
    let m = constraint_exprs.len();
    if m > n {
        return Err(Error::Parse {
            line: n_line,
            msg: format!("{m} constraints exceed n = {n}"),
        });
    }

    let model = ExprModel {
        objective,
        constraints: constraint_exprs,
        n,
    };
    let mut base = ProblemInstance::new(name.clone(), n, m, Vector::from_vec(x0), Arc::new(model))?;
    if let Some(f) = reference_objective {
        base = base.with_reference_objective(f);
    }
    Ok(CatalogEntry {
        description: format!("loaded from text ({n} variables, {m} constraints)"),
        name,
        base_problem: base,
        reference_multiplier_norm,
        reference_objective,
        solution: None,
        multiplier: None,
        feasible: true,
    })
}

pub fn load_problem(path: &Path) -> Result<CatalogEntry> {
    parse_problem(&std::fs::read_to_string(path)?)
}
