#![allow(dead_code)]

use eqprox::harness::{run_entry, RunOutcome};
use eqprox::library::{instantiate, list_problems, CatalogEntry, LambdaPolicy};
use eqprox::{Matrix, Regularizer, SolverConfig, Vector};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// One tangential subproblem `min g'u + ||u||^2/(2 alpha) + r(x_shift + u) s.t. J u = 0`.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub g: Vector,
    pub jac: Matrix,
    pub alpha: f64,
    pub r: Regularizer,
    pub x_shift: Vector,
}

impl Subproblem {
    pub fn objective(&self, u: &Vector) -> f64 {
        self.g.dot(u) + u.norm_squared() / (2.0 * self.alpha) + self.r.value(&(&self.x_shift + u))
    }
}

/// Random instance with `n <= 6`, `m <= 3`, well-conditioned `J`, and a
/// start that has some coordinates exactly at zero.
pub fn random_subproblem(rng: &mut ChaCha8Rng) -> Subproblem {
    loop {
        let n = rng.random_range(2..=6usize);
        let m = rng.random_range(1..=3usize.min(n - 1));
        let jac = Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let sv = jac.clone().svd(false, false).singular_values;
        if sv.min() < 0.05 {
            continue;
        }
        let g = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let x_shift = Vector::from_fn(n, |_, _| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        let mut idx: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
        if idx.is_empty() {
            idx.push(rng.random_range(0..n));
        }
        let lambda = rng.random_range(0.1..2.0);
        let alpha = 10f64.powf(rng.random_range(-1.0..1.0));
        let r = Regularizer::weighted_l1(lambda, idx).unwrap();
        return Subproblem { g, jac, alpha, r, x_shift };
    }
}

/// Exact minimizer by enumerating every sign pattern of the regularized
/// coordinates of `x_shift + u` and solving the resulting equality QP with
/// a dense KKT system.
pub fn brute_force(p: &Subproblem) -> (Vector, f64) {
    let n = p.g.len();
    let m = p.jac.nrows();
    let reg = p.r.indices().to_vec();
    let lambda = p.r.weight();
    let mut best: Option<(Vector, f64)> = None;
    let patterns = 3usize.pow(reg.len() as u32);
    for code in 0..patterns {
        // sign per regularized coordinate: -1, 0, +1
        let mut sign = vec![None; n];
        let mut c = code;
        for &i in &reg {
            sign[i] = Some([-1.0, 0.0, 1.0][c % 3]);
            c /= 3;
        }
        let fixed: Vec<usize> = (0..n).filter(|&i| sign[i] == Some(0.0)).collect();
        let free: Vec<usize> = (0..n).filter(|&i| sign[i] != Some(0.0)).collect();
        let mut u = Vector::zeros(n);
        for &i in &fixed {
            u[i] = -p.x_shift[i];
        }
        let k = free.len();
        let mut kkt = Matrix::zeros(k + m, k + m);
        let mut rhs = Vector::zeros(k + m);
        for (a, &i) in free.iter().enumerate() {
            kkt[(a, a)] = 1.0 / p.alpha;
            rhs[a] = -(p.g[i] + lambda * sign[i].unwrap_or(0.0));
            for row in 0..m {
                kkt[(a, k + row)] = p.jac[(row, i)];
                kkt[(k + row, a)] = p.jac[(row, i)];
            }
        }
        for row in 0..m {
            rhs[k + row] = -fixed.iter().map(|&i| p.jac[(row, i)] * u[i]).sum::<f64>();
        }
        let sol = match kkt.clone().svd(true, true).solve(&rhs, 1e-12) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if (&kkt * &sol - &rhs).norm() > 1e-9 * rhs.norm().max(1.0) {
            continue;
        }
        for (a, &i) in free.iter().enumerate() {
            u[i] = sol[a];
        }
        if (&p.jac * &u).norm() > 1e-9 {
            continue;
        }
        let consistent = free.iter().all(|&i| match sign[i] {
            Some(s) => s * (p.x_shift[i] + u[i]) >= -1e-12,
            None => true,
        });
        if !consistent {
            continue;
        }
        let obj = p.objective(&u);
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((u, obj));
        }
    }
    best.expect("some sign pattern contains the minimizer")
}

pub fn catalog() -> Vec<CatalogEntry> {
    list_problems().into_iter().map(|n| instantiate(n).unwrap()).collect()
}

/// Solves every catalog entry under the default settings.
pub fn catalog_runs() -> Vec<(CatalogEntry, RunOutcome)> {
    let cfg = SolverConfig::default();
    catalog()
        .into_iter()
        .map(|e| {
            let o = run_entry(&e, &cfg, LambdaPolicy::DefaultOffset);
            (e, o)
        })
        .collect()
}
