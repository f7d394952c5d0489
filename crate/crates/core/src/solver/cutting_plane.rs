use std::collections::VecDeque;

use super::{objective_gradient, SolverConfig, Tracker};
use crate::error::{Error, Result};
use crate::lp::{solve_standard, LpOutcome};
use crate::problem::ProblemInstance;
use crate::vector::dot;

/// Cap on the model size.
const MAX_CUTS: usize = 400;

/// Affine minorant `c + g.u` of the objective.
#[derive(Debug, Clone)]
pub(crate) struct Cut {
    g: Vec<f64>,
    c: f64,
}

impl Cut {
    fn at(u: &[f64], f: f64, g: &[f64]) -> Self {
        Cut { g: g.to_vec(), c: f - dot(g, u) }
    }

    fn eval(&self, u: &[f64]) -> f64 {
        self.c + dot(&self.g, u)
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Cuts(VecDeque<Cut>);

impl Cuts {
    /// Appends a cut, keeping at most `keep`.
    pub fn push_recent(&mut self, u: &[f64], f: f64, g: &[f64], keep: usize) {
        self.0.push_back(Cut::at(u, f, g));
        while self.0.len() > keep {
            self.0.pop_front();
        }
    }

    fn push(&mut self, u: &[f64], f: f64, g: &[f64]) {
        self.0.push_back(Cut::at(u, f, g));
    }

    fn model(&self, u: &[f64]) -> f64 {
        self.0.iter().map(|c| c.eval(u)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Minimizes the piecewise-linear model over `[-r, r]^d` through its dual:
/// `min -sum c_j l_j + r sum (s_k + n_k)` subject to
/// `sum l_j g_j + s - n = 0`, `sum l_j = 1`, all variables nonnegative.
/// The LP duals of the equality rows are the model minimizer.
fn master(cuts: &Cuts, d: usize, r: f64) -> Result<(Vec<f64>, f64)> {
    let k = cuts.0.len();
    let cols = k + 2 * d;
    let mut a = vec![vec![0.0; cols]; d + 1];
    let mut cost = vec![0.0; cols];
    for (j, cut) in cuts.0.iter().enumerate() {
        for (row, gk) in a.iter_mut().zip(&cut.g) {
            row[j] = *gk;
        }
        a[d][j] = 1.0;
        cost[j] = -cut.c;
    }
    for kk in 0..d {
        a[kk][k + kk] = 1.0;
        a[kk][k + d + kk] = -1.0;
        cost[k + kk] = r;
        cost[k + d + kk] = r;
    }
    let mut b = vec![0.0; d + 1];
    b[d] = 1.0;
    match solve_standard(&a, &b, &cost)? {
        LpOutcome::Optimal(sol) => {
            let u: Vec<f64> = sol.duals[..d].iter().map(|y| y.clamp(-r, r)).collect();
            let lower = (-sol.objective).min(cuts.model(&u));
            Ok((u, lower))
        }
        other => Err(Error::Lp(format!("cutting-plane master problem is not optimal: {other:?}"))),
    }
}

/// Kelley's method on the solve-bound box. Returns `true` once the gap
/// between the best value and the model minimum is within `stop_tol`
/// relative.
pub(crate) fn kelley(prob: &ProblemInstance, cfg: &SolverConfig, tr: &mut Tracker, cuts: &mut Cuts) -> Result<bool> {
    let d = prob.dim();
    let r = prob.solve_bound().radius.max(1e-300);
    let best = tr.best_u.clone();
    let gb = objective_gradient(prob, &best)?;
    cuts.push(&best, tr.best_f, &gb);
    while cuts.0.len() < MAX_CUTS && !tr.exhausted() {
        let (u, lower) = master(cuts, d, r)?;
        if tr.best_f - lower <= cfg.stop_tol * tr.scale() {
            return Ok(true);
        }
        let f = prob.objective(&u);
        let g = objective_gradient(prob, &u)?;
        tr.offer(&u, f);
        cuts.push(&u, f, &g);
    }
    Ok(false)
}
