//! Minimizers of `f(u) = |||(u - v_1, .., u - v_n)|||_psi`.
//!
//! [`solve_subgradient`] runs a projected subgradient method from the anchor
//! centroid and then refines its best iterate: an active-set Newton solve of
//! the epigraph optimality system, a Kelley cutting-plane model with a
//! certified lower bound, and a check of the anchors themselves.
//! [`solve_pattern_search`] needs only objective values and is the method for
//! tabulated generators. [`grid_oracle`] is the brute-force reference.

mod cutting_plane;
mod oracle;
mod pattern;
mod polish;
mod subgradient;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::GroundNorm;
use crate::problem::ProblemInstance;
use crate::psi::SimplexPoint;
use crate::vector::Vector;

pub use oracle::{grid_oracle, GridOracle, ORACLE_BUDGET};
pub use pattern::solve_pattern_search;
pub use subgradient::solve_subgradient;

pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_STOP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// Polyak with the midpoint value as target for two anchors and a
    /// symmetric generator, otherwise diminishing with `c = f(centroid)`.
    Auto,
    /// `(f - target) / |g|^2`; without a target it tracks `f_best - delta`
    /// with `delta` halved whenever progress stalls or the path since the
    /// last real improvement exceeds `f(centroid) / L`.
    Polyak { target: Option<f64> },
    /// Length `c / (L sqrt(k))` along the normalized subgradient, `L` the
    /// Lipschitz constant of `f`.
    DiminishingC { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Budget shared by all stages, counted in objective evaluations.
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Drives the random poll directions of pattern search.
    pub seed: u64,
    /// Relative optimality gap, or final step length for pattern search.
    pub stop_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iters: DEFAULT_MAX_ITERS, step_rule: StepRule::Auto, seed: 0, stop_tol: DEFAULT_STOP_TOL }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::InvalidInput(format!("stop_tol must be positive, got {}", self.stop_tol)));
        }
        match self.step_rule {
            StepRule::DiminishingC { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidInput(format!("step constant must be positive, got {c}")))
            }
            StepRule::Polyak { target: Some(t) } if !t.is_finite() => {
                Err(Error::InvalidInput("Polyak target must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub point: Vector,
    pub value: f64,
    pub iterations: usize,
    /// Whether optimality was established: certified gap, verified
    /// optimality system, or the exact midpoint formula.
    pub converged: bool,
    /// `(iteration, best value)` at every improvement.
    #[serde(skip)]
    pub best_trace: Vec<(usize, f64)>,
}

impl SolveResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,value\n");
        for (k, v) in &self.best_trace {
            out.push_str(&format!("{k},{v:?}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Subgradient,
    Pattern,
}

/// Dispatches to the chosen method.
pub fn solve(prob: &ProblemInstance, cfg: &SolverConfig, method: Method) -> Result<SolveResult> {
    match method {
        Method::Subgradient => solve_subgradient(prob, cfg),
        Method::Pattern => solve_pattern_search(prob, cfg),
    }
}

/// Two anchors and a symmetric generator: the midpoint with value
/// `||v_1 - v_2|| psi(1/2, 1/2)`.
pub fn midpoint_shortcut(prob: &ProblemInstance) -> Result<SolveResult> {
    if prob.n() != 2 {
        return Err(Error::InvalidInput(format!("midpoint shortcut needs 2 anchors, got {}", prob.n())));
    }
    let gen = &prob.norm().generator;
    if !gen.is_symmetric() {
        return Err(Error::Contract("midpoint shortcut needs a symmetric generator".into()));
    }
    let (v1, v2) = (&prob.anchors()[0], &prob.anchors()[1]);
    let mid: Vec<f64> = v1.iter().zip(v2.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
    let diff: Vec<f64> = v1.iter().zip(v2.iter()).map(|(a, b)| a - b).collect();
    let value = prob.norm().ground.norm(&diff) * gen.eval(&SimplexPoint::uniform(2))?;
    Ok(SolveResult {
        point: Vector::new(mid)?,
        value,
        iterations: 0,
        converged: true,
        best_trace: vec![(0, value)],
    })
}

/// Best-iterate bookkeeping shared by the stages.
pub(crate) struct Tracker<'a> {
    prob: &'a ProblemInstance,
    pub best_u: Vec<f64>,
    pub best_f: f64,
    trace: Vec<(usize, f64)>,
    pub iters: usize,
    max_iters: usize,
}

impl<'a> Tracker<'a> {
    pub fn new(prob: &'a ProblemInstance, u0: Vec<f64>, max_iters: usize) -> Self {
        let f0 = prob.objective(&u0);
        Tracker { prob, best_u: u0, best_f: f0, trace: vec![(0, f0)], iters: 0, max_iters }
    }

    pub fn scale(&self) -> f64 {
        self.best_f.max(1.0)
    }

    pub fn exhausted(&self) -> bool {
        self.iters >= self.max_iters
    }

    /// Counts one evaluation and keeps `u` if it improves the best value.
    pub fn offer(&mut self, u: &[f64], f: f64) -> bool {
        self.iters += 1;
        self.consider(u, f)
    }

    fn consider(&mut self, u: &[f64], f: f64) -> bool {
        if f < self.best_f {
            self.best_f = f;
            self.best_u = u.to_vec();
            self.trace.push((self.iters, f));
            true
        } else {
            false
        }
    }

    /// Adopts a point proven optimal even if rounding puts its value a hair
    /// above the current best. Trace entries below that value are dropped
    /// so the trace still ends at the reported value.
    pub fn adopt_optimal(&mut self, u: &[f64]) -> bool {
        let f = self.prob.objective(u);
        if f <= self.best_f + 1e-13 * self.scale() {
            if !self.consider(u, f) {
                while self.trace.last().is_some_and(|&(_, t)| t <= f) {
                    self.trace.pop();
                }
                self.trace.push((self.iters, f));
                self.best_u = u.to_vec();
                self.best_f = f;
            }
            true
        } else {
            false
        }
    }

    pub fn finish(self, converged: bool) -> Result<SolveResult> {
        let value = self.prob.objective(&self.best_u);
        Ok(SolveResult {
            point: Vector::new(self.best_u)?,
            value,
            iterations: self.iters,
            converged,
            best_trace: self.trace,
        })
    }
}

/// Projection onto `{ ||u|| <= r }`: clamping for the max norm, sorting
/// for the sum norm, radial scaling otherwise.
pub(crate) fn project_ball(g: GroundNorm, u: &mut [f64], r: f64) {
    match g {
        GroundNorm::Max => {
            for c in u.iter_mut() {
                *c = c.clamp(-r, r);
            }
        }
        GroundNorm::Sum => {
            let total: f64 = u.iter().map(|c| c.abs()).sum();
            if total <= r {
                return;
            }
            let mut mags: Vec<f64> = u.iter().map(|c| c.abs()).collect();
            mags.sort_by(|a, b| b.total_cmp(a));
            let mut acc = 0.0;
            let mut theta = 0.0;
            for (k, m) in mags.iter().enumerate() {
                acc += m;
                let t = (acc - r) / (k + 1) as f64;
                if *m > t {
                    theta = t;
                }
            }
            for c in u.iter_mut() {
                *c = c.signum() * (c.abs() - theta).max(0.0);
            }
        }
        _ => {
            let n = g.norm(u);
            if n > r {
                let s = r / n;
                for c in u.iter_mut() {
                    *c *= s;
                }
            }
        }
    }
}

pub(crate) fn objective_gradient(prob: &ProblemInstance, u: &[f64]) -> Result<Vec<f64>> {
    let duals = prob.subgradient_duals(u)?;
    let mut g = vec![0.0; u.len()];
    for d in &duals {
        for (acc, c) in g.iter_mut().zip(d) {
            *acc += c;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::ProductNorm;
    use crate::psi::PsiGenerator;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { max_iters: 0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { stop_tol: 0.0, ..Default::default() }.validate().is_err());
        let bad = SolverConfig { step_rule: StepRule::DiminishingC { c: -1.0 }, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn midpoint_values() {
        let p = ProblemInstance::from_rows(&[&[0.0, 0.0], &[2.0, 0.0]], ProductNorm::new(GroundNorm::Max, PsiGenerator::max()));
        let r = midpoint_shortcut(&p).unwrap();
        assert_eq!(r.point.as_slice(), &[1.0, 0.0]);
        assert_eq!(r.value, 1.0);
        let q = ProblemInstance::from_rows(&[&[0.0, 0.0], &[2.0, 0.0]], ProductNorm::new(GroundNorm::P(2.0), PsiGenerator::P(2.0)));
        let r = midpoint_shortcut(&q).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.value - q.objective(&r.point)).abs() < 1e-12);
        let s = ProblemInstance::from_rows(&[&[0.3, -1.0], &[2.0, 4.0]], ProductNorm::new(GroundNorm::Euclidean, PsiGenerator::sum()));
        let r = midpoint_shortcut(&s).unwrap();
        assert!((r.value - (1.7f64.powi(2) + 25.0).sqrt()).abs() < 1e-12);
        let three = ProblemInstance::from_rows(&[&[0.0], &[1.0], &[2.0]], ProductNorm::new(GroundNorm::Euclidean, PsiGenerator::sum()));
        assert!(midpoint_shortcut(&three).is_err());
    }

    #[test]
    fn ball_projections() {
        let mut u = vec![3.0, -0.5];
        project_ball(GroundNorm::Max, &mut u, 1.0);
        assert_eq!(u, vec![1.0, -0.5]);
        let mut u = vec![3.0, 4.0];
        project_ball(GroundNorm::Euclidean, &mut u, 1.0);
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        let mut u = vec![2.0, -1.0, 0.1];
        project_ball(GroundNorm::Sum, &mut u, 1.0);
        assert!((u[0] - 1.0).abs() < 1e-15 && u[1] == 0.0 && u[2] == 0.0);
        let mut u = vec![1.0, 1.0];
        project_ball(GroundNorm::Sum, &mut u, 1.0);
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
    }
}
