use super::{cutting_plane, midpoint_shortcut, objective_gradient, polish, project_ball, SolveResult, SolverConfig, StepRule, Tracker};
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::psi::PsiGenerator;
use crate::vector::dot;

/// Iterations of the first stage before refinement takes over.
const STAGE_ITERS: usize = 3_000;
/// Stage-one iterates kept as initial cuts for the cutting-plane model.
const SEED_CUTS: usize = 24;

enum Rule {
    Polyak(f64),
    Adaptive { delta: f64, stall: usize, path: f64 },
    Diminishing(f64),
}

/// Projected subgradient method from the anchor centroid, followed by
/// refinement of the best iterate.
pub fn solve_subgradient(prob: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if let PsiGenerator::Tabulated(_) = prob.norm().generator {
        return Err(Error::Unsupported(
            "subgradient method needs a psi_p generator; use pattern search".into(),
        ));
    }
    let g = prob.norm().ground;
    let radius = prob.solve_bound().radius;
    let lip = prob.lipschitz();
    let mut u = prob.centroid();
    project_ball(g, &mut u, radius);
    let mut tr = Tracker::new(prob, u.clone(), cfg.max_iters);
    let f0 = tr.best_f;

    let mut rule = match cfg.step_rule {
        StepRule::Auto => {
            if prob.n() == 2 && prob.norm().generator.is_symmetric() {
                Rule::Polyak(midpoint_shortcut(prob)?.value)
            } else {
                Rule::Diminishing(f0)
            }
        }
        StepRule::Polyak { target: Some(t) } => Rule::Polyak(t),
        StepRule::Polyak { target: None } => Rule::Adaptive { delta: 0.1 * f0.max(1e-12), stall: 0, path: 0.0 },
        StepRule::DiminishingC { c } => Rule::Diminishing(c),
    };

    let mut cuts = cutting_plane::Cuts::default();
    let mut f = f0;
    let mut stationary = false;
    let mut target_hit = false;
    // Path budget for the adaptive target: exceeding it means the target
    // is too low, so the level gap is halved and the walk restarts at the
    // best point.
    let budget = f0.max(1e-12) / lip;
    let stage = STAGE_ITERS.min(cfg.max_iters);
    for k in 1..=stage {
        let grad = objective_gradient(prob, &u)?;
        cuts.push_recent(&u, f, &grad, SEED_CUTS);
        let gn2 = dot(&grad, &grad);
        if gn2 <= 1e-300 {
            stationary = true;
            break;
        }
        let step = match &mut rule {
            Rule::Polyak(target) => {
                let gap = f - *target;
                if gap <= cfg.stop_tol * tr.scale() {
                    target_hit = true;
                    break;
                }
                gap / gn2
            }
            Rule::Adaptive { delta, .. } => ((f - tr.best_f + *delta) / gn2).min(budget / gn2.sqrt()),
            Rule::Diminishing(c) => *c / (lip * (k as f64).sqrt() * gn2.sqrt()),
        };
        for (x, d) in u.iter_mut().zip(&grad) {
            *x -= step * d;
        }
        project_ball(g, &mut u, radius);
        f = prob.objective(&u);
        if !f.is_finite() || (f0 > 0.0 && f > 10.0 * f0) {
            return Err(Error::Divergence(format!(
                "objective {f} exceeds ten times the initial value {f0} at iteration {k}"
            )));
        }
        let before = tr.best_f;
        let improved = tr.offer(&u, f);
        if let Rule::Adaptive { delta, stall, path } = &mut rule {
            *path += step * gn2.sqrt();
            if improved && f <= before - 0.5 * *delta {
                *stall = 0;
                *path = 0.0;
            } else if *path > budget {
                *delta *= 0.5;
                *stall = 0;
                *path = 0.0;
                u.clone_from(&tr.best_u);
                f = tr.best_f;
            } else {
                *stall += 1;
                if *stall >= 30 {
                    *delta *= 0.5;
                    *stall = 0;
                }
            }
        }
    }

    let mut converged = stationary || target_hit;
    if !tr.exhausted() {
        converged |= refine(prob, cfg, &mut tr, cuts)?;
    }
    tr.finish(converged)
}

/// Newton polish, then cutting planes if the polish cannot verify
/// optimality, then a second polish from the improved point.
pub(crate) fn refine(prob: &ProblemInstance, cfg: &SolverConfig, tr: &mut Tracker, mut cuts: cutting_plane::Cuts) -> Result<bool> {
    if polish::polish(prob, tr)? {
        return Ok(true);
    }
    let certified = cutting_plane::kelley(prob, cfg, tr, &mut cuts)?;
    if tr.exhausted() {
        return Ok(certified);
    }
    Ok(polish::polish(prob, tr)? || certified)
}
