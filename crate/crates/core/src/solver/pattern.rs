use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{SolveResult, SolverConfig, Tracker};
use crate::error::Result;
use crate::problem::ProblemInstance;

/// Compass search from the centroid over the solve-bound box.
///
/// Each poll tries the coordinate directions followed by `2d` seeded random
/// unit directions, moving to the first improvement; without one the step
/// halves and fresh random directions are drawn. Converged once the step
/// falls below `stop_tol * max(1, radius)`.
pub fn solve_pattern_search(prob: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let d = prob.dim();
    let radius = prob.solve_bound().radius;
    let clamp = |u: &mut Vec<f64>| {
        for c in u.iter_mut() {
            *c = c.clamp(-radius, radius);
        }
    };
    let mut u = prob.centroid();
    clamp(&mut u);
    let mut tr = Tracker::new(prob, u.clone(), cfg.max_iters);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut step = 0.25 * radius.max(1e-12);
    let floor = cfg.stop_tol * radius.max(1.0);
    let mut dirs = directions(d, &mut rng);
    let mut f = tr.best_f;
    while step > floor && !tr.exhausted() {
        let mut moved = false;
        for dir in &dirs {
            if tr.exhausted() {
                break;
            }
            let mut cand: Vec<f64> = u.iter().zip(dir).map(|(a, b)| a + step * b).collect();
            clamp(&mut cand);
            let fc = prob.objective(&cand);
            if tr.offer(&cand, fc) && fc < f {
                u = cand;
                f = fc;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
            dirs = directions(d, &mut rng);
        }
    }
    let converged = step <= floor;
    tr.finish(converged)
}

fn directions(d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(4 * d);
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[k] = s;
            out.push(e);
        }
    }
    for _ in 0..2 * d {
        out.push(unit_direction(rng, d));
    }
    out
}

/// Uniform direction on the Euclidean sphere from normalized Gaussians.
fn unit_direction(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}
