use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel;
use crate::problem::ProblemInstance;
use crate::solution_set::lattice_coord;
use crate::vector::Vector;

/// Cap on lattice evaluations of [`grid_oracle`].
pub const ORACLE_BUDGET: u64 = 100_000_000;
const MAX_ORACLE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOracle {
    /// Lattice minimum, an upper bound on the optimal value.
    pub value: f64,
    /// Lattice points within `1e-9 * max(1, value)` of the minimum, in
    /// lattice order.
    pub argmin: Vec<Vector>,
    /// Lattice spacing `h`.
    pub spacing: f64,
    /// Lipschitz constant `L` of the objective in the ground norm.
    pub lipschitz: f64,
    /// `value - f* <= error_bound`; `L * ||(h/2, .., h/2)||` on a full
    /// lattice, `value` itself for the single-point lattice.
    pub error_bound: f64,
    pub evaluations: u64,
}

/// Minimum over one first-coordinate slab with its near-minimal points.
type Slab = (f64, Vec<(f64, Vec<f64>)>);

/// Exhaustive evaluation on the `grid^d` lattice of the solve-bound box
/// `[-R, R]^d`. A grid of 1 evaluates the anchor centroid only.
pub fn grid_oracle(prob: &ProblemInstance, grid: usize) -> Result<GridOracle> {
    let d = prob.dim();
    if d > MAX_ORACLE_DIM {
        return Err(Error::Unsupported(format!("grid oracle supports d <= {MAX_ORACLE_DIM}, got {d}")));
    }
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be at least 1".into()));
    }
    let lip = prob.lipschitz();
    if grid == 1 {
        let c = prob.centroid();
        let value = prob.objective(&c);
        return Ok(GridOracle {
            value,
            argmin: vec![Vector::new(c)?],
            spacing: 0.0,
            lipschitz: lip,
            error_bound: value,
            evaluations: 1,
        });
    }
    let total = (grid as u64).checked_pow(d as u32).filter(|&t| t <= ORACLE_BUDGET).ok_or_else(|| {
        Error::Budget(format!("grid {grid} in dimension {d} exceeds {ORACLE_BUDGET} evaluations"))
    })?;
    let r = prob.solve_bound().radius;
    let coords: Vec<f64> = (0..grid).map(|k| lattice_coord(-r, r, grid, k)).collect();
    let inner = grid.pow(d as u32 - 1);
    let band = |m: f64| m + 1e-9 * m.max(1.0);

    // One slab per first-coordinate index; each keeps its near-minimal points.
    let slabs: Vec<Slab> = parallel::install(|| {
        (0..grid)
            .into_par_iter()
            .map(|i0| {
                let mut best = f64::INFINITY;
                let mut keep: Vec<(f64, Vec<f64>)> = Vec::new();
                let mut u = vec![0.0; d];
                for idx in 0..inner {
                    u[0] = coords[i0];
                    let mut rest = idx;
                    for k in (1..d).rev() {
                        u[k] = coords[rest % grid];
                        rest /= grid;
                    }
                    let f = prob.objective(&u);
                    if f <= band(best) {
                        if f < best {
                            best = f;
                            let cut = band(best);
                            keep.retain(|(g, _)| *g <= cut);
                        }
                        keep.push((f, u.clone()));
                    }
                }
                (best, keep)
            })
            .collect()
    });
    let value = slabs.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let cut = band(value);
    let argmin = slabs
        .into_iter()
        .flat_map(|(_, keep)| keep)
        .filter(|(f, _)| *f <= cut)
        .map(|(_, u)| Vector::new(u))
        .collect::<Result<Vec<_>>>()?;
    let h = 2.0 * r / (grid - 1) as f64;
    let error_bound = lip * prob.norm().ground.norm(&vec![0.5 * h; d]);
    Ok(GridOracle { value, argmin, spacing: h, lipschitz: lip, error_bound, evaluations: total })
}
