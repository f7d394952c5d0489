//! Active-set Newton refinement.
//!
//! Near a minimizer the problem reads `min F(t)` subject to
//! `phi_ik(u) <= t_i`, where the `phi_ik` are the pieces of the block norm
//! attaining `||u - v_i||` (signed coordinates for the max norm, sign
//! vectors for the sum norm, the norm itself when smooth) and `F` is the
//! generator's aggregate. With the active pieces guessed from the current
//! point, the optimality conditions become a square nonlinear system in
//! `(u, t, mu)` solved by damped Newton with least-squares steps. A result
//! counts as optimal only once a dual certificate is recovered for it.

use nalgebra::{DMatrix, DVector};

use super::Tracker;
use crate::certificate::recover_certificate;
use crate::error::Result;
use crate::ground::GroundNorm;
use crate::problem::ProblemInstance;
use crate::vector::{dot, Vector};

const CERTIFY_TOL: f64 = 1e-9;
const ACTIVE_MARGINS: [f64; 5] = [1e-9, 1e-7, 1e-5, 1e-3, 1e-2];
const MAX_SIGN_FREE: usize = 6;
const NEWTON_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Linear(Vec<f64>),
    Norm,
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    anchor: usize,
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Aggregate {
    Sum,
    Max,
    P(f64),
}

struct System<'a> {
    prob: &'a ProblemInstance,
    agg: Aggregate,
    blocks: Vec<Block>,
    d: usize,
    nt: usize,
    m: usize,
}

fn residual(prob: &ProblemInstance, i: usize, u: &[f64]) -> Vec<f64> {
    u.iter().zip(prob.anchors()[i].iter()).map(|(a, b)| a - b).collect()
}

fn select(prob: &ProblemInstance, agg: Aggregate, u: &[f64], margin: f64) -> Option<Vec<Block>> {
    let g = prob.norm().ground;
    let d = prob.dim();
    let res = prob.residuals(u);
    let b: Vec<f64> = res.iter().map(|r| g.norm(r)).collect();
    let bmax = b.iter().copied().fold(0.0, f64::max);
    let mut blocks = Vec::new();
    for (i, r) in res.iter().enumerate() {
        if agg == Aggregate::Max && b[i] < bmax - margin {
            continue;
        }
        let pieces = match g {
            GroundNorm::Max => {
                let mut ps = Vec::new();
                for k in 0..d {
                    let e = |s: f64| {
                        let mut a = vec![0.0; d];
                        a[k] = s;
                        Piece::Linear(a)
                    };
                    if b[i] <= margin {
                        ps.push(e(1.0));
                        ps.push(e(-1.0));
                    } else if r[k].abs() >= b[i] - margin {
                        ps.push(e(r[k].signum()));
                    }
                }
                ps
            }
            GroundNorm::Sum => {
                let free: Vec<usize> = (0..d).filter(|&k| r[k].abs() <= margin).collect();
                if free.len() > MAX_SIGN_FREE {
                    return None;
                }
                let base: Vec<f64> = r.iter().map(|c| if c.abs() <= margin { 0.0 } else { c.signum() }).collect();
                (0..1usize << free.len())
                    .map(|mask| {
                        let mut a = base.clone();
                        for (bit, &k) in free.iter().enumerate() {
                            a[k] = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                        }
                        Piece::Linear(a)
                    })
                    .collect()
            }
            _ => {
                if b[i] <= margin {
                    return None;
                }
                vec![Piece::Norm]
            }
        };
        blocks.push(Block { anchor: i, pieces });
    }
    Some(blocks)
}

impl<'a> System<'a> {
    fn new(prob: &'a ProblemInstance, agg: Aggregate, blocks: Vec<Block>) -> Self {
        let d = prob.dim();
        let nt = if agg == Aggregate::Max { 1 } else { blocks.len() };
        let m = blocks.iter().map(|b| b.pieces.len()).sum();
        System { prob, agg, blocks, d, nt, m }
    }

    fn size(&self) -> usize {
        self.d + self.nt + self.m
    }

    fn tau(&self, b: usize) -> usize {
        if self.agg == Aggregate::Max {
            0
        } else {
            b
        }
    }

    /// Residual and Jacobian; `None` where a smooth piece has no Hessian.
    fn eval(&self, z: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (d, nt) = (self.d, self.nt);
        let n = self.size();
        let g = self.prob.norm().ground;
        let u: Vec<f64> = z.rows(0, d).iter().copied().collect();
        let mut rv = DVector::zeros(n);
        let mut jm = DMatrix::zeros(n, n);
        let mut p = 0;
        for (bi, blk) in self.blocks.iter().enumerate() {
            let r = residual(self.prob, blk.anchor, &u);
            let tcol = d + self.tau(bi);
            for piece in &blk.pieces {
                let mu = z[d + nt + p];
                let col = d + nt + p;
                let (phi, grad) = match piece {
                    Piece::Linear(a) => (dot(a, &r), a.clone()),
                    Piece::Norm => {
                        let h = g.hessian(&r)?;
                        for k in 0..d {
                            for l in 0..d {
                                jm[(k, l)] += mu * h[k][l];
                            }
                        }
                        (g.norm(&r), g.subgradient(&r))
                    }
                };
                for k in 0..d {
                    rv[k] += mu * grad[k];
                    jm[(k, col)] = grad[k];
                    jm[(col, k)] = grad[k];
                }
                rv[tcol] -= mu;
                jm[(tcol, col)] = -1.0;
                rv[col] = phi - z[tcol];
                jm[(col, tcol)] = -1.0;
                p += 1;
            }
        }
        match self.agg {
            Aggregate::Sum => {
                for i in 0..nt {
                    rv[d + i] += 1.0;
                }
            }
            Aggregate::Max => rv[d] += 1.0,
            Aggregate::P(pp) => {
                let t: Vec<f64> = (0..nt).map(|i| z[d + i].abs()).collect();
                let f = crate::ground::p_norm(&t, pp);
                if !(f > 0.0) {
                    return None;
                }
                let w: Vec<f64> = t.iter().map(|ti| (ti / f).powf(pp - 1.0)).collect();
                for i in 0..nt {
                    rv[d + i] += w[i];
                    for j in 0..nt {
                        let diag = if i == j {
                            let c = (t[i] / f).powf(pp - 2.0);
                            if c.is_finite() { c.min(1e12) } else { 1e12 }
                        } else {
                            0.0
                        };
                        jm[(d + i, d + j)] += (pp - 1.0) / f * (diag - w[i] * w[j]);
                    }
                }
            }
        }
        Some((rv, jm))
    }

    fn start(&self, u: &[f64]) -> Option<DVector<f64>> {
        let (d, nt) = (self.d, self.nt);
        let g = self.prob.norm().ground;
        let mut z = DVector::zeros(self.size());
        for k in 0..d {
            z[k] = u[k];
        }
        let b: Vec<f64> = self.blocks.iter().map(|blk| g.norm(&residual(self.prob, blk.anchor, u))).collect();
        if self.agg == Aggregate::Max {
            z[d] = b.iter().copied().fold(0.0, f64::max);
        } else {
            for i in 0..nt {
                z[d + i] = b[i];
            }
        }
        // Multipliers: least squares on the stationarity rows with u, t fixed.
        let (r0, j0) = self.eval(&z)?;
        let rows = d + nt;
        let a = j0.view((0, d + nt), (rows, self.m)).clone_owned();
        let rhs = -r0.rows(0, rows).clone_owned();
        let mu = lsq(a, &rhs)?;
        for p in 0..self.m {
            z[d + nt + p] = mu[p];
        }
        Some(z)
    }

    fn newton(&self, mut z: DVector<f64>) -> Option<DVector<f64>> {
        let (mut r, mut j) = self.eval(&z)?;
        for _ in 0..NEWTON_ITERS {
            let scale = z.amax().max(1.0);
            let nr = r.norm();
            if nr <= 1e-14 * scale {
                break;
            }
            let step = lsq(j.clone(), &(-&r))?;
            let mut accepted = false;
            let mut alpha = 1.0;
            for _ in 0..12 {
                let cand = &z + alpha * &step;
                if let Some((rc, jc)) = self.eval(&cand) {
                    if rc.norm() < nr * (1.0 - 1e-4 * alpha) {
                        z = cand;
                        r = rc;
                        j = jc;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Some(z)
    }
}

fn lsq(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.amax();
    let x = svd.solve(b, 1e-12 * smax.max(1e-300)).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn aggregate(prob: &ProblemInstance) -> Option<Aggregate> {
    let p = prob.norm().generator.exponent()?;
    Some(if p == 1.0 {
        Aggregate::Sum
    } else if p.is_infinite() {
        Aggregate::Max
    } else {
        Aggregate::P(p)
    })
}

fn certified(prob: &ProblemInstance, u: &[f64]) -> Result<bool> {
    Ok(recover_certificate(prob, &Vector::new(u.to_vec())?, CERTIFY_TOL)?.is_certified())
}

/// Refines the tracker's best point. Returns `true` when the final best
/// point carries a recovered certificate.
pub(crate) fn polish(prob: &ProblemInstance, tr: &mut Tracker) -> Result<bool> {
    let Some(agg) = aggregate(prob) else {
        return Ok(false);
    };
    let d = prob.dim();
    let start = tr.best_u.clone();
    let mut tried: Vec<Vec<Block>> = Vec::new();
    for margin in ACTIVE_MARGINS {
        if tr.exhausted() {
            break;
        }
        let Some(blocks) = select(prob, agg, &start, margin * tr.scale()) else {
            continue;
        };
        if blocks.iter().any(|b| b.pieces.is_empty()) || tried.contains(&blocks) {
            continue;
        }
        tried.push(blocks.clone());
        let sys = System::new(prob, agg, blocks);
        let Some(z) = sys.start(&start).and_then(|z0| sys.newton(z0)) else {
            continue;
        };
        let u: Vec<f64> = z.rows(0, d).iter().copied().collect();
        if u.iter().any(|c| !c.is_finite()) {
            continue;
        }
        let f = prob.objective(&u);
        tr.offer(&u, f);
        if f <= tr.best_f + 1e-13 * tr.scale() && certified(prob, &u)? {
            tr.adopt_optimal(&u);
            return Ok(true);
        }
    }
    if certified(prob, &tr.best_u)? {
        return Ok(true);
    }
    let slack = 1e-9 * tr.scale();
    for v in prob.anchors() {
        let f = prob.objective(v);
        if f <= tr.best_f + slack && certified(prob, v)? && tr.adopt_optimal(v) {
            return Ok(true);
        }
    }
    Ok(false)
}
