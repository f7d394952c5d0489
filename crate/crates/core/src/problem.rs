//! The location problem `minimize f(u) = |||(u - v_1, .., u - v_n)|||_psi`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::product::{pairing, ProductNorm, ProductVector, DEFAULT_DUAL_GRID};
use crate::psi::PsiGenerator;
use crate::vector::{euclid, Vector};

/// Anchors closer than this (Euclidean) count as coincident.
pub const MIN_ANCHOR_SEPARATION: f64 = 1e-12;

/// Relative singular-value threshold of the collinearity test.
pub const COLLINEARITY_TOL: f64 = 1e-9;

/// Distinct anchors `v_1, .., v_n` (`n >= 2`) and a product norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct ProblemInstance {
    anchors: Vec<Vector>,
    norm: ProductNorm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comment: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    anchors: Vec<Vector>,
    norm: ProductNorm,
    #[serde(default)]
    comment: Option<String>,
}

impl TryFrom<RawInstance> for ProblemInstance {
    type Error = Error;

    fn try_from(r: RawInstance) -> Result<Self> {
        let mut p = ProblemInstance::new(r.anchors, r.norm)?;
        p.comment = r.comment;
        Ok(p)
    }
}

/// Radius of a ground-norm ball around the origin containing every solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveBound {
    pub radius: f64,
}

/// Uniqueness information available from the structure of the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StrictnessClass {
    /// Strictly convex ground norm and strictly convex generator.
    StrictlyConvex,
    /// Strictly convex ground norm, sum generator, non-collinear anchors.
    StrictByCollinearity,
    /// No uniqueness claim.
    Unknown,
}

impl ProblemInstance {
    pub fn new(anchors: Vec<Vector>, norm: ProductNorm) -> Result<Self> {
        let n = anchors.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!("anchors: need at least 2, got {n}")));
        }
        let d = anchors[0].dim();
        for (i, a) in anchors.iter().enumerate() {
            if a.dim() != d {
                return Err(Error::InvalidInput(format!(
                    "anchors: anchor {i} has dimension {}, expected {d}",
                    a.dim()
                )));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let diff: Vec<f64> = anchors[i].iter().zip(anchors[j].iter()).map(|(a, b)| a - b).collect();
                if euclid(&diff) <= MIN_ANCHOR_SEPARATION {
                    return Err(Error::InvalidInput(format!(
                        "anchors must be distinct (anchors {i} and {j} coincide)"
                    )));
                }
            }
        }
        norm.generator.check_arity(n)?;
        Ok(ProblemInstance { anchors, norm, comment: None })
    }

    pub fn with_comment(mut self, comment: &str) -> Self {
        self.comment = Some(comment.to_string());
        self
    }

    /// Builds from coordinate rows; panics on invalid input.
    pub fn from_rows(rows: &[&[f64]], norm: ProductNorm) -> Self {
        ProblemInstance::new(rows.iter().map(|r| Vector::from_slice(r)).collect(), norm).expect("invalid instance literal")
    }

    pub fn anchors(&self) -> &[Vector] {
        &self.anchors
    }

    pub fn norm(&self) -> &ProductNorm {
        &self.norm
    }

    pub fn comment(&self) -> Option<&str> {
        self.comment.as_deref()
    }

    pub fn n(&self) -> usize {
        self.anchors.len()
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].dim()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        for a in &self.anchors {
            for (acc, x) in c.iter_mut().zip(a.iter()) {
                *acc += x;
            }
        }
        let n = self.n() as f64;
        c.iter().map(|x| x / n).collect()
    }

    /// `(u - v_1, .., u - v_n)`.
    pub fn residuals(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.anchors
            .iter()
            .map(|v| u.iter().zip(v.iter()).map(|(a, b)| a - b).collect())
            .collect()
    }

    pub fn residual_vector(&self, u: &[f64]) -> Result<ProductVector> {
        check_dim(self.dim(), u.len())?;
        ProductVector::new(self.residuals(u).into_iter().map(Vector::new).collect::<Result<_>>()?)
    }

    /// `||u - v_i||` for every anchor.
    pub fn distances(&self, u: &[f64]) -> Vec<f64> {
        self.anchors
            .iter()
            .map(|v| {
                let r: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a - b).collect();
                self.norm.ground.norm(&r)
            })
            .collect()
    }

    /// Objective without dimension checks.
    pub fn objective(&self, u: &[f64]) -> f64 {
        self.norm.aggregate(&self.distances(u))
    }

    pub fn objective_eval(&self, u: &Vector) -> Result<f64> {
        check_dim(self.dim(), u.dim())?;
        Ok(self.objective(u))
    }

    pub fn solve_bound(&self) -> SolveBound {
        let n = self.n() as f64;
        let s: f64 = self.anchors.iter().map(|v| self.norm.ground.norm(v)).sum();
        SolveBound { radius: (1.0 + 1.0 / n) * s }
    }

    /// Lipschitz constant of `f` with respect to the ground norm:
    /// `|||(1, .., 1)|||_psi = n * psi(1/n, .., 1/n)`.
    pub fn lipschitz(&self) -> f64 {
        self.norm.aggregate(&vec![1.0; self.n()])
    }

    /// Dual blocks `x*_i` whose sum is the subgradient returned by
    /// [`ProblemInstance::objective_subgradient`]. They satisfy
    /// `|||x*|||_* = 1` and `<x*, (u - v_i)_i> = f(u)`.
    pub fn subgradient_duals(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.dim(), u.len())?;
        let g = self.norm.ground;
        let res = self.residuals(u);
        let b: Vec<f64> = res.iter().map(|r| g.norm(r)).collect();
        let grads: Vec<Vec<f64>> = res.iter().map(|r| g.subgradient(r)).collect();
        let weights: Vec<f64> = match self.norm.generator {
            PsiGenerator::P(1.0) => vec![1.0; self.n()],
            PsiGenerator::P(p) if p.is_infinite() => {
                let m = b.iter().copied().fold(0.0, f64::max);
                let active: Vec<bool> = b.iter().map(|&v| v >= m * (1.0 - 1e-12)).collect();
                let k = active.iter().filter(|&&a| a).count() as f64;
                active.iter().map(|&a| if a { 1.0 / k } else { 0.0 }).collect()
            }
            PsiGenerator::P(p) => {
                let f = self.norm.aggregate(&b);
                b.iter().map(|v| (v / f).powf(p - 1.0)).collect()
            }
            PsiGenerator::Tabulated(_) => {
                return Err(Error::Unsupported(
                    "subgradient selection needs a psi_p generator".into(),
                ))
            }
        };
        Ok(grads
            .into_iter()
            .zip(weights)
            .map(|(gr, w)| gr.into_iter().map(|c| c * w).collect())
            .collect())
    }

    /// One element of the subdifferential of `f` at `u`, checked against the
    /// dual description (unit dual product norm, pairing equal to `f(u)`).
    pub fn objective_subgradient(&self, u: &Vector) -> Result<Vector> {
        let duals = self.subgradient_duals(u)?;
        let xs = ProductVector::new(duals.into_iter().map(Vector::new).collect::<Result<_>>()?)?;
        let f = self.objective(u);
        let dn = self.norm.dual_eval(&xs, DEFAULT_DUAL_GRID)?;
        let pr = pairing(&xs, &self.residual_vector(u)?)?;
        if (dn - 1.0).abs() > 1e-9 || (pr - f).abs() > 1e-9 * f.max(1.0) {
            return Err(Error::InternalConsistency(format!(
                "subgradient selection at {:?}: dual norm {dn}, pairing {pr}, objective {f}",
                u.as_slice()
            )));
        }
        Vector::new(xs.block_sum())
    }

    pub fn strict_convexity_class(&self) -> StrictnessClass {
        if !self.norm.ground.is_strictly_convex() {
            return StrictnessClass::Unknown;
        }
        if self.norm.generator.is_strictly_convex() {
            return StrictnessClass::StrictlyConvex;
        }
        if self.norm.generator == PsiGenerator::sum() && !self.anchors_collinear() {
            return StrictnessClass::StrictByCollinearity;
        }
        StrictnessClass::Unknown
    }

    /// Rank test on `v_i - v_1`: collinear when the second singular value is
    /// below `1e-9` times the first.
    pub fn anchors_collinear(&self) -> bool {
        let n = self.n();
        let d = self.dim();
        if n <= 2 || d == 1 {
            return true;
        }
        let v0 = &self.anchors[0];
        let m = DMatrix::from_fn(n - 1, d, |i, k| self.anchors[i + 1][k] - v0[k]);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv.len() < 2 || sv[1] <= COLLINEARITY_TOL * sv[0]
    }
}
