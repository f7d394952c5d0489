//! Norms on `X = R^d`, their duals, subdifferentials and alignment sets.
//!
//! The alignment set of a dual vector `x*` is the cone of primal vectors on
//! which the duality pairing is tight:
//!
//! ```text
//! T(x*) = { x : <x*, x> = ||x*||_* ||x|| }
//! ```
//!
//! It is available through a generic pairing test and, for every built-in
//! norm, through an explicit description ([`AlignmentSet`]).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::vector::{dot, euclid, max_abs, sgn, Vector};

/// A norm on the ground space.
///
/// `Sum` and `Max` are distinct kinds and are never represented as `P(1)`
/// or `P(inf)`; `P(p)` requires `1 < p < inf`. `Euclidean` agrees with
/// `P(2)` numerically but follows the inner-product code paths.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "GroundNormRepr", into = "GroundNormRepr")]
pub enum GroundNorm {
    Sum,
    Max,
    P(f64),
    Euclidean,
}

/// Exponents are compared to within a few ulps: conjugation `p -> p/(p-1)`
/// is not an exact involution in floating point.
impl PartialEq for GroundNorm {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (GroundNorm::P(a), GroundNorm::P(b)) => (a - b).abs() <= 1e-13 * a.abs().max(b.abs()),
            (GroundNorm::Sum, GroundNorm::Sum)
            | (GroundNorm::Max, GroundNorm::Max)
            | (GroundNorm::Euclidean, GroundNorm::Euclidean) => true,
            _ => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum GroundNormRepr {
    Sum,
    Max,
    P { p: f64 },
    Euclidean,
}

impl TryFrom<GroundNormRepr> for GroundNorm {
    type Error = Error;

    fn try_from(r: GroundNormRepr) -> Result<Self> {
        match r {
            GroundNormRepr::Sum => Ok(GroundNorm::Sum),
            GroundNormRepr::Max => Ok(GroundNorm::Max),
            GroundNormRepr::Euclidean => Ok(GroundNorm::Euclidean),
            GroundNormRepr::P { p } => GroundNorm::p(p),
        }
    }
}

impl From<GroundNorm> for GroundNormRepr {
    fn from(g: GroundNorm) -> Self {
        match g {
            GroundNorm::Sum => GroundNormRepr::Sum,
            GroundNorm::Max => GroundNormRepr::Max,
            GroundNorm::P(p) => GroundNormRepr::P { p },
            GroundNorm::Euclidean => GroundNormRepr::Euclidean,
        }
    }
}

/// Hölder conjugate exponent `q` with `1/p + 1/q = 1`, for `1 < p < inf`.
pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

impl GroundNorm {
    /// The `p`-norm with `1 < p < inf`.
    pub fn p(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(GroundNorm::P(p))
        } else {
            Err(Error::InvalidInput(format!(
                "ground p-norm needs 1 < p < inf, got {p}; use kind \"sum\" or \"max\" for the endpoints"
            )))
        }
    }

    /// Evaluates the norm. The empty slice has norm 0.
    pub fn norm(&self, x: &[f64]) -> f64 {
        match *self {
            GroundNorm::Sum => x.iter().map(|c| c.abs()).sum(),
            GroundNorm::Max => max_abs(x),
            GroundNorm::Euclidean => euclid(x),
            GroundNorm::P(p) => p_norm(x, p),
        }
    }

    /// Evaluates the norm, rejecting zero-dimensional input.
    pub fn checked_norm(&self, x: &[f64]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::InvalidInput("norm of a zero-dimensional vector".into()));
        }
        Ok(self.norm(x))
    }

    pub fn dual(&self) -> GroundNorm {
        match *self {
            GroundNorm::Sum => GroundNorm::Max,
            GroundNorm::Max => GroundNorm::Sum,
            GroundNorm::Euclidean => GroundNorm::Euclidean,
            GroundNorm::P(p) => GroundNorm::P(conjugate_exponent(p)),
        }
    }

    /// Dual norm `||x*||_*`.
    pub fn dual_norm(&self, xstar: &[f64]) -> f64 {
        self.dual().norm(xstar)
    }

    pub fn is_strictly_convex(&self) -> bool {
        matches!(self, GroundNorm::P(_) | GroundNorm::Euclidean)
    }

    /// Differentiable away from the origin.
    pub fn is_smooth(&self) -> bool {
        self.is_strictly_convex()
    }

    /// Membership `x* in d||.||(x)`.
    ///
    /// For `x != 0` this requires `||x*||_* = 1` and `<x*, x> = ||x||`; at the
    /// origin the subdifferential is the dual unit ball.
    pub fn subdifferential_contains(&self, x: &[f64], xstar: &[f64], tol: f64) -> Result<bool> {
        check_dim(x.len(), xstar.len())?;
        let dn = self.dual_norm(xstar);
        if x.iter().all(|&c| c == 0.0) {
            return Ok(dn <= 1.0 + tol);
        }
        let nx = self.norm(x);
        Ok((dn - 1.0).abs() <= tol && (dot(xstar, x) - nx).abs() <= tol * nx.max(1.0))
    }

    /// Tightness defect `||x*||_* ||x|| - <x*, x>`, nonnegative up to rounding.
    pub fn alignment_residual(&self, xstar: &[f64], x: &[f64]) -> f64 {
        self.dual_norm(xstar) * self.norm(x) - dot(xstar, x)
    }

    /// Generic pairing test for `x in T(x*)`.
    pub fn alignment_contains(&self, xstar: &[f64], x: &[f64], tol: f64) -> Result<bool> {
        check_dim(x.len(), xstar.len())?;
        let scale = (self.dual_norm(xstar) * self.norm(x)).max(1.0);
        Ok(self.alignment_residual(xstar, x).abs() <= tol * scale)
    }

    /// Closed-form description of `T(x*)`.
    ///
    /// Coordinates of `x*` below `tol * max(1, ||x*||)` count as zero; for the
    /// sum norm, coordinates within the same margin of `||x*||_inf` count as
    /// attaining it.
    pub fn alignment_set(&self, xstar: &[f64], tol: f64) -> AlignmentSet {
        let dim = xstar.len();
        let scale = max_abs(xstar).max(1.0);
        if max_abs(xstar) <= tol * scale {
            return AlignmentSet::WholeSpace { dim };
        }
        match *self {
            GroundNorm::Euclidean => {
                let n = euclid(xstar);
                AlignmentSet::Ray {
                    generator: xstar.iter().map(|c| c / n).collect(),
                }
            }
            GroundNorm::P(p) => {
                let q = conjugate_exponent(p);
                let m = max_abs(xstar);
                let raw: Vec<f64> = xstar
                    .iter()
                    .map(|&c| sgn(c) * (c.abs() / m).powf(q / p))
                    .collect();
                let n = euclid(&raw);
                AlignmentSet::Ray {
                    generator: raw.iter().map(|c| c / n).collect(),
                }
            }
            GroundNorm::Max => {
                let signs = xstar
                    .iter()
                    .map(|&c| if c.abs() > tol * scale { sgn(c) as i8 } else { 0 })
                    .collect::<Vec<_>>();
                let active = (0..dim).filter(|&i| signs[i] != 0).collect();
                AlignmentSet::BoxCone { signs, active }
            }
            GroundNorm::Sum => {
                let m = max_abs(xstar);
                let signs = xstar
                    .iter()
                    .map(|&c| if c.abs() >= m - tol * scale { sgn(c) as i8 } else { 0 })
                    .collect::<Vec<_>>();
                let support = (0..dim).filter(|&i| signs[i] != 0).collect();
                AlignmentSet::CoordinateCone { support, signs }
            }
        }
    }

    /// Closed-form membership `x in T(x*)`, via [`GroundNorm::alignment_set`].
    pub fn alignment_contains_closed_form(&self, xstar: &[f64], x: &[f64], tol: f64) -> Result<bool> {
        check_dim(x.len(), xstar.len())?;
        Ok(self.alignment_set(xstar, tol).contains(x, tol))
    }

    /// One element of `d||.||(x)`; the zero vector at the origin.
    ///
    /// Ties in the max norm share the weight equally.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let m = max_abs(x);
        if m == 0.0 {
            return vec![0.0; d];
        }
        match *self {
            GroundNorm::Sum => x.iter().map(|&c| sgn(c)).collect(),
            GroundNorm::Max => {
                let ties = x.iter().filter(|c| c.abs() == m).count() as f64;
                x.iter()
                    .map(|&c| if c.abs() == m { sgn(c) / ties } else { 0.0 })
                    .collect()
            }
            GroundNorm::Euclidean => {
                let n = euclid(x);
                x.iter().map(|c| c / n).collect()
            }
            GroundNorm::P(p) => {
                let n = p_norm(x, p);
                x.iter().map(|&c| sgn(c) * (c.abs() / n).powf(p - 1.0)).collect()
            }
        }
    }

    /// Hessian of a smooth norm at `x != 0`, row-major `d x d`.
    ///
    /// `None` for polyhedral norms, at the origin, or where the Hessian is
    /// unbounded (`p < 2` with a zero coordinate).
    pub fn hessian(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let d = x.len();
        if max_abs(x) == 0.0 {
            return None;
        }
        let (n, curv, g): (f64, Vec<f64>, Vec<f64>) = match *self {
            GroundNorm::Euclidean => {
                let n = euclid(x);
                (n, vec![1.0; d], x.iter().map(|c| c / n).collect())
            }
            GroundNorm::P(p) => {
                let n = p_norm(x, p);
                let curv: Vec<f64> = x.iter().map(|&c| (p - 1.0) * (c.abs() / n).powf(p - 2.0)).collect();
                if curv.iter().any(|c| !c.is_finite()) {
                    return None;
                }
                let g = x.iter().map(|&c| sgn(c) * (c.abs() / n).powf(p - 1.0)).collect();
                (n, curv, g)
            }
            _ => return None,
        };
        let factor = match *self {
            GroundNorm::P(p) => p - 1.0,
            _ => 1.0,
        };
        let mut h = vec![vec![0.0; d]; d];
        for k in 0..d {
            for l in 0..d {
                let diag = if k == l { curv[k] } else { 0.0 };
                h[k][l] = (diag - factor * g[k] * g[l]) / n;
            }
        }
        Some(h)
    }
}

/// `||x||_p` with max-factoring, so large `p` does not overflow.
pub(crate) fn p_norm(x: &[f64], p: f64) -> f64 {
    let m = max_abs(x);
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|c| (c.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Explicit description of an alignment cone `T(x*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum AlignmentSet {
    /// `x* = 0`: every vector is aligned.
    WholeSpace { dim: usize },
    /// `{ lambda * generator : lambda >= 0 }`, generator of unit Euclidean length.
    Ray { generator: Vec<f64> },
    /// Max-norm case: `signs[i] * x_i = ||x||_inf` for every active `i`.
    BoxCone { signs: Vec<i8>, active: Vec<usize> },
    /// Sum-norm case: `x_i = 0` off the support, `signs[i] * x_i >= 0` on it.
    CoordinateCone { support: Vec<usize>, signs: Vec<i8> },
}

impl AlignmentSet {
    /// Membership with tolerance `tol * max(1, ||x||)`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let slack = tol * max_abs(x).max(1.0);
        match self {
            AlignmentSet::WholeSpace { .. } => true,
            AlignmentSet::Ray { generator } => {
                let lambda = dot(x, generator);
                if lambda < -slack {
                    return false;
                }
                let lambda = lambda.max(0.0);
                let off: Vec<f64> = x.iter().zip(generator).map(|(a, g)| a - lambda * g).collect();
                euclid(&off) <= slack
            }
            AlignmentSet::BoxCone { signs, active } => {
                let m = max_abs(x);
                active.iter().all(|&i| f64::from(signs[i]) * x[i] >= m - slack)
            }
            AlignmentSet::CoordinateCone { signs, .. } => x.iter().zip(signs).all(|(&c, &s)| {
                if s == 0 {
                    c.abs() <= slack
                } else {
                    f64::from(s) * c >= -slack
                }
            }),
        }
    }
}

/// Convenience wrapper taking [`Vector`] arguments.
pub fn ground_norm_eval(nrm: &GroundNorm, x: &Vector) -> f64 {
    nrm.norm(x)
}
