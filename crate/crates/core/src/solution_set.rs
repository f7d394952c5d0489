//! The full solution set reconstructed from one certificate.
//!
//! Every minimizer `u` satisfies `sum_i <x*_i, u - v_i> = f(u)` for the
//! certificate's duals. The specialized kinds restate this blockwise:
//! alignment cones `v_i + T(x*_i)` for the sum generator, alignment plus
//! farthest cells for the max generator, alignment plus distance
//! proportions for the `p` generator.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{check_certificate, Certificate, CertificateReport, Theorem};
use crate::error::{check_dim, Error, Result};
use crate::ground::{conjugate_exponent, AlignmentSet, GroundNorm};
use crate::parallel;
use crate::problem::ProblemInstance;
use crate::vector::{dot, Vector};

/// Cap on the number of lattice points a region sample may visit.
pub const MAX_SAMPLE_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionSetKind {
    GeneralPredicate,
    #[serde(rename = "ft_intersection")]
    FTIntersection,
    ChebyshevIntersection,
    #[serde(rename = "pft_intersection")]
    PFTIntersection,
}

impl SolutionSetKind {
    fn theorem(self) -> Theorem {
        match self {
            SolutionSetKind::GeneralPredicate => Theorem::General,
            SolutionSetKind::FTIntersection => Theorem::FermatTorricelli,
            SolutionSetKind::ChebyshevIntersection => Theorem::Chebyshev,
            SolutionSetKind::PFTIntersection => Theorem::PFermat,
        }
    }

    fn from_theorem(t: Theorem) -> Self {
        match t {
            Theorem::General => SolutionSetKind::GeneralPredicate,
            Theorem::FermatTorricelli => SolutionSetKind::FTIntersection,
            Theorem::Chebyshev => SolutionSetKind::ChebyshevIntersection,
            Theorem::PFermat => SolutionSetKind::PFTIntersection,
        }
    }
}

/// A certificate accepted by its checker, bound to its instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSetDescription {
    kind: SolutionSetKind,
    certificate: Certificate,
    instance: ProblemInstance,
    report: CertificateReport,
    notes: Vec<String>,
}

impl SolutionSetDescription {
    /// Picks the kind from the generator. The sum-generator intersection only
    /// describes the set when the certified point is not an anchor; otherwise
    /// the general predicate is used and a note records the fallback.
    pub fn new(instance: ProblemInstance, certificate: Certificate, tol: f64) -> Result<Self> {
        let mut kind = SolutionSetKind::from_theorem(Theorem::for_generator(&instance.norm().generator));
        let mut notes = Vec::new();
        if kind == SolutionSetKind::FTIntersection && at_anchor(&instance, &certificate.solution, tol) {
            kind = SolutionSetKind::GeneralPredicate;
            notes.push("certified point coincides with an anchor; using the general predicate".into());
        }
        let mut desc = Self::with_kind(instance, certificate, kind, tol)?;
        desc.notes.extend(notes);
        Ok(desc)
    }

    /// Validates the certificate with the checker matching `kind`.
    pub fn with_kind(
        instance: ProblemInstance,
        certificate: Certificate,
        kind: SolutionSetKind,
        tol: f64,
    ) -> Result<Self> {
        let report = check_certificate(&instance, &certificate, Some(kind.theorem()), tol)?;
        if !report.verdict {
            return Err(Error::Contract(format!(
                "certificate fails the {} checker: {:?}",
                kind.theorem().name(),
                report.violations()
            )));
        }
        let mut notes = Vec::new();
        if kind == SolutionSetKind::ChebyshevIntersection {
            let skipped = skipped_blocks(&instance, &certificate, tol);
            if !skipped.is_empty() {
                notes.push(format!("blocks with zero dual skipped: {skipped:?}"));
            }
        }
        Ok(SolutionSetDescription { kind, certificate, instance, report, notes })
    }

    pub fn kind(&self) -> SolutionSetKind {
        self.kind
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn report(&self) -> &CertificateReport {
        &self.report
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Membership through the predicate matching the description's kind.
    pub fn contains(&self, u: &[f64], tol: f64) -> Result<bool> {
        match self.kind {
            SolutionSetKind::GeneralPredicate => sol_contains_general(self, u, tol),
            SolutionSetKind::FTIntersection => sol_contains_ft(self, u, tol),
            SolutionSetKind::ChebyshevIntersection => sol_contains_chebyshev(self, u, tol),
            SolutionSetKind::PFTIntersection => sol_contains_pft(self, u, tol),
        }
    }

    /// Blockwise summary of the sets being intersected.
    pub fn describe(&self, tol: f64) -> DescriptionSummary {
        let g = self.instance.norm().ground;
        let skipped = skipped_blocks(&self.instance, &self.certificate, tol);
        let blocks = self
            .instance
            .anchors()
            .iter()
            .zip(self.certificate.duals.blocks())
            .enumerate()
            .map(|(i, (v, x))| {
                let dual_norm = g.dual_norm(x);
                let skip = self.kind == SolutionSetKind::ChebyshevIntersection && skipped.contains(&i);
                BlockSummary {
                    index: i,
                    anchor: v.as_slice().to_vec(),
                    dual: x.as_slice().to_vec(),
                    dual_norm,
                    alignment_set: (self.kind != SolutionSetKind::GeneralPredicate && !skip)
                        .then(|| g.alignment_set(x, tol)),
                    skipped: skip,
                }
            })
            .collect();
        DescriptionSummary {
            kind: self.kind,
            theorem: self.kind.theorem(),
            solution: self.certificate.solution.as_slice().to_vec(),
            value: self.instance.objective(&self.certificate.solution),
            blocks,
            notes: self.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptionSummary {
    pub kind: SolutionSetKind,
    pub theorem: Theorem,
    pub solution: Vec<f64>,
    pub value: f64,
    pub blocks: Vec<BlockSummary>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    pub index: usize,
    pub anchor: Vec<f64>,
    pub dual: Vec<f64>,
    pub dual_norm: f64,
    /// `T(x*_i)`, translated to the anchor in the intersection.
    pub alignment_set: Option<AlignmentSet>,
    pub skipped: bool,
}

fn at_anchor(prob: &ProblemInstance, u: &[f64], tol: f64) -> bool {
    let g = prob.norm().ground;
    let scale = prob.objective(u).max(1.0);
    prob.residuals(u).iter().any(|r| g.norm(r) <= tol * scale)
}

fn skipped_blocks(prob: &ProblemInstance, cert: &Certificate, tol: f64) -> Vec<usize> {
    let g = prob.norm().ground;
    cert.duals
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, x)| g.dual_norm(x) <= tol)
        .map(|(i, _)| i)
        .collect()
}

fn require(desc: &SolutionSetDescription, expected: Theorem) -> Result<()> {
    let actual = Theorem::for_generator(&desc.instance.norm().generator);
    if actual != expected {
        return Err(Error::Contract(format!(
            "{} predicate does not apply to generator {:?}",
            expected.name(),
            desc.instance.norm().generator
        )));
    }
    Ok(())
}

/// `|sum_i <x*_i, u - v_i> - f(u)| <= tol * max(1, f(u))`.
pub fn sol_contains_general(desc: &SolutionSetDescription, u: &[f64], tol: f64) -> Result<bool> {
    let prob = &desc.instance;
    check_dim(prob.dim(), u.len())?;
    let f = prob.objective(u);
    let pair: f64 = desc
        .certificate
        .duals
        .blocks()
        .iter()
        .zip(prob.residuals(u))
        .map(|(x, r)| dot(x, &r))
        .sum();
    Ok((pair - f).abs() <= tol * f.max(1.0))
}

/// `u - v_i` lies in the alignment set of `x*_i` for every block.
///
/// Refused with a contract error when the certified point is an anchor;
/// the general predicate covers that case.
pub fn sol_contains_ft(desc: &SolutionSetDescription, u: &[f64], tol: f64) -> Result<bool> {
    require(desc, Theorem::FermatTorricelli)?;
    let prob = &desc.instance;
    check_dim(prob.dim(), u.len())?;
    if at_anchor(prob, &desc.certificate.solution, tol) {
        return Err(Error::Contract(
            "certified point coincides with an anchor; use the general predicate".into(),
        ));
    }
    let g = prob.norm().ground;
    Ok(desc
        .certificate
        .duals
        .blocks()
        .iter()
        .zip(prob.residuals(u))
        .all(|(x, r)| g.alignment_set(x, tol).contains(&r, tol)))
}

/// `<x*_i, u - v_i> = ||x*_i||_* max_j ||u - v_j||` for every block whose
/// dual norm exceeds `tol`.
pub fn sol_contains_chebyshev(desc: &SolutionSetDescription, u: &[f64], tol: f64) -> Result<bool> {
    require(desc, Theorem::Chebyshev)?;
    let prob = &desc.instance;
    check_dim(prob.dim(), u.len())?;
    let g = prob.norm().ground;
    let res = prob.residuals(u);
    let m = res.iter().map(|r| g.norm(r)).fold(0.0, f64::max);
    let scale = m.max(1.0);
    Ok(desc.certificate.duals.blocks().iter().zip(&res).all(|(x, r)| {
        let a = g.dual_norm(x);
        a <= tol || (dot(x, r) - a * m).abs() <= tol * scale
    }))
}

/// The alternative route for the max generator: `u` in `v_i + T(x*_i)` and
/// in the farthest cell of `v_i`, for every block with nonzero dual.
pub fn sol_contains_chebyshev_via_cells(desc: &SolutionSetDescription, u: &[f64], tol: f64) -> Result<bool> {
    require(desc, Theorem::Chebyshev)?;
    let prob = &desc.instance;
    check_dim(prob.dim(), u.len())?;
    let g = prob.norm().ground;
    let res = prob.residuals(u);
    for (i, (x, r)) in desc.certificate.duals.blocks().iter().zip(&res).enumerate() {
        if g.dual_norm(x) <= tol {
            continue;
        }
        if !g.alignment_contains(x, r, tol)? || !farthest_voronoi_contains(g, prob.anchors(), i, u, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Blockwise alignment together with
/// `||x*_i||_*^q = ||u - v_i||^p / sum_j ||u - v_j||^p`.
pub fn sol_contains_pft(desc: &SolutionSetDescription, u: &[f64], tol: f64) -> Result<bool> {
    require(desc, Theorem::PFermat)?;
    let prob = &desc.instance;
    check_dim(prob.dim(), u.len())?;
    let p = prob.norm().generator.exponent().expect("psi_p generator");
    let q = conjugate_exponent(p);
    let g = prob.norm().ground;
    let res = prob.residuals(u);
    let b: Vec<f64> = res.iter().map(|r| g.norm(r)).collect();
    let bmax = b.iter().copied().fold(0.0, f64::max);
    if bmax == 0.0 {
        return Ok(false);
    }
    let bp: Vec<f64> = b.iter().map(|v| (v / bmax).powf(p)).collect();
    let total: f64 = bp.iter().sum();
    for (i, x) in desc.certificate.duals.blocks().iter().enumerate() {
        if !g.alignment_contains(x, &res[i], tol)? {
            return Ok(false);
        }
        if (g.dual_norm(x).powf(q) - bp[i] / total).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `||u - v_i|| >= max_j ||u - v_j|| - tol * max(1, max_j ||u - v_j||)`.
///
/// `i` is zero-based. For the Euclidean norm the half-space form
/// `<u, v_j - v_i> >= (||v_j||^2 - ||v_i||^2) / 2` is evaluated as well; a
/// decisive disagreement between the two is an internal error.
pub fn farthest_voronoi_contains(ground: GroundNorm, anchors: &[Vector], i: usize, u: &[f64], tol: f64) -> Result<bool> {
    if i >= anchors.len() {
        return Err(Error::InvalidInput(format!(
            "anchor index {i} out of range for {} anchors",
            anchors.len()
        )));
    }
    for v in anchors {
        check_dim(v.dim(), u.len())?;
    }
    let dist: Vec<f64> = anchors.iter().map(|v| ground.norm(&diff(u, v))).collect();
    let m = dist.iter().copied().fold(0.0, f64::max);
    let scale = m.max(1.0);
    let margin = dist[i] - m;
    let inside = margin >= -tol * scale;
    if ground == GroundNorm::Euclidean {
        let vi = &anchors[i];
        let half = anchors
            .iter()
            .map(|vj| {
                let w = diff(vj, vi);
                dot(u, &w) - (dot(vj, vj) - dot(vi, vi)) / 2.0
            })
            .fold(f64::INFINITY, f64::min);
        // Squared-distance gaps are twice the half-space margins.
        let band = 10.0 * tol * scale * scale;
        if (half < -band && margin >= 0.0) || (half > band && margin < -tol * scale) {
            return Err(Error::InternalConsistency(format!(
                "farthest-cell routes disagree at anchor {i}: distance margin {margin}, half-space margin {half}"
            )));
        }
    }
    Ok(inside)
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Axis-aligned sampling box, one `(lo, hi)` pair per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox(pub Vec<(f64, f64)>);

impl SampleBox {
    pub fn square(lo: f64, hi: f64, dim: usize) -> Self {
        SampleBox(vec![(lo, hi); dim])
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().any(|&(lo, hi)| !(lo <= hi))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Lattice coordinate `k` of `grid` points on `[lo, hi]`; a single point
/// sits at the centre.
pub fn lattice_coord(lo: f64, hi: f64, grid: usize, k: usize) -> f64 {
    if grid == 1 {
        0.5 * (lo + hi)
    } else if k + 1 == grid {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (grid - 1) as f64
    }
}

/// Enumerates the `grid^d` lattice of `bx`, first coordinate slowest.
pub fn lattice_points(bx: &SampleBox, grid: usize) -> Result<Vec<Vec<f64>>> {
    let total = lattice_total(bx.dim(), grid)?;
    Ok((0..total).map(|idx| lattice_point(bx, grid, idx)).collect())
}

fn lattice_total(d: usize, grid: usize) -> Result<usize> {
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be at least 1".into()));
    }
    let exp = u32::try_from(d).map_err(|_| Error::Budget("dimension too large".into()))?;
    match grid.checked_pow(exp) {
        Some(t) if t <= MAX_SAMPLE_POINTS => Ok(t),
        _ => Err(Error::Budget(format!(
            "grid {grid} in dimension {d} exceeds {MAX_SAMPLE_POINTS} sample points"
        ))),
    }
}

fn lattice_point(bx: &SampleBox, grid: usize, mut idx: usize) -> Vec<f64> {
    let d = bx.dim();
    let mut p = vec![0.0; d];
    for k in (0..d).rev() {
        let (lo, hi) = bx.0[k];
        p[k] = lattice_coord(lo, hi, grid, idx % grid);
        idx /= grid;
    }
    p
}

/// Lattice points of `bx` accepted by the description's predicate, in
/// lattice order (first coordinate slowest). Bit-identical across thread
/// counts.
pub fn sample_solution_region(desc: &SolutionSetDescription, bx: &SampleBox, grid: usize, tol: f64) -> Result<Vec<Vector>> {
    check_dim(desc.instance.dim(), bx.dim())?;
    if bx.is_empty() {
        return Ok(Vec::new());
    }
    let total = lattice_total(bx.dim(), grid)?;
    let hits: Result<Vec<Option<Vec<f64>>>> = parallel::install(|| {
        (0..total)
            .into_par_iter()
            .map(|idx| {
                let p = lattice_point(bx, grid, idx);
                Ok(desc.contains(&p, tol)?.then_some(p))
            })
            .collect()
    });
    hits?.into_iter().flatten().map(Vector::new).collect()
}
