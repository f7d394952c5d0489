//! The worked examples: two-anchor instances in the plane, the farthest
//! cells, and one-dimensional reductions of the Hilbert-space examples.
//!
//! Each certified example carries its stated certificate, optimal value and
//! solution set; [`reproduce`] runs solve, recover, certify and sample and
//! compares every output with the stated one.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{check_certificate, recover_certificate, Certificate, Recovery, Theorem, DEFAULT_CHECK_TOL, DEFAULT_RECOVERY_TOL};
use crate::error::Result;
use crate::ground::GroundNorm;
use crate::parallel;
use crate::problem::ProblemInstance;
use crate::product::ProductNorm;
use crate::psi::PsiGenerator;
use crate::render::{region_csv, region_svg};
use crate::solution_set::{farthest_voronoi_contains, lattice_points, sample_solution_region, SampleBox, SolutionSetDescription};
use crate::solver::{solve_subgradient, SolveResult, SolverConfig};
use crate::vector::Vector;

/// Tolerance of sampled-region membership.
pub const DEFAULT_SAMPLE_TOL: f64 = 1e-7;
const VALUE_TOL: f64 = 1e-4;
const REGION_BAND: f64 = 1e-9;

/// Finite union of polyhedra `{u : a_k . u <= b_k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Polyhedron(Vec<(Vec<f64>, f64)>),
    Union(Vec<Region>),
}

impl Region {
    /// Membership with every right-hand side relaxed by `slack * ||a||_1`.
    pub fn contains(&self, u: &[f64], slack: f64) -> bool {
        match self {
            Region::Polyhedron(rows) => rows.iter().all(|(a, b)| {
                let lhs: f64 = a.iter().zip(u).map(|(x, y)| x * y).sum();
                let w: f64 = a.iter().map(|x| x.abs()).sum();
                lhs <= b + slack * w
            }),
            Region::Union(parts) => parts.iter().any(|r| r.contains(u, slack)),
        }
    }

    pub fn point(p: &[f64]) -> Region {
        let mut rows = Vec::new();
        for k in 0..p.len() {
            let mut e = vec![0.0; p.len()];
            e[k] = 1.0;
            rows.push((e.clone(), p[k]));
            e[k] = -1.0;
            rows.push((e, -p[k]));
        }
        Region::Polyhedron(rows)
    }

    /// Axis-aligned box `lo <= u <= hi`.
    pub fn bounds(lo: &[f64], hi: &[f64]) -> Region {
        let d = lo.len();
        let mut rows = Vec::new();
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            rows.push((e.clone(), hi[k]));
            e[k] = -1.0;
            rows.push((e, -lo[k]));
        }
        Region::Polyhedron(rows)
    }
}

/// How a sampled region is compared with the stated set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionCheck {
    /// Every lattice point classified as the stated set does.
    Exact,
    /// Accepted points lie within one lattice cell of the stated set and
    /// every lattice point of the set is accepted.
    WithinCell,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExampleKind {
    Certified {
        certificate: Certificate,
        value: f64,
        region: Region,
        check: RegionCheck,
    },
    /// Farthest cells of each anchor.
    FarthestCells { cells: Vec<Region> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleExample {
    pub id: String,
    pub title: String,
    pub instance: ProblemInstance,
    pub kind: ExampleKind,
    pub sample_box: SampleBox,
    pub grid: usize,
}

fn planar(ground: GroundNorm, psi: PsiGenerator) -> ProblemInstance {
    ProblemInstance::from_rows(&[&[0.0, 0.0], &[2.0, 0.0]], ProductNorm::new(ground, psi))
}

fn halfplanes(rows: &[([f64; 2], f64)]) -> Region {
    Region::Polyhedron(rows.iter().map(|(a, b)| (a.to_vec(), *b)).collect())
}

#[allow(clippy::too_many_arguments)]
fn certified(
    id: &str,
    title: &str,
    instance: ProblemInstance,
    solution: &[f64],
    duals: &[&[f64]],
    value: f64,
    region: Region,
    check: RegionCheck,
    sample_box: SampleBox,
    grid: usize,
) -> BundleExample {
    BundleExample {
        id: id.into(),
        title: title.into(),
        instance,
        kind: ExampleKind::Certified { certificate: Certificate::from_rows(solution, duals), value, region, check },
        sample_box,
        grid,
    }
}

/// All bundled examples in a fixed order.
pub fn examples() -> Vec<BundleExample> {
    let plane = SampleBox::square(-3.0, 3.0, 2);
    let a = 1.0 / 3f64.sqrt();
    let line = SampleBox::square(-1.0, 1.0, 1);
    let h = 0.5f64.sqrt();
    let segment = halfplanes(&[([0.0, 1.0], 0.0), ([0.0, -1.0], 0.0), ([1.0, 0.0], 2.0), ([-1.0, 0.0], 0.0)]);
    let vertical = Region::bounds(&[1.0, -1.0], &[1.0, 1.0]);
    let mut out = Vec::new();

    let (v1, v2) = ([-1.0, 0.5], [2.0, 2.5]);
    let x1 = [1.5f64, 1.0];
    let nx = (x1[0] * x1[0] + x1[1] * x1[1]).sqrt();
    let mid = [0.5, 1.5];
    out.push(certified(
        "4.8",
        "two anchors, midpoint optimal: Euclidean ground, p = 2 generator",
        ProblemInstance::from_rows(&[&v1, &v2], ProductNorm::new(GroundNorm::Euclidean, PsiGenerator::P(2.0))),
        &mid,
        &[&[h * x1[0] / nx, h * x1[1] / nx], &[-h * x1[0] / nx, -h * x1[1] / nx]],
        13f64.sqrt() * h,
        Region::point(&mid),
        RegionCheck::WithinCell,
        SampleBox(vec![(-2.0, 3.0), (-1.0, 4.0)]),
        501,
    ));

    let ft: &[&[f64]] = &[&[1.0, 0.0], &[-1.0, 0.0]];
    out.push(certified(
        "5.3-1",
        "Fermat-Torricelli, max ground: solution set is a square",
        planar(GroundNorm::Max, PsiGenerator::sum()),
        &[1.0, 0.0],
        ft,
        2.0,
        halfplanes(&[([-1.0, 1.0], 0.0), ([-1.0, -1.0], 0.0), ([1.0, 1.0], 2.0), ([1.0, -1.0], 2.0)]),
        RegionCheck::Exact,
        plane.clone(),
        601,
    ));
    for (label, g) in [("p=1", GroundNorm::Sum), ("p=2", GroundNorm::Euclidean), ("p=3", GroundNorm::P(3.0))] {
        out.push(certified(
            &format!("5.3-2/{label}"),
            &format!("Fermat-Torricelli, {label} ground: solution set is the segment"),
            planar(g, PsiGenerator::sum()),
            &[1.0, 0.0],
            ft,
            2.0,
            segment.clone(),
            RegionCheck::Exact,
            plane.clone(),
            601,
        ));
    }
    out.push(
        certified(
            "5.4",
            "Fermat-Torricelli on a line through two opposite points",
            ProblemInstance::from_rows(&[&[a], &[-a]], ProductNorm::new(GroundNorm::Euclidean, PsiGenerator::sum()))
                .with_comment("one-dimensional reduction of the L2[0,1] example: v(t) = t of norm 1/sqrt(3), w = -v, coordinates along v"),
            &[0.0],
            &[&[-1.0], &[1.0]],
            2.0 * a,
            Region::bounds(&[-a], &[a]),
            RegionCheck::WithinCell,
            line.clone(),
            2001,
        ),
    );

    let linf_v = Region::Union(vec![
        halfplanes(&[([-1.0, 0.0], -1.0)]),
        halfplanes(&[([1.0, -1.0], 2.0), ([-1.0, -1.0], -2.0)]),
        halfplanes(&[([1.0, 1.0], 2.0), ([-1.0, 1.0], -2.0)]),
    ]);
    let linf_w = Region::Union(vec![
        halfplanes(&[([1.0, 0.0], 1.0)]),
        halfplanes(&[([1.0, -1.0], 0.0), ([-1.0, -1.0], 0.0)]),
        halfplanes(&[([1.0, 1.0], 0.0), ([-1.0, 1.0], 0.0)]),
    ]);
    out.push(BundleExample {
        id: "6.3-1".into(),
        title: "farthest cells, max ground".into(),
        instance: planar(GroundNorm::Max, PsiGenerator::max()),
        kind: ExampleKind::FarthestCells { cells: vec![linf_v, linf_w] },
        sample_box: plane.clone(),
        grid: 601,
    });
    out.push(BundleExample {
        id: "6.3-2".into(),
        title: "farthest cells, Euclidean ground".into(),
        instance: planar(GroundNorm::Euclidean, PsiGenerator::max()),
        kind: ExampleKind::FarthestCells {
            cells: vec![halfplanes(&[([-1.0, 0.0], -1.0)]), halfplanes(&[([1.0, 0.0], 1.0)])],
        },
        sample_box: plane.clone(),
        grid: 601,
    });

    let half: &[&[f64]] = &[&[0.5, 0.0], &[-0.5, 0.0]];
    out.push(certified(
        "6.4-1",
        "Chebyshev centre, max ground: solution set is a vertical segment",
        planar(GroundNorm::Max, PsiGenerator::max()),
        &[1.0, 0.0],
        half,
        1.0,
        vertical.clone(),
        RegionCheck::WithinCell,
        plane.clone(),
        601,
    ));
    out.push(certified(
        "6.4-2",
        "Chebyshev centre, Euclidean ground: unique solution",
        planar(GroundNorm::Euclidean, PsiGenerator::max()),
        &[1.0, 0.0],
        half,
        1.0,
        Region::point(&[1.0, 0.0]),
        RegionCheck::WithinCell,
        plane.clone(),
        601,
    ));
    out.push(certified(
        "6.5",
        "Chebyshev centre on a line through two opposite points",
        ProblemInstance::from_rows(&[&[a], &[-a]], ProductNorm::new(GroundNorm::Euclidean, PsiGenerator::max()))
            .with_comment("one-dimensional reduction of the L2[0,1] example: v(t) = t of norm 1/sqrt(3), w = -v, coordinates along v"),
        &[0.0],
        &[&[-0.5], &[0.5]],
        a,
        Region::point(&[0.0]),
        RegionCheck::WithinCell,
        line.clone(),
        2001,
    ));

    let pft: &[&[f64]] = &[&[h, 0.0], &[-h, 0.0]];
    out.push(certified(
        "7.3-1",
        "p-Fermat-Torricelli (p = 2), max ground: vertical segment",
        planar(GroundNorm::Max, PsiGenerator::P(2.0)),
        &[1.0, 0.0],
        pft,
        2f64.sqrt(),
        vertical,
        RegionCheck::WithinCell,
        plane.clone(),
        601,
    ));
    out.push(certified(
        "7.3-2",
        "p-Fermat-Torricelli (p = 2), Euclidean ground: unique solution",
        planar(GroundNorm::Euclidean, PsiGenerator::P(2.0)),
        &[1.0, 0.0],
        pft,
        2f64.sqrt(),
        Region::point(&[1.0, 0.0]),
        RegionCheck::WithinCell,
        plane,
        601,
    ));
    out.push(certified(
        "7.4",
        "p-Fermat-Torricelli (p = 2) on a line through two opposite points",
        ProblemInstance::from_rows(&[&[a], &[-a]], ProductNorm::new(GroundNorm::Euclidean, PsiGenerator::P(2.0)))
            .with_comment("one-dimensional reduction of the L2[0,1] example: v(t) = t of norm 1/sqrt(3), w = -v, coordinates along v"),
        &[0.0],
        &[&[-h], &[h]],
        2f64.sqrt() * a,
        Region::point(&[0.0]),
        RegionCheck::WithinCell,
        line,
        2001,
    ));
    out
}

/// Examples whose id starts with `prefix`.
pub fn select(prefix: Option<&str>) -> Vec<BundleExample> {
    examples().into_iter().filter(|e| prefix.is_none_or(|p| e.id.starts_with(p))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub check: f64,
    pub recovery: f64,
    pub sample: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { check: DEFAULT_CHECK_TOL, recovery: DEFAULT_RECOVERY_TOL, sample: DEFAULT_SAMPLE_TOL }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances { check: tol, recovery: tol, sample: tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionComparison {
    pub lattice_points: usize,
    pub accepted: usize,
    pub misclassified: usize,
    /// First few misclassified points.
    pub witnesses: Vec<Vec<f64>>,
}

/// Classifies the lattice of `bx` with `member` and compares with `region`.
pub fn compare_region<F>(member: F, region: &Region, bx: &SampleBox, grid: usize, check: RegionCheck) -> Result<RegionComparison>
where
    F: Fn(&[f64]) -> Result<bool> + Sync,
{
    let pts = lattice_points(bx, grid)?;
    let cell = bx
        .0
        .iter()
        .map(|(lo, hi)| if grid > 1 { (hi - lo) / (grid - 1) as f64 } else { hi - lo })
        .fold(0.0, f64::max);
    let verdicts: Vec<Result<(bool, bool)>> = parallel::install(|| {
        pts.par_iter()
            .map(|p| {
                let got = member(p)?;
                let bad = match check {
                    RegionCheck::Exact => got != region.contains(p, REGION_BAND),
                    RegionCheck::WithinCell => {
                        (got && !region.contains(p, cell * (1.0 + 1e-9))) || (!got && region.contains(p, REGION_BAND))
                    }
                };
                Ok((got, bad))
            })
            .collect()
    });
    let mut cmp = RegionComparison { lattice_points: pts.len(), accepted: 0, misclassified: 0, witnesses: Vec::new() };
    for (p, v) in pts.iter().zip(verdicts) {
        let (got, bad) = v?;
        cmp.accepted += usize::from(got);
        if bad {
            cmp.misclassified += 1;
            if cmp.witnesses.len() < 5 {
                cmp.witnesses.push(p.clone());
            }
        }
    }
    Ok(cmp)
}

/// Files produced for one example.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleOutcome {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(checks: &mut Vec<Check>, name: &str, passed: bool, detail: String) {
    checks.push(Check { name: name.into(), passed, detail });
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v).map_err(|e| crate::error::Error::InvalidInput(e.to_string()))? + "\n")
}

/// Runs solve, recovery, certification and sampling for one example.
pub fn reproduce(ex: &BundleExample, tol: Tolerances) -> Result<(ExampleOutcome, Artifacts)> {
    let mut checks = Vec::new();
    let mut art = Artifacts::default();
    let prob = &ex.instance;
    let slug = ex.id.replace('/', "_").replace('=', "");
    art.files.push((format!("{slug}/instance.json"), json(prob)?));
    match &ex.kind {
        ExampleKind::Certified { certificate, value, region, check: rc } => {
            let sol: SolveResult = solve_subgradient(prob, &SolverConfig::default())?;
            check(
                &mut checks,
                "value",
                sol.converged && (sol.value - value).abs() <= VALUE_TOL,
                format!("solver {} (converged: {}), stated {}", sol.value, sol.converged, value),
            );
            art.files.push((format!("{slug}/solve.json"), json(&sol)?));

            let rep = check_certificate(prob, certificate, None, tol.check)?;
            let gen = check_certificate(prob, certificate, Some(Theorem::General), tol.check)?;
            check(
                &mut checks,
                "stated certificate",
                rep.verdict && gen.verdict,
                format!("{} checker: {:?}; general checker: {}", rep.theorem.name(), rep.residuals, gen.verdict),
            );
            art.files.push((format!("{slug}/certificate.json"), json(certificate)?));

            match recover_certificate(prob, &sol.point, tol.recovery)? {
                Recovery::Certified { certificate: rec, report } => {
                    check(&mut checks, "recovered certificate", report.verdict, format!("{:?}", report.residuals));
                    art.files.push((format!("{slug}/recovered.json"), json(&rec)?));
                }
                Recovery::Infeasible { reason } => check(&mut checks, "recovered certificate", false, reason),
            }

            match SolutionSetDescription::new(prob.clone(), certificate.clone(), tol.check) {
                Ok(desc) => {
                    let cmp = compare_region(|u| desc.contains(u, tol.sample), region, &ex.sample_box, ex.grid, *rc)?;
                    check(
                        &mut checks,
                        "solution region",
                        cmp.misclassified == 0 && cmp.accepted > 0,
                        format!(
                            "{} of {} lattice points accepted, {} misclassified {:?}",
                            cmp.accepted, cmp.lattice_points, cmp.misclassified, cmp.witnesses
                        ),
                    );
                    let pts = sample_solution_region(&desc, &ex.sample_box, ex.grid, tol.sample)?;
                    art.files.push((format!("{slug}/region.csv"), region_csv(prob.dim(), &pts)));
                    if prob.dim() == 2 {
                        art.files.push((format!("{slug}/region.svg"), region_svg(prob.anchors(), &pts, &ex.sample_box, ex.grid)?));
                    }
                }
                Err(e) => check(&mut checks, "solution region", false, e.to_string()),
            }
        }
        ExampleKind::FarthestCells { cells } => {
            let g = prob.norm().ground;
            for (i, cell) in cells.iter().enumerate() {
                let member = |u: &[f64]| farthest_voronoi_contains(g, prob.anchors(), i, u, tol.sample);
                let cmp = compare_region(member, cell, &ex.sample_box, ex.grid, RegionCheck::Exact)?;
                check(
                    &mut checks,
                    &format!("farthest cell of v{}", i + 1),
                    cmp.misclassified == 0,
                    format!("{} accepted, {} misclassified {:?}", cmp.accepted, cmp.misclassified, cmp.witnesses),
                );
                let pts: Vec<Vector> = lattice_points(&ex.sample_box, ex.grid)?
                    .into_iter()
                    .filter(|u| member(u).unwrap_or(false))
                    .map(Vector::new)
                    .collect::<Result<_>>()?;
                art.files.push((format!("{slug}/cell_v{}.csv", i + 1), region_csv(prob.dim(), &pts)));
                if prob.dim() == 2 {
                    art.files.push((format!("{slug}/cell_v{}.svg", i + 1), region_svg(prob.anchors(), &pts, &ex.sample_box, ex.grid)?));
                }
            }
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok((ExampleOutcome { id: ex.id.clone(), title: ex.title.clone(), passed, checks }, art))
}

/// Fixed-width summary, one row per example.
pub fn summary_table(outcomes: &[ExampleOutcome]) -> String {
    let mut out = format!("{:<10} {:<6} {}\n", "example", "result", "failed checks");
    for o in outcomes {
        let failed: Vec<&str> = o.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        out.push_str(&format!(
            "{:<10} {:<6} {}\n",
            o.id,
            if o.passed { "pass" } else { "FAIL" },
            if failed.is_empty() { "-".to_string() } else { failed.join(", ") }
        ));
    }
    out
}
