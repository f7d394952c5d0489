//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{generators, grounds, hull_distance_inf, instance, instance_with, product_vector, rng, simplex, smooth_grounds, vec_in};
use normmin::bundle::{examples, ExampleKind};
use normmin::certificate::{check_certificate, recover_certificate, DEFAULT_RECOVERY_TOL};
use normmin::psi::conjugate_search;
use normmin::solution_set::{lattice_points, sample_solution_region};
use normmin::solver::{grid_oracle, solve_subgradient};
use normmin::{
    Certificate, Error, GroundNorm, ProblemInstance, ProductNorm, PsiGenerator, SampleBox, SolutionSetDescription, SolverConfig,
    Theorem, Vector,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn planar(g: GroundNorm, psi: PsiGenerator) -> ProblemInstance {
    ProblemInstance::from_rows(&[&[0.0, 0.0], &[2.0, 0.0]], ProductNorm::new(g, psi))
}

fn plane() -> SampleBox {
    SampleBox::square(-3.0, 3.0, 2)
}

/// Deviation of `u` from the target set, in the max norm for boxes and by
/// the largest violated half-plane otherwise.
type Excess = fn(&[f64]) -> f64;

fn square_excess(u: &[f64]) -> f64 {
    (u[1].abs() - u[0]).max(u[1].abs() - (2.0 - u[0])).max(0.0)
}

fn segment_excess(u: &[f64]) -> f64 {
    u[1].abs().max(-u[0]).max(u[0] - 2.0).max(0.0)
}

fn vertical_excess(u: &[f64]) -> f64 {
    (u[0] - 1.0).abs().max(u[1].abs() - 1.0)
}

fn centre_excess(u: &[f64]) -> f64 {
    (u[0] - 1.0).abs().max(u[1].abs())
}

struct Classified {
    points: usize,
    accepted: usize,
    misclassified: Vec<Vec<f64>>,
}

/// Classifies the lattice with the solution-set predicate. With `cell`
/// set, accepted points may sit up to one lattice spacing off the target;
/// points on the target must always be accepted.
fn classify(desc: &SolutionSetDescription, excess: Excess, bx: &SampleBox, grid: usize, cell: bool) -> Result<Classified, String> {
    let h = bx.0.iter().map(|(lo, hi)| (hi - lo) / (grid - 1) as f64).fold(0.0, f64::max);
    let mut out = Classified { points: 0, accepted: 0, misclassified: Vec::new() };
    for p in lattice_points(bx, grid).map_err(err)? {
        let got = desc.contains(&p, 1e-7).map_err(err)?;
        let e = excess(&p);
        let inside = e <= 1e-9;
        let bad = if cell { (got && e > h * (1.0 + 1e-9)) || (!got && inside) } else { got != inside };
        out.points += 1;
        out.accepted += usize::from(got);
        if bad {
            out.misclassified.push(p);
        }
    }
    Ok(out)
}

fn region_matches(desc: &SolutionSetDescription, excess: Excess, cell: bool) -> Result<String, String> {
    let c = classify(desc, excess, &plane(), 601, cell)?;
    ensure(c.misclassified.is_empty() && c.accepted > 0, || {
        format!("{} misclassified of {}, first {:?}", c.misclassified.len(), c.points, &c.misclassified[..c.misclassified.len().min(3)])
    })?;
    Ok(format!("{} of {} accepted", c.accepted, c.points))
}

fn certify(prob: &ProblemInstance, solution: &[f64], duals: &[&[f64]]) -> Result<SolutionSetDescription, String> {
    let cert = Certificate::from_rows(solution, duals);
    for theorem in [None, Some(Theorem::General)] {
        let rep = check_certificate(prob, &cert, theorem, 1e-9).map_err(err)?;
        ensure(rep.verdict, || format!("{theorem:?} checker rejects: {:?}", rep.residuals))?;
    }
    SolutionSetDescription::new(prob.clone(), cert, 1e-9).map_err(err)
}

fn solved_value(prob: &ProblemInstance, expected: f64) -> Result<f64, String> {
    let sol = solve_subgradient(prob, &SolverConfig::default()).map_err(err)?;
    ensure((sol.value - expected).abs() <= 1e-4, || format!("solver value {} vs {expected}", sol.value))?;
    Ok(sol.value)
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:.1?}, limit {limit:?}", start.elapsed()))
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let prob = planar(GroundNorm::Max, PsiGenerator::sum());
    let v = solved_value(&prob, 2.0)?;
    let desc = certify(&prob, &[1.0, 0.0], &[&[1.0, 0.0], &[-1.0, 0.0]])?;
    let r = region_matches(&desc, square_excess, false)?;
    within(Duration::from_secs(5), t)?;
    Ok(format!("value {v}; region exact, {r}"))
}

fn criterion_2() -> Outcome {
    let mut notes = Vec::new();
    for (label, g) in [("p=1", GroundNorm::Sum), ("p=2", GroundNorm::Euclidean), ("p=3", GroundNorm::P(3.0))] {
        let t = Instant::now();
        let prob = planar(g, PsiGenerator::sum());
        let desc = certify(&prob, &[1.0, 0.0], &[&[1.0, 0.0], &[-1.0, 0.0]])?;
        let r = region_matches(&desc, segment_excess, false).map_err(|e| format!("{label}: {e}"))?;
        within(Duration::from_secs(5), t)?;
        notes.push(format!("{label} {r}"));
    }
    Ok(notes.join("; "))
}

fn criterion_3() -> Outcome {
    let half: &[&[f64]] = &[&[0.5, 0.0], &[-0.5, 0.0]];
    let linf = planar(GroundNorm::Max, PsiGenerator::max());
    let v = solved_value(&linf, 1.0)?;
    let r1 = region_matches(&certify(&linf, &[1.0, 0.0], half)?, vertical_excess, true)?;
    let l2 = planar(GroundNorm::Euclidean, PsiGenerator::max());
    let r2 = region_matches(&certify(&l2, &[1.0, 0.0], half)?, centre_excess, true)?;
    Ok(format!("value {v}; max ground {r1}; Euclidean ground {r2}"))
}

fn criterion_4() -> Outcome {
    let h = 0.5f64.sqrt();
    let duals: &[&[f64]] = &[&[h, 0.0], &[-h, 0.0]];
    let psi = PsiGenerator::P(2.0);
    let r1 = region_matches(&certify(&planar(GroundNorm::Max, psi.clone()), &[1.0, 0.0], duals)?, vertical_excess, true)?;
    let r2 = region_matches(&certify(&planar(GroundNorm::Euclidean, psi), &[1.0, 0.0], duals)?, centre_excess, true)?;
    Ok(format!("max ground {r1}; Euclidean ground {r2}"))
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut r = rng(501);
    let mut worst = 0.0f64;
    for p in [1.0, 1.5, 2.0, f64::INFINITY] {
        // psi_p(1/2, 1/2) = 2^(1/p - 1).
        let mid_psi = if p.is_infinite() { 0.5 } else { 2f64.powf(1.0 / p - 1.0) };
        for k in 0..100 {
            let g = common::pick(&mut r, &grounds());
            let d = r.random_range(1..=4);
            let prob = instance_with(&mut r, d, 2, g, PsiGenerator::P(p));
            let (v1, v2) = (&prob.anchors()[0], &prob.anchors()[1]);
            let expected = g.norm(v1.sub(v2).unwrap().as_slice()) * mid_psi;
            let sol = solve_subgradient(&prob, &SolverConfig::default()).map_err(err)?;
            let gap = (sol.value - expected).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-5, || format!("p = {p}, pair {k}: solver {} vs {expected}", sol.value))?;
            let mid = v1.add(v2).unwrap().scale(0.5);
            let rec = recover_certificate(&prob, &mid, DEFAULT_RECOVERY_TOL).map_err(err)?;
            ensure(rec.is_certified(), || format!("p = {p}, pair {k}: midpoint not certified: {rec:?}"))?;
        }
    }
    within(Duration::from_secs(30), t)?;
    Ok(format!("400 pairs, worst value error {worst:.2e}, all midpoints certified"))
}

fn criterion_6() -> Outcome {
    let mut r = rng(601);
    let mut worst = f64::INFINITY;
    for _ in 0..100_000 {
        let norm = ProductNorm::new(common::pick(&mut r, &grounds()), common::pick(&mut r, &generators()));
        let (n, d) = (r.random_range(2..=5), r.random_range(1..=4));
        let xs = product_vector(&mut r, n, d, 3.0);
        let x = product_vector(&mut r, n, d, 3.0);
        let gap = norm.holder_gap(&xs, &x, 400).map_err(err)?;
        worst = worst.min(gap);
        ensure(gap >= -1e-12, || format!("holder gap {gap:e} for {norm:?}"))?;
    }

    let (mut equal, mut unequal) = (0usize, 0usize);
    for k in 0..10_000 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let norm = ProductNorm::new(g, psi.clone());
        let (n, d) = (r.random_range(2..=4), r.random_range(1..=3));
        let x = product_vector(&mut r, n, d, 3.0);
        let xs = if k % 2 == 0 {
            // Engineered: the subgradient duals at u = 0 of anchors -x_i are
            // aligned with x by construction.
            let anchors: Vec<Vector> = x.blocks().iter().map(|b| b.scale(-1.0)).collect();
            match ProblemInstance::new(anchors, norm.clone()) {
                Ok(p) => normmin::ProductVector::new(
                    p.subgradient_duals(&vec![0.0; d]).map_err(err)?.iter().map(|v| Vector::from_slice(v)).collect(),
                )
                .map_err(err)?,
                Err(_) => continue,
            }
        } else {
            product_vector(&mut r, n, d, 3.0)
        };
        match norm.equality_case_check(&xs, &x, 1e-9) {
            Ok(rep) if rep.equality_holds => equal += 1,
            Ok(_) => unequal += 1,
            Err(e) => return Err(format!("pair {k} ({norm:?}): {e}")),
        }
    }
    ensure(equal > 1000 && unequal > 1000, || format!("pairs too one-sided: {equal} equal, {unequal} not"))?;
    Ok(format!("min holder gap {worst:.2e} over 1e5 triples; 0 disagreements ({equal} equality, {unequal} strict)"))
}

fn psi_p_direct(p: f64, t: &[f64]) -> f64 {
    if p.is_infinite() {
        t.iter().copied().fold(0.0, f64::max)
    } else {
        t.iter().map(|c| c.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn criterion_7() -> Outcome {
    let mut r = rng(701);
    for _ in 0..100_000 {
        let psi = common::pick(&mut r, &generators());
        let n = r.random_range(2..=5);
        let t = simplex(&mut r, n);
        let v = psi.eval(&t).map_err(err)?;
        let m = t.weights().iter().copied().fold(0.0, f64::max);
        ensure(m <= v + 1e-15 && v <= 1.0 + 1e-15, || format!("{psi:?} at {:?} = {v}", t.weights()))?;
    }

    ensure(PsiGenerator::sum().conjugate(0) == PsiGenerator::max(), || "psi_1 conjugate is not psi_inf".into())?;
    ensure(PsiGenerator::max().conjugate(0) == PsiGenerator::sum(), || "psi_inf conjugate is not psi_1".into())?;
    let mut closed = 0.0f64;
    for p in [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, f64::INFINITY] {
        let q = match p {
            1.0 => f64::INFINITY,
            p if p.is_infinite() => 1.0,
            p => p / (p - 1.0),
        };
        for _ in 0..2_000 {
            let n = r.random_range(2..=5);
            let s = simplex(&mut r, n);
            let c = PsiGenerator::P(p).conjugate_eval(&s, 0).map_err(err)?;
            let e = (c - psi_p_direct(q, s.weights())).abs();
            closed = closed.max(e);
            ensure(e <= 1e-12, || format!("p = {p}: conjugate {c} vs psi_q {}", psi_p_direct(q, s.weights())))?;
        }
    }

    let mut lattice = 0.0f64;
    for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
        for n in [2usize, 3] {
            let black = PsiGenerator::tabulated(n, true, "copy", move |t| psi_p_direct(p, t)).map_err(err)?;
            for _ in 0..20 {
                let s = simplex(&mut r, n);
                let exact = PsiGenerator::P(p).conjugate_eval(&s, 0).map_err(err)?;
                let found = conjugate_search(&black, s.weights(), 400).map_err(err)?.value;
                lattice = lattice.max((exact - found).abs());
                ensure((exact - found).abs() <= 5e-4, || format!("p = {p}, n = {n}: search {found} vs {exact}"))?;
            }
        }
    }
    Ok(format!("bounds on 1e5 samples; closed-form error {closed:.1e}; lattice error {lattice:.1e}"))
}

/// Uniform point of the box `[-r, r]^d`, pulled radially into the ground
/// ball of radius `r`.
fn in_ball(rng: &mut impl Rng, g: GroundNorm, d: usize, r: f64) -> Vec<f64> {
    let mut u = vec_in(rng, d, r);
    let n = g.norm(&u);
    if n > r {
        u.iter_mut().for_each(|c| *c *= r / n);
    }
    u
}

fn never_beaten(rng: &mut impl Rng, prob: &ProblemInstance, ubar: &[f64]) -> Result<(), String> {
    let fbar = prob.objective(ubar);
    let radius = prob.solve_bound().radius;
    for _ in 0..10_000 {
        let u = in_ball(rng, prob.norm().ground, prob.dim(), radius);
        let f = prob.objective(&u);
        ensure(f >= fbar - 1e-7, || format!("f({u:?}) = {f} < f(ubar) = {fbar}"))?;
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let mut r = rng(801);
    let mut bundled = 0;
    for ex in examples() {
        if let ExampleKind::Certified { certificate, .. } = &ex.kind {
            let rep = check_certificate(&ex.instance, certificate, None, 1e-9).map_err(err)?;
            ensure(rep.verdict, || format!("{} certificate does not verify", ex.id))?;
            never_beaten(&mut r, &ex.instance, certificate.solution.as_slice()).map_err(|e| format!("{}: {e}", ex.id))?;
            bundled += 1;
        }
    }
    let mut random = 0;
    for k in 0..50 {
        let g = common::pick(&mut r, &smooth_grounds());
        let psi = common::pick(&mut r, &[PsiGenerator::P(1.5), PsiGenerator::P(2.0), PsiGenerator::P(3.0)]);
        let prob = instance(&mut r, 3, 5, g, psi);
        let sol = solve_subgradient(&prob, &SolverConfig::default()).map_err(err)?;
        if let Some(cert) = recover_certificate(&prob, &sol.point, DEFAULT_RECOVERY_TOL).map_err(err)?.certificate() {
            never_beaten(&mut r, &prob, cert.solution.as_slice()).map_err(|e| format!("instance {k}: {e}"))?;
            random += 1;
        }
    }
    ensure(random >= 45, || format!("only {random} of 50 smooth instances produced a verified certificate"))?;
    Ok(format!("{bundled} bundled and {random} random certificates, 1e4 probes each"))
}

fn criterion_9() -> Outcome {
    let mut r = rng(901);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let psi = generators()[k % 5].clone();
        let prob = instance(&mut r, 4, 5, GroundNorm::Euclidean, psi);
        let sol = solve_subgradient(&prob, &SolverConfig::default()).map_err(err)?;
        let dh = hull_distance_inf(prob.anchors(), sol.point.as_slice());
        worst = worst.max(dh);
        ensure(dh <= 1e-6, || format!("instance {k}: solution {:?} is {dh:e} from the hull", sol.point))?;
    }

    let prob = planar(GroundNorm::Max, PsiGenerator::sum());
    let desc = certify(&prob, &[1.0, 0.0], &[&[1.0, 0.0], &[-1.0, 0.0]])?;
    let accepted = sample_solution_region(&desc, &plane(), 601, 1e-7).map_err(err)?;
    let (far, w) = accepted
        .iter()
        .map(|p| (hull_distance_inf(prob.anchors(), p.as_slice()), p))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or("example 5.3-1 accepts no lattice point")?;
    ensure(far > 0.5, || format!("farthest accepted point {w:?} is only {far} from the hull"))?;
    ensure(desc.contains(w.as_slice(), 1e-9).map_err(err)?, || format!("{w:?} fails the predicate at 1e-9"))?;
    let fw = prob.objective(w.as_slice());
    ensure((fw - 2.0).abs() <= 1e-12, || format!("f({w:?}) = {fw}, expected the optimal value 2"))?;
    let stated = [2.5, 2.4];
    Ok(format!(
        "worst hull distance {worst:.1e}; example 5.3-1 accepts {w:?} at distance {far} from the hull (f = {fw}); \
         (2.5, 2.4) has f = {} and is not a solution",
        prob.objective(&stated)
    ))
}

fn criterion_10() -> Outcome {
    let t = Instant::now();
    let mut r = rng(1001);
    let mut problems: Vec<(String, ProblemInstance)> = examples().into_iter().map(|e| (e.id, e.instance)).collect();
    for k in 0..50 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let n = r.random_range(2..=5);
        problems.push((format!("random {k}"), instance_with(&mut r, 2, n, g, psi)));
    }
    let mut worst = 0.0f64;
    for (id, prob) in &problems {
        let sol = solve_subgradient(prob, &SolverConfig::default()).map_err(err)?;
        let o = grid_oracle(prob, 601).map_err(err)?;
        let bound = o.spacing * o.lipschitz + 1e-4;
        let gap = (sol.value - o.value).abs();
        worst = worst.max(gap / bound);
        ensure(gap <= bound, || format!("{id}: solver {} oracle {} bound {bound}", sol.value, o.value))?;
    }
    within(Duration::from_secs(120), t)?;
    Ok(format!("{} instances, worst gap {worst:.3} of the allowed bound", problems.len()))
}

fn criterion_11() -> Outcome {
    let mut r = rng(1101);
    let mut slack = f64::INFINITY;
    for k in 0..1_000 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let prob = instance(&mut r, 4, 5, g, psi);
        let d = prob.dim();
        for j in 0..100 {
            // Every tenth probe sits on an anchor, where f is not smooth.
            let u = if j % 10 == 0 { prob.anchors()[j / 10 % prob.n()].as_slice().to_vec() } else { common::rough_vec(&mut r, d, 4.0) };
            let w = vec_in(&mut r, d, 4.0);
            let sg = prob.objective_subgradient(&Vector::from_slice(&u)).map_err(err)?;
            let lin: f64 = sg.as_slice().iter().zip(w.iter().zip(&u)).map(|(s, (a, b))| s * (a - b)).sum();
            let s = prob.objective(&w) - prob.objective(&u) - lin;
            slack = slack.min(s);
            ensure(s >= -1e-9, || format!("instance {k}: slack {s:e} at u = {u:?}, w = {w:?}"))?;
        }
    }

    let mut fd = 0.0f64;
    for k in 0..1_000 {
        let g = common::pick(&mut r, &smooth_grounds());
        let psi = common::pick(&mut r, &[PsiGenerator::P(1.5), PsiGenerator::P(2.0), PsiGenerator::P(3.0)]);
        let prob = instance(&mut r, 4, 5, g, psi);
        let u = vec_in(&mut r, prob.dim(), 4.0);
        if prob.distances(&u).iter().any(|&b| b < 1e-2) {
            continue;
        }
        let sg = prob.objective_subgradient(&Vector::from_slice(&u)).map_err(err)?;
        let gmax = sg.max_abs().max(1e-3);
        for i in 0..u.len() {
            let h = 1e-6;
            let (mut a, mut b) = (u.clone(), u.clone());
            a[i] += h;
            b[i] -= h;
            let est = (prob.objective(&a) - prob.objective(&b)) / (2.0 * h);
            let rel = (est - sg[i]).abs() / gmax;
            fd = fd.max(rel);
            ensure(rel < 1e-5, || format!("instance {k}: coordinate {i} finite difference {est} vs {}", sg[i]))?;
        }
    }
    Ok(format!("min slack {slack:.1e} over 1e5 probes; worst finite-difference error {fd:.1e}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 square solution set, max ground", criterion_1),
        ("2 segment solution sets, p = 1, 2, 3", criterion_2),
        ("3 Chebyshev centres", criterion_3),
        ("4 p-Fermat-Torricelli certificates", criterion_4),
        ("5 two-anchor value law", criterion_5),
        ("6 Holder inequality and equality cases", criterion_6),
        ("7 generator bounds and conjugates", criterion_7),
        ("8 certificate soundness", criterion_8),
        ("9 convex hull containment", criterion_9),
        ("10 solver and grid oracle agree", criterion_10),
        ("11 subgradient validity", criterion_11),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({:.2?}): {detail}", t.elapsed()),
            Err(why) => {
                println!("FAIL criterion {name} ({:.2?}): {why}", t.elapsed());
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
