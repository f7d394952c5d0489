mod common;

use common::{generators, grounds, instance, rng, vec_in};
use normmin::certificate::{check_certificate, check_general, recover_certificate};
use normmin::solver::solve_subgradient;
use normmin::{Certificate, ProblemInstance, ProductVector, SolverConfig, Theorem, Vector};
use rand::Rng;

fn solved_certificate(prob: &ProblemInstance) -> Option<Certificate> {
    let sol = solve_subgradient(prob, &SolverConfig::default()).unwrap();
    recover_certificate(prob, &sol.point, 1e-7).unwrap().certificate().cloned()
}

fn perturb(cert: &Certificate, block: usize, delta: &[f64]) -> Certificate {
    let mut rows: Vec<Vec<f64>> = cert.duals.blocks().iter().map(|b| b.as_slice().to_vec()).collect();
    for (c, e) in rows[block].iter_mut().zip(delta) {
        *c += e;
    }
    Certificate::new(cert.solution.clone(), ProductVector::new(rows.into_iter().map(Vector::new).collect::<Result<_, _>>().unwrap()).unwrap())
}

fn unit(rng: &mut impl Rng, d: usize, len: f64) -> Vec<f64> {
    loop {
        let v = vec_in(rng, d, 1.0);
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|c| len * c / n).collect();
        }
    }
}

#[test]
fn round_trip_on_every_builtin_combination() {
    let mut r = rng(41);
    let mut failures = Vec::new();
    for g in grounds() {
        for psi in generators() {
            for _ in 0..200 {
                let prob = instance(&mut r, 4, 5, g, psi.clone());
                let sol = solve_subgradient(&prob, &SolverConfig::default()).unwrap();
                match recover_certificate(&prob, &sol.point, 1e-7).unwrap().certificate() {
                    Some(cert) => {
                        let rep = check_certificate(&prob, cert, None, 1e-7).unwrap();
                        assert!(rep.verdict, "{g:?} {psi:?}: {:?}", rep.residuals);
                    }
                    None => failures.push(format!("{g:?} {psi:?} d = {} n = {}", prob.dim(), prob.n())),
                }
            }
        }
    }
    assert!(failures.is_empty(), "{} of 5000 not recovered: {failures:?}", failures.len());
}

#[test]
fn specialized_and_general_checkers_agree() {
    let mut r = rng(42);
    let mut checked = 0;
    let mut accepted = 0;
    while checked < 1_000 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let prob = instance(&mut r, 3, 4, g, psi);
        let Some(cert) = solved_certificate(&prob) else { continue };
        let d = prob.dim();
        let mut candidates = vec![cert.clone()];
        for _ in 0..3 {
            let block = r.random_range(0..prob.n());
            candidates.push(perturb(&cert, block, &unit(&mut r, d, 1e-2)));
        }
        candidates.push(Certificate::new(cert.solution.clone(), cert.duals.scale(1.05)));
        let moved: Vec<f64> = cert.solution.iter().map(|c| c + 0.05).collect();
        candidates.push(Certificate::new(Vector::new(moved).unwrap(), cert.duals.clone()));
        for c in candidates {
            let special = check_certificate(&prob, &c, None, 1e-9).unwrap();
            let general = check_general(&prob, &c, 1e-9).unwrap();
            assert_eq!(special.verdict, general.verdict, "{:?} {:?}\n{:?}\n{:?}", prob.norm(), c, special.residuals, general.residuals);
            accepted += usize::from(general.verdict);
            checked += 1;
        }
    }
    assert!(accepted >= 100, "only {accepted} valid certificates exercised");
}

#[test]
fn corrupted_blocks_are_detected() {
    let mut r = rng(43);
    let mut tried = 0;
    while tried < 500 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let prob = instance(&mut r, 3, 4, g, psi);
        let Some(cert) = solved_certificate(&prob) else { continue };
        if cert.duals.blocks().iter().all(|b| b.is_zero()) {
            continue;
        }
        let block = r.random_range(0..prob.n());
        let bad = perturb(&cert, block, &unit(&mut r, prob.dim(), 1e-3));
        let rep = check_certificate(&prob, &bad, None, 1e-9).unwrap();
        let worst = rep.residuals.values().copied().fold(0.0, f64::max);
        assert!(!rep.verdict || worst > 1e-4, "{:?}", rep.residuals);
        assert!(!rep.verdict);
        tried += 1;
    }
}

#[test]
fn theorem_overrides_follow_the_generator() {
    let mut r = rng(44);
    for psi in generators() {
        let prob = instance(&mut r, 2, 3, normmin::GroundNorm::Euclidean, psi.clone());
        let cert = solved_certificate(&prob).unwrap();
        for t in [Theorem::FermatTorricelli, Theorem::Chebyshev, Theorem::PFermat] {
            let res = check_certificate(&prob, &cert, Some(t), 1e-9);
            assert_eq!(res.is_ok(), Theorem::for_generator(&psi) == t, "{psi:?} {t:?}");
        }
        assert!(check_certificate(&prob, &cert, Some(Theorem::General), 1e-9).unwrap().verdict);
    }
}
