mod common;

use common::{generators, rng, simplex};
use normmin::psi::conjugate_search;
use normmin::PsiGenerator;
use rand::Rng;

#[test]
fn symmetric_generators_are_smallest_at_the_barycentre() {
    let mut r = rng(11);
    for g in generators() {
        for n in 2..=5 {
            let (_, low) = g.min_symmetric(n).unwrap();
            for _ in 0..10_000 / 4 {
                let t = simplex(&mut r, n);
                assert!(low <= g.eval(&t).unwrap() + 1e-12, "{g:?} n = {n}");
            }
        }
    }
}

#[test]
fn extreme_generators_are_mutually_conjugate() {
    let mut r = rng(12);
    for _ in 0..10_000 {
        let n = r.random_range(2..=6);
        let s = simplex(&mut r, n);
        let max = s.weights().iter().copied().fold(0.0, f64::max);
        assert!((PsiGenerator::sum().conjugate_eval(&s, 0).unwrap() - max).abs() <= 1e-12);
        assert!((PsiGenerator::max().conjugate_eval(&s, 0).unwrap() - 1.0).abs() <= 1e-12);
        assert_eq!(PsiGenerator::sum().conjugate(0), PsiGenerator::max());
        assert_eq!(PsiGenerator::max().conjugate(0), PsiGenerator::sum());
    }
}

#[test]
fn closed_form_conjugates_match_the_lattice_search() {
    let mut r = rng(13);
    for p in [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY] {
        let g = PsiGenerator::P(p);
        for n in [2usize, 3] {
            // The search treats the generator as a black box.
            let black = PsiGenerator::tabulated(n, true, "copy", move |t| {
                if p.is_infinite() {
                    t.iter().copied().fold(0.0, f64::max)
                } else {
                    t.iter().map(|c| c.powf(p)).sum::<f64>().powf(1.0 / p)
                }
            })
            .unwrap();
            for _ in 0..40 {
                let s = simplex(&mut r, n);
                let closed = g.conjugate_eval(&s, 0).unwrap();
                let search = conjugate_search(&black, s.weights(), 400).unwrap();
                assert!((closed - search.value).abs() <= 5e-4, "p = {p}, n = {n}: {closed} vs {}", search.value);
                assert!(search.value <= closed + 1e-12);
            }
        }
    }
}

#[test]
fn conjugate_of_a_valid_table_passes_validation() {
    let gen = PsiGenerator::table(vec![1.0, 0.8, 0.7, 0.8, 1.0]).unwrap();
    assert!(gen.validate(2, 2_000, 1e-9).unwrap().passed());
    let conj = gen.conjugate(400);
    let rep = conj.validate(2, 500, 1e-6).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures());
    assert_eq!(rep.status, gen.validate(2, 500, 1e-9).unwrap().status);
}

#[test]
fn builtins_pass_validation_at_every_small_arity() {
    for g in generators() {
        for n in 2..=4 {
            assert!(g.validate(n, 1_000, 1e-12).unwrap().passed(), "{g:?} n = {n}");
        }
    }
}
