mod common;

use common::{generators, grounds, product_vector, rng};
use normmin::{GroundNorm, ProductNorm, ProductVector, PsiGenerator};
use proptest::prelude::*;
use rand::Rng;

fn add(x: &ProductVector, y: &ProductVector) -> ProductVector {
    let rows: Vec<Vec<f64>> = x.blocks().iter().zip(y.blocks()).map(|(a, b)| a.iter().zip(b.iter()).map(|(p, q)| p + q).collect()).collect();
    ProductVector::from_rows(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>())
}

#[test]
fn sandwich_between_extreme_generators() {
    let mut r = rng(21);
    for _ in 0..100_000 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let (n, d) = (r.random_range(2..=5), r.random_range(1..=4));
        let x = product_vector(&mut r, n, d, 5.0);
        let v = ProductNorm::new(g, psi).eval(&x).unwrap();
        let lo = ProductNorm::new(g, PsiGenerator::max()).eval(&x).unwrap();
        let hi = ProductNorm::new(g, PsiGenerator::sum()).eval(&x).unwrap();
        assert!(lo <= v + 1e-12 && v <= hi + 1e-12, "{lo} {v} {hi}");
    }
}

#[test]
fn product_norm_axioms() {
    let mut r = rng(22);
    for _ in 0..100_000 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let (n, d) = (r.random_range(2..=5), r.random_range(1..=4));
        let norm = ProductNorm::new(g, psi);
        let x = product_vector(&mut r, n, d, 5.0);
        let y = product_vector(&mut r, n, d, 5.0);
        let a: f64 = r.random_range(-4.0..4.0);
        let nx = norm.eval(&x).unwrap();
        assert!((norm.eval(&x.scale(a)).unwrap() - a.abs() * nx).abs() <= 1e-12 * (a.abs() * nx).max(1.0));
        assert!(norm.eval(&add(&x, &y)).unwrap() <= nx + norm.eval(&y).unwrap() + 1e-12);
    }
}

#[test]
fn dual_of_a_p_product_is_the_conjugate_product() {
    let mut r = rng(23);
    for _ in 0..10_000 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let (n, d) = (r.random_range(2..=5), r.random_range(1..=4));
        let xs = product_vector(&mut r, n, d, 5.0);
        let q = match psi.exponent().unwrap() {
            1.0 => f64::INFINITY,
            p if p.is_infinite() => 1.0,
            p => p / (p - 1.0),
        };
        let explicit = ProductNorm::new(g.dual(), PsiGenerator::P(q)).eval(&xs).unwrap();
        let dual = ProductNorm::new(g, psi).dual_eval(&xs, 400).unwrap();
        assert!((explicit - dual).abs() <= 1e-12 * explicit.max(1.0), "{g:?} q = {q}");
    }
}

#[test]
fn strict_convexity_witness() {
    let norm = ProductNorm::new(GroundNorm::P(2.0), PsiGenerator::P(2.0));
    let mut r = rng(24);
    for _ in 0..10_000 {
        let (n, d) = (r.random_range(2..=4), r.random_range(1..=3));
        let x = product_vector(&mut r, n, d, 1.0);
        let y = product_vector(&mut r, n, d, 1.0);
        let (nx, ny) = (norm.eval(&x).unwrap(), norm.eval(&y).unwrap());
        if nx < 1e-6 || ny < 1e-6 {
            continue;
        }
        let (x, y) = (x.scale(1.0 / nx), y.scale(1.0 / ny));
        let diff = norm.eval(&add(&x, &y.scale(-1.0))).unwrap();
        if diff < 1e-6 {
            continue;
        }
        assert!(norm.eval(&add(&x, &y)).unwrap() < 2.0 - 1e-9);
    }

    // Sum generator: unit vectors in different blocks add without loss.
    let sum = ProductNorm::new(GroundNorm::P(2.0), PsiGenerator::sum());
    let x = ProductVector::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let y = ProductVector::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
    assert_eq!(sum.eval(&x).unwrap(), 1.0);
    assert_eq!(sum.eval(&y).unwrap(), 1.0);
    assert_eq!(sum.eval(&add(&x, &y)).unwrap(), 2.0);
}

fn ground_strategy() -> impl Strategy<Value = GroundNorm> {
    prop_oneof![Just(GroundNorm::Sum), Just(GroundNorm::Euclidean), Just(GroundNorm::Max), (1.1f64..6.0).prop_map(GroundNorm::P)]
}

fn generator_strategy() -> impl Strategy<Value = PsiGenerator> {
    prop_oneof![Just(PsiGenerator::sum()), Just(PsiGenerator::max()), (1.05f64..8.0).prop_map(PsiGenerator::P)]
}

fn blocks(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n)
}

proptest! {
    #[test]
    fn holder_inequality_holds(
        g in ground_strategy(),
        psi in generator_strategy(),
        (xs, x) in (2usize..=4, 1usize..=3).prop_flat_map(|(n, d)| (blocks(n, d), blocks(n, d))),
    ) {
        let norm = ProductNorm::new(g, psi);
        let as_pv = |rows: &[Vec<f64>]| ProductVector::from_rows(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let (xs, x) = (as_pv(&xs), as_pv(&x));
        let pair: f64 = xs.blocks().iter().zip(x.blocks()).map(|(a, b)| a.dot(b).unwrap()).sum();
        let bound = norm.dual_eval(&xs, 400).unwrap() * norm.eval(&x).unwrap();
        prop_assert!(pair <= bound + 1e-10 * bound.max(1.0));
        prop_assert!(norm.holder_gap(&xs, &x, 400).unwrap() >= -1e-10);
    }
}
