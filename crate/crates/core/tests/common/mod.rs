#![allow(dead_code)]

use normmin::lp::{LpBuilder, Sense};
use normmin::{GroundNorm, ProblemInstance, ProductNorm, ProductVector, PsiGenerator, SimplexPoint, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grounds() -> Vec<GroundNorm> {
    vec![GroundNorm::Sum, GroundNorm::Euclidean, GroundNorm::Max, GroundNorm::P(1.5), GroundNorm::P(3.0)]
}

pub fn smooth_grounds() -> Vec<GroundNorm> {
    vec![GroundNorm::Euclidean, GroundNorm::P(1.5), GroundNorm::P(3.0)]
}

pub fn generators() -> Vec<PsiGenerator> {
    vec![PsiGenerator::sum(), PsiGenerator::P(1.5), PsiGenerator::P(2.0), PsiGenerator::P(3.0), PsiGenerator::max()]
}

pub fn pick<T: Clone>(rng: &mut impl Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())].clone()
}

pub fn vec_in(rng: &mut impl Rng, d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-r..r)).collect()
}

/// Random vector with occasional exact zeros and ties, to reach the
/// nonsmooth parts of polyhedral norms.
pub fn rough_vec(rng: &mut impl Rng, d: usize, r: f64) -> Vec<f64> {
    let mut v = vec_in(rng, d, r);
    if d > 1 && rng.random_bool(0.2) {
        let k = rng.random_range(0..d);
        v[k] = 0.0;
    }
    if d > 1 && rng.random_bool(0.2) {
        let (a, b) = (rng.random_range(0..d), rng.random_range(0..d));
        v[b] = if rng.random_bool(0.5) { v[a] } else { -v[a] };
    }
    v
}

pub fn simplex(rng: &mut impl Rng, n: usize) -> SimplexPoint {
    let mut w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    if rng.random_bool(0.1) {
        w[rng.random_range(0..n)] = 0.0;
    }
    let s: f64 = w.iter().sum();
    let w = if s > 0.0 { w.iter().map(|x| x / s).collect() } else { SimplexPoint::vertex(n, 0).weights().to_vec() };
    SimplexPoint::new(w).unwrap()
}

pub fn product_vector(rng: &mut impl Rng, n: usize, d: usize, r: f64) -> ProductVector {
    ProductVector::new((0..n).map(|_| Vector::from_slice(&rough_vec(rng, d, r))).collect()).unwrap()
}

/// Random instance with `d` and `n` drawn from `2..=max`.
pub fn instance(rng: &mut impl Rng, d_max: usize, n_max: usize, ground: GroundNorm, psi: PsiGenerator) -> ProblemInstance {
    let d = rng.random_range(1..=d_max);
    let n = rng.random_range(2..=n_max);
    instance_with(rng, d, n, ground, psi)
}

pub fn instance_with(rng: &mut impl Rng, d: usize, n: usize, ground: GroundNorm, psi: PsiGenerator) -> ProblemInstance {
    loop {
        let anchors: Vec<Vector> = (0..n).map(|_| Vector::from_slice(&vec_in(rng, d, 3.0))).collect();
        if let Ok(p) = ProblemInstance::new(anchors, ProductNorm::new(ground, psi.clone())) {
            return p;
        }
    }
}

/// Max-norm distance from `u` to the convex hull of `anchors`, by LP.
pub fn hull_distance_inf(anchors: &[Vector], u: &[f64]) -> f64 {
    let mut lp = LpBuilder::new();
    let t = lp.add_var(1.0, false);
    let lam: Vec<usize> = anchors.iter().map(|_| lp.add_var(0.0, false)).collect();
    lp.add_row(lam.iter().map(|&j| (j, 1.0)).collect(), Sense::Eq, 1.0);
    for k in 0..u.len() {
        let mut row: Vec<(usize, f64)> = lam.iter().zip(anchors).map(|(&j, a)| (j, a[k])).collect();
        row.push((t, 1.0));
        lp.add_row(row.clone(), Sense::Ge, u[k]);
        let mut row: Vec<(usize, f64)> = lam.iter().zip(anchors).map(|(&j, a)| (j, -a[k])).collect();
        row.push((t, 1.0));
        lp.add_row(row, Sense::Ge, -u[k]);
    }
    lp.minimize().unwrap().expect("hull LP is feasible").objective
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
