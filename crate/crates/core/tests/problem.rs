mod common;

use common::{generators, grounds, instance, instance_with, rng, vec_in};
use normmin::solver::grid_oracle;
use rand::Rng;

#[test]
fn objective_is_coercive() {
    let mut r = rng(31);
    for g in grounds() {
        for psi in generators() {
            let prob = instance(&mut r, 3, 4, g, psi);
            let vmax = prob.anchors().iter().map(|v| g.norm(v.as_slice())).fold(0.0, f64::max);
            let radius = prob.solve_bound().radius;
            for _ in 0..10_000 / 25 {
                let u = vec_in(&mut r, prob.dim(), 1e4);
                assert!(prob.objective(&u) >= g.norm(&u) - vmax - 1e-9);
            }
            for _ in 0..20 {
                let dir = vec_in(&mut r, prob.dim(), 1.0);
                let nd = g.norm(&dir);
                if nd < 1e-3 {
                    continue;
                }
                let mut last = f64::NEG_INFINITY;
                for k in 1..=20 {
                    let t = radius * (1.0 + 0.5 * k as f64) / nd;
                    let f = prob.objective(&dir.iter().map(|c| t * c).collect::<Vec<_>>());
                    assert!(f > last, "{g:?}");
                    last = f;
                }
            }
        }
    }
}

#[test]
fn objective_is_midpoint_convex() {
    let mut r = rng(32);
    for g in grounds() {
        for psi in generators() {
            let prob = instance(&mut r, 4, 5, g, psi);
            for _ in 0..100_000 / 25 {
                let u = vec_in(&mut r, prob.dim(), 6.0);
                let w = vec_in(&mut r, prob.dim(), 6.0);
                let m: Vec<f64> = u.iter().zip(&w).map(|(a, b)| 0.5 * (a + b)).collect();
                let slack = 0.5 * (prob.objective(&u) + prob.objective(&w)) - prob.objective(&m);
                assert!(slack >= -1e-12, "{g:?}: {slack}");
            }
        }
    }
}

#[test]
fn grid_minimizers_stay_inside_the_solve_bound() {
    let mut r = rng(33);
    for k in 0..50 {
        let g = common::pick(&mut r, &grounds());
        let psi = common::pick(&mut r, &generators());
        let d = 1 + k % 2;
        let n = r.random_range(2..=5);
        let prob = instance_with(&mut r, d, n, g, psi);
        let radius = prob.solve_bound().radius;
        let o = grid_oracle(&prob, if d == 1 { 2001 } else { 201 }).unwrap();
        for u in &o.argmin {
            assert!(u.iter().all(|c| c.abs() < radius - 1e-9), "{g:?}: {u:?} at R = {radius}");
        }
    }
}
