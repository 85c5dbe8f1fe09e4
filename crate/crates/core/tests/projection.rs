mod common;

use adactl_core::policy::{block_norm_sum, project};
use adactl_core::{FeasibleSet, PolicyParams};
use common::*;
use rand::Rng;

#[test]
fn agrees_with_bisection_oracle() {
    let mut r = rng(21);
    for _ in 0..1000 {
        let (p, du, dx) = (r.gen_range(1..=8), r.gen_range(1..=2), r.gen_range(1..=3));
        let kappa = r.gen_range(0.1..5.0);
        let m = random_params(&mut r, p, du, dx, 4.0);
        let set = FeasibleSet::new(kappa, p).unwrap();
        let got = project(&m, &set);
        assert!(dist(&got, &bisection_project(&m, kappa)) < 1e-9);
        assert!(block_norm_sum(&got) <= kappa + 1e-9);
    }
}

/// Exact projection for p = 3 scalar blocks by enumerating active sets.
fn enumerate_p3(v: [f64; 3], kappa: f64) -> [f64; 3] {
    let n = v.map(f64::abs);
    if n.iter().sum::<f64>() <= kappa {
        return v;
    }
    for mask in 1u32..8 {
        let active: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let tau = (active.iter().map(|&i| n[i]).sum::<f64>() - kappa) / active.len() as f64;
        if tau < 0.0 {
            continue;
        }
        let ok = (0..3).all(|i| if active.contains(&i) { n[i] > tau } else { n[i] <= tau });
        if ok {
            return core::array::from_fn(|i| if active.contains(&i) { v[i].signum() * (n[i] - tau) } else { 0.0 });
        }
    }
    unreachable!()
}

#[test]
fn agrees_with_active_set_enumeration() {
    let mut r = rng(22);
    for _ in 0..2000 {
        let v = [r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)];
        let kappa = r.gen_range(0.1..6.0);
        let got = project(&PolicyParams::from_scalars(&v), &FeasibleSet::new(kappa, 3).unwrap());
        let want = enumerate_p3(v, kappa);
        for i in 0..3 {
            assert!((got.as_slice()[i] - want[i]).abs() < 1e-12, "{v:?} {kappa}");
        }
    }
}

#[test]
fn closer_than_any_feasible_point() {
    let mut r = rng(23);
    for _ in 0..200 {
        let (p, du, dx) = (r.gen_range(1..=5), 2, 2);
        let kappa = r.gen_range(0.5..3.0);
        let set = FeasibleSet::new(kappa, p).unwrap();
        let y = random_params(&mut r, p, du, dx, 3.0);
        let py = project(&y, &set);
        let d = dist(&y, &py);
        let resid = y.sub(&py);
        for _ in 0..50 {
            let z = random_feasible(&mut r, p, du, dx, kappa);
            assert!(d <= dist(&y, &z) + 1e-12);
            // variational inequality ⟨y − Πy, z − Πy⟩ ≤ 0
            assert!(resid.dot(&z.sub(&py)) <= 1e-9);
        }
    }
}

#[test]
fn idempotent_nonexpansive_bounded_diameter() {
    let mut r = rng(24);
    for _ in 0..500 {
        let (p, du, dx) = (r.gen_range(1..=6), r.gen_range(1..=2), r.gen_range(1..=2));
        let kappa = r.gen_range(0.1..4.0);
        let set = FeasibleSet::new(kappa, p).unwrap();
        let a = random_params(&mut r, p, du, dx, 5.0);
        let b = random_params(&mut r, p, du, dx, 5.0);
        let (pa, pb) = (project(&a, &set), project(&b, &set));
        assert!(dist(&project(&pa, &set), &pa) <= 1e-12 * (1.0 + pa.frobenius()));
        assert!(dist(&pa, &pb) <= dist(&a, &b) + 1e-12);
        assert!(dist(&pa, &pb) <= 2.0 * kappa + 1e-9);
    }
}

#[test]
fn feasible_points_are_fixed() {
    let mut r = rng(25);
    for _ in 0..200 {
        let m = random_feasible(&mut r, 4, 1, 2, 2.0);
        assert_eq!(project(&m, &FeasibleSet::new(2.0, 4).unwrap()), m);
    }
}
