#![allow(dead_code)]

use adactl_core::{Matrix, PolicyParams, SystemModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-scale..scale)).collect()
}

/// Random matrix rescaled so its operator norm is `target`.
pub fn matrix_with_norm(r: &mut ChaCha8Rng, rows: usize, cols: usize, target: f64) -> Matrix {
    let m = Matrix::from_vec(rows, cols, uniform_vec(r, rows * cols, 1.0)).unwrap();
    let n = m.operator_norm();
    if n == 0.0 {
        Matrix::zeros(rows, cols)
    } else {
        m.scaled(target / n)
    }
}

/// Random plant with `||A|| ≤ 1 − δ`.
pub fn random_model(r: &mut ChaCha8Rng, dx: usize, du: usize, w_bound: f64) -> SystemModel {
    let delta = r.gen_range(0.05..0.9);
    let norm_a = r.gen_range(0.0..=1.0 - delta);
    let a = matrix_with_norm(r, dx, dx, norm_a);
    let b = Matrix::from_vec(dx, du, uniform_vec(r, dx * du, 1.5)).unwrap();
    let kb = b.frobenius();
    SystemModel::new(a, b, None, delta, kb, w_bound).unwrap()
}

/// Disturbances with norm at most `w_bound`.
pub fn random_disturbances(r: &mut ChaCha8Rng, t: usize, dx: usize, w_bound: f64) -> Vec<Vec<f64>> {
    (0..t)
        .map(|_| {
            let mut v = uniform_vec(r, dx, 1.0);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = r.gen_range(0.0..=w_bound) / n.max(1e-300);
            v.iter_mut().for_each(|x| *x *= s);
            v
        })
        .collect()
}

pub fn random_params(r: &mut ChaCha8Rng, p: usize, du: usize, dx: usize, scale: f64) -> PolicyParams {
    PolicyParams::from_flat(p, du, dx, uniform_vec(r, p * du * dx, scale)).unwrap()
}

/// A random point of `{Σ_j ||M^[j]|| ≤ κ}`.
pub fn random_feasible(r: &mut ChaCha8Rng, p: usize, du: usize, dx: usize, kappa: f64) -> PolicyParams {
    let m = random_params(r, p, du, dx, 1.0);
    let s: f64 = m.block_norms().iter().sum();
    let radius = kappa * r.gen_range(0.0..=1.0_f64);
    if s == 0.0 { m } else { m.scaled(radius / s) }
}

/// Naive stationary replay: returns `(x_1..x_{T+1}, u_1..u_T)` under fixed `m`.
pub fn naive_replay(model: &SystemModel, m: &PolicyParams, w: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (dx, du) = (model.dx(), model.du());
    let mut xs = vec![vec![0.0; dx]];
    let mut us = Vec::new();
    for t in 1..=w.len() {
        let mut u = vec![0.0; du];
        for j in 1..=m.p() {
            if t > j {
                let wl = &w[t - j - 1];
                for a in 0..du {
                    for b in 0..dx {
                        u[a] += m.get(j - 1, a, b) * wl[b];
                    }
                }
            }
        }
        let x = xs.last().unwrap();
        let mut next = vec![0.0; dx];
        for i in 0..dx {
            let mut v = w[t - 1][i];
            for k in 0..dx {
                v += model.a().get(i, k) * x[k];
            }
            for a in 0..du {
                v += model.b().get(i, a) * u[a];
            }
            next[i] = v;
        }
        xs.push(next);
        us.push(u);
    }
    (xs, us)
}

/// Projection onto the block-ℓ1 ball by bisection on the threshold.
pub fn bisection_project(m: &PolicyParams, kappa: f64) -> PolicyParams {
    let norms = m.block_norms();
    if norms.iter().sum::<f64>() <= kappa {
        return m.clone();
    }
    let excess = |tau: f64| norms.iter().map(|n| (n - tau).max(0.0)).sum::<f64>() - kappa;
    let (mut lo, mut hi) = (0.0, norms.iter().cloned().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 { lo = mid } else { hi = mid }
    }
    let tau = 0.5 * (lo + hi);
    let mut out = m.clone();
    for (i, n) in norms.iter().enumerate() {
        let keep = if *n > tau { (n - tau) / n } else { 0.0 };
        out.block_mut(i).iter_mut().for_each(|v| *v *= keep);
    }
    out
}

pub fn dist(a: &PolicyParams, b: &PolicyParams) -> f64 {
    a.sub(b).frobenius()
}
