//! Straightforward reference computations the suites compare against.

use adactl_core::{PolicyParams, SystemModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fixed-`m` replay from `x_1 = 0` by direct loops. Returns the states
/// `x_1 … x_{T+1}` and actions `u_1 … u_T`.
pub fn naive_replay(model: &SystemModel, m: &PolicyParams, w: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (dx, du) = (model.dx(), model.du());
    let mut xs = vec![vec![0.0; dx]];
    let mut us = Vec::with_capacity(w.len());
    for t in 1..=w.len() {
        let mut u = vec![0.0; du];
        for j in 1..=m.p().min(t - 1) {
            let wl = &w[t - j - 1];
            for (a, ua) in u.iter_mut().enumerate() {
                for (b, wb) in wl.iter().enumerate() {
                    *ua += m.get(j - 1, a, b) * wb;
                }
            }
        }
        let x = &xs[t - 1];
        let next: Vec<f64> = (0..dx)
            .map(|i| {
                let ax: f64 = (0..dx).map(|k| model.a().get(i, k) * x[k]).sum();
                let bu: f64 = (0..du).map(|a| model.b().get(i, a) * u[a]).sum();
                ax + bu + w[t - 1][i]
            })
            .collect();
        xs.push(next);
        us.push(u);
    }
    (xs, us)
}

/// Projection onto `{Σ_j ||M^[j]|| ≤ κ}` by bisection on the soft threshold.
pub fn bisection_project(m: &PolicyParams, kappa: f64) -> PolicyParams {
    let norms = m.block_norms();
    if norms.iter().sum::<f64>() <= kappa {
        return m.clone();
    }
    let excess = |tau: f64| norms.iter().map(|n| (n - tau).max(0.0)).sum::<f64>() - kappa;
    let (mut lo, mut hi) = (0.0, norms.iter().cloned().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut out = m.clone();
    for (i, n) in norms.iter().enumerate() {
        let keep = if *n > tau { (n - tau) / n } else { 0.0 };
        out.block_mut(i).iter_mut().for_each(|v| *v *= keep);
    }
    out
}

pub fn uniform(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-scale..=scale)).collect()
}

pub fn params(r: &mut ChaCha8Rng, p: usize, du: usize, dx: usize, scale: f64) -> PolicyParams {
    PolicyParams::from_flat(p, du, dx, uniform(r, p * du * dx, scale)).expect("shape")
}

pub fn feasible(r: &mut ChaCha8Rng, p: usize, du: usize, dx: usize, kappa: f64) -> PolicyParams {
    let m = params(r, p, du, dx, 1.0);
    let s: f64 = m.block_norms().iter().sum();
    let radius = kappa * r.gen_range(0.0..=1.0);
    if s == 0.0 {
        m
    } else {
        m.scaled(radius / s)
    }
}

pub fn disturbances(r: &mut ChaCha8Rng, t: usize, dx: usize, bound: f64) -> Vec<Vec<f64>> {
    (0..t)
        .map(|_| {
            let v = uniform(r, dx, 1.0);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let s = r.gen_range(0.0..=bound) / n;
            v.into_iter().map(|x| x * s).collect()
        })
        .collect()
}

/// Random plant with operator norms `||A|| ≤ 1 − δ` and `||B|| ≤ b_norm`.
pub fn model(r: &mut ChaCha8Rng, dx: usize, du: usize, b_norm: f64, w_bound: f64) -> SystemModel {
    use adactl_core::Matrix;
    let scaled = |r: &mut ChaCha8Rng, rows: usize, cols: usize, target: f64| {
        let m = Matrix::from_vec(rows, cols, uniform(r, rows * cols, 1.0)).expect("shape");
        let n = m.operator_norm();
        if n == 0.0 {
            m
        } else {
            m.scaled(target / n)
        }
    };
    let delta = r.gen_range(0.05..0.9);
    let na = r.gen_range(0.0..=1.0 - delta);
    let a = scaled(r, dx, dx, na);
    let nb = r.gen_range(0.1..=b_norm);
    let b = scaled(r, dx, du, nb);
    let kb = b.frobenius();
    SystemModel::new(a, b, None, delta, kb, w_bound).expect("stable by construction")
}

/// `h_t` of the decayed-memory schedule as the literal double sum, clock
/// started at the first nonzero signal.
pub fn decayed_h(signals: &[f64], delta: f64, clamp_first: bool) -> Vec<f64> {
    let mut out = vec![0.0; signals.len()];
    let Some(start) = signals.iter().position(|&a| a > 0.0) else { return out };
    let mut a = signals[start..].to_vec();
    if clamp_first {
        a[0] = a[0].min(1.0);
    }
    let mut cum = vec![0.0; a.len() + 1];
    for (k, v) in a.iter().enumerate() {
        cum[k + 1] = cum[k] + v;
    }
    for t in 0..a.len() {
        out[start + t] = (0..=t).map(|i| (1.0 - delta).powi(i as i32) * (cum[t + 1] - cum[t - i])).sum();
    }
    out
}
