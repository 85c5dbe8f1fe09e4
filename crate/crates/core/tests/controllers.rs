mod common;

use adactl_core::hindsight::linear_argmin;
use adactl_core::policy::block_norm_sum;
use adactl_core::{BoundConstants, ControllerKind, ControllerState, GradientMatrix, PolicyParams};
use common::*;
use rand::Rng;

fn consts(p: usize, dx: usize, du: usize, kappa: f64) -> BoundConstants {
    BoundConstants::new(2.0, 5.0, 0.5, kappa, 1.0, 0.3, p, dx, du)
}

/// `argmin_{M ∈ set} Σ_s σ_s/2 ||M − M_s||² + ⟨C, M⟩` by projected gradient
/// with a conservative step and the bisection projection.
fn pgd_oracle(anchor: &PolicyParams, sigma_total: f64, c: &GradientMatrix, kappa: f64) -> PolicyParams {
    let step = 0.5 / sigma_total;
    let mut m = PolicyParams::zeros(c.p(), c.du(), c.dx());
    for _ in 0..5000 {
        let mut grad = m.scaled(sigma_total);
        grad.axpy(-1.0, anchor);
        grad.axpy(1.0, c);
        let mut y = m.clone();
        y.axpy(-step, &grad);
        let next = bisection_project(&y, kappa);
        let moved = dist(&next, &m);
        m = next;
        if moved < 1e-15 {
            break;
        }
    }
    m
}

fn check_against_oracle(kind: ControllerKind, episodes: u64) {
    let mut r = rng(41 + kind as u64);
    for _ in 0..episodes {
        let (p, dx, du) = (3, r.gen_range(1..=2), r.gen_range(1..=2));
        let kappa = r.gen_range(0.5..3.0);
        let c = consts(p, dx, du, kappa);
        let mut ctrl = ControllerState::new(kind, &c, du, dx, None, None).unwrap();
        let horizon = 15;
        let grads: Vec<GradientMatrix> =
            (0..horizon).map(|t| if t < 2 { PolicyParams::zeros(p, du, dx) } else { random_params(&mut r, p, du, dx, 3.0) }).collect();
        let preds: Vec<GradientMatrix> = grads
            .iter()
            .map(|g| {
                let mut n = g.clone();
                n.axpy(1.0, &random_params(&mut r, p, du, dx, 1.0));
                n
            })
            .collect();
        if kind == ControllerKind::OptFtrlC {
            for (s, g) in preds.iter().enumerate() {
                ctrl.receive_prediction(s + 1, g.clone()).unwrap();
            }
        }
        let mut anchor = PolicyParams::zeros(p, du, dx);
        let mut gsum = GradientMatrix::zeros(p, du, dx);
        for t in 0..horizon {
            let before = ctrl.m().clone();
            let info = ctrl.update(&grads[t]).unwrap();
            anchor.axpy(info.sigma.unwrap(), &before);
            gsum.axpy(1.0, &grads[t]);
            let mut lin = gsum.clone();
            if kind == ControllerKind::OptFtrlC {
                for g in &preds[t + 1..] {
                    lin.axpy(1.0, g);
                }
            }
            let total = info.sigma_prefix.unwrap();
            if total == 0.0 {
                if kind == ControllerKind::OptFtrlC {
                    assert_eq!(ctrl.m(), &linear_argmin(&lin, ctrl.feasible()));
                } else {
                    assert!(ctrl.m().is_zero());
                }
                continue;
            }
            let want = pgd_oracle(&anchor, total, &lin, kappa);
            assert!(dist(ctrl.m(), &want) < 1e-6, "{kind} t={t}: off by {}", dist(ctrl.m(), &want));
            assert!(block_norm_sum(ctrl.m()) <= kappa + 1e-9);
        }
    }
}

#[test]
fn ftrl_matches_numerical_argmin() {
    check_against_oracle(ControllerKind::FtrlC, 100);
}

#[test]
fn adaftrl_matches_numerical_argmin() {
    check_against_oracle(ControllerKind::AdaFtrlC, 100);
}

#[test]
fn optftrl_matches_numerical_argmin() {
    check_against_oracle(ControllerKind::OptFtrlC, 100);
}

#[test]
fn optimistic_without_predictions_follows_adaftrl() {
    // with no predictions ε_t = g_t, and a first signal below 1 is not clamped
    let mut r = rng(45);
    let c = consts(4, 2, 1, 2.0);
    let sigma = Some(0.8);
    let mut opt = ControllerState::new(ControllerKind::OptFtrlC, &c, 1, 2, None, sigma).unwrap();
    let mut ada = ControllerState::new(ControllerKind::AdaFtrlC, &c, 1, 2, None, sigma).unwrap();
    for t in 0..50 {
        let scale = if t == 0 { 0.3 } else { 4.0 };
        let g = random_params(&mut r, 4, 1, 2, scale);
        opt.update(&g).unwrap();
        ada.update(&g).unwrap();
        assert_eq!(opt.m(), ada.m());
    }
}

#[test]
fn five_step_ftrl_by_hand() {
    // scalar, p = 1: M_{t+1} = clip((Σ σ_s M_s − G_{1:t})/σ_{1:t}, ±κ)
    let c = consts(1, 1, 1, 1.0);
    let sigma = 0.5;
    let mut ctrl = ControllerState::new(ControllerKind::FtrlC, &c, 1, 1, None, Some(sigma)).unwrap();
    let gs = [0.4_f64, -2.0, 0.1, 3.0, -0.5];
    let (mut m, mut h, mut hsum, mut anchor, mut gsum) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0, 0.0);
    for g in gs {
        let signal = g.abs().max(g * g);
        h = h.max(signal);
        let old = hsum;
        hsum += h;
        let s = sigma * (hsum.sqrt() - old.sqrt());
        anchor += s * m;
        gsum += g;
        m = ((anchor - gsum) / (sigma * hsum.sqrt())).clamp(-1.0, 1.0);
        ctrl.update(&GradientMatrix::from_scalars(&[g])).unwrap();
        assert!((ctrl.m().as_slice()[0] - m).abs() < 1e-14);
    }
}

#[test]
fn baselines_stay_feasible_and_descend() {
    let mut r = rng(46);
    for kind in [ControllerKind::Gpc, ControllerKind::BasicFtrl] {
        let c = consts(3, 1, 1, 1.5);
        let mut ctrl = ControllerState::new(kind, &c, 1, 1, Some(200), None).unwrap();
        let g = random_params(&mut r, 3, 1, 1, 1.0);
        for _ in 0..200 {
            ctrl.update(&g).unwrap();
            assert!(block_norm_sum(ctrl.m()) <= 1.5 + 1e-9);
        }
        // a constant gradient pushes the iterate against it
        assert!(ctrl.m().dot(&g) < 0.0, "{kind}");
    }
}

#[test]
fn basic_ftrl_converges_to_linear_minimizer_direction() {
    let c = consts(2, 1, 1, 1.0);
    let mut ctrl = ControllerState::new(ControllerKind::BasicFtrl, &c, 1, 1, Some(10), None).unwrap();
    let g = GradientMatrix::from_scalars(&[3.0, 1.0]);
    for _ in 0..10 {
        ctrl.update(&g).unwrap();
    }
    let target = linear_argmin(&g, ctrl.feasible());
    assert!(ctrl.m().dot(&g) <= 0.0);
    assert!(ctrl.m().as_slice()[0] < 0.0 && target.as_slice()[0] == -1.0);
}
