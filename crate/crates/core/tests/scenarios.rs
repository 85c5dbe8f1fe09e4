use adactl_core::scenario::{gen_predictions, sign_flip, BUILTIN_NAMES};
use adactl_core::{builtin_scenario, Error, GradientMatrix, PredictionPolicy};

#[test]
fn sign_flip_match_rate_at_one_half() {
    let grads: Vec<GradientMatrix> = (0..10_000).map(|t| GradientMatrix::from_scalars(&[1.0 + t as f64])).collect();
    for seed in [0, 1, 99] {
        let preds = sign_flip(&grads, 0.5, seed);
        let hits = preds.iter().zip(&grads).filter(|(p, g)| p == g).count();
        let rate = hits as f64 / grads.len() as f64;
        assert!((rate - 0.5).abs() <= 0.02, "seed {seed}: {rate}");
    }
}

#[test]
fn sign_flip_is_order_independent() {
    let grads: Vec<GradientMatrix> = (0..100).map(|t| GradientMatrix::from_scalars(&[t as f64 + 1.0])).collect();
    let full = sign_flip(&grads, 0.3, 4);
    let tail = sign_flip(&grads[..50], 0.3, 4);
    assert!(tail.iter().zip(full.iter()).all(|(a, b)| a == b));
    assert_ne!(sign_flip(&grads, 0.3, 5), full);
}

#[test]
fn predictions_need_a_policy() {
    let spec = builtin_scenario("A").unwrap();
    assert_eq!(gen_predictions(&spec, &[], 0), Err(Error::NoPredictionPolicy));
    let d = builtin_scenario("D").unwrap();
    assert_eq!(d.predictions, PredictionPolicy::SignFlip { phi: 0.8 });
}

#[test]
fn realized_gradients_within_stability_bound() {
    // ||G_t|| ≤ l·p·w·κ_B/δ for a scalar plant with ρ(A) ≤ 1 − δ
    for name in BUILTIN_NAMES {
        let spec = builtin_scenario(name).unwrap();
        let c = spec.constants();
        let bound = c.l * c.z / c.delta;
        let max = spec.true_gradients().unwrap().iter().map(|g| g.frobenius()).fold(0.0, f64::max);
        assert!(max <= bound, "{name}: {max} > {bound}");
    }
}

#[test]
fn builtin_streams_are_deterministic_and_bounded() {
    for name in BUILTIN_NAMES {
        let a = builtin_scenario(name).unwrap();
        let b = builtin_scenario(name).unwrap();
        assert_eq!(a.streams(), b.streams());
        assert!(a.streams().w.iter().all(|w| w[0].abs() <= a.system.w_bound()));
        assert_eq!(a.streams().theta.len(), 5000);
    }
}

#[test]
fn table_rows() {
    let a = builtin_scenario("A").unwrap().streams();
    assert_eq!((a.theta[0][0], a.theta[1][0], a.theta[749][0], a.theta[750][0]), (15.0, -7.0, -7.0, 7.0));
    assert!(a.w.iter().all(|w| w[0] == 0.25));
    let b = builtin_scenario("B").unwrap().streams();
    assert!(b.w.iter().all(|w| w[0] == 0.1));
    assert_eq!((b.theta[0][0], b.theta[499][0], b.theta[500][0]), (-5.0, -1.0, 1.0));
    let f = builtin_scenario("F").unwrap().streams();
    assert_eq!((f.theta[0][0], f.theta[1][0], f.theta[200][0], f.theta[2000][0], f.theta[4999][0]), (100.0, -50.0, 50.0, 0.0, 50.0));
}
