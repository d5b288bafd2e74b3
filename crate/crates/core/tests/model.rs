mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siqa::eval::srocc;
use siqa::model::{
    decode_model, encode_model, load_model, save_model, train_mlp, train_stacked, Dataset, Mlp, RpropConfig,
    RpropState, StackedConfig, Standardizer, TargetScaler, TrainConfig,
};
use siqa::{predict, FeatureKind, FeatureVector};

fn random_batch(rng: &mut ChaCha8Rng, inputs: usize, n: usize) -> Dataset {
    let x = (0..n).map(|_| (0..inputs).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let t = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dataset::new(x, t).unwrap()
}

#[test]
fn gradients_match_finite_differences_for_every_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (inputs, hidden) in [(40, 25), (36, 25), (2, 3)] {
        let net = Mlp::random(inputs, hidden, 99);
        let batch = random_batch(&mut rng, inputs, 5);
        let analytic = net.gradient(&batch).unwrap();
        let numeric = common::finite_difference(net.params(), 1e-5, |p| {
            let mut n = net.clone();
            n.params_mut().copy_from_slice(p);
            n.mse(&batch).unwrap()
        });
        for (k, (a, b)) in analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
            assert!(rel < 1e-5, "{inputs}-{hidden}-1 param {k}: {a} vs {b}");
        }
    }
}

#[test]
fn perfect_fit_has_zero_gradient() {
    let net = Mlp::random(3, 4, 1);
    let x: Vec<Vec<f64>> = vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.0, 2.0]];
    let t = x.iter().map(|v| net.forward(v).unwrap()).collect();
    let g = net.gradient(&Dataset::new(x, t).unwrap()).unwrap();
    assert!(g.iter().all(|v| *v == 0.0));
}

#[test]
fn xor_converges_for_most_seeds() {
    let data = Dataset::new(
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        vec![0.0, 1.0, 1.0, 0.0],
    )
    .unwrap();
    let empty = Dataset::new(vec![], vec![]).unwrap();
    let cfg = TrainConfig::default();
    let solved = (0..100u64)
        .filter(|&seed| {
            let out = train_mlp(Mlp::random(2, 4, seed), &data, &empty, &cfg).unwrap();
            out.net.mse(&data).unwrap() < 0.01
        })
        .count();
    assert!(solved >= 90, "{solved}/100 seeds solved XOR");
}

#[test]
fn rprop_trace() {
    let cfg = RpropConfig::default();
    let mut st = RpropState::new(2, cfg);
    let mut w = [0.0, 0.0];
    st.step(&mut w, &[1.0, 0.0]);
    assert_eq!(w, [-0.07, 0.0]);
    st.step(&mut w, &[1.0, 0.0]);
    assert!((w[0] + 0.07 + 0.084).abs() < 1e-15);
    assert_eq!(st.deltas[1], 0.07);
    let before = w[0];
    st.step(&mut w, &[-1.0, 0.0]);
    assert_eq!(w[0], before);
    assert!((st.deltas[0] - 0.042).abs() < 1e-15);
    st.step(&mut w, &[-1.0, 0.0]);
    assert!((w[0] - (before + 0.042)).abs() < 1e-15);
}

fn fv(kind: FeatureKind, rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector::new(kind, (0..kind.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn synthetic_set(n: usize, seed: u64) -> (Vec<FeatureVector>, Vec<FeatureVector>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Vec::new();
    let mut c = Vec::new();
    let mut t = Vec::new();
    for _ in 0..n {
        let a = fv(FeatureKind::Phase, &mut rng);
        let b = fv(FeatureKind::Contrast, &mut rng);
        let sp: f64 = a.values()[..5].iter().sum();
        let sc: f64 = b.values()[..5].iter().sum();
        t.push(10.0 * (sp + sc) / 2.0 + 30.0);
        p.push(a);
        c.push(b);
    }
    (p, c, t)
}

#[test]
fn stacked_model_learns_a_linear_target() {
    let (p, c, t) = synthetic_set(1000, 1);
    let cfg = StackedConfig { seed: 5, ..StackedConfig::default() };
    let model = train_stacked(&p[..800], &c[..800], &t[..800], &cfg).unwrap();
    let pred: Vec<f64> = (800..1000).map(|i| predict(&model, &p[i], &c[i]).unwrap()).collect();
    let s = srocc(&pred, &t[800..]).unwrap();
    assert!(s > 0.95, "{s}");
    assert_eq!(model, train_stacked(&p[..800], &c[..800], &t[..800], &cfg).unwrap());
}

#[test]
fn identity_refiner_passes_phase_output_through() {
    let (p, c, t) = synthetic_set(60, 2);
    let mut model = train_stacked(&p, &c, &t, &StackedConfig::default()).unwrap();
    // one sigmoid unit in its linear regime: out = (4/e)(sigmoid(e x) - 1/2)
    let e = 1e-4;
    model.refiner = Mlp::from_parts(2, 3, &[e, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0; 3], &[4.0 / e, 0.0, 0.0], -2.0 / e).unwrap();
    model.refiner_std = Standardizer {
        mean: vec![0.0; 2],
        std: vec![1.0; 2],
        flagged: vec![false; 2],
    };
    for i in 0..10 {
        let levels = model.predict_levels(&p[i], &c[i]).unwrap();
        assert!((levels.stacked - levels.phase).abs() < 1e-6, "{levels:?}");
    }
}

#[test]
fn model_file_round_trip() {
    let (p, c, t) = synthetic_set(80, 3);
    let model = train_stacked(&p, &c, &t, &StackedConfig { seed: 8, ..StackedConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.model");
    let b = dir.path().join("b.model");
    save_model(&model, &a).unwrap();
    let loaded = load_model(&a).unwrap();
    save_model(&loaded, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (x, y) = (fv(FeatureKind::Phase, &mut rng), fv(FeatureKind::Contrast, &mut rng));
        let d = predict(&model, &x, &y).unwrap() - predict(&loaded, &x, &y).unwrap();
        assert!(d.abs() < 1e-9);
    }

    let text = encode_model(&model);
    let tampered = text.replacen("siqa-model 1", "siqa-model 2", 1);
    let err = decode_model(&tampered).unwrap_err().to_string();
    assert!(err.contains("line 1"), "{err}");
    let truncated: String = text.lines().take(12).collect::<Vec<_>>().join("\n");
    assert!(decode_model(&truncated).is_err());
}

#[test]
fn wrong_feature_lengths_are_rejected() {
    let (p, c, t) = synthetic_set(40, 6);
    let model = train_stacked(&p, &c, &t, &StackedConfig::default()).unwrap();
    assert!(predict(&model, &c[0], &p[0]).is_err());
    assert!(FeatureVector::new(FeatureKind::Phase, vec![0.0; 39]).is_err());
}

proptest! {
    #[test]
    fn rprop_steps_stay_in_bounds(grads in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..60)) {
        let cfg = RpropConfig::default();
        let mut st = RpropState::new(4, cfg);
        let mut w = vec![0.0; 4];
        for g in &grads {
            st.step(&mut w, g);
            prop_assert!(st.deltas.iter().all(|d| (cfg.delta_min..=cfg.delta_max).contains(d)));
        }
    }

    #[test]
    fn target_scaling_round_trips(ts in prop::collection::vec(-100.0f64..100.0, 2..40), probe in -1e3f64..1e3) {
        prop_assume!(ts.iter().any(|v| *v != ts[0]));
        let s = TargetScaler::fit(&ts).unwrap();
        prop_assert!((s.destandardize(s.standardize(probe)) - probe).abs() < 1e-12 * probe.abs().max(1.0));
    }
}
