use proptest::prelude::*;
use sogp_bench::snapshot::{from_text, load_bank, save_bank, to_text};
use sogp_core::control::{GpBank, Normalizer};
use sogp_core::{DeletionPolicy, KernelParams, ScoreRule, SogpConfig, SogpModel};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snapshot_roundtrip_preserves_predictions(
        data in prop::collection::vec((prop::collection::vec(-3.0..3.0f64, 4), -5.0..5.0f64), 0..80),
        probes in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 4), 1..10),
        capacity in 1usize..15,
        h in 1u64..30,
        signed in any::<bool>(),
        s2 in 0.1..4.0f64,
    ) {
        let params = KernelParams::new(s2, 0.04, vec![0.5, 0.5, 0.2, 0.2]).unwrap();
        let score = if signed { ScoreRule::Signed } else { ScoreRule::Magnitude };
        let config = SogpConfig { capacity, eps_tol: 0.01, policy: DeletionPolicy::Fs { h }, score };
        let mut m = SogpModel::new(params, config).unwrap();
        for (x, y) in &data {
            m.update(x, *y).unwrap();
        }
        let back = from_text(&to_text(&m)).unwrap();
        for p in &probes {
            let (a, b) = (m.predict(p).unwrap(), back.predict(p).unwrap());
            prop_assert!((a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12);
        }
        prop_assert_eq!(back, m);
    }
}

#[test]
fn bank_roundtrip_through_files() {
    let params = KernelParams::new(1.0, 0.04, vec![0.5; 6]).unwrap();
    let mut models = Vec::new();
    for j in 0..2 {
        let mut m = SogpModel::new(params.clone(), SogpConfig::new(8, 0.01, DeletionPolicy::Ops)).unwrap();
        for i in 0..20 {
            let t = i as f64 * 0.2 + j as f64;
            m.update(&[t.sin(), t.cos(), t, -t, 0.5 * t, 1.0], t.sin())
                .unwrap();
        }
        models.push(m);
    }
    let norms = vec![
        Normalizer {
            mean: 1.5,
            scale: 0.25,
        },
        Normalizer {
            mean: -0.1,
            scale: 3.0,
        },
    ];
    let bank = GpBank::from_models(models, norms).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_bank(&bank, dir.path()).unwrap();
    let back = load_bank(dir.path()).unwrap();
    assert_eq!(back.models(), bank.models());
    assert_eq!(back.normalizers(), bank.normalizers());
}
