use proptest::prelude::*;
use sogp_core::kernel::{gram_matrix, kernel_eval};
use sogp_core::{DeletionPolicy, KernelParams, SogpConfig, SogpModel};

fn policy() -> impl Strategy<Value = DeletionPolicy> {
    prop_oneof![
        Just(DeletionPolicy::Pis),
        Just(DeletionPolicy::Ops),
        (1u64..20).prop_map(|h| DeletionPolicy::Fs { h }),
    ]
}

fn stream(d: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec((prop::collection::vec(-2.0..2.0f64, d), -3.0..3.0f64), 1..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn model_invariants_hold_along_any_stream(
        data in stream(3),
        capacity in 1usize..20,
        eps in prop_oneof![Just(0.0), 0.001..0.2f64],
        policy in policy(),
    ) {
        let params = KernelParams::new(1.0, 0.04, vec![0.5, 0.5, 0.2]).unwrap();
        let mut m = SogpModel::new(params, SogpConfig::new(capacity, eps, policy)).unwrap();
        for (x, y) in &data {
            m.update(x, *y).unwrap();
            prop_assert!(m.len() <= capacity);
            prop_assert_eq!(m.alpha().len(), m.len());
            prop_assert!(m.covariance_correction().is_symmetric());
            prop_assert!(m.inverse_gram().is_symmetric());
            let (_, var) = m.predict_unclamped(x).unwrap();
            prop_assert!(var >= -1e-10);
        }
        prop_assert!(m.inverse_gram_residual() <= 1e-8, "residual {}", m.inverse_gram_residual());
    }

    #[test]
    fn kernel_is_bounded_and_symmetric(
        a in prop::collection::vec(-5.0..5.0f64, 4),
        b in prop::collection::vec(-5.0..5.0f64, 4),
        s2 in 0.1..10.0f64,
    ) {
        let p = KernelParams::new(s2, 0.01, vec![0.5, 0.5, 0.2, 0.2]).unwrap();
        let kab = kernel_eval(&p, &a, &b).unwrap();
        prop_assert_eq!(kab, kernel_eval(&p, &b, &a).unwrap());
        prop_assert!(kab > 0.0 || a != b);
        prop_assert!(kab <= s2);
        prop_assert_eq!(kernel_eval(&p, &a, &a).unwrap(), s2);
    }

    #[test]
    fn rebuilt_model_predicts_identically(data in stream(2), probe in prop::collection::vec(-2.0..2.0f64, 2)) {
        let params = KernelParams::new(1.0, 0.04, vec![0.5, 0.5]).unwrap();
        let mut m = SogpModel::new(params.clone(), SogpConfig::new(10, 0.01, DeletionPolicy::Fs { h: 3 })).unwrap();
        for (x, y) in &data {
            m.update(x, *y).unwrap();
        }
        let back = SogpModel::from_parts(
            params,
            m.config().clone(),
            m.basis().clone(),
            m.alpha().to_vec(),
            m.covariance_correction().clone(),
            m.inverse_gram().clone(),
            m.n_added(),
        )
        .unwrap();
        prop_assert_eq!(back.predict(&probe).unwrap(), m.predict(&probe).unwrap());
        prop_assert_eq!(&back, &m);
    }
}

#[test]
fn gram_of_distinct_points_is_positive_definite() {
    let p = KernelParams::new(1.0, 0.04, vec![0.5; 2]).unwrap();
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.3, (i as f64).sin()]).collect();
    let k = gram_matrix(&p, &sogp_core::Matrix::from_rows(&rows).unwrap()).unwrap();
    assert!(sogp_core::linalg::Cholesky::factor(&k).is_ok());
}
