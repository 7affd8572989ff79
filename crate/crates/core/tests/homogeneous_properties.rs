use pcf_core::conventions::Conventions;
use pcf_core::homogeneous::flow::FlowOptions;
use pcf_core::homogeneous::{build_model, integrate_with, invariant_pcf_rhs_with, InvariantMetric, ModelName};
use proptest::prelude::*;

fn metric() -> impl Strategy<Value = InvariantMetric> {
    (0.3f64..3.0, 0.3f64..3.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, re, im)| {
        let bound = 0.9 * (a * b).sqrt();
        let (re, im) = (re * bound / 2f64.sqrt(), im * bound / 2f64.sqrt());
        InvariantMetric::new([a, b, re, im]).unwrap()
    })
}

fn model() -> impl Strategy<Value = ModelName> {
    prop::sample::select(ModelName::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_is_a_complex_lie_algebra(name in model()) {
        let m = build_model(name).unwrap();
        prop_assert!(m.jacobi_defect() < 1e-12);
        prop_assert!(m.nijenhuis_defect() < 1e-12);
    }

    #[test]
    fn velocity_is_scale_invariant(name in model(), m in metric(), lambda in 0.2f64..5.0) {
        let model = build_model(name).unwrap();
        let conv = Conventions::default();
        let a = invariant_pcf_rhs_with(&model, &m, &conv).unwrap();
        let b = invariant_pcf_rhs_with(&model, &m.scaled(lambda), &conv).unwrap();
        for i in 0..4 {
            prop_assert!((a[i] - b[i]).abs() < 1e-10 * (1.0 + a[i].abs()), "{name}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn hopf_ray_is_fixed(c in 0.01f64..100.0) {
        let model = build_model(ModelName::Hopf).unwrap();
        let r = invariant_pcf_rhs_with(&model, &InvariantMetric::diagonal(c, c), &Conventions::default()).unwrap();
        prop_assert!(r.iter().all(|x| x.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn flat_models_are_static(m in metric()) {
        for name in [ModelName::R4, ModelName::Torus] {
            let r = invariant_pcf_rhs_with(&build_model(name).unwrap(), &m, &Conventions::default()).unwrap();
            prop_assert!(r.iter().all(|x| x.abs() < 1e-14));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // g from λ·m0 at time λt equals λ·g(t) from m0.
    #[test]
    fn trajectories_rescale_with_the_metric(
        name in prop::sample::select(vec![ModelName::Hopf, ModelName::Nil3xR, ModelName::Sol0_4]),
        m0 in metric(),
        lambda in 0.5f64..3.0,
    ) {
        let model = build_model(name).unwrap();
        let opts = FlowOptions::default();
        let a = integrate_with(&model, &m0, 4.0, &opts).unwrap();
        let b = integrate_with(&model, &m0.scaled(lambda), 4.0 * lambda, &opts).unwrap();
        prop_assume!(a.halted.is_none() && b.halted.is_none());
        for t in [1.0, 2.5, 4.0] {
            let x = a.at(t).unwrap().scaled(lambda);
            let y = b.at(lambda * t).unwrap();
            for i in 0..4 {
                prop_assert!((x.params[i] - y.params[i]).abs() < 1e-5 * (1.0 + x.params[i].abs()), "{name} t={t}: {x:?} vs {y:?}");
            }
        }
        for s in a.states.iter().chain(&b.states) {
            prop_assert!(s.validate().is_ok());
        }
    }
}
