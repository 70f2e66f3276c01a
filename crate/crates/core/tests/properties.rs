//! Property tests for invariants that must hold for arbitrary inputs.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::Zero;
use proptest::prelude::*;

use tractor_calc::cli::report::{normalize_floats, num};
use tractor_calc::decomposition::{partial_fraction_residuals, MatrixFactorSystem};
use tractor_calc::fields_charts::{MetricModel, ScalarJetField};
use tractor_calc::jet::Jet;
use tractor_calc::tractor::{rescale_tractor, tractor_metric, TractorValue};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Leibniz rule and `exp ∘ ln = id` on jets, all partials up to order 3.
    #[test]
    fn jet_algebra(a in prop::collection::vec(-1.0f64..1.0, 6), p in prop::collection::vec(-0.5f64..0.5, 2)) {
        let z = Jet::coordinates(&p, 3);
        let f = (&z[0] * &z[1]).scale(a[0]) + &z[0].scale(a[1]).sin() + 2.0;
        let g = (&z[1] * &z[1]).scale(a[2]) + &z[0].scale(a[3]) + &(&z[0] * &z[1]).scale(a[4]).exp();
        let fg = &f * &g;
        for alpha in [[1usize, 0], [0, 1]] {
            let lhs = fg.partial(&alpha).unwrap();
            let rhs = f.partial(&alpha).unwrap() * g.value() + f.value() * g.partial(&alpha).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
        let back = f.ln().exp();
        for (x, y) in back.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    /// The partial-fraction identity holds exactly for any distinct spectrum.
    #[test]
    fn partial_fractions_are_exact(raw in prop::collection::btree_set((-20i64..20, 1i64..5), 1..5)) {
        let mut mu: Vec<BigRational> = raw.into_iter().map(|(n, d)| rat(n, d)).collect();
        mu.sort();
        mu.dedup();
        prop_assert!(partial_fraction_residuals(&mu).unwrap().iter().all(|r| r.is_zero()));
    }

    /// Components of any vector sum back to it, exactly.
    #[test]
    fn projections_sum_to_input(v in prop::collection::vec(-50i64..50, 3)) {
        let e = vec![
            vec![rat(2, 1), rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(3, 1), rat(1, 2)],
            vec![rat(0, 1), rat(0, 1), rat(-1, 1)],
        ];
        let sys = MatrixFactorSystem::new(e, vec![rat(2, 1), rat(3, 1), rat(-1, 1)]).unwrap();
        let v: Vec<BigRational> = v.into_iter().map(|x| rat(x, 1)).collect();
        let r = sys.project(&v).unwrap();
        prop_assert_eq!(r.sum_residual, 0.0);
        prop_assert!(r.in_null_space);
        prop_assert!(sys.identity_decomposition_check(&v).unwrap().is_zero());
    }

    /// The tractor metric is unchanged by a change of scale.
    #[test]
    fn tractor_metric_is_scale_invariant(
        u in prop::collection::vec(-2.0f64..2.0, 6),
        v in prop::collection::vec(-2.0f64..2.0, 6),
        c in prop::collection::vec(-0.4f64..0.4, 4),
        p in prop::collection::vec(-0.6f64..0.6, 4),
    ) {
        let base = MetricModel::sphere(4, 1.0).unwrap();
        let omega = ScalarJetField::new(4, "ω", move |y| {
            (&y[0] * &y[1]).scale(c[0]) + &y[2].scale(c[1]).sin() + &y[3].scale(c[2]) + c[3]
        });
        let hat = MetricModel::conformal_rescale(omega.clone(), &base);
        let g = base.values_at(&p).unwrap();
        let ginv = nalgebra::DMatrix::from_row_slice(4, 4, &g).try_inverse().unwrap();
        let ginv: Vec<f64> = ginv.transpose().iter().cloned().collect();
        let w = Rational64::new(1, 2);
        let tu = TractorValue::new(1, u, w, base.scale.clone(), &p, ginv.clone()).unwrap();
        let tv = TractorValue::new(1, v, w, base.scale.clone(), &p, ginv).unwrap();
        let h0 = tractor_metric(&tu, &tv).unwrap();
        let uh = rescale_tractor(&tu, &omega, hat.scale.clone()).unwrap();
        let vh = rescale_tractor(&tv, &omega, hat.scale.clone()).unwrap();
        let h1 = tractor_metric(&uh, &vh).unwrap();
        let f = (2.0 * 0.5 * omega.value(&p)).exp();
        prop_assert!((h0 * f - h1).abs() <= 1e-10 * (1.0 + h1.abs()), "{} vs {}", h0 * f, h1);
    }

    /// Report floats parse back to the same double.
    #[test]
    fn report_floats_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
        let v = normalize_floats(serde_json::json!({ "x": x }));
        let s = serde_json::to_string(&v).unwrap();
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back["x"].as_f64().unwrap(), x);
    }
}
