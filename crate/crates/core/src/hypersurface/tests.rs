use num_rational::Rational64;

use super::*;
use crate::fields_charts::{DensityField, MetricModel, ScalarJetField};
use crate::tractor::field::TractorField;
use crate::tractor::value::{rescale_tractor, tractor_metric};

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn r2(y: &[Jet]) -> Jet {
    y.iter().fold(y[0].lift(0.0), |a, v| &a + &(v * v))
}

fn unit_sphere_in(metric: MetricModel) -> Hypersurface {
    let d = metric.dim();
    let x = ScalarJetField::new(d, "(1-|y|²)/2", |y| (-&r2(y) + 1.0).scale(0.5));
    Hypersurface::new(x, 1.0, metric).unwrap()
}

fn ellipsoid(d: usize) -> Hypersurface {
    let x = ScalarJetField::new(d, "ellipsoid", |y| {
        let mut s = y[0].lift(1.0);
        for (a, v) in y.iter().enumerate() {
            let ax = 1.0 + 0.3 * a as f64;
            s = &s - &(v * v).scale(1.0 / (ax * ax));
        }
        s
    });
    Hypersurface::new(x, 1.0, MetricModel::flat(d).unwrap()).unwrap()
}

fn bump(d: usize) -> ScalarJetField {
    ScalarJetField::new(d, "bump", |y| (&y[0] * &y[1]).scale(0.3) + &y[2].sin().scale(0.25) - &(&y[3] * &y[3]).scale(0.1))
}

fn density(metric: &MetricModel, w: Rational64, f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> TractorField {
    let rep = ScalarJetField::new(metric.dim(), "u", f);
    TractorField::from_density(&DensityField::new(w, metric.scale.clone(), rep))
}

#[test]
fn hyperplane_is_flat_and_umbilic() {
    let m = MetricModel::flat(4).unwrap();
    let s = Hypersurface::new(ScalarJetField::coordinate(4, 0), 1.0, m).unwrap();
    let p = [0.0, 0.3, -0.2, 0.1];
    assert_eq!(s.mean_curvature(&p).unwrap(), 0.0);
    assert_eq!(s.normal_tractor(&p).unwrap().comps, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let u = s.umbilicity_defect(&p).unwrap();
    assert_eq!(u.trace_free_norm, 0.0);
    assert_eq!(u.normal_tractor_variation, 0.0);
    assert!(matches!(s.mean_curvature(&[0.1, 0.0, 0.0, 0.0]), Err(CalcError::Domain(_))));
}

#[test]
fn unit_sphere_in_flat_space() {
    let s = unit_sphere_in(MetricModel::flat(4).unwrap());
    for p in s.sample(1, 10) {
        let n = s.conormal(&p).unwrap();
        for a in 0..4 {
            assert!((n[a] + p[a]).abs() < 1e-12);
        }
        assert!((s.mean_curvature(&p).unwrap() + 1.0).abs() < 1e-12);
        let nt = s.normal_tractor(&p).unwrap();
        assert!(nt.sigma().abs() < 1e-15 && (nt.rho() - 1.0).abs() < 1e-12);
        assert!((tractor_metric(&nt, &nt).unwrap() - 1.0).abs() < 1e-12);
        // matches (1/d)Dσ for σ = (1−|y|²)/2
        let sig = TractorField::from_density(&DensityField::new(r(1, 1), s.metric.scale.clone(), s.defining.clone()));
        let i = crate::tractor::thomas_d(&sig, &s.metric, &p).unwrap();
        for (a, b) in i.comps.iter().zip(&nt.comps) {
            assert!((a / 4.0 - b).abs() < 1e-12);
        }
    }
}

#[test]
fn mean_curvature_ignores_the_extension() {
    let m = MetricModel::sphere(4, 1.0).unwrap();
    let s1 = ellipsoid(4);
    let s1 = Hypersurface::new(s1.defining, 1.0, m.clone()).unwrap();
    let x2 = s1.defining.mul(&ScalarJetField::new(4, "e", |y| (&y[0] * &y[2]).scale(0.7).exp() + 0.3));
    let s2 = Hypersurface::new(x2, 1.0, m).unwrap();
    for p in s1.sample(2, 10) {
        assert!((s1.mean_curvature(&p).unwrap() - s2.mean_curvature(&p).unwrap()).abs() < 1e-12);
        let (a, b) = (s1.normal_tractor(&p).unwrap(), s2.normal_tractor(&p).unwrap());
        for (x, y) in a.comps.iter().zip(&b.comps) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn mean_curvature_transformation_and_normal_tractor_invariance() {
    let base = MetricModel::flat(4).unwrap();
    let omega = bump(4);
    let hat = MetricModel::conformal_rescale(omega.clone(), &base);
    let s = ellipsoid(4);
    let sh = Hypersurface::new(s.defining.clone(), 1.0, hat.clone()).unwrap();
    for p in s.sample(3, 10) {
        let n = s.conormal(&p).unwrap();
        let grad = omega.gradient(&p);
        let ndw: f64 = n.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let h = s.mean_curvature(&p).unwrap();
        let hh = sh.mean_curvature(&p).unwrap();
        let om = omega.value(&p);
        assert!((hh - (-om).exp() * (h + ndw)).abs() < 1e-11);
        let nt = rescale_tractor(&s.normal_tractor(&p).unwrap(), &omega, hat.scale.clone()).unwrap();
        let nth = sh.normal_tractor(&p).unwrap();
        for (a, b) in nt.comps.iter().zip(&nth.comps) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn equator_of_round_sphere_is_totally_geodesic() {
    let s = unit_sphere_in(MetricModel::sphere(4, 1.0).unwrap());
    for p in s.sample(4, 10) {
        assert!(s.mean_curvature(&p).unwrap().abs() < 1e-12);
        let u = s.umbilicity_defect(&p).unwrap();
        assert!(u.trace_free_norm < 1e-10 && u.normal_tractor_variation < 1e-9);
    }
}

#[test]
fn umbilicity_sphere_versus_ellipsoid() {
    let shifted = ScalarJetField::new(4, "sphere", |y| {
        let c = [0.2, -0.1, 0.0, 0.3];
        let mut s = y[0].lift(0.49);
        for a in 0..4 {
            let t = y[a].add_scalar(-c[a]);
            s = &s - &(&t * &t);
        }
        s
    });
    for m in [MetricModel::flat(4).unwrap(), MetricModel::conformal_rescale(bump(4), &MetricModel::flat(4).unwrap())] {
        let s = Hypersurface::new(shifted.clone(), 1.0, m).unwrap();
        for p in s.sample(5, 10) {
            let u = s.umbilicity_defect(&p).unwrap();
            assert!(u.trace_free_norm < 1e-10, "{u:?}");
            assert!(u.normal_tractor_variation < 1e-9, "{u:?}");
        }
    }
    let e = ellipsoid(4);
    for p in e.sample(6, 10) {
        let u = e.umbilicity_defect(&p).unwrap();
        assert!(u.trace_free_norm > 1e-3 && u.normal_tractor_variation > 1e-3, "{u:?}");
    }
}

#[test]
fn tangential_projection() {
    let s = ellipsoid(4);
    let p = s.sample(7, 1).remove(0);
    let nt = s.normal_tractor(&p).unwrap();
    assert!(project_sigma(&nt, &s).unwrap().max_abs() < 1e-14);
    let mut x = nt.clone();
    x.comps = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let px = project_sigma(&x, &s).unwrap();
    for (a, b) in px.comps.iter().zip(&x.comps) {
        assert!((a - b).abs() < 1e-14);
    }
    let mut u = nt.clone();
    u.comps = vec![0.3, -1.2, 0.4, 2.0, 0.1, -0.7];
    let pu = project_sigma(&u, &s).unwrap();
    assert!(tractor_metric(&pu, &nt).unwrap().abs() < 1e-12);
    let ppu = project_sigma(&pu, &s).unwrap();
    for (a, b) in pu.comps.iter().zip(&ppu.comps) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn robin_examples() {
    let s = unit_sphere_in(MetricModel::flat(4).unwrap());
    let sig = TractorField::from_density(&DensityField::new(r(1, 1), s.metric.scale.clone(), s.defining.clone()));
    let c = density(&s.metric, r(0, 1), |y| y[0].lift(2.0));
    for p in s.sample(8, 10) {
        assert!((robin_delta(&sig, &s, &p).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(robin_delta(&c, &s, &p).unwrap().value, 0.0);
    }
    assert!(matches!(robin_delta(&c, &s, &[0.5, 0.0, 0.0, 0.0]), Err(CalcError::Domain(_))));
    assert!(matches!(robin_delta(&c, &s, &[0.0; 4]), Err(CalcError::NotDefining(_))));
}

#[test]
fn delta_one_matches_robin_and_zero_is_restriction() {
    let s = ellipsoid(4);
    let s = Hypersurface::new(s.defining, 1.0, MetricModel::sphere(4, 1.0).unwrap()).unwrap();
    let u = density(&s.metric, r(-1, 3), |y| (&y[0] * &y[1]).sin() + &y[2].exp());
    for p in s.sample(9, 5) {
        let a = delta_ell(1, &u, &s, &p).unwrap();
        let b = robin_delta(&u, &s, &p).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        assert_eq!(a.weight, r(-4, 3));
        let z = delta_ell(0, &u, &s, &p).unwrap();
        assert!((z.value - ((p[0] * p[1]).sin() + p[2].exp())).abs() < 1e-14);
    }
}

#[test]
fn delta_ell_is_conformally_invariant() {
    let base = MetricModel::sphere(4, 1.0).unwrap();
    let omega = bump(4);
    let hat = MetricModel::conformal_rescale(omega.clone(), &base);
    let e = ellipsoid(4);
    let s = Hypersurface::new(e.defining.clone(), 1.0, base.clone()).unwrap();
    let sh = Hypersurface::new(e.defining, 1.0, hat.clone()).unwrap();
    for w in [r(0, 1), r(-1, 2), r(1, 1)] {
        let u = density(&base, w, |y| (&y[0] * &y[3]).cos() + &(&y[1] * &y[2]));
        let uh = u.rescale(&omega, &base, hat.scale.clone()).unwrap();
        for p in s.sample(10, 3) {
            for ell in 0..=3 {
                let a = delta_ell(ell, &u, &s, &p).unwrap();
                let b = delta_ell(ell, &uh, &sh, &p).unwrap();
                let f = (crate::fields_charts::field::weight_f64(a.weight) * omega.value(&p)).exp();
                let scale = a.value.abs().max(1e-2) * f;
                assert!((f * a.value - b.value).abs() < 1e-8 * scale, "ℓ={ell} w={w}: {} vs {}", f * a.value, b.value);
            }
        }
    }
}

#[test]
fn dxs_identity() {
    let s = ellipsoid(4);
    let p = s.sample(11, 1).remove(0);
    let chart = IntrinsicChart::build(&s, &p, 3).unwrap();
    let geo = chart.geometry().unwrap();
    let z = Jet::coordinates(&[0.0; 3], 3);
    let f = (&z[0] * &z[1]).exp() + &z[2].scale(0.4) + 0.7;
    let (lhs, rhs) = dxs_check(&geo, &f, r(0, 1)).unwrap();
    assert!((lhs - 15.0 * f.value()).abs() < 1e-12 && (rhs - lhs).abs() < 1e-12);
    for w in [r(1, 1), r(-1, 2), r(2, 3)] {
        let (lhs, rhs) = dxs_check(&geo, &f, w).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn intrinsic_chart_lies_on_the_surface() {
    let s = ellipsoid(5);
    let p = s.sample(12, 1).remove(0);
    let chart = IntrinsicChart::build(&s, &p, 4).unwrap();
    let x = s.defining.eval(&chart.phi);
    assert!(x.max_abs() < 1e-12);
    let geo = chart.geometry().unwrap();
    assert_eq!(geo.dim, 4);
}

#[test]
fn normal_orders() {
    let s = ellipsoid(4);
    let p = s.sample(13, 1).remove(0);
    let restrict = |u: &TractorField| delta_ell(0, u, &s, &p).map(|v| v.value);
    let rep = normal_order_probe(&restrict, &s, 0, r(0, 1), 1).unwrap();
    assert!(rep.nonzero_at_r && rep.vanishes_at_order_r_plus_1);
    let robin = |u: &TractorField| robin_delta(u, &s, &p).map(|v| v.value);
    let rep = normal_order_probe(&robin, &s, 1, r(1, 2), 2).unwrap();
    assert!(rep.nonzero_at_r && rep.vanishes_at_order_r_plus_1, "{rep:?}");
    let s5 = ellipsoid(5);
    let p5 = s5.sample(14, 1).remove(0);
    let d2 = |u: &TractorField| delta_ell(2, u, &s5, &p5).map(|v| v.value);
    let rep = normal_order_probe(&d2, &s5, 2, r(-1, 2), 3).unwrap();
    assert!(rep.nonzero_at_r && rep.vanishes_at_order_r_plus_1, "{rep:?}");
}

#[test]
fn robin_constant_matches_reciprocal() {
    for (d, w) in [(4, r(0, 1)), (4, r(1, 1)), (5, r(-1, 2))] {
        let c = measure_robin_constant(d, w, 20, 5).unwrap();
        let expect = 1.0 / (d as f64 + 2.0 * crate::fields_charts::field::weight_f64(w) - 2.0);
        assert!(c.max_rel_spread < 1e-9 && (c.c - expect).abs() < 1e-9, "{c:?}");
    }
}
