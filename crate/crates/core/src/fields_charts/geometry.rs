//! Levi-Civita connection and curvature from metric jets.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::field::DensityField;
use crate::fields_charts::local::{LocalField, Slot};
use crate::fields_charts::metric::MetricModel;
use crate::fields_charts::tensor::TensorValue;
use crate::jet::{self, Jet};

/// Metric, connection and curvature jets at one point.
///
/// Index layout: `g[a*d+b]`, `gamma[(c*d+a)*d+b] = Γ^c_ab`,
/// `riemann[((a*d+b)*d+c)*d+e] = R_ab^c_e` with
/// `(∇_a∇_b − ∇_b∇_a)V^c = R_ab^c_e V^e`.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub dim: usize,
    pub point: Vec<f64>,
    pub order: usize,
    pub g: Vec<Jet>,
    pub ginv: Vec<Jet>,
    pub gamma: Vec<Jet>,
    pub riemann: Vec<Jet>,
    pub ricci: Vec<Jet>,
    pub scalar: Jet,
    pub schouten: Vec<Jet>,
    /// `P_a^b = P_ac g^{cb}`.
    pub schouten_mixed: Vec<Jet>,
    pub j: Jet,
}

impl LocalGeometry {
    pub fn at(metric: &MetricModel, p: &[f64], order: usize) -> Result<Self> {
        let g = metric.components_at(p, order)?;
        Self::from_components(p.to_vec(), g)
    }

    /// Build from metric component jets (any chart, e.g. an induced one).
    pub fn from_components(point: Vec<f64>, g: Vec<Jet>) -> Result<Self> {
        let d = (g.len() as f64).sqrt().round() as usize;
        if d * d != g.len() || d < 3 {
            return Err(CalcError::Argument(format!(
                "metric needs d×d components with d ≥ 3, got {}",
                g.len()
            )));
        }
        let order = g.iter().map(|j| j.order()).min().unwrap();
        if order < 2 {
            return Err(CalcError::Capability(format!(
                "curvature needs metric jets of order ≥ 2, have {order}"
            )));
        }
        let ginv = jet::inverse(&g, d)?;
        let mut dg = Vec::with_capacity(d * d * d);
        for e in 0..d {
            for ab in 0..d * d {
                dg.push(g[ab].d(e)?);
            }
        }
        let dgi = |e: usize, a: usize, b: usize| &dg[(e * d + a) * d + b];
        let mut first = Vec::with_capacity(d * d * d);
        for e in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let s = &(dgi(a, b, e) + dgi(b, a, e)) - dgi(e, a, b);
                    first.push(s.scale(0.5));
                }
            }
        }
        let mut gamma = Vec::with_capacity(d * d * d);
        for c in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let mut s = &ginv[c * d] * &first[a * d + b];
                    for e in 1..d {
                        s = &s + &(&ginv[c * d + e] * &first[(e * d + a) * d + b]);
                    }
                    gamma.push(s);
                }
            }
        }
        let gm = |c: usize, a: usize, b: usize| &gamma[(c * d + a) * d + b];
        let mut dgamma = Vec::with_capacity(d * d * d * d);
        for a in 0..d {
            for cab in 0..d * d * d {
                dgamma.push(gamma[cab].d(a)?);
            }
        }
        let dgm = |x: usize, c: usize, a: usize, b: usize| &dgamma[((x * d + c) * d + a) * d + b];
        let zero = dgamma[0].lift(0.0);
        let mut riemann = vec![zero.clone(); d * d * d * d];
        let ri = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
        for a in 0..d {
            for b in (a + 1)..d {
                for c in 0..d {
                    for e in 0..d {
                        let mut s = dgm(a, c, b, e) - dgm(b, c, a, e);
                        for f in 0..d {
                            s = &s + &(gm(c, a, f) * gm(f, b, e));
                            s = &s - &(gm(c, b, f) * gm(f, a, e));
                        }
                        riemann[ri(b, a, c, e)] = -&s;
                        riemann[ri(a, b, c, e)] = s;
                    }
                }
            }
        }
        let mut ricci = Vec::with_capacity(d * d);
        for b in 0..d {
            for e in 0..d {
                let terms: Vec<&Jet> = (0..d).map(|a| &riemann[ri(a, b, a, e)]).collect();
                ricci.push(jet::sum(terms).unwrap());
            }
        }
        let mut scalar = zero.clone();
        for b in 0..d {
            for e in 0..d {
                scalar = &scalar + &(&ginv[b * d + e] * &ricci[b * d + e]);
            }
        }
        let df = d as f64;
        let j = scalar.scale(1.0 / (2.0 * (df - 1.0)));
        let schouten: Vec<Jet> = (0..d * d)
            .map(|ab| (&ricci[ab] - &(&j * &g[ab])).scale(1.0 / (df - 2.0)))
            .collect();
        let mut schouten_mixed = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let mut s = zero.clone();
                for c in 0..d {
                    s = &s + &(&schouten[a * d + c] * &ginv[c * d + b]);
                }
                schouten_mixed.push(s);
            }
        }
        Ok(LocalGeometry {
            dim: d,
            point,
            order,
            g,
            ginv,
            gamma,
            riemann,
            ricci,
            scalar,
            schouten,
            schouten_mixed,
            j,
        })
    }

    /// `Γ^c_ab`.
    pub fn christoffel(&self, c: usize, a: usize, b: usize) -> &Jet {
        &self.gamma[(c * self.dim + a) * self.dim + b]
    }

    /// Conformal metric as a weight-2 `Down,Down` field.
    pub fn metric_field(&self) -> LocalField {
        LocalField::new(self.dim, vec![Slot::Down, Slot::Down], self.g.clone(), Rational64::from(2))
    }

    pub fn curvature_pack(&self) -> CurvaturePack {
        let d = self.dim;
        let v = |x: &[Jet]| x.iter().map(|j| j.value()).collect::<Vec<f64>>();
        let g = v(&self.g);
        let p = v(&self.schouten);
        let rup = v(&self.riemann);
        let mut r = vec![0.0; d * d * d * d];
        let mut w = vec![0.0; d * d * d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let mut s = 0.0;
                        for f in 0..d {
                            s += g[c * d + f] * rup[((a * d + b) * d + f) * d + e];
                        }
                        let idx = ((a * d + b) * d + c) * d + e;
                        r[idx] = s;
                        let kulkarni = g[c * d + a] * p[b * d + e] - g[c * d + b] * p[a * d + e]
                            + g[e * d + b] * p[a * d + c]
                            - g[e * d + a] * p[b * d + c];
                        w[idx] = s - kulkarni;
                    }
                }
            }
        }
        CurvaturePack {
            dim: d,
            point: self.point.clone(),
            gamma: v(&self.gamma),
            riemann: r,
            ricci: v(&self.ricci),
            scalar: self.scalar.value(),
            weyl: w,
            schouten: p,
            j: self.j.value(),
            metric: g,
        }
    }
}

/// Curvature quantities at a point, all indices down except `Γ^c_ab`.
#[derive(Clone, Debug, Serialize)]
pub struct CurvaturePack {
    pub dim: usize,
    pub point: Vec<f64>,
    /// `Γ^c_ab` at `(c*d+a)*d+b`.
    pub gamma: Vec<f64>,
    /// `R_abcd` at `((a*d+b)*d+c)*d+e`.
    pub riemann: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub weyl: Vec<f64>,
    pub schouten: Vec<f64>,
    pub j: f64,
    pub metric: Vec<f64>,
}

impl CurvaturePack {
    /// Sectional curvature `R_abce u^a v^b u^c v^e / (|u|²|v|² − (u·v)²)`.
    pub fn sectional_curvature(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = self.dim;
        let g = &self.metric;
        let dot = |x: &[f64], y: &[f64]| -> f64 {
            (0..d).map(|a| (0..d).map(|b| g[a * d + b] * x[a] * y[b]).sum::<f64>()).sum()
        };
        let mut num = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        num += self.riemann[((a * d + b) * d + c) * d + e] * u[a] * v[b] * u[c] * v[e];
                    }
                }
            }
        }
        num / (dot(u, u) * dot(v, v) - dot(u, v).powi(2))
    }

    /// `max |R_abcd − (W + 2g_{c[a}P_{b]d} + 2g_{d[b}P_{a]c})|`.
    pub fn decomposition_defect(&self) -> f64 {
        let d = self.dim;
        let (g, p) = (&self.metric, &self.schouten);
        let mut m: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let idx = ((a * d + b) * d + c) * d + e;
                        let rebuilt = self.weyl[idx] + g[c * d + a] * p[b * d + e]
                            - g[c * d + b] * p[a * d + e]
                            + g[e * d + b] * p[a * d + c]
                            - g[e * d + a] * p[b * d + c];
                        m = m.max((self.riemann[idx] - rebuilt).abs());
                    }
                }
            }
        }
        m
    }

    /// `max |R_a[bce]|` (first Bianchi identity).
    pub fn bianchi_defect(&self) -> f64 {
        let d = self.dim;
        let r = |a: usize, b: usize, c: usize, e: usize| self.riemann[((a * d + b) * d + c) * d + e];
        let mut m: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        m = m.max((r(a, b, c, e) + r(a, c, e, b) + r(a, e, b, c)).abs());
                    }
                }
            }
        }
        m
    }

    /// Largest trace of the Weyl tensor over any index pair.
    pub fn weyl_trace_defect(&self) -> f64 {
        let d = self.dim;
        let ginv = invert_small(&self.metric, d);
        let w = |a: usize, b: usize, c: usize, e: usize| self.weyl[((a * d + b) * d + c) * d + e];
        let mut m: f64 = 0.0;
        for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            for x in 0..d {
                for y in 0..d {
                    let mut s = 0.0;
                    for p in 0..d {
                        for q in 0..d {
                            let mut idx = [0usize; 4];
                            let mut free = [x, y].into_iter();
                            for (k, slot) in idx.iter_mut().enumerate() {
                                *slot = if k == i {
                                    p
                                } else if k == j {
                                    q
                                } else {
                                    free.next().unwrap()
                                };
                            }
                            s += ginv[p * d + q] * w(idx[0], idx[1], idx[2], idx[3]);
                        }
                    }
                    m = m.max(s.abs());
                }
            }
        }
        m
    }
}

/// Dense inverse of a small float matrix (Gauss-Jordan).
pub fn invert_small(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs())).unwrap();
        for k in 0..n {
            m.swap(piv * n + k, col * n + k);
            inv.swap(piv * n + k, col * n + k);
        }
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        m[row * n + k] -= f * m[col * n + k];
                        inv[row * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    inv
}

/// Curvature quantities of `metric` at `p`.
pub fn curvature_pack(metric: &MetricModel, p: &[f64]) -> Result<CurvaturePack> {
    Ok(LocalGeometry::at(metric, p, 2)?.curvature_pack())
}

/// `∇` of a density in its own scale (plain differentiation of the
/// representative): a weight-`w` covector.
pub fn levi_civita_apply(density: &DensityField, metric: &MetricModel, p: &[f64]) -> Result<TensorValue> {
    check_scale(density, metric)?;
    metric.chart.check(p)?;
    let j = density.rep.jet_at(p, 1)?;
    Ok(TensorValue::new(j.gradient()?, vec![Slot::Down], density.weight, p, metric.scale.clone()))
}

/// `∇` of a general slot field at `p`, returned as values.
pub fn levi_civita_apply_local(field: &LocalField, geo: &LocalGeometry, metric: &MetricModel) -> Result<TensorValue> {
    let f = field.covariant_derivative(geo)?;
    Ok(TensorValue::new(f.values(), f.slots.clone(), f.weight, &geo.point, metric.scale.clone()))
}

/// `Δ = -g^{ab}∇_a∇_b` of a density representative.
pub fn laplacian(density: &DensityField, metric: &MetricModel, p: &[f64]) -> Result<f64> {
    check_scale(density, metric)?;
    let geo = LocalGeometry::at(metric, p, 2)?;
    let u = LocalField::scalar(density.rep.jet_at(p, 2)?, density.weight);
    Ok(u.laplacian(&geo)?.value())
}

fn check_scale(density: &DensityField, metric: &MetricModel) -> Result<()> {
    if density.scale != metric.scale {
        return Err(CalcError::Scale(format!(
            "density represented in scale {}, metric scale is {}",
            density.scale, metric.scale
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields_charts::chart::{Chart, ChartDomain};
    use crate::fields_charts::field::{ScalarJetField, ScaleTag};
    use crate::fields_charts::metric::MetricFamily;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn flat_curvature_vanishes() {
        let m = MetricModel::flat(4).unwrap();
        let c = curvature_pack(&m, &[0.3, 0.1, -0.2, 0.5]).unwrap();
        assert!(max_abs(&c.gamma) == 0.0 && max_abs(&c.riemann) == 0.0);
        assert!(max_abs(&c.schouten) <= 1e-12 && c.j.abs() <= 1e-12 && max_abs(&c.weyl) <= 1e-12);
    }

    #[test]
    fn unit_sphere_schouten_is_half_metric() {
        // closed form: Ric = (d-1) g for the unit sphere, so P = g/2, J = d/2
        let m = MetricModel::sphere(4, 1.0).unwrap();
        for p in m.chart.sample(3, 10) {
            let c = curvature_pack(&m, &p).unwrap();
            for (pp, g) in c.schouten.iter().zip(&c.metric) {
                assert!((pp - 0.5 * g).abs() < 1e-10);
            }
            assert!((c.j - 2.0).abs() < 1e-10);
            assert!(max_abs(&c.weyl) < 1e-10);
        }
    }

    #[test]
    fn sphere_radius_scaling() {
        let m = MetricModel::sphere(5, 2.0).unwrap();
        let c = curvature_pack(&m, &[0.1, 0.2, 0.3, -0.1, 0.0]).unwrap();
        // Ric = (d-1)/r² g
        for (r, g) in c.ricci.iter().zip(&c.metric) {
            assert!((r - 4.0 / 4.0 * g).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperbolic_ball_is_einstein() {
        let m = MetricModel::hyperbolic_ball(4).unwrap();
        for p in m.chart.sample(11, 20) {
            let c = curvature_pack(&m, &p).unwrap();
            assert!((c.j + 2.0).abs() < 1e-10);
            for (r, g) in c.ricci.iter().zip(&c.metric) {
                assert!((r + 3.0 * g).abs() < 1e-9 * g.abs().max(1.0));
            }
        }
    }

    fn generic_metric(d: usize) -> MetricModel {
        // δ + small symmetric perturbation; not conformally flat
        let chart = Chart::new(d, ChartDomain::Whole { sample_radius: 1.0 }, "generic").unwrap();
        MetricModel::from_rule(chart, MetricFamily::Flat, ScaleTag::new("generic"), move |y| {
            let mut g = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let mut e = (&y[a] * &y[b]).scale(0.1) + &y[(a + b) % d].sin().scale(0.05);
                    if a == b {
                        e = e + 1.0;
                    }
                    g.push(e);
                }
            }
            g
        })
    }

    #[test]
    fn bianchi_and_decomposition_on_generic_metric() {
        let m = generic_metric(4);
        for p in m.chart.sample(5, 10) {
            let c = curvature_pack(&m, &p).unwrap();
            assert!(c.bianchi_defect() < 1e-10);
            assert!(c.decomposition_defect() < 1e-10);
            assert!(c.weyl_trace_defect() < 1e-10);
            assert!(max_abs(&c.weyl) > 1e-4, "generic metric should carry Weyl curvature");
        }
    }

    #[test]
    fn weyl_is_conformally_covariant() {
        let base = generic_metric(4);
        let omega = ScalarJetField::new(4, "w", |y| (&y[0] * &y[1]).scale(0.3) + &y[2].sin().scale(0.2));
        let hat = MetricModel::conformal_rescale(omega.clone(), &base);
        for p in base.chart.sample(9, 10) {
            let c0 = curvature_pack(&base, &p).unwrap();
            let c1 = curvature_pack(&hat, &p).unwrap();
            let f = (2.0 * omega.value(&p)).exp();
            let scale = max_abs(&c0.weyl);
            for (a, b) in c1.weyl.iter().zip(&c0.weyl) {
                assert!((a - f * b).abs() <= 1e-9 * scale * f);
            }
        }
    }

    #[test]
    fn schouten_of_conformally_flat_metric_matches_closed_form() {
        // ĝ = e^{2ω}δ: P̂ = -∇²ω + dω⊗dω - ½|dω|²δ; ω = 0.2 y0² + 0.3 y1 y2 - 0.1 y3
        let d = 4;
        let omega = ScalarJetField::new(d, "w", |y| {
            (&y[0] * &y[0]).scale(0.2) + (&y[1] * &y[2]).scale(0.3) - y[3].scale(0.1)
        });
        let m = MetricModel::conformal_rescale(omega, &MetricModel::flat(d).unwrap());
        let p = [0.3, -0.2, 0.4, 0.1];
        let grad = [0.4 * p[0], 0.3 * p[2], 0.3 * p[1], -0.1];
        let mut hess = [0.0; 16];
        hess[0] = 0.4;
        hess[4 + 2] = 0.3;
        hess[2 * 4 + 1] = 0.3;
        let g2: f64 = grad.iter().map(|x| x * x).sum();
        let c = curvature_pack(&m, &p).unwrap();
        for a in 0..d {
            for b in 0..d {
                let expect = -hess[a * 4 + b] + grad[a] * grad[b] - if a == b { 0.5 * g2 } else { 0.0 };
                assert!((c.schouten[a * 4 + b] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_sign_convention() {
        let flat = MetricModel::flat(4).unwrap();
        let x = ScalarJetField::radius_squared(4).scale(-0.5).add(&ScalarJetField::constant(4, 0.5));
        let dens = DensityField::new(Rational64::from(1), flat.scale.clone(), x.clone());
        let v = laplacian(&dens, &flat, &[0.2, 0.1, 0.3, -0.4]).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let c = DensityField::new(Rational64::from(0), flat.scale.clone(), ScalarJetField::constant(4, 3.0));
        assert!(laplacian(&c, &flat, &[0.2, 0.1, 0.3, -0.4]).unwrap().abs() < 1e-15);
        // Hessian of x is -δ
        let geo = LocalGeometry::at(&flat, &[0.2, 0.1, 0.3, -0.4], 2).unwrap();
        let u = LocalField::scalar(x.jet_at(&[0.2, 0.1, 0.3, -0.4], 2).unwrap(), Rational64::from(1));
        let h = u.covariant_derivative(&geo).unwrap().covariant_derivative(&geo).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let e = if a == b { -1.0 } else { 0.0 };
                assert!((h.comps[a * 4 + b].value() - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_degree_one_harmonic_eigenvalue() {
        // x_1 = 2 z_1/(1+|z|²) on the unit sphere: Δ x_1 = d x_1
        let d = 4;
        let m = MetricModel::sphere(d, 1.0).unwrap();
        let h = ScalarJetField::new(d, "x1", |y| {
            let r2 = y.iter().fold(y[0].lift(0.0), |a, v| &a + &(v * v));
            y[0].scale(2.0).div(&(r2 + 1.0))
        });
        let dens = DensityField::new(Rational64::from(0), m.scale.clone(), h.clone());
        for p in m.chart.sample(4, 10) {
            let v = laplacian(&dens, &m, &p).unwrap();
            assert!((v - d as f64 * h.value(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_is_parallel() {
        for m in [MetricModel::sphere(4, 1.5).unwrap(), generic_metric(4)] {
            let geo = LocalGeometry::at(&m, &[0.1, 0.3, -0.2, 0.25], 3).unwrap();
            let dg = geo.metric_field().covariant_derivative(&geo).unwrap();
            assert!(dg.values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn scale_mismatch_is_reported() {
        let flat = MetricModel::flat(4).unwrap();
        let sph = MetricModel::sphere(4, 1.0).unwrap();
        let dens = DensityField::new(Rational64::from(0), sph.scale.clone(), ScalarJetField::constant(4, 1.0));
        assert!(matches!(laplacian(&dens, &flat, &[0.0; 4]), Err(CalcError::Scale(_))));
    }

    #[test]
    fn raise_lower_round_trip() {
        let m = MetricModel::sphere(4, 1.0).unwrap();
        let p = [0.3, 0.1, 0.2, -0.5];
        let x = ScalarJetField::new(4, "f", |y| (&y[0] * &y[1]).exp() + y[3].clone());
        let dens = DensityField::new(Rational64::from(1), m.scale.clone(), x);
        let v = levi_civita_apply(&dens, &m, &p).unwrap();
        let c = curvature_pack(&m, &p).unwrap();
        let ginv = invert_small(&c.metric, 4);
        let back = v.raise(0, &ginv).unwrap().lower(0, &c.metric).unwrap();
        assert_eq!(back.weight, v.weight);
        for (a, b) in back.comps.iter().zip(&v.comps) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }
}
