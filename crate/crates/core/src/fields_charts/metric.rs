use std::fmt;
use std::sync::Arc;

use crate::error::{CalcError, Result};
use crate::fields_charts::chart::{Chart, ChartDomain};
use crate::fields_charts::field::{ScalarJetField, ScaleTag};
use crate::jet::Jet;

pub type MetricRule = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// Closed-form metric families.
#[derive(Clone)]
pub enum MetricFamily {
    Flat,
    /// Round sphere of the given radius in a stereographic chart; `antipodal`
    /// selects the chart centred at the opposite pole.
    Sphere { radius: f64, antipodal: bool },
    /// `4(1-|y|²)^{-2} δ` on the open unit ball.
    HyperbolicBall,
    /// `e^{2ω} · base`.
    ConformalRescale { omega: ScalarJetField, base: Box<MetricModel> },
    /// Metric induced on the cap `I·X > 0` of the null cone, read in the flat chart.
    CapPullback { ambient: Vec<f64> },
}

impl MetricFamily {
    pub fn name(&self) -> String {
        match self {
            MetricFamily::Flat => "flat".into(),
            MetricFamily::Sphere { radius, antipodal } => {
                format!("sphere(r={radius}{})", if *antipodal { ",antipodal" } else { "" })
            }
            MetricFamily::HyperbolicBall => "hyperbolic_ball".into(),
            MetricFamily::ConformalRescale { omega, base } => {
                format!("conformal_rescale({}, {})", omega.label(), base.family.name())
            }
            MetricFamily::CapPullback { ambient } => format!("cap_pullback({ambient:?})"),
        }
    }
}

/// A Riemannian metric on a chart, given componentwise over jet arithmetic.
#[derive(Clone)]
pub struct MetricModel {
    pub chart: Chart,
    pub family: MetricFamily,
    pub scale: ScaleTag,
    rule: Arc<MetricRule>,
}

impl fmt::Debug for MetricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricModel({}, d={})", self.family.name(), self.chart.dim)
    }
}

fn conformally_flat(y: &[Jet], factor: Jet) -> Vec<Jet> {
    let d = y.len();
    let zero = factor.lift(0.0);
    let mut g = vec![zero; d * d];
    for a in 0..d {
        g[a * d + a] = factor.clone();
    }
    g
}

fn r2(y: &[Jet]) -> Jet {
    y.iter().fold(y[0].lift(0.0), |acc, v| &acc + &(v * v))
}

/// Ambient quadratic form: antidiagonal on the first/last slots, identity between.
pub fn ambient_pairing(a: &[Jet], b: &[Jet]) -> Jet {
    let n = a.len();
    let mut s = &(&a[0] * &b[n - 1]) + &(&a[n - 1] * &b[0]);
    for i in 1..n - 1 {
        s = &s + &(&a[i] * &b[i]);
    }
    s
}

/// Null-cone lift `X(y) = (1, y, -|y|²/2)` of the flat chart.
pub fn cone_lift(y: &[Jet]) -> Vec<Jet> {
    let mut x = Vec::with_capacity(y.len() + 2);
    x.push(y[0].lift(1.0));
    x.extend(y.iter().cloned());
    x.push(r2(y).scale(-0.5));
    x
}

/// `σ(y) = H(I, X(y))` for a constant ambient vector `I`.
pub fn cone_scale(ambient: &[f64], y: &[Jet]) -> Jet {
    let x = cone_lift(y);
    let i: Vec<Jet> = ambient.iter().map(|&v| y[0].lift(v)).collect();
    ambient_pairing(&i, &x)
}

impl MetricModel {
    pub fn from_rule(
        chart: Chart,
        family: MetricFamily,
        scale: ScaleTag,
        rule: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        MetricModel { chart, family, scale, rule: Arc::new(rule) }
    }

    pub fn flat(d: usize) -> Result<Self> {
        let chart = Chart::new(d, ChartDomain::Whole { sample_radius: 1.0 }, "euclidean")?;
        Ok(Self::from_rule(chart, MetricFamily::Flat, ScaleTag::new("flat"), |y| {
            conformally_flat(y, y[0].lift(1.0))
        }))
    }

    pub fn sphere(d: usize, radius: f64) -> Result<Self> {
        Self::sphere_chart(d, radius, false)
    }

    /// Second stereographic chart, centred at the antipode; related to the
    /// first by `z ↦ z/|z|²`.
    pub fn sphere_antipodal(d: usize, radius: f64) -> Result<Self> {
        Self::sphere_chart(d, radius, true)
    }

    fn sphere_chart(d: usize, radius: f64, antipodal: bool) -> Result<Self> {
        if radius <= 0.0 {
            return Err(CalcError::Argument("sphere radius must be positive".into()));
        }
        let chart = Chart::new(d, ChartDomain::Whole { sample_radius: 2.0 }, "stereographic")?;
        let k = 4.0 * radius * radius;
        Ok(Self::from_rule(
            chart,
            MetricFamily::Sphere { radius, antipodal },
            ScaleTag::new(format!("round(r={radius})")),
            move |y| {
                let f = (&r2(y) + 1.0).powi(-2).scale(k);
                conformally_flat(y, f)
            },
        ))
    }

    pub fn hyperbolic_ball(d: usize) -> Result<Self> {
        let chart = Chart::new(d, ChartDomain::Ball { radius: 1.0 }, "unit ball")?;
        Ok(Self::from_rule(chart, MetricFamily::HyperbolicBall, ScaleTag::new("hyperbolic"), |y| {
            let one_minus = (-&r2(y)) + 1.0;
            let f = one_minus.powi(-2).scale(4.0);
            conformally_flat(y, f)
        }))
    }

    /// `e^{2ω} · base`, exactly.
    pub fn conformal_rescale(omega: ScalarJetField, base: &MetricModel) -> Self {
        let b = base.rule.clone();
        let w = omega.clone();
        let scale = ScaleTag::new(format!("e^(2*{})*{}", omega.label(), base.scale));
        Self::from_rule(
            base.chart.clone(),
            MetricFamily::ConformalRescale { omega, base: Box::new(base.clone()) },
            scale,
            move |y| {
                let f = w.eval(y).scale(2.0).exp();
                b(y).into_iter().map(|gij| &gij * &f).collect()
            },
        )
    }

    /// Metric induced by the ambient form on the section `I·X = 1` of the null
    /// cone, pulled back to the flat chart. Defined where `σ = H(I, X) > 0`.
    pub fn cap_pullback(ambient: &[f64]) -> Result<Self> {
        if ambient.len() < 5 {
            return Err(CalcError::Argument("ambient vector needs d+2 ≥ 5 entries".into()));
        }
        let d = ambient.len() - 2;
        let a = ambient.to_vec();
        let sigma = ScalarJetField::new(d, "H(I,X)", {
            let a = a.clone();
            move |y| cone_scale(&a, y)
        });
        let chart = Chart::new(d, ChartDomain::Positive(sigma), "cap I·X > 0")?;
        Ok(Self::from_rule(
            chart,
            MetricFamily::CapPullback { ambient: a.clone() },
            ScaleTag::new("cap"),
            move |y| cap_components(&a, y),
        ))
    }

    pub fn dim(&self) -> usize {
        self.chart.dim
    }

    /// Metric components (row-major `d×d`) over arbitrary coordinate jets.
    pub fn components(&self, y: &[Jet]) -> Vec<Jet> {
        (self.rule)(y)
    }

    pub fn components_at(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.chart.check(p)?;
        Ok(self.components(&Jet::coordinates(p, order)))
    }

    pub fn values_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.components_at(p, 0)?.iter().map(|j| j.value()).collect())
    }

    /// Symmetric and positive definite at `p` (Cholesky test).
    pub fn is_positive_definite(&self, p: &[f64]) -> Result<bool> {
        let g = self.values_at(p)?;
        let d = self.dim();
        for a in 0..d {
            for b in 0..a {
                if (g[a * d + b] - g[b * d + a]).abs() > 1e-12 * (1.0 + g[a * d + b].abs()) {
                    return Ok(false);
                }
            }
        }
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
                if i == j {
                    let v = g[i * d + i] - s;
                    if v <= 0.0 {
                        return Ok(false);
                    }
                    l[i * d + i] = v.sqrt();
                } else {
                    l[i * d + j] = (g[i * d + j] - s) / l[j * d + j];
                }
            }
        }
        Ok(true)
    }
}

/// `H(∂_a X', ∂_b X')` with `X' = X/σ`, where `∂_a X = (0, e_a, -y_a)` is
/// written out so no jet order is spent on differentiation.
fn cap_components(ambient: &[f64], y: &[Jet]) -> Vec<Jet> {
    let d = y.len();
    let x = cone_lift(y);
    let sigma = cone_scale(ambient, y);
    let inv = sigma.recip();
    let inv2 = &inv * &inv;
    let i_vec: Vec<Jet> = ambient.iter().map(|&v| y[0].lift(v)).collect();
    let tangent: Vec<Vec<Jet>> = (0..d)
        .map(|a| {
            let mut v = vec![y[0].lift(0.0); d + 2];
            v[a + 1] = y[0].lift(1.0);
            v[d + 1] = -&y[a];
            v
        })
        .collect();
    let dxp: Vec<Vec<Jet>> = tangent
        .iter()
        .map(|t| {
            let ds = ambient_pairing(&i_vec, t);
            let f = &ds * &inv2;
            t.iter().zip(&x).map(|(tc, xc)| &(tc * &inv) - &(xc * &f)).collect()
        })
        .collect();
    let mut g = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            g.push(ambient_pairing(&dxp[a], &dxp[b]));
        }
    }
    g
}
