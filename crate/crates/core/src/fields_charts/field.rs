use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::ToPrimitive;

use crate::error::{CalcError, Result};
use crate::jet::Jet;

/// Default jet order budget.
pub const DEFAULT_JET_ORDER: usize = 6;

pub type JetRule = dyn Fn(&[Jet]) -> Jet + Send + Sync;

/// Identifies the metric whose induced trivialisation represents densities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct ScaleTag(pub String);

impl ScaleTag {
    pub fn new(s: impl Into<String>) -> Self {
        ScaleTag(s.into())
    }
}

impl fmt::Display for ScaleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A scalar function on a chart, written once over jet arithmetic so that it
/// can be expanded to any order at any point.
#[derive(Clone)]
pub struct ScalarJetField {
    dim: usize,
    max_order: usize,
    label: String,
    rule: Arc<JetRule>,
}

impl fmt::Debug for ScalarJetField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarJetField({}, d={}, m={})", self.label, self.dim, self.max_order)
    }
}

impl ScalarJetField {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        rule: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    ) -> Self {
        ScalarJetField { dim, max_order: usize::MAX, label: label.into(), rule: Arc::new(rule) }
    }

    /// Cap the jet order this field may be expanded to.
    pub fn with_max_order(mut self, m: usize) -> Self {
        self.max_order = m;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Apply the rule to coordinate jets of any space.
    pub fn eval(&self, y: &[Jet]) -> Jet {
        (self.rule)(y)
    }

    pub fn jet_at(&self, p: &[f64], order: usize) -> Result<Jet> {
        if p.len() != self.dim {
            return Err(CalcError::Argument(format!(
                "field {} has dimension {}, point has {}",
                self.label,
                self.dim,
                p.len()
            )));
        }
        if order > self.max_order {
            return Err(CalcError::Capability(format!(
                "field {} supports jets up to order {}, requested {}",
                self.label, self.max_order, order
            )));
        }
        Ok(self.eval(&Jet::coordinates(p, order)))
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.eval(&Jet::coordinates(p, 0)).value()
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.eval(&Jet::coordinates(p, 1)).gradient().expect("order-1 jet")
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarJetField::new(dim, format!("{c}"), move |y| y[0].lift(c))
    }

    pub fn coordinate(dim: usize, i: usize) -> Self {
        ScalarJetField::new(dim, format!("y{i}"), move |y| y[i].clone())
    }

    /// `Σ y_i²`.
    pub fn radius_squared(dim: usize) -> Self {
        ScalarJetField::new(dim, "|y|^2", |y| {
            y.iter().fold(y[0].lift(0.0), |acc, v| &acc + &(v * v))
        })
    }

    fn combine(
        &self,
        o: &ScalarJetField,
        label: String,
        f: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static,
    ) -> Self {
        let (a, b) = (self.rule.clone(), o.rule.clone());
        ScalarJetField {
            dim: self.dim,
            max_order: self.max_order.min(o.max_order),
            label,
            rule: Arc::new(move |y| f(a(y), b(y))),
        }
    }

    pub fn add(&self, o: &ScalarJetField) -> Self {
        self.combine(o, format!("({})+({})", self.label, o.label), |a, b| &a + &b)
    }

    pub fn sub(&self, o: &ScalarJetField) -> Self {
        self.combine(o, format!("({})-({})", self.label, o.label), |a, b| &a - &b)
    }

    pub fn mul(&self, o: &ScalarJetField) -> Self {
        self.combine(o, format!("({})*({})", self.label, o.label), |a, b| &a * &b)
    }

    pub fn map(&self, label: &str, f: impl Fn(Jet) -> Jet + Send + Sync + 'static) -> Self {
        let a = self.rule.clone();
        ScalarJetField {
            dim: self.dim,
            max_order: self.max_order,
            label: format!("{label}({})", self.label),
            rule: Arc::new(move |y| f(a(y))),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(&format!("{s}*"), move |j| j.scale(s))
    }

    pub fn exp(&self) -> Self {
        self.map("exp", |j| j.exp())
    }

    pub fn powf(&self, a: f64) -> Self {
        self.map(&format!("pow{a}"), move |j| j.powf(a))
    }

    pub fn powi(&self, n: i32) -> Self {
        self.map(&format!("pow{n}"), move |j| j.powi(n))
    }
}

/// Conformal density of weight `w`, stored as its representative in one scale.
#[derive(Clone, Debug)]
pub struct DensityField {
    pub weight: Rational64,
    pub scale: ScaleTag,
    pub rep: ScalarJetField,
}

pub fn weight_f64(w: Rational64) -> f64 {
    w.to_f64().expect("finite weight")
}

impl DensityField {
    pub fn new(weight: Rational64, scale: ScaleTag, rep: ScalarJetField) -> Self {
        DensityField { weight, scale, rep }
    }

    /// Representative in the scale `e^{2ω}g`: multiply by `e^{wω}`.
    pub fn rescale(&self, omega: &ScalarJetField, new_scale: ScaleTag) -> DensityField {
        let w = weight_f64(self.weight);
        let factor = omega.scale(w).exp();
        DensityField { weight: self.weight, scale: new_scale, rep: self.rep.mul(&factor) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_round_trip_is_identity() {
        let d = 4;
        let u = ScalarJetField::new(d, "u", |y| (&y[0] * &y[1]).add_scalar(1.5).sin());
        let omega = ScalarJetField::new(d, "w", |y| (&y[2] * 0.3) + &(&y[3] * &y[0]) * 0.2);
        let rho = DensityField::new(Rational64::new(-3, 2), ScaleTag::new("flat"), u);
        let there = rho.rescale(&omega, ScaleTag::new("hat"));
        let back = there.rescale(&omega.scale(-1.0), ScaleTag::new("flat"));
        for p in [[0.1, 0.2, 0.3, 0.4], [-0.5, 0.3, 0.0, 0.9]] {
            let a = rho.rep.jet_at(&p, 3).unwrap();
            let b = back.rep.jet_at(&p, 3).unwrap();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn order_budget_is_enforced() {
        let u = ScalarJetField::coordinate(3, 0).with_max_order(2);
        assert!(u.jet_at(&[0.0, 0.0, 0.0], 2).is_ok());
        assert!(matches!(u.jet_at(&[0.0, 0.0, 0.0], 3), Err(CalcError::Capability(_))));
    }
}
