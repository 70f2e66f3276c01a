//! Tractor fields: jet-valued rules that can be differentiated and iterated.

use std::sync::Arc;

use num_rational::Rational64;

use crate::error::{CalcError, Result};
use crate::fields_charts::field::weight_f64;
use crate::fields_charts::geometry::{invert_small, LocalGeometry};
use crate::fields_charts::{DensityField, LocalField, MetricModel, ScalarJetField, ScaleTag, Slot};
use crate::jet::Jet;
use crate::tractor::ops;
use crate::tractor::value::TractorValue;

type LocalRule = dyn Fn(&[f64], usize) -> Result<LocalField> + Send + Sync;

/// A rank-`r` tractor field (rank 0 is a density) in one scale. The rule
/// returns component jets of the requested order about a point.
#[derive(Clone)]
pub struct TractorField {
    pub dim: usize,
    pub rank: usize,
    pub weight: Rational64,
    pub scale: ScaleTag,
    rule: Arc<LocalRule>,
}

impl std::fmt::Debug for TractorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TractorField(d={}, rank={}, w={}, scale={})", self.dim, self.rank, self.weight, self.scale)
    }
}

impl TractorField {
    pub fn from_local(
        dim: usize,
        rank: usize,
        weight: Rational64,
        scale: ScaleTag,
        rule: impl Fn(&[f64], usize) -> Result<LocalField> + Send + Sync + 'static,
    ) -> Self {
        TractorField { dim, rank, weight, scale, rule: Arc::new(rule) }
    }

    /// Components given as closed-form jet expressions in the coordinates.
    pub fn from_jets(
        dim: usize,
        rank: usize,
        weight: Rational64,
        scale: ScaleTag,
        rule: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        Self::from_local(dim, rank, weight, scale, move |p, order| {
            let y = Jet::coordinates(p, order);
            Ok(LocalField::new(dim, vec![Slot::Tractor; rank], rule(&y), weight))
        })
    }

    /// Rank-1 field from closed-form `(σ, μ, ρ)`.
    pub fn triple(
        dim: usize,
        weight: Rational64,
        scale: ScaleTag,
        rule: impl Fn(&[Jet]) -> (Jet, Vec<Jet>, Jet) + Send + Sync + 'static,
    ) -> Self {
        Self::from_jets(dim, 1, weight, scale, move |y| {
            let (s, m, r) = rule(y);
            let mut c = vec![s];
            c.extend(m);
            c.push(r);
            c
        })
    }

    pub fn from_density(rho: &DensityField) -> Self {
        let rep = rho.rep.clone();
        let w = rho.weight;
        Self::from_local(rep.dim(), 0, w, rho.scale.clone(), move |p, order| {
            Ok(LocalField::scalar(rep.jet_at(p, order)?, w))
        })
    }

    pub fn local(&self, p: &[f64], order: usize) -> Result<LocalField> {
        let f = (self.rule)(p, order)?;
        if f.order() < order {
            return Err(CalcError::Capability(format!("field supplies order {} < {order}", f.order())));
        }
        Ok(f)
    }

    pub fn check_scale(&self, metric: &MetricModel) -> Result<()> {
        if self.scale != metric.scale {
            return Err(CalcError::Scale(format!("field in scale {}, metric in scale {}", self.scale, metric.scale)));
        }
        if self.dim != metric.dim() {
            return Err(CalcError::Argument("field and metric dimensions differ".into()));
        }
        Ok(())
    }

    /// Components at `p` as a [`TractorValue`].
    pub fn value(&self, metric: &MetricModel, p: &[f64]) -> Result<TractorValue> {
        self.check_scale(metric)?;
        metric.chart.check(p)?;
        let f = self.local(p, 0)?;
        to_value(&f, metric, p)
    }

    /// Same section in the scale `e^{2ω}g`, where `metric` is `g`.
    pub fn rescale(&self, omega: &ScalarJetField, metric: &MetricModel, new_scale: ScaleTag) -> Result<TractorField> {
        self.check_scale(metric)?;
        let base = self.clone();
        let omega = omega.clone();
        let m = metric.clone();
        let (dim, rank, weight) = (self.dim, self.rank, self.weight);
        Ok(Self::from_local(dim, rank, weight, new_scale, move |p, order| {
            let f = base.local(p, order)?;
            let om = omega.jet_at(p, order + 1)?;
            let ups: Vec<Jet> = (0..dim).map(|a| om.d(a)).collect::<Result<_>>()?;
            let g = m.components_at(p, order)?;
            let ginv = crate::jet::inverse(&g, dim)?;
            Ok(rescale_local(&f, &om.truncate(order), &ups, &ginv))
        }))
    }

    /// Constant multiple of this field.
    pub fn scaled(&self, c: f64) -> TractorField {
        let base = self.clone();
        Self::from_local(self.dim, self.rank, self.weight, self.scale.clone(), move |p, order| {
            Ok(base.local(p, order)?.scale(c))
        })
    }

    /// Materialized Thomas-D of this field.
    pub fn thomas_d(&self, metric: &MetricModel) -> Result<TractorField> {
        self.check_scale(metric)?;
        let base = self.clone();
        let m = metric.clone();
        Ok(Self::from_local(self.dim, self.rank + 1, self.weight - 1, self.scale.clone(), move |p, order| {
            let geo = LocalGeometry::at(&m, p, order + 3)?;
            ops::thomas_d_local(&base.local(p, order + 2)?, &geo)
        }))
    }
}

/// Rescale the tractor slots and weight of local jets by `ω` with `Υ = dω`,
/// `ginv` the inverse metric of the original scale. Tensor slots are left as
/// they are.
pub(crate) fn rescale_local(f: &LocalField, omega: &Jet, ups: &[Jet], ginv: &[Jet]) -> LocalField {
    let d = f.dim;
    let n = d + 2;
    let e = omega.exp();
    let ei = omega.scale(-1.0).exp();
    let zero = omega.lift(0.0);
    let up: Vec<Jet> = (0..d)
        .map(|a| crate::jet::sum((0..d).map(|b| &ginv[a * d + b] * &ups[b]).collect::<Vec<_>>().iter()).unwrap())
        .collect();
    let ups2 = crate::jet::sum(up.iter().zip(ups).map(|(a, b)| a * b).collect::<Vec<_>>().iter()).unwrap();
    let mut m = vec![zero.clone(); n * n];
    m[0] = e.clone();
    for a in 0..d {
        m[(1 + a) * n] = &e * &ups[a];
        m[(1 + a) * n + 1 + a] = e.clone();
        m[(d + 1) * n + 1 + a] = -&(&ei * &up[a]);
    }
    m[(d + 1) * n] = (&ei * &ups2).scale(-0.5);
    m[(d + 1) * n + d + 1] = ei.clone();
    let sizes = f.sizes();
    let strides = f.strides();
    let mut cur = f.comps.clone();
    for (s, &slot) in f.slots.iter().enumerate() {
        if slot != Slot::Tractor {
            continue;
        }
        let st = strides[s];
        let mut next = Vec::with_capacity(cur.len());
        for flat in 0..cur.len() {
            let i = (flat / st) % sizes[s];
            let base = flat - i * st;
            let mut acc = zero.clone();
            for j in 0..n {
                if m[i * n + j].max_abs() != 0.0 {
                    acc = &acc + &(&m[i * n + j] * &cur[base + j * st]);
                }
            }
            next.push(acc);
        }
        cur = next;
    }
    let wf = weight_factor(f.weight, omega);
    LocalField::new(d, f.slots.clone(), cur.iter().map(|c| c * &wf).collect(), f.weight)
}

pub(crate) fn to_value(f: &LocalField, metric: &MetricModel, p: &[f64]) -> Result<TractorValue> {
    if f.slots.iter().any(|s| *s != Slot::Tractor) {
        return Err(CalcError::Argument("value has tensor slots".into()));
    }
    let g = metric.values_at(p)?;
    let ginv = invert_small(&g, metric.dim());
    TractorValue::new(f.rank(), f.values(), f.weight, metric.scale.clone(), p, ginv)
}

pub(crate) fn weight_factor(w: Rational64, omega: &Jet) -> Jet {
    omega.scale(weight_f64(w)).exp()
}
