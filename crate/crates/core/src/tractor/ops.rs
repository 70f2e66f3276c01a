//! Tractor connection, Thomas-D, Yamabe operator, conformal powers and the
//! Robin-type normal operator.

use num_rational::Rational64;
use num_traits::ToPrimitive;

use crate::error::{CalcError, Result};
use crate::fields_charts::geometry::LocalGeometry;
use crate::fields_charts::{LocalField, MetricModel, TensorValue};
use crate::jet::Jet;
use crate::tractor::field::{to_value, TractorField};
use crate::tractor::value::TractorValue;

fn wf(w: Rational64) -> f64 {
    w.to_f64().expect("finite weight")
}

/// `D_A V = ((d+2w−2)wV, (d+2w−2)∇V, (Δ−wJ)V)` with the new slot first.
pub fn thomas_d_local(v: &LocalField, geo: &LocalGeometry) -> Result<LocalField> {
    let d = v.dim as f64;
    let w = wf(v.weight);
    let c = d + 2.0 * w - 2.0;
    let y = v.scale(c * w);
    let z = v.covariant_derivative(geo)?.scale(c);
    let lap = v.laplacian(geo)?;
    let x = lap.sub(&v.times(&geo.j).scale(w))?;
    let lo = x.order();
    Ok(LocalField::assemble_tractor(&y.truncate(lo), &z.truncate(lo), &x, v.weight - 1))
}

/// Yamabe operator `Δ − (1 − d/2)J` on weight `1 − d/2`.
pub fn yamabe_box_local(v: &LocalField, geo: &LocalGeometry) -> Result<LocalField> {
    let d = v.dim as i64;
    let w0 = Rational64::new(2 - d, 2);
    if v.weight != w0 {
        return Err(CalcError::Weight(format!("Yamabe operator needs weight {w0}, got {}", v.weight)));
    }
    let lap = v.laplacian(geo)?;
    let out = lap.sub(&v.times(&geo.j).scale(wf(w0)))?;
    Ok(LocalField { weight: v.weight - 2, ..out })
}

/// Jet order of the input consumed by [`box_k_local`].
pub fn box_k_order(k: usize) -> usize {
    2 * (k - 1)
}

/// Output of a conformal power: the value plus an optional warning.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BoxKOutput {
    pub value: Vec<f64>,
    #[serde(serialize_with = "ser_ratio")]
    pub weight: Rational64,
    pub warning: Option<String>,
}

fn ser_ratio<S: serde::Serializer>(w: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

fn check_box_k(k: usize, d: usize, weight: Rational64) -> Result<Option<String>> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(CalcError::Argument(format!("k must be even and ≥ 2, got {k}")));
    }
    let want = Rational64::new(k as i64 - d as i64, 2);
    if weight != want {
        return Err(CalcError::Weight(format!("Box_{k} in d={d} needs weight {want}, got {weight}")));
    }
    Ok((d.is_multiple_of(2) && k >= d)
        .then(|| format!("d={d} even and k={k} ≥ d: composition is computed but not guaranteed to have leading term Δ^(k/2)")))
}

/// `D^A⋯D^B Box D_B⋯D_A u` with `(k−2)/2` Thomas-D's on each side.
pub fn box_k_local(k: usize, u: &LocalField, geo: &LocalGeometry) -> Result<LocalField> {
    check_box_k(k, u.dim, u.weight)?;
    let m = (k - 2) / 2;
    let mut f = u.clone();
    for _ in 0..m {
        f = thomas_d_local(&f, geo)?;
    }
    f = yamabe_box_local(&f, geo)?;
    for _ in 0..m {
        f = thomas_d_local(&f, geo)?.contract(0, 1, geo)?;
    }
    Ok(f)
}

/// `n^a∇_aU − wHU` for a field with any slots; `n` is the unit conormal
/// (lower index) and `h` the mean curvature, both as jets about the point.
pub fn robin_local(u: &LocalField, n: &[Jet], h: &Jet, geo: &LocalGeometry) -> Result<LocalField> {
    let d = u.dim;
    let du = u.covariant_derivative(geo)?;
    let len = u.comps.len();
    let lo = du.order();
    let nup: Vec<Jet> = (0..d)
        .map(|a| {
            let terms: Vec<Jet> = (0..d).map(|b| &geo.ginv[a * d + b] * &n[b]).collect();
            crate::jet::sum(terms.iter()).unwrap().truncate(lo)
        })
        .collect();
    let w = wf(u.weight);
    let comps = (0..len)
        .map(|i| {
            let mut s = &(h * &u.comps[i]).truncate(lo) * (-w);
            for a in 0..d {
                s = &s + &(&nup[a] * &du.comps[a * len + i]);
            }
            s
        })
        .collect();
    Ok(LocalField::new(d, u.slots.clone(), comps, u.weight - 1))
}

fn geometry(field: &TractorField, metric: &MetricModel, p: &[f64], order: usize) -> Result<LocalGeometry> {
    field.check_scale(metric)?;
    metric.chart.check(p)?;
    LocalGeometry::at(metric, p, order)
}

/// `∇_a U^B` in the working scale; result slots `(Down, Tractor…)`.
pub fn tractor_connection(u: &TractorField, metric: &MetricModel, p: &[f64]) -> Result<TensorValue> {
    let geo = geometry(u, metric, p, 3)?;
    let du = u.local(p, 1)?.covariant_derivative(&geo)?;
    Ok(TensorValue::new(du.values(), du.slots.clone(), du.weight, p, metric.scale.clone()))
}

/// Max-norm of `∇U` at `p`.
pub fn parallel_defect(u: &TractorField, metric: &MetricModel, p: &[f64]) -> Result<f64> {
    Ok(tractor_connection(u, metric, p)?.max_abs())
}

/// Max-norm of the antisymmetrized second derivative `∇_a∇_bU − ∇_b∇_aU`,
/// which is the tractor curvature acting on `U`.
pub fn tractor_curvature_defect(u: &TractorField, metric: &MetricModel, p: &[f64]) -> Result<f64> {
    let geo = geometry(u, metric, p, 4)?;
    let dd = u.local(p, 2)?.covariant_derivative(&geo)?.covariant_derivative(&geo)?;
    let d = u.dim;
    let len = dd.comps.len() / (d * d);
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            for i in 0..len {
                let x = dd.comps[(a * d + b) * len + i].value() - dd.comps[(b * d + a) * len + i].value();
                worst = worst.max(x.abs());
            }
        }
    }
    Ok(worst)
}

pub fn thomas_d(v: &TractorField, metric: &MetricModel, p: &[f64]) -> Result<TractorValue> {
    let geo = geometry(v, metric, p, 3)?;
    let out = thomas_d_local(&v.local(p, 2)?, &geo)?;
    to_value(&out, metric, p)
}

pub fn yamabe_box(v: &TractorField, metric: &MetricModel, p: &[f64]) -> Result<TractorValue> {
    let geo = geometry(v, metric, p, 3)?;
    let out = yamabe_box_local(&v.local(p, 2)?, &geo)?;
    to_value(&out, metric, p)
}

/// Conformal power `Box_k` applied to a density at `p`.
pub fn box_k(k: usize, u: &TractorField, metric: &MetricModel, p: &[f64]) -> Result<BoxKOutput> {
    if u.rank != 0 {
        return Err(CalcError::Argument("Box_k acts on densities".into()));
    }
    let warning = check_box_k(k, u.dim, u.weight)?;
    let order = box_k_order(k);
    let geo = geometry(u, metric, p, order + 1)?;
    let out = box_k_local(k, &u.local(p, order)?, &geo)?;
    Ok(BoxKOutput { value: out.values(), weight: out.weight, warning })
}
