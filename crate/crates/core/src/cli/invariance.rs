//! Two-scale comparison of invariant operators: evaluate in a base scale and
//! in a randomly rescaled one, re-weight the first result and compare.

use num_rational::Rational64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::chart::rng_from_seed;
use crate::fields_charts::field::weight_f64;
use crate::fields_charts::{DensityField, MetricModel, ScalarJetField};
use crate::hypersurface::{delta_ell, robin_delta};
use crate::hypersurface::Hypersurface;
use crate::jet::Jet;
use crate::tractor::field::TractorField;
use crate::tractor::ops::{box_k, thomas_d, yamabe_box};
use crate::tractor::value::rescale_tractor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantOp {
    Yamabe,
    ThomasD,
    BoxK(usize),
    Robin,
    DeltaEll(usize),
}

impl InvariantOp {
    pub fn parse(name: &str, k: usize, ell: usize) -> Result<Self> {
        Ok(match name {
            "yamabe" => InvariantOp::Yamabe,
            "thomas-d" => InvariantOp::ThomasD,
            "boxk" => InvariantOp::BoxK(k),
            "robin" => InvariantOp::Robin,
            "delta" => InvariantOp::DeltaEll(ell),
            _ => return Err(CalcError::Config(format!("unknown operator '{name}'"))),
        })
    }

    /// Input weight forced by the operator, if any.
    pub fn forced_weight(&self, d: usize) -> Option<Rational64> {
        match self {
            InvariantOp::Yamabe => Some(Rational64::new(2 - d as i64, 2)),
            InvariantOp::BoxK(k) => Some(Rational64::new(*k as i64 - d as i64, 2)),
            _ => None,
        }
    }

    fn default_weight(&self) -> Rational64 {
        match self {
            InvariantOp::ThomasD => Rational64::new(1, 2),
            _ => Rational64::from(0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariancePoint {
    pub point: Vec<f64>,
    /// Base-scale output re-weighted into the rescaled scale.
    pub reweighted: Vec<f64>,
    pub rescaled: Vec<f64>,
    pub rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub op: InvariantOp,
    pub d: usize,
    pub weight: String,
    pub base: String,
    pub seed: u64,
    pub max_rel_err: f64,
    /// Denominator floor: `1e-3 ×` the largest output magnitude.
    pub floor: f64,
    pub points: Vec<InvariancePoint>,
}

/// Random smooth conformal factor of moderate size.
pub fn random_omega(d: usize, seed: u64) -> ScalarJetField {
    let mut rng = rng_from_seed(seed ^ 0x0be9a);
    let a: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
    let b: f64 = rng.random_range(0.1..0.3);
    let c: f64 = rng.random_range(-0.15..0.15);
    let e: f64 = rng.random_range(-0.3..0.3);
    ScalarJetField::new(d, "random ω", move |y| {
        let lin = y.iter().zip(&a).fold(y[0].lift(0.0), |s, (v, k)| &s + &v.scale(*k));
        let r2 = y.iter().fold(y[0].lift(0.0), |s, v| &s + &(v * v));
        lin.sin().scale(b) + &r2.scale(c) + &(&y[0] * &y[1 % d]).scale(e)
    })
}

/// Test density of weight `w` in the scale of `metric`.
pub fn test_density(metric: &MetricModel, w: Rational64, seed: u64) -> TractorField {
    let d = metric.dim();
    let mut rng = rng_from_seed(seed ^ 0xde75);
    let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let q: f64 = rng.random_range(0.2..0.8);
    let rep = ScalarJetField::new(d, "test density", move |y| {
        let lin = y.iter().zip(&a).fold(y[0].lift(0.0), |s, (v, k)| &s + &v.scale(*k));
        lin.cos() + &(&y[0] * &y[d - 1]).scale(q) + 0.5
    });
    TractorField::from_density(&DensityField::new(w, metric.scale.clone(), rep))
}

fn r2(y: &[Jet]) -> Jet {
    y.iter().fold(y[0].lift(0.0), |a, v| &a + &(v * v))
}

/// Ellipsoid with semi-axes `1 + 0.3a`.
pub fn ellipsoid(metric: MetricModel) -> Result<Hypersurface> {
    let x = ScalarJetField::new(metric.dim(), "ellipsoid", |y| {
        let mut s = y[0].lift(1.0);
        for (a, v) in y.iter().enumerate() {
            let ax = 1.0 + 0.3 * a as f64;
            s = &s - &(v * v).scale(1.0 / (ax * ax));
        }
        s
    });
    Hypersurface::new(x, 1.0, metric)
}

/// Unit sphere `{(1 − |y|²)/2 = 0}`.
pub fn unit_sphere(metric: MetricModel) -> Result<Hypersurface> {
    let x = ScalarJetField::new(metric.dim(), "(1-|y|²)/2", |y| (-&r2(y) + 1.0).scale(0.5));
    Hypersurface::new(x, 1.0, metric)
}

pub fn check_invariance(op: InvariantOp, d: usize, weight: Option<Rational64>, seed: u64, points: usize) -> Result<InvarianceReport> {
    let w = match (op.forced_weight(d), weight) {
        (Some(f), Some(w)) if f != w => {
            return Err(CalcError::Weight(format!("{op:?} in d={d} needs weight {f}, got {w}")));
        }
        (Some(f), _) => f,
        (None, Some(w)) => w,
        (None, None) => op.default_weight(),
    };
    let base = match op {
        InvariantOp::BoxK(_) => MetricModel::flat(d)?,
        _ => MetricModel::sphere(d, 1.0)?,
    };
    let omega = random_omega(d, seed);
    let hat = MetricModel::conformal_rescale(omega.clone(), &base);
    let u = test_density(&base, w, seed);
    let uh = u.rescale(&omega, &base, hat.scale.clone())?;
    let boundary = matches!(op, InvariantOp::Robin | InvariantOp::DeltaEll(_));
    let pts = if boundary { ellipsoid(base.clone())?.sample(seed, points) } else { base.chart.sample(seed, points) };
    let (s, sh) = if boundary {
        let e = ellipsoid(base.clone())?;
        (Some(e.clone()), Some(Hypersurface::new(e.defining, 1.0, hat.clone())?))
    } else {
        (None, None)
    };

    let eval = |p: &Vec<f64>| -> Result<(Vec<f64>, Vec<f64>)> {
        let om = omega.value(p);
        match op {
            InvariantOp::Yamabe | InvariantOp::ThomasD => {
                let f = if op == InvariantOp::Yamabe { yamabe_box } else { thomas_d };
                let a = rescale_tractor(&f(&u, &base, p)?, &omega, hat.scale.clone())?;
                let b = f(&uh, &hat, p)?;
                Ok((a.comps, b.comps))
            }
            InvariantOp::BoxK(k) => {
                let a = box_k(k, &u, &base, p)?;
                let b = box_k(k, &uh, &hat, p)?;
                let f = (weight_f64(a.weight) * om).exp();
                Ok((a.value.iter().map(|v| v * f).collect(), b.value))
            }
            InvariantOp::Robin | InvariantOp::DeltaEll(_) => {
                let (s, sh) = (s.as_ref().unwrap(), sh.as_ref().unwrap());
                let (a, b) = match op {
                    InvariantOp::Robin => (robin_delta(&u, s, p)?, robin_delta(&uh, sh, p)?),
                    InvariantOp::DeltaEll(l) => (delta_ell(l, &u, s, p)?, delta_ell(l, &uh, sh, p)?),
                    _ => unreachable!(),
                };
                let f = (weight_f64(a.weight) * om).exp();
                Ok((vec![a.value * f], vec![b.value]))
            }
        }
    };
    let raw: Vec<(Vec<f64>, Vec<f64>)> = pts.par_iter().map(eval).collect::<Result<_>>()?;
    let big = raw.iter().flat_map(|(a, _)| a.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-3 * big.max(1e-300);
    let points: Vec<InvariancePoint> = pts
        .into_iter()
        .zip(raw)
        .map(|(p, (a, b))| {
            let rel = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
                .fold(0.0, f64::max);
            InvariancePoint { point: p, reweighted: a, rescaled: b, rel_err: rel }
        })
        .collect();
    Ok(InvarianceReport {
        op,
        d,
        weight: w.to_string(),
        base: base.family.name(),
        seed,
        max_rel_err: points.iter().map(|p| p.rel_err).fold(0.0, f64::max),
        floor,
        points,
    })
}
