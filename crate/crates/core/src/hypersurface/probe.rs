//! Empirical normal order of boundary operators and the Robin constant.

use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::chart::rng_from_seed;
use crate::fields_charts::field::weight_f64;
use crate::fields_charts::{DensityField, MetricModel, ScalarJetField};
use crate::hypersurface::{robin_delta, Hypersurface};
use crate::jet::Jet;
use crate::tractor::field::TractorField;
use crate::tractor::ops::thomas_d;
use crate::tractor::value::tractor_metric;

/// Relative threshold below which a probe value counts as zero.
pub const PROBE_ZERO_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub r: usize,
    /// Largest `|B(x^r φ)(p)|` over the probes.
    pub witness_value: f64,
    /// Largest `|B(x^{r+1} φ)(p)|` over the probes.
    pub next_order_max: f64,
    pub nonzero_at_r: bool,
    pub vanishes_at_order_r_plus_1: bool,
    /// All probes vanished at order `r`: only a lower bound is known.
    pub inconclusive: bool,
    pub probes: usize,
}

/// Random quadratic polynomials used as probe sections.
fn probe_polys(d: usize, count: usize, seed: u64) -> Vec<ScalarJetField> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let c0: f64 = rng.random_range(0.5..1.5);
            let c1: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c2: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            ScalarJetField::new(d, "probe", move |y| {
                let mut s = y[0].lift(c0);
                for a in 0..d {
                    s = &s + &y[a].scale(c1[a]);
                    for b in 0..d {
                        s = &s + &(&y[a] * &y[b]).scale(c2[a * d + b]);
                    }
                }
                s
            })
        })
        .collect()
}

/// Evaluate `op(x^s φ)` for ten random polynomial sections `φ` and
/// `s ∈ {r, r+1}`, where `x` is the defining function of Σ and the sections
/// are densities of weight `w` in the host scale.
pub fn normal_order_probe(
    op: &dyn Fn(&TractorField) -> Result<f64>,
    sigma: &Hypersurface,
    r: usize,
    weight: Rational64,
    seed: u64,
) -> Result<ProbeReport> {
    let d = sigma.dim();
    let polys = probe_polys(d, 10, seed);
    let mut at = [0.0f64; 2];
    for phi in &polys {
        for (k, s) in [r, r + 1].into_iter().enumerate() {
            let x = sigma.defining.clone();
            let phi = phi.clone();
            let rep = ScalarJetField::new(d, "x^s φ", move |y| {
                let xv = x.eval(y);
                let mut acc = phi.eval(y);
                for _ in 0..s {
                    acc = &acc * &xv;
                }
                acc
            });
            let u = TractorField::from_density(&DensityField::new(weight, sigma.metric.scale.clone(), rep));
            at[k] = at[k].max(op(&u)?.abs());
        }
    }
    let tol = PROBE_ZERO_TOL * at[0].max(1.0);
    let nonzero = at[0] > tol;
    Ok(ProbeReport {
        r,
        witness_value: at[0],
        next_order_max: at[1],
        nonzero_at_r: nonzero,
        vanishes_at_order_r_plus_1: at[1] <= tol,
        inconclusive: !nonzero,
        probes: polys.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RobinConstant {
    pub d: usize,
    pub weight: String,
    pub c: f64,
    pub max_rel_spread: f64,
    pub probes: usize,
}

/// Ratio `δu / N^A D_A u` over `probes` points of an ellipsoid in a
/// conformally flat, non-flat metric, for random weight-`w` densities.
pub fn measure_robin_constant(d: usize, w: Rational64, probes: usize, seed: u64) -> Result<RobinConstant> {
    if (d as f64 + 2.0 * weight_f64(w) - 2.0).abs() < 1e-12 {
        return Err(CalcError::Argument("N·D u vanishes identically at w = 1 − d/2".into()));
    }
    let omega = ScalarJetField::new(d, "bump", move |y| (&y[0] * &y[1]).scale(0.3) + &y[d - 1].sin().scale(0.2));
    let metric = MetricModel::conformal_rescale(omega, &MetricModel::flat(d)?);
    let axes: Vec<f64> = (0..d).map(|a| 1.0 + 0.15 * a as f64).collect();
    let x = ScalarJetField::new(d, "ellipsoid", move |y| {
        let mut s = y[0].lift(1.0);
        for (a, v) in y.iter().enumerate() {
            s = &s - &(v * v).scale(1.0 / (axes[a] * axes[a]));
        }
        s.scale(0.5)
    });
    let sigma = Hypersurface::new(x, 1.0, metric.clone())?;
    let polys = probe_polys(d, probes, seed);
    let pts = sigma.sample(seed, probes);
    let mut ratios = Vec::with_capacity(probes);
    for (p, phi) in pts.iter().zip(&polys) {
        let rep = phi.map("probe·e", |j: Jet| &j * &j.scale(0.1).exp());
        let u = TractorField::from_density(&DensityField::new(w, metric.scale.clone(), rep));
        let delta = robin_delta(&u, &sigma, p)?.value;
        let du = thomas_d(&u, &metric, p)?;
        let nd = tractor_metric(&sigma.normal_tractor(p)?, &du)?;
        if nd.abs() < 1e-10 {
            continue;
        }
        ratios.push(delta / nd);
    }
    if ratios.is_empty() {
        return Err(CalcError::Degenerate("every probe had N·Du = 0".into()));
    }
    let c = ratios[0];
    let spread = ratios.iter().fold(0.0f64, |m, x| m.max((x - c).abs() / c.abs()));
    Ok(RobinConstant { d, weight: w.to_string(), c, max_rel_spread: spread, probes: ratios.len() })
}
