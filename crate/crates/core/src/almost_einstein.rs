//! Almost-Einstein scales: the defining equation, the parallel tractor built
//! from a scale, sign classification and Poincaré–Einstein checks.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::chart::ChartDomain;
use crate::fields_charts::geometry::{curvature_pack, LocalGeometry};
use crate::fields_charts::{DensityField, LocalField, MetricModel, ScalarJetField, Slot, TensorValue};
use crate::hypersurface::Hypersurface;
use crate::tractor::field::TractorField;
use crate::tractor::ops::parallel_defect as tractor_parallel_defect;
use crate::tractor::value::{tractor_metric, TractorValue};

/// Residual tolerance separating exact almost-Einstein scales from perturbations.
pub const AE_TOL: f64 = 1e-9;
/// Tolerance for constancy of `|I|²` across samples.
pub const NORM_CONST_TOL: f64 = 1e-10;
const SAMPLE_SEED: u64 = 0x5eed;
const SAMPLES: usize = 24;

/// Trace-free part of `∇∇σ + Pσ` and the `ρ` fixed by its trace.
#[derive(Clone, Debug, Serialize)]
pub struct AeResidual {
    pub trace_free: TensorValue,
    pub rho: f64,
    pub max_abs: f64,
}

pub fn ae_residual(sigma: &DensityField, metric: &MetricModel, p: &[f64]) -> Result<AeResidual> {
    if sigma.scale != metric.scale {
        return Err(CalcError::Scale(format!("σ in {}, metric in {}", sigma.scale, metric.scale)));
    }
    metric.chart.check(p)?;
    let d = metric.dim();
    let geo = LocalGeometry::at(metric, p, 2)?;
    let s = LocalField::scalar(sigma.rep.jet_at(p, 2)?, sigma.weight);
    let hess = s.covariant_derivative(&geo)?.covariant_derivative(&geo)?.values();
    let sv = s.value();
    let g: Vec<f64> = geo.g.iter().map(|j| j.value()).collect();
    let gi: Vec<f64> = geo.ginv.iter().map(|j| j.value()).collect();
    let t: Vec<f64> = (0..d * d).map(|ab| hess[ab] + geo.schouten[ab].value() * sv).collect();
    let trace: f64 = (0..d * d).map(|ab| gi[ab] * t[ab]).sum();
    let rho = -trace / d as f64;
    let tf: Vec<f64> = (0..d * d).map(|ab| t[ab] + g[ab] * rho).collect();
    let max_abs = tf.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(AeResidual {
        trace_free: TensorValue::new(tf, vec![Slot::Down, Slot::Down], sigma.weight + 2, p, metric.scale.clone()),
        rho,
        max_abs,
    })
}

/// Flat metric with `σ = (1 − |y|²)/2`, whose zero set is the unit sphere
/// and whose interior scale `σ⁻²|dy|²` is the Poincaré ball.
pub fn ball_structure(d: usize) -> Result<AEStructure> {
    let m = MetricModel::flat(d)?;
    let rep = ScalarJetField::new(d, "(1-|y|²)/2", |y| {
        let r2 = y.iter().fold(y[0].lift(0.0), |a, v| &a + &(v * v));
        (-&r2).add_scalar(1.0).scale(0.5)
    });
    build_i(&DensityField::new(Rational64::from(1), m.scale.clone(), rep), &m)
}

/// A metric with a weight-1 scale `σ` and the tractor `I = (1/d)Dσ`.
#[derive(Clone, Debug)]
pub struct AEStructure {
    pub metric: MetricModel,
    pub sigma: DensityField,
    pub i: TractorField,
    pub i_norm2: f64,
    pub residual_max: f64,
    pub warning: Option<String>,
}

pub fn build_i(sigma: &DensityField, metric: &MetricModel) -> Result<AEStructure> {
    if sigma.weight != Rational64::from(1) {
        return Err(CalcError::Weight(format!("σ must have weight 1, got {}", sigma.weight)));
    }
    let pts = metric.chart.sample(SAMPLE_SEED, SAMPLES);
    if pts.iter().all(|p| sigma.rep.value(p) == 0.0) {
        let grads = pts.iter().all(|p| sigma.rep.gradient(p).iter().all(|g| *g == 0.0));
        if grads {
            return Err(CalcError::Degenerate("σ vanishes identically, so I = 0".into()));
        }
    }
    let d = metric.dim() as f64;
    let i = TractorField::from_density(sigma).thomas_d(metric)?.scaled(1.0 / d);
    let mut residual_max: f64 = 0.0;
    for p in &pts {
        residual_max = residual_max.max(ae_residual(sigma, metric, p)?.max_abs);
    }
    let v = i.value(metric, &pts[0])?;
    let i_norm2 = tractor_metric(&v, &v)?;
    let warning = (residual_max > AE_TOL)
        .then(|| format!("σ is not almost Einstein: trace-free residual {residual_max:.3e}"));
    Ok(AEStructure { metric: metric.clone(), sigma: sigma.clone(), i, i_norm2, residual_max, warning })
}

impl AEStructure {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn i_at(&self, p: &[f64]) -> Result<TractorValue> {
        self.i.value(&self.metric, p)
    }

    pub fn norm2_at(&self, p: &[f64]) -> Result<f64> {
        let v = self.i_at(p)?;
        tractor_metric(&v, &v)
    }

    /// `|h(I, X) − σ|`.
    pub fn round_trip_error(&self, p: &[f64]) -> Result<f64> {
        let v = self.i_at(p)?;
        let d = self.dim();
        let mut x = vec![0.0; d + 2];
        x[d + 1] = 1.0;
        let xv = TractorValue::new(1, x, Rational64::from(-1), v.scale.clone(), p, v.ginv.clone())?;
        Ok((tractor_metric(&v, &xv)? - self.sigma.rep.value(p)).abs())
    }

    pub fn parallel_defect(&self, p: &[f64]) -> Result<f64> {
        tractor_parallel_defect(&self.i, &self.metric, p)
    }

    /// Max deviation of `|I|²` from its cached value over `pts`.
    pub fn norm_spread(&self, pts: &[Vec<f64>]) -> Result<f64> {
        let mut m: f64 = 0.0;
        for p in pts {
            m = m.max((self.norm2_at(p)? - self.i_norm2).abs());
        }
        Ok(m)
    }

    /// Points at which to look for the zero locus of `σ`.
    fn search_points(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let radius = match &self.metric.chart.domain {
            ChartDomain::Whole { sample_radius } => 2.0 * sample_radius,
            ChartDomain::Ball { radius } => *radius,
            ChartDomain::Positive(_) => 3.0,
        };
        let mut rng = crate::fields_charts::chart::rng_from_seed(seed);
        (0..count).map(|_| crate::fields_charts::chart::uniform_in_ball(&mut rng, d, radius)).collect()
    }

    /// Sampled zero locus of `σ`: sign changes along segments from the sample
    /// of largest `σ`, refined by bisection, plus an isolated-zero search by
    /// Newton iteration on `∇σ = 0`.
    pub fn zero_locus(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let rep = &self.sigma.rep;
        let pts = self.search_points(seed, 4 * count);
        let mut out = Vec::new();
        let Some(anchor) = pts.iter().max_by(|a, b| rep.value(a).total_cmp(&rep.value(b))).cloned() else {
            return out;
        };
        let sa = rep.value(&anchor);
        for q in &pts {
            if out.len() >= count {
                break;
            }
            let sq = rep.value(q);
            if sa * sq >= 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            let at = |t: f64| -> Vec<f64> { anchor.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect() };
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if rep.value(&at(mid)) * sa > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(at(0.5 * (lo + hi)));
        }
        if out.is_empty() {
            if let Some(z) = self.isolated_zero(&pts) {
                out.push(z);
            }
        }
        out
    }

    fn isolated_zero(&self, pts: &[Vec<f64>]) -> Option<Vec<f64>> {
        let rep = &self.sigma.rep;
        let d = self.dim();
        let mut p = pts.iter().min_by(|a, b| rep.value(a).abs().total_cmp(&rep.value(b).abs()))?.clone();
        for _ in 0..50 {
            let j = rep.jet_at(&p, 2).ok()?;
            let grad = j.gradient().ok()?;
            let mut hess = vec![0.0; d * d];
            for a in 0..d {
                for b in 0..d {
                    let mut alpha = vec![0usize; d];
                    alpha[a] += 1;
                    alpha[b] += 1;
                    hess[a * d + b] = j.partial(&alpha).ok()?;
                }
            }
            let hi = crate::fields_charts::geometry::invert_small(&hess, d);
            if hi.iter().any(|x| !x.is_finite()) {
                return None;
            }
            for a in 0..d {
                p[a] -= (0..d).map(|b| hi[a * d + b] * grad[b]).sum::<f64>();
            }
        }
        let scale = rep.jet_at(&p, 1).ok()?.gradient().ok()?.iter().map(|x| x.abs()).sum::<f64>();
        (rep.value(&p).abs() < 1e-10 && scale < 1e-8 && self.metric.chart.is_valid(&p)).then_some(p)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub sign: i8,
    pub norm2: f64,
    pub branch: String,
    pub zero_set: Vec<Vec<f64>>,
}

/// Sign of `|I|²` with the corresponding branch description.
pub fn classify(ae: &AEStructure, seed: u64) -> Result<Classification> {
    let pts = ae.metric.chart.sample(seed, SAMPLES);
    let spread = ae.norm_spread(&pts)?;
    if spread > NORM_CONST_TOL * ae.i_norm2.abs().max(1.0) {
        return Err(CalcError::NotAlmostEinstein(format!("|I|² varies by {spread:.3e} across samples")));
    }
    let n2 = ae.i_norm2;
    let sign = if n2.abs() <= NORM_CONST_TOL { 0 } else if n2 > 0.0 { 1 } else { -1 };
    let branch = match sign {
        -1 => "Einstein with positive scalar curvature; σ has no zeros",
        0 => "Ricci-flat away from the zero set of σ, which consists of isolated points",
        _ => "Einstein with negative scalar curvature off a totally umbilic hypersurface where σ = 0",
    }
    .to_string();
    Ok(Classification { sign, norm2: n2, branch, zero_set: ae.zero_locus(seed, 16) })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeReport {
    pub is_pe: bool,
    pub i_norm2: f64,
    /// `max|Ric(g₊) + (d−1)g₊| / max|g₊|` over interior samples.
    pub einstein_residual: f64,
    /// `max ||dσ|_g − 1|` over sampled boundary points.
    pub special_defining_check: f64,
    pub boundary_points: usize,
    pub hint: Option<String>,
}

/// Poincaré–Einstein verification for a nonnegative scale.
pub fn pe_check(ae: &AEStructure, seed: u64) -> Result<PeReport> {
    let d = ae.dim();
    let pts = ae.metric.chart.sample(seed, SAMPLES);
    let rep = &ae.sigma.rep;
    if pts.iter().any(|p| rep.value(p) < 0.0) {
        return Err(CalcError::NotDefining("σ changes sign in the interior".into()));
    }
    let log = rep.map("-ln σ", |j| j.ln().scale(-1.0));
    let gplus = MetricModel::conformal_rescale(log, &ae.metric);
    let mut einstein: f64 = 0.0;
    for p in pts.iter().filter(|p| rep.value(p) > 1e-3) {
        let c = curvature_pack(&gplus, p)?;
        let gmax = c.metric.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let r = c
            .ricci
            .iter()
            .zip(&c.metric)
            .fold(0.0f64, |m, (ric, g)| m.max((ric + (d as f64 - 1.0) * g).abs()));
        einstein = einstein.max(r / gmax);
    }
    let zeros = ae.zero_locus(seed, 16);
    let mut special: f64 = 0.0;
    let mut nb = 0;
    if let Ok(sigma) = Hypersurface::new(rep.clone(), 1.0, ae.metric.clone()) {
        for z in &zeros {
            let Ok(p) = sigma.project_point(z) else { continue };
            let grad = rep.gradient(&p);
            let g = ae.metric.values_at(&p)?;
            let gi = crate::fields_charts::geometry::invert_small(&g, d);
            let mut n2 = 0.0;
            for a in 0..d {
                for b in 0..d {
                    n2 += gi[a * d + b] * grad[a] * grad[b];
                }
            }
            special = special.max((n2.sqrt() - 1.0).abs());
            nb += 1;
        }
    }
    let norm_ok = (ae.i_norm2 - 1.0).abs() <= AE_TOL;
    let is_pe = norm_ok && nb > 0 && einstein <= 1e-8 && special <= 1e-8;
    let hint = if nb == 0 {
        Some("σ has no boundary zero set on this chart".to_string())
    } else if !norm_ok && ae.i_norm2 > 0.0 {
        Some(format!("|I|² = {:.6}; divide σ by {:.6} to normalize", ae.i_norm2, ae.i_norm2.sqrt()))
    } else if !norm_ok {
        Some(format!("|I|² = {:.6} is not positive", ae.i_norm2))
    } else {
        None
    };
    Ok(PeReport { is_pe, i_norm2: ae.i_norm2, einstein_residual: einstein, special_defining_check: special, boundary_points: nb, hint })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalMatch {
    pub discrepancy: f64,
    pub mean_curvature: f64,
    /// `−(1/d)Δσ` at the point.
    pub mean_curvature_from_laplacian: f64,
}

/// Compare `I` with the normal tractor of the zero set of `σ` at `p`.
pub fn boundary_normal_match(ae: &AEStructure, p: &[f64]) -> Result<NormalMatch> {
    let sigma = Hypersurface::new(ae.sigma.rep.clone(), 1.0, ae.metric.clone())?;
    let n = sigma.normal_tractor(p)?;
    let i = ae.i_at(p)?;
    let discrepancy = n.comps.iter().zip(&i.comps).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let h = sigma.mean_curvature(p)?;
    let lap = crate::fields_charts::geometry::laplacian(&ae.sigma, &ae.metric, p)?;
    Ok(NormalMatch { discrepancy, mean_curvature: h, mean_curvature_from_laplacian: -lap / ae.dim() as f64 })
}

/// Parallel defect of `σ + ε·pert` at `p` for each `ε`, with the fitted slope
/// `defect/ε` of the last two entries.
pub fn perturbation_slope(
    sigma: &DensityField,
    pert: &ScalarJetField,
    metric: &MetricModel,
    p: &[f64],
    eps: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let mut defects = Vec::with_capacity(eps.len());
    for &e in eps {
        let s = DensityField::new(sigma.weight, sigma.scale.clone(), sigma.rep.add(&pert.scale(e)));
        let i = TractorField::from_density(&s).thomas_d(metric)?.scaled(1.0 / metric.dim() as f64);
        defects.push(tractor_parallel_defect(&i, metric, p)?);
    }
    let n = eps.len();
    let slope = if n >= 2 { (defects[n - 1] - defects[n - 2]) / (eps[n - 1] - eps[n - 2]) } else { defects[0] / eps[0] };
    Ok((defects, slope))
}
