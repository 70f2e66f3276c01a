//! The flat model: `R^{d+2}` with a signature `(d+1, 1)` form, its forward
//! null cone, metrics induced on sections, and the parallel tractors that
//! descend from constant ambient vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Rational64;
use serde::Serialize;

use crate::almost_einstein::{build_i, AEStructure};
use crate::error::{CalcError, Result};
use crate::fields_charts::metric::{ambient_pairing, cone_lift, cone_scale};
use crate::fields_charts::{DensityField, MetricModel, ScalarJetField};
use crate::hypersurface::Hypersurface;
use crate::jet::Jet;
use crate::tractor::field::TractorField;

const FORM_TOL: f64 = 1e-12;

/// Symmetric bilinear form on `R^{d+2}`.
#[derive(Clone, Debug, Serialize)]
pub struct AmbientForm {
    pub d: usize,
    /// Row-major `(d+2)×(d+2)`.
    pub h: Vec<f64>,
}

impl AmbientForm {
    /// Antidiagonal on the first/last coordinates, identity in between.
    pub fn standard(d: usize) -> Self {
        let n = d + 2;
        let mut h = vec![0.0; n * n];
        h[n - 1] = 1.0;
        h[(n - 1) * n] = 1.0;
        for i in 1..n - 1 {
            h[i * n + i] = 1.0;
        }
        AmbientForm { d, h }
    }

    pub fn new(d: usize, h: Vec<f64>) -> Result<Self> {
        let n = d + 2;
        if h.len() != n * n {
            return Err(CalcError::Argument(format!("form needs {n}×{n} entries")));
        }
        for i in 0..n {
            for j in 0..n {
                if (h[i * n + j] - h[j * n + i]).abs() > FORM_TOL {
                    return Err(CalcError::Argument("form is not symmetric".into()));
                }
            }
        }
        let f = AmbientForm { d, h };
        let (pos, neg) = f.signature();
        if (pos, neg) != (d + 1, 1) {
            return Err(CalcError::Argument(format!("signature ({pos},{neg}), need ({},1)", d + 1)));
        }
        Ok(f)
    }

    fn n(&self) -> usize {
        self.d + 2
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n(), self.n(), &self.h)
    }

    /// Counts of positive and negative eigenvalues.
    pub fn signature(&self) -> (usize, usize) {
        let e = SymmetricEigen::new(self.matrix()).eigenvalues;
        (e.iter().filter(|x| **x > FORM_TOL).count(), e.iter().filter(|x| **x < -FORM_TOL).count())
    }

    pub fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| a[i] * self.h[i * n + j] * b[j]).sum::<f64>()).sum()
    }

    pub fn norm2(&self, a: &[f64]) -> f64 {
        self.pair(a, a)
    }

    fn is_standard(&self) -> bool {
        self.h == AmbientForm::standard(self.d).h
    }

    /// `max |AᵀHA − H|`.
    pub fn preservation_error(&self, a: &[f64]) -> f64 {
        let m = DMatrix::from_row_slice(self.n(), self.n(), a);
        let h = self.matrix();
        (m.transpose() * &h * &m - h).amax()
    }

    /// `exp(H⁻¹K)` for antisymmetric `K`, which preserves the form.
    pub fn exp_generator(&self, k: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let km = DMatrix::from_row_slice(n, n, k);
        if (&km + km.transpose()).amax() > FORM_TOL {
            return Err(CalcError::Argument("generator must be antisymmetric".into()));
        }
        let hinv = self.matrix().try_inverse().ok_or_else(|| CalcError::Degenerate("singular form".into()))?;
        let a = (hinv * km).exp();
        Ok(a.transpose().as_slice().to_vec())
    }
}

/// Rotation by `θ` in the plane of the `Z`-slots `i`, `j` (0-based among the
/// `d` middle coordinates).
pub fn z_rotation(d: usize, i: usize, j: usize, theta: f64) -> Vec<f64> {
    let n = d + 2;
    let mut a = vec![0.0; n * n];
    for k in 0..n {
        a[k * n + k] = 1.0;
    }
    let (p, q) = (i + 1, j + 1);
    a[p * n + p] = theta.cos();
    a[p * n + q] = -theta.sin();
    a[q * n + p] = theta.sin();
    a[q * n + q] = theta.cos();
    a
}

/// `diag(e^t, 1, …, 1, e^{−t})`, mixing the first and last slots.
pub fn yx_boost(d: usize, t: f64) -> Vec<f64> {
    let n = d + 2;
    let mut a = vec![0.0; n * n];
    for k in 1..n - 1 {
        a[k * n + k] = 1.0;
    }
    a[0] = t.exp();
    a[n * n - 1] = (-t).exp();
    a
}

fn mat_vec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
}

/// Parametrization of the forward null cone over the flat chart:
/// `t·X(y)` with `X(y) = (1, y, −|y|²/2)`.
#[derive(Clone, Debug)]
pub struct ConeChart {
    pub d: usize,
}

impl ConeChart {
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.d + 2);
        x.push(1.0);
        x.extend_from_slice(y);
        x.push(-0.5 * y.iter().map(|v| v * v).sum::<f64>());
        x
    }

    /// Chart coordinates of a forward null vector.
    pub fn chart_of(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x[0] <= 0.0 {
            return Err(CalcError::Domain("null ray outside the chart (X₀ ≤ 0)".into()));
        }
        Ok(x[1..=self.d].iter().map(|v| v / x[0]).collect())
    }

    /// Jet version of [`ConeChart::chart_of`] applied to `A·X(y)`.
    pub fn transform_jets(&self, a: &[f64], y: &[Jet]) -> Vec<Jet> {
        let x = cone_lift(y);
        let n = self.d + 2;
        let ax: Vec<Jet> = (0..n)
            .map(|i| {
                let mut s = y[0].lift(0.0);
                for j in 0..n {
                    if a[i * n + j] != 0.0 {
                        s = &s + &x[j].scale(a[i * n + j]);
                    }
                }
                s
            })
            .collect();
        let inv = ax[0].recip();
        ax[1..=self.d].iter().map(|v| v * &inv).collect()
    }
}

/// Metric `H(∂(λX), ∂(λX))` induced by the section `λ(y)X(y)`.
pub fn section_metric(lambda: &ScalarJetField, y: &[Jet]) -> Result<Vec<Jet>> {
    let d = y.len();
    let l = lambda.eval(y);
    let x = cone_lift(y);
    let lx: Vec<Jet> = x.iter().map(|c| c * &l).collect();
    let dlx: Vec<Vec<Jet>> = (0..d).map(|a| lx.iter().map(|c| c.d(a)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let mut g = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            g.push(ambient_pairing(&dlx[a], &dlx[b]));
        }
    }
    Ok(g)
}

fn check_standard(form: &AmbientForm, i: &[f64]) -> Result<()> {
    if !form.is_standard() {
        return Err(CalcError::Unsupported("model constructions use the standard ambient form".into()));
    }
    if i.len() != form.d + 2 {
        return Err(CalcError::Argument(format!("ambient vector needs {} entries", form.d + 2)));
    }
    Ok(())
}

/// Metric of the section `H(I, X) = 1` on the cap where `σ = H(I, X(y)) > 0`.
pub fn cap_model(form: &AmbientForm, i: &[f64]) -> Result<MetricModel> {
    check_standard(form, i)?;
    if form.norm2(i).abs() < FORM_TOL {
        return Err(CalcError::Branch("null I gives a flat section, not a cap; use descend_tractor".into()));
    }
    MetricModel::cap_pullback(i)
}

/// Cap metric components at `y`.
pub fn cap_metric(form: &AmbientForm, i: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let m = cap_model(form, i)?;
    m.values_at(y)
}

/// Hyperbolic distance between cap points: `cosh d = 1 − H(X₁/σ₁, X₂/σ₂)`.
pub fn cap_distance(form: &AmbientForm, i: &[f64], y1: &[f64], y2: &[f64]) -> Result<f64> {
    check_standard(form, i)?;
    let c = ConeChart { d: form.d };
    let (x1, x2) = (c.lift(y1), c.lift(y2));
    let (s1, s2) = (form.pair(i, &x1), form.pair(i, &x2));
    if s1 <= 0.0 || s2 <= 0.0 {
        return Err(CalcError::Domain("point outside the cap".into()));
    }
    let ch = 1.0 - form.pair(&x1, &x2) / (s1 * s2);
    Ok(ch.max(1.0).acosh())
}

/// Parallel tractor and scale descended from a constant ambient vector.
#[derive(Clone, Debug)]
pub struct Descended {
    pub ambient: Vec<f64>,
    pub norm2: f64,
    /// Flat metric of the section `X(y)`.
    pub metric: MetricModel,
    pub sigma: DensityField,
    /// `(σ, b − a·y, a)` for `I = (a, b, c)`, weight 0, flat scale.
    pub tractor: TractorField,
}

impl Descended {
    pub fn ae(&self) -> Result<AEStructure> {
        build_i(&self.sigma, &self.metric)
    }
}

pub fn descend_tractor(form: &AmbientForm, i: &[f64]) -> Result<Descended> {
    check_standard(form, i)?;
    if i.iter().all(|v| *v == 0.0) {
        return Err(CalcError::Degenerate("I = 0".into()));
    }
    let d = form.d;
    let metric = MetricModel::flat(d)?;
    let a = i[0];
    let b: Vec<f64> = i[1..=d].to_vec();
    let iv = i.to_vec();
    let sigma_rep = ScalarJetField::new(d, "H(I,X)", move |y| cone_scale(&iv, y));
    let sigma = DensityField::new(Rational64::from(1), metric.scale.clone(), sigma_rep.clone());
    let tractor = TractorField::triple(d, Rational64::from(0), metric.scale.clone(), move |y| {
        let mu: Vec<Jet> = (0..d).map(|k| (-&y[k].scale(a)).add_scalar(b[k])).collect();
        (sigma_rep.eval(y), mu, y[0].lift(a))
    });
    Ok(Descended { ambient: i.to_vec(), norm2: form.norm2(i), metric, sigma, tractor })
}

/// Zero set of `σ = H(I, X)` as a hypersurface of the flat chart.
pub fn equator_boundary(form: &AmbientForm, i: &[f64]) -> Result<Hypersurface> {
    check_standard(form, i)?;
    let n2 = form.norm2(i);
    if (n2 - 1.0).abs() > 1e-12 {
        return Err(CalcError::Branch(format!("equator needs |I|² = 1, got {n2}")));
    }
    let desc = descend_tractor(form, i)?;
    Hypersurface::new(desc.sigma.rep.clone(), 1.0, desc.metric.clone())
}

/// Fitted exponent `k` in `g₁₁ ~ σ^k` along a ray approaching the zero set
/// of `σ` through `start` in direction `dir`.
pub fn equator_blowup_rate(form: &AmbientForm, i: &[f64], start: &[f64], dir: &[f64]) -> Result<f64> {
    let sigma = equator_boundary(form, i)?;
    let model = cap_model(form, i)?;
    let at = |t: f64| -> Vec<f64> { start.iter().zip(dir).map(|(s, v)| s + t * v).collect() };
    let s = &sigma.defining;
    let (mut lo, mut hi) = (0.0, 1.0);
    while s.value(&at(hi)) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(CalcError::Domain("ray never leaves the cap".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if s.value(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t0 = lo;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 2..6 {
        let p = at(t0 - 10f64.powi(-k));
        xs.push(s.value(&p).ln());
        ys.push(model.values_at(&p)?[0].ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, Serialize)]
pub struct MapCheck {
    pub preservation_error: f64,
    pub fixes_i: bool,
    pub max_sigma_change: f64,
    pub max_distance_error: f64,
    pub is_isotropy: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsotropyReport {
    pub maps: Vec<MapCheck>,
    pub pairs: usize,
}

/// For each map: does it fix `I`, and does it preserve cap distances on the
/// sampled pairs.
pub fn isotropy_spotcheck(
    form: &AmbientForm,
    i: &[f64],
    maps: &[Vec<f64>],
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<IsotropyReport> {
    check_standard(form, i)?;
    let n = form.d + 2;
    let chart = ConeChart { d: form.d };
    let mut out = Vec::new();
    for a in maps {
        if a.len() != n * n {
            return Err(CalcError::Argument("map has wrong size".into()));
        }
        let err = form.preservation_error(a);
        if err > FORM_TOL {
            return Err(CalcError::Argument(format!("map does not preserve the form (error {err:.2e})")));
        }
        let ai = mat_vec(a, i);
        let fixes = ai.iter().zip(i).all(|(x, y)| (x - y).abs() <= FORM_TOL);
        let mut sig: f64 = 0.0;
        let mut dist: f64 = 0.0;
        for (y1, y2) in samples {
            let (x1, x2) = (chart.lift(y1), chart.lift(y2));
            let (ax1, ax2) = (mat_vec(a, &x1), mat_vec(a, &x2));
            let s1 = form.pair(i, &x1);
            sig = sig.max((form.pair(i, &ax1) - s1).abs());
            let before = cap_distance(form, i, y1, y2)?;
            let after = match (chart.chart_of(&ax1), chart.chart_of(&ax2)) {
                (Ok(z1), Ok(z2)) => cap_distance(form, i, &z1, &z2).unwrap_or(f64::INFINITY),
                _ => f64::INFINITY,
            };
            dist = dist.max((after - before).abs());
        }
        out.push(MapCheck {
            preservation_error: err,
            fixes_i: fixes,
            max_sigma_change: sig,
            max_distance_error: dist,
            is_isotropy: fixes && dist <= 1e-9,
        });
    }
    Ok(IsotropyReport { maps: out, pairs: samples.len() })
}

/// Standard representatives of the three branches: `|I|² = 1, −1, 0`.
pub fn standard_ambient(d: usize, norm: i32) -> Result<Vec<f64>> {
    let mut i = vec![0.0; d + 2];
    match norm {
        1 => {
            i[0] = 1.0;
            i[d + 1] = 0.5;
        }
        -1 => {
            i[0] = -std::f64::consts::FRAC_1_SQRT_2;
            i[d + 1] = std::f64::consts::FRAC_1_SQRT_2;
        }
        0 => i[0] = -1.0,
        _ => return Err(CalcError::Argument(format!("norm must be +1, -1 or 0, got {norm}"))),
    }
    Ok(i)
}
