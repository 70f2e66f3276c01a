//! Conformal powers of the Laplacian on an Einstein scale, evaluated four
//! ways: the tractor formula with `Box` in the middle, iterated `I·D`,
//! a product of shifted Laplacians of `g₊ = σ⁻²g`, and a composition of
//! scattering Laplacians.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::almost_einstein::{AEStructure, AE_TOL};
use crate::error::{CalcError, Result};
use crate::fields_charts::geometry::{curvature_pack, LocalGeometry};
use crate::fields_charts::{DensityField, LocalField, MetricModel, ScalarJetField};
use crate::tractor::ops::{thomas_d_local, yamabe_box_local};

/// Largest `k` accepted unless raised with [`GjmsSpec::with_k_cap`].
pub const DEFAULT_K_CAP: usize = 6;
/// Points with `σ` below this are treated as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-12;

fn r(n: i64) -> Rational64 {
    Rational64::from(n)
}

/// `λ_ℓ = Sc·(d+2ℓ−2)(d−2ℓ) / (4d(d−1))` for `ℓ = 1..k/2`.
pub fn lambda_list(k: usize, d: usize, sc: Rational64) -> Result<Vec<Rational64>> {
    check_k(k)?;
    let d = d as i64;
    Ok((1..=(k / 2) as i64)
        .map(|l| sc * r((d + 2 * l - 2) * (d - 2 * l)) / r(4 * d * (d - 1)))
        .collect())
}

/// `s_i = (k+n+1−2i)/2` for `i = 1..k/2`.
pub fn s_list(k: usize, n: usize) -> Result<Vec<Rational64>> {
    check_k(k)?;
    Ok((1..=(k / 2) as i64).map(|i| Rational64::new(k as i64 + n as i64 + 1 - 2 * i, 2)).collect())
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(CalcError::Argument(format!("k must be even and ≥ 2, got {k}")));
    }
    Ok(())
}

/// `s(n−s)`.
pub fn s_shift(s: Rational64, n: usize) -> Rational64 {
    s * (r(n as i64) - s)
}

/// Exact parameters of `P_k` on a normalized Einstein scale (`Sc = −d(d−1)`).
#[derive(Clone, Debug, Serialize)]
pub struct GjmsSpec {
    pub k: usize,
    pub d: usize,
    pub n: usize,
    #[serde(serialize_with = "ser_ratios")]
    pub lambdas: Vec<Rational64>,
    #[serde(serialize_with = "ser_ratios")]
    pub s: Vec<Rational64>,
    pub k_cap: usize,
}

fn ser_ratios<S: serde::Serializer>(v: &[Rational64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

impl GjmsSpec {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if d < 3 {
            return Err(CalcError::Argument(format!("dimension must be ≥ 3, got {d}")));
        }
        let n = d - 1;
        let sc = -r((d * (d - 1)) as i64);
        let lambdas = lambda_list(k, d, sc)?;
        let s = s_list(k, n)?;
        let m = k / 2;
        for i in 0..m {
            if lambdas[m - 1 - i] != -s_shift(s[i], n) {
                return Err(CalcError::Degenerate(format!(
                    "λ_{} = {} but −s(n−s) = {} for s = {}",
                    m - i,
                    lambdas[m - 1 - i],
                    -s_shift(s[i], n),
                    s[i]
                )));
            }
        }
        let shifts: Vec<Rational64> = s.iter().map(|x| s_shift(*x, n)).collect();
        for i in 0..m {
            for j in 0..i {
                if s[i] == s[j] || shifts[i] == shifts[j] {
                    return Err(CalcError::Degenerate("spectral parameters are not distinct".into()));
                }
            }
        }
        Ok(GjmsSpec { k, d, n, lambdas, s, k_cap: DEFAULT_K_CAP })
    }

    pub fn with_k_cap(mut self, cap: usize) -> Self {
        self.k_cap = cap;
        self
    }

    /// Weight `(k−d)/2` of the input density.
    pub fn input_weight(&self) -> Rational64 {
        Rational64::new(self.k as i64 - self.d as i64, 2)
    }

    pub fn output_weight(&self) -> Rational64 {
        Rational64::new(-(self.k as i64) - self.d as i64, 2)
    }

    /// `s(n−s)` for each `s_i`, in the order `i = 1..k/2`.
    pub fn shifts(&self) -> Vec<Rational64> {
        self.s.iter().map(|x| s_shift(*x, self.n)).collect()
    }

    fn check_cap(&self) -> Result<()> {
        if self.k > self.k_cap {
            return Err(CalcError::Capability(format!(
                "k = {} exceeds the jet budget cap {}; raise it with with_k_cap",
                self.k, self.k_cap
            )));
        }
        Ok(())
    }
}

fn f(x: Rational64) -> f64 {
    x.to_f64().expect("finite rational")
}

/// An almost-Einstein scale with `|I|² = 1`, together with `g₊ = σ⁻²g`.
#[derive(Clone, Debug)]
pub struct EinsteinScale {
    pub ae: AEStructure,
    pub gplus: MetricModel,
}

impl EinsteinScale {
    pub fn new(ae: AEStructure) -> Result<Self> {
        if (ae.i_norm2 - 1.0).abs() > AE_TOL {
            return Err(CalcError::Normalization(format!("need |I|² = 1, got {}", ae.i_norm2)));
        }
        if let Some(w) = &ae.warning {
            return Err(CalcError::NotAlmostEinstein(w.clone()));
        }
        let omega = ae.sigma.rep.map("-ln σ", |j| j.ln().scale(-1.0));
        let gplus = MetricModel::conformal_rescale(omega, &ae.metric);
        Ok(EinsteinScale { ae, gplus })
    }

    /// The Poincaré ball in dimension `d`.
    pub fn unit_ball(d: usize) -> Result<Self> {
        Self::new(crate::almost_einstein::ball_structure(d)?)
    }

    pub fn dim(&self) -> usize {
        self.ae.dim()
    }

    pub fn sigma(&self, p: &[f64]) -> f64 {
        self.ae.sigma.rep.value(p)
    }

    /// `σ(p)`, refusing points on or across the zero set.
    pub fn interior_sigma(&self, p: &[f64]) -> Result<f64> {
        self.ae.metric.chart.check(p)?;
        let s = self.sigma(p);
        if s.abs() <= BOUNDARY_TOL {
            return Err(CalcError::BoundaryDegeneracy(format!(
                "σ = {s:.3e} at the point; the operator degenerates to a normal operator there"
            )));
        }
        if s < 0.0 {
            return Err(CalcError::Domain("σ < 0: outside the Einstein region".into()));
        }
        Ok(s)
    }

    /// `max|Ric(g₊) + n·g₊| / max|g₊|` at `p`.
    pub fn einstein_residual(&self, p: &[f64]) -> Result<f64> {
        self.interior_sigma(p)?;
        let c = curvature_pack(&self.gplus, p)?;
        let n = (self.dim() - 1) as f64;
        let gmax = c.metric.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(c.ricci.iter().zip(&c.metric).fold(0.0f64, |m, (a, g)| m.max((a + n * g).abs())) / gmax)
    }

    /// Representative in the `g₊` scale of a density of weight `w` whose
    /// working-scale representative is `value`: multiply by `σ^{−w}`.
    pub fn to_einstein(&self, value: f64, weight: Rational64, p: &[f64]) -> Result<f64> {
        let s = self.interior_sigma(p)?;
        Ok(value * s.powf(-f(weight)))
    }

    /// Field version of [`EinsteinScale::to_einstein`].
    pub fn density_to_function(&self, u: &DensityField) -> Result<ScalarJetField> {
        if u.scale != self.ae.metric.scale {
            return Err(CalcError::Scale(format!("density in {}, scale in {}", u.scale, self.ae.metric.scale)));
        }
        let w = -f(u.weight);
        Ok(u.rep.mul(&self.ae.sigma.rep.powf(w)))
    }

    /// Inverse of [`EinsteinScale::density_to_function`].
    pub fn function_to_density(&self, big_u: &ScalarJetField, weight: Rational64) -> DensityField {
        let rep = big_u.mul(&self.ae.sigma.rep.powf(f(weight)));
        DensityField::new(weight, self.ae.metric.scale.clone(), rep)
    }

    fn gplus_local(&self, u: &ScalarJetField, p: &[f64], order: usize) -> Result<(LocalField, LocalGeometry)> {
        self.interior_sigma(p)?;
        let geo = LocalGeometry::at(&self.gplus, p, order + 1)?;
        Ok((LocalField::scalar(u.jet_at(p, order)?, Rational64::zero()), geo))
    }

    fn flat_local(&self, u: &DensityField, p: &[f64], order: usize) -> Result<(LocalField, LocalField, LocalGeometry)> {
        if u.scale != self.ae.metric.scale {
            return Err(CalcError::Scale(format!("density in {}, scale in {}", u.scale, self.ae.metric.scale)));
        }
        self.interior_sigma(p)?;
        let geo = LocalGeometry::at(&self.ae.metric, p, order + 1)?;
        let i = self.ae.i.local(p, order)?;
        Ok((LocalField::scalar(u.rep.jet_at(p, order)?, u.weight), i, geo))
    }
}

/// `∏ (Δ^{g₊} + c_j)` applied right to left (the last shift acts first).
pub fn apply_shifted_laplacians(shifts: &[f64], big_u: &ScalarJetField, es: &EinsteinScale, p: &[f64]) -> Result<f64> {
    let (mut v, geo) = es.gplus_local(big_u, p, 2 * shifts.len())?;
    for c in shifts.iter().rev() {
        let lap = v.laplacian(&geo)?;
        v = lap.add(&v.truncate(lap.order()).scale(*c))?;
    }
    Ok(v.value())
}

/// `(Δ^{g₊} − s(n−s))U` at `p`.
pub fn scattering_laplacian(s: f64, big_u: &ScalarJetField, es: &EinsteinScale, p: &[f64]) -> Result<f64> {
    let n = (es.dim() - 1) as f64;
    apply_shifted_laplacians(&[-s * (n - s)], big_u, es, p)
}

/// `σ I^A D_A u` for a density of weight `w`, read in the `g₊` scale. Returns
/// `(s, value)` with `s = n + w`, the parameter for which this equals
/// [`scattering_laplacian`] of `σ^{−w}u`.
pub fn scattering_laplacian_tractor(u: &DensityField, es: &EinsteinScale, p: &[f64]) -> Result<(f64, f64)> {
    let (v, i, geo) = es.flat_local(u, p, 2)?;
    let s = es.interior_sigma(p)?;
    let out = thomas_d_local(&v, &geo)?.pair_tractor(0, &i.truncate(0), &geo)?;
    let n = (es.dim() - 1) as f64;
    Ok((n + f(u.weight), es.to_einstein(s * out.value(), u.weight, p)?))
}

fn check_input(spec: &GjmsSpec, u: &DensityField, es: &EinsteinScale) -> Result<()> {
    spec.check_cap()?;
    if spec.d != es.dim() {
        return Err(CalcError::Argument(format!("spec has d = {}, scale has d = {}", spec.d, es.dim())));
    }
    if u.weight != spec.input_weight() {
        return Err(CalcError::Weight(format!("P_{} needs weight {}, got {}", spec.k, spec.input_weight(), u.weight)));
    }
    Ok(())
}

/// `σ^{1−k/2} I⋯I Box D⋯D u` in the working scale, read in the `g₊` scale.
pub fn gjms_tractor_form(spec: &GjmsSpec, u: &DensityField, es: &EinsteinScale, p: &[f64]) -> Result<f64> {
    check_input(spec, u, es)?;
    let (mut v, i, geo) = es.flat_local(u, p, spec.k)?;
    let m = spec.k / 2 - 1;
    for _ in 0..m {
        v = thomas_d_local(&v, &geo)?;
    }
    v = yamabe_box_local(&v, &geo)?;
    let i0 = i.truncate(0);
    for _ in 0..m {
        v = v.pair_tractor(0, &i0, &geo)?;
    }
    let s = es.interior_sigma(p)?;
    let val = s.powf(-(m as f64)) * v.value();
    es.to_einstein(val, spec.output_weight(), p)
}

/// `σ^{−k/2} (I·D)^{k/2} u`, read in the `g₊` scale.
pub fn gjms_iterated_form(spec: &GjmsSpec, u: &DensityField, es: &EinsteinScale, p: &[f64]) -> Result<f64> {
    check_input(spec, u, es)?;
    let (mut v, i, geo) = es.flat_local(u, p, spec.k)?;
    for _ in 0..spec.k / 2 {
        let dv = thomas_d_local(&v, &geo)?;
        v = dv.pair_tractor(0, &i.truncate(dv.order()), &geo)?;
    }
    let s = es.interior_sigma(p)?;
    es.to_einstein(s.powf(-((spec.k / 2) as f64)) * v.value(), spec.output_weight(), p)
}

/// `∏_ℓ (Δ^{g₊} + λ_ℓ)` applied to `U = σ^{−w₀}u`.
pub fn gjms_product_form(spec: &GjmsSpec, u: &DensityField, es: &EinsteinScale, p: &[f64]) -> Result<f64> {
    check_input(spec, u, es)?;
    let big_u = es.density_to_function(u)?;
    let shifts: Vec<f64> = spec.lambdas.iter().map(|x| f(*x)).collect();
    apply_shifted_laplacians(&shifts, &big_u, es, p)
}

/// Composition of scattering Laplacians at `s_1, …, s_{k/2}`, innermost `s_{k/2}`.
pub fn gjms_scp_form(spec: &GjmsSpec, u: &DensityField, es: &EinsteinScale, p: &[f64]) -> Result<f64> {
    check_input(spec, u, es)?;
    let big_u = es.density_to_function(u)?;
    let n = spec.n as f64;
    let (mut v, geo) = es.gplus_local(&big_u, p, spec.k)?;
    for s in spec.s.iter().rev() {
        let s = f(*s);
        let lap = v.laplacian(&geo)?;
        v = lap.sub(&v.truncate(lap.order()).scale(s * (n - s)))?;
    }
    Ok(v.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GjmsForm {
    Tractor,
    Iterated,
    Product,
    Scp,
}

impl GjmsForm {
    pub const ALL: [GjmsForm; 4] = [GjmsForm::Tractor, GjmsForm::Iterated, GjmsForm::Product, GjmsForm::Scp];

    pub fn eval(self, spec: &GjmsSpec, u: &DensityField, es: &EinsteinScale, p: &[f64]) -> Result<f64> {
        match self {
            GjmsForm::Tractor => gjms_tractor_form(spec, u, es, p),
            GjmsForm::Iterated => gjms_iterated_form(spec, u, es, p),
            GjmsForm::Product => gjms_product_form(spec, u, es, p),
            GjmsForm::Scp => gjms_scp_form(spec, u, es, p),
        }
    }
}

/// One row of a per-point comparison.
#[derive(Clone, Debug, Serialize)]
pub struct GjmsRow {
    pub point: Vec<f64>,
    pub sigma: f64,
    pub values: Vec<(GjmsForm, f64)>,
    /// `max|a − b| / max(1, max|a|)` over all pairs of forms.
    pub max_rel_spread: f64,
}

pub fn agreement_table(
    spec: &GjmsSpec,
    forms: &[GjmsForm],
    u: &DensityField,
    es: &EinsteinScale,
    points: &[Vec<f64>],
) -> Result<Vec<GjmsRow>> {
    points
        .par_iter()
        .map(|p| {
            let values = forms.iter().map(|fm| Ok((*fm, fm.eval(spec, u, es, p)?))).collect::<Result<Vec<_>>>()?;
            let scale = values.iter().fold(1.0f64, |m, (_, v)| m.max(v.abs()));
            let lo = values.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            let hi = values.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
            Ok(GjmsRow { point: p.clone(), sigma: es.sigma(p), values, max_rel_spread: (hi - lo) / scale })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::almost_einstein::build_i;
    use crate::fields_charts::chart::{rng_from_seed, uniform_in_ball};
    use crate::jet::Jet;
    use crate::tractor::field::TractorField;
    use crate::tractor::ops::yamabe_box;

    fn r2(y: &[Jet]) -> Jet {
        y.iter().fold(y[0].lift(0.0), |a, v| &a + &(v * v))
    }

    fn ball(d: usize) -> EinsteinScale {
        let m = MetricModel::flat(d).unwrap();
        let s = DensityField::new(r(1), m.scale.clone(), ScalarJetField::new(d, "ball", |y| (-&r2(y) + 1.0).scale(0.5)));
        EinsteinScale::new(build_i(&s, &m).unwrap()).unwrap()
    }

    fn probe(d: usize, w: Rational64, m: &MetricModel) -> DensityField {
        let rep = ScalarJetField::new(d, "probe", move |y| {
            let a = &(&y[0] * &y[1]) * 0.4;
            let b = &(&y[2] * &y[2]) * &y[0];
            (&(&a - &b.scale(0.3)) + &y[d - 1].scale(0.7)).add_scalar(1.2) + (&y[1] * 0.5).sin()
        });
        DensityField::new(w, m.scale.clone(), rep)
    }

    fn interior(n: usize, seed: u64, d: usize) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| uniform_in_ball(&mut rng, d, 0.8)).collect()
    }

    #[test]
    fn exact_lists() {
        assert_eq!(s_list(2, 3).unwrap(), vec![r(2)]);
        assert_eq!(s_shift(r(2), 3), r(2));
        assert_eq!(lambda_list(2, 4, r(-12)).unwrap(), vec![r(-2)]);
        assert_eq!(s_list(4, 3).unwrap(), vec![r(3), r(2)]);
        let spec = GjmsSpec::new(4, 4).unwrap();
        assert_eq!(spec.shifts(), vec![r(0), r(2)]);
        assert_eq!(spec.lambdas, vec![r(-2), r(0)]);
        for n in 3..=12usize {
            assert_eq!(s_list(2, n).unwrap()[0], Rational64::new(n as i64 + 1, 2));
        }
        // λ_{k/2+1−i} = −s_i(n−s_i), exactly
        for k in [2usize, 4, 6, 8] {
            for n in 3..=8usize {
                let spec = GjmsSpec::new(k, n + 1).unwrap();
                let m = k / 2;
                for i in 0..m {
                    assert_eq!(spec.lambdas[m - 1 - i], -s_shift(spec.s[i], n));
                }
            }
        }
        assert!(s_list(3, 3).is_err());
    }

    #[test]
    fn hyperbolic_lambdas() {
        for d in 3..9usize {
            let l = lambda_list(6, d, -r((d * (d - 1)) as i64)).unwrap();
            for (idx, x) in l.iter().enumerate() {
                let ell = idx as i64 + 1;
                let d = d as i64;
                assert_eq!(*x, -Rational64::new((d + 2 * ell - 2) * (d - 2 * ell), 4));
            }
        }
    }

    #[test]
    fn scattering_laplacian_forms() {
        let es = ball(4);
        let one = ScalarJetField::constant(4, 1.0);
        let p = [0.1, 0.2, -0.3, 0.1];
        assert!((scattering_laplacian(2.0, &one, &es, &p).unwrap() + 2.0).abs() < 1e-12);
        let m = es.ae.metric.clone();
        let u = probe(4, r(-1), &m);
        let big_u = es.density_to_function(&u).unwrap();
        for p in interior(100, 3, 4) {
            let a = scattering_laplacian(2.0, &big_u, &es, &p).unwrap();
            let b = scattering_laplacian(1.0, &big_u, &es, &p).unwrap();
            let (s, c) = scattering_laplacian_tractor(&u, &es, &p).unwrap();
            assert_eq!(s, 2.0);
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            assert!((a - c).abs() < 1e-9 * a.abs().max(1.0), "{a} {c}");
        }
        let edge = [1.0, 0.0, 0.0, 0.0];
        assert!(matches!(scattering_laplacian(2.0, &one, &es, &edge), Err(CalcError::BoundaryDegeneracy(_))));
    }

    #[test]
    fn einstein_scale_checks() {
        let es = ball(4);
        for p in interior(5, 1, 4) {
            assert!(es.einstein_residual(&p).unwrap() < 1e-10);
        }
        let m = MetricModel::flat(4).unwrap();
        let s = DensityField::new(r(1), m.scale.clone(), ScalarJetField::new(4, "2ball", |y| -&r2(y) + 1.0));
        assert!(matches!(EinsteinScale::new(build_i(&s, &m).unwrap()), Err(CalcError::Normalization(_))));
    }

    #[test]
    fn dictionary_round_trip() {
        let es = ball(4);
        let u = probe(4, Rational64::new(-3, 2), &es.ae.metric);
        let back = es.function_to_density(&es.density_to_function(&u).unwrap(), u.weight);
        for p in interior(10, 2, 4) {
            assert!((back.rep.value(&p) - u.rep.value(&p)).abs() < 1e-14);
            let s = es.sigma(&p);
            assert!((es.to_einstein(u.rep.value(&p), u.weight, &p).unwrap() - s.powf(1.5) * u.rep.value(&p)).abs() < 1e-14);
        }
    }

    #[test]
    fn k2_is_yamabe() {
        let es = ball(4);
        let spec = GjmsSpec::new(2, 4).unwrap();
        let u = probe(4, spec.input_weight(), &es.ae.metric);
        let big_u = es.density_to_function(&u).unwrap();
        let tf = TractorField::from_density(&u);
        for p in interior(20, 4, 4) {
            let prod = gjms_product_form(&spec, &u, &es, &p).unwrap();
            let y = yamabe_box(&tf, &es.ae.metric, &p).unwrap().comps[0];
            let y = es.to_einstein(y, spec.output_weight(), &p).unwrap();
            assert!((prod - y).abs() < 1e-9 * prod.abs().max(1.0));
            let sl = scattering_laplacian(2.0, &big_u, &es, &p).unwrap();
            assert!((prod - sl).abs() < 1e-10 * prod.abs().max(1.0));
            assert!((gjms_tractor_form(&spec, &u, &es, &p).unwrap() - prod).abs() < 1e-9 * prod.abs().max(1.0));
        }
    }

    #[test]
    fn k4_forms_agree() {
        let es = ball(4);
        let spec = GjmsSpec::new(4, 4).unwrap();
        let u = probe(4, spec.input_weight(), &es.ae.metric);
        let rows = agreement_table(&spec, &GjmsForm::ALL, &u, &es, &interior(50, 5, 4)).unwrap();
        let worst = rows.iter().map(|r| r.max_rel_spread).fold(0.0, f64::max);
        assert!(worst < 1e-8, "spread {worst}");
        // constant U: (Δ−2)Δ1 = 0
        let one = es.function_to_density(&ScalarJetField::constant(4, 1.0), spec.input_weight());
        let p = [0.3, 0.1, 0.0, -0.2];
        for fm in GjmsForm::ALL {
            assert!(fm.eval(&spec, &one, &es, &p).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn k6_forms_agree() {
        let es = ball(4);
        let spec = GjmsSpec::new(6, 4).unwrap();
        let u = probe(4, spec.input_weight(), &es.ae.metric);
        let rows = agreement_table(&spec, &GjmsForm::ALL, &u, &es, &interior(3, 6, 4)).unwrap();
        let worst = rows.iter().map(|r| r.max_rel_spread).fold(0.0, f64::max);
        assert!(worst < 1e-7, "spread {worst}");
    }

    #[test]
    fn factor_order_is_irrelevant() {
        let es = ball(4);
        let spec = GjmsSpec::new(6, 4).unwrap();
        let u = probe(4, spec.input_weight(), &es.ae.metric);
        let big_u = es.density_to_function(&u).unwrap();
        let l: Vec<f64> = spec.lambdas.iter().map(|x| f(*x)).collect();
        let p = [0.2, -0.1, 0.15, 0.3];
        let a = apply_shifted_laplacians(&l, &big_u, &es, &p).unwrap();
        for perm in [[2usize, 0, 1], [1, 2, 0], [2, 1, 0]] {
            let sh: Vec<f64> = perm.iter().map(|i| l[*i]).collect();
            let b = apply_shifted_laplacians(&sh, &big_u, &es, &p).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn argument_checks() {
        let es = ball(4);
        let spec = GjmsSpec::new(4, 4).unwrap();
        let p = [0.1, 0.0, 0.0, 0.0];
        let wrong = probe(4, r(-1), &es.ae.metric);
        assert!(matches!(gjms_tractor_form(&spec, &wrong, &es, &p), Err(CalcError::Weight(_))));
        let spec8 = GjmsSpec::new(8, 4).unwrap();
        let u8 = probe(4, spec8.input_weight(), &es.ae.metric);
        assert!(matches!(gjms_product_form(&spec8, &u8, &es, &p), Err(CalcError::Capability(_))));
        let u = probe(4, spec.input_weight(), &es.ae.metric);
        let edge = [0.0, 0.0, 1.0, 0.0];
        assert!(matches!(gjms_tractor_form(&spec, &u, &es, &edge), Err(CalcError::BoundaryDegeneracy(_))));
    }
}
