//! Hypersurfaces given as zero sets: conormal, mean curvature, normal
//! tractor, umbilicity, tangential projection and the boundary operators.

mod intrinsic;
mod probe;

pub use intrinsic::{delta_ell, delta_ell_order, dxs_check, robin_delta, DeltaValue, IntrinsicChart};
pub use probe::{measure_robin_constant, normal_order_probe, ProbeReport, RobinConstant};

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::geometry::{invert_small, LocalGeometry};
use crate::fields_charts::{LocalField, MetricModel, ScalarJetField, Slot};
use crate::jet::Jet;
use crate::tractor::value::TractorValue;

/// Relative tolerance for `x(p) = 0`.
pub const ON_SURFACE_TOL: f64 = 1e-9;

/// Zero set of a defining function in a host metric. `sign` fixes the
/// conormal orientation: `n = sign·∇x/|∇x|_g`.
#[derive(Clone, Debug)]
pub struct Hypersurface {
    pub defining: ScalarJetField,
    pub sign: f64,
    pub metric: MetricModel,
}

/// Conormal and mean-curvature jets about a point, with the ambient geometry.
#[derive(Clone, Debug)]
pub struct SurfaceJets {
    pub n: Vec<Jet>,
    pub h: Jet,
    pub geo: LocalGeometry,
}

impl SurfaceJets {
    /// `N = (0, n_a, −H)` as a weight-0 tractor field.
    pub fn normal_tractor(&self) -> LocalField {
        let lo = self.h.order();
        let n: Vec<Jet> = self.n.iter().map(|j| j.truncate(lo)).collect();
        LocalField::tractor(self.h.lift(0.0), n, -&self.h, Rational64::from(0))
    }
}

/// Trace-free second fundamental form norm and tangential variation of `N`.
#[derive(Clone, Debug, Serialize)]
pub struct UmbilicReport {
    pub trace_free_norm: f64,
    pub normal_tractor_variation: f64,
}

impl Hypersurface {
    pub fn new(defining: ScalarJetField, sign: f64, metric: MetricModel) -> Result<Self> {
        if defining.dim() != metric.dim() {
            return Err(CalcError::Argument("defining function and metric dimensions differ".into()));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(CalcError::Argument("orientation sign must be ±1".into()));
        }
        Ok(Hypersurface { defining, sign, metric })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Domain error unless `p` lies on the zero set with `dx ≠ 0`.
    pub fn check_on(&self, p: &[f64]) -> Result<()> {
        self.metric.chart.check(p)?;
        let j = self.defining.jet_at(p, 1)?;
        let gn = j.gradient()?.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-12 {
            return Err(CalcError::NotDefining(format!("dx vanishes at {p:?}")));
        }
        if j.value().abs() > ON_SURFACE_TOL * gn.max(1.0) {
            return Err(CalcError::Domain(format!("point {p:?} is off the hypersurface (x = {:e})", j.value())));
        }
        Ok(())
    }

    /// Newton projection of `q` onto the zero set along the Euclidean gradient.
    pub fn project_point(&self, q: &[f64]) -> Result<Vec<f64>> {
        let mut p = q.to_vec();
        for _ in 0..60 {
            let j = self.defining.jet_at(&p, 1)?;
            let g = j.gradient()?;
            let g2: f64 = g.iter().map(|x| x * x).sum();
            if g2 < 1e-24 {
                return Err(CalcError::NotDefining("dx vanishes during projection".into()));
            }
            let step = j.value() / g2;
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= step * gi;
            }
            if j.value().abs() < 1e-15 * g2.sqrt().max(1.0) {
                break;
            }
        }
        self.check_on(&p)?;
        Ok(p)
    }

    /// Reproducible sample of surface points: chart samples projected onto Σ.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut s = seed;
        while out.len() < count {
            for q in self.metric.chart.sample(s, count) {
                if out.len() == count {
                    break;
                }
                if let Ok(p) = self.project_point(&q) {
                    out.push(p);
                }
            }
            s = s.wrapping_add(7919);
        }
        out
    }

    /// Unit conormal `n_a` as jets of order `order` about `p` (any point where
    /// `dx ≠ 0`; the extension off Σ is the normalized gradient).
    pub fn conormal_jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let d = self.dim();
        let x = self.defining.jet_at(p, order + 1)?;
        let dx: Vec<Jet> = (0..d).map(|a| x.d(a)).collect::<Result<_>>()?;
        let ginv = crate::jet::inverse(&self.metric.components_at(p, order)?, d)?;
        let mut n2 = dx[0].lift(0.0);
        for a in 0..d {
            for b in 0..d {
                n2 = &n2 + &(&ginv[a * d + b] * &(&dx[a] * &dx[b]));
            }
        }
        let inv = n2.powf(-0.5).scale(self.sign);
        Ok(dx.iter().map(|v| v * &inv).collect())
    }

    /// Conormal and mean curvature jets of order `order` about `p`; the
    /// geometry carries order `order + 2`.
    pub fn jets(&self, p: &[f64], order: usize) -> Result<SurfaceJets> {
        let d = self.dim();
        let geo = LocalGeometry::at(&self.metric, p, (order + 2).max(2))?;
        let n = self.conormal_jets(p, order + 1)?;
        let nf = LocalField::new(d, vec![Slot::Down], n.clone(), Rational64::from(1));
        let dn = nf.covariant_derivative(&geo)?;
        let nup: Vec<Jet> = (0..d)
            .map(|a| crate::jet::sum((0..d).map(|b| &geo.ginv[a * d + b] * &n[b]).collect::<Vec<_>>().iter()).unwrap())
            .collect();
        let mut h = dn.comps[0].lift(0.0);
        for a in 0..d {
            for b in 0..d {
                let coef = &geo.ginv[a * d + b] - &(&nup[a] * &nup[b]);
                h = &h + &(&coef * &dn.comps[a * d + b]);
            }
        }
        let h = h.scale(1.0 / (d as f64 - 1.0));
        Ok(SurfaceJets { n: n.iter().map(|j| j.truncate(order)).collect(), h, geo })
    }

    pub fn conormal(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_on(p)?;
        Ok(self.conormal_jets(p, 0)?.iter().map(|j| j.value()).collect())
    }

    /// Mean curvature `H = (∇_a n^a − n^a n^b ∇_a n_b)/(d−1)`, weight −1.
    pub fn mean_curvature(&self, p: &[f64]) -> Result<f64> {
        self.check_on(p)?;
        Ok(self.jets(p, 0)?.h.value())
    }

    /// `N = (0, n_a, −H)`.
    pub fn normal_tractor(&self, p: &[f64]) -> Result<TractorValue> {
        self.check_on(p)?;
        let sj = self.jets(p, 0)?;
        let nt = sj.normal_tractor();
        let g = self.metric.values_at(p)?;
        TractorValue::new(1, nt.values(), Rational64::from(0), self.metric.scale.clone(), p, invert_small(&g, self.dim()))
    }

    pub fn umbilicity_defect(&self, p: &[f64]) -> Result<UmbilicReport> {
        self.check_on(p)?;
        let d = self.dim();
        let sj = self.jets(p, 1)?;
        let geo = &sj.geo;
        let nf = LocalField::new(d, vec![Slot::Down], sj.n.clone(), Rational64::from(1));
        let dn: Vec<f64> = nf.covariant_derivative(geo)?.values();
        let g: Vec<f64> = geo.g.iter().map(|j| j.value()).collect();
        let gi: Vec<f64> = geo.ginv.iter().map(|j| j.value()).collect();
        let n: Vec<f64> = sj.n.iter().map(|j| j.value()).collect();
        let nup: Vec<f64> = (0..d).map(|a| (0..d).map(|b| gi[a * d + b] * n[b]).sum()).collect();
        // Π_a^c = δ_a^c − n_a n^c
        let pi = |a: usize, c: usize| (if a == c { 1.0 } else { 0.0 }) - n[a] * nup[c];
        let h = sj.h.value();
        let mut tf = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                let mut s = 0.0;
                for c in 0..d {
                    for e in 0..d {
                        s += pi(a, c) * pi(b, e) * dn[c * d + e];
                    }
                }
                tf[a * d + b] = s - h * (g[a * d + b] - n[a] * n[b]);
            }
        }
        let mut norm2 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        norm2 += gi[a * d + c] * gi[b * d + e] * tf[a * d + b] * tf[c * d + e];
                    }
                }
            }
        }
        let dnt = sj.normal_tractor().covariant_derivative(geo)?.values();
        let m = d + 2;
        let mut var: f64 = 0.0;
        for a in 0..d {
            for bb in 0..m {
                let v: f64 = (0..d).map(|c| pi(a, c) * dnt[c * m + bb]).sum();
                var = var.max(v.abs());
            }
        }
        Ok(UmbilicReport { trace_free_norm: norm2.max(0.0).sqrt(), normal_tractor_variation: var })
    }
}

/// Apply `v ↦ v − N h(N, v)` on every tractor slot of local jets.
pub(crate) fn project_slots(f: &LocalField, nt: &LocalField, ginv: &[Jet]) -> LocalField {
    let d = f.dim;
    let m = d + 2;
    let lo = f.order().min(nt.order());
    let nlow: Vec<Jet> = {
        let mut l = vec![nt.comps[d + 1].truncate(lo); m];
        l[d + 1] = nt.comps[0].truncate(lo);
        for a in 0..d {
            let terms: Vec<Jet> = (0..d).map(|b| &ginv[a * d + b] * &nt.comps[1 + b]).collect();
            l[1 + a] = crate::jet::sum(terms.iter()).unwrap().truncate(lo);
        }
        l
    };
    let sizes = f.sizes();
    let strides = f.strides();
    let mut cur: Vec<Jet> = f.comps.iter().map(|j| j.truncate(lo)).collect();
    for (s, &slot) in f.slots.iter().enumerate() {
        if slot != Slot::Tractor {
            continue;
        }
        let st = strides[s];
        let mut next = cur.clone();
        for (flat, out) in next.iter_mut().enumerate() {
            let i = (flat / st) % sizes[s];
            let base = flat - i * st;
            let mut hv = cur[base].lift(0.0);
            for j in 0..m {
                hv = &hv + &(&nlow[j] * &cur[base + j * st]);
            }
            *out = &cur[flat] - &(&nt.comps[i] * &hv);
        }
        cur = next;
    }
    LocalField::new(d, f.slots.clone(), cur, f.weight)
}

/// Tangential part of an ambient tractor at a point of Σ.
pub fn project_sigma(t: &TractorValue, sigma: &Hypersurface) -> Result<TractorValue> {
    if t.scale != sigma.metric.scale {
        return Err(CalcError::Scale(format!("tractor in {}, hypersurface host in {}", t.scale, sigma.metric.scale)));
    }
    let nt = sigma.normal_tractor(&t.point)?;
    let d = t.dim;
    let m = d + 2;
    let mut nlow = vec![0.0; m];
    nlow[0] = nt.rho();
    nlow[d + 1] = nt.sigma();
    for a in 0..d {
        nlow[1 + a] = (0..d).map(|b| nt.ginv[a * d + b] * nt.comps[1 + b]).sum();
    }
    let mut cur = t.comps.clone();
    for slot in 0..t.rank {
        let st = m.pow((t.rank - 1 - slot) as u32);
        let mut next = cur.clone();
        for (flat, out) in next.iter_mut().enumerate() {
            let i = (flat / st) % m;
            let base = flat - i * st;
            let hv: f64 = (0..m).map(|j| nlow[j] * cur[base + j * st]).sum();
            *out = cur[flat] - nt.comps[i] * hv;
        }
        cur = next;
    }
    TractorValue::new(t.rank, cur, t.weight, t.scale.clone(), &t.point, t.ginv.clone())
}

#[cfg(test)]
mod tests;
