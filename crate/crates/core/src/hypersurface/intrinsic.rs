//! Tangential charts on Σ, the identification of tangential ambient tractors
//! with intrinsic ones, and the boundary operator family.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::field::weight_f64;
use crate::fields_charts::geometry::LocalGeometry;
use crate::fields_charts::{LocalField, Slot};
use crate::hypersurface::{project_slots, Hypersurface};
use crate::jet::Jet;
use crate::tractor::field::TractorField;
use crate::tractor::ops::{robin_local, thomas_d_local};

/// Chart `z ↦ p + Σ z_i t_i + h(z)ν` on Σ near `p`, with `t_i` a Euclidean
/// orthonormal tangent basis and `ν` the Euclidean unit normal.
#[derive(Clone, Debug)]
pub struct IntrinsicChart {
    pub point: Vec<f64>,
    pub tangent: Vec<Vec<f64>>,
    pub normal: Vec<f64>,
    /// Embedding jets, order `order + 1`.
    pub phi: Vec<Jet>,
    /// `∂_iφ^a` at index `i*d + a`.
    pub dphi: Vec<Jet>,
    /// Induced metric jets, order `order`.
    pub gbar: Vec<Jet>,
}

impl IntrinsicChart {
    pub fn build(sigma: &Hypersurface, p: &[f64], order: usize) -> Result<Self> {
        sigma.check_on(p)?;
        let d = sigma.dim();
        let n = d - 1;
        let grad = sigma.defining.jet_at(p, 1)?.gradient()?;
        let gn = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nu: Vec<f64> = grad.iter().map(|x| x / gn).collect();
        // Gram-Schmidt on coordinate vectors, skipping the one most aligned with ν
        let skip = (0..d).max_by(|&a, &b| nu[a].abs().total_cmp(&nu[b].abs())).unwrap();
        let mut basis: Vec<Vec<f64>> = vec![nu.clone()];
        for k in (0..d).filter(|&k| k != skip) {
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            basis.push(v.into_iter().map(|x| x / nv).collect());
        }
        let tangent: Vec<Vec<f64>> = basis[1..].to_vec();
        let m = order + 1;
        let z = Jet::coordinates(&vec![0.0; n], m);
        let flat: Vec<Jet> = (0..d)
            .map(|a| {
                let mut s = z[0].lift(p[a]);
                for (i, t) in tangent.iter().enumerate() {
                    s = &s + &z[i].scale(t[a]);
                }
                s
            })
            .collect();
        let dnu = gn;
        let mut h = z[0].lift(0.0);
        let embed = |h: &Jet| -> Vec<Jet> { flat.iter().zip(&nu).map(|(f, v)| f + &h.scale(*v)).collect() };
        for _ in 0..m + 2 {
            let x = sigma.defining.eval(&embed(&h));
            h = &h - &x.scale(1.0 / dnu);
        }
        let phi = embed(&h);
        let mut dphi = Vec::with_capacity(n * d);
        for i in 0..n {
            for a in 0..d {
                dphi.push(phi[a].d(i)?);
            }
        }
        let g = sigma.metric.components(&phi);
        let mut gbar = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = dphi[0].lift(0.0);
                for a in 0..d {
                    for b in 0..d {
                        s = &s + &(&g[a * d + b] * &(&dphi[i * d + a] * &dphi[j * d + b]));
                    }
                }
                gbar.push(s);
            }
        }
        Ok(IntrinsicChart { point: p.to_vec(), tangent, normal: nu, phi, dphi, gbar })
    }

    pub fn dim(&self) -> usize {
        self.tangent.len()
    }

    pub fn geometry(&self) -> Result<LocalGeometry> {
        LocalGeometry::from_components(vec![0.0; self.dim()], self.gbar.clone())
    }

    /// Ambient jets about `p` re-expanded in the chart variables.
    pub fn restrict(&self, f: &LocalField) -> LocalField {
        f.compose(&self.phi)
    }

    /// Tangential ambient tractor slots (already restricted) to intrinsic
    /// slots: `σ̄ = σ`, `μ̄_i = ∂_iφ^a μ_a`, `ρ̄ = ρ + ½H²σ`.
    pub fn to_intrinsic(&self, f: &LocalField, h: &Jet) -> Result<LocalField> {
        if f.slots.iter().any(|s| *s != Slot::Tractor) {
            return Err(CalcError::Argument("only pure tractor fields can be identified".into()));
        }
        let d = f.dim;
        let n = self.dim();
        let (ma, mi) = (d + 2, n + 2);
        let lo = f.order().min(h.order());
        let half_h2 = (h * h).scale(0.5).truncate(lo);
        let rank = f.rank();
        let mut cur: Vec<Jet> = f.comps.iter().map(|j| j.truncate(lo)).collect();
        // map slots from the last to the first; slots after `s` are already intrinsic
        for s in (0..rank).rev() {
            let after = mi.pow((rank - 1 - s) as u32);
            let before = ma.pow(s as u32);
            let mut next = Vec::with_capacity(before * mi * after);
            for b in 0..before {
                let src = |k: usize, r: usize| &cur[(b * ma + k) * after + r];
                for i in 0..mi {
                    for r in 0..after {
                        let v = if i == 0 {
                            src(0, r).clone()
                        } else if i == mi - 1 {
                            src(ma - 1, r) + &(&half_h2 * src(0, r))
                        } else {
                            let row = i - 1;
                            let mut acc = src(1, r) * &self.dphi[row * d];
                            for a in 1..d {
                                acc = &acc + &(src(1 + a, r) * &self.dphi[row * d + a]);
                            }
                            acc
                        };
                        next.push(v);
                    }
                }
            }
            cur = next;
        }
        Ok(LocalField::new(n, vec![Slot::Tractor; rank], cur, f.weight))
    }
}

/// Value of a boundary operator with its weight.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaValue {
    pub ell: usize,
    pub value: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub weight: Rational64,
}

fn ser_ratio<S: serde::Serializer>(w: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

/// Jet order of `u` consumed by [`delta_ell`].
pub fn delta_ell_order(ell: usize) -> usize {
    let m = ell / 2;
    4 * m + ell % 2
}

fn density_check(u: &TractorField, sigma: &Hypersurface) -> Result<()> {
    if u.rank != 0 {
        return Err(CalcError::Argument("boundary operators act on densities".into()));
    }
    u.check_scale(&sigma.metric)
}

/// `δu = n^a∇_a u − wHu` at a point of Σ.
pub fn robin_delta(u: &TractorField, sigma: &Hypersurface, p: &[f64]) -> Result<DeltaValue> {
    density_check(u, sigma)?;
    sigma.check_on(p)?;
    let j = u.local(p, 1)?.comps[0].clone();
    let grad = j.gradient()?;
    let n = sigma.conormal(p)?;
    let g = sigma.metric.values_at(p)?;
    let gi = crate::fields_charts::geometry::invert_small(&g, sigma.dim());
    let d = sigma.dim();
    let mut nd = 0.0;
    for a in 0..d {
        for b in 0..d {
            nd += gi[a * d + b] * n[b] * grad[a];
        }
    }
    let h = sigma.mean_curvature(p)?;
    let w = weight_f64(u.weight);
    Ok(DeltaValue { ell: 1, value: nd - w * h * j.value(), weight: u.weight - 1 })
}

/// `δ_ℓ u`: restriction for `ℓ = 0`; for `ℓ = 2m` the contraction
/// `D_Σ⋯D_Σ P_Σ(D⋯D u)` with `m` operators on each side, and for `ℓ = 2m+1`
/// the same with the normal operator applied between `P_Σ` and the ambient
/// `D`'s.
pub fn delta_ell(ell: usize, u: &TractorField, sigma: &Hypersurface, p: &[f64]) -> Result<DeltaValue> {
    density_check(u, sigma)?;
    sigma.check_on(p)?;
    let m = ell / 2;
    let odd = ell % 2;
    let q = 2 * m;
    let uo = delta_ell_order(ell);
    let geo = LocalGeometry::at(&sigma.metric, p, (uo + 1).max(2))?;
    let mut f = u.local(p, uo)?;
    for _ in 0..m {
        f = thomas_d_local(&f, &geo)?;
    }
    let sj = sigma.jets(p, q)?;
    if odd == 1 {
        f = robin_local(&f, &sj.n, &sj.h, &geo)?;
    }
    let weight = f.weight - Rational64::from(m as i64);
    if m == 0 {
        return Ok(DeltaValue { ell, value: f.comps[0].value(), weight });
    }
    let f = project_slots(&f, &sj.normal_tractor(), &geo.ginv);
    let chart = IntrinsicChart::build(sigma, p, q + 1)?;
    let gbar = chart.geometry()?;
    let h = sj.h.compose(&chart.phi);
    let mut g = chart.to_intrinsic(&chart.restrict(&f), &h)?;
    for _ in 0..m {
        g = thomas_d_local(&g, &gbar)?.contract(0, 1, &gbar)?;
    }
    debug_assert_eq!(g.weight, weight);
    Ok(DeltaValue { ell, value: g.comps[0].value(), weight: g.weight })
}

/// `D^A(X_A f)` for an intrinsic weight-`w` density `f` (jets of order ≥ 2 in
/// the chart variables), returned with the prediction `(n+2w+2)(n+w)f`.
pub fn dxs_check(geo: &LocalGeometry, f: &Jet, w: Rational64) -> Result<(f64, f64)> {
    let n = geo.dim;
    let zero = f.lift(0.0);
    let xf = LocalField::tractor(zero.clone(), vec![zero; n], f.clone(), w + 1);
    let lhs = thomas_d_local(&xf, geo)?.contract(0, 1, geo)?.comps[0].value();
    let wf = weight_f64(w);
    let nf = n as f64;
    Ok((lhs, (nf + 2.0 * wf + 2.0) * (nf + wf) * f.value()))
}
