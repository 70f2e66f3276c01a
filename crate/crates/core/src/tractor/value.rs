//! Pointwise tractor components, the tractor metric and the change-of-scale law.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::{ScalarJetField, ScaleTag};
use crate::fields_charts::field::weight_f64;

/// Rank-`r` tractor components at a point in one scale.
///
/// Each slot runs over `(Y, Z_1..Z_d, X)`; for rank 1 the entries are
/// `(σ, μ_a, ρ)` with `μ` a lower index. `ginv` holds the inverse metric at
/// the point, used to pair the `Z` parts.
#[derive(Clone, Debug, Serialize)]
pub struct TractorValue {
    pub dim: usize,
    pub rank: usize,
    pub comps: Vec<f64>,
    #[serde(serialize_with = "ser_ratio")]
    pub weight: Rational64,
    pub scale: ScaleTag,
    pub point: Vec<f64>,
    #[serde(skip)]
    pub ginv: Vec<f64>,
}

fn ser_ratio<S: serde::Serializer>(w: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

impl TractorValue {
    pub fn new(
        rank: usize,
        comps: Vec<f64>,
        weight: Rational64,
        scale: ScaleTag,
        point: &[f64],
        ginv: Vec<f64>,
    ) -> Result<Self> {
        let dim = point.len();
        if ginv.len() != dim * dim {
            return Err(CalcError::Argument("inverse metric has wrong size".into()));
        }
        if comps.len() != (dim + 2).pow(rank as u32) {
            return Err(CalcError::Argument(format!(
                "rank-{rank} tractor in d={dim} needs {} components, got {}",
                (dim + 2).pow(rank as u32),
                comps.len()
            )));
        }
        Ok(TractorValue { dim, rank, comps, weight, scale, point: point.to_vec(), ginv })
    }

    /// Rank-1 value `(σ, μ, ρ)`.
    pub fn triple(
        sigma: f64,
        mu: &[f64],
        rho: f64,
        weight: Rational64,
        scale: ScaleTag,
        point: &[f64],
        ginv: Vec<f64>,
    ) -> Result<Self> {
        let mut c = Vec::with_capacity(mu.len() + 2);
        c.push(sigma);
        c.extend_from_slice(mu);
        c.push(rho);
        Self::new(1, c, weight, scale, point, ginv)
    }

    pub fn sigma(&self) -> f64 {
        self.comps[0]
    }

    pub fn mu(&self) -> &[f64] {
        &self.comps[1..=self.dim]
    }

    pub fn rho(&self) -> f64 {
        self.comps[self.dim + 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Pair slot `slot` with the rank-1 tractor `u`, dropping that slot.
    pub fn contract_with(&self, slot: usize, u: &TractorValue) -> Result<TractorValue> {
        if u.rank != 1 || slot >= self.rank {
            return Err(CalcError::Argument("contraction needs a rank-1 partner and a valid slot".into()));
        }
        check_same_scale(self, u)?;
        let n = self.dim + 2;
        let stride = n.pow((self.rank - 1 - slot) as u32);
        let lowered = lower_rank1(u);
        let out_len = self.comps.len() / n;
        let mut out = vec![0.0; out_len];
        for (o, v) in out.iter_mut().enumerate() {
            let hi = o / stride;
            let lo = o % stride;
            let base = hi * stride * n + lo;
            *v = (0..n).map(|i| lowered[i] * self.comps[base + i * stride]).sum();
        }
        Ok(TractorValue {
            dim: self.dim,
            rank: self.rank - 1,
            comps: out,
            weight: self.weight + u.weight,
            scale: self.scale.clone(),
            point: self.point.clone(),
            ginv: self.ginv.clone(),
        })
    }
}

/// `h_{AB}U^B` as a covector over the frame: `(ρ, g^{ab}μ_b, σ)`.
fn lower_rank1(u: &TractorValue) -> Vec<f64> {
    let d = u.dim;
    let mut l = vec![0.0; d + 2];
    l[0] = u.rho();
    l[d + 1] = u.sigma();
    for a in 0..d {
        l[1 + a] = (0..d).map(|b| u.ginv[a * d + b] * u.comps[1 + b]).sum();
    }
    l
}

fn check_same_scale(u: &TractorValue, v: &TractorValue) -> Result<()> {
    if u.scale != v.scale {
        return Err(CalcError::Scale(format!("tractors in scales {} and {}", u.scale, v.scale)));
    }
    if u.dim != v.dim || u.point.iter().zip(&v.point).any(|(a, b)| (a - b).abs() > 1e-14) {
        return Err(CalcError::Argument("tractors live at different points".into()));
    }
    Ok(())
}

/// `h(U, V) = σρ' + ρσ' + g^{ab}μ_aμ'_b`, a density of weight `w_U + w_V`.
pub fn tractor_metric(u: &TractorValue, v: &TractorValue) -> Result<f64> {
    if u.rank != 1 || v.rank != 1 {
        return Err(CalcError::Argument("tractor metric pairs rank-1 tractors".into()));
    }
    check_same_scale(u, v)?;
    let l = lower_rank1(u);
    Ok(l.iter().zip(&v.comps).map(|(a, b)| a * b).sum())
}

/// Per-slot matrix taking components in scale `g` to scale `e^{2ω}g`, with the
/// density factors `e^{±ω}` of the `Y`/`Z` and `X` parts included; the overall
/// `e^{wω}` is applied separately.
pub(crate) fn slot_rescale_matrix(upsilon: &[f64], ginv: &[f64], omega: f64) -> Vec<f64> {
    let d = upsilon.len();
    let n = d + 2;
    let mut m = vec![0.0; n * n];
    let up: Vec<f64> = (0..d).map(|a| (0..d).map(|b| ginv[a * d + b] * upsilon[b]).sum()).collect();
    let ups2: f64 = up.iter().zip(upsilon).map(|(a, b)| a * b).sum();
    let (e, ei) = (omega.exp(), (-omega).exp());
    m[0] = e;
    for a in 0..d {
        m[(1 + a) * n] = e * upsilon[a];
        m[(1 + a) * n + 1 + a] = e;
        m[(d + 1) * n + 1 + a] = -ei * up[a];
    }
    m[(d + 1) * n] = -0.5 * ei * ups2;
    m[(d + 1) * n + d + 1] = ei;
    m
}

/// Apply a per-slot linear map to every tractor slot of a component array.
pub(crate) fn apply_slotwise<T: Clone>(
    comps: &[T],
    rank: usize,
    n: usize,
    m: &[f64],
    zero: T,
    axpy: impl Fn(&T, f64, &T) -> T,
) -> Vec<T> {
    let mut cur = comps.to_vec();
    for slot in 0..rank {
        let stride = n.pow((rank - 1 - slot) as u32);
        let mut next = vec![zero.clone(); cur.len()];
        for (flat, out) in next.iter_mut().enumerate() {
            let i = (flat / stride) % n;
            let base = flat - i * stride;
            let mut acc = zero.clone();
            for j in 0..n {
                let c = m[i * n + j];
                if c != 0.0 {
                    acc = axpy(&acc, c, &cur[base + j * stride]);
                }
            }
            *out = acc;
        }
        cur = next;
    }
    cur
}

/// Components of `U` in the scale `e^{2ω}g`.
///
/// Per slot: `σ ↦ σ`, `μ ↦ μ + Υσ`, `ρ ↦ ρ − Υ^aμ_a − ½|Υ|²σ` with `Υ = dω`,
/// together with the representative factors of each part.
pub fn rescale_tractor(u: &TractorValue, omega: &ScalarJetField, new_scale: ScaleTag) -> Result<TractorValue> {
    let p = &u.point;
    let w = omega.jet_at(p, 1)?;
    let om = w.value();
    let ups = w.gradient()?;
    let m = slot_rescale_matrix(&ups, &u.ginv, om);
    let overall = (weight_f64(u.weight) * om).exp();
    let comps = apply_slotwise(&u.comps, u.rank, u.dim + 2, &m, 0.0, |a, c, x| a + c * x)
        .into_iter()
        .map(|x| x * overall)
        .collect();
    let e2 = (-2.0 * om).exp();
    Ok(TractorValue {
        dim: u.dim,
        rank: u.rank,
        comps,
        weight: u.weight,
        scale: new_scale,
        point: p.clone(),
        ginv: u.ginv.iter().map(|x| x * e2).collect(),
    })
}
