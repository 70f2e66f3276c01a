//! Fields with tensor and tractor slots, expanded as jets about one point.

use std::sync::Arc;

use num_rational::Rational64;

use crate::error::{CalcError, Result};
use crate::fields_charts::geometry::LocalGeometry;
use crate::jet::Jet;

/// Index slot kind. Tensor slots are coordinate indices; a tractor slot runs
/// over `{Y, Z_1..Z_d, X}` with the `Z` part carrying a lower tensor index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Slot {
    Down,
    Up,
    Tractor,
}

/// Components of a slot-indexed field as jets at a point.
#[derive(Clone, Debug)]
pub struct LocalField {
    pub dim: usize,
    pub slots: Vec<Slot>,
    pub comps: Vec<Jet>,
    pub weight: Rational64,
}

fn slot_size(dim: usize, s: Slot) -> usize {
    match s {
        Slot::Down | Slot::Up => dim,
        Slot::Tractor => dim + 2,
    }
}

impl LocalField {
    pub fn new(dim: usize, slots: Vec<Slot>, comps: Vec<Jet>, weight: Rational64) -> Self {
        let n: usize = slots.iter().map(|&s| slot_size(dim, s)).product();
        assert_eq!(n, comps.len(), "component count does not match slots");
        LocalField { dim, slots, comps, weight }
    }

    pub fn scalar(j: Jet, weight: Rational64) -> Self {
        let dim = j.dim();
        LocalField { dim, slots: vec![], comps: vec![j], weight }
    }

    /// Rank-1 tractor `(σ, μ_a, ρ)`.
    pub fn tractor(sigma: Jet, mu: Vec<Jet>, rho: Jet, weight: Rational64) -> Self {
        let dim = mu.len();
        let mut comps = Vec::with_capacity(dim + 2);
        comps.push(sigma);
        comps.extend(mu);
        comps.push(rho);
        LocalField { dim, slots: vec![Slot::Tractor], comps, weight }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.slots.iter().map(|&s| slot_size(self.dim, s)).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let sizes = self.sizes();
        let mut st = vec![1; sizes.len()];
        for s in (0..sizes.len().saturating_sub(1)).rev() {
            st[s] = st[s + 1] * sizes[s + 1];
        }
        st
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(|j| j.order()).min().unwrap_or(0)
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(|j| j.value()).collect()
    }

    pub fn value(&self) -> f64 {
        self.comps[0].value()
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> LocalField {
        LocalField { comps: self.comps.iter().map(f).collect(), ..self.clone() }
    }

    pub fn scale(&self, s: f64) -> LocalField {
        self.map(|j| j.scale(s))
    }

    pub fn times(&self, f: &Jet) -> LocalField {
        self.map(|j| j * f)
    }

    pub fn truncate(&self, order: usize) -> LocalField {
        self.map(|j| j.truncate(order))
    }

    fn same_shape(&self, o: &LocalField) -> Result<()> {
        if self.slots != o.slots || self.dim != o.dim {
            return Err(CalcError::Argument("fields have different slot structure".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &LocalField) -> Result<LocalField> {
        self.same_shape(o)?;
        if self.weight != o.weight {
            return Err(CalcError::Weight(format!("adding weights {} and {}", self.weight, o.weight)));
        }
        let comps = self.comps.iter().zip(&o.comps).map(|(a, b)| a + b).collect();
        Ok(LocalField { comps, ..self.clone() })
    }

    pub fn sub(&self, o: &LocalField) -> Result<LocalField> {
        self.add(&o.scale(-1.0))
    }

    /// Covariant derivative, coupled Levi-Civita and tractor connection, in the
    /// scale of `geo`. The new lower index is prepended.
    pub fn covariant_derivative(&self, geo: &LocalGeometry) -> Result<LocalField> {
        let d = self.dim;
        if geo.dim != d {
            return Err(CalcError::Argument("geometry dimension mismatch".into()));
        }
        let sizes = self.sizes();
        let strides = self.strides();
        let n = self.comps.len();
        let mut out = Vec::with_capacity(d * n);
        let mut idx = vec![0usize; sizes.len()];
        for a in 0..d {
            for flat in 0..n {
                let mut rem = flat;
                for s in 0..sizes.len() {
                    idx[s] = rem / strides[s];
                    rem %= strides[s];
                }
                let mut v = self.comps[flat].d(a)?;
                for (s, &slot) in self.slots.iter().enumerate() {
                    let i = idx[s];
                    let st = strides[s];
                    let base = flat - i * st;
                    match slot {
                        Slot::Down => {
                            for e in 0..d {
                                v = &v - &(geo.christoffel(e, a, i) * &self.comps[base + e * st]);
                            }
                        }
                        Slot::Up => {
                            for e in 0..d {
                                v = &v + &(geo.christoffel(i, a, e) * &self.comps[base + e * st]);
                            }
                        }
                        Slot::Tractor => {
                            if i == 0 {
                                v = &v - &self.comps[base + (1 + a) * st];
                            } else if i <= d {
                                let b = i - 1;
                                for e in 0..d {
                                    v = &v
                                        - &(geo.christoffel(e, a, b) * &self.comps[base + (1 + e) * st]);
                                }
                                v = &v + &(&geo.g[a * d + b] * &self.comps[base + (d + 1) * st]);
                                v = &v + &(&geo.schouten[a * d + b] * &self.comps[base]);
                            } else {
                                for b in 0..d {
                                    v = &v
                                        - &(&geo.schouten_mixed[a * d + b]
                                            * &self.comps[base + (1 + b) * st]);
                                }
                            }
                        }
                    }
                }
                out.push(v);
            }
        }
        let mut slots = vec![Slot::Down];
        slots.extend(self.slots.iter().copied());
        Ok(LocalField { dim: d, slots, comps: out, weight: self.weight })
    }

    /// Contract slots `s1 < s2` with the metric appropriate to their kinds.
    pub fn contract(&self, s1: usize, s2: usize, geo: &LocalGeometry) -> Result<LocalField> {
        if s1 >= s2 || s2 >= self.rank() {
            return Err(CalcError::Argument(format!("bad contraction slots {s1}, {s2}")));
        }
        let d = self.dim;
        let (k1, k2) = (self.slots[s1], self.slots[s2]);
        // pairs (i, j, coefficient jet) summed over
        let mut pairs: Vec<(usize, usize, Option<&Jet>)> = Vec::new();
        match (k1, k2) {
            (Slot::Down, Slot::Down) => {
                for i in 0..d {
                    for j in 0..d {
                        pairs.push((i, j, Some(&geo.ginv[i * d + j])));
                    }
                }
            }
            (Slot::Up, Slot::Up) => {
                for i in 0..d {
                    for j in 0..d {
                        pairs.push((i, j, Some(&geo.g[i * d + j])));
                    }
                }
            }
            (Slot::Up, Slot::Down) | (Slot::Down, Slot::Up) => {
                for i in 0..d {
                    pairs.push((i, i, None));
                }
            }
            (Slot::Tractor, Slot::Tractor) => {
                pairs.push((0, d + 1, None));
                pairs.push((d + 1, 0, None));
                for i in 0..d {
                    for j in 0..d {
                        pairs.push((1 + i, 1 + j, Some(&geo.ginv[i * d + j])));
                    }
                }
            }
            _ => {
                return Err(CalcError::Argument("cannot contract a tensor slot with a tractor slot".into()))
            }
        }
        let sizes = self.sizes();
        let strides = self.strides();
        let rest: Vec<usize> = (0..self.rank()).filter(|&s| s != s1 && s != s2).collect();
        let out_slots: Vec<Slot> = rest.iter().map(|&s| self.slots[s]).collect();
        let out_n: usize = rest.iter().map(|&s| sizes[s]).product();
        let mut out = Vec::with_capacity(out_n);
        for o in 0..out_n {
            // decode o over rest slots (row-major)
            let mut rem = o;
            let mut base = 0;
            for (k, &s) in rest.iter().enumerate() {
                let inner: usize = rest[k + 1..].iter().map(|&t| sizes[t]).product();
                let i = rem / inner;
                rem %= inner;
                base += i * strides[s];
            }
            let mut acc: Option<Jet> = None;
            for &(i, j, coef) in &pairs {
                let c = &self.comps[base + i * strides[s1] + j * strides[s2]];
                let term = match coef {
                    Some(m) => m * c,
                    None => c.clone(),
                };
                acc = Some(match acc {
                    Some(a) => &a + &term,
                    None => term,
                });
            }
            out.push(acc.expect("nonempty contraction"));
        }
        Ok(LocalField { dim: d, slots: out_slots, comps: out, weight: self.weight })
    }

    /// `Δ = -g^{ab}∇_a∇_b` with the coupled connection.
    pub fn laplacian(&self, geo: &LocalGeometry) -> Result<LocalField> {
        let dd = self.covariant_derivative(geo)?.covariant_derivative(geo)?;
        Ok(dd.contract(0, 1, geo)?.scale(-1.0))
    }

    /// Pair tractor slot `slot` with a rank-1 tractor `u` using the tractor metric.
    pub fn pair_tractor(&self, slot: usize, u: &LocalField, geo: &LocalGeometry) -> Result<LocalField> {
        if u.slots != [Slot::Tractor] || self.slots.get(slot) != Some(&Slot::Tractor) {
            return Err(CalcError::Argument("pairing needs a tractor slot and a rank-1 tractor".into()));
        }
        let mut slots = vec![Slot::Tractor];
        slots.extend(self.slots.iter().copied());
        let d = self.dim;
        let sizes = self.sizes();
        let n: usize = sizes.iter().product();
        let mut comps = Vec::with_capacity((d + 2) * n);
        for i in 0..d + 2 {
            for c in &self.comps {
                comps.push(&u.comps[i] * c);
            }
        }
        let outer = LocalField { dim: d, slots, comps, weight: self.weight + u.weight };
        outer.contract(0, slot + 1, geo)
    }

    /// Compose every component with a change of variables (see [`Jet::compose`]).
    /// Slot sizes keep the original dimension.
    pub fn compose(&self, inner: &[Jet]) -> LocalField {
        LocalField { comps: self.comps.iter().map(|j| j.compose(inner)).collect(), ..self.clone() }
    }

    /// Prepend a tractor slot built from its `Y`, `Z_a`, `X` parts; `z` has an
    /// extra leading `Down` slot.
    pub fn assemble_tractor(y: &LocalField, z: &LocalField, x: &LocalField, weight: Rational64) -> LocalField {
        let d = y.dim;
        let mut comps = Vec::with_capacity((d + 2) * y.comps.len());
        comps.extend(y.comps.iter().cloned());
        comps.extend(z.comps.iter().cloned());
        comps.extend(x.comps.iter().cloned());
        let mut slots = vec![Slot::Tractor];
        slots.extend(y.slots.iter().copied());
        LocalField { dim: d, slots, comps, weight }
    }
}

/// A field with tensor and tractor slots defined over jet arithmetic.
#[derive(Clone)]
pub struct TensorField {
    pub dim: usize,
    pub slots: Vec<Slot>,
    pub weight: Rational64,
    rule: Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>,
}

impl TensorField {
    pub fn new(
        dim: usize,
        slots: Vec<Slot>,
        weight: Rational64,
        rule: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        TensorField { dim, slots, weight, rule: Arc::new(rule) }
    }

    pub fn eval(&self, y: &[Jet]) -> LocalField {
        LocalField::new(self.dim, self.slots.clone(), (self.rule)(y), self.weight)
    }

    pub fn local(&self, p: &[f64], order: usize) -> LocalField {
        self.eval(&Jet::coordinates(p, order))
    }
}
