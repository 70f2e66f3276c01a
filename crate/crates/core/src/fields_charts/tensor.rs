use num_rational::Rational64;
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::field::ScaleTag;
use crate::fields_charts::local::Slot;

/// Tensor components at a point, with index variance, weight and scale.
#[derive(Clone, Debug, Serialize)]
pub struct TensorValue {
    pub comps: Vec<f64>,
    pub slots: Vec<Slot>,
    #[serde(serialize_with = "ser_ratio")]
    pub weight: Rational64,
    pub point: Vec<f64>,
    pub scale: ScaleTag,
}

fn ser_ratio<S: serde::Serializer>(w: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

impl TensorValue {
    pub fn new(comps: Vec<f64>, slots: Vec<Slot>, weight: Rational64, point: &[f64], scale: ScaleTag) -> Self {
        TensorValue { comps, slots, weight, point: point.to_vec(), scale }
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    fn reindex(&self, slot: usize, m: &[f64], to: Slot, dw: i64) -> Result<TensorValue> {
        let d = self.dim();
        if self.slots.get(slot) == Some(&Slot::Tractor) || slot >= self.slots.len() {
            return Err(CalcError::Argument("raise/lower needs a tensor slot".into()));
        }
        let sizes: Vec<usize> = self.slots.iter().map(|_| d).collect();
        let stride: usize = sizes[slot + 1..].iter().product();
        let mut out = vec![0.0; self.comps.len()];
        for (flat, o) in out.iter_mut().enumerate() {
            let i = (flat / stride) % d;
            let base = flat - i * stride;
            *o = (0..d).map(|e| m[i * d + e] * self.comps[base + e * stride]).sum();
        }
        let mut slots = self.slots.clone();
        slots[slot] = to;
        Ok(TensorValue {
            comps: out,
            slots,
            weight: self.weight + Rational64::from(dw),
            point: self.point.clone(),
            scale: self.scale.clone(),
        })
    }

    /// Raise with the inverse conformal metric (weight drops by 2).
    pub fn raise(&self, slot: usize, ginv: &[f64]) -> Result<TensorValue> {
        if self.slots[slot] != Slot::Down {
            return Err(CalcError::Argument("slot is not a lower index".into()));
        }
        self.reindex(slot, ginv, Slot::Up, -2)
    }

    /// Lower with the conformal metric (weight rises by 2).
    pub fn lower(&self, slot: usize, g: &[f64]) -> Result<TensorValue> {
        if self.slots[slot] != Slot::Up {
            return Err(CalcError::Argument("slot is not an upper index".into()));
        }
        self.reindex(slot, g, Slot::Down, 2)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
