//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] of order `m` in `d` variables stores the Taylor coefficients
//! `f^(α)(p)/α!` for every multi-index with `|α| ≤ m`. Monomials are kept in
//! graded order, so the coefficient vector of a lower-order truncation is a
//! prefix of the higher-order one. Products of jets of different orders are
//! truncated to the smaller order; differentiation lowers the order by one.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::error::{CalcError, Result};

/// Monomial bookkeeping for jets of a fixed dimension and order.
pub struct JetSpace {
    pub dim: usize,
    pub order: usize,
    exps: Vec<Vec<u8>>,
    /// `offsets[q]` = number of monomials of degree `< q`.
    offsets: Vec<usize>,
    /// `raise[i][k]` = index of `exps[k] + e_i`, or `usize::MAX` past the order.
    raise: Vec<Vec<usize>>,
    /// For `k > 0`: `(index of exps[k] - e_v, v)` with `v` the first nonzero slot.
    parent: Vec<(usize, usize)>,
    mul: Vec<(u32, u32, u32)>,
}

fn key_of(e: &[u8]) -> u64 {
    e.iter().fold(0u64, |acc, &x| acc * 64 + x as u64)
}

fn exponents_of_degree(dim: usize, q: usize) -> Vec<Vec<u8>> {
    // Lexicographically descending compositions of q into dim parts.
    fn rec(dim: usize, q: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == dim {
            prefix.push(q as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=q).rev() {
            prefix.push(first as u8);
            rec(dim, q - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        if q == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(dim, q, &mut Vec::new(), &mut out);
    out
}

impl JetSpace {
    fn build(dim: usize, order: usize) -> JetSpace {
        let mut exps = Vec::new();
        let mut offsets = Vec::with_capacity(order + 2);
        for q in 0..=order {
            offsets.push(exps.len());
            exps.extend(exponents_of_degree(dim, q));
        }
        offsets.push(exps.len());
        let index: HashMap<u64, usize> =
            exps.iter().enumerate().map(|(k, e)| (key_of(e), k)).collect();
        let degree = |e: &Vec<u8>| e.iter().map(|&x| x as usize).sum::<usize>();

        let mut raise = vec![vec![usize::MAX; exps.len()]; dim];
        for (k, e) in exps.iter().enumerate() {
            if degree(e) < order {
                for (i, row) in raise.iter_mut().enumerate() {
                    let mut f = e.clone();
                    f[i] += 1;
                    row[k] = index[&key_of(&f)];
                }
            }
        }
        let mut parent = vec![(0usize, 0usize); exps.len()];
        for (k, e) in exps.iter().enumerate().skip(1) {
            let v = e.iter().position(|&x| x > 0).unwrap();
            let mut f = e.clone();
            f[v] -= 1;
            parent[k] = (index[&key_of(&f)], v);
        }
        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            let di = degree(ei);
            for ej in exps.iter().take(offsets[order - di + 1]).enumerate() {
                let (j, ej) = ej;
                let s: Vec<u8> = ei.iter().zip(ej.iter()).map(|(a, b)| a + b).collect();
                mul.push((i as u32, j as u32, index[&key_of(&s)] as u32));
            }
        }
        JetSpace { dim, order, exps, offsets, raise, parent, mul }
    }

    /// Shared, lazily built space for `(dim, order)`.
    pub fn get(dim: usize, order: usize) -> &'static JetSpace {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static JetSpace>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        guard
            .entry((dim, order))
            .or_insert_with(|| Box::leak(Box::new(JetSpace::build(dim, order))))
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Number of monomials of degree at most `q`.
    pub fn len_up_to(&self, q: usize) -> usize {
        self.offsets[q.min(self.order) + 1]
    }

    pub fn exponent(&self, k: usize) -> &[u8] {
        &self.exps[k]
    }

    /// Index of a multi-index, if it lies in the space.
    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        let q: usize = alpha.iter().sum();
        if alpha.len() != self.dim || q > self.order {
            return None;
        }
        (self.offsets[q]..self.offsets[q + 1])
            .find(|&k| self.exps[k].iter().zip(alpha).all(|(&a, &b)| a as usize == b))
    }
}

/// Truncated Taylor expansion of a smooth function about an implicit point.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(d={}, m={}, {:?})", self.space.dim, self.space.order, self.c)
    }
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        let space = JetSpace::get(dim, order);
        let mut c = vec![0.0; space.len()];
        if !c.is_empty() {
            c[0] = value;
        }
        Jet { space, c }
    }

    pub fn zero(dim: usize, order: usize) -> Jet {
        Jet::constant(dim, order, 0.0)
    }

    /// Coordinate function `y_i` expanded about a point whose `i`-th entry is `value`.
    pub fn variable(dim: usize, order: usize, i: usize, value: f64) -> Jet {
        let mut j = Jet::constant(dim, order, value);
        if order >= 1 {
            let k = 1 + i;
            debug_assert_eq!(j.space.exps[k][i], 1);
            j.c[k] = 1.0;
        }
        j
    }

    /// All coordinate jets at `p`.
    pub fn coordinates(p: &[f64], order: usize) -> Vec<Jet> {
        (0..p.len()).map(|i| Jet::variable(p.len(), order, i, p[i])).collect()
    }

    pub fn from_coeffs(dim: usize, order: usize, c: Vec<f64>) -> Jet {
        let space = JetSpace::get(dim, order);
        assert_eq!(c.len(), space.len(), "coefficient count does not match jet space");
        Jet { space, c }
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Same function, same order, different constant term.
    pub fn with_value(&self, v: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] = v;
        j
    }

    /// Constant of the same dimension and order as `self`.
    pub fn lift(&self, v: f64) -> Jet {
        Jet::constant(self.space.dim, self.space.order, v)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.space.order {
            return self.clone();
        }
        let space = JetSpace::get(self.space.dim, order);
        Jet { space, c: self.c[..space.len()].to_vec() }
    }

    /// Partial derivative `∂^α f(p)`.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64> {
        let k = self.space.index_of(alpha).ok_or_else(|| {
            CalcError::Capability(format!(
                "derivative {:?} exceeds jet order {}",
                alpha, self.space.order
            ))
        })?;
        let fact: f64 = alpha.iter().map(|&a| (1..=a).product::<usize>() as f64).product();
        Ok(self.c[k] * fact)
    }

    /// Gradient at the expansion point.
    pub fn gradient(&self) -> Result<Vec<f64>> {
        if self.space.order < 1 {
            return Err(CalcError::Capability("gradient of an order-0 jet".into()));
        }
        Ok(self.c[1..=self.space.dim].to_vec())
    }

    /// Exact partial derivative `∂_i`, one order lower.
    pub fn d(&self, i: usize) -> Result<Jet> {
        let m = self.space.order;
        if m == 0 {
            return Err(CalcError::Capability(
                "cannot differentiate an order-0 jet; raise the jet order".into(),
            ));
        }
        let space = JetSpace::get(self.space.dim, m - 1);
        let c = (0..space.len())
            .map(|k| {
                let src = self.space.raise[i][k];
                (space.exps[k][i] as f64 + 1.0) * self.c[src]
            })
            .collect();
        Ok(Jet { space, c })
    }

    fn binary_space(&self, o: &Jet) -> &'static JetSpace {
        debug_assert_eq!(self.space.dim, o.space.dim, "jet dimension mismatch");
        if self.space.order <= o.space.order {
            self.space
        } else {
            o.space
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { space: self.space, c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn recip(&self) -> Jet {
        let x0 = self.value();
        let m = self.space.order;
        let mut coeffs = Vec::with_capacity(m + 1);
        let mut t = 1.0 / x0;
        for _ in 0..=m {
            coeffs.push(t);
            t *= -1.0 / x0;
        }
        self.compose_univariate(&coeffs)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self * &o.recip()
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut coeffs = Vec::with_capacity(self.order() + 1);
        let mut f = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                f /= k as f64;
            }
            coeffs.push(e * f);
        }
        self.compose_univariate(&coeffs)
    }

    pub fn ln(&self) -> Jet {
        let x0 = self.value();
        let mut coeffs = vec![x0.ln()];
        let mut p = 1.0;
        for k in 1..=self.order() {
            p /= x0;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            coeffs.push(sign * p / k as f64);
        }
        self.compose_univariate(&coeffs)
    }

    /// Real power `x^a` for `x > 0` (or any `x` when `a` is a nonnegative integer).
    pub fn powf(&self, a: f64) -> Jet {
        let x0 = self.value();
        let mut coeffs = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                binom *= (a - (k as f64 - 1.0)) / k as f64;
            }
            let e = a - k as f64;
            let pw = if binom == 0.0 { 0.0 } else { x0.powf(e) };
            coeffs.push(binom * pw);
        }
        self.compose_univariate(&coeffs)
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut r = self.lift(1.0);
        for _ in 0..n {
            r = &r * self;
        }
        r
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        self.trig(false)
    }

    pub fn cos(&self) -> Jet {
        self.trig(true)
    }

    fn trig(&self, cosine: bool) -> Jet {
        let (s, c) = self.value().sin_cos();
        // derivatives of sin cycle: sin, cos, -sin, -cos
        let cycle = if cosine { [c, -s, -c, s] } else { [s, c, -s, -c] };
        let mut coeffs = Vec::with_capacity(self.order() + 1);
        let mut f = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                f /= k as f64;
            }
            coeffs.push(cycle[k % 4] * f);
        }
        self.compose_univariate(&coeffs)
    }

    /// `F(self)` where `coeffs[k] = F^(k)(x0)/k!` at `x0 = self.value()`.
    pub fn compose_univariate(&self, coeffs: &[f64]) -> Jet {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let m = self.order().min(coeffs.len().saturating_sub(1));
        let mut r = self.lift(coeffs[m]);
        for k in (0..m).rev() {
            r = &r * &h;
            r.c[0] += coeffs[k];
        }
        r
    }

    /// Taylor-polynomial composition `f(g(z))` where `g` are jets in another
    /// space whose constant terms equal the expansion point of `self`.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.space.dim, "composition arity mismatch");
        let order = inner.iter().map(|j| j.order()).min().unwrap_or(0).min(self.order());
        let dim2 = inner.first().map(|j| j.dim()).unwrap_or(0);
        let h: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut t = j.truncate(order);
                t.c[0] = 0.0;
                t
            })
            .collect();
        let n = self.space.len_up_to(order);
        let mut out = Jet::zero(dim2, order);
        let mut pow: Vec<Jet> = Vec::with_capacity(n);
        pow.push(Jet::constant(dim2, order, 1.0));
        out.c[0] += self.c[0];
        for k in 1..n {
            let (par, v) = self.space.parent[k];
            let p = &pow[par] * &h[v];
            if self.c[k] != 0.0 {
                for (o, x) in out.c.iter_mut().zip(p.c.iter()) {
                    *o += self.c[k] * x;
                }
            }
            pow.push(p);
        }
        out
    }

    /// Taylor polynomial evaluated at offset `delta` from the expansion point.
    pub fn eval_offset(&self, delta: &[f64]) -> f64 {
        let mut pw = vec![1.0; self.c.len()];
        let mut acc = self.c[0];
        for k in 1..self.c.len() {
            let (par, v) = self.space.parent[k];
            pw[k] = pw[par] * delta[v];
            acc += self.c[k] * pw[k];
        }
        acc
    }

    /// Largest coefficient magnitude (a cheap size measure).
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let space = self.binary_space(o);
        let n = space.len();
        Jet { space, c: self.c[..n].iter().zip(&o.c[..n]).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let space = self.binary_space(o);
        let n = space.len();
        Jet { space, c: self.c[..n].iter().zip(&o.c[..n]).map(|(a, b)| a - b).collect() }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let space = self.binary_space(o);
        let mut c = vec![0.0; space.len()];
        let (a, b) = (&self.c, &o.c);
        for &(i, j, k) in &space.mul {
            c[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { space, c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_binops {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
    };
}
owned_binops!(Add, add);
owned_binops!(Sub, sub);
owned_binops!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, s: f64) -> Jet {
        self.add_scalar(s)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, s: f64) -> Jet {
        self.add_scalar(s)
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, s: f64) -> Jet {
        self.add_scalar(-s)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, s: f64) -> Jet {
        self.add_scalar(-s)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, o: &Jet) {
        if o.order() < self.order() {
            *self = &*self + o;
        } else {
            let n = self.c.len();
            for (a, b) in self.c.iter_mut().zip(&o.c[..n]) {
                *a += b;
            }
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self += &o;
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a, I: IntoIterator<Item = &'a Jet>>(it: I) -> Option<Jet> {
    let mut it = it.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| &acc + j))
}

/// Solve `A x = b` for jet-valued square `A` (row-major) by Gaussian elimination.
pub fn solve(a: &[Jet], b: &[Jet], n: usize) -> Result<Vec<Jet>> {
    let mut m: Vec<Jet> = a.to_vec();
    let mut rhs: Vec<Jet> = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].value().abs().total_cmp(&m[j * n + col].value().abs()))
            .unwrap();
        if m[piv * n + col].value().abs() < 1e-300 {
            return Err(CalcError::Degenerate("singular jet matrix".into()));
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            rhs.swap(piv, col);
        }
        let inv = m[col * n + col].recip();
        for row in (col + 1)..n {
            let f = &m[row * n + col] * &inv;
            for k in col..n {
                let t = &f * &m[col * n + k];
                m[row * n + k] = &m[row * n + k] - &t;
            }
            let t = &f * &rhs[col];
            rhs[row] = &rhs[row] - &t;
        }
    }
    let mut x: Vec<Jet> = rhs.clone();
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for k in (row + 1)..n {
            acc = &acc - &(&m[row * n + k] * &x[k]);
        }
        x[row] = &acc * &m[row * n + row].recip();
    }
    Ok(x)
}

/// Inverse of a jet-valued square matrix (row-major).
pub fn inverse(a: &[Jet], n: usize) -> Result<Vec<Jet>> {
    let proto = &a[0];
    let mut out = vec![proto.lift(0.0); n * n];
    for col in 0..n {
        let e: Vec<Jet> = (0..n).map(|i| proto.lift(if i == col { 1.0 } else { 0.0 })).collect();
        let x = solve(a, &e, n)?;
        for (row, v) in x.into_iter().enumerate() {
            out[row * n + col] = v;
        }
    }
    Ok(out)
}
