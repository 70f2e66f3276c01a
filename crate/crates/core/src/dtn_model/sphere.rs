//! Functions on the round `S³ ⊂ C²`, exact frame derivatives, and a spectral
//! grid in Hopf coordinates.
//!
//! Functions are polynomials in `z₁, z̄₁, z₂, z̄₂` restricted to `|z|=1`.
//! The left-invariant frame `e₁, e₂, e₃` is orthonormal, divergence free and
//! acts as a derivation on such polynomials, so gradients, divergences and
//! the Laplacian `Δ = −Σ e_i²` are exact. Harmonics are
//! `z₁^{(p)} z₂^{(q)} P_j^{(|q|,|p|)}(|z₁|² − |z₂|²)` with degree
//! `|p| + |q| + 2j`, where `z^{(p)}` means `z^p` or `z̄^{|p|}`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CalcError, Result};

type Key = [u16; 4];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Polynomial in `(z₁, z̄₁, z₂, z̄₂)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpherePoly {
    terms: BTreeMap<Key, Complex64>,
}

impl SpherePoly {
    pub fn zero() -> Self {
        SpherePoly::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0, 0], Complex64::new(c, 0.0))
    }

    pub fn monomial(k: Key, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(k, c);
        }
        SpherePoly { terms }
    }

    /// Variable `k` of `(z₁, z̄₁, z₂, z̄₂)`.
    pub fn var(k: usize) -> Self {
        let mut e = [0u16; 4];
        e[k] = 1;
        Self::monomial(e, Complex64::new(1.0, 0.0))
    }

    /// Real coordinate `x_a` of `R⁴`, with `z₁ = x₁ + i x₂`, `z₂ = x₃ + i x₄`.
    pub fn coord(a: usize) -> Self {
        let (z, zb) = (Self::var(2 * (a / 2)), Self::var(2 * (a / 2) + 1));
        if a.is_multiple_of(2) {
            z.add(&zb).scale_c(Complex64::new(0.5, 0.0))
        } else {
            z.sub(&zb).scale_c(Complex64::new(0.0, -0.5))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.iter().map(|e| *e as usize).sum()).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, k: Key, c: Complex64) {
        let e = self.terms.entry(k).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if *e == Complex64::new(0.0, 0.0) {
            self.terms.remove(&k);
        }
    }

    pub fn add(&self, o: &SpherePoly) -> SpherePoly {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.insert(*k, *c);
        }
        out
    }

    pub fn sub(&self, o: &SpherePoly) -> SpherePoly {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> SpherePoly {
        self.scale_c(Complex64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> SpherePoly {
        if s == Complex64::new(0.0, 0.0) {
            return SpherePoly::zero();
        }
        SpherePoly { terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect() }
    }

    pub fn mul(&self, o: &SpherePoly) -> SpherePoly {
        let mut out = SpherePoly::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                let k = [ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2], ka[3] + kb[3]];
                out.insert(k, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: usize) -> SpherePoly {
        (0..e).fold(SpherePoly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Complex conjugate as a function on `S³`.
    pub fn conj(&self) -> SpherePoly {
        SpherePoly { terms: self.terms.iter().map(|(k, c)| ([k[1], k[0], k[3], k[2]], c.conj())).collect() }
    }

    /// Real part as a function.
    pub fn re(&self) -> SpherePoly {
        self.add(&self.conj()).scale(0.5)
    }

    pub fn im(&self) -> SpherePoly {
        self.sub(&self.conj()).scale_c(Complex64::new(0.0, -0.5))
    }

    pub fn eval_z(&self, z: &[Complex64; 4]) -> Complex64 {
        let mut pows: [Vec<Complex64>; 4] = Default::default();
        let maxe = self.terms.keys().fold([0usize; 4], |m, k| [0, 1, 2, 3].map(|i| m[i].max(k[i] as usize)));
        for i in 0..4 {
            let mut v = Vec::with_capacity(maxe[i] + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=maxe[i] {
                v.push(acc);
                acc *= z[i];
            }
            pows[i] = v;
        }
        self.terms
            .iter()
            .map(|(k, c)| c * pows[0][k[0] as usize] * pows[1][k[1] as usize] * pows[2][k[2] as usize] * pows[3][k[3] as usize])
            .sum()
    }

    /// Value at a point of `R⁴`.
    pub fn eval(&self, x: &[f64; 4]) -> Complex64 {
        self.eval_z(&point_to_z(x))
    }

    /// Derivative along the frame field `e_{i+1}`.
    pub fn frame_derivative(&self, i: usize) -> SpherePoly {
        let images = frame_images(i);
        let mut out = SpherePoly::zero();
        for (k, c) in &self.terms {
            for v in 0..4 {
                if k[v] == 0 {
                    continue;
                }
                let mut base = *k;
                base[v] -= 1;
                let (target, coeff) = images[v];
                let mut kk = base;
                kk[target] += 1;
                out.insert(kk, c * coeff * k[v] as f64);
            }
        }
        out
    }

    /// `Δ = −Σ e_i²`.
    pub fn laplacian(&self) -> SpherePoly {
        (0..3).fold(SpherePoly::zero(), |acc, i| acc.sub(&self.frame_derivative(i).frame_derivative(i)))
    }

    /// Frame components of the gradient.
    pub fn gradient(&self) -> [SpherePoly; 3] {
        [0, 1, 2].map(|i| self.frame_derivative(i))
    }

    /// Drop coefficients below `tol` in modulus.
    pub fn prune(&self, tol: f64) -> SpherePoly {
        SpherePoly { terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(k, c)| (*k, *c)).collect() }
    }
}

fn point_to_z(x: &[f64; 4]) -> [Complex64; 4] {
    let z1 = Complex64::new(x[0], x[1]);
    let z2 = Complex64::new(x[2], x[3]);
    [z1, z1.conj(), z2, z2.conj()]
}

/// Image of each variable under `e_{i+1}`: `(variable index, coefficient)`.
fn frame_images(i: usize) -> [(usize, Complex64); 4] {
    let one = Complex64::new(1.0, 0.0);
    match i {
        0 => [(0, I), (1, -I), (2, I), (3, -I)],
        1 => [(3, -one), (2, -one), (1, one), (0, one)],
        _ => [(3, -I), (2, I), (1, I), (0, -I)],
    }
}

/// The frame vector `e_{i+1}` at a point of `S³ ⊂ R⁴`.
pub fn frame_vector(i: usize, x: &[f64; 4]) -> [f64; 4] {
    match i {
        0 => [-x[1], x[0], -x[3], x[2]],
        1 => [-x[2], x[3], x[0], -x[1]],
        _ => [-x[3], -x[2], x[1], x[0]],
    }
}

/// `e_{i+1}` as four polynomial components in `R⁴`.
pub fn frame_poly(i: usize) -> [SpherePoly; 4] {
    let x = |a| SpherePoly::coord(a);
    match i {
        0 => [x(1).scale(-1.0), x(0), x(3).scale(-1.0), x(2)],
        1 => [x(2).scale(-1.0), x(3), x(0), x(1).scale(-1.0)],
        _ => [x(3).scale(-1.0), x(2).scale(-1.0), x(1), x(0)],
    }
}

/// `P_j^{(α,β)}` evaluated by the three-term recurrence in any ring.
fn jacobi<T: Clone>(
    j: usize,
    alpha: f64,
    beta: f64,
    x: &T,
    one: T,
    add: impl Fn(&T, &T) -> T,
    scale: impl Fn(&T, f64) -> T,
    mul: impl Fn(&T, &T) -> T,
) -> T {
    if j == 0 {
        return one;
    }
    let p1 = add(&scale(&one, (alpha - beta) / 2.0), &scale(x, (alpha + beta + 2.0) / 2.0));
    let (mut pm, mut p) = (one, p1);
    for k in 2..=j {
        let k = k as f64;
        let s = 2.0 * k + alpha + beta;
        let a = 2.0 * k * (k + alpha + beta) * (s - 2.0);
        let b = (s - 1.0) * (alpha * alpha - beta * beta);
        let c = (s - 1.0) * s * (s - 2.0);
        let d = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
        let next = add(&add(&scale(&p, b / a), &scale(&mul(x, &p), c / a)), &scale(&pm, -d / a));
        pm = p;
        p = next;
    }
    p
}

pub fn jacobi_value(j: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    jacobi(j, alpha, beta, &x, 1.0, |a, b| a + b, |a, s| a * s, |a, b| a * b)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Index of a harmonic: `e^{i(pξ₁+qξ₂)}` times a Jacobi profile of order `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HarmonicIndex {
    pub p: i32,
    pub q: i32,
    pub j: u32,
}

impl HarmonicIndex {
    pub fn degree(&self) -> usize {
        (self.p.unsigned_abs() + self.q.unsigned_abs() + 2 * self.j) as usize
    }

    /// The harmonic as a polynomial.
    pub fn poly(&self) -> SpherePoly {
        let zp = if self.p >= 0 { SpherePoly::var(0).pow(self.p as usize) } else { SpherePoly::var(1).pow((-self.p) as usize) };
        let zq = if self.q >= 0 { SpherePoly::var(2).pow(self.q as usize) } else { SpherePoly::var(3).pow((-self.q) as usize) };
        let w = SpherePoly::var(0).mul(&SpherePoly::var(1)).sub(&SpherePoly::var(2).mul(&SpherePoly::var(3)));
        let pj = jacobi(
            self.j as usize,
            self.q.unsigned_abs() as f64,
            self.p.unsigned_abs() as f64,
            &w,
            SpherePoly::constant(1.0),
            |a, b| a.add(b),
            |a, s| a.scale(s),
            |a, b| a.mul(b),
        );
        zp.mul(&zq).mul(&pj)
    }

    /// Profile in `c = cos 2η`.
    fn profile(&self, c: f64) -> f64 {
        let (ap, aq) = (self.p.unsigned_abs() as i32, self.q.unsigned_abs() as i32);
        let cp = ((1.0 + c) / 2.0).max(0.0).sqrt();
        let sp = ((1.0 - c) / 2.0).max(0.0).sqrt();
        cp.powi(ap) * sp.powi(aq) * jacobi_value(self.j as usize, aq as f64, ap as f64, c)
    }

    /// Index of the complex conjugate harmonic.
    pub fn conj(&self) -> HarmonicIndex {
        HarmonicIndex { p: -self.p, q: -self.q, j: self.j }
    }
}

/// Spectral grid resolving harmonics of degree `≤ lmax` and integrating
/// products of two such exactly.
#[derive(Debug)]
pub struct S3Grid {
    pub lmax: usize,
    pub m: usize,
    pub c: Vec<f64>,
    pub wc: Vec<f64>,
    pub basis: Vec<HarmonicIndex>,
    pos: HashMap<HarmonicIndex, usize>,
    /// `profile[b][k]`.
    profile: Vec<Vec<f64>>,
    /// `∫|Y_b|²`.
    pub norm2: Vec<f64>,
    polys: OnceLock<Vec<SpherePoly>>,
}

/// Function values on the grid, indexed `[k][m1][m2]` flattened.
pub type GridValues = Vec<Complex64>;

impl S3Grid {
    pub fn new(lmax: usize) -> Self {
        let m = 2 * lmax + 2;
        let (c, wc) = gauss_legendre(lmax + 2);
        let li = lmax as i32;
        let mut basis = Vec::new();
        for p in -li..=li {
            for q in -(li - p.abs())..=(li - p.abs()) {
                let rest = (li - p.abs() - q.abs()) as u32;
                for j in 0..=rest / 2 {
                    basis.push(HarmonicIndex { p, q, j });
                }
            }
        }
        basis.sort_by_key(|b| (b.degree(), *b));
        let pos = basis.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let profile: Vec<Vec<f64>> = basis.iter().map(|b| c.iter().map(|x| b.profile(*x)).collect()).collect();
        let norm2 = profile.iter().map(|pr| PI * PI * pr.iter().zip(&wc).map(|(v, w)| v * v * w).sum::<f64>()).collect();
        S3Grid { lmax, m, c, wc, basis, pos, profile, norm2, polys: OnceLock::new() }
    }

    pub fn nodes(&self) -> usize {
        self.c.len() * self.m * self.m
    }

    pub fn index_of(&self, h: &HarmonicIndex) -> Option<usize> {
        self.pos.get(h).copied()
    }

    /// Point of `R⁴` and quadrature weight of node `(k, a, b)`.
    pub fn node(&self, k: usize, a: usize, b: usize) -> ([f64; 4], f64) {
        let c = self.c[k];
        let (ce, se) = (((1.0 + c) / 2.0).sqrt(), ((1.0 - c) / 2.0).sqrt());
        let (x1, x2) = (2.0 * PI * a as f64 / self.m as f64, 2.0 * PI * b as f64 / self.m as f64);
        let w = self.wc[k] * 0.25 * (2.0 * PI / self.m as f64).powi(2);
        ([ce * x1.cos(), ce * x1.sin(), se * x2.cos(), se * x2.sin()], w)
    }

    pub fn sample(&self, f: &SpherePoly) -> GridValues {
        let mut out = Vec::with_capacity(self.nodes());
        for k in 0..self.c.len() {
            for a in 0..self.m {
                for b in 0..self.m {
                    out.push(f.eval(&self.node(k, a, b).0));
                }
            }
        }
        out
    }

    /// `∫ f` for values on the grid.
    pub fn integrate(&self, v: &GridValues) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mm = self.m * self.m;
        for k in 0..self.c.len() {
            let w = self.wc[k] * 0.25 * (2.0 * PI / self.m as f64).powi(2);
            s += v[k * mm..(k + 1) * mm].iter().sum::<Complex64>() * w;
        }
        s
    }

    /// `∫ f` for a polynomial of degree `≤ 2·lmax`.
    pub fn integrate_poly(&self, f: &SpherePoly) -> Result<Complex64> {
        if f.degree() > 2 * self.lmax {
            return Err(CalcError::Grid(format!("degree {} exceeds quadrature exactness {}", f.degree(), 2 * self.lmax)));
        }
        Ok(self.integrate(&self.sample(f)))
    }

    /// Harmonic coefficients of band-limited grid values.
    pub fn analyze(&self, v: &GridValues) -> Vec<Complex64> {
        let (nk, m) = (self.c.len(), self.m);
        let l = self.lmax as i32;
        let width = (2 * l + 1) as usize;
        let tw: Vec<Complex64> = (0..m).map(|a| Complex64::from_polar(1.0, -2.0 * PI * a as f64 / m as f64)).collect();
        // fpq[k][(p+l)*width + (q+l)]
        let mut fpq = vec![Complex64::new(0.0, 0.0); nk * width * width];
        for k in 0..nk {
            let slab = &v[k * m * m..(k + 1) * m * m];
            let mut g = vec![Complex64::new(0.0, 0.0); width * m];
            for p in -l..=l {
                for b in 0..m {
                    let mut s = Complex64::new(0.0, 0.0);
                    for a in 0..m {
                        s += slab[a * m + b] * tw[((p.rem_euclid(m as i32) as usize) * a) % m];
                    }
                    g[(p + l) as usize * m + b] = s / m as f64;
                }
            }
            for p in 0..width {
                for q in -l..=l {
                    let mut s = Complex64::new(0.0, 0.0);
                    for b in 0..m {
                        s += g[p * m + b] * tw[((q.rem_euclid(m as i32) as usize) * b) % m];
                    }
                    fpq[k * width * width + p * width + (q + l) as usize] = s / m as f64;
                }
            }
        }
        self.basis
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let col = (h.p + l) as usize * width + (h.q + l) as usize;
                let mut s = Complex64::new(0.0, 0.0);
                let mut nn = 0.0;
                for k in 0..nk {
                    let pr = self.profile[i][k];
                    s += fpq[k * width * width + col] * pr * self.wc[k];
                    nn += pr * pr * self.wc[k];
                }
                s / nn
            })
            .collect()
    }

    /// Grid values of `Σ a_b Y_b`.
    pub fn synthesize(&self, coef: &[Complex64]) -> GridValues {
        let (nk, m) = (self.c.len(), self.m);
        let l = self.lmax as i32;
        let width = (2 * l + 1) as usize;
        let tw: Vec<Complex64> = (0..m).map(|a| Complex64::from_polar(1.0, 2.0 * PI * a as f64 / m as f64)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); nk * m * m];
        for k in 0..nk {
            let mut a_pq = vec![Complex64::new(0.0, 0.0); width * width];
            for (i, h) in self.basis.iter().enumerate() {
                if coef[i] != Complex64::new(0.0, 0.0) {
                    a_pq[(h.p + l) as usize * width + (h.q + l) as usize] += coef[i] * self.profile[i][k];
                }
            }
            // sum over q first: g[p][b]
            let mut g = vec![Complex64::new(0.0, 0.0); width * m];
            for p in 0..width {
                for q in -l..=l {
                    let c = a_pq[p * width + (q + l) as usize];
                    if c == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let qq = q.rem_euclid(m as i32) as usize;
                    for b in 0..m {
                        g[p * m + b] += c * tw[(qq * b) % m];
                    }
                }
            }
            let slab = &mut out[k * m * m..(k + 1) * m * m];
            for p in -l..=l {
                let pp = p.rem_euclid(m as i32) as usize;
                for a in 0..m {
                    let t = tw[(pp * a) % m];
                    for b in 0..m {
                        slab[a * m + b] += g[(p + l) as usize * m + b] * t;
                    }
                }
            }
        }
        out
    }

    /// Harmonics as polynomials, built on first use.
    pub fn basis_polys(&self) -> &[SpherePoly] {
        self.polys.get_or_init(|| self.basis.iter().map(|h| h.poly()).collect())
    }

    /// `Σ a_b Y_b` as a polynomial, dropping coefficients below `tol`.
    pub fn to_poly(&self, coef: &[Complex64], tol: f64) -> SpherePoly {
        let polys = self.basis_polys();
        let mut out = SpherePoly::zero();
        for (i, c) in coef.iter().enumerate() {
            if c.norm() > tol {
                out = out.add(&polys[i].scale_c(*c));
            }
        }
        out
    }

    /// Harmonic coefficients of a polynomial of degree `≤ lmax`.
    pub fn analyze_poly(&self, f: &SpherePoly) -> Result<Vec<Complex64>> {
        if f.degree() > self.lmax {
            return Err(CalcError::Grid(format!("degree {} exceeds grid band limit {}", f.degree(), self.lmax)));
        }
        Ok(self.analyze(&self.sample(f)))
    }
}

/// Diagonal operator `Y ↦ Λ_{deg Y} Y` on `S³`.
#[derive(Debug)]
pub struct SphereMultiplier {
    pub grid: S3Grid,
    pub lambdas: Vec<f64>,
}

/// Coefficient drop tolerance when rebuilding polynomials.
const POLY_TOL: f64 = 1e-13;

impl SphereMultiplier {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(CalcError::Argument("empty multiplier table".into()));
        }
        let grid = S3Grid::new(lambdas.len() - 1);
        Ok(SphereMultiplier { grid, lambdas })
    }

    pub fn lmax(&self) -> usize {
        self.grid.lmax
    }

    pub fn apply_coeffs(&self, coef: &[Complex64]) -> Vec<Complex64> {
        coef.iter().zip(&self.grid.basis).map(|(c, h)| c * self.lambdas[h.degree()]).collect()
    }

    /// Apply on grid values: analysis, multiply, synthesis.
    pub fn apply_values(&self, v: &GridValues) -> GridValues {
        self.grid.synthesize(&self.apply_coeffs(&self.grid.analyze(v)))
    }

    pub fn apply_poly(&self, f: &SpherePoly) -> Result<SpherePoly> {
        let c = self.grid.analyze_poly(f)?;
        Ok(self.grid.to_poly(&self.apply_coeffs(&c), POLY_TOL))
    }
}
