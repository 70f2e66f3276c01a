//! Radial profiles of `(Δ − s(n−s))u = 0` on `H^{n+1}` for one spherical
//! harmonic degree, and their two-term boundary expansion.
//!
//! In geodesic polar form the equation reads
//! `u'' + n coth t u' − l(l+n−1) csch²t u + s(n−s) u = 0`.
//! Near `t = 0` the regular branch is a Frobenius series `t^l Σ c_j t^j`;
//! outward it is continued by a Taylor method; near infinity it is fitted
//! against exact series in `x = 2e^{−t}` with leading powers `x^{n−s}` and
//! `x^s`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::series;
use crate::error::{CalcError, Result};
use crate::jet::Jet;

/// Numerical parameters of a radial solve.
#[derive(Clone, Debug, Serialize)]
pub struct RadialConfig {
    /// Taylor step in `t`.
    pub h: f64,
    /// Taylor order per step.
    pub order: usize,
    /// Start of the Taylor march.
    pub eps: f64,
    /// Frobenius terms used at `eps`.
    pub frob_terms: usize,
    /// Initial fit window `[x0, 2x0]`.
    pub x0: f64,
    /// Smallest `x` reached by the march.
    pub x_min: f64,
    /// Stabilization tolerance for `Λ` under window halving.
    pub window_tol: f64,
    /// Points per fit window.
    pub fit_points: usize,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig {
            h: 0.1,
            order: 30,
            eps: 0.25,
            frob_terms: 60,
            x0: 0.1,
            x_min: 1e-6,
            window_tol: 1e-5,
            fit_points: 9,
        }
    }
}

impl RadialConfig {
    /// Same configuration with the step halved.
    pub fn refined(&self) -> Self {
        RadialConfig { h: self.h / 2.0, ..self.clone() }
    }
}

/// Error unless both indicial roots give a log-free expansion.
pub fn check_resonance(s: f64, n: usize) -> Result<()> {
    let gap = 2.0 * s - n as f64;
    let k = (gap / 2.0).round();
    if (gap - 2.0 * k).abs() < 1e-12 {
        return Err(CalcError::Resonance(format!(
            "s = {s}: 2s − n = {gap} is an even integer, so the boundary expansion may carry logarithms"
        )));
    }
    Ok(())
}

/// Harmonic degree `l` on `S^n`: `Δ_{S^n} Y = l(l+n−1) Y`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HarmonicMode {
    pub l: usize,
    pub n: usize,
}

impl HarmonicMode {
    pub fn eigenvalue(&self) -> usize {
        self.l * (self.l + self.n - 1)
    }

    /// Dimension of the degree-`l` eigenspace.
    pub fn multiplicity(&self) -> usize {
        let binom = |a: usize, b: usize| -> usize { (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1)) };
        if self.l == 0 {
            1
        } else if self.l == 1 {
            self.n + 1
        } else {
            binom(self.n + self.l, self.n) - binom(self.n + self.l - 2, self.n)
        }
    }
}

/// Coefficients `a_m` of `x^ρ Σ a_m x^m` solving the equation in `x`.
pub fn boundary_series(rho: f64, s: f64, l: usize, n: usize, terms: usize) -> Vec<f64> {
    let n = n as f64;
    let mu = s * (n - s);
    let big_l = (l * (l + n as usize - 1)) as f64;
    let mut a = vec![0.0; terms];
    a[0] = 1.0;
    for m in (2..terms).step_by(2) {
        let q = rho + m as f64;
        let lead = 16.0 * (q * q - n * q + mu);
        let q2 = q - 2.0;
        let mut rhs = (8.0 * q2 * q2 + 16.0 * big_l + 8.0 * mu) * a[m - 2];
        if m >= 4 {
            let q4 = q - 4.0;
            rhs -= (q4 * q4 + n * q4 + mu) * a[m - 4];
        }
        a[m] = rhs / lead;
    }
    a
}

fn eval_boundary(rho: f64, a: &[f64], x: f64) -> f64 {
    x.powf(rho) * series::eval(a, x)
}

/// One Taylor segment `[t0, t0 + h]`.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    c: Vec<f64>,
}

/// Regular radial solution, normalized so that the `x^{n−s}` coefficient is 1.
#[derive(Clone, Debug, Serialize)]
pub struct RadialSolution {
    pub s: f64,
    pub l: usize,
    pub n: usize,
    /// `x^{n−s}` coefficient before normalization.
    pub f_raw: f64,
    /// `x^s` coefficient after normalization, i.e. `Λ_l = G/F`.
    pub lambda: f64,
    /// `max|u − Fφ_F − Gφ_G| / max|u|` on the final window.
    pub fit_residual: f64,
    /// Largest relative ODE residual at segment midpoints.
    pub ode_residual: f64,
    /// Final fit window start.
    pub window_x0: f64,
    pub config: RadialConfig,
    #[serde(skip)]
    frob: Vec<f64>,
    #[serde(skip)]
    segments: Vec<Segment>,
    #[serde(skip)]
    scale: f64,
}

fn ode_coeffs(l: usize, n: usize, s: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    ((l * (l + n - 1)) as f64, nf, s * (nf - s))
}

/// Taylor coefficients at `t0` from `u(t0)`, `u'(t0)`.
fn taylor_step(u0: f64, u1: f64, t0: f64, k: usize, l: usize, n: usize, s: f64) -> Vec<f64> {
    let (big_l, nf, mu) = ode_coeffs(l, n, s);
    let (coth, csch2) = series::coth_csch2(t0, k + 1);
    let mut c = vec![0.0; k + 1];
    c[0] = u0;
    c[1] = u1;
    for j in 0..k - 1 {
        let mut rhs = 0.0;
        for i in 0..=j {
            rhs -= nf * coth[i] * (j - i + 1) as f64 * c[j - i + 1];
            rhs += big_l * csch2[i] * c[j - i];
        }
        rhs -= mu * c[j];
        c[j + 2] = rhs / ((j + 2) * (j + 1)) as f64;
    }
    c
}

fn frobenius(l: usize, n: usize, s: f64, terms: usize) -> Vec<f64> {
    let (big_l, nf, mu) = ode_coeffs(l, n, s);
    let (p, q) = series::tcoth_t2csch2(terms);
    let lf = l as f64;
    let mut c = vec![0.0; terms];
    c[0] = 1.0;
    for j in 1..terms {
        let e = lf + j as f64;
        let lead = e * (e - 1.0) + nf * p[0] * e - big_l * q[0];
        let mut rhs = 0.0;
        for i in 1..=j {
            rhs -= (nf * p[i] * (e - i as f64) - big_l * q[i]) * c[j - i];
        }
        if j >= 2 {
            rhs -= mu * c[j - 2];
        }
        c[j] = rhs / lead;
    }
    c
}

impl RadialSolution {
    /// `u(t)` for `eps ≤ t ≤ t_max` (or `t < eps` through the Frobenius series).
    pub fn value(&self, t: f64) -> Result<f64> {
        self.profile(t, 0)
    }

    pub fn t_max(&self) -> f64 {
        self.segments.last().map(|s| s.t0 + s.h).unwrap_or(self.config.eps)
    }

    /// `u` (`deriv = 0`) or `u'` (`deriv = 1`) at `t`.
    fn profile(&self, t: f64, deriv: usize) -> Result<f64> {
        if t < 0.0 || t > self.t_max() + 1e-12 {
            return Err(CalcError::Domain(format!("t = {t} outside [0, {}]", self.t_max())));
        }
        if t < self.config.eps {
            let e = self.config.eps;
            let lf = self.l as i32;
            // u = Σ c_j t^{l+j} / eps^l
            let v = series::eval(&self.frob, t) * (t / e).powi(lf);
            if deriv == 0 {
                return Ok(v * self.scale);
            }
            let dv = series::eval(&series::derivative(&self.frob), t) * (t / e).powi(lf);
            let extra = if self.l == 0 { 0.0 } else { self.l as f64 / t * v };
            return Ok((dv + extra) * self.scale);
        }
        let seg = self.segment(t);
        let tau = t - seg.t0;
        let v = if deriv == 0 { series::eval(&seg.c, tau) } else { series::eval(&series::derivative(&seg.c), tau) };
        Ok(v * self.scale)
    }

    fn segment(&self, t: f64) -> &Segment {
        let k = self.segments.partition_point(|s| s.t0 + s.h < t);
        &self.segments[k.min(self.segments.len() - 1)]
    }

    /// `u(t)` as a jet, for `eps ≤ t.value() ≤ t_max`.
    pub fn profile_jet(&self, t: &Jet) -> Result<Jet> {
        let tv = t.value();
        if tv < self.config.eps || tv > self.t_max() {
            return Err(CalcError::Domain(format!("jet profile needs t in [{}, {}], got {tv}", self.config.eps, self.t_max())));
        }
        let seg = self.segment(tv);
        let tau = t.add_scalar(-seg.t0);
        let mut acc = t.lift(0.0);
        for c in seg.c.iter().rev() {
            acc = (&acc * &tau).add_scalar(*c);
        }
        Ok(acc.scale(self.scale))
    }

    /// Boundary coordinate `x = 2e^{−t}`.
    pub fn x_of_t(t: f64) -> f64 {
        2.0 * (-t).exp()
    }

    pub fn t_of_x(x: f64) -> f64 {
        (2.0 / x).ln()
    }

    /// `x^{n−s}` branch with unit leading coefficient.
    pub fn phi_f(&self, x: f64) -> f64 {
        let rho = self.n as f64 - self.s;
        eval_boundary(rho, &boundary_series(rho, self.s, self.l, self.n, series_terms(x)), x)
    }

    /// `x^s` branch with unit leading coefficient.
    pub fn phi_g(&self, x: f64) -> f64 {
        eval_boundary(self.s, &boundary_series(self.s, self.s, self.l, self.n, series_terms(x)), x)
    }

    /// Exponents recovered by log-slope regression: `(dominant, subdominant)`.
    /// The first uses `u` alone near `x_min`; the second uses `u − φ_F`
    /// slightly further in.
    pub fn fitted_exponents(&self) -> Result<(f64, f64)> {
        let xm = self.config.x_min;
        let dom: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let x = xm * 1.5f64.powi(k);
                Ok((x.ln(), self.value(Self::t_of_x(x))?.abs().ln()))
            })
            .collect::<Result<_>>()?;
        let sub: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let x = 100.0 * xm * 1.3f64.powi(k);
                let v = self.value(Self::t_of_x(x))? - self.phi_f(x);
                Ok((x.ln(), v.abs().ln()))
            })
            .collect::<Result<_>>()?;
        Ok((slope(&dom), slope(&sub)))
    }
}

fn series_terms(x: f64) -> usize {
    if x < 0.05 {
        40
    } else if x < 0.3 {
        80
    } else {
        160
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Solve for the regular profile and extract `Λ_l = G/F`.
pub fn radial_solve(s: f64, l: usize, n: usize, cfg: &RadialConfig) -> Result<RadialSolution> {
    if n < 2 {
        return Err(CalcError::Argument(format!("boundary dimension n must be ≥ 2, got {n}")));
    }
    if !s.is_finite() {
        return Err(CalcError::Argument("s must be finite".into()));
    }
    check_resonance(s, n)?;
    if cfg.order < 4 || cfg.h <= 0.0 || cfg.eps <= 0.0 || cfg.eps > 1.0 {
        return Err(CalcError::Argument("invalid radial configuration".into()));
    }
    let frob = frobenius(l, n, s, cfg.frob_terms);
    let e = cfg.eps;
    let u0 = series::eval(&frob, e);
    let u1 = series::eval(&series::derivative(&frob), e) + if l == 0 { 0.0 } else { l as f64 / e * u0 };
    let t_end = RadialSolution::t_of_x(cfg.x_min * 0.5);
    let mut segments = Vec::new();
    let (mut t, mut a, mut b) = (e, u0, u1);
    let (big_l, nf, mu) = ode_coeffs(l, n, s);
    let mut ode_res: f64 = 0.0;
    while t < t_end {
        let h = cfg.h.min(0.4 * t).min(t_end - t + 1e-12);
        let c = taylor_step(a, b, t, cfg.order, l, n, s);
        // midpoint residual against directly evaluated coefficients
        let tm = t + h / 2.0;
        let d1 = series::derivative(&c);
        let d2 = series::derivative(&d1);
        let (um, u1m, u2m) = (series::eval(&c, h / 2.0), series::eval(&d1, h / 2.0), series::eval(&d2, h / 2.0));
        let res = u2m + nf / tm.tanh() * u1m - big_l / tm.sinh().powi(2) * um + mu * um;
        let scale = u2m.abs() + (nf / tm.tanh() * u1m).abs() + (big_l / tm.sinh().powi(2) * um).abs() + (mu * um).abs();
        if scale > 0.0 {
            ode_res = ode_res.max(res.abs() / scale);
        }
        a = series::eval(&c, h);
        b = series::eval(&d1, h);
        segments.push(Segment { t0: t, h, c });
        t += h;
        if !a.is_finite() {
            return Err(CalcError::Grid(format!("profile overflowed at t = {t}")));
        }
    }
    let mut sol = RadialSolution {
        s,
        l,
        n,
        f_raw: 0.0,
        lambda: 0.0,
        fit_residual: 0.0,
        ode_residual: ode_res,
        window_x0: cfg.x0,
        config: cfg.clone(),
        frob,
        segments,
        scale: 1.0,
    };
    let mut x0 = cfg.x0;
    let mut prev = fit_window(&sol, x0)?;
    let u0 = sol.value(RadialSolution::t_of_x(x0))?;
    let lead = prev.0 * sol.phi_f(x0);
    if !lead.is_normal() || lead.abs() < 1e-9 * u0.abs() {
        return Err(CalcError::Degenerate(format!("x^(n−s) coefficient vanishes for s = {s}, l = {l}: Λ is infinite")));
    }
    loop {
        let next_x0 = x0 / 2.0;
        if 2.0 * next_x0 < 4.0 * cfg.x_min {
            return Err(CalcError::Grid(format!(
                "Λ did not stabilize to {} before the window reached x_min = {}",
                cfg.window_tol, cfg.x_min
            )));
        }
        let next = fit_window(&sol, next_x0)?;
        let tol = cfg.window_tol * next.1.abs().max(1.0);
        x0 = next_x0;
        if (next.1 - prev.1).abs() <= tol {
            prev = next;
            break;
        }
        prev = next;
    }
    let (f, lambda, resid) = prev;
    sol.f_raw = f;
    sol.scale = 1.0 / f;
    sol.lambda = lambda;
    sol.fit_residual = resid;
    sol.window_x0 = x0;
    Ok(sol)
}

/// Least-squares fit on `[x0, 2x0]`: returns `(F, G/F, relative residual)`.
fn fit_window(sol: &RadialSolution, x0: f64) -> Result<(f64, f64, f64)> {
    let m = sol.config.fit_points;
    let xs: Vec<f64> = (0..m).map(|i| x0 * (1.0 + i as f64 / (m - 1) as f64)).collect();
    let mut a = DMatrix::zeros(m, 2);
    let mut y = DVector::zeros(m);
    for (i, x) in xs.iter().enumerate() {
        a[(i, 0)] = sol.phi_f(*x);
        a[(i, 1)] = sol.phi_g(*x);
        y[i] = sol.value(RadialSolution::t_of_x(*x))?;
    }
    // column scaling for conditioning
    let norms: Vec<f64> = (0..2).map(|j| a.column(j).norm()).collect();
    for j in 0..2 {
        let nj = norms[j];
        a.column_mut(j).scale_mut(1.0 / nj);
    }
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&y, 1e-14).map_err(|e| CalcError::Grid(format!("boundary fit failed: {e}")))?;
    let (f, g) = (coef[0] / norms[0], coef[1] / norms[1]);
    let fitted = &a * &coef;
    let ymax = y.amax();
    let resid = (&y - fitted).amax() / ymax;
    if !f.is_finite() || !g.is_finite() {
        return Err(CalcError::Grid("non-finite boundary coefficients".into()));
    }
    Ok((f, g / f, resid))
}
