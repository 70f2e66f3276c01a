//! Truncated univariate power series as plain coefficient vectors.

pub fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for (i, x) in a.iter().enumerate().take(n) {
        for (j, y) in b.iter().enumerate().take(n - i) {
            c[i + j] += x * y;
        }
    }
    c
}

/// `a / b`, requires `b[0] ≠ 0`.
pub fn div(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n];
    for k in 0..n {
        let mut s = a.get(k).copied().unwrap_or(0.0);
        for j in 1..=k.min(b.len() - 1) {
            s -= b[j] * q[k - j];
        }
        q[k] = s / b[0];
    }
    q
}

/// `e^{c·τ}` scaled by `e0`.
pub fn exp_linear(e0: f64, c: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut term = e0;
    for j in 0..n {
        out.push(term);
        term *= c / (j + 1) as f64;
    }
    out
}

/// Horner evaluation.
pub fn eval(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |s, c| s * x + c)
}

pub fn derivative(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().skip(1).map(|(j, c)| j as f64 * c).collect()
}

/// Taylor coefficients of `coth` and `csch²` about `t0 > 0`.
pub fn coth_csch2(t0: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let e = exp_linear((-2.0 * t0).exp(), -2.0, n);
    let mut num = e.clone();
    num[0] += 1.0;
    let mut den: Vec<f64> = e.iter().map(|x| -x).collect();
    den[0] += 1.0;
    let coth = div(&num, &den, n);
    let den2 = mul(&den, &den, n);
    let e4: Vec<f64> = e.iter().map(|x| 4.0 * x).collect();
    (coth, div(&e4, &den2, n))
}

/// Even series `t·coth t` and `t²/sinh² t` about 0.
pub fn tcoth_t2csch2(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sinc = vec![0.0; n];
    let mut cosh = vec![0.0; n];
    let mut f = 1.0;
    for j in 0..n {
        if j > 0 {
            f *= j as f64;
        }
        if j % 2 == 0 {
            cosh[j] = 1.0 / f;
            sinc[j] = 1.0 / (f * (j + 1) as f64);
        }
    }
    let p = div(&cosh, &sinc, n);
    let s2 = mul(&sinc, &sinc, n);
    let mut one = vec![0.0; n];
    one[0] = 1.0;
    (p, div(&one, &s2, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_coefficients() {
        let t0: f64 = 0.7;
        let (c, s) = coth_csch2(t0, 30);
        for tau in [-0.15, 0.0, 0.1, 0.15] {
            let t = t0 + tau;
            assert!((eval(&c, tau) - 1.0 / t.tanh()).abs() < 1e-13);
            assert!((eval(&s, tau) - 1.0 / t.sinh().powi(2)).abs() < 1e-12);
        }
        let (p, q) = tcoth_t2csch2(40);
        for t in [0.1f64, 0.5, 1.2] {
            assert!((eval(&p, t) - t / t.tanh()).abs() < 1e-14);
            assert!((eval(&q, t) - (t / t.sinh()).powi(2)).abs() < 1e-14);
        }
    }
}
