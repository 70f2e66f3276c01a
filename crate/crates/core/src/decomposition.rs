//! Splitting null spaces of products of commuting shifted operators.
//!
//! For distinct shifts `μ_1..μ_p` the polynomial identity
//! `Σ_i Q_i ∏_{j≠i}(t − μ_j) = 1` with `Q_i = ∏_{j≠i} 1/(μ_i − μ_j)` gives
//! projectors `Q_i ∏_{j≠i}(E − μ_j)` onto the kernels of `E − μ_i` inside the
//! kernel of `∏(E − μ_j)`. Two backends: exact rational matrices, and a
//! second-order operator acting on jets of fields at a point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{CalcError, Result};
use crate::fields_charts::geometry::LocalGeometry;
use crate::fields_charts::{LocalField, MetricModel, ScalarJetField};

/// Shift gaps below this are refused.
pub const MIN_GAP: f64 = 1e-8;
/// Default tolerance for field probes.
pub const FIELD_TOL: f64 = 1e-8;
/// Largest matrix accepted by the exact backend.
pub const MAX_MATRIX: usize = 64;

/// Exact `Q_i`.
pub fn q_coefficients(mu: &[BigRational]) -> Result<Vec<BigRational>> {
    if mu.is_empty() {
        return Err(CalcError::Argument("empty shift list".into()));
    }
    (0..mu.len())
        .map(|i| {
            let mut q = BigRational::one();
            for (j, m) in mu.iter().enumerate() {
                if j != i {
                    let gap = &mu[i] - m;
                    if gap.is_zero() {
                        return Err(CalcError::Degenerate(format!("repeated shift {}", mu[i])));
                    }
                    q /= gap;
                }
            }
            Ok(q)
        })
        .collect()
}

/// Floating `Q_i`, refusing gaps below [`MIN_GAP`].
pub fn q_coefficients_f64(mu: &[f64]) -> Result<Vec<f64>> {
    if mu.is_empty() {
        return Err(CalcError::Argument("empty shift list".into()));
    }
    let mut q = vec![1.0; mu.len()];
    for i in 0..mu.len() {
        for j in 0..mu.len() {
            if j == i {
                continue;
            }
            let gap = mu[i] - mu[j];
            if gap == 0.0 {
                return Err(CalcError::Degenerate(format!("repeated shift {}", mu[i])));
            }
            if gap.abs() < MIN_GAP {
                return Err(CalcError::Conditioning(format!(
                    "shifts {} and {} are {gap:.1e} apart; Q would scale like 1/gap",
                    mu[i], mu[j]
                )));
            }
            q[i] /= gap;
        }
    }
    Ok(q)
}

/// `Σ_i Q_i ∏_{j≠i}(t − μ_j) − 1` at `p+1` integer sample points, exactly.
pub fn partial_fraction_residuals(mu: &[BigRational]) -> Result<Vec<BigRational>> {
    let q = q_coefficients(mu)?;
    Ok((0..=mu.len() as i64)
        .map(|t| {
            let t = BigRational::from_integer(BigInt::from(t * 7 - 3));
            let mut s = BigRational::zero();
            for (i, qi) in q.iter().enumerate() {
                let mut prod = qi.clone();
                for (j, m) in mu.iter().enumerate() {
                    if j != i {
                        prod *= &t - m;
                    }
                }
                s += prod;
            }
            s - BigRational::one()
        })
        .collect())
}

pub type RatMatrix = Vec<Vec<BigRational>>;
pub type RatVector = Vec<BigRational>;

fn mat_vec(a: &RatMatrix, v: &[BigRational]) -> RatVector {
    a.iter().map(|row| row.iter().zip(v).fold(BigRational::zero(), |s, (x, y)| s + x * y)).collect()
}

fn mat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(BigRational::zero(), |s, k| s + &a[i][k] * &b[k][j])).collect())
        .collect()
}

fn identity(n: usize) -> RatMatrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect()).collect()
}

fn shifted(a: &RatMatrix, mu: &BigRational) -> RatMatrix {
    let mut s = a.clone();
    for (i, row) in s.iter_mut().enumerate() {
        row[i] -= mu;
    }
    s
}

fn max_abs_f64(v: &[BigRational]) -> f64 {
    v.iter().map(|x| x.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

fn sub(a: &[BigRational], b: &[BigRational]) -> RatVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Exact matrix backend.
#[derive(Clone, Debug)]
pub struct MatrixFactorSystem {
    pub e: RatMatrix,
    pub mu: Vec<BigRational>,
    pub q: Vec<BigRational>,
}

/// Components of a vector and the residuals certifying them.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixProjection {
    #[serde(serialize_with = "ser_rat_rows")]
    pub components: Vec<RatVector>,
    /// `max|∏(E − μ_j)v|`.
    pub null_residual: f64,
    pub in_null_space: bool,
    /// `max|(E − μ_i)v_i|` for each `i`.
    pub eigen_residuals: Vec<f64>,
    /// `max|Σ v_i − v|`.
    pub sum_residual: f64,
}

fn ser_rat_rows<S: serde::Serializer>(v: &[RatVector], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
}

impl MatrixFactorSystem {
    pub fn new(e: RatMatrix, mu: Vec<BigRational>) -> Result<Self> {
        let n = e.len();
        if n == 0 || n > MAX_MATRIX || e.iter().any(|r| r.len() != n) {
            return Err(CalcError::Argument(format!("need a square matrix of size 1..={MAX_MATRIX}")));
        }
        let q = q_coefficients(&mu)?;
        Ok(MatrixFactorSystem { e, mu, q })
    }

    pub fn size(&self) -> usize {
        self.e.len()
    }

    /// `∏_{j≠i}(E − μ_j)` (all factors when `skip` is `None`).
    fn product(&self, skip: Option<usize>) -> RatMatrix {
        let mut acc = identity(self.size());
        for (j, m) in self.mu.iter().enumerate() {
            if Some(j) != skip {
                acc = mat_mul(&acc, &shifted(&self.e, m));
            }
        }
        acc
    }

    /// `Q_i ∏_{j≠i}(E − μ_j)`.
    pub fn projector(&self, i: usize) -> Result<RatMatrix> {
        if i >= self.mu.len() {
            return Err(CalcError::Argument(format!("component {i} of {}", self.mu.len())));
        }
        Ok(self.product(Some(i)).into_iter().map(|r| r.into_iter().map(|x| x * &self.q[i]).collect()).collect())
    }

    /// `max|Σ_i Q_i P^i v − v|`, exactly zero for any `v`.
    pub fn identity_decomposition_check(&self, v: &[BigRational]) -> Result<BigRational> {
        self.check_len(v)?;
        let mut s = vec![BigRational::zero(); v.len()];
        for i in 0..self.mu.len() {
            for (a, b) in s.iter_mut().zip(mat_vec(&self.projector(i)?, v)) {
                *a += b;
            }
        }
        Ok(sub(&s, v).into_iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero))
    }

    fn check_len(&self, v: &[BigRational]) -> Result<()> {
        if v.len() != self.size() {
            return Err(CalcError::Argument(format!("vector of length {}, matrix of size {}", v.len(), self.size())));
        }
        Ok(())
    }

    pub fn project(&self, v: &[BigRational]) -> Result<MatrixProjection> {
        self.check_len(v)?;
        let null = mat_vec(&self.product(None), v);
        let mut components = Vec::with_capacity(self.mu.len());
        let mut eig = Vec::with_capacity(self.mu.len());
        let mut total = vec![BigRational::zero(); v.len()];
        for i in 0..self.mu.len() {
            let vi = mat_vec(&self.projector(i)?, v);
            eig.push(max_abs_f64(&mat_vec(&shifted(&self.e, &self.mu[i]), &vi)));
            for (a, b) in total.iter_mut().zip(&vi) {
                *a += b;
            }
            components.push(vi);
        }
        let null_residual = max_abs_f64(&null);
        Ok(MatrixProjection {
            components,
            null_residual,
            in_null_space: null_residual == 0.0,
            eigen_residuals: eig,
            sum_residual: max_abs_f64(&sub(&total, v)),
        })
    }
}

/// Field backend: `E = Δ^g` on scalar functions, evaluated through jets at a
/// point.
#[derive(Clone, Debug)]
pub struct FieldFactorSystem {
    pub metric: MetricModel,
    pub mu: Vec<f64>,
    pub q: Vec<f64>,
}

/// Pointwise analogue of [`MatrixProjection`].
#[derive(Clone, Debug, Serialize)]
pub struct FieldProjection {
    pub point: Vec<f64>,
    pub value: f64,
    pub components: Vec<f64>,
    pub null_residual: f64,
    pub in_null_space: bool,
    pub eigen_residuals: Vec<f64>,
    pub sum_residual: f64,
    /// `max_i |Proj_i Proj_i v − Proj_i v|`.
    pub idempotence: f64,
    /// `max_{i≠j} |Proj_i Proj_j v|`.
    pub cross: f64,
    /// `max_i |Proj_i E v − E Proj_i v|`.
    pub commutator: f64,
}

impl FieldFactorSystem {
    pub fn new(metric: MetricModel, mu: Vec<f64>) -> Result<Self> {
        let q = q_coefficients_f64(&mu)?;
        Ok(FieldFactorSystem { metric, mu, q })
    }

    fn apply_e(&self, v: &LocalField, geo: &LocalGeometry) -> Result<LocalField> {
        v.laplacian(geo)
    }

    fn shifted(&self, v: &LocalField, m: f64, geo: &LocalGeometry) -> Result<LocalField> {
        let ev = self.apply_e(v, geo)?;
        ev.sub(&v.truncate(ev.order()).scale(m))
    }

    fn product(&self, v: &LocalField, skip: Option<usize>, geo: &LocalGeometry) -> Result<LocalField> {
        let mut acc = v.clone();
        for (j, m) in self.mu.iter().enumerate() {
            if Some(j) != skip {
                acc = self.shifted(&acc, *m, geo)?;
            }
        }
        Ok(acc)
    }

    fn proj(&self, i: usize, v: &LocalField, geo: &LocalGeometry) -> Result<LocalField> {
        Ok(self.product(v, Some(i), geo)?.scale(self.q[i]))
    }

    /// Jet order of `v` needed by [`FieldFactorSystem::project`].
    pub fn required_order(&self) -> usize {
        let p = self.mu.len();
        (4 * (p - 1)).max(2 * p) + 2
    }

    fn local(&self, v: &ScalarJetField, p: &[f64]) -> Result<(LocalField, LocalGeometry)> {
        self.metric.chart.check(p)?;
        let order = self.required_order();
        let geo = LocalGeometry::at(&self.metric, p, order + 1)?;
        Ok((LocalField::scalar(v.jet_at(p, order)?, num_rational::Rational64::zero()), geo))
    }

    /// `|Σ_i Q_i P^i v − v|` at `p`.
    pub fn identity_decomposition_check(&self, v: &ScalarJetField, p: &[f64]) -> Result<f64> {
        let (f, geo) = self.local(v, p)?;
        let mut s = 0.0;
        for i in 0..self.mu.len() {
            s += self.proj(i, &f, &geo)?.value();
        }
        Ok((s - f.value()).abs())
    }

    pub fn project(&self, v: &ScalarJetField, p: &[f64], tol: f64) -> Result<FieldProjection> {
        let (f, geo) = self.local(v, p)?;
        let np = self.mu.len();
        let null_residual = self.product(&f, None, &geo)?.value().abs();
        let mut components = Vec::with_capacity(np);
        let mut eig = Vec::with_capacity(np);
        let mut projs = Vec::with_capacity(np);
        for i in 0..np {
            let vi = self.proj(i, &f, &geo)?;
            components.push(vi.value());
            eig.push(self.shifted(&vi, self.mu[i], &geo)?.value().abs());
            projs.push(vi);
        }
        let mut idem: f64 = 0.0;
        let mut cross: f64 = 0.0;
        let mut comm: f64 = 0.0;
        let ef = self.apply_e(&f, &geo)?;
        for i in 0..np {
            for (j, pj) in projs.iter().enumerate() {
                let pij = self.proj(i, pj, &geo)?.value();
                if i == j {
                    idem = idem.max((pij - pj.value()).abs());
                } else {
                    cross = cross.max(pij.abs());
                }
            }
            let a = self.proj(i, &ef, &geo)?.value();
            let b = self.apply_e(&projs[i], &geo)?.value();
            comm = comm.max((a - b).abs());
        }
        let sum: f64 = components.iter().sum();
        Ok(FieldProjection {
            point: p.to_vec(),
            value: f.value(),
            components,
            null_residual,
            in_null_space: null_residual <= tol,
            eigen_residuals: eig,
            sum_residual: (sum - f.value()).abs(),
            idempotence: idem,
            cross,
            commutator: comm,
        })
    }
}

/// `((1 − |y|²)/|y − θ|²)^s` on the unit ball: with the metric
/// `4|dy|²/(1 − |y|²)²` it satisfies `Δu = s(n − s)u`, `n = d − 1`.
pub fn poisson_power(theta: Vec<f64>, s: f64) -> ScalarJetField {
    let d = theta.len();
    ScalarJetField::new(d, format!("P^{s}"), move |y| {
        let r2 = y.iter().fold(y[0].lift(0.0), |a, v| &a + &(v * v));
        let dist = y.iter().zip(&theta).fold(y[0].lift(0.0), |a, (v, t)| {
            let e = v.add_scalar(-t);
            &a + &(&e * &e)
        });
        (-&r2).add_scalar(1.0).div(&dist).powf(s)
    })
}

/// Parse `"3"`, `"-1/2"`, `"0.25"` or `"1e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || CalcError::Argument(format!("not a rational number: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let neg = int.starts_with('-');
    let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
    if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut num: BigInt = digits.parse().map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let e = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if e >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, e as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-e) as usize))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn z(n: i64) -> BigRational {
        q(n, 1)
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_coefficients(&[z(1), z(2)]).unwrap(), vec![z(-1), z(1)]);
        assert_eq!(q_coefficients(&[z(0), z(2)]).unwrap(), vec![q(-1, 2), q(1, 2)]);
        let mu = [z(1), z(2), z(4)];
        assert_eq!(q_coefficients(&mu).unwrap(), vec![q(1, 3), q(-1, 2), q(1, 6)]);
        assert!(partial_fraction_residuals(&mu).unwrap().iter().all(|r| r.is_zero()));
        assert_eq!(q_coefficients(&[z(5)]).unwrap(), vec![z(1)]);
        assert!(matches!(q_coefficients(&[z(1), z(1)]), Err(CalcError::Degenerate(_))));
        assert!(matches!(q_coefficients_f64(&[1.0, 1.0 + 1e-10]), Err(CalcError::Conditioning(_))));
        let f = q_coefficients_f64(&[1.0, 2.0, 4.0]).unwrap();
        assert!((f[0] - 1.0 / 3.0).abs() < 1e-15 && (f[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_example() {
        let e = vec![vec![z(1), z(1)], vec![z(0), z(3)]];
        let sys = MatrixFactorSystem::new(e, vec![z(1), z(3)]).unwrap();
        assert_eq!(sys.projector(0).unwrap(), vec![vec![z(1), q(-1, 2)], vec![z(0), z(0)]]);
        assert_eq!(sys.projector(1).unwrap(), vec![vec![z(0), q(1, 2)], vec![z(0), z(1)]]);
        let r = sys.project(&[z(1), z(1)]).unwrap();
        assert_eq!(r.components, vec![vec![q(1, 2), z(0)], vec![q(1, 2), z(1)]]);
        assert!(r.in_null_space && r.sum_residual == 0.0 && r.eigen_residuals == vec![0.0, 0.0]);
        assert!(sys.identity_decomposition_check(&[z(3), z(-7)]).unwrap().is_zero());
        // an eigenvector is its own component
        let r = sys.project(&[z(1), z(2)]).unwrap();
        assert_eq!(r.components[0], vec![z(0), z(0)]);
        assert_eq!(r.components[1], vec![z(1), z(2)]);
    }

    #[test]
    fn exact_properties_on_random_integer_matrices() {
        use crate::fields_charts::chart::rng_from_seed;
        use rand::Rng;
        let mut rng = rng_from_seed(17);
        for _ in 0..10 {
            // E = S D S⁻¹ with unimodular S, so eigenvalues are the diagonal
            let n = 4;
            let mu = [z(-1), z(2), q(5, 2)];
            let diag: Vec<BigRational> = (0..n).map(|i| mu[i % 3].clone()).collect();
            let mut s = identity(n);
            let mut sinv = identity(n);
            for _ in 0..6 {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                if a == b {
                    continue;
                }
                let c = z(rng.random_range(-2..=2));
                let mut el = identity(n);
                el[a][b] = c.clone();
                let mut eli = identity(n);
                eli[a][b] = -c;
                s = mat_mul(&s, &el);
                sinv = mat_mul(&eli, &sinv);
            }
            let dm: RatMatrix = (0..n).map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { z(0) }).collect()).collect();
            let e = mat_mul(&mat_mul(&s, &dm), &sinv);
            let sys = MatrixFactorSystem::new(e.clone(), mu.to_vec()).unwrap();
            let p: Vec<RatMatrix> = (0..3).map(|i| sys.projector(i).unwrap()).collect();
            for i in 0..3 {
                assert_eq!(mat_mul(&p[i], &p[i]), p[i]);
                assert_eq!(mat_mul(&p[i], &e), mat_mul(&e, &p[i]));
                for j in 0..3 {
                    if i != j {
                        assert!(mat_mul(&p[i], &p[j]).iter().flatten().all(|x| x.is_zero()));
                    }
                }
            }
            let v: RatVector = (0..n).map(|_| z(rng.random_range(-5..=5))).collect();
            let r = sys.project(&v).unwrap();
            assert!(r.in_null_space && r.sum_residual == 0.0 && r.eigen_residuals.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn non_null_vector_is_flagged() {
        let e = vec![vec![z(1), z(0), z(0)], vec![z(0), z(3), z(0)], vec![z(0), z(0), z(5)]];
        let sys = MatrixFactorSystem::new(e, vec![z(1), z(3)]).unwrap();
        let r = sys.project(&[z(1), z(1), z(1)]).unwrap();
        assert!(!r.in_null_space && r.null_residual > 0.0);
        assert_eq!(r.sum_residual, 0.0);
        assert!(r.eigen_residuals.iter().any(|x| *x > 0.0));
    }

    #[test]
    fn poisson_powers_are_eigenfunctions() {
        let m = MetricModel::hyperbolic_ball(4).unwrap();
        let theta = vec![0.6, 0.0, 0.8, 0.0];
        for s in [0.5, 1.0, 2.0, 3.0, 2.7] {
            let sys = FieldFactorSystem::new(m.clone(), vec![s * (3.0 - s)]).unwrap();
            let u = poisson_power(theta.clone(), s);
            for p in m.chart.sample(3, 10) {
                let r = sys.project(&u, &p, FIELD_TOL).unwrap();
                assert!(r.null_residual < 1e-9 * r.value.abs().max(1.0), "s={s} {}", r.null_residual);
            }
        }
    }

    #[test]
    fn hyperbolic_null_space_splits() {
        // k = 4, n = 3: shifts s(n−s) = {0, 2}
        let m = MetricModel::hyperbolic_ball(4).unwrap();
        let sys = FieldFactorSystem::new(m.clone(), vec![0.0, 2.0]).unwrap();
        let u1 = poisson_power(vec![0.6, 0.0, 0.8, 0.0], 3.0).scale(0.2).add(&ScalarJetField::constant(4, 0.7));
        let u2 = poisson_power(vec![0.0, -1.0, 0.0, 0.0], 2.0).scale(0.3).add(&poisson_power(vec![0.0, 0.0, 0.0, 1.0], 1.0));
        let v = u1.add(&u2);
        for p in m.chart.sample(4, 20) {
            let r = sys.project(&v, &p, FIELD_TOL).unwrap();
            let scale = r.value.abs().max(1.0);
            assert!(r.in_null_space);
            assert!((r.components[0] - u1.value(&p)).abs() < 1e-6 * scale);
            assert!((r.components[1] - u2.value(&p)).abs() < 1e-6 * scale);
            assert!(r.sum_residual < 1e-8 * scale);
            assert!(r.idempotence < 1e-8 * scale && r.cross < 1e-8 * scale && r.commutator < 1e-8 * scale);
            assert!(r.eigen_residuals.iter().all(|e| *e < 1e-8 * scale));
            assert!(sys.identity_decomposition_check(&v, &p).unwrap() < 1e-8 * scale);
        }
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("-1/2").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("-2.5E1").unwrap(), z(-25));
        assert!(parse_rational("x").is_err() && parse_rational("1/0").is_err());
    }
}
