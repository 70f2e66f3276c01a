//! Dirichlet-to-Neumann maps on the hyperbolic ball model.
//!
//! Scalar maps are diagonal in spherical harmonics, with one radial solve per
//! degree. On `S³` they are also realized on explicit functions through the
//! spectral grid of [`sphere`], and lifted to tractors in [`splitting`].

pub mod radial;
pub(crate) mod series;
pub mod sphere;
pub mod splitting;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

pub use radial::{boundary_series, check_resonance, radial_solve, HarmonicMode, RadialConfig, RadialSolution};
pub use sphere::{HarmonicIndex, S3Grid, SphereMultiplier, SpherePoly};
pub use splitting::{
    adjointness_pair, middle_slot, random_covector, random_tractor, splitting_e, splitting_e_adjoint, translation_report,
    vector_harmonic_probes, Covector, Probe, ProbeAction, ProbeKind, SphereTractor, TranslationReport, TwistedDtn,
};

use crate::error::{CalcError, Result};
use crate::fields_charts::chart::rng_from_seed;
use crate::fields_charts::field::ScalarJetField;

/// Tolerances a table is checked against.
#[derive(Clone, Debug, Serialize)]
pub struct TableTolerances {
    pub ode_residual: f64,
    pub fit_residual: f64,
    pub refinement: f64,
}

impl Default for TableTolerances {
    fn default() -> Self {
        TableTolerances { ode_residual: 1e-9, fit_residual: 1e-6, refinement: 1e-5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DtnRow {
    pub l: usize,
    pub lambda: f64,
    pub fit_residual: f64,
    pub ode_residual: f64,
    pub window_x0: f64,
}

/// `Λ_l` for `l = 0..=lmax` at fixed `(n, s)`.
#[derive(Clone, Debug, Serialize)]
pub struct DtNTable {
    pub n: usize,
    pub s: f64,
    pub rows: Vec<DtnRow>,
    pub config: RadialConfig,
    pub tolerances: TableTolerances,
}

pub fn dtn_table(n: usize, s: f64, lmax: usize, cfg: &RadialConfig) -> Result<DtNTable> {
    check_resonance(s, n)?;
    let rows = (0..=lmax)
        .into_par_iter()
        .map(|l| {
            radial_solve(s, l, n, cfg).map(|r| DtnRow {
                l,
                lambda: r.lambda,
                fit_residual: r.fit_residual,
                ode_residual: r.ode_residual,
                window_x0: r.window_x0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DtNTable { n, s, rows, config: cfg.clone(), tolerances: TableTolerances::default() })
}

impl DtNTable {
    pub fn lmax(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    /// `max_l |Λ_l − Λ'_l| / max(1, |Λ_l|)`.
    pub fn relative_difference(&self, other: &DtNTable) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a.lambda - b.lambda).abs() / a.lambda.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    /// `(max − min) / mean` of `Λ_l / l` over `lo..=hi`.
    pub fn ratio_spread(&self, lo: usize, hi: usize) -> Result<f64> {
        if lo == 0 || hi > self.lmax() || lo > hi {
            return Err(CalcError::Argument(format!("bad degree range {lo}..={hi}")));
        }
        let r: Vec<f64> = (lo..=hi).map(|l| self.rows[l].lambda / l as f64).collect();
        let (mn, mx) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        Ok((mx - mn) / mean.abs())
    }

    /// Whether `|Λ_l|` grows strictly with `l`.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].lambda.abs() > w[0].lambda.abs())
    }

    pub fn worst_residuals(&self) -> (f64, f64) {
        let f = self.rows.iter().map(|r| r.fit_residual).fold(0.0, f64::max);
        let o = self.rows.iter().map(|r| r.ode_residual).fold(0.0, f64::max);
        (f, o)
    }

    pub fn within_tolerances(&self) -> bool {
        let (f, o) = self.worst_residuals();
        f <= self.tolerances.fit_residual && o <= self.tolerances.ode_residual
    }
}

/// `s = (n+1)/2`, the parameter of the second-order map.
pub fn k2_parameter(n: usize) -> f64 {
    (n as f64 + 1.0) / 2.0
}

/// `s` paired with the density exponents `m_j`, `k − 1 − m_j`.
pub fn scattering_parameter(k: usize, n: usize, m_j: usize) -> Result<f64> {
    if k == 0 || k % 2 == 1 || m_j >= k / 2 {
        return Err(CalcError::Argument(format!("need even k ≥ 2 and m_j < k/2, got k={k}, m_j={m_j}")));
    }
    Ok((k + n - 1 - 2 * m_j) as f64 / 2.0)
}

/// Finite combination of the `S³` harmonics of [`HarmonicIndex`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HarmonicExpansion {
    pub terms: BTreeMap<HarmonicIndex, Complex64>,
}

impl HarmonicExpansion {
    pub fn single(h: HarmonicIndex, c: f64) -> Self {
        let mut e = HarmonicExpansion::default();
        e.terms.insert(h, Complex64::new(c, 0.0));
        e
    }

    pub fn add(&self, o: &HarmonicExpansion) -> HarmonicExpansion {
        let mut out = self.clone();
        for (h, c) in &o.terms {
            *out.terms.entry(*h).or_default() += c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> HarmonicExpansion {
        HarmonicExpansion { terms: self.terms.iter().map(|(h, c)| (*h, c * s)).collect() }
    }

    pub fn get(&self, h: &HarmonicIndex) -> Complex64 {
        self.terms.get(h).copied().unwrap_or_default()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn prune(&self, tol: f64) -> HarmonicExpansion {
        HarmonicExpansion { terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(h, c)| (*h, *c)).collect() }
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|h| h.degree()).max().unwrap_or(0)
    }
}

/// A scalar DtN table realized on functions on `S³`.
#[derive(Debug)]
pub struct ScatteringMap {
    pub table: DtNTable,
    pub sphere: SphereMultiplier,
}

impl ScatteringMap {
    pub fn new(table: DtNTable) -> Result<Self> {
        if table.n != 3 {
            return Err(CalcError::Unsupported(format!("harmonic expansions are realized on S³ only, got n = {}", table.n)));
        }
        let sphere = SphereMultiplier::new(table.lambdas())?;
        Ok(ScatteringMap { table, sphere })
    }

    /// The second-order map, `s = 2`.
    pub fn k2(lmax: usize, cfg: &RadialConfig) -> Result<Self> {
        Self::new(dtn_table(3, k2_parameter(3), lmax, cfg)?)
    }

    fn coeffs(&self, f: &HarmonicExpansion) -> Result<Vec<Complex64>> {
        let grid = &self.sphere.grid;
        let mut c = vec![Complex64::new(0.0, 0.0); grid.basis.len()];
        for (h, v) in &f.terms {
            let i = grid
                .index_of(h)
                .ok_or_else(|| CalcError::Grid(format!("harmonic {h:?} exceeds table degree {}", grid.lmax)))?;
            c[i] += v;
        }
        Ok(c)
    }

    /// Synthesize on the grid, apply, and project back onto every harmonic.
    pub fn apply(&self, f: &HarmonicExpansion) -> Result<HarmonicExpansion> {
        let grid = &self.sphere.grid;
        let out = grid.analyze(&self.sphere.apply_values(&grid.synthesize(&self.coeffs(f)?)));
        Ok(HarmonicExpansion { terms: grid.basis.iter().copied().zip(out).collect() })
    }

    /// `max_b |out_b − Λ_b f_b| / max_b |Λ_b f_b|`.
    pub fn cross_talk(&self, f: &HarmonicExpansion, out: &HarmonicExpansion) -> f64 {
        let lam = self.table.lambdas();
        let expected: Vec<Complex64> = self.sphere.grid.basis.iter().map(|h| f.get(h) * lam[h.degree()]).collect();
        let scale = expected.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let err = self.sphere.grid.basis.iter().zip(&expected).map(|(h, e)| (out.get(h) - e).norm()).fold(0.0, f64::max);
        if scale > 0.0 { err / scale } else { err }
    }

    /// Matrix of the map on the real parts (or imaginary parts) of the
    /// given harmonics, normalized in `L²`.
    pub fn real_matrix(&self, basis: &[HarmonicIndex]) -> Result<Vec<Vec<f64>>> {
        let grid = &self.sphere.grid;
        let real_coeffs = |h: &HarmonicIndex| -> Result<Vec<Complex64>> {
            let (i, j) = (self.index(h)?, self.index(&h.conj())?);
            let mut c = vec![Complex64::new(0.0, 0.0); grid.basis.len()];
            if (h.p, h.q) >= (-h.p, -h.q) {
                c[i] += 0.5;
                c[j] += 0.5;
            } else {
                c[i] += Complex64::new(0.0, -0.5);
                c[j] += Complex64::new(0.0, 0.5);
            }
            Ok(c)
        };
        let ins: Vec<Vec<Complex64>> = basis.iter().map(real_coeffs).collect::<Result<_>>()?;
        let outs: Vec<Vec<Complex64>> =
            ins.par_iter().map(|c| grid.analyze(&self.sphere.apply_values(&grid.synthesize(c)))).collect();
        let inner = |a: &[Complex64], b: &[Complex64]| -> f64 {
            a.iter().zip(b).zip(&grid.norm2).map(|((x, y), w)| (x.conj() * y).re * w).sum()
        };
        let norms: Vec<f64> = ins.iter().map(|c| inner(c, c).sqrt()).collect();
        Ok(ins
            .iter()
            .enumerate()
            .map(|(i, a)| outs.iter().enumerate().map(|(j, b)| inner(a, b) / (norms[i] * norms[j])).collect())
            .collect())
    }

    fn index(&self, h: &HarmonicIndex) -> Result<usize> {
        self.sphere.grid.index_of(h).ok_or_else(|| CalcError::Grid(format!("harmonic {h:?} exceeds table degree")))
    }
}

/// `max|A − Aᵀ| / max|A|` and `max_{i≠j}|A_ij| / max|A|`.
pub fn matrix_defects(a: &[Vec<f64>]) -> (f64, f64) {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut asym, mut off) = (0.0f64, 0.0f64);
    for i in 0..a.len() {
        for j in 0..a.len() {
            asym = asym.max((a[i][j] - a[j][i]).abs());
            if i != j {
                off = off.max(a[i][j].abs());
            }
        }
    }
    (asym / scale, off / scale)
}

/// Every harmonic of degree `≤ full` plus `per_degree` random ones in each
/// higher degree up to `lmax`, with non-negative `(p, q)` ordering
/// representatives so that real parts are distinct.
pub fn truncated_basis(lmax: usize, full: usize, per_degree: usize, seed: u64) -> Vec<HarmonicIndex> {
    let grid_basis = S3Grid::new(lmax).basis;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    for l in 0..=lmax {
        let mut deg: Vec<HarmonicIndex> = grid_basis.iter().copied().filter(|h| h.degree() == l).collect();
        if l > full {
            deg.shuffle(&mut rng);
            deg.truncate(per_degree);
        }
        out.extend(deg);
    }
    out
}

/// Experimental boundary map for order `k ∈ {2, 4}`: the scalar DtN map at
/// the parameter paired with `m_j`.
#[derive(Debug)]
pub struct GjmsDtnProbe {
    pub k: usize,
    pub m_j: usize,
    pub map: ScatteringMap,
}

pub fn gjms_dtn_probe(k: usize, m_j: usize, lmax: usize, cfg: &RadialConfig) -> Result<GjmsDtnProbe> {
    if k != 2 && k != 4 {
        return Err(CalcError::Unsupported(format!("boundary probe realized for k ∈ {{2, 4}}, got {k}")));
    }
    let s = scattering_parameter(k, 3, m_j)?;
    Ok(GjmsDtnProbe { k, m_j, map: ScatteringMap::new(dtn_table(3, s, lmax, cfg)?)? })
}

impl GjmsDtnProbe {
    pub fn apply(&self, f: &HarmonicExpansion) -> Result<HarmonicExpansion> {
        self.map.apply(f)
    }
}

/// `u(t(|y|)) · H(y)/|y|^l` on the Poincaré ball, `t = log((1+r)/(1−r))`
/// the hyperbolic distance from the centre. `harmonic` must be a
/// homogeneous harmonic polynomial of degree `sol.l` in `n + 1` variables.
/// Defined for `t` in `[eps, t_max]` of the solution; NaN outside.
pub fn mode_field(sol: Arc<RadialSolution>, harmonic: ScalarJetField) -> Result<ScalarJetField> {
    let d = sol.n + 1;
    if harmonic.dim() != d {
        return Err(CalcError::Argument(format!("harmonic has dimension {}, ball needs {d}", harmonic.dim())));
    }
    let l = sol.l as f64;
    Ok(ScalarJetField::new(d, format!("mode(s={}, l={})", sol.s, sol.l), move |y| {
        let r2 = y.iter().skip(1).fold(&y[0] * &y[0], |a, v| &a + &(v * v));
        let r = r2.sqrt();
        let t = r.add_scalar(1.0).div(&(-&r).add_scalar(1.0)).ln();
        let prof = sol.profile_jet(&t).unwrap_or_else(|_| t.lift(f64::NAN));
        let h = harmonic.eval(y);
        &prof * &h.div(&r.powf(l))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::FieldFactorSystem;
    use crate::fields_charts::metric::MetricModel;
    use rand::Rng;

    #[test]
    fn parameters() {
        assert_eq!(k2_parameter(3), 2.0);
        assert_eq!(scattering_parameter(4, 3, 0).unwrap(), 3.0);
        assert_eq!(scattering_parameter(4, 3, 1).unwrap(), 2.0);
        assert!(scattering_parameter(4, 3, 2).is_err());
        assert!(matches!(gjms_dtn_probe(6, 0, 2, &RadialConfig::default()), Err(CalcError::Unsupported(_))));
    }

    #[test]
    fn k2_map_is_diagonal_symmetric_and_linear() {
        let cfg = RadialConfig::default();
        let map = ScatteringMap::k2(8, &cfg).unwrap();
        let lam = map.table.lambdas();
        let y0 = HarmonicIndex { p: 0, q: 0, j: 0 };
        let out = map.apply(&HarmonicExpansion::single(y0, 1.0)).unwrap();
        assert!((out.get(&y0).re - lam[0]).abs() < 1e-12);
        let y1 = HarmonicIndex { p: 1, q: 0, j: 0 };
        let y3 = HarmonicIndex { p: -1, q: 0, j: 1 };
        let f = HarmonicExpansion::single(y1, 0.7).add(&HarmonicExpansion::single(y3, -1.3));
        let out = map.apply(&f).unwrap();
        assert!(map.cross_talk(&f, &out) < 1e-12);
        assert!((out.get(&y3).re - (-1.3 * lam[3])).abs() < 1e-10);
        let z = map.apply(&HarmonicExpansion::default()).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let a = map.real_matrix(&truncated_basis(8, 3, 3, 1)).unwrap();
        let (asym, off) = matrix_defects(&a);
        assert!(asym < 1e-12 && off < 1e-12, "{asym} {off}");
        // the k=2 probe is the same map
        let p = gjms_dtn_probe(2, 0, 8, &cfg).unwrap();
        let q = p.apply(&f).unwrap();
        let d = map.sphere.grid.basis.iter().map(|h| (q.get(h) - out.get(h)).norm()).fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn k4_probe_is_stable_and_linear() {
        let cfg = RadialConfig::default();
        let y0 = HarmonicExpansion::single(HarmonicIndex { p: 0, q: 0, j: 0 }, 1.0);
        for m_j in 0..2 {
            let a = gjms_dtn_probe(4, m_j, 4, &cfg).unwrap();
            let b = gjms_dtn_probe(4, m_j, 4, &cfg.refined()).unwrap();
            let (va, vb) = (a.apply(&y0).unwrap(), b.apply(&y0).unwrap());
            let h = HarmonicIndex { p: 0, q: 0, j: 0 };
            assert!(va.get(&h).re.is_finite());
            assert!((va.get(&h) - vb.get(&h)).norm() <= 1e-5 * va.get(&h).norm().max(1.0));
            let g = HarmonicExpansion::single(HarmonicIndex { p: 1, q: -1, j: 0 }, 2.0);
            let lhs = a.apply(&y0.scale(3.0).add(&g)).unwrap();
            let rhs = a.apply(&y0).unwrap().scale(3.0).add(&a.apply(&g).unwrap());
            let d = a.map.sphere.grid.basis.iter().map(|h| (lhs.get(h) - rhs.get(h)).norm()).fold(0.0, f64::max);
            assert!(d < 1e-10);
        }
    }

    /// Two-component null space of `Δ(Δ − 2)` on `H⁴` from radial modes.
    #[test]
    fn radial_modes_split_under_the_field_decomposition() {
        let cfg = RadialConfig::default();
        let u1 = Arc::new(radial_solve(3.0, 0, 3, &cfg).unwrap());
        let u2 = Arc::new(radial_solve(2.0, 1, 3, &cfg).unwrap());
        let f1 = mode_field(u1, ScalarJetField::constant(4, 1.0)).unwrap();
        let f2 = mode_field(u2, ScalarJetField::coordinate(4, 1)).unwrap();
        let mut rng = rng_from_seed(11);
        let (a, b): (f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(-2.0..-0.5));
        let u = f1.scale(a).add(&f2.scale(b));
        let sys = FieldFactorSystem::new(MetricModel::hyperbolic_ball(4).unwrap(), vec![0.0, 2.0]).unwrap();
        for _ in 0..5 {
            let dir: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = rng.random_range(0.3..0.7);
            let p: Vec<f64> = dir.iter().map(|v| v * r / n).collect();
            let proj = sys.project(&u, &p, 1e-8).unwrap();
            assert!(proj.in_null_space, "{}", proj.null_residual);
            assert!((proj.components[0] - a * f1.value(&p)).abs() < 1e-6 * a.abs());
            assert!((proj.components[1] - b * f2.value(&p)).abs() < 1e-6 * b.abs());
        }
    }
}
