//! Covectors and tractors on the round `S³` bounding the flat unit ball,
//! the splitting `E`, and the twisted DtN map in a parallel tractor frame.
//!
//! Covector fields are given by their components in the left-invariant
//! frame. Intrinsic tractors use the round scale on `S³`; ambient tractors
//! use the flat scale of `R⁴`, restricted to the sphere, in which the unit
//! normal is `y` and the mean curvature is `−1`.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::sphere::{frame_poly, S3Grid, SphereMultiplier, SpherePoly};
use crate::error::{CalcError, Result};

pub type Covector = [SpherePoly; 3];

/// Intrinsic tractor `(σ, μ_i, ρ)` on `S³`, `μ` in frame components.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereTractor {
    pub sigma: SpherePoly,
    pub mu: Covector,
    pub rho: SpherePoly,
}

pub fn zero_covector() -> Covector {
    [SpherePoly::zero(), SpherePoly::zero(), SpherePoly::zero()]
}

pub fn divergence(phi: &Covector) -> SpherePoly {
    (0..3).fold(SpherePoly::zero(), |acc, i| acc.add(&phi[i].frame_derivative(i)))
}

/// `φ ↦ (0, φ, −div φ)`.
pub fn splitting_e(phi: &Covector) -> SphereTractor {
    SphereTractor { sigma: SpherePoly::zero(), mu: phi.clone(), rho: divergence(phi).scale(-1.0) }
}

/// The projection left inverse to `E`.
pub fn middle_slot(t: &SphereTractor) -> Covector {
    t.mu.clone()
}

/// `L²` transpose of `E` for the tractor pairing: `T ↦ μ + ∇σ`.
pub fn splitting_e_adjoint(t: &SphereTractor) -> Covector {
    let g = t.sigma.gradient();
    [0, 1, 2].map(|i| t.mu[i].add(&g[i]))
}

pub fn covector_dot(a: &Covector, b: &Covector) -> SpherePoly {
    (0..3).fold(SpherePoly::zero(), |acc, i| acc.add(&a[i].mul(&b[i])))
}

pub fn tractor_dot(a: &SphereTractor, b: &SphereTractor) -> SpherePoly {
    a.sigma.mul(&b.rho).add(&a.rho.mul(&b.sigma)).add(&covector_dot(&a.mu, &b.mu))
}

fn grid_for_degree(deg: usize) -> S3Grid {
    S3Grid::new(deg.div_ceil(2).max(1))
}

/// `∫_{S³} f`, exact for polynomials.
pub fn integrate(f: &SpherePoly) -> f64 {
    grid_for_degree(f.degree()).integrate(&grid_for_degree(f.degree()).sample(f)).re
}

/// `∫ a·b` for all pairs, sampled once on a shared grid.
pub fn pairing_matrix(left: &[Covector], right: &[Covector]) -> Vec<Vec<f64>> {
    let deg = |v: &[Covector]| v.iter().flat_map(|c| c.iter().map(|p| p.degree())).max().unwrap_or(0);
    let grid = grid_for_degree(deg(left) + deg(right));
    let sample = |c: &Covector| -> Vec<Vec<Complex64>> { c.iter().map(|p| grid.sample(p)).collect() };
    let ls: Vec<_> = left.iter().map(sample).collect();
    let rs: Vec<_> = right.iter().map(sample).collect();
    ls.iter()
        .map(|a| {
            rs.iter()
                .map(|b| {
                    let prod: Vec<Complex64> = (0..grid.nodes()).map(|k| (0..3).map(|i| a[i][k] * b[i][k]).sum()).collect();
                    grid.integrate(&prod).re
                })
                .collect()
        })
        .collect()
}

/// `L²` norm from sampled values, which avoids cancelling terms that vanish
/// on the sphere.
pub fn covector_norm(phi: &Covector) -> f64 {
    let grid = grid_for_degree(2 * phi.iter().map(|p| p.degree()).max().unwrap_or(0));
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.nodes()];
    for p in phi {
        for (a, v) in acc.iter_mut().zip(grid.sample(p)) {
            *a += v.norm_sqr();
        }
    }
    grid.integrate(&acc).re.max(0.0).sqrt()
}

/// Real polynomial in `x₁..x₄` of degree `≤ deg` with uniform coefficients.
pub fn random_real_poly(rng: &mut impl Rng, deg: usize) -> SpherePoly {
    let mut out = SpherePoly::zero();
    let x: Vec<SpherePoly> = (0..4).map(SpherePoly::coord).collect();
    fn rec(rng: &mut impl Rng, x: &[SpherePoly], start: usize, left: usize, cur: &SpherePoly, out: &mut SpherePoly) {
        *out = out.add(&cur.scale(rng.random_range(-1.0..1.0)));
        if left == 0 {
            return;
        }
        for a in start..4 {
            rec(rng, x, a, left - 1, &cur.mul(&x[a]), out);
        }
    }
    rec(rng, &x, 0, deg, &SpherePoly::constant(1.0), &mut out);
    out
}

pub fn random_covector(rng: &mut impl Rng, deg: usize) -> Covector {
    [0, 1, 2].map(|_| random_real_poly(rng, deg))
}

pub fn random_tractor(rng: &mut impl Rng, deg: usize) -> SphereTractor {
    SphereTractor { sigma: random_real_poly(rng, deg), mu: random_covector(rng, deg), rho: random_real_poly(rng, deg) }
}

/// Both sides of `∫h(Eφ, T) = ∫φ·E*T`.
pub fn adjointness_pair(phi: &Covector, t: &SphereTractor) -> (f64, f64) {
    (integrate(&tractor_dot(&splitting_e(phi), t)), integrate(&covector_dot(phi, &splitting_e_adjoint(t))))
}

/// Scalar DtN applied to each component of a tractor in the parallel frame.
#[derive(Debug)]
pub struct TwistedDtn {
    pub scalar: SphereMultiplier,
}

/// Output of [`TwistedDtn::apply`].
#[derive(Clone, Debug)]
pub struct TwistedOutput {
    pub value: SphereTractor,
    /// `max |h(P^T V, I)|` over the grid, `I` the parallel normal tractor.
    pub i_component: f64,
}

impl TwistedDtn {
    /// `n` is the boundary dimension; only `n = 3` is realized.
    pub fn new(n: usize, lambdas: Vec<f64>) -> Result<Self> {
        if n != 3 {
            return Err(CalcError::Unsupported(format!("tractor-twisted DtN needs boundary dimension 3, got {n}")));
        }
        Ok(TwistedDtn { scalar: SphereMultiplier::new(lambdas)? })
    }

    pub fn apply(&self, t: &SphereTractor) -> Result<TwistedOutput> {
        let x: Vec<SpherePoly> = (0..4).map(SpherePoly::coord).collect();
        let e: Vec<[SpherePoly; 4]> = (0..3).map(frame_poly).collect();
        let dot4 = |a: &[SpherePoly], b: &[SpherePoly]| (0..4).fold(SpherePoly::zero(), |acc, k| acc.add(&a[k].mul(&b[k])));

        // intrinsic to ambient
        let amb_mu: Vec<SpherePoly> =
            (0..4).map(|a| (0..3).fold(t.sigma.mul(&x[a]), |acc, i| acc.add(&t.mu[i].mul(&e[i][a])))).collect();
        let amb_rho = t.rho.sub(&t.sigma.scale(0.5));

        // parallel-frame coordinates
        let fa = amb_rho.clone();
        let fb: Vec<SpherePoly> = (0..4).map(|k| amb_mu[k].add(&amb_rho.mul(&x[k]))).collect();
        let fc = t.sigma.sub(&dot4(&amb_mu, &x)).sub(&amb_rho.scale(0.5));

        let la = self.scalar.apply_poly(&fa)?;
        let lb: Vec<SpherePoly> = fb.iter().map(|p| self.scalar.apply_poly(p)).collect::<Result<_>>()?;
        let lc = self.scalar.apply_poly(&fc)?;

        // back to the working scale
        let rho = la.clone();
        let mu: Vec<SpherePoly> = (0..4).map(|k| lb[k].sub(&la.mul(&x[k]))).collect();
        let sigma = la.scale(-0.5).add(&lc).add(&dot4(&lb, &x));

        let i_comp = sigma.sub(&dot4(&mu, &x));
        let grid = &self.scalar.grid;
        let i_component = grid.sample(&i_comp).iter().map(|v| v.norm()).fold(0.0, f64::max);

        let value = SphereTractor {
            mu: [0, 1, 2].map(|i| dot4(&mu, &e[i])),
            rho: rho.add(&sigma.scale(0.5)),
            sigma,
        };
        Ok(TwistedOutput { value, i_component })
    }

    /// `φ ↦ E*(P^T(Eφ))`.
    pub fn translated_operator(&self, phi: &Covector) -> Result<TranslatedOutput> {
        let out = self.apply(&splitting_e(phi))?;
        Ok(TranslatedOutput { value: splitting_e_adjoint(&out.value), i_component: out.i_component })
    }
}

#[derive(Clone, Debug)]
pub struct TranslatedOutput {
    pub value: Covector,
    pub i_component: f64,
}

/// Probe covector fields grouped by vector-harmonic type.
#[derive(Clone, Debug)]
pub struct Probe {
    pub kind: ProbeKind,
    pub label: String,
    pub field: Covector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProbeKind {
    Gradient,
    LeftInvariant,
    RightKilling,
    DivergenceFree,
    /// Unstructured probe; no eigen-relation expected.
    Random,
}

/// Gradients of real harmonics of degree `1..=max_grad`, left-invariant
/// coframe fields, right-invariant Killing fields and a few
/// divergence-free fields of degree 2.
pub fn vector_harmonic_probes(max_grad: usize) -> Vec<Probe> {
    let mut out = Vec::new();
    let grid = S3Grid::new(max_grad);
    for (h, y) in grid.basis.iter().zip(grid.basis_polys()) {
        if h.degree() == 0 {
            continue;
        }
        // one real function per harmonic: real part if (p,q) ≥ conj, else imaginary part
        let f = if (h.p, h.q) >= (-h.p, -h.q) { y.re() } else { y.im() };
        let f = f.prune(1e-14);
        if f.is_zero() {
            continue;
        }
        out.push(Probe { kind: ProbeKind::Gradient, label: format!("grad{h:?}"), field: f.gradient() });
    }
    for i in 0..3 {
        let mut c = zero_covector();
        c[i] = SpherePoly::constant(1.0);
        out.push(Probe { kind: ProbeKind::LeftInvariant, label: format!("theta{}", i + 1), field: c });
    }
    let x: Vec<SpherePoly> = (0..4).map(SpherePoly::coord).collect();
    let right: [[(usize, f64); 4]; 3] = [
        [(1, -1.0), (0, 1.0), (3, 1.0), (2, -1.0)],
        [(2, -1.0), (3, -1.0), (0, 1.0), (1, 1.0)],
        [(3, -1.0), (2, 1.0), (1, -1.0), (0, 1.0)],
    ];
    for (r, comps) in right.iter().enumerate() {
        let v: Vec<SpherePoly> = comps.iter().map(|(k, s)| x[*k].scale(*s)).collect();
        let field = [0, 1, 2].map(|i| {
            let e = frame_poly(i);
            (0..4).fold(SpherePoly::zero(), |acc, a| acc.add(&v[a].mul(&e[a])))
        });
        out.push(Probe { kind: ProbeKind::RightKilling, label: format!("killing{}", r + 1), field });
    }
    // e₁-invariant coefficients times θ¹
    let z = |k| SpherePoly::var(k);
    let w = z(0).mul(&z(3));
    for (label, f) in [("re(z1 zb2) theta1", w.re()), ("im(z1 zb2) theta1", w.im()), ("(|z1|^2-1/2) theta1", z(0).mul(&z(1)).sub(&SpherePoly::constant(0.5)))] {
        let mut c = zero_covector();
        c[0] = f;
        out.push(Probe { kind: ProbeKind::DivergenceFree, label: label.into(), field: c });
    }
    out
}

/// Action of the translated operator on one probe.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeAction {
    pub label: String,
    pub kind: ProbeKind,
    /// `‖𝒫φ‖ / ‖φ‖`.
    pub gain: f64,
    /// `⟨φ, 𝒫φ⟩ / ⟨φ, φ⟩`.
    pub rayleigh: f64,
    /// `‖𝒫φ − rayleigh·φ‖ / max(‖𝒫φ‖, ‖φ‖)`.
    pub eigen_defect: f64,
    pub i_component: f64,
}

/// Summary over a probe family.
#[derive(Clone, Debug, Serialize)]
pub struct TranslationReport {
    pub probes: Vec<ProbeAction>,
    /// `max|A − Aᵀ| / max|A|` for `A_ij = ∫φ_i·𝒫φ_j`.
    pub asymmetry: f64,
    pub max_gain: f64,
    pub max_i_component: f64,
}

pub fn translation_report(op: &TwistedDtn, probes: &[Probe]) -> Result<TranslationReport> {
    use rayon::prelude::*;
    let outs: Vec<TranslatedOutput> = probes.par_iter().map(|p| op.translated_operator(&p.field)).collect::<Result<_>>()?;
    let ins: Vec<Covector> = probes.iter().map(|p| p.field.clone()).collect();
    let images: Vec<Covector> = outs.iter().map(|o| o.value.clone()).collect();
    let a = pairing_matrix(&ins, &images);
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut asym: f64 = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            asym = asym.max((a[i][j] - a[j][i]).abs());
        }
    }
    let mut actions = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let nin = covector_norm(&p.field);
        let nout = covector_norm(&images[i]);
        let rq = a[i][i] / (nin * nin);
        let resid: Covector = [0, 1, 2].map(|k| images[i][k].sub(&p.field[k].scale(rq)));
        actions.push(ProbeAction {
            label: p.label.clone(),
            kind: p.kind,
            gain: nout / nin,
            rayleigh: rq,
            eigen_defect: covector_norm(&resid) / nout.max(nin),
            i_component: outs[i].i_component,
        });
    }
    Ok(TranslationReport {
        max_gain: actions.iter().map(|a| a.gain).fold(0.0, f64::max),
        max_i_component: actions.iter().map(|a| a.i_component).fold(0.0, f64::max),
        probes: actions,
        asymmetry: if scale > 0.0 { asym / scale } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields_charts::chart::rng_from_seed;

    /// `Λ_l = l + 1` is a stand-in positive multiplier with the same shape.
    fn toy_op() -> TwistedDtn {
        TwistedDtn::new(3, (0..=6).map(|l| l as f64 + 1.0).collect()).unwrap()
    }

    #[test]
    fn splitting_is_a_section_of_the_middle_slot() {
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let phi = random_covector(&mut rng, 3);
            assert_eq!(middle_slot(&splitting_e(&phi)), phi);
        }
        let z = splitting_e(&zero_covector());
        assert!(z.sigma.is_zero() && z.rho.is_zero() && z.mu.iter().all(|m| m.is_zero()));
    }

    #[test]
    fn gradient_of_degree_one_harmonic() {
        let y = SpherePoly::coord(2);
        let t = splitting_e(&y.gradient());
        // −div ∇Y = ΔY = 3Y
        let diff = t.rho.sub(&y.scale(3.0)).prune(1e-13);
        assert!(diff.is_zero(), "{diff:?}");
    }

    #[test]
    fn adjoint_matches_quadrature() {
        let mut rng = rng_from_seed(6);
        for _ in 0..10 {
            let phi = random_covector(&mut rng, 3);
            let t = random_tractor(&mut rng, 3);
            let (l, r) = adjointness_pair(&phi, &t);
            assert!((l - r).abs() <= 1e-10 * (1.0 + l.abs()), "{l} {r}");
        }
    }

    #[test]
    fn twisted_map_stays_tangent_and_translation_is_symmetric() {
        let op = toy_op();
        let probes = vector_harmonic_probes(2);
        let rep = translation_report(&op, &probes).unwrap();
        assert!(rep.asymmetry < 1e-10, "{}", rep.asymmetry);
        assert!(rep.max_i_component < 1e-10, "{}", rep.max_i_component);
        assert!(rep.max_gain > 1e-3);
        for a in &rep.probes {
            if matches!(a.kind, ProbeKind::Gradient | ProbeKind::LeftInvariant | ProbeKind::RightKilling) {
                assert!(a.eigen_defect < 1e-9, "{a:?}");
            }
        }
        let z = op.translated_operator(&zero_covector()).unwrap();
        assert!(z.value.iter().all(|c| c.is_zero()));
    }

    #[test]
    fn other_dimensions_are_refused() {
        assert!(matches!(TwistedDtn::new(4, vec![1.0]), Err(CalcError::Unsupported(_))));
    }
}
