use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CalcError, Result};
use crate::fields_charts::field::ScalarJetField;

/// Margin kept between sampled points and the edge of a chart.
pub const SAMPLE_MARGIN: f64 = 0.05;

/// Region of `R^d` on which a chart's metric families are regular.
#[derive(Clone)]
pub enum ChartDomain {
    /// All of `R^d`; samples are drawn from the ball of radius `sample_radius`.
    Whole { sample_radius: f64 },
    /// Open ball `|y| < radius`.
    Ball { radius: f64 },
    /// `{ f > 0 }` for a smooth function `f`.
    Positive(ScalarJetField),
}

#[derive(Clone)]
pub struct Chart {
    pub dim: usize,
    pub coord_names: Vec<String>,
    pub domain: ChartDomain,
    pub description: String,
    /// Set when `d = 3`, where statements assuming `d ≥ 4` may not apply.
    pub low_dimension_warning: bool,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart(d={}, {})", self.dim, self.description)
    }
}

impl Chart {
    pub fn new(dim: usize, domain: ChartDomain, description: impl Into<String>) -> Result<Self> {
        if dim < 3 {
            return Err(CalcError::Argument(format!("dimension must be at least 3, got {dim}")));
        }
        Ok(Self::unchecked(dim, domain, description))
    }

    /// Chart without the `d ≥ 3` guard; used for intrinsic hypersurface charts.
    pub fn unchecked(dim: usize, domain: ChartDomain, description: impl Into<String>) -> Self {
        Chart {
            dim,
            coord_names: (0..dim).map(|i| format!("y{i}")).collect(),
            domain,
            description: description.into(),
            low_dimension_warning: dim == 3,
        }
    }

    pub fn is_valid(&self, p: &[f64]) -> bool {
        if p.len() != self.dim || p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match &self.domain {
            ChartDomain::Whole { .. } => true,
            ChartDomain::Ball { radius } => norm(p) < *radius,
            ChartDomain::Positive(f) => f.value(p) > 0.0,
        }
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if self.is_valid(p) {
            Ok(())
        } else {
            Err(CalcError::Domain(format!("{:?} is not in chart {}", p, self.description)))
        }
    }

    /// Deterministic interior samples kept `SAMPLE_MARGIN` away from the edge.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        match &self.domain {
            ChartDomain::Whole { sample_radius } => {
                while out.len() < count {
                    out.push(uniform_in_ball(&mut rng, self.dim, sample_radius - SAMPLE_MARGIN));
                }
            }
            ChartDomain::Ball { radius } => {
                while out.len() < count {
                    out.push(uniform_in_ball(&mut rng, self.dim, radius - SAMPLE_MARGIN));
                }
            }
            ChartDomain::Positive(f) => {
                let mut tries = 0usize;
                while out.len() < count && tries < 1_000_000 {
                    tries += 1;
                    let p = uniform_in_ball(&mut rng, self.dim, 3.0);
                    let v = f.value(&p);
                    if v <= 0.0 {
                        continue;
                    }
                    let g = norm(&f.gradient(&p));
                    if g == 0.0 || v / g > SAMPLE_MARGIN {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

pub fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn uniform_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = norm(&p);
        if r < 1.0 {
            return p.into_iter().map(|x| x * radius).collect();
        }
    }
}

/// Deterministic generator shared by tests and the CLI.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_reproducible_and_inside() {
        let c = Chart::new(4, ChartDomain::Ball { radius: 1.0 }, "ball").unwrap();
        let a = c.sample(7, 50);
        let b = c.sample(7, 50);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| norm(p) <= 0.95 + 1e-15));
        assert!(!c.is_valid(&[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn dimension_two_rejected_three_flagged() {
        assert!(Chart::new(2, ChartDomain::Whole { sample_radius: 1.0 }, "x").is_err());
        let c = Chart::new(3, ChartDomain::Whole { sample_radius: 1.0 }, "x").unwrap();
        assert!(c.low_dimension_warning);
    }
}
