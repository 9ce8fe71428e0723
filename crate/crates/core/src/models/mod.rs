//! Schrödinger, mixed-coupling and Jacobi cocycle families, and negative
//! moments of potential distributions.

mod frostman;
mod jacobi;
mod mixed;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{lyapunov_spectrum, SpectrumSettings};
use crate::matcore::SquareMatrix;
use crate::measures::{invariant_subspace_scan, DiscreteMatrixMeasure, MatrixSampler, Source};
use crate::rng::{stream_rng, StreamRng};
use crate::stats::Estimate;

pub use frostman::{frostman_moment, frostman_integral, FrostmanReport};
pub use jacobi::{
    example3_asymptotics, jacobi_matrix, jacobi_measure, jacobi_moment_sup, symmetric_measure, symplectic_residual, Example3Report, Example3Row,
};
pub use mixed::{
    example2_asymptotics, explicit_l1_tilde0, g0, induced_measure_series, mixed_measure, default_truncation, Example2Report, Example2Row,
    Example2Settings, InducedSeries, MixedModelParams, SeriesValue,
};

/// Law of a scalar potential value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarDist {
    /// Uniform on `[lo, hi]`.
    Uniform(f64, f64),
    /// Finitely many values `(t, weight)`.
    Atoms(Vec<(f64, f64)>),
    /// Normal with `(mean, sd)`.
    Gaussian(f64, f64),
}

/// How a continuous law was turned into finitely many points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Realization {
    Exact,
    Quadrature { nodes: usize },
    Samples { count: usize, seed: u64 },
    Continuous,
}

/// Cap on midpoint nodes for a uniform law.
pub const MAX_QUADRATURE_NODES: usize = 512;

impl ScalarDist {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarDist::Uniform(lo, hi) if !(lo < hi) || !lo.is_finite() || !hi.is_finite() => {
                Err(Error::invalid(format!("uniform needs finite lo < hi, got [{lo}, {hi}]")))
            }
            ScalarDist::Atoms(a) if a.is_empty() => Err(Error::invalid("atoms list is empty")),
            ScalarDist::Atoms(a) => {
                if a.iter().any(|&(t, w)| !t.is_finite() || !(w >= 0.0)) {
                    return Err(Error::invalid("atom values must be finite with weights >= 0"));
                }
                let s: f64 = a.iter().map(|p| p.1).sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!("atom weights sum to {s}, expected 1")));
                }
                Ok(())
            }
            ScalarDist::Gaussian(m, sd) if !m.is_finite() || !(*sd > 0.0) || !sd.is_finite() => {
                Err(Error::invalid(format!("gaussian needs a finite mean and sd > 0, got ({m}, {sd})")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarDist::Uniform(lo, hi) => rng.random_range(*lo..*hi),
            ScalarDist::Atoms(a) => {
                if a.len() == 1 {
                    return a[0].0;
                }
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(t, w) in a {
                    acc += w;
                    if u < acc {
                        return t;
                    }
                }
                a[a.len() - 1].0
            }
            ScalarDist::Gaussian(m, sd) => Normal::new(*m, *sd).expect("validated").sample(rng),
        }
    }

    /// Finite version: atoms as given, midpoint nodes for a uniform law (at
    /// most [`MAX_QUADRATURE_NODES`]), equal-weight samples otherwise.
    pub fn realize(&self, count: usize, seed: u64) -> Result<(Vec<(f64, f64)>, Realization)> {
        self.validate()?;
        match self {
            ScalarDist::Atoms(a) => Ok((a.clone(), Realization::Exact)),
            ScalarDist::Uniform(lo, hi) => {
                let k = count.clamp(1, MAX_QUADRATURE_NODES);
                let h = (hi - lo) / k as f64;
                Ok(((0..k).map(|i| (lo + (i as f64 + 0.5) * h, 1.0 / k as f64)).collect(), Realization::Quadrature { nodes: k }))
            }
            ScalarDist::Gaussian(..) => {
                let k = count.max(1);
                let mut rng = stream_rng(seed, 0);
                Ok(((0..k).map(|_| (self.sample(&mut rng), 1.0 / k as f64)).collect(), Realization::Samples { count: k, seed }))
            }
        }
    }

    /// Closed interval containing the support (mean ± 6 sd for a normal law).
    pub fn hull(&self) -> (f64, f64) {
        match self {
            ScalarDist::Uniform(lo, hi) => (*lo, *hi),
            ScalarDist::Atoms(a) => a.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0))),
            ScalarDist::Gaussian(m, sd) => (m - 6.0 * sd, m + 6.0 * sd),
        }
    }
}

/// `[[t - E, -1], [1, 0]]`.
pub fn schrodinger_matrix(t: f64, e: f64) -> SquareMatrix {
    SquareMatrix::from_rows(&[vec![t - e, -1.0], vec![1.0, 0.0]]).expect("2x2")
}

/// Law of `schrodinger_matrix(t, E)` for `t ~ dist`. With `discretize` the
/// law is realised on finitely many points (see [`ScalarDist::realize`]);
/// otherwise only atom laws become discrete measures.
pub fn schrodinger_measure(dist: &ScalarDist, e: f64, discretize: Option<usize>, seed: u64) -> Result<(Source, Realization)> {
    dist.validate()?;
    match (dist, discretize) {
        (ScalarDist::Atoms(_), _) | (_, Some(_)) => {
            let (pts, how) = dist.realize(discretize.unwrap_or(0), seed)?;
            let atoms = pts.iter().map(|&(t, _)| schrodinger_matrix(t, e)).collect();
            let weights = pts.iter().map(|p| p.1).collect();
            Ok((Source::Discrete(DiscreteMatrixMeasure::from_unnormalized(atoms, weights)?), how))
        }
        _ => {
            let d = dist.clone();
            let s = MatrixSampler::new(2, seed, "schrodinger", move |rng: &mut StreamRng| schrodinger_matrix(d.sample(rng), e));
            Ok((Source::Sampler(s), Realization::Continuous))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example1Row {
    pub energy: f64,
    pub l1: f64,
    pub stderr: f64,
    /// No proper subspace is invariant under every atom (only meaningful for
    /// discrete realisations; `None` for continuous laws).
    pub irreducible: Option<bool>,
}

/// Top exponent of the Schrödinger cocycle across an energy grid, with an
/// invariant-subspace scan of each discrete realisation.
pub fn example1_scan(dist: &ScalarDist, energies: &[f64], discretize: Option<usize>, set: &SpectrumSettings) -> Result<Vec<Example1Row>> {
    energies
        .iter()
        .map(|&e| {
            let (src, _) = schrodinger_measure(dist, e, discretize, set.seed)?;
            let rep = lyapunov_spectrum(&src, &SpectrumSettings { rank: 1, ..*set })?;
            let irreducible = src.as_discrete().map(|mu| {
                let scan = invariant_subspace_scan(mu);
                !scan.all_invariant && scan.subspaces.is_empty()
            });
            let Estimate { value, stderr } = rep.top();
            Ok(Example1Row { energy: e, l1: value, stderr, irreducible })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schrodinger_examples() {
        assert_eq!(schrodinger_matrix(0.0, 0.0).to_rows(), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert_eq!(schrodinger_matrix(3.0, 1.0).to_rows(), vec![vec![2.0, -1.0], vec![1.0, 0.0]]);
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            let g = schrodinger_matrix(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            assert_eq!(g.det(), 1.0);
        }
    }

    #[test]
    fn dist_json_forms() {
        let u: ScalarDist = serde_json::from_str(r#"{"uniform":[0,1]}"#).unwrap();
        assert_eq!(u, ScalarDist::Uniform(0.0, 1.0));
        let a: ScalarDist = serde_json::from_str(r#"{"atoms":[[0,0.5],[2,0.5]]}"#).unwrap();
        assert_eq!(a, ScalarDist::Atoms(vec![(0.0, 0.5), (2.0, 0.5)]));
        let g: ScalarDist = serde_json::from_str(r#"{"gaussian":[1,2]}"#).unwrap();
        assert_eq!(g, ScalarDist::Gaussian(1.0, 2.0));
        assert!(ScalarDist::Uniform(1.0, 1.0).validate().is_err());
        assert!(ScalarDist::Atoms(vec![(0.0, 0.4)]).validate().is_err());
    }

    #[test]
    fn realizations() {
        let (pts, how) = ScalarDist::Uniform(0.0, 1.0).realize(4, 0).unwrap();
        assert_eq!(how, Realization::Quadrature { nodes: 4 });
        assert_eq!(pts.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0.125, 0.375, 0.625, 0.875]);
        let (pts, _) = ScalarDist::Uniform(0.0, 1.0).realize(10_000, 0).unwrap();
        assert_eq!(pts.len(), MAX_QUADRATURE_NODES);
    }

    #[test]
    fn two_potentials_are_irreducible() {
        let d = ScalarDist::Atoms(vec![(0.0, 0.5), (2.0, 0.5)]);
        let rows = example1_scan(&d, &[0.5], None, &SpectrumSettings::new(2000, 20, 1, 1)).unwrap();
        assert_eq!(rows[0].irreducible, Some(true));
        assert!(rows[0].l1 > 0.0);
    }
}
