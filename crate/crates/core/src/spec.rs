//! JSON measure specifications.
//!
//! ```
//! use cocycle_lab::spec::{BuildOptions, MeasureSpec};
//! use cocycle_lab::MatrixSource;
//!
//! let spec: MeasureSpec = serde_json::from_str(
//!     r#"{"type":"schrodinger","E":0.5,"dist":{"atoms":[[0,0.5],[2,0.5]]}}"#,
//! ).unwrap();
//! let (src, _) = spec.build(&BuildOptions::default()).unwrap();
//! assert_eq!(src.dim(), 2);
//! assert_eq!(src.as_discrete().unwrap().len(), 2);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::SquareMatrix;
use crate::measures::{DiscreteMatrixMeasure, Source};
use crate::models::{jacobi_measure, mixed_measure, schrodinger_measure, symmetric_measure, MixedModelParams, Realization, ScalarDist};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub matrix: Vec<Vec<f64>>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureSpec {
    Atoms {
        atoms: Vec<AtomSpec>,
    },
    Schrodinger {
        #[serde(rename = "E")]
        e: f64,
        dist: ScalarDist,
    },
    Mixed {
        #[serde(rename = "E")]
        e: f64,
        a: f64,
        q: f64,
        /// Impurity coupling `1/λ`; `0` gives the limiting law.
        beta: f64,
        dist: ScalarDist,
    },
    Jacobi {
        #[serde(rename = "E")]
        e: f64,
        lambda: f64,
        m: usize,
        dist: ScalarDist,
    },
}

/// How continuous potentials are made finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuildOptions {
    /// Node or sample count for continuous laws; `None` keeps a sampler
    /// where one exists.
    pub discretize: Option<usize>,
    /// Sample count for Jacobi potentials drawn from a continuous law.
    pub jacobi_samples: usize,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { discretize: None, jacobi_samples: 256, seed: 0 }
    }
}

impl MeasureSpec {
    /// Mixed-model parameters with `λ = 1/β`.
    pub fn mixed_params(&self) -> Option<MixedModelParams> {
        match self {
            MeasureSpec::Mixed { e, a, q, beta, dist } => Some(MixedModelParams {
                a: *a,
                e: *e,
                q: *q,
                lambda: if *beta == 0.0 { f64::INFINITY } else { 1.0 / beta },
                dist: dist.clone(),
            }),
            _ => None,
        }
    }

    /// Precondition checks that need no computation. Returns violations.
    pub fn check(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut push = |r: Result<()>| {
            if let Err(e) = r {
                v.push(e.to_string());
            }
        };
        match self {
            MeasureSpec::Atoms { atoms } => {
                if atoms.is_empty() {
                    push(Err(Error::invalid("atoms list is empty")));
                }
                let m = atoms.first().map_or(0, |a| a.matrix.len());
                for (i, a) in atoms.iter().enumerate() {
                    if a.matrix.len() != m || a.matrix.iter().any(|r| r.len() != m) || m == 0 {
                        push(Err(Error::invalid(format!("atom {i} is not a {m} x {m} matrix"))));
                    }
                    if !(a.weight > 0.0) || !a.weight.is_finite() {
                        push(Err(Error::invalid(format!("atom {i} has weight {}", a.weight))));
                    }
                }
                let s: f64 = atoms.iter().map(|a| a.weight).sum();
                if !atoms.is_empty() && (s - 1.0).abs() > 1e-9 {
                    push(Err(Error::invalid(format!("atom weights sum to {s}, expected 1"))));
                }
            }
            MeasureSpec::Schrodinger { e, dist } => {
                push(dist.validate());
                if !e.is_finite() {
                    push(Err(Error::invalid("E must be finite")));
                }
            }
            MeasureSpec::Mixed { beta, .. } => {
                if !(0.0..=1.0).contains(beta) {
                    push(Err(Error::invalid(format!("beta must lie in [0, 1], got {beta}"))));
                } else {
                    push(self.mixed_params().expect("mixed").validate());
                }
            }
            MeasureSpec::Jacobi { e, lambda, m, dist } => {
                push(dist.validate());
                if *m == 0 {
                    push(Err(Error::invalid("m must be positive")));
                }
                if !(*lambda > 0.0) || !lambda.is_finite() {
                    push(Err(Error::invalid(format!("lambda must be positive, got {lambda}"))));
                }
                if !e.is_finite() {
                    push(Err(Error::invalid("E must be finite")));
                }
            }
        }
        v
    }

    pub fn build(&self, opts: &BuildOptions) -> Result<(Source, Realization)> {
        if let Some(msg) = self.check().into_iter().next() {
            return Err(Error::InvalidArgument(msg));
        }
        match self {
            MeasureSpec::Atoms { atoms } => {
                let mats = atoms.iter().map(|a| SquareMatrix::from_rows(&a.matrix)).collect::<Result<Vec<_>>>()?;
                let w = atoms.iter().map(|a| a.weight).collect();
                Ok((Source::Discrete(DiscreteMatrixMeasure::new(mats, w)?), Realization::Exact))
            }
            MeasureSpec::Schrodinger { e, dist } => schrodinger_measure(dist, *e, opts.discretize, opts.seed),
            MeasureSpec::Mixed { .. } => mixed_measure(&self.mixed_params().expect("mixed"), opts.discretize, opts.seed),
            MeasureSpec::Jacobi { e, lambda, m, dist } => {
                let (sym, how) = symmetric_measure(dist, *m, opts.discretize.unwrap_or(opts.jacobi_samples), opts.seed)?;
                Ok((Source::Discrete(jacobi_measure(&sym, *e, *lambda)?), how))
            }
        }
    }

    /// As [`MeasureSpec::build`], but continuous laws are always realised on
    /// finitely many points (`count` nodes or samples).
    pub fn build_discrete(&self, count: usize, seed: u64) -> Result<(DiscreteMatrixMeasure, Realization)> {
        let opts = BuildOptions { discretize: Some(count), jacobi_samples: count, seed };
        match self.build(&opts)? {
            (Source::Discrete(mu), how) => Ok((mu, how)),
            (Source::Sampler(s), _) => Ok((s.discretize(count), Realization::Samples { count, seed })),
        }
    }
}

impl From<&DiscreteMatrixMeasure> for MeasureSpec {
    fn from(mu: &DiscreteMatrixMeasure) -> Self {
        MeasureSpec::Atoms {
            atoms: mu.iter().map(|(g, w)| AtomSpec { matrix: g.to_rows(), weight: w }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MatrixSource;

    fn parse(s: &str) -> serde_json::Result<MeasureSpec> {
        serde_json::from_str(s)
    }

    #[test]
    fn all_forms_parse() {
        let a = parse(r#"{"type":"atoms","atoms":[{"matrix":[[2,0],[0,1]],"weight":0.5},{"matrix":[[1,0],[0,2]],"weight":0.5}]}"#).unwrap();
        assert_eq!(a.build(&BuildOptions::default()).unwrap().0.dim(), 2);
        let m = parse(r#"{"type":"mixed","E":0,"a":1,"q":0.3,"beta":0.1,"dist":{"atoms":[[2.5,1]]}}"#).unwrap();
        assert_eq!(m.mixed_params().unwrap().lambda, 10.0);
        assert_eq!(m.build(&BuildOptions::default()).unwrap().0.as_discrete().unwrap().len(), 2);
        let j = parse(r#"{"type":"jacobi","E":0.3,"lambda":10,"m":2,"dist":{"atoms":[[-1,0.5],[1.5,0.5]]}}"#).unwrap();
        let (src, how) = j.build(&BuildOptions::default()).unwrap();
        assert_eq!((src.dim(), how), (4, Realization::Exact));
        let s = parse(r#"{"type":"schrodinger","E":0,"dist":{"uniform":[-1,1]}}"#).unwrap();
        assert!(s.build(&BuildOptions::default()).unwrap().0.as_discrete().is_none());
        assert_eq!(s.build_discrete(16, 0).unwrap().0.len(), 16);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(r#"{"type":"schrodinger","E":0,"dist":{"uniform":[0,1]},"extra":1}"#).is_err());
        assert!(parse(r#"{"type":"atoms","atoms":[{"matrix":[[1]],"weight":1,"w":2}]}"#).is_err());
        assert!(parse(r#"{"type":"schrodinger","E":0,"dist":{"beta":[0,1]}}"#).is_err());
        assert!(parse(r#"{"type":"cauchy"}"#).is_err());
    }

    #[test]
    fn violations_are_listed() {
        let m = parse(r#"{"type":"mixed","E":1,"a":1,"q":1,"beta":0.1,"dist":{"atoms":[[2.5,1]]}}"#).unwrap();
        assert!(!m.check().is_empty());
        let a = parse(r#"{"type":"atoms","atoms":[{"matrix":[[1,0]],"weight":0.5}]}"#).unwrap();
        assert_eq!(a.check().len(), 2);
        assert!(a.build(&BuildOptions::default()).is_err());
    }

    #[test]
    fn round_trip_from_measure() {
        let mu = DiscreteMatrixMeasure::uniform(vec![SquareMatrix::diag(&[3.0, 1.0]).unwrap(), SquareMatrix::identity(2)]).unwrap();
        let spec = MeasureSpec::from(&mu);
        let back = spec.build_discrete(1, 0).unwrap().0;
        assert_eq!(back, mu);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(parse(&json).unwrap(), spec);
    }
}
