//! Wasserstein geometry of discrete matrix measures.
//!
//! For `0 < p ≤ 1` the distance is
//! `W_p(μ, ν) = min_π ∬ ‖g - g'‖^p dπ` with no outer `1/p` root, so that
//! `W_p` is itself a metric (the cost `d^p` is one). The optimum is found
//! exactly with a transportation simplex. Sampler-backed measures have to be
//! discretised first (see [`crate::MatrixSampler::discretize`]).

mod holder;
mod simplex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::SquareMatrix;
use crate::measures::DiscreteMatrixMeasure;

pub use holder::{holder_modulus_check_i, holder_modulus_check_ii, pairwise_holder_constant, truncate_observable, HolderReport};
pub use simplex::solve as solve_transport;

const OPTIMALITY_TOL: f64 = 1e-11;

/// Norm used in the ground cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum CostNorm {
    #[default]
    Spectral,
    Frobenius,
}

impl CostNorm {
    pub fn distance(self, a: &SquareMatrix, b: &SquareMatrix) -> f64 {
        let d = a.sub(b);
        match self {
            CostNorm::Spectral => d.operator_norm(),
            CostNorm::Frobenius => d.frobenius_norm(),
        }
    }
}

/// Transport plan between the atoms of two measures, stored sparsely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    /// `(i, j, mass)` with positive mass, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for &(i, _, x) in &self.entries {
            s[i] += x;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for &(_, j, x) in &self.entries {
            s[j] += x;
        }
        s
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for &(i, j, x) in &self.entries {
            d[i * self.cols + j] += x;
        }
        d
    }
}

/// Cost matrix `‖gᵢ - g'ⱼ‖^p`, row-major.
pub fn cost_matrix(mu: &DiscreteMatrixMeasure, nu: &DiscreteMatrixMeasure, p: f64, norm: CostNorm) -> Vec<f64> {
    use rayon::prelude::*;
    let l = nu.len();
    (0..mu.len() * l)
        .into_par_iter()
        .map(|c| norm.distance(&mu.atoms()[c / l], &nu.atoms()[c % l]).powf(p))
        .collect()
}

/// `W_p(μ, ν)` with the spectral-norm cost, and an optimal coupling.
pub fn wasserstein_p(mu: &DiscreteMatrixMeasure, nu: &DiscreteMatrixMeasure, p: f64) -> Result<(f64, Coupling)> {
    wasserstein_with(mu, nu, p, CostNorm::Spectral)
}

pub fn wasserstein_with(
    mu: &DiscreteMatrixMeasure,
    nu: &DiscreteMatrixMeasure,
    p: f64,
    norm: CostNorm,
) -> Result<(f64, Coupling)> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1], got {p}")));
    }
    let cost = cost_matrix(mu, nu, p, norm);
    let (value, cells) = simplex::solve(mu.weights(), nu.weights(), &cost, OPTIMALITY_TOL)?;
    let mut entries: Vec<(usize, usize, f64)> = cells.into_iter().filter(|c| c.2 > 0.0).collect();
    entries.sort_by_key(|c| (c.0, c.1));
    Ok((value.max(0.0), Coupling { rows: mu.len(), cols: nu.len(), entries }))
}

/// `μ̄ = μ(· ∩ Bᶜ)/(1 - μ(B))`.
pub fn restrict_normalize(
    mu: &DiscreteMatrixMeasure,
    in_set: impl FnMut(&SquareMatrix) -> bool,
) -> Result<DiscreteMatrixMeasure> {
    mu.restrict_normalize(in_set)
}

/// Exact `W_p(μ, μ̄)` next to the bound `2 √μ(B) Θ̄_{2p}(μ)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictionCheck {
    pub mass: f64,
    pub distance: f64,
    pub bound: f64,
}

pub fn restriction_check(
    mu: &DiscreteMatrixMeasure,
    p: f64,
    mut in_set: impl FnMut(&SquareMatrix) -> bool,
) -> Result<RestrictionCheck> {
    let flags: Vec<bool> = mu.atoms().iter().map(&mut in_set).collect();
    let mass: f64 = mu.weights().iter().zip(&flags).filter(|(_, f)| **f).map(|(w, _)| w).sum();
    let mut idx = 0;
    let bar = mu.restrict_normalize(|_| {
        idx += 1;
        flags[idx - 1]
    })?;
    let (distance, _) = wasserstein_p(mu, &bar, p)?;
    let bound = 2.0 * mass.sqrt() * crate::measures::theta_bar(mu, 2.0 * p).sqrt();
    Ok(RestrictionCheck { mass, distance, bound })
}
