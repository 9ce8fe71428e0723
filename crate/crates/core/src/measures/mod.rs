//! Probability measures on `Mat_m(R)`.
//!
//! [`DiscreteMatrixMeasure`] holds finitely many weighted atoms and supports
//! exact convolution; [`MatrixSampler`] wraps a seeded generator for laws with
//! continuous support. Both implement [`MatrixSource`], the interface the
//! Monte Carlo estimators draw from.

mod invariant;
mod kappa;
mod moments;
mod search;
mod source;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::SquareMatrix;

pub use invariant::{invariant_subspace_scan, InvariantScan, Subspace};
pub use kappa::{kappa_alpha, KappaReport, PairSearch};
pub use moments::{
    bt_integral, bt_mass, bt_mass_mc, intermediate_moment_bound, mc_expectation, MomentBound, moment_report, theta_bar, theta_bar_mc,
    theta_under, theta_under_at, theta_under_k, theta_under_k_at, MomentReport,
};
pub(crate) use search::golden_max;
pub use search::{grassmann_max, sphere_max, GrassmannSearch, SearchResult, SphereSearch};
pub use source::{MatrixSampler, MatrixSource, Source};

const WEIGHT_TOL: f64 = 1e-9;

/// Finitely supported probability measure `Σ wᵢ δ_{gᵢ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMatrixMeasure {
    dim: usize,
    atoms: Vec<SquareMatrix>,
    weights: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl DiscreteMatrixMeasure {
    /// Weights must be positive and sum to one within `1e-9`; they are then
    /// rescaled to sum to one exactly (up to rounding).
    pub fn new(atoms: Vec<SquareMatrix>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
        }
        Self::from_unnormalized(atoms, weights)
    }

    /// Normalises arbitrary positive weights.
    pub fn from_unnormalized(atoms: Vec<SquareMatrix>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("a measure needs at least one atom"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: atoms.len(), found: weights.len() });
        }
        let dim = atoms[0].dim();
        if let Some(a) = atoms.iter().find(|a| a.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(Self::assemble(dim, atoms, weights))
    }

    fn assemble(dim: usize, atoms: Vec<SquareMatrix>, weights: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        DiscreteMatrixMeasure { dim, atoms, weights, cumulative }
    }

    pub fn dirac(g: SquareMatrix) -> Self {
        Self::assemble(g.dim(), vec![g], vec![1.0])
    }

    /// Equal weights on `atoms`.
    pub fn uniform(atoms: Vec<SquareMatrix>) -> Result<Self> {
        let w = vec![1.0; atoms.len()];
        Self::from_unnormalized(atoms, w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[SquareMatrix] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SquareMatrix, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `∫ f dμ`.
    pub fn expect(&self, mut f: impl FnMut(&SquareMatrix) -> f64) -> f64 {
        self.iter().map(|(g, w)| w * f(g)).sum()
    }

    /// Mass of the atoms satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&SquareMatrix) -> bool) -> f64 {
        self.iter().filter(|(g, _)| pred(g)).map(|(_, w)| w).sum()
    }

    /// Index of the atom selected by a uniform variate `u ∈ [0, 1)`.
    #[inline]
    pub fn index_for(&self, u: f64) -> usize {
        self.cumulative.partition_point(|c| *c <= u)
    }

    /// Pushforward under `f`, keeping weights.
    pub fn map(&self, f: impl Fn(&SquareMatrix) -> SquareMatrix) -> Result<Self> {
        Self::from_unnormalized(self.atoms.iter().map(f).collect(), self.weights.clone())
    }

    /// Pushforward under `g ↦ ∧_k g`.
    pub fn exterior_power(&self, k: usize) -> Result<Self> {
        let atoms = self.atoms.iter().map(|g| g.exterior_power(k)).collect::<Result<Vec<_>>>()?;
        Self::from_unnormalized(atoms, self.weights.clone())
    }

    /// Convex combination `(1-t) self + t other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if !(0.0 < t && t < 1.0) {
            return Err(Error::invalid("mixing parameter must lie in (0, 1)"));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w * (1.0 - t)).collect();
        weights.extend(other.weights.iter().map(|w| w * t));
        Self::from_unnormalized(atoms, weights)
    }

    /// Copy with atom `i` replaced.
    pub fn with_atom(&self, i: usize, g: SquareMatrix) -> Result<Self> {
        if g.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: g.dim() });
        }
        let mut atoms = self.atoms.clone();
        atoms[i] = g;
        Ok(Self::assemble(self.dim, atoms, self.weights.clone()))
    }

    /// `μ̄ = μ(· ∩ Bᶜ) / (1 - μ(B))` where `B` is the set of atoms with
    /// `in_set` true.
    pub fn restrict_normalize(&self, mut in_set: impl FnMut(&SquareMatrix) -> bool) -> Result<Self> {
        let (atoms, weights): (Vec<_>, Vec<_>) =
            self.iter().filter(|(g, _)| !in_set(g)).map(|(g, w)| (g.clone(), w)).unzip();
        if atoms.is_empty() {
            return Err(Error::EmptyComplement);
        }
        Self::from_unnormalized(atoms, weights)
    }
}

/// Pruning applied after each convolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneRule {
    /// Atoms closer than this (spectral norm) are merged.
    pub merge_radius: f64,
    pub max_atoms: usize,
    /// Total weight of the lightest atoms that may be discarded.
    pub drop_mass: f64,
}

impl Default for PruneRule {
    fn default() -> Self {
        PruneRule { merge_radius: 1e-9, max_atoms: 20_000, drop_mass: 0.0 }
    }
}

impl PruneRule {
    /// No merging, no dropping, no budget.
    pub fn disabled() -> Self {
        PruneRule { merge_radius: 0.0, max_atoms: usize::MAX, drop_mass: 0.0 }
    }

    pub fn apply(&self, mu: DiscreteMatrixMeasure) -> Result<DiscreteMatrixMeasure> {
        let mut mu = if self.merge_radius > 0.0 { merge_close(mu, self.merge_radius) } else { mu };
        if self.drop_mass > 0.0 {
            mu = drop_light(mu, self.drop_mass)?;
        }
        if mu.len() > self.max_atoms {
            return Err(Error::AtomBudgetExceeded { atoms: mu.len(), budget: self.max_atoms });
        }
        Ok(mu)
    }
}

fn merge_close(mu: DiscreteMatrixMeasure, radius: f64) -> DiscreteMatrixMeasure {
    let dim = mu.dim;
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut atoms: Vec<SquareMatrix> = Vec::with_capacity(mu.len());
    let mut weights: Vec<f64> = Vec::with_capacity(mu.len());
    for (g, w) in mu.atoms.into_iter().zip(mu.weights) {
        let key: Vec<i64> = g.as_slice().iter().map(|x| (x / radius).round() as i64).collect();
        let slot = buckets.entry(key).or_default();
        match slot.iter().find(|&&i| atoms[i].sub(&g).operator_norm() <= radius) {
            Some(&i) => weights[i] += w,
            None => {
                slot.push(atoms.len());
                atoms.push(g);
                weights.push(w);
            }
        }
    }
    DiscreteMatrixMeasure::assemble(dim, atoms, weights)
}

fn drop_light(mu: DiscreteMatrixMeasure, budget: f64) -> Result<DiscreteMatrixMeasure> {
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| mu.weights[a].total_cmp(&mu.weights[b]).then(a.cmp(&b)));
    let mut dropped = vec![false; mu.len()];
    let mut spent = 0.0;
    for &i in order.iter().take(mu.len() - 1) {
        if spent + mu.weights[i] > budget {
            break;
        }
        spent += mu.weights[i];
        dropped[i] = true;
    }
    let (atoms, weights): (Vec<_>, Vec<_>) = mu
        .atoms
        .into_iter()
        .zip(mu.weights)
        .zip(dropped)
        .filter(|(_, d)| !d)
        .map(|(aw, _)| aw)
        .unzip();
    DiscreteMatrixMeasure::from_unnormalized(atoms, weights)
}

/// `μ ∗ ν`: law of `g h` with `g ~ μ`, `h ~ ν` independent.
pub fn convolve(
    mu: &DiscreteMatrixMeasure,
    nu: &DiscreteMatrixMeasure,
    prune: &PruneRule,
) -> Result<DiscreteMatrixMeasure> {
    if mu.dim != nu.dim {
        return Err(Error::DimensionMismatch { expected: mu.dim, found: nu.dim });
    }
    let n = mu.len() * nu.len();
    if prune.merge_radius <= 0.0 && n > prune.max_atoms {
        return Err(Error::AtomBudgetExceeded { atoms: n, budget: prune.max_atoms });
    }
    let mut atoms = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (g, wg) in mu.iter() {
        for (h, wh) in nu.iter() {
            atoms.push(g.mul(h));
            weights.push(wg * wh);
        }
    }
    prune.apply(DiscreteMatrixMeasure::assemble(mu.dim, atoms, weights))
}

/// `μ^{∗n}` with pruning after every factor.
pub fn power(mu: &DiscreteMatrixMeasure, n: usize, prune: &PruneRule) -> Result<DiscreteMatrixMeasure> {
    if n == 0 {
        return Err(Error::invalid("power requires n >= 1"));
    }
    let mut acc = prune.apply(mu.clone())?;
    for _ in 1..n {
        acc = convolve(&acc, mu, prune)?;
    }
    Ok(acc)
}
