//! The Markov operator `(Qφ)(v̂) = ∫ φ(ĝv̂) dμ(g)` on `P¹`, discretised on a
//! uniform grid of angles `θ_i = iπ/N`.
//!
//! Images `ĝθ_i` fall between nodes and `φ` is interpolated linearly there.
//! The same re-binning, transposed, drives
//! [`stationary_measure_grid`](crate::lyapunov::stationary_measure_grid), so
//! `∫ Qφ dη = ∫ φ d(Q*η)` holds exactly on the grid.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::stationary::GridKernel;
use crate::lyapunov::EmpiricalProjMeasure;
use crate::measures::{kappa_alpha, power, DiscreteMatrixMeasure, PairSearch, PruneRule};
use crate::stats::linear_fit;

/// Values of an observable at the nodes `iπ/N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridObservable {
    values: Vec<f64>,
}

impl GridObservable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a grid observable needs at least 2 nodes"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid observable values must be finite"));
        }
        Ok(GridObservable { values })
    }

    /// Sample `f(θ)` at the `n` nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridObservable::new((0..n).map(|i| f(i as f64 * PI / n as f64)).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        GridObservable::new(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn angle(&self, i: usize) -> f64 {
        i as f64 * PI / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `max |φ_i - φ_j| / d(θ_i, θ_j)^α` over node pairs, `d = |sin(θ_i - θ_j)|`.
    pub fn holder_seminorm(&self, alpha: f64) -> f64 {
        let n = self.values.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best: f64 = 0.0;
                for j in (i + 1)..n {
                    let d = ((j - i) as f64 * PI / n as f64).sin().abs();
                    best = best.max((self.values[i] - self.values[j]).abs() / d.powf(alpha));
                }
                best
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// `‖φ‖_∞ + v_α(φ)`.
    pub fn holder_norm(&self, alpha: f64) -> f64 {
        self.sup_norm() + self.holder_seminorm(alpha)
    }

    /// `Σ η_i φ_i` for a measure living on the same grid.
    pub fn integrate(&self, eta: &[f64]) -> Result<f64> {
        if eta.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), found: eta.len() });
        }
        Ok(self.values.iter().zip(eta).map(|(a, b)| a * b).sum())
    }
}

/// Test observables: `cos 2θ`, `sin 2θ` and a smoothed indicator of the
/// sector around `θ = 0`.
pub fn standard_observables(n: usize) -> Result<Vec<GridObservable>> {
    Ok(vec![
        GridObservable::from_fn(n, |t| (2.0 * t).cos())?,
        GridObservable::from_fn(n, |t| (2.0 * t).sin())?,
        GridObservable::from_fn(n, |t| 0.5 * (1.0 + (4.0 * (2.0 * t).cos()).tanh()))?,
    ])
}

/// Reusable discretised operator for one measure and grid size.
pub struct MarkovGrid {
    kernel: GridKernel,
}

impl MarkovGrid {
    pub fn new(mu: &DiscreteMatrixMeasure, n: usize) -> Result<Self> {
        if mu.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: mu.dim() });
        }
        if n < 2 {
            return Err(Error::invalid("n_grid must be at least 2"));
        }
        let kernel = GridKernel::new(mu, n);
        if kernel.kernel_pairs() > 0 {
            let tol = mu.atoms().iter().map(|g| g.kernel_tol()).fold(0.0, f64::max);
            return Err(Error::KernelHit { norm: 0.0, tol });
        }
        Ok(MarkovGrid { kernel })
    }

    pub fn len(&self) -> usize {
        self.kernel.n
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.n == 0
    }

    pub fn apply(&self, phi: &GridObservable) -> Result<GridObservable> {
        if phi.len() != self.kernel.n {
            return Err(Error::DimensionMismatch { expected: self.kernel.n, found: phi.len() });
        }
        Ok(GridObservable { values: self.kernel.pull(&phi.values) })
    }
}

/// One application of `Q_μ`.
pub fn apply_markov(mu: &DiscreteMatrixMeasure, phi: &GridObservable) -> Result<GridObservable> {
    MarkovGrid::new(mu, phi.len())?.apply(phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingRow {
    pub n: usize,
    pub phi_id: usize,
    pub sup_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingFit {
    /// Largest per-observable decay rate.
    pub sigma: f64,
    /// Smallest `K` with `e_n ≤ K σ^n ‖φ‖_∞` on every row above `1e-12`.
    pub k: f64,
    /// Smallest per-observable `r²`.
    pub r2: f64,
    pub rows_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingReport {
    pub rows: Vec<MixingRow>,
    pub fit: MixingFit,
}

/// `e_n = ‖Q^n φ - ∫φ dη‖_∞` for `n = 1..=n_max` and each observable.
pub fn mixing_table(mu: &DiscreteMatrixMeasure, phis: &[GridObservable], n_max: usize, eta: &EmpiricalProjMeasure) -> Result<Vec<MixingRow>> {
    let mut rows = Vec::with_capacity(phis.len() * n_max);
    for (id, phi) in phis.iter().enumerate() {
        let op = MarkovGrid::new(mu, phi.len())?;
        let mean = phi.integrate(&eta.weights)?;
        let mut cur = phi.clone();
        for n in 1..=n_max {
            cur = op.apply(&cur)?;
            let e = cur.values.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
            rows.push(MixingRow { n, phi_id: id, sup_residual: e });
        }
    }
    Ok(rows)
}

/// Per observable, least squares of `log e_n` on `n` after dropping
/// `n ≤ 2` and rows with `e_n < 1e-12`.
///
/// Fails with `NoDecay` when the slowest observable has `σ > 1 - 1e-3`, and
/// with `InsufficientData` when no observable leaves three usable rows
/// (constant observables give `e_n = 0`).
pub fn fit_mixing(rows: &[MixingRow], sup_norms: &[f64]) -> Result<MixingFit> {
    let ids = rows.iter().map(|r| r.phi_id).max().map_or(0, |m| m + 1);
    let mut sigma: f64 = 0.0;
    let mut r2: f64 = 1.0;
    let mut used = 0;
    let mut fitted = 0;
    for id in 0..ids {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.phi_id == id && r.n > 2 && r.sup_residual >= 1e-12)
            .map(|r| (r.n as f64, r.sup_residual.ln()))
            .collect();
        if pts.len() < 3 {
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let f = linear_fit(&x, &y).ok_or_else(|| Error::InsufficientData("degenerate mixing fit".into()))?;
        sigma = sigma.max(f.slope.exp());
        r2 = r2.min(f.r2);
        used += x.len();
        fitted += 1;
    }
    if fitted == 0 {
        return Err(Error::InsufficientData("no observable with three rows above 1e-12".into()));
    }
    if sigma > 1.0 - 1e-3 {
        return Err(Error::NoDecay { sigma });
    }
    let k = rows
        .iter()
        .filter(|r| r.sup_residual >= 1e-12 && sup_norms.get(r.phi_id).is_some_and(|&s| s > 0.0))
        .map(|r| r.sup_residual / (sigma.powi(r.n as i32) * sup_norms[r.phi_id]))
        .fold(0.0, f64::max);
    Ok(MixingFit { sigma, k, r2, rows_used: used })
}

/// Residual table and fitted rate `(K, σ)`.
pub fn mixing_rate(mu: &DiscreteMatrixMeasure, phis: &[GridObservable], n_max: usize, eta: &EmpiricalProjMeasure) -> Result<MixingReport> {
    let rows = mixing_table(mu, phis, n_max, eta)?;
    let norms: Vec<f64> = phis.iter().map(|p| p.sup_norm()).collect();
    let fit = fit_mixing(&rows, &norms)?;
    Ok(MixingReport { rows, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaTable {
    /// `(n, κ_α(μ^n) estimate)`.
    pub rows: Vec<(usize, f64)>,
    pub first_contracting: Option<usize>,
}

/// `κ_α(μ^n)` for each `n`, with the first `n` whose estimate is below 1.
pub fn kappa_power_table(
    mu: &DiscreteMatrixMeasure,
    alpha: f64,
    n_list: &[usize],
    prune: &PruneRule,
    search: &PairSearch,
) -> Result<KappaTable> {
    if mu.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: mu.dim() });
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mun = power(mu, n, prune)?;
        rows.push((n, kappa_alpha(&mun, alpha, search)?.estimate));
    }
    let first_contracting = rows.iter().find(|r| r.1 < 1.0).map(|r| r.0);
    Ok(KappaTable { rows, first_contracting })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{stationary_measure_grid, GridSettings};
    use crate::matcore::SquareMatrix;

    fn hyperbolic() -> DiscreteMatrixMeasure {
        DiscreteMatrixMeasure::dirac(SquareMatrix::diag(&[2.0, 0.5]).unwrap())
    }

    #[test]
    fn constants_are_fixed() {
        let mu = DiscreteMatrixMeasure::uniform(vec![SquareMatrix::diag(&[2.0, 0.5]).unwrap(), SquareMatrix::rotation(0.3)]).unwrap();
        let q = apply_markov(&mu, &GridObservable::constant(128, 2.5).unwrap()).unwrap();
        assert!(q.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn grid_rotation_is_a_shift() {
        let n = 64;
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::rotation(5.0 * PI / n as f64));
        let phi = GridObservable::from_fn(n, |t| (2.0 * t).sin() + 0.3 * (6.0 * t).cos()).unwrap();
        let q = apply_markov(&mu, &phi).unwrap();
        for i in 0..n {
            assert!((q.values()[i] - phi.values()[(i + 5) % n]).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_atom_is_rejected() {
        let p = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let phi = GridObservable::constant(8, 1.0).unwrap();
        assert!(matches!(apply_markov(&DiscreteMatrixMeasure::dirac(p), &phi), Err(Error::KernelHit { .. })));
    }

    #[test]
    fn seminorm_examples() {
        let phi = GridObservable::constant(32, 1.0).unwrap();
        assert_eq!(phi.holder_seminorm(0.5), 0.0);
        let s = GridObservable::from_fn(256, |t| (2.0 * t).sin()).unwrap();
        assert!((s.holder_seminorm(1.0) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn hyperbolic_mixing_decays() {
        let mu = hyperbolic();
        let eta = stationary_measure_grid(&mu, &GridSettings { n_grid: 512, ..Default::default() }).unwrap();
        assert!(eta.converged);
        let phis = vec![GridObservable::from_fn(512, |t| 0.5 * (1.0 + (4.0 * (2.0 * t).cos()).tanh())).unwrap()];
        let r = mixing_table(&mu, &phis, 40, &eta.measure).unwrap();
        assert!(r.last().unwrap().sup_residual < r[0].sup_residual);
    }

    #[test]
    fn rotation_has_no_decay() {
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::rotation(1.0));
        let eta = stationary_measure_grid(&mu, &GridSettings { n_grid: 512, ..Default::default() }).unwrap();
        let phis = standard_observables(512).unwrap();
        assert!(matches!(mixing_rate(&mu, &phis, 60, &eta.measure), Err(Error::NoDecay { .. })));
    }

    #[test]
    fn constant_observable_has_zero_residual() {
        let mu = hyperbolic();
        let eta = stationary_measure_grid(&mu, &GridSettings { n_grid: 64, ..Default::default() }).unwrap();
        let rows = mixing_table(&mu, &[GridObservable::constant(64, 1.0).unwrap()], 10, &eta.measure).unwrap();
        assert!(rows.iter().all(|r| r.sup_residual < 1e-14));
        assert!(matches!(fit_mixing(&rows, &[1.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn kappa_table_examples() {
        let s = PairSearch { n_angle: 256, coarse: 32, ..Default::default() };
        let t = kappa_power_table(&DiscreteMatrixMeasure::dirac(SquareMatrix::identity(2)), 0.5, &[1, 2], &PruneRule::default(), &s).unwrap();
        assert!(t.rows.iter().all(|r| (r.1 - 1.0).abs() < 1e-9));
        assert_eq!(t.first_contracting, None);
        // The repelling direction ê₂ is expanded by 4ⁿ, so κ_½(μⁿ) = 2ⁿ.
        let t = kappa_power_table(&hyperbolic(), 0.5, &[1, 2, 3], &PruneRule::default(), &s).unwrap();
        for &(n, k) in &t.rows {
            assert!((k / 2f64.powi(n as i32) - 1.0).abs() < 1e-3, "{n}: {k}");
        }
        assert_eq!(t.first_contracting, None);
    }
}
