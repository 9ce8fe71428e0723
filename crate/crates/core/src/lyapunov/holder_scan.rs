use serde::Serialize;

use super::{top_exponent_samples, SpectrumSettings};
use crate::error::{Error, Result};
use crate::matcore::SquareMatrix;
use crate::measures::DiscreteMatrixMeasure;
use crate::stats::{linear_fit, Estimate};
use crate::transport::wasserstein_p;

/// Estimator settings shared by every member of a scan. The same seed is
/// used for the base measure and each perturbation so that the per-trial
/// differences share their atom choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderScanSettings {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderRow {
    pub w_p: f64,
    pub delta_l1: f64,
    pub stderr: f64,
}

impl HolderRow {
    pub fn above_noise(&self) -> bool {
        self.w_p > 0.0 && self.delta_l1 > 3.0 * self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rows_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderScan {
    pub rows: Vec<HolderRow>,
    pub fit: HolderFit,
}

/// `ν_ε` for each `ε`: atom `index` of `mu` moved by `ε Δ/‖Δ‖`.
pub fn atom_shift_family(mu: &DiscreteMatrixMeasure, index: usize, delta: &SquareMatrix, eps: &[f64]) -> Result<Vec<DiscreteMatrixMeasure>> {
    if index >= mu.len() {
        return Err(Error::invalid(format!("atom index {index} out of range")));
    }
    let n = delta.operator_norm();
    if n == 0.0 {
        return Err(Error::invalid("shift direction is zero"));
    }
    let unit = delta.scale(1.0 / n);
    eps.iter().map(|&e| mu.with_atom(index, mu.atoms()[index].add(&unit.scale(e)))).collect()
}

/// `L₁(ν) - L₁(μ)` from per-trial differences on shared streams.
pub fn paired_top_exponent_difference(mu: &DiscreteMatrixMeasure, nu: &DiscreteMatrixMeasure, set: &SpectrumSettings) -> Estimate {
    let a = top_exponent_samples(mu, set);
    let b = top_exponent_samples(nu, set);
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
    Estimate::from_samples(&d)
}

/// Least squares of `log|ΔL₁|` on `log W_p` over the rows above `3σ`.
pub fn fit_holder(rows: &[HolderRow]) -> Result<HolderFit> {
    let used: Vec<&HolderRow> = rows.iter().filter(|r| r.above_noise()).collect();
    if used.len() < 4 {
        return Err(Error::InsufficientSignal { rows: used.len(), needed: 4 });
    }
    let x: Vec<f64> = used.iter().map(|r| r.w_p.ln()).collect();
    let y: Vec<f64> = used.iter().map(|r| r.delta_l1.ln()).collect();
    let f = linear_fit(&x, &y).ok_or(Error::InsufficientSignal { rows: used.len(), needed: 4 })?;
    Ok(HolderFit { slope: f.slope, intercept: f.intercept, r2: f.r2, rows_used: used.len() })
}

/// Rows `(W_p(μ,ν), |L₁(μ) - L₁(ν)|, stderr)` for each member of `family`.
pub fn holder_rows(mu: &DiscreteMatrixMeasure, family: &[DiscreteMatrixMeasure], set: &HolderScanSettings) -> Result<Vec<HolderRow>> {
    let spec = SpectrumSettings::new(set.steps, set.trials, set.seed, 1);
    let mut rows = Vec::with_capacity(family.len());
    for nu in family {
        if nu.dim() != mu.dim() {
            return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
        }
        let (w, _) = wasserstein_p(mu, nu, set.p)?;
        let d = paired_top_exponent_difference(mu, nu, &spec);
        rows.push(HolderRow { w_p: w, delta_l1: d.value.abs(), stderr: d.stderr });
    }
    Ok(rows)
}

/// [`holder_rows`] plus the fitted exponent.
pub fn holder_scan(mu: &DiscreteMatrixMeasure, family: &[DiscreteMatrixMeasure], set: &HolderScanSettings) -> Result<HolderScan> {
    let rows = holder_rows(mu, family, set)?;
    let fit = fit_holder(&rows)?;
    Ok(HolderScan { rows, fit })
}
