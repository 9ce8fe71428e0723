//! Lyapunov spectra, stationary measures on projective space and the
//! Furstenberg formula.
//!
//! Exponents are estimated by carrying an orthonormal `r`-frame through the
//! random product and reorthonormalising with a QR step after every factor.
//! Trial `t` draws from stream `(seed, t)`, so two measures with the same
//! atom count and weights see the same atom indices when run with the same
//! seed; [`holder_scan`] relies on this to pair its estimates.

mod holder_scan;
pub(crate) mod stationary;

use std::borrow::Cow;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{norm, qr_step_raw, Frame, ProjPoint, SquareMatrix};
use crate::measures::{theta_bar, theta_under, DiscreteMatrixMeasure, MatrixSource, SphereSearch};
use crate::rng::{stream_rng, StreamRng};
use crate::stats::Estimate;

pub use holder_scan::{atom_shift_family, fit_holder, holder_rows, holder_scan, paired_top_exponent_difference, HolderFit, HolderRow, HolderScan, HolderScanSettings};
pub use stationary::{
    furstenberg_le, furstenberg_le_mc, levy_prokhorov_upper, stationary_measure_chain, stationary_measure_grid, EmpiricalProjMeasure,
    FurstenbergEstimate, GridSettings, GridStationary, Provenance,
};

/// Initial frame of each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum StartFrame {
    /// The first `r` standard basis vectors.
    #[default]
    Identity,
    /// Haar-random frame drawn from the trial stream. With a degenerate
    /// spectrum (`L₁ = L₂`) this picks up the `O(n^{-1/2})` excess of the top
    /// singular value of a finite product, so it is not the default.
    Random,
}

/// How the per-step log-diagonals of a trial are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Averaging {
    /// `(1/n) Σ log R_ii`.
    #[default]
    Uniform,
    /// Smooth bump weights `exp(-1/(s(1-s)))`, `s = (t + ½)/n`, normalised.
    /// Removes the `O(1/n)` start-up bias on quasi-periodic inputs such as
    /// a single matrix, where it converges faster than any power of `n`.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumSettings {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    /// Number of exponents `r ≤ m`.
    pub rank: usize,
    pub start: StartFrame,
    pub averaging: Averaging,
}

impl SpectrumSettings {
    pub fn new(steps: usize, trials: usize, seed: u64, rank: usize) -> Self {
        SpectrumSettings { steps, trials, seed, rank, start: StartFrame::Identity, averaging: Averaging::Uniform }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    /// `L₁ ≥ … ≥ L_r`; `-inf` where most trials collapsed.
    pub exponents: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Fraction of trials in which the frame lost rank at this index.
    pub minus_inf_fraction: Vec<f64>,
    pub steps: usize,
    pub trials: usize,
}

impl LyapunovReport {
    pub fn top(&self) -> Estimate {
        Estimate { value: self.exponents[0], stderr: self.stderr[0] }
    }

    /// Sum of the top `k` exponents with the stderr of independent terms.
    pub fn top_sum(&self, k: usize) -> Estimate {
        let value = self.exponents[..k].iter().sum();
        let stderr = self.stderr[..k].iter().map(|s| s * s).sum::<f64>().sqrt();
        Estimate { value, stderr }
    }
}

/// Averaging weights for `n` steps, summing to one.
fn step_weights(n: usize, averaging: Averaging) -> Option<Vec<f64>> {
    match averaging {
        Averaging::Uniform => None,
        Averaging::Weighted => {
            let raw: Vec<f64> = (0..n)
                .map(|t| {
                    let s = (t as f64 + 0.5) / n as f64;
                    (-1.0 / (s * (1.0 - s))).exp()
                })
                .collect();
            let total: f64 = raw.iter().sum();
            Some(raw.into_iter().map(|w| w / total).collect())
        }
    }
}

/// Per-trial exponent estimates; `-inf` marks a collapsed index.
fn run_trial<S: MatrixSource + ?Sized>(
    src: &S,
    set: &SpectrumSettings,
    weights: Option<&[f64]>,
    trial: usize,
) -> Vec<f64> {
    let m = src.dim();
    let r = set.rank;
    let mut rng = stream_rng(set.seed, trial as u64);
    let mut frame = match set.start {
        StartFrame::Identity => Frame::identity(m, r),
        StartFrame::Random => Frame::random(m, r, &mut rng),
    };
    let mut acc = vec![0.0; r];
    let mut collapsed = vec![false; r];
    let inv_n = 1.0 / set.steps as f64;
    for t in 0..set.steps {
        let g = src.draw(&mut rng);
        let step = qr_step_raw(&frame, &g);
        let w = weights.map_or(inv_n, |w| w[t]);
        for i in 0..r {
            if step.logs[i] == f64::NEG_INFINITY {
                collapsed[i..].iter_mut().for_each(|c| *c = true);
            }
            if !collapsed[i] {
                acc[i] += w * step.logs[i];
            }
        }
        frame = step.frame;
    }
    acc.iter().zip(&collapsed).map(|(&a, &c)| if c { f64::NEG_INFINITY } else { a }).collect()
}

/// Lyapunov exponents `L₁ … L_r` of the i.i.d. product driven by `src`.
pub fn lyapunov_spectrum<S: MatrixSource + ?Sized>(src: &S, set: &SpectrumSettings) -> Result<LyapunovReport> {
    let m = src.dim();
    if set.steps == 0 || set.trials == 0 || set.rank == 0 || set.rank > m {
        return Err(Error::invalid(format!(
            "need steps >= 1, trials >= 1 and 1 <= rank <= {m} (got {}, {}, {})",
            set.steps, set.trials, set.rank
        )));
    }
    let weights = step_weights(set.steps, set.averaging);
    let per_trial: Vec<Vec<f64>> =
        (0..set.trials).into_par_iter().map(|t| run_trial(src, set, weights.as_deref(), t)).collect();
    let mut rows: Vec<(f64, f64, f64)> = (0..set.rank)
        .map(|i| {
            let finite: Vec<f64> = per_trial.iter().map(|v| v[i]).filter(|x| x.is_finite()).collect();
            let frac = 1.0 - finite.len() as f64 / set.trials as f64;
            if frac > 0.5 || finite.is_empty() {
                (f64::NEG_INFINITY, 0.0, frac)
            } else {
                let e = Estimate::from_samples(&finite);
                (e.value, e.stderr, frac)
            }
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LyapunovReport {
        exponents: rows.iter().map(|r| r.0).collect(),
        stderr: rows.iter().map(|r| r.1).collect(),
        minus_inf_fraction: rows.iter().map(|r| r.2).collect(),
        steps: set.steps,
        trials: set.trials,
    })
}

/// Per-trial estimates of `L₁` (rank-one runs), in trial order.
pub fn top_exponent_samples<S: MatrixSource + ?Sized>(src: &S, set: &SpectrumSettings) -> Vec<f64> {
    let set = SpectrumSettings { rank: 1, ..*set };
    let weights = step_weights(set.steps, set.averaging);
    (0..set.trials).into_par_iter().map(|t| run_trial(src, &set, weights.as_deref(), t)[0]).collect()
}

/// Per-trial pairs `(x, c)`: `x` estimates the top exponent of the `∧_k`
/// cocycle (`k = 1` for the cocycle itself) and `c` is the path average of
/// `control(g)` over the same draws, for use as a control variate.
pub fn controlled_top_samples<S, C>(src: &S, set: &SpectrumSettings, k: usize, control: C) -> Result<Vec<(f64, f64)>>
where
    S: MatrixSource + ?Sized,
    C: Fn(&SquareMatrix) -> f64 + Sync,
{
    let m = src.dim();
    if k == 0 || k > m || set.steps == 0 || set.trials == 0 {
        return Err(Error::invalid(format!("need 1 <= k <= {m}, steps >= 1 and trials >= 1")));
    }
    let dim = crate::matcore::linalg::binomial(m, k);
    let inv_n = 1.0 / set.steps as f64;
    Ok((0..set.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(set.seed, t as u64);
            let mut frame = match set.start {
                StartFrame::Identity => Frame::identity(dim, 1),
                StartFrame::Random => Frame::random(dim, 1, &mut rng),
            };
            let (mut x, mut c) = (0.0, 0.0);
            for _ in 0..set.steps {
                let g = src.draw(&mut rng);
                c += control(&g);
                let step = if k == 1 { qr_step_raw(&frame, &g) } else { qr_step_raw(&frame, &g.exterior_power(k).expect("k checked")) };
                x += step.logs[0];
                frame = step.frame;
            }
            (x * inv_n, c * inv_n)
        })
        .collect())
}

/// Pushforward of a source under `g ↦ ∧_k g`.
pub struct ExteriorSource<'a, S: MatrixSource + ?Sized> {
    inner: &'a S,
    k: usize,
    dim: usize,
}

impl<'a, S: MatrixSource + ?Sized> ExteriorSource<'a, S> {
    pub fn new(inner: &'a S, k: usize) -> Result<Self> {
        let m = inner.dim();
        if k == 0 || k > m {
            return Err(Error::invalid(format!("k={k} outside 1..={m}")));
        }
        Ok(ExteriorSource { inner, k, dim: crate::matcore::linalg::binomial(m, k) })
    }
}

impl<S: MatrixSource + ?Sized> MatrixSource for ExteriorSource<'_, S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw(&self, rng: &mut StreamRng) -> Cow<'_, SquareMatrix> {
        let g = self.inner.draw(rng);
        Cow::Owned(g.exterior_power(self.k).expect("k checked on construction"))
    }
}

/// Top exponent of the `∧_k` cocycle, which equals `L₁ + … + L_k`.
pub fn exterior_le_sum<S: MatrixSource + ?Sized>(src: &S, k: usize, steps: usize, trials: usize, seed: u64) -> Result<Estimate> {
    let ext = ExteriorSource::new(src, k)?;
    let rep = lyapunov_spectrum(&ext, &SpectrumSettings::new(steps, trials, seed, 1))?;
    Ok(rep.top())
}

/// Per-trial `(1/n) log‖A^n v‖`; `-inf` if the vector is annihilated.
pub fn growth_samples<S: MatrixSource + ?Sized>(src: &S, v: &ProjPoint, steps: usize, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let mut x = v.rep().to_vec();
            let mut y = vec![0.0; x.len()];
            let mut total = 0.0;
            for _ in 0..steps {
                let g = src.draw(&mut rng);
                g.apply_into(&x, &mut y);
                let n = norm(&y);
                if n == 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += n.ln();
                for (a, b) in x.iter_mut().zip(&y) {
                    *a = b / n;
                }
            }
            total / steps as f64
        })
        .collect()
}

/// Mean of [`growth_samples`]; collapsed trials give `-inf`.
pub fn direction_growth<S: MatrixSource + ?Sized>(src: &S, v: &ProjPoint, steps: usize, trials: usize, seed: u64) -> Estimate {
    let s = growth_samples(src, v, steps, trials, seed);
    if s.iter().any(|x| !x.is_finite()) {
        return Estimate { value: f64::NEG_INFINITY, stderr: 0.0 };
    }
    Estimate::from_samples(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeBoundCheck {
    pub l1: f64,
    pub stderr: f64,
    pub c: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `|L₁| ≤ (C - 1)/p + 3·stderr` with `C = max(Θ̄_p, Θ̲_p)`.
///
/// `Θ̲_p` comes from a sphere search (a lower bound), which can only make the
/// check stricter.
pub fn le_bound_check(mu: &DiscreteMatrixMeasure, p: f64, l1: Estimate, search: &SphereSearch) -> Result<LeBoundCheck> {
    let (tu, _) = theta_under(mu, p, search)?;
    let c = theta_bar(mu, p).max(tu);
    let bound = (c - 1.0) / p;
    Ok(LeBoundCheck { l1: l1.value, stderr: l1.stderr, c, bound, pass: l1.value.abs() <= bound + 3.0 * l1.stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(a: f64, b: f64) -> SquareMatrix {
        SquareMatrix::diag(&[a, b]).unwrap()
    }

    #[test]
    fn deterministic_diagonal_after_one_step() {
        let mu = DiscreteMatrixMeasure::dirac(diag(2.0, 0.5));
        let mut set = SpectrumSettings::new(1, 3, 0, 2);
        set.start = StartFrame::Identity;
        let r = lyapunov_spectrum(&mu, &set).unwrap();
        assert!((r.exponents[0] - 2f64.ln()).abs() < 1e-15);
        assert!((r.exponents[1] + 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.stderr, vec![0.0, 0.0]);
    }

    #[test]
    fn balanced_diagonal_pair() {
        let mu = DiscreteMatrixMeasure::uniform(vec![diag(3.0, 1.0), diag(1.0, 3.0)]).unwrap();
        let r = lyapunov_spectrum(&mu, &SpectrumSettings::new(2000, 100, 1, 2)).unwrap();
        let target = 0.5 * 3f64.ln();
        for i in 0..2 {
            assert!((r.exponents[i] - target).abs() < 4.0 * r.stderr[i] + 1e-3, "{r:?}");
        }
    }

    #[test]
    fn rank_one_projection_collapses() {
        let p = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = lyapunov_spectrum(&DiscreteMatrixMeasure::dirac(p), &SpectrumSettings::new(50, 10, 2, 2)).unwrap();
        assert!(r.exponents[0].abs() < 1e-12);
        assert_eq!(r.exponents[1], f64::NEG_INFINITY);
        assert_eq!(r.minus_inf_fraction, vec![0.0, 1.0]);
    }

    #[test]
    fn weighted_averaging_matches_eigenvalues_of_one_atom() {
        let g = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, -0.3]]).unwrap();
        let mut eig: Vec<f64> = g.eigenvalues().iter().map(|z| z.0.hypot(z.1).ln()).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let mut set = SpectrumSettings::new(10_000, 1, 3, 2);
        set.averaging = Averaging::Weighted;
        let r = lyapunov_spectrum(&DiscreteMatrixMeasure::dirac(g), &set).unwrap();
        for i in 0..2 {
            assert!((r.exponents[i] - eig[i]).abs() < 1e-9, "{:?} vs {eig:?}", r.exponents);
        }
    }

    #[test]
    fn exterior_sum_examples() {
        let mu = DiscreteMatrixMeasure::dirac(diag(2.0, 0.5));
        assert!(exterior_le_sum(&mu, 2, 10, 2, 0).unwrap().value.abs() < 1e-14);
        let g = SquareMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.5, -0.3, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let top = exterior_le_sum(&DiscreteMatrixMeasure::dirac(g.clone()), 3, 10, 1, 0).unwrap();
        assert!((top.value - g.det().abs().ln()).abs() < 1e-12);
    }

    #[test]
    fn bound_examples() {
        let s = SphereSearch::default();
        let id = DiscreteMatrixMeasure::dirac(SquareMatrix::identity(2));
        assert!(le_bound_check(&id, 0.5, Estimate::exact(0.0), &s).unwrap().pass);
        let hyp = DiscreteMatrixMeasure::dirac(diag(2.0, 0.5));
        let c = le_bound_check(&hyp, 1.0, Estimate::exact(2f64.ln()), &s).unwrap();
        assert!((c.c - 2.0).abs() < 1e-12 && (c.bound - 1.0).abs() < 1e-12 && c.pass);
        let bal = DiscreteMatrixMeasure::uniform(vec![diag(3.0, 1.0), diag(1.0, 3.0)]).unwrap();
        let c = le_bound_check(&bal, 1.0, Estimate::exact(0.5 * 3f64.ln()), &s).unwrap();
        assert!((c.c - 3.0).abs() < 1e-9 && (c.bound - 2.0).abs() < 1e-9 && c.pass);
    }

    #[test]
    fn growth_from_a_direction() {
        let mu = DiscreteMatrixMeasure::dirac(diag(2.0, 0.5));
        let e = direction_growth(&mu, &ProjPoint::basis(2, 1), 5, 1, 0);
        assert!((e.value + 2f64.ln()).abs() < 1e-14);
        let p = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let e = direction_growth(&DiscreteMatrixMeasure::dirac(p), &ProjPoint::basis(2, 1), 5, 1, 0);
        assert_eq!(e.value, f64::NEG_INFINITY);
    }
}
