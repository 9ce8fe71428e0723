//! Schrödinger cocycle with impurities of large coupling.
//!
//! Regular sites carry `t ~ dist`, impurity sites (probability `q`) carry
//! `λa`. After dividing every impurity matrix by `λ` the cocycle has law
//! `μ_β`, `β = 1/λ`, with the impurity atom `g₀(β) = [[a-E, -β], [β, 0]]`,
//! and `L₁(λ) = q log λ + L₁(μ_β)`.
//!
//! Inducing on regular sites groups the path into blocks of `n ≥ 1` regular
//! matrices followed by `m ≥ 1` impurities, with probability `q^m (1-q)^n`.
//! The mean block length is `1/(q(1-q))`, so the per-step exponent is
//! `q(1-q)` times the per-block exponent of the induced law.

use rayon::prelude::*;
use serde::Serialize;

use super::{schrodinger_matrix, Realization, ScalarDist};
use crate::error::{Error, Result};
use crate::lyapunov::{top_exponent_samples, SpectrumSettings};
use crate::matcore::SquareMatrix;
use crate::measures::{DiscreteMatrixMeasure, MatrixSampler, Source};
use crate::rng::{derive_seed, stream_rng, StreamRng};
use crate::stats::{linear_fit, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedModelParams {
    pub a: f64,
    pub e: f64,
    pub q: f64,
    pub lambda: f64,
    pub dist: ScalarDist,
}

impl MixedModelParams {
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::invalid(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if !(self.lambda >= 1.0) {
            return Err(Error::invalid(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        let gap = (self.a - self.e).abs();
        if gap < 1e-9 {
            return Err(Error::DegenerateEnergy { gap });
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.lambda
    }

    /// Soft preconditions: the moment bounds need `q < |a-E|^p`.
    pub fn warnings(&self, p: f64) -> Vec<String> {
        let mut w = Vec::new();
        let gap = (self.a - self.e).abs();
        if self.q >= gap.powf(p) {
            w.push(format!("q = {} is not below |a-E|^p = {}", self.q, gap.powf(p)));
        }
        w
    }
}

/// `[[a-E, -β], [β, 0]]`.
pub fn g0(a: f64, e: f64, beta: f64) -> SquareMatrix {
    SquareMatrix::from_rows(&[vec![a - e, -beta], vec![beta, 0.0]]).expect("2x2")
}

/// `(1-q) ∫ δ_{A_E(t)} dμ(t) + q δ_{g₀(β)}` with `β = 1/λ` (or `β = 0`
/// when `lambda` is infinite).
///
/// Discrete realisations list the regular atoms first and the impurity
/// last; sampler realisations draw one uniform to pick the site type. Both
/// layouts consume randomness independently of `β`, so runs with the same
/// seed share their site sequence across couplings.
pub fn mixed_measure(params: &MixedModelParams, discretize: Option<usize>, seed: u64) -> Result<(Source, Realization)> {
    if params.lambda.is_finite() {
        params.validate()?;
    } else {
        MixedModelParams { lambda: 1.0, ..params.clone() }.validate()?;
    }
    let (a, e, q) = (params.a, params.e, params.q);
    let beta = if params.lambda.is_finite() { params.beta() } else { 0.0 };
    match (&params.dist, discretize) {
        (ScalarDist::Atoms(_), _) | (_, Some(_)) => {
            let (pts, how) = params.dist.realize(discretize.unwrap_or(0), seed)?;
            let mut atoms: Vec<SquareMatrix> = pts.iter().map(|&(t, _)| schrodinger_matrix(t, e)).collect();
            let mut weights: Vec<f64> = pts.iter().map(|p| (1.0 - q) * p.1).collect();
            atoms.push(g0(a, e, beta));
            weights.push(q);
            Ok((Source::Discrete(DiscreteMatrixMeasure::from_unnormalized(atoms, weights)?), how))
        }
        _ => {
            let d = params.dist.clone();
            let imp = g0(a, e, beta);
            let s = MatrixSampler::new(2, seed, "mixed", move |rng: &mut StreamRng| {
                use rand::Rng;
                let u: f64 = rng.random();
                if u < q {
                    imp.clone()
                } else {
                    schrodinger_matrix(d.sample(rng), e)
                }
            });
            Ok((Source::Sampler(s), Realization::Continuous))
        }
    }
}

/// Default truncation `N = M` covering all but about `1e-5` of the mass.
pub fn default_truncation(q: f64) -> usize {
    (1e-6f64.ln() / q.max(1.0 - q).ln()).ceil() as usize
}

/// Truncated induced law: atoms `g₀(β)^m h` with raw weights
/// `q^m (1-q)^n / k`, where `h` runs over `k` realisations of an `n`-fold
/// product of regular matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedSeries {
    pub atoms: Vec<SquareMatrix>,
    pub weights: Vec<f64>,
    /// `Σ_{n ≤ N, m ≤ M} q^m (1-q)^n`.
    pub covered_mass: f64,
    pub realization: Realization,
}

impl InducedSeries {
    /// The truncated law renormalised to a probability measure.
    pub fn to_measure(&self) -> Result<DiscreteMatrixMeasure> {
        DiscreteMatrixMeasure::from_unnormalized(self.atoms.clone(), self.weights.clone())
    }
}

/// `n`-fold regular products `A_n ⋯ A_1`: one exact product for a single
/// atom law, else `k` sampled products on stream `(seed, n)`.
fn regular_products(dist: &ScalarDist, e: f64, n: usize, k: usize, seed: u64) -> Vec<SquareMatrix> {
    if let ScalarDist::Atoms(a) = dist {
        if a.len() == 1 {
            return vec![schrodinger_matrix(a[0].0, e).pow(n as u32)];
        }
    }
    let mut rng = stream_rng(seed, n as u64);
    (0..k.max(1))
        .map(|_| {
            let mut h = SquareMatrix::identity(2);
            for _ in 0..n {
                h = schrodinger_matrix(dist.sample(&mut rng), e).mul(&h);
            }
            h
        })
        .collect()
}

fn single_atom(dist: &ScalarDist) -> bool {
    matches!(dist, ScalarDist::Atoms(a) if a.len() == 1)
}

pub fn induced_measure_series(params: &MixedModelParams, n_max: usize, m_max: usize, mc_per_term: usize, seed: u64) -> Result<InducedSeries> {
    params.dist.validate()?;
    if n_max == 0 || m_max == 0 {
        return Err(Error::invalid("N and M must be at least 1"));
    }
    if !(params.q > 0.0 && params.q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0, 1), got {}", params.q)));
    }
    let q = params.q;
    let beta = if params.lambda.is_finite() { 1.0 / params.lambda } else { 0.0 };
    let g = g0(params.a, params.e, beta);
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let mut covered = 0.0;
    for n in 1..=n_max {
        let hs = regular_products(&params.dist, params.e, n, mc_per_term, seed);
        let mut gm = SquareMatrix::identity(2);
        for m in 1..=m_max {
            gm = g.mul(&gm);
            let w = q.powi(m as i32) * (1.0 - q).powi(n as i32);
            covered += w;
            for h in &hs {
                atoms.push(gm.mul(h));
                weights.push(w / hs.len() as f64);
            }
        }
    }
    let realization = if single_atom(&params.dist) { Realization::Exact } else { Realization::Samples { count: mc_per_term.max(1), seed } };
    Ok(InducedSeries { atoms, weights, covered_mass: covered, realization })
}

/// Value of the double series for the per-block exponent of the induced law
/// at `β = 0`, with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub covered_mass: f64,
    /// Uncovered mass weighted by the crude bound `m |log|a-E|| + n L`, with
    /// `L` the largest log-norm of a regular matrix.
    pub truncation_bound: f64,
    pub mc_stderr: f64,
}

/// `log|⟨e₁, A_n ⋯ A_1 e₁⟩|` with running rescaling.
fn log_corner(ts: impl Iterator<Item = f64>, e: f64) -> f64 {
    let (mut x, mut y) = (1.0f64, 0.0f64);
    let mut scale = 0.0;
    for t in ts {
        let nx = (t - e) * x - y;
        y = x;
        x = nx;
        let r = x.abs().max(y.abs());
        if r == 0.0 {
            return f64::NEG_INFINITY;
        }
        if !(1e-100..=1e100).contains(&r) {
            x /= r;
            y /= r;
            scale += r.ln();
        }
    }
    scale + x.abs().ln()
}

/// `Σ_{n ≤ N} Σ_{m ≤ M} q^m (1-q)^n [m log|a-E| + ∫ log|⟨e₁, h e₁⟩| dθ̃^{*n}(h)]`.
///
/// The inner integral is exact for a single-atom law and a mean over
/// `mc_per_term` sampled products otherwise.
pub fn explicit_l1_tilde0(params: &MixedModelParams, n_max: usize, m_max: usize, mc_per_term: usize, seed: u64) -> Result<SeriesValue> {
    let gap = (params.a - params.e).abs();
    if gap < 1e-9 {
        return Err(Error::DegenerateEnergy { gap });
    }
    params.dist.validate()?;
    if !(params.q > 0.0 && params.q < 1.0) || n_max == 0 || m_max == 0 {
        return Err(Error::invalid("need 0 < q < 1 and N, M >= 1"));
    }
    let q = params.q;
    let lg = gap.ln();
    let inner: Vec<Estimate> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            if let ScalarDist::Atoms(a) = &params.dist {
                if a.len() == 1 {
                    return Estimate::exact(log_corner(std::iter::repeat_n(a[0].0, n), params.e));
                }
            }
            let mut rng = stream_rng(seed, n as u64);
            let k = mc_per_term.max(2);
            let xs: Vec<f64> = (0..k)
                .map(|_| {
                    let ts: Vec<f64> = (0..n).map(|_| params.dist.sample(&mut rng)).collect();
                    log_corner(ts.into_iter(), params.e)
                })
                .collect();
            Estimate::from_samples(&xs)
        })
        .collect();
    let mut value = 0.0;
    let mut covered = 0.0;
    let mut var = 0.0;
    let mut sum_m = 0.0;
    let mut sum_n = 0.0;
    let sm: f64 = (1..=m_max).map(|m| q.powi(m as i32)).sum();
    let smm: f64 = (1..=m_max).map(|m| m as f64 * q.powi(m as i32)).sum();
    for (i, est) in inner.iter().enumerate() {
        let n = i + 1;
        let pn = (1.0 - q).powi(n as i32);
        value += pn * (smm * lg + sm * est.value);
        covered += pn * sm;
        var += (pn * sm * est.stderr).powi(2);
        sum_m += pn * smm;
        sum_n += n as f64 * pn * sm;
    }
    let (lo, hi) = params.dist.hull();
    let l = [lo, hi].iter().map(|&t| schrodinger_matrix(t, params.e).operator_norm().ln().abs()).fold(0.0, f64::max);
    // Σ_{n,m ≥ 1} m q^m (1-q)^n = 1/(1-q) and Σ n q^m (1-q)^n = 1/q.
    let tail_m = (1.0 / (1.0 - q) - sum_m).max(0.0);
    let tail_n = (1.0 / q - sum_n).max(0.0);
    Ok(SeriesValue { value, covered_mass: covered, truncation_bound: tail_m * lg.abs() + tail_n * l, mc_stderr: var.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example2Settings {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    pub n_max: usize,
    pub m_max: usize,
    pub mc_per_term: usize,
    /// Node count when a continuous law has to be made discrete.
    pub discretize: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example2Row {
    pub lambda: f64,
    /// Plain Monte Carlo estimate of `L₁(λ) = q log λ + L₁(μ_β)`.
    pub l1_mc: f64,
    pub stderr: f64,
    pub q_log_lambda: f64,
    /// `q log λ + q(1-q) F` with `F` the series value.
    pub l1_formula: f64,
    /// Paired estimate of `L₁(μ_β) - L₁(μ_0)`.
    pub residual: f64,
    pub residual_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example2Report {
    pub rows: Vec<Example2Row>,
    pub series: SeriesValue,
    /// Monte Carlo `L₁(μ_0)` on the same paths.
    pub base: Estimate,
    /// `L₁(μ_0) / F`; the block-length argument predicts `q(1-q)`.
    pub ratio: f64,
    /// `base - q(1-q) F`, with `base.stderr` as its uncertainty.
    pub formula_gap: f64,
    /// Slope and `r²` of `log|residual|` against `log λ`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    /// `|r|` drops by more than three paired stderr between consecutive `λ`.
    pub strictly_decreasing: bool,
    pub realization: Realization,
}

/// Large-coupling asymptotics over a `λ` grid.
///
/// All couplings and the `β = 0` law run on the same trial streams, so the
/// residual `L₁(μ_β) - L₁(μ_0)` is estimated from per-trial differences.
pub fn example2_asymptotics(params: &MixedModelParams, lambdas: &[f64], set: &Example2Settings) -> Result<Example2Report> {
    if lambdas.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    let q = params.q;
    let spec = SpectrumSettings::new(set.steps, set.trials, set.seed, 1);
    let src_seed = derive_seed(set.seed, 1);
    let (base_src, realization) = mixed_measure(&MixedModelParams { lambda: f64::INFINITY, ..params.clone() }, set.discretize, src_seed)?;
    let x0 = top_exponent_samples(&base_src, &spec);
    let base = Estimate::from_samples(&x0);
    let series = explicit_l1_tilde0(params, set.n_max, set.m_max, set.mc_per_term, derive_seed(set.seed, 2))?;
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let p = MixedModelParams { lambda, ..params.clone() };
        p.validate()?;
        let (src, _) = mixed_measure(&p, set.discretize, src_seed)?;
        let x = top_exponent_samples(&src, &spec);
        let plain = Estimate::from_samples(&x);
        let d: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let r = Estimate::from_samples(&d);
        let qll = q * lambda.ln();
        rows.push(Example2Row {
            lambda,
            l1_mc: qll + plain.value,
            stderr: plain.stderr,
            q_log_lambda: qll,
            l1_formula: qll + q * (1.0 - q) * series.value,
            residual: r.value,
            residual_stderr: r.stderr,
        });
        diffs.push(d);
    }
    let strictly_decreasing = (1..rows.len()).all(|i| {
        let step: Vec<f64> = diffs[i - 1].iter().zip(&diffs[i]).map(|(a, b)| a - b).collect();
        let se = Estimate::from_samples(&step).stderr;
        rows[i - 1].residual.abs() - rows[i].residual.abs() > 3.0 * se
    });
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.residual != 0.0).map(|r| (r.lambda.ln(), r.residual.abs().ln())).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fit = if x.len() >= 2 { linear_fit(&x, &y) } else { None };
    Ok(Example2Report {
        rows,
        series,
        base,
        ratio: base.value / series.value,
        formula_gap: base.value - q * (1.0 - q) * series.value,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r2: fit.map(|f| f.r2),
        strictly_decreasing,
        realization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dist: ScalarDist) -> MixedModelParams {
        MixedModelParams { a: 1.0, e: 0.0, q: 0.5, lambda: 10.0, dist }
    }

    #[test]
    fn validation() {
        assert!(params(ScalarDist::Atoms(vec![(3.0, 1.0)])).validate().is_ok());
        assert!(MixedModelParams { q: 1.0, ..params(ScalarDist::Atoms(vec![(3.0, 1.0)])) }.validate().is_err());
        assert!(matches!(
            MixedModelParams { e: 1.0, ..params(ScalarDist::Atoms(vec![(3.0, 1.0)])) }.validate(),
            Err(Error::DegenerateEnergy { .. })
        ));
    }

    #[test]
    fn covered_mass_is_geometric() {
        let s = induced_measure_series(&params(ScalarDist::Atoms(vec![(3.0, 1.0)])), 2, 2, 1, 0).unwrap();
        assert!((s.covered_mass - 0.5625).abs() < 1e-15);
        let w: f64 = s.weights.iter().sum();
        assert!((w - 0.5625).abs() < 1e-15);
        let s = induced_measure_series(&params(ScalarDist::Atoms(vec![(3.0, 1.0)])), 40, 40, 1, 0).unwrap();
        assert!(1.0 - s.covered_mass < 1e-11);
    }

    #[test]
    fn single_atom_products_are_exact() {
        let p = MixedModelParams { lambda: 4.0, ..params(ScalarDist::Atoms(vec![(3.0, 1.0)])) };
        let s = induced_measure_series(&p, 3, 2, 7, 0).unwrap();
        let a = schrodinger_matrix(3.0, 0.0);
        let g = g0(1.0, 0.0, 0.25);
        let expect = g.pow(2).mul(&a.pow(3));
        let got = &s.atoms[s.atoms.len() - 1];
        assert!(got.sub(&expect).frobenius_norm() < 1e-12);
        assert_eq!(s.atoms.len(), 6);
    }

    #[test]
    fn log_corner_matches_matrix_power() {
        for n in 1..12 {
            let direct = schrodinger_matrix(2.5, 0.3).pow(n).get(0, 0).abs().ln();
            assert!((log_corner(std::iter::repeat_n(2.5, n as usize), 0.3) - direct).abs() < 1e-12);
        }
        assert!(log_corner(std::iter::repeat_n(3.0, 5000), 0.0).is_finite());
    }

    #[test]
    fn series_symmetric_in_a_minus_e() {
        let d = ScalarDist::Atoms(vec![(3.0, 1.0)]);
        let a = explicit_l1_tilde0(&MixedModelParams { a: 2.5, e: 0.5, ..params(d.clone()) }, 40, 40, 1, 0).unwrap();
        let b = explicit_l1_tilde0(&MixedModelParams { a: -1.5, e: 0.5, ..params(d) }, 40, 40, 1, 0).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.mc_stderr, 0.0);
    }

    #[test]
    fn series_matches_induced_law_exponent_at_beta_zero() {
        let p = MixedModelParams { q: 0.3, a: 1.0, e: 0.0, lambda: f64::INFINITY, dist: ScalarDist::Atoms(vec![(2.5, 1.0)]) };
        let f = explicit_l1_tilde0(&p, 120, 120, 1, 0).unwrap();
        let (mu0, _) = mixed_measure(&p, None, 0).unwrap();
        let x = Estimate::from_samples(&top_exponent_samples(&mu0, &SpectrumSettings::new(20_000, 200, 3, 1)));
        assert!((x.value - 0.21 * f.value).abs() < 4.0 * x.stderr + 1e-4, "{x:?} vs {}", 0.21 * f.value);
    }

    #[test]
    fn degenerate_energy() {
        let p = MixedModelParams { a: 0.5, e: 0.5, ..params(ScalarDist::Atoms(vec![(3.0, 1.0)])) };
        assert!(matches!(explicit_l1_tilde0(&p, 5, 5, 1, 0), Err(Error::DegenerateEnergy { .. })));
    }
}
