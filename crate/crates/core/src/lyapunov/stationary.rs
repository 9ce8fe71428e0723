use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{norm, ProjPoint};
use crate::measures::{DiscreteMatrixMeasure, MatrixSource};
use crate::rng::stream_rng;
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Chain,
    Grid,
}

/// Finitely supported measure on projective space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalProjMeasure {
    pub points: Vec<ProjPoint>,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
    /// Chain: number of restarts after `gv = 0`. Grid: number of (atom, node)
    /// pairs whose image was undefined.
    pub kernel_hits: usize,
}

impl EmpiricalProjMeasure {
    pub fn uniform(points: Vec<ProjPoint>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("empty projective measure"));
        }
        let w = 1.0 / points.len() as f64;
        Ok(EmpiricalProjMeasure { weights: vec![w; points.len()], points, provenance, kernel_hits: 0 })
    }

    pub fn dirac(v: ProjPoint) -> Self {
        EmpiricalProjMeasure { points: vec![v], weights: vec![1.0], provenance: Provenance::Chain, kernel_hits: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn expect(&self, f: impl Fn(&ProjPoint) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(v, w)| w * f(v)).sum()
    }

    /// Angles in `[0, π)` with weights, for measures on `P¹`.
    pub fn angles(&self) -> Vec<(f64, f64)> {
        self.points.iter().zip(&self.weights).map(|(v, &w)| (v.angle(), w)).collect()
    }
}

/// Run `v̂ ← ĝv̂` for `burn_in + samples` steps on stream `(seed, 0)` and
/// keep the last `samples` points.
pub fn stationary_measure_chain<S: MatrixSource + ?Sized>(
    src: &S,
    burn_in: usize,
    samples: usize,
    seed: u64,
    start: &ProjPoint,
) -> Result<EmpiricalProjMeasure> {
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let m = src.dim();
    if start.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: start.dim() });
    }
    let mut rng = stream_rng(seed, 0);
    let mut x = start.rep().to_vec();
    let mut y = vec![0.0; m];
    let mut hits = 0;
    let mut points = Vec::with_capacity(samples);
    for step in 0..burn_in + samples {
        let g = src.draw(&mut rng);
        g.apply_into(&x, &mut y);
        let n = norm(&y);
        if n <= g.kernel_tol() * 1e-3 || n == 0.0 {
            hits += 1;
            x = ProjPoint::random(m, &mut rng).rep().to_vec();
        } else {
            for (a, b) in x.iter_mut().zip(&y) {
                *a = b / n;
            }
        }
        if step >= burn_in {
            points.push(ProjPoint::new(&x)?);
        }
    }
    let mut eta = EmpiricalProjMeasure::uniform(points, Provenance::Chain)?;
    eta.kernel_hits = hits;
    Ok(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSettings {
    pub n_grid: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { n_grid: 4096, tol: 1e-10, max_iter: 200_000 }
    }
}

/// Outcome of the grid fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridStationary {
    /// Nodes `iπ/N` carrying the final masses.
    pub measure: EmpiricalProjMeasure,
    pub converged: bool,
    /// `½ Σ |η - Q*η|` of the returned measure.
    pub residual: f64,
    pub iterations: usize,
    /// True if the returned measure is the running Cesàro average rather
    /// than the last iterate.
    pub averaged: bool,
}

impl GridStationary {
    pub fn density(&self) -> &[f64] {
        &self.measure.weights
    }

    pub fn into_result(self) -> Result<EmpiricalProjMeasure> {
        if self.converged {
            Ok(self.measure)
        } else {
            Err(Error::NoConvergence { iterations: self.iterations, residual: self.residual })
        }
    }
}

/// Linear re-binning of node `i` under each atom: `(weight, lower, upper, frac)`.
pub(crate) struct GridKernel {
    pub(crate) n: usize,
    moves: Vec<Vec<(f64, usize, usize, f64)>>,
    kernel_pairs: usize,
}

impl GridKernel {
    pub(crate) fn new(mu: &DiscreteMatrixMeasure, n: usize) -> Self {
        let h = PI / n as f64;
        let mut kernel_pairs = 0;
        let moves = (0..n)
            .map(|i| {
                let (s, c) = (i as f64 * h).sin_cos();
                mu.iter()
                    .map(|(g, w)| {
                        let y = g.apply(&[c, s]);
                        if y[0].hypot(y[1]) <= g.kernel_tol() * 1e-3 {
                            kernel_pairs += 1;
                            return (w, i, i, 0.0);
                        }
                        let t = y[1].atan2(y[0]).rem_euclid(PI) / h;
                        let lo = t.floor();
                        let frac = t - lo;
                        let lo = (lo as usize) % n;
                        (w, lo, (lo + 1) % n, frac)
                    })
                    .collect()
            })
            .collect();
        GridKernel { n, moves, kernel_pairs }
    }

    /// Number of (atom, node) pairs sent to zero.
    pub(crate) fn kernel_pairs(&self) -> usize {
        self.kernel_pairs
    }

    /// `(Qφ)(i) = Σ w φ(ĝθ_i)` with `φ` interpolated linearly between nodes.
    pub(crate) fn pull(&self, phi: &[f64]) -> Vec<f64> {
        debug_assert_eq!(phi.len(), self.n);
        self.moves
            .par_iter()
            .map(|mv| mv.iter().map(|&(w, lo, hi, f)| w * ((1.0 - f) * phi[lo] + f * phi[hi])).sum())
            .collect()
    }

    pub(crate) fn push(&self, eta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &e) in eta.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            for &(w, lo, hi, f) in &self.moves[i] {
                let m = w * e;
                out[lo] += m * (1.0 - f);
                out[hi] += m * f;
            }
        }
    }

    fn residual(&self, eta: &[f64], scratch: &mut [f64]) -> f64 {
        self.push(eta, scratch);
        0.5 * eta.iter().zip(scratch.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Stationary measure of a measure on `GL₂`/`Mat₂` on an `N`-node grid of
/// `P¹`, starting from the uniform density.
///
/// Iterates `η ← Q*η` and stops once `½Σ|η - Q*η| < tol`. Periodic inputs
/// (rotations) never settle, so the Cesàro average of the iterates is
/// tracked too and returned if it meets the tolerance first.
pub fn stationary_measure_grid(mu: &DiscreteMatrixMeasure, set: &GridSettings) -> Result<GridStationary> {
    if mu.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: mu.dim() });
    }
    if set.n_grid < 2 {
        return Err(Error::invalid("n_grid must be at least 2"));
    }
    let n = set.n_grid;
    let kernel = GridKernel::new(mu, n);
    let mut eta = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut avg = eta.clone();
    let mut scratch = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut averaged = false;
    let mut iterations = 0;
    while iterations < set.max_iter {
        kernel.push(&eta, &mut next);
        residual = 0.5 * eta.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>();
        iterations += 1;
        if residual < set.tol {
            break;
        }
        std::mem::swap(&mut eta, &mut next);
        let k = (iterations + 1) as f64;
        for (a, e) in avg.iter_mut().zip(&eta) {
            *a += (e - *a) / k;
        }
        if iterations % 64 == 0 {
            let r = kernel.residual(&avg, &mut scratch);
            if r < set.tol {
                eta.copy_from_slice(&avg);
                residual = r;
                averaged = true;
                break;
            }
        }
    }
    let total: f64 = eta.iter().sum();
    eta.iter_mut().for_each(|x| *x /= total);
    let points = (0..n).map(|i| ProjPoint::from_angle(i as f64 * PI / n as f64)).collect();
    let measure = EmpiricalProjMeasure { points, weights: eta, provenance: Provenance::Grid, kernel_hits: kernel.kernel_pairs };
    Ok(GridStationary { measure, converged: residual < set.tol, residual, iterations, averaged })
}

fn arc(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % PI;
    d.min(PI - d)
}

/// Smallest `ε` with `P(d(X,Y) > ε) ≤ ε` for a coupling given as
/// `(distance, mass)` pairs.
fn ky_fan(mut pairs: Vec<(f64, f64)>) -> f64 {
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = pairs.first().map_or(0.0, |p| p.0);
    let mut tail = 0.0;
    for k in 0..pairs.len() {
        tail += pairs[k].1;
        let next = pairs.get(k + 1).map_or(0.0, |p| p.0);
        best = best.min(next.max(tail));
    }
    best
}

/// Monotone coupling of two weighted angle lists after cutting the circle
/// at `cut`.
fn quantile_coupling(a: &[(f64, f64)], b: &[(f64, f64)], cut: f64) -> Vec<(f64, f64)> {
    let shift = |v: &[(f64, f64)]| {
        let mut s: Vec<(f64, f64)> = v.iter().map(|&(t, w)| ((t - cut).rem_euclid(PI), w)).collect();
        s.sort_by(|x, y| x.0.total_cmp(&y.0));
        s
    };
    let (a, b) = (shift(a), shift(b));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut out = Vec::with_capacity(a.len() + b.len());
    loop {
        let m = ra.min(rb);
        out.push((arc(a[i].0, b[j].0), m));
        ra -= m;
        rb -= m;
        if ra <= 0.0 {
            i += 1;
            if i == a.len() {
                break;
            }
            ra = a[i].1;
        }
        if rb <= 0.0 {
            j += 1;
            if j == b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    out
}

/// Upper bound on the Lévy-Prokhorov distance between two measures on
/// `P¹` under the arc-length metric on `[0, π)`.
///
/// Any coupling's Ky Fan distance dominates the Lévy-Prokhorov distance; we
/// take the best monotone coupling over 16 cut points of the circle.
pub fn levy_prokhorov_upper(a: &EmpiricalProjMeasure, b: &EmpiricalProjMeasure) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("empty projective measure"));
    }
    let (aa, ba) = (a.angles(), b.angles());
    let best = (0..16)
        .into_par_iter()
        .map(|k| ky_fan(quantile_coupling(&aa, &ba, k as f64 * PI / 16.0)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FurstenbergEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Pairs `(g, v̂)` with `gv = 0`; when nonzero the value is `-inf`.
    pub kernel_pairs: usize,
}

impl FurstenbergEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value, stderr: self.stderr }
    }
}

/// `∬ log‖gv‖ dμ(g) dη(v̂)`, exact over both finite measures.
///
/// The stderr is zero for grid measures and a batch-means estimate (32
/// batches along the chain) for chain measures.
pub fn furstenberg_le(mu: &DiscreteMatrixMeasure, eta: &EmpiricalProjMeasure) -> Result<FurstenbergEstimate> {
    if eta.is_empty() {
        return Err(Error::invalid("empty projective measure"));
    }
    if eta.points[0].dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: eta.points[0].dim() });
    }
    let per_point: Vec<(f64, usize)> = eta
        .points
        .par_iter()
        .map(|v| {
            let mut hits = 0;
            let s = mu
                .iter()
                .map(|(g, w)| {
                    let n = norm(&g.apply(v.rep()));
                    if n == 0.0 {
                        hits += 1;
                    }
                    w * n.ln()
                })
                .sum::<f64>();
            (s, hits)
        })
        .collect();
    let kernel_pairs = per_point.iter().map(|p| p.1).sum();
    let value: f64 = per_point.iter().zip(&eta.weights).map(|(p, w)| w * p.0).sum();
    let stderr = match eta.provenance {
        Provenance::Grid => 0.0,
        Provenance::Chain => batch_means_stderr(&per_point.iter().map(|p| p.0).collect::<Vec<_>>(), 32),
    };
    Ok(FurstenbergEstimate { value, stderr, kernel_pairs })
}

/// Monte Carlo version for sources without finite support: each point of
/// `eta` is paired with `draws` fresh matrices from stream `(seed, point)`.
pub fn furstenberg_le_mc<S: MatrixSource + ?Sized>(
    src: &S,
    eta: &EmpiricalProjMeasure,
    draws: usize,
    seed: u64,
) -> Result<FurstenbergEstimate> {
    if eta.is_empty() || draws == 0 {
        return Err(Error::invalid("need a nonempty measure and draws >= 1"));
    }
    let per_point: Vec<(f64, usize)> = eta
        .points
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            let mut rng = stream_rng(seed, k as u64);
            let mut hits = 0;
            let mut s = 0.0;
            for _ in 0..draws {
                let n = norm(&src.draw(&mut rng).apply(v.rep()));
                if n == 0.0 {
                    hits += 1;
                }
                s += n.ln();
            }
            (s / draws as f64, hits)
        })
        .collect();
    let kernel_pairs = per_point.iter().map(|p| p.1).sum();
    let value = per_point.iter().zip(&eta.weights).map(|(p, w)| w * p.0).sum();
    let vals: Vec<f64> = per_point.iter().map(|p| p.0).collect();
    let stderr = match eta.provenance {
        Provenance::Chain => batch_means_stderr(&vals, 32),
        Provenance::Grid => {
            let mean: f64 = value;
            let var: f64 = vals.iter().zip(&eta.weights).map(|(x, w)| w * (x - mean).powi(2)).sum();
            (var / draws as f64).sqrt()
        }
    };
    Ok(FurstenbergEstimate { value, stderr, kernel_pairs })
}

fn batch_means_stderr(values: &[f64], batches: usize) -> f64 {
    let b = batches.min(values.len());
    if b < 2 {
        return 0.0;
    }
    let size = values.len() / b;
    let means: Vec<f64> = (0..b).map(|k| values[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    Estimate::from_samples(&means).stderr
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::SquareMatrix;
    use crate::stats::ks_distance;

    fn hyperbolic() -> DiscreteMatrixMeasure {
        DiscreteMatrixMeasure::dirac(SquareMatrix::diag(&[2.0, 0.5]).unwrap())
    }

    #[test]
    fn chain_concentrates_at_attracting_point() {
        let eta = stationary_measure_chain(&hyperbolic(), 100, 2000, 1, &ProjPoint::from_angle(1.0)).unwrap();
        let near = eta.expect(|v| if v.angle().min(PI - v.angle()) < 1e-3 { 1.0 } else { 0.0 });
        assert!(near >= 0.999);
    }

    #[test]
    fn irrational_rotation_equidistributes() {
        let theta = (5f64.sqrt() - 1.0) / 2.0 * PI;
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::rotation(theta));
        let eta = stationary_measure_chain(&mu, 0, 100_000, 3, &ProjPoint::from_angle(0.1)).unwrap();
        let angles: Vec<f64> = eta.points.iter().map(|v| v.angle()).collect();
        assert!(ks_distance(&angles, |t| (t / PI).clamp(0.0, 1.0)) <= 0.02);
    }

    #[test]
    fn chain_restarts_on_kernel() {
        let p = SquareMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let eta = stationary_measure_chain(&DiscreteMatrixMeasure::dirac(p), 0, 3, 0, &ProjPoint::basis(2, 0)).unwrap();
        assert_eq!(eta.kernel_hits, 1);
    }

    #[test]
    fn grid_identity_keeps_uniform() {
        let r = stationary_measure_grid(&DiscreteMatrixMeasure::dirac(SquareMatrix::identity(2)), &GridSettings { n_grid: 64, ..Default::default() }).unwrap();
        assert!(r.converged && r.iterations == 1);
        assert!(r.density().iter().all(|&w| (w - 1.0 / 64.0).abs() < 1e-15));
    }

    #[test]
    fn grid_hyperbolic_concentrates() {
        let r = stationary_measure_grid(&hyperbolic(), &GridSettings { n_grid: 256, ..Default::default() }).unwrap();
        assert!(r.converged);
        let d = r.density();
        assert!(d[0] >= 1.0 - 2.0 / 256.0, "{}", d[0]);
    }

    #[test]
    fn grid_rotation_uses_cesaro_average() {
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::rotation(PI / 2.0));
        let r = stationary_measure_grid(&mu, &GridSettings { n_grid: 64, ..Default::default() }).unwrap();
        assert!(r.converged && r.residual < 1e-10);
    }

    #[test]
    fn furstenberg_examples() {
        let a = furstenberg_le(&hyperbolic(), &EmpiricalProjMeasure::dirac(ProjPoint::basis(2, 0))).unwrap();
        assert!((a.value - 2f64.ln()).abs() < 1e-15);
        let b = furstenberg_le(&hyperbolic(), &EmpiricalProjMeasure::dirac(ProjPoint::basis(2, 1))).unwrap();
        assert!((b.value + 2f64.ln()).abs() < 1e-15);
        let p = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let c = furstenberg_le(&DiscreteMatrixMeasure::dirac(p), &EmpiricalProjMeasure::dirac(ProjPoint::basis(2, 1))).unwrap();
        assert_eq!(c.kernel_pairs, 1);
        assert_eq!(c.value, f64::NEG_INFINITY);
    }

    #[test]
    fn ky_fan_small_cases() {
        assert_eq!(ky_fan(vec![(0.0, 1.0)]), 0.0);
        assert!((ky_fan(vec![(0.5, 0.1), (0.0, 0.9)]) - 0.1).abs() < 1e-15);
        assert!((ky_fan(vec![(0.05, 0.5), (0.0, 0.5)]) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn levy_prokhorov_of_shifted_dirac() {
        let a = EmpiricalProjMeasure::dirac(ProjPoint::from_angle(0.01));
        let b = EmpiricalProjMeasure::dirac(ProjPoint::from_angle(PI - 0.01));
        assert!((levy_prokhorov_upper(&a, &b).unwrap() - 0.02).abs() < 1e-12);
    }
}
