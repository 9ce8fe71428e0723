//! Large-deviation tails of `(1/n) log‖Aⁿv‖` and exponential rate fits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{norm, ProjPoint};
use crate::measures::MatrixSource;
use crate::rng::stream_rng;
use crate::stats::{linear_fit, wilson_interval, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub n: usize,
    pub epsilon: f64,
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    /// Wilson 95% interval; with no hits the upper end is `3/trials`.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTable {
    pub rows: Vec<TailRow>,
}

impl TailTable {
    fn from_counts(cells: &[(usize, f64)], hits: &[u64], trials: u64) -> Self {
        let rows = cells
            .iter()
            .zip(hits)
            .map(|(&(n, epsilon), &h)| {
                let (lo, hi) = if h == 0 { (0.0, 3.0 / trials as f64) } else { wilson_interval(h, trials, Z95) };
                TailRow { n, epsilon, trials, hits: h, p_hat: h as f64 / trials as f64, ci_lo: lo, ci_hi: hi }
            })
            .collect();
        TailTable { rows }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        let mut e: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !e.contains(&r.epsilon) {
                e.push(r.epsilon);
            }
        }
        e
    }
}

/// Tail frequencies on arbitrary `(n, ε)` cells. Every trial runs one path
/// to the largest `n` on stream `(seed, trial)` and is scored against all
/// cells, so rows of one table share their paths.
pub fn ld_tail_cells<S: MatrixSource + ?Sized>(
    src: &S,
    v0: &ProjPoint,
    l1_ref: f64,
    cells: &[(usize, f64)],
    trials: u64,
    seed: u64,
) -> Result<TailTable> {
    if trials == 0 || cells.is_empty() {
        return Err(Error::invalid("need trials >= 1 and at least one (n, epsilon) cell"));
    }
    if cells.iter().any(|&(n, e)| n == 0 || !(e > 0.0)) {
        return Err(Error::invalid("cells need n >= 1 and epsilon > 0"));
    }
    if v0.dim() != src.dim() {
        return Err(Error::DimensionMismatch { expected: src.dim(), found: v0.dim() });
    }
    let n_max = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let mut ns: Vec<usize> = cells.iter().map(|c| c.0).collect();
    ns.sort_unstable();
    ns.dedup();
    let m = src.dim();
    let hits = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; cells.len()],
            |mut acc, t| {
                let mut rng = stream_rng(seed, t);
                let mut x = v0.rep().to_vec();
                let mut y = vec![0.0; m];
                let mut log_norm = 0.0;
                let mut at = vec![0.0; ns.len()];
                let mut next = 0;
                for step in 1..=n_max {
                    let g = src.draw(&mut rng);
                    g.apply_into(&x, &mut y);
                    let r = norm(&y);
                    if r == 0.0 {
                        for v in &mut at[next..] {
                            *v = f64::NEG_INFINITY;
                        }
                        break;
                    }
                    log_norm += r.ln();
                    for (a, b) in x.iter_mut().zip(&y) {
                        *a = b / r;
                    }
                    if ns[next] == step {
                        at[next] = log_norm / step as f64;
                        next += 1;
                    }
                }
                for (k, &(n, e)) in cells.iter().enumerate() {
                    let idx = ns.binary_search(&n).expect("n listed");
                    if (at[idx] - l1_ref).abs() > e {
                        acc[k] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| vec![0u64; cells.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(TailTable::from_counts(cells, &hits, trials))
}

/// Tail frequencies on the full grid `n_list × eps_list`.
pub fn ld_tail<S: MatrixSource + ?Sized>(
    src: &S,
    v0: &ProjPoint,
    l1_ref: f64,
    n_list: &[usize],
    eps_list: &[f64],
    trials: u64,
    seed: u64,
) -> Result<TailTable> {
    let cells: Vec<(usize, f64)> = eps_list.iter().flat_map(|&e| n_list.iter().map(move |&n| (n, e))).collect();
    ld_tail_cells(src, v0, l1_ref, &cells, trials, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub epsilon: f64,
    /// Slope of `-log p̂ - ½ log n` against `n`.
    pub c_hat: f64,
    /// `p̂ ≈ C n^{-1/2} e^{-c n}`.
    pub c_const: f64,
    pub r2: f64,
    pub rows_used: usize,
    /// `ĉ(ε) log(1/ε) / ε²`.
    pub shape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub rows: Vec<RateRow>,
    /// `ĉ(ε)` increases with `ε`.
    pub monotone: bool,
}

/// Per `ε`, least squares of `-log p̂ - ½ log n` on `n` over rows with
/// `0 < p̂ < 1`, i.e. the model `p̂ ≈ C n^{-1/2} e^{-c n}`.
pub fn fit_rate(table: &TailTable) -> Result<RateFit> {
    let mut rows = Vec::new();
    for eps in table.epsilons() {
        let used: Vec<&TailRow> = table.rows.iter().filter(|r| r.epsilon == eps && r.hits > 0 && r.hits < r.trials).collect();
        if used.len() < 4 {
            return Err(Error::InsufficientData(format!("epsilon {eps}: {} usable rows, need 4", used.len())));
        }
        let x: Vec<f64> = used.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = used.iter().map(|r| -r.p_hat.ln() - 0.5 * (r.n as f64).ln()).collect();
        let f = linear_fit(&x, &y).ok_or_else(|| Error::InsufficientData(format!("epsilon {eps}: degenerate fit")))?;
        rows.push(RateRow {
            epsilon: eps,
            c_hat: f.slope,
            c_const: (-f.intercept).exp(),
            r2: f.r2,
            rows_used: used.len(),
            shape: f.slope * (1.0 / eps).ln() / (eps * eps),
        });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let monotone = sorted.windows(2).all(|w| w[1].c_hat > w[0].c_hat);
    Ok(RateFit { rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::SquareMatrix;
    use crate::measures::DiscreteMatrixMeasure;

    #[test]
    fn deterministic_tails_are_zero_or_one() {
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 0.5]]).unwrap());
        let t = ld_tail(&mu, &ProjPoint::basis(2, 1), 2f64.ln(), &[1, 5, 200], &[0.05], 50, 0).unwrap();
        assert!(t.rows.iter().all(|r| r.p_hat == 0.0 || r.p_hat == 1.0));
        assert_eq!(t.rows[0].p_hat, 1.0);
        assert_eq!(t.rows[2].p_hat, 0.0);
        assert_eq!(t.rows[2].ci_hi, 3.0 / 50.0);
        assert!(matches!(fit_rate(&t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn p_hat_is_hit_fraction() {
        let mu = DiscreteMatrixMeasure::uniform(vec![SquareMatrix::diag(&[3.0, 1.0]).unwrap(), SquareMatrix::diag(&[1.0, 3.0]).unwrap()]).unwrap();
        let t = ld_tail(&mu, &ProjPoint::basis(2, 0), 0.5 * 3f64.ln(), &[10, 20], &[0.1, 0.2], 1000, 4).unwrap();
        for r in &t.rows {
            assert_eq!(r.p_hat, r.hits as f64 / 1000.0);
            assert!(r.ci_lo <= r.p_hat && r.p_hat <= r.ci_hi);
        }
    }

    #[test]
    fn rejects_empty_plans() {
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::identity(2));
        assert!(ld_tail(&mu, &ProjPoint::basis(2, 0), 0.0, &[], &[0.1], 10, 0).is_err());
        assert!(ld_tail(&mu, &ProjPoint::basis(2, 0), 0.0, &[3], &[0.1], 0, 0).is_err());
    }
}
