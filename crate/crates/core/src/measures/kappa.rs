use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::search::{golden_max, sphere_max, SphereSearch};
use super::DiscreteMatrixMeasure;
use crate::error::{Error, Result};
use crate::matcore::ProjPoint;
use crate::rng::stream_rng;

/// Pair grid for the contraction coefficient.
///
/// On `P¹`: `n_angle` near-diagonal pairs `(θ, θ + offset)` refined by
/// golden-section search, plus all pairs of a `coarse × coarse` grid. In
/// higher dimension: `random_pairs` random pairs (half of them at distance
/// about `offset`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSearch {
    pub n_angle: usize,
    pub coarse: usize,
    pub offset: f64,
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for PairSearch {
    fn default() -> Self {
        PairSearch { n_angle: 4096, coarse: 256, offset: 1e-7, random_pairs: 4096, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaReport {
    /// Largest pair ratio found (a lower bound of `κ_α`).
    pub estimate: f64,
    /// `sup_v ∫ (‖∧²g‖ / ‖gv‖²)^α dμ` by sphere search.
    pub upper_bound: f64,
    pub argmax: (ProjPoint, ProjPoint),
    /// Pairs skipped because some atom annihilated one of the points.
    pub skipped_pairs: usize,
    pub kernel_flag: bool,
}

fn wedge_norm(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let x = a[i] * b[j] - a[j] * b[i];
            s += x * x;
        }
    }
    s.sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `∫ [d(ĝv̂, ĝŵ) / d(v̂, ŵ)]^α dμ`, or `None` on a kernel hit.
fn pair_ratio(mu: &DiscreteMatrixMeasure, alpha: f64, v: &[f64], w: &[f64]) -> Option<f64> {
    let d = wedge_norm(v, w) / (norm(v) * norm(w));
    if d == 0.0 {
        return None;
    }
    let m = mu.dim();
    let (mut gv, mut gw) = (vec![0.0; m], vec![0.0; m]);
    let mut total = 0.0;
    for (g, wt) in mu.iter() {
        g.apply_into(v, &mut gv);
        g.apply_into(w, &mut gw);
        let (nv, nw) = (norm(&gv), norm(&gw));
        let tol = g.kernel_tol();
        if nv < tol || nw < tol {
            return None;
        }
        let dg = wedge_norm(&gv, &gw) / (nv * nw);
        total += wt * (dg / d).powf(alpha);
    }
    Some(total)
}

/// Contraction coefficient `κ_α(μ) = sup_{v̂≠ŵ} ∫ [d(ĝv̂,ĝŵ)/d(v̂,ŵ)]^α dμ`.
pub fn kappa_alpha(mu: &DiscreteMatrixMeasure, alpha: f64, search: &PairSearch) -> Result<KappaReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let m = mu.dim();
    if m < 2 {
        return Err(Error::invalid("the projective space of R^1 is a point"));
    }
    let (estimate, argmax, skipped) = if m == 2 { circle_pairs(mu, alpha, search) } else { random_pairs(mu, alpha, search) };
    let upper_bound = wedge_upper_bound(mu, alpha, search);
    Ok(KappaReport { estimate, upper_bound, argmax, skipped_pairs: skipped, kernel_flag: skipped > 0 })
}

fn at(t: f64) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    [c, s]
}

type PairBest = (f64, (f64, f64), usize);

fn merge(a: PairBest, b: PairBest) -> PairBest {
    let best = if b.0 > a.0 || a.0.is_nan() { (b.0, b.1) } else { (a.0, a.1) };
    (best.0, best.1, a.2 + b.2)
}

fn circle_pairs(mu: &DiscreteMatrixMeasure, alpha: f64, s: &PairSearch) -> (f64, (ProjPoint, ProjPoint), usize) {
    let h = s.offset;
    let step = PI / s.n_angle as f64;
    let near = |t: f64| pair_ratio(mu, alpha, &at(t), &at(t + h));
    let init: PairBest = (f64::NAN, (0.0, 0.0), 0);
    let diag = (0..s.n_angle)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * step;
            match near(t) {
                Some(r) => (r, (t, t + h), 0),
                None => (f64::NAN, (t, t), 1),
            }
        })
        .reduce(|| init, merge);
        let c = s.coarse;
    let cstep = PI / c as f64;
    let coarse = (0..c)
        .into_par_iter()
        .map(|i| {
            let mut acc: PairBest = init;
            for j in (i + 1)..c {
                let (a, b) = (i as f64 * cstep, j as f64 * cstep);
                acc = merge(
                    acc,
                    match pair_ratio(mu, alpha, &at(a), &at(b)) {
                        Some(r) => (r, (a, b), 0),
                        None => (f64::NAN, (a, b), 1),
                    },
                );
            }
            acc
        })
        .reduce(|| init, merge);
    let mut best = merge(diag, coarse);
    if !diag.0.is_nan() {
        let t0 = diag.1 .0;
        let (t, r) = golden_max(&|t| near(t).unwrap_or(f64::NEG_INFINITY), t0 - step, t0 + step, 80);
        if r > best.0 {
            best.0 = r;
            best.1 = (t, t + h);
        }
    }
    let pair = (ProjPoint::from_angle(best.1 .0), ProjPoint::from_angle(best.1 .1));
    (best.0, pair, best.2)
}

fn random_pairs(mu: &DiscreteMatrixMeasure, alpha: f64, s: &PairSearch) -> (f64, (ProjPoint, ProjPoint), usize) {
    let m = mu.dim();
    let (best, pair, skipped) = (0..s.random_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(s.seed, i as u64);
            let v = ProjPoint::random(m, &mut rng).rep().to_vec();
            let u = ProjPoint::random(m, &mut rng).rep().to_vec();
            let w: Vec<f64> = if i % 2 == 0 { v.iter().zip(&u).map(|(a, b)| a + s.offset * b).collect() } else { u };
            match pair_ratio(mu, alpha, &v, &w) {
                Some(r) => (r, (v, w), 0usize),
                None => (f64::NAN, (v, w), 1),
            }
        })
        .reduce(
            || (f64::NAN, (vec![1.0; m], vec![1.0; m]), 0),
            |a, b| {
                let n = a.2 + b.2;
                if b.0 > a.0 || a.0.is_nan() {
                    (b.0, b.1, n)
                } else {
                    (a.0, a.1, n)
                }
            },
        );
    let p = |v: &[f64]| ProjPoint::new(v).unwrap_or_else(|_| ProjPoint::basis(m, 0));
    (best, (p(&pair.0), p(&pair.1)), skipped)
}

fn wedge_upper_bound(mu: &DiscreteMatrixMeasure, alpha: f64, s: &PairSearch) -> f64 {
    let wedge: Vec<f64> = mu
        .atoms()
        .iter()
        .map(|g| {
            let sv = g.singular_values();
            sv[0] * sv[1]
        })
        .collect();
    for (g, &w2) in mu.atoms().iter().zip(&wedge) {
        if w2 > 0.0 && g.singular_values()[g.dim() - 1] < g.kernel_tol() {
            return f64::INFINITY;
        }
    }
    let m = mu.dim();
    let f = |v: &[f64]| {
        let mut gv = vec![0.0; m];
        mu.iter()
            .zip(&wedge)
            .map(|((g, w), &w2)| {
                if w2 == 0.0 {
                    return 0.0;
                }
                g.apply_into(v, &mut gv);
                w * (w2 / gv.iter().map(|x| x * x).sum::<f64>()).powf(alpha)
            })
            .sum::<f64>()
    };
    let sphere = SphereSearch { n_angle: s.n_angle, starts: 64, seed: s.seed };
    let candidates: Vec<Vec<f64>> = mu.atoms().iter().take(256).map(|g| g.svd().v_col(m - 1).to_vec()).collect();
    sphere_max(m, f, &sphere, &candidates).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::SquareMatrix;
    use crate::measures::theta_under;

    #[test]
    fn identity_is_neutral() {
        let r = kappa_alpha(&DiscreteMatrixMeasure::dirac(SquareMatrix::identity(2)), 0.3, &PairSearch::default())
            .unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-6);
        assert!((r.upper_bound - 1.0).abs() < 1e-12);
        assert!(!r.kernel_flag);
    }

    #[test]
    fn hyperbolic_atom_reaches_inverse_contraction() {
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::diag(&[2.0, 0.5]).unwrap());
        let r = kappa_alpha(&mu, 0.5, &PairSearch::default()).unwrap();
        assert!((r.estimate - 2.0).abs() < 1e-6, "{}", r.estimate);
        assert!((r.upper_bound - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_matches_negative_moment() {
        let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::rotation(0.7));
        let r = kappa_alpha(&mu, 0.5, &PairSearch::default()).unwrap();
        let (t, _) = theta_under(&mu, 1.0, &SphereSearch::default()).unwrap();
        assert!(r.estimate >= 1.0 - 1e-6);
        assert!((r.estimate - t).abs() < 1e-3);
    }

    #[test]
    fn singular_atom_sets_kernel_flag() {
        let p = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = kappa_alpha(&DiscreteMatrixMeasure::dirac(p), 0.5, &PairSearch::default()).unwrap();
        assert!(r.kernel_flag);
        assert!(r.skipped_pairs > 0);
    }

    #[test]
    fn three_dimensional_estimate_stays_below_upper_bound() {
        let mut rng = stream_rng(31, 0);
        let mu = DiscreteMatrixMeasure::uniform(vec![
            SquareMatrix::random_gaussian(3, &mut rng),
            SquareMatrix::random_gaussian(3, &mut rng),
        ])
        .unwrap();
        let r = kappa_alpha(&mu, 0.5, &PairSearch { random_pairs: 2000, ..Default::default() }).unwrap();
        assert!(r.estimate > 0.0);
        assert!(r.estimate <= r.upper_bound * (1.0 + 1e-9));
    }
}
