use std::f64::consts::PI;

use serde::Serialize;

use super::ScalarDist;
use crate::error::{Error, Result};
use crate::measures::golden_max;

/// `∫ |t - a|^{-p} dμ(t)`; `+inf` when `a` is an atom.
pub fn frostman_integral(dist: &ScalarDist, p: f64, a: f64) -> f64 {
    match dist {
        ScalarDist::Uniform(lo, hi) => {
            let e = 1.0 - p;
            let part = |d: f64| d.signum() * d.abs().powf(e);
            if a <= *lo || a >= *hi {
                (part(hi - a) - part(lo - a)).abs() / (e * (hi - lo))
            } else {
                (part(a - lo) + part(hi - a)) / (e * (hi - lo))
            }
        }
        ScalarDist::Atoms(pts) => pts
            .iter()
            .map(|&(t, w)| if t == a { if w > 0.0 { f64::INFINITY } else { 0.0 } } else { w * (t - a).abs().powf(-p) })
            .sum(),
        ScalarDist::Gaussian(mean, sd) => {
            // With u = |t - a|^{1-p} the singular factor cancels:
            // ∫ |t-a|^{-p} f(t) dt = (1/(1-p)) Σ_± ∫_0^∞ f(a ± u^{1/(1-p)}) du.
            let e = 1.0 - p;
            let f = |t: f64| (-0.5 * ((t - mean) / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt());
            let reach = (a - mean).abs() + 12.0 * sd;
            let umax = reach.powf(e);
            let g = |u: f64| {
                let d = u.powf(1.0 / e);
                f(a + d) + f(a - d)
            };
            simpson(&g, 0.0, umax, 20_000) / e
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrostmanReport {
    pub sup: f64,
    pub argmax: f64,
    /// `(a, integral)` on the input grid.
    pub table: Vec<(f64, f64)>,
}

/// `sup_a ∫ |t - a|^{-p} dμ(t)` over `a_grid`, refined by golden-section
/// search between the neighbours of the best grid point down to `1e-5`.
pub fn frostman_moment(dist: &ScalarDist, p: f64, a_grid: &[f64]) -> Result<FrostmanReport> {
    dist.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    if a_grid.is_empty() {
        return Err(Error::invalid("empty a grid"));
    }
    let table: Vec<(f64, f64)> = a_grid.iter().map(|&a| (a, frostman_integral(dist, p, a))).collect();
    let (k, &(mut argmax, mut sup)) = table.iter().enumerate().max_by(|x, y| x.1 .1.total_cmp(&y.1 .1)).expect("nonempty");
    if sup.is_finite() && a_grid.len() > 1 {
        let lo = a_grid[k.saturating_sub(1)];
        let hi = a_grid[(k + 1).min(a_grid.len() - 1)];
        let iters = (((hi - lo) / 1e-5).max(1.0).ln() / 0.381_966_011_250_105_1_f64.recip().ln()).ceil() as usize + 2;
        let (x, fx) = golden_max(&|a| frostman_integral(dist, p, a), lo, hi, iters);
        if fx > sup {
            sup = fx;
            argmax = x;
        }
    }
    Ok(FrostmanReport { sup, argmax, table })
}
