use rayon::prelude::*;
use serde::Serialize;

use super::search::{grassmann_max, sphere_max, GrassmannSearch, SphereSearch};
use super::{DiscreteMatrixMeasure, MatrixSource};
use crate::error::{Error, Result};
use crate::matcore::{Frame, ProjPoint, SquareMatrix};
use crate::rng::stream_rng;
use crate::stats::Estimate;

const MC_BLOCK: usize = 1024;

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("moment exponent must be positive, got {p}")));
    }
    Ok(())
}

/// `Θ̄_p(μ) = ∫ ‖g‖^p dμ`.
pub fn theta_bar(mu: &DiscreteMatrixMeasure, p: f64) -> f64 {
    mu.expect(|g| g.operator_norm().powf(p))
}

/// Monte Carlo mean of `f(g)` over `samples` draws, in blocks of 1024 per
/// stream so that the result does not depend on the thread count.
pub fn mc_expectation<S, F>(src: &S, samples: usize, seed: u64, f: F) -> Estimate
where
    S: MatrixSource + ?Sized,
    F: Fn(&SquareMatrix) -> f64 + Sync,
{
    let blocks = samples.div_ceil(MC_BLOCK);
    let values: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let len = MC_BLOCK.min(samples - b * MC_BLOCK);
            (0..len).map(|_| f(&src.draw(&mut rng))).collect::<Vec<_>>()
        })
        .collect();
    Estimate::from_samples(&values)
}

/// Sampled `Θ̄_p`.
pub fn theta_bar_mc<S: MatrixSource + ?Sized>(src: &S, p: f64, samples: usize, seed: u64) -> Estimate {
    mc_expectation(src, samples, seed, |g| g.operator_norm().powf(p))
}

/// `∫ ‖g v‖^{-p} dμ` at a fixed direction.
pub fn theta_under_at(mu: &DiscreteMatrixMeasure, p: f64, v: &[f64]) -> f64 {
    let mut buf = vec![0.0; mu.dim()];
    mu.expect(|g| {
        g.apply_into(v, &mut buf);
        buf.iter().map(|x| x * x).sum::<f64>().powf(-0.5 * p)
    })
}

/// Fails with `InfiniteMoment` if some atom is numerically singular.
fn singular_direction(mu: &DiscreteMatrixMeasure) -> Result<()> {
    for g in mu.atoms() {
        let svd = g.svd();
        let m = g.dim();
        if svd.s[m - 1] < g.kernel_tol() {
            return Err(Error::InfiniteMoment { direction: svd.v_col(m - 1).to_vec() });
        }
    }
    Ok(())
}

const MAX_CANDIDATE_ATOMS: usize = 256;

/// `Θ̲_p(μ) = sup_{‖v‖=1} ∫ ‖g v‖^{-p} dμ`, as a searched lower bound with
/// its maximiser.
pub fn theta_under(mu: &DiscreteMatrixMeasure, p: f64, search: &SphereSearch) -> Result<(f64, ProjPoint)> {
    check_p(p)?;
    singular_direction(mu)?;
    let m = mu.dim();
    let candidates: Vec<Vec<f64>> =
        mu.atoms().iter().take(MAX_CANDIDATE_ATOMS).map(|g| g.svd().v_col(m - 1).to_vec()).collect();
    let r = sphere_max(m, |v| theta_under_at(mu, p, v), search, &candidates);
    Ok((r.value, r.argmax))
}

/// `∫ |det(g|F)|^{-p} dμ` for the span `F` of `frame`.
pub fn theta_under_k_at(mu: &DiscreteMatrixMeasure, p: f64, frame: &Frame) -> f64 {
    mu.expect(|g| g.restricted_det(frame).powf(-p))
}

/// `Θ̲^k_p(μ) = sup_{F ∈ Gr_k} ∫ |det(g|F)|^{-p} dμ`, searched lower bound.
/// For `k = m` the integrand does not depend on `F` and the value is exact.
pub fn theta_under_k(mu: &DiscreteMatrixMeasure, p: f64, k: usize, search: &GrassmannSearch) -> Result<f64> {
    check_p(p)?;
    let m = mu.dim();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("k={k} outside 1..={m}")));
    }
    singular_direction(mu)?;
    let candidates: Vec<Frame> = mu
        .atoms()
        .iter()
        .take(MAX_CANDIDATE_ATOMS)
        .filter_map(|g| {
            let svd = g.svd();
            let cols: Vec<f64> = (m - k..m).flat_map(|c| svd.v_col(c).to_vec()).collect();
            Frame::from_columns(m, k, &cols).ok()
        })
        .collect();
    let (v, _) = grassmann_max(m, k, |f| theta_under_k_at(mu, p, f), search, &candidates);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub p: f64,
    pub theta_bar: f64,
    pub theta_under: f64,
    pub theta_under_argmax: ProjPoint,
    /// Smallest `C` with both functionals at most `C`.
    pub in_mpc_for: f64,
}

pub fn moment_report(mu: &DiscreteMatrixMeasure, p: f64, search: &SphereSearch) -> Result<MomentReport> {
    check_p(p)?;
    let tb = theta_bar(mu, p);
    let (tu, arg) = theta_under(mu, p, search)?;
    Ok(MomentReport { p, theta_bar: tb, theta_under: tu, theta_under_argmax: arg, in_mpc_for: tb.max(tu) })
}

fn in_bt(g: &SquareMatrix, v: &[f64], t: f64, buf: &mut [f64]) -> Option<f64> {
    g.apply_into(v, buf);
    let lv = buf.iter().map(|x| x * x).sum::<f64>().sqrt().ln();
    (lv < -t || g.operator_norm().ln() > t).then_some(lv)
}

/// `μ(B_T(v̂))` with `B_T(v̂) = {log‖gv‖ < -T or log‖g‖ > T}`.
pub fn bt_mass(mu: &DiscreteMatrixMeasure, v: &ProjPoint, t: f64) -> f64 {
    let mut buf = vec![0.0; mu.dim()];
    mu.expect(|g| if in_bt(g, v.rep(), t, &mut buf).is_some() { 1.0 } else { 0.0 })
}

/// Sampled `μ(B_T(v̂))`.
pub fn bt_mass_mc<S: MatrixSource + ?Sized>(src: &S, v: &ProjPoint, t: f64, samples: usize, seed: u64) -> Estimate {
    mc_expectation(src, samples, seed, |g| {
        let mut buf = vec![0.0; g.dim()];
        if in_bt(g, v.rep(), t, &mut buf).is_some() {
            1.0
        } else {
            0.0
        }
    })
}

/// `∫_{B_T(v̂)} |log‖gv‖| dμ`.
pub fn bt_integral(mu: &DiscreteMatrixMeasure, v: &ProjPoint, t: f64) -> f64 {
    let mut buf = vec![0.0; mu.dim()];
    mu.expect(|g| in_bt(g, v.rep(), t, &mut buf).map_or(0.0, f64::abs))
}

/// Both sides of the intermediate moment bound
/// `Θ̲^j_p ≤ √Θ̄_{2j²p/(k-j)} · √Θ̲^k_{2pj/(k-j)}`.
///
/// The left side is a search lower bound; the right side is exact only for
/// `k = m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentBound {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn intermediate_moment_bound(
    mu: &DiscreteMatrixMeasure,
    p: f64,
    j: usize,
    k: usize,
    search: &GrassmannSearch,
) -> Result<MomentBound> {
    if !(1 <= j && j < k && k <= mu.dim()) {
        return Err(Error::invalid(format!("need 1 <= j < k <= m, got j={j} k={k}")));
    }
    let r = (k - j) as f64;
    let jf = j as f64;
    let lhs = theta_under_k(mu, p, j, search)?;
    let rhs = theta_bar(mu, 2.0 * jf * jf * p / r).sqrt() * theta_under_k(mu, 2.0 * p * jf / r, k, search)?.sqrt();
    Ok(MomentBound { lhs, rhs })
}
