//! Finite-instance checks of the almost-Hölder continuity estimates for
//! `μ ↦ ∫ ψ dμ`.

use serde::Serialize;

use super::wasserstein_p;
use crate::error::{Error, Result};
use crate::matcore::SquareMatrix;
use crate::measures::{theta_bar, DiscreteMatrixMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderReport {
    /// `|∫ψ dμ - ∫ψ dν|`.
    pub lhs: f64,
    /// `L · W_p(μ, ν)`.
    pub leading: f64,
    pub remainder: f64,
    pub rhs: f64,
    pub mass_mu: f64,
    pub mass_nu: f64,
    pub holds: bool,
}

impl HolderReport {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// `ψ̄ = clamp(ψ, -T, T)`.
pub fn truncate_observable<F: Fn(&SquareMatrix) -> f64>(psi: F, t: f64) -> impl Fn(&SquareMatrix) -> f64 {
    move |g| psi(g).clamp(-t, t)
}

/// Largest `|ψ(x) - ψ(y)| / ‖x - y‖^p` over pairs of distinct points.
pub fn pairwise_holder_constant(points: &[&SquareMatrix], psi: &dyn Fn(&SquareMatrix) -> f64, p: f64) -> f64 {
    let vals: Vec<f64> = points.iter().map(|g| psi(g)).collect();
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = points[i].sub(points[j]).operator_norm();
            let dv = (vals[i] - vals[j]).abs();
            if d == 0.0 {
                if dv > 0.0 && !dv.is_nan() {
                    return f64::INFINITY;
                }
                continue;
            }
            let r = if dv.is_nan() { f64::INFINITY } else { dv / d.powf(p) };
            best = best.max(r);
        }
    }
    best
}

fn check_pairwise(points: &[&SquareMatrix], psi: &dyn Fn(&SquareMatrix) -> f64, l: f64, p: f64, what: &str) -> Result<()> {
    let c = pairwise_holder_constant(points, psi, p);
    if c > l * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::HypothesisViolated(format!("{what}: pairwise Hölder constant {c} exceeds L = {l}")));
    }
    Ok(())
}

fn l2(mu: &DiscreteMatrixMeasure, psi: &dyn Fn(&SquareMatrix) -> f64) -> f64 {
    mu.expect(|g| psi(g).powi(2)).sqrt()
}

fn integral(mu: &DiscreteMatrixMeasure, psi: &dyn Fn(&SquareMatrix) -> f64) -> f64 {
    mu.expect(psi)
}

/// `|∫ψdμ - ∫ψdν| ≤ L {W_p(μ,ν) + 4√μ(B)(‖ψ‖_{L²(μ)} + Θ̄_{2p}(μ)^{1/2}) + (same for ν)}`
/// for `ψ` that is `L`-Hölder of order `p` off the set `B`.
///
/// Requires `L ≥ 1` and `0 < p ≤ 1/2`; the estimate assumes small `μ(B)`,
/// `ν(B)` (it is guaranteed for masses up to `1/4`).
pub fn holder_modulus_check_i(
    psi: &dyn Fn(&SquareMatrix) -> f64,
    in_b: &dyn Fn(&SquareMatrix) -> bool,
    l: f64,
    p: f64,
    mu: &DiscreteMatrixMeasure,
    nu: &DiscreteMatrixMeasure,
) -> Result<HolderReport> {
    if !(l >= 1.0) || !(p > 0.0 && p <= 0.5) {
        return Err(Error::invalid("requires L >= 1 and 0 < p <= 1/2"));
    }
    let outside: Vec<&SquareMatrix> = mu.atoms().iter().chain(nu.atoms()).filter(|g| !in_b(g)).collect();
    check_pairwise(&outside, psi, l, p, "ψ off B")?;
    let (w, _) = wasserstein_p(mu, nu, p)?;
    let (bm, bn) = (mu.mass_where(in_b), nu.mass_where(in_b));
    let lhs = (integral(mu, psi) - integral(nu, psi)).abs();
    let xi = |m: &DiscreteMatrixMeasure, mass: f64| mass.sqrt() * (l2(m, psi) + theta_bar(m, 2.0 * p).sqrt());
    let leading = l * w;
    let remainder = l * 4.0 * (xi(mu, bm) + xi(nu, bn));
    let rhs = leading + remainder;
    Ok(HolderReport { lhs, leading, remainder, rhs, mass_mu: bm, mass_nu: bn, holds: lhs <= rhs + 1e-12 })
}

/// `|∫ψdμ - ∫ψdν| ≤ L W_p + √μ(B)‖ψ‖_{L²(μ)} + √ν(B)‖ψ‖_{L²(ν)} + T(μ(B) + ν(B))`
/// with `B = {|ψ| > T}`.
///
/// On finitely many atoms the hypothesis is checked twice: `ψ` is
/// `L`-Hölder off `B`, and the truncation `clamp(ψ, -T, T)` is `L`-Hölder on
/// all atoms.
pub fn holder_modulus_check_ii(
    psi: &dyn Fn(&SquareMatrix) -> f64,
    t: f64,
    l: f64,
    p: f64,
    mu: &DiscreteMatrixMeasure,
    nu: &DiscreteMatrixMeasure,
) -> Result<HolderReport> {
    if !(p > 0.0 && p <= 1.0) || !(t >= 0.0) || !(l >= 0.0) {
        return Err(Error::invalid("requires 0 < p <= 1, T >= 0, L >= 0"));
    }
    let in_b = |g: &SquareMatrix| !(psi(g).abs() <= t);
    let all: Vec<&SquareMatrix> = mu.atoms().iter().chain(nu.atoms()).collect();
    let outside: Vec<&SquareMatrix> = all.iter().copied().filter(|g| !in_b(g)).collect();
    check_pairwise(&outside, psi, l, p, "ψ off B")?;
    let clipped = |g: &SquareMatrix| psi(g).clamp(-t, t);
    check_pairwise(&all, &clipped, l, p, "truncated ψ")?;
    let (w, _) = wasserstein_p(mu, nu, p)?;
    let (bm, bn) = (mu.mass_where(in_b), nu.mass_where(in_b));
    let lhs = (integral(mu, psi) - integral(nu, psi)).abs();
    let leading = l * w;
    let remainder = bm.sqrt() * l2(mu, psi) + bn.sqrt() * l2(nu, psi) + t * (bm + bn);
    let rhs = leading + remainder;
    let holds = lhs <= rhs + 1e-12 || (lhs.is_nan() && rhs.is_infinite());
    Ok(HolderReport { lhs, leading, remainder, rhs, mass_mu: bm, mass_nu: bn, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random_measure(seed: u64, atoms: usize) -> DiscreteMatrixMeasure {
        let mut rng = stream_rng(seed, 0);
        let a = (0..atoms).map(|_| SquareMatrix::random_gaussian(2, &mut rng)).collect();
        let w = (0..atoms).map(|_| rng.random_range(0.2..1.0)).collect();
        DiscreteMatrixMeasure::from_unnormalized(a, w).unwrap()
    }

    #[test]
    fn zero_observable_and_equal_measures() {
        let mu = random_measure(1, 4);
        let nu = random_measure(2, 4);
        let zero = |_: &SquareMatrix| 0.0;
        let none = |_: &SquareMatrix| false;
        let r = holder_modulus_check_i(&zero, &none, 1.0, 0.5, &mu, &nu).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        let norm = |g: &SquareMatrix| g.operator_norm().sqrt();
        let r = holder_modulus_check_i(&norm, &none, 1.0, 0.5, &mu, &mu).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.leading, 0.0);
    }

    #[test]
    fn norm_power_with_top_atom_removed() {
        let p = 0.5;
        for seed in 0..50 {
            let mu = random_measure(100 + seed, 4);
            let nu = random_measure(200 + seed, 4);
            let top = mu.atoms().iter().chain(nu.atoms()).map(|g| g.operator_norm()).fold(0.0, f64::max);
            let psi = move |g: &SquareMatrix| g.operator_norm().powf(p);
            let in_b = move |g: &SquareMatrix| g.operator_norm() >= top;
            // ‖·‖^p is 1-Hölder of order p everywhere
            let r = holder_modulus_check_i(&psi, &in_b, 1.0, p, &mu, &nu).unwrap();
            assert!(r.holds, "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn violated_hypothesis_is_reported() {
        let mu = random_measure(3, 3);
        let nu = random_measure(4, 3);
        let wild = |g: &SquareMatrix| 1e6 * g.get(0, 0);
        let none = |_: &SquareMatrix| false;
        assert!(matches!(holder_modulus_check_i(&wild, &none, 1.0, 0.5, &mu, &nu), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn large_threshold_reduces_to_leading_term() {
        let mu = random_measure(5, 3);
        let nu = random_measure(6, 3);
        let psi = |g: &SquareMatrix| g.operator_norm().powf(0.5);
        let r = holder_modulus_check_ii(&psi, 1e6, 1.0, 0.5, &mu, &nu).unwrap();
        assert_eq!(r.mass_mu + r.mass_nu, 0.0);
        assert_eq!(r.remainder, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn log_observable_with_near_singular_atom() {
        let e1 = [1.0, 0.0];
        let psi = move |g: &SquareMatrix| {
            let v = g.apply(&e1);
            (v[0] * v[0] + v[1] * v[1]).sqrt().ln()
        };
        let near = SquareMatrix::from_rows(&[vec![1e-8, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = SquareMatrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.0]]).unwrap();
        let b = SquareMatrix::from_rows(&[vec![1.1, 0.0], vec![0.3, 0.9]]).unwrap();
        let mu = DiscreteMatrixMeasure::new(vec![a.clone(), near], vec![0.95, 0.05]).unwrap();
        let nu = DiscreteMatrixMeasure::new(vec![b, a], vec![0.5, 0.5]).unwrap();
        let t = 2.0;
        let l = 60.0;
        let r = holder_modulus_check_ii(&psi, t, l, 1.0, &mu, &nu).unwrap();
        assert!(r.mass_mu > 0.0);
        assert!(r.holds && r.slack() > 0.0);
        let clipped = truncate_observable(psi, t);
        let pts: Vec<&SquareMatrix> = mu.atoms().iter().chain(nu.atoms()).collect();
        assert!(pairwise_holder_constant(&pts, &clipped, 1.0) <= l);
    }
}
