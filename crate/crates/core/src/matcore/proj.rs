use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::SquareMatrix;
use crate::error::{Error, Result};

const SIGN_TOL: f64 = 1e-9;

/// A point of the projective space `P(R^m)`: a unit vector modulo sign.
///
/// The representative is canonicalised so that its first coordinate of
/// magnitude above `1e-9` is positive; `v` and `-v` therefore build equal
/// points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjPoint {
    rep: Vec<f64>,
}

impl ProjPoint {
    pub fn new(v: &[f64]) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("empty vector"));
        }
        let n = norm(v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("cannot projectivise a zero or non-finite vector"));
        }
        Ok(ProjPoint::from_unnormalized(v, n))
    }

    fn from_unnormalized(v: &[f64], n: f64) -> Self {
        let mut rep: Vec<f64> = v.iter().map(|x| x / n).collect();
        if let Some(first) = rep.iter().find(|x| x.abs() > SIGN_TOL) {
            if *first < 0.0 {
                rep.iter_mut().for_each(|x| *x = -*x);
            }
        }
        ProjPoint { rep }
    }

    /// Standard basis direction `ê_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut rep = vec![0.0; dim];
        rep[i] = 1.0;
        ProjPoint { rep }
    }

    /// Point of `P¹` at angle `theta` (taken modulo `π`).
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        ProjPoint::from_unnormalized(&[c, s], 1.0)
    }

    /// Uniformly distributed point (normalised Gaussian vector).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = norm(&v);
            if n > 1e-12 {
                return ProjPoint::from_unnormalized(&v, n);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    pub fn rep(&self) -> &[f64] {
        &self.rep
    }

    /// Angle in `[0, π)` of a point of `P¹`.
    pub fn angle(&self) -> f64 {
        assert_eq!(self.rep.len(), 2, "angle is defined on P¹ only");
        let t = self.rep[1].atan2(self.rep[0]);
        t.rem_euclid(PI) % PI
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `d(v̂, ŵ) = ‖v ∧ w‖ / (‖v‖‖w‖)`, the sine of the angle between the lines.
pub fn proj_distance(v: &ProjPoint, w: &ProjPoint) -> f64 {
    assert_eq!(v.dim(), w.dim(), "dimension mismatch");
    let (a, b) = (&v.rep, &w.rep);
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let x = a[i] * b[j] - a[j] * b[i];
            s += x * x;
        }
    }
    s.sqrt().min(1.0)
}

/// `ĝ v̂`, or [`Error::KernelHit`] when `‖gv‖` is below the kernel tolerance.
pub fn proj_act(g: &SquareMatrix, v: &ProjPoint) -> Result<ProjPoint> {
    if g.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: v.dim() });
    }
    let gv = g.apply(&v.rep);
    let n = norm(&gv);
    let tol = g.kernel_tol();
    if !(n >= tol) {
        return Err(Error::KernelHit { norm: n, tol });
    }
    Ok(ProjPoint::from_unnormalized(&gv, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn sign_is_canonical() {
        let a = ProjPoint::new(&[-1.0, 2.0]).unwrap();
        let b = ProjPoint::new(&[1.0, -2.0]).unwrap();
        assert_eq!(a, b);
        assert!(a.rep()[0] > 0.0);
        assert!((norm(a.rep()) - 1.0).abs() < 1e-12);
        let c = ProjPoint::new(&[0.0, -3.0, 1.0]).unwrap();
        assert_eq!(c.rep()[1], -3.0 / 10f64.sqrt() * -1.0);
    }

    #[test]
    fn distance_examples() {
        let e1 = ProjPoint::basis(2, 0);
        let e2 = ProjPoint::basis(2, 1);
        assert_eq!(proj_distance(&e1, &e1), 0.0);
        assert_eq!(proj_distance(&e1, &e2), 1.0);
        let d = ProjPoint::new(&[1.0, 1.0]).unwrap();
        assert!((proj_distance(&e1, &d) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn act_examples() {
        let p = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(proj_act(&p, &ProjPoint::basis(2, 1)), Err(Error::KernelHit { .. })));

        let v = ProjPoint::new(&[0.3, -0.7]).unwrap();
        assert_eq!(proj_act(&SquareMatrix::identity(2), &v).unwrap(), v);

        let g = SquareMatrix::diag(&[2.0, 0.5]).unwrap();
        let w = proj_act(&g, &ProjPoint::new(&[1.0, 1.0]).unwrap()).unwrap();
        let expect = [4.0 / 17f64.sqrt(), 1.0 / 17f64.sqrt()];
        assert!((w.rep()[0] - expect[0]).abs() < 1e-15 && (w.rep()[1] - expect[1]).abs() < 1e-15);
    }

    #[test]
    fn angle_round_trip() {
        for k in 0..100 {
            let t = k as f64 * PI / 100.0;
            assert!((ProjPoint::from_angle(t).angle() - t).abs() < 1e-12);
        }
        assert!(ProjPoint::from_angle(PI).angle() < 1e-12);
    }

    #[test]
    fn raised_power_volume_bound_fails_on_flat_directions() {
        use crate::matcore::Frame;
        // det(g|E) >= (det(g|F) / |g|^j)^(j/(k-j)) with E = <e3>, F = R^3
        let eps = 1e-2;
        let g = SquareMatrix::diag(&[1.0, 1.0, eps]).unwrap();
        let e = Frame::from_columns(3, 1, &[0.0, 0.0, 1.0]).unwrap();
        let lhs = g.restricted_det(&e);
        let rhs = (g.restricted_det(&Frame::identity(3, 3)) / g.operator_norm()).powf(0.5);
        assert!((lhs - eps).abs() < 1e-15);
        assert!((rhs - eps.sqrt()).abs() < 1e-12);
        assert!(lhs < rhs);
    }

    fn unit(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, dim).prop_filter("nonzero", |v| norm(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn distance_matches_inner_product(v in unit(3), w in unit(3)) {
            let (a, b) = (ProjPoint::new(&v).unwrap(), ProjPoint::new(&w).unwrap());
            let ip: f64 = a.rep().iter().zip(b.rep()).map(|(x, y)| x * y).sum();
            let d = proj_distance(&a, &b);
            prop_assert!((d - (1.0 - ip * ip).max(0.0).sqrt()).abs() < 1e-7);
            prop_assert!((d - proj_distance(&b, &a)).abs() < 1e-15);
        }

        #[test]
        fn powered_distance_is_a_metric(u in unit(3), v in unit(3), w in unit(3), p in 0.05f64..1.0) {
            let (a, b, c) = (ProjPoint::new(&u).unwrap(), ProjPoint::new(&v).unwrap(), ProjPoint::new(&w).unwrap());
            let d = |x: &ProjPoint, y: &ProjPoint| proj_distance(x, y).powf(p);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        }

        #[test]
        fn image_norm_bounded_by_operator_norm(seed in any::<u64>(), v in unit(3)) {
            let g = SquareMatrix::random_gaussian(3, &mut stream_rng(seed, 0));
            let gv = norm(&g.apply(&v));
            prop_assert!(gv <= g.operator_norm() * norm(&v) + 1e-10);
        }

        #[test]
        fn nested_subspace_volume_bound(seed in any::<u64>()) {
            use crate::matcore::Frame;
            let mut rng = stream_rng(seed, 1);
            let m = 4;
            let g = SquareMatrix::random_gaussian(m, &mut rng);
            let f = Frame::random(m, m, &mut rng);
            for k in 2..=m {
                for j in 1..k {
                    let fk = Frame::from_columns(m, k, &f.as_slice()[..m * k]).unwrap();
                    let ej = Frame::from_columns(m, j, &f.as_slice()[..m * j]).unwrap();
                    let lhs = g.restricted_det(&ej);
                    let rhs = g.restricted_det(&fk) / g.operator_norm().powi((k - j) as i32);
                    prop_assert!(lhs >= rhs * (1.0 - 1e-9), "j={} k={} {} < {}", j, k, lhs, rhs);
                }
            }
        }
    }
}
