//! Small dense linear algebra for cocycle alphabets.
//!
//! `‖g‖` is always the spectral (operator) norm. Exterior powers index their
//! basis `e_I = e_{i1} ∧ … ∧ e_{ik}` by `k`-subsets `I` in lexicographic
//! order, so `∧_k g` has entry `(I, J)` equal to the minor of `g` on rows `I`
//! and columns `J`.

pub mod linalg;
mod proj;

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use linalg::{householder_qr, jacobi_svd, lex_subsets, lu_det, ThinSvd};

pub use proj::{proj_act, proj_distance, ProjPoint};
pub(crate) use proj::norm;

/// Relative factor of the kernel test `‖gv‖ < KERNEL_RTOL · max(‖g‖, 1)`.
pub const KERNEL_RTOL: f64 = 1e-12;

/// Dense `m × m` real matrix with finite entries (row-major).
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
    norm: OnceLock<f64>,
}

impl Clone for SquareMatrix {
    fn clone(&self) -> Self {
        SquareMatrix { dim: self.dim, data: self.data.clone(), norm: self.norm.clone() }
    }
}

impl PartialEq for SquareMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.data == other.data
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SquareMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl SquareMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be positive"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(SquareMatrix { dim, data, norm: OnceLock::new() })
    }

    /// Internal constructor for results of arithmetic on finite inputs.
    /// Overflow to ±inf is still rejected in debug builds.
    fn from_vec_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        SquareMatrix { dim, data, norm: OnceLock::new() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        SquareMatrix::new(dim, data)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        SquareMatrix::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        SquareMatrix::from_vec_unchecked(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        SquareMatrix::from_vec_unchecked(dim, vec![0.0; dim * dim])
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        let dim = entries.len();
        SquareMatrix::from_fn(dim, |i, j| if i == j { entries[i] } else { 0.0 })
    }

    /// Rotation of the plane by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        SquareMatrix::from_vec_unchecked(2, vec![c, -s, s, c])
    }

    /// Matrix with i.i.d. standard normal entries.
    pub fn random_gaussian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let data = (0..dim * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        SquareMatrix::from_vec_unchecked(dim, data)
    }

    /// Random element of SL₂(R): a Gaussian matrix rescaled to `|det| = 1`
    /// with the first row negated when the determinant is negative.
    pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let g = SquareMatrix::random_gaussian(2, rng);
            let d = g.det();
            if d.abs() < 1e-3 {
                continue;
            }
            let s = 1.0 / d.abs().sqrt();
            let sign = if d < 0.0 { -1.0 } else { 1.0 };
            let data = vec![sign * s * g.data[0], sign * s * g.data[1], s * g.data[2], s * g.data[3]];
            return SquareMatrix::from_vec_unchecked(2, data);
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch in product");
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        SquareMatrix::from_vec_unchecked(n, out)
    }

    /// `out = g v`.
    #[inline]
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(v, &mut out);
        out
    }

    pub fn sub(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        SquareMatrix::from_vec_unchecked(self.dim, data)
    }

    pub fn add(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        SquareMatrix::from_vec_unchecked(self.dim, data)
    }

    pub fn scale(&self, s: f64) -> SquareMatrix {
        SquareMatrix::from_vec_unchecked(self.dim, self.data.iter().map(|a| a * s).collect())
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.dim;
        SquareMatrix::from_vec_unchecked(n, (0..n * n).map(|k| self.data[(k % n) * n + k / n]).collect())
    }

    pub fn pow(&self, n: u32) -> SquareMatrix {
        let mut acc = SquareMatrix::identity(self.dim);
        for _ in 0..n {
            acc = self.mul(&acc);
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest singular value, cached after the first call.
    pub fn operator_norm(&self) -> f64 {
        *self.norm.get_or_init(|| {
            if self.dim == 1 {
                self.data[0].abs()
            } else if self.dim == 2 {
                sv2(&self.data).0
            } else {
                self.svd().s[0]
            }
        })
    }

    /// Singular values `s₁ ≥ … ≥ s_m ≥ 0`.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.dim == 2 {
            let (a, b) = sv2(&self.data);
            return vec![a, b];
        }
        self.svd().s
    }

    /// Full SVD; `u` and `v` are column-major.
    pub fn svd(&self) -> ThinSvd {
        jacobi_svd(self.dim, self.dim, &self.column_major())
    }

    pub fn column_major(&self) -> Vec<f64> {
        self.transpose().data
    }

    pub fn det(&self) -> f64 {
        lu_det(self.dim, &self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Scale-aware zero threshold for `‖gv‖`.
    pub fn kernel_tol(&self) -> f64 {
        KERNEL_RTOL * self.operator_norm().max(1.0)
    }

    /// Largest entry of `|g - gᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut a: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                a = a.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        a
    }

    /// `k`-th exterior power in the lexicographic basis.
    pub fn exterior_power(&self, k: usize) -> Result<SquareMatrix> {
        let m = self.dim;
        if k == 0 || k > m {
            return Err(Error::invalid(format!("exterior power k={k} outside 1..={m}")));
        }
        let subsets = lex_subsets(m, k);
        let n = subsets.len();
        let mut out = vec![0.0; n * n];
        let mut minor = vec![0.0; k * k];
        for (a, rows) in subsets.iter().enumerate() {
            for (b, cols) in subsets.iter().enumerate() {
                for (i, &r) in rows.iter().enumerate() {
                    for (j, &c) in cols.iter().enumerate() {
                        minor[i * k + j] = self.data[r * m + c];
                    }
                }
                out[a * n + b] = lu_det(k, &minor);
            }
        }
        Ok(SquareMatrix::from_vec_unchecked(n, out))
    }

    /// Eigenvalues as `(re, im)` pairs, in no particular order.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let m = nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data);
        m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
    }

    /// Product of singular values of `g` restricted to the span of the
    /// orthonormal columns of `basis` (the `k`-volume dilation factor).
    pub fn restricted_det(&self, basis: &Frame) -> f64 {
        let gb = self.apply_frame(basis);
        jacobi_svd(self.dim, basis.rank, &gb).s.iter().product()
    }

    /// `g · frame` as a column-major `m × r` buffer.
    pub fn apply_frame(&self, frame: &Frame) -> Vec<f64> {
        let m = self.dim;
        let mut out = vec![0.0; m * frame.rank];
        for c in 0..frame.rank {
            self.apply_into(frame.column(c), &mut out[c * m..(c + 1) * m]);
        }
        out
    }
}

/// Closed-form singular values of a row-major 2×2 matrix.
fn sv2(d: &[f64]) -> (f64, f64) {
    let (a, b, c, e) = (d[0], d[1], d[2], d[3]);
    // s1 ± s2 = sqrt((a±e)² + (c∓b)²)
    let p = ((a + e).powi(2) + (c - b).powi(2)).sqrt();
    let q = ((a - e).powi(2) + (c + b).powi(2)).sqrt();
    (0.5 * (p + q), 0.5 * (p - q).abs())
}

impl std::ops::Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        SquareMatrix::mul(self, rhs)
    }
}

pub fn operator_norm(g: &SquareMatrix) -> f64 {
    g.operator_norm()
}

pub fn singular_values(g: &SquareMatrix) -> Vec<f64> {
    g.singular_values()
}

pub fn exterior_power(g: &SquareMatrix, k: usize) -> Result<SquareMatrix> {
    g.exterior_power(k)
}

/// Orthonormal `m × r` frame stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    dim: usize,
    rank: usize,
    cols: Vec<f64>,
}

impl Frame {
    /// First `rank` standard basis vectors.
    pub fn identity(dim: usize, rank: usize) -> Self {
        let mut cols = vec![0.0; dim * rank];
        for j in 0..rank {
            cols[j * dim + j] = 1.0;
        }
        Frame { dim, rank, cols }
    }

    /// Haar-distributed frame (QR of a Gaussian matrix).
    pub fn random<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Self {
        let g: Vec<f64> = (0..dim * rank).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let (q, _) = householder_qr(dim, rank, &g);
        Frame { dim, rank, cols: q }
    }

    /// Orthonormalise arbitrary column-major columns.
    pub fn from_columns(dim: usize, rank: usize, cols: &[f64]) -> Result<Self> {
        if cols.len() != dim * rank || rank == 0 || rank > dim {
            return Err(Error::invalid("frame shape"));
        }
        let (q, d) = householder_qr(dim, rank, cols);
        if d.iter().any(|x| *x <= 1e-14) {
            return Err(Error::invalid("frame columns are linearly dependent"));
        }
        Ok(Frame { dim, rank, cols: q })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.dim..(j + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.cols
    }
}

/// One reorthonormalised step of a frame through `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrStep {
    pub frame: Frame,
    /// `log R_ii`; `-inf` where the column collapsed.
    pub logs: Vec<f64>,
    /// Number of leading columns that kept full rank.
    pub rank: usize,
}

/// Thin QR of `g · frame` without rank checks; collapsed columns report
/// `-inf` in `logs`.
pub fn qr_step_raw(frame: &Frame, g: &SquareMatrix) -> QrStep {
    let gf = g.apply_frame(frame);
    let (q, d) = householder_qr(frame.dim, frame.rank, &gf);
    let tol = KERNEL_RTOL * g.frobenius_norm().max(1.0);
    let mut rank = frame.rank;
    let logs = d
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if r <= tol {
                rank = rank.min(i);
                f64::NEG_INFINITY
            } else {
                r.ln()
            }
        })
        .collect();
    QrStep { frame: Frame { dim: frame.dim, rank: frame.rank, cols: q }, logs, rank }
}

/// QR of `g · frame` with nonnegative `R` diagonal. Fails with
/// [`Error::DegenerateFrame`] (carrying the log-diagonal) when the image
/// lost rank.
pub fn qr_step(frame: &Frame, g: &SquareMatrix) -> Result<QrStep> {
    if frame.dim != g.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim, found: g.dim() });
    }
    let step = qr_step_raw(frame, g);
    if step.rank < frame.rank {
        return Err(Error::DegenerateFrame { rank: step.rank, logs: step.logs });
    }
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn m(rows: &[&[f64]]) -> SquareMatrix {
        SquareMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(SquareMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(SquareMatrix::new(2, vec![1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(SquareMatrix::identity(2).operator_norm(), 1.0);
        assert!((SquareMatrix::diag(&[3.0, 0.0]).unwrap().operator_norm() - 3.0).abs() < 1e-15);
        let mut rng = stream_rng(1, 0);
        for _ in 0..50 {
            let g = SquareMatrix::random_gaussian(2, &mut rng);
            let s = g.singular_values();
            assert!((s[0] * s[1] - g.det().abs()).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_value_examples() {
        assert_eq!(SquareMatrix::diag(&[2.0, 0.5]).unwrap().singular_values(), vec![2.0, 0.5]);
        assert_eq!(m(&[&[1.0, 0.0], &[0.0, 0.0]]).singular_values(), vec![1.0, 0.0]);
        let mut rng = stream_rng(2, 0);
        for _ in 0..50 {
            let g = SquareMatrix::random_gaussian(3, &mut rng);
            let s = g.singular_values();
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
            let d = g.det().abs();
            assert!((s.iter().product::<f64>() - d).abs() <= 1e-8 * d.max(1e-300) + 1e-14);
        }
    }

    #[test]
    fn jacobi_agrees_with_closed_form_on_2x2() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let g = SquareMatrix::random_gaussian(2, &mut rng);
            let j = g.svd().s;
            let c = g.singular_values();
            assert!((j[0] - c[0]).abs() < 1e-12 && (j[1] - c[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn exterior_power_examples() {
        let w = SquareMatrix::diag(&[2.0, 3.0]).unwrap().exterior_power(2).unwrap();
        assert_eq!(w.dim(), 1);
        assert!((w.get(0, 0) - 6.0).abs() < 1e-14);

        let (a, b, c) = (1.5, -2.0, 0.25);
        let w = SquareMatrix::diag(&[a, b, c]).unwrap().exterior_power(2).unwrap();
        let expect = SquareMatrix::diag(&[a * b, a * c, b * c]).unwrap();
        assert!(w.sub(&expect).frobenius_norm() < 1e-14);

        let mut rng = stream_rng(4, 0);
        for _ in 0..20 {
            let g = SquareMatrix::random_gaussian(3, &mut rng);
            let h = SquareMatrix::random_gaussian(3, &mut rng);
            let lhs = g.mul(&h).exterior_power(2).unwrap();
            let rhs = g.exterior_power(2).unwrap().mul(&h.exterior_power(2).unwrap());
            assert!(lhs.sub(&rhs).frobenius_norm() < 1e-8);
            let s = g.singular_values();
            let n2 = g.exterior_power(2).unwrap().operator_norm();
            assert!((n2 - s[0] * s[1]).abs() < 1e-8 * n2.max(1.0));
            let top = g.exterior_power(3).unwrap();
            assert!((top.get(0, 0) - g.det()).abs() < 1e-8);
        }
    }

    #[test]
    fn qr_step_examples() {
        let s = qr_step(&Frame::identity(2, 2), &SquareMatrix::diag(&[2.0, 0.5]).unwrap()).unwrap();
        assert!((s.logs[0] - 2f64.ln()).abs() < 1e-15);
        assert!((s.logs[1] + 2f64.ln()).abs() < 1e-15);

        let err = qr_step(&Frame::identity(2, 2), &m(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap_err();
        match err {
            Error::DegenerateFrame { rank, logs } => {
                assert_eq!(rank, 1);
                assert_eq!(logs[0], 0.0);
                assert_eq!(logs[1], f64::NEG_INFINITY);
            }
            e => panic!("unexpected {e:?}"),
        }

        let mut rng = stream_rng(5, 0);
        for _ in 0..20 {
            let g = SquareMatrix::random_gaussian(3, &mut rng);
            let f = Frame::random(3, 3, &mut rng);
            let s = qr_step(&f, &g).unwrap();
            let sum: f64 = s.logs.iter().sum();
            assert!((sum - g.det().abs().ln()).abs() < 1e-8);
        }
    }

    #[test]
    fn restricted_det_on_full_space_is_abs_det() {
        let mut rng = stream_rng(6, 0);
        let g = SquareMatrix::random_gaussian(3, &mut rng);
        let d = g.restricted_det(&Frame::identity(3, 3));
        assert!((d - g.det().abs()).abs() < 1e-10);
    }

    #[test]
    fn serde_round_trip_uses_nested_rows() {
        let g = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0]]");
        let back: SquareMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
