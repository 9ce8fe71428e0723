//! Dense kernels on column-major buffers: one-sided Jacobi SVD, Householder
//! QR and LU determinants. Sizes are tiny (m ≤ 12), so everything is
//! straightforward O(m³) with no blocking.

/// Result of a thin SVD `A = U diag(s) Vᵀ` of a `rows × cols` matrix.
/// `u` is `rows × cols` and `v` is `cols × cols`, both column-major.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub rows: usize,
    pub cols: usize,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl ThinSvd {
    /// Right singular vector `j` (unit, length `cols`).
    pub fn v_col(&self, j: usize) -> &[f64] {
        &self.v[j * self.cols..(j + 1) * self.cols]
    }

    pub fn u_col(&self, j: usize) -> &[f64] {
        &self.u[j * self.rows..(j + 1) * self.rows]
    }
}

/// One-sided (Hestenes) Jacobi SVD. `a` is column-major `rows × cols`.
/// Singular values come back sorted in descending order.
pub fn jacobi_svd(rows: usize, cols: usize, a: &[f64]) -> ThinSvd {
    debug_assert_eq!(a.len(), rows * cols);
    let mut w = a.to_vec();
    let mut v = vec![0.0; cols * cols];
    for j in 0..cols {
        v[j * cols + j] = 1.0;
    }
    const EPS: f64 = 1e-15;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let x = w[p * rows + i];
                    let y = w[q * rows + i];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let x = w[p * rows + i];
                    let y = w[q * rows + i];
                    w[p * rows + i] = c * x - s * y;
                    w[q * rows + i] = s * x + c * y;
                }
                for i in 0..cols {
                    let x = v[p * cols + i];
                    let y = v[q * cols + i];
                    v[p * cols + i] = c * x - s * y;
                    v[q * cols + i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols)
        .map(|j| w[j * rows..(j + 1) * rows].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut s = Vec::with_capacity(cols);
    let mut u = vec![0.0; rows * cols];
    let mut vs = vec![0.0; cols * cols];
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        if sigma > 0.0 {
            for i in 0..rows {
                u[dst * rows + i] = w[src * rows + i] / sigma;
            }
        }
        vs[dst * cols..(dst + 1) * cols].copy_from_slice(&v[src * cols..(src + 1) * cols]);
    }
    ThinSvd { rows, cols, s, u, v: vs }
}

/// Householder QR of a column-major `rows × cols` matrix (`rows ≥ cols`).
/// Returns the thin `Q` (column-major) and the diagonal of `R`, with signs
/// flipped so that `diag(R) ≥ 0`.
pub fn householder_qr(rows: usize, cols: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(rows >= cols);
    let mut r = a.to_vec();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut diag = vec![0.0; cols];
    for j in 0..cols {
        let x = &r[j * rows + j..(j + 1) * rows];
        let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mut hv = x.to_vec();
        if norm == 0.0 {
            reflectors.push(Vec::new());
            diag[j] = 0.0;
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        hv[0] -= alpha;
        let hn2: f64 = hv.iter().map(|t| t * t).sum();
        if hn2 == 0.0 {
            reflectors.push(Vec::new());
            diag[j] = x[0];
            continue;
        }
        for c in j..cols {
            let col = &mut r[c * rows + j..(c + 1) * rows];
            let dot: f64 = col.iter().zip(&hv).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / hn2;
            for (ci, hi) in col.iter_mut().zip(&hv) {
                *ci -= f * hi;
            }
        }
        diag[j] = r[j * rows + j];
        reflectors.push(hv);
    }
    // Q = H_0 H_1 … H_{cols-1} applied to the first `cols` unit vectors.
    let mut q = vec![0.0; rows * cols];
    for j in 0..cols {
        q[j * rows + j] = 1.0;
    }
    for (j, hv) in reflectors.iter().enumerate().rev() {
        if hv.is_empty() {
            continue;
        }
        let hn2: f64 = hv.iter().map(|t| t * t).sum();
        for c in 0..cols {
            let col = &mut q[c * rows + j..(c + 1) * rows];
            let dot: f64 = col.iter().zip(hv).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / hn2;
            for (ci, hi) in col.iter_mut().zip(hv) {
                *ci -= f * hi;
            }
        }
    }
    for j in 0..cols {
        if diag[j] < 0.0 {
            diag[j] = -diag[j];
            for i in 0..rows {
                q[j * rows + i] = -q[j * rows + i];
            }
        }
    }
    (q, diag)
}

/// Determinant of a row-major `n × n` matrix by LU with partial pivoting.
pub fn lu_det(n: usize, a: &[f64]) -> f64 {
    match n {
        0 => return 1.0,
        1 => return a[0],
        2 => return a[0] * a[3] - a[1] * a[2],
        _ => {}
    }
    let mut m = a.to_vec();
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k * n + k].abs();
        for i in (k + 1)..n {
            let v = m[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = m[k * n + k];
        det *= d;
        for i in (k + 1)..n {
            let f = m[i * n + k] / d;
            if f != 0.0 {
                for j in (k + 1)..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
            }
        }
    }
    det
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn lex_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_lexicographic() {
        let s = lex_subsets(4, 2);
        assert_eq!(s, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(lex_subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(lex_subsets(3, 1).len(), 3);
        assert_eq!(binomial(6, 3), 20);
    }

    #[test]
    fn lu_det_matches_cofactor_expansion() {
        let a = [2.0, -1.0, 0.5, 1.0, 3.0, -2.0, 0.0, 4.0, 1.0];
        let cof = 2.0 * (3.0 * 1.0 - (-2.0) * 4.0) - (-1.0) * (1.0 * 1.0 - (-2.0) * 0.0)
            + 0.5 * (1.0 * 4.0 - 3.0 * 0.0);
        assert!((lu_det(3, &a) - cof).abs() < 1e-12);
    }

    #[test]
    fn qr_reconstructs_rectangular_input() {
        // column-major 3×2
        let a = [1.0, 2.0, 2.0, 0.0, 1.0, -1.0];
        let (q, d) = householder_qr(3, 2, &a);
        // Q columns orthonormal
        let dot = |i: usize, j: usize| (0..3).map(|r| q[i * 3 + r] * q[j * 3 + r]).sum::<f64>();
        assert!((dot(0, 0) - 1.0).abs() < 1e-14);
        assert!((dot(1, 1) - 1.0).abs() < 1e-14);
        assert!(dot(0, 1).abs() < 1e-14);
        assert!((d[0] - 3.0).abs() < 1e-14);
        assert!(d.iter().all(|x| *x >= 0.0));
    }
}
