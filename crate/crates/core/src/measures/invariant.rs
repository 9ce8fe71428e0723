use serde::Serialize;

use super::DiscreteMatrixMeasure;
use crate::matcore::linalg::jacobi_svd;
use crate::matcore::{Frame, SquareMatrix};

/// A proper subspace, given by orthonormal basis columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subspace {
    pub basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantScan {
    /// Proper subspaces left invariant by every atom.
    pub subspaces: Vec<Subspace>,
    /// Every atom is a multiple of the identity, so every subspace is
    /// invariant and `subspaces` is left empty.
    pub all_invariant: bool,
    /// The candidate set provably contains every common invariant subspace.
    pub exhaustive: bool,
}

const INVARIANCE_RTOL: f64 = 1e-9;
const EIGEN_RTOL: f64 = 1e-8;
const MAX_BLOCKS: usize = 12;

fn is_scalar(g: &SquareMatrix) -> bool {
    let m = g.dim();
    let c = g.trace() / m as f64;
    let r = g.sub(&SquareMatrix::identity(m).scale(c)).frobenius_norm();
    r <= 1e-12 * g.frobenius_norm().max(1.0)
}

/// Orthonormal basis of the numerical kernel of a square matrix.
fn null_space(a: &SquareMatrix, rtol: f64) -> Vec<Vec<f64>> {
    let m = a.dim();
    let svd = jacobi_svd(m, m, &a.column_major());
    let tol = rtol * svd.s[0].max(1.0);
    (0..m).filter(|&j| svd.s[j] <= tol).map(|j| svd.v_col(j).to_vec()).collect()
}

/// Real invariant blocks of `g`: eigenvectors for real eigenvalues and
/// real 2-planes for conjugate pairs. Second value: spectrum is simple.
fn eigen_blocks(g: &SquareMatrix) -> (Vec<Vec<Vec<f64>>>, bool) {
    let m = g.dim();
    let scale = g.operator_norm().max(1.0);
    let mut eig = g.eigenvalues();
    eig.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    let mut simple = true;
    for z in eig {
        if z.1 < -EIGEN_RTOL * scale {
            continue;
        }
        let z = if z.1.abs() <= EIGEN_RTOL * scale { (z.0, 0.0) } else { z };
        if distinct.iter().any(|d| (d.0 - z.0).abs() <= EIGEN_RTOL * scale * 10.0 && (d.1 - z.1).abs() <= EIGEN_RTOL * scale * 10.0) {
            simple = false;
            continue;
        }
        distinct.push(z);
    }
    let id = SquareMatrix::identity(m);
    let mut blocks = Vec::new();
    for (re, im) in distinct {
        let shifted = g.sub(&id.scale(re));
        if im == 0.0 {
            let ns = null_space(&shifted, 1e-7);
            if ns.len() > 1 {
                simple = false;
            }
            blocks.extend(ns.into_iter().map(|v| vec![v]));
        } else {
            // (g - re)² + im² annihilates the real plane of the pair
            let q = shifted.mul(&shifted).add(&id.scale(im * im));
            let ns = null_space(&q, 1e-7);
            if ns.len() == 2 {
                blocks.push(ns);
            } else {
                simple = false;
            }
        }
    }
    (blocks, simple)
}

fn is_invariant(g: &SquareMatrix, basis: &Frame) -> bool {
    let m = g.dim();
    let tol = INVARIANCE_RTOL * g.operator_norm().max(1.0);
    (0..basis.rank()).all(|c| {
        let gb = g.apply(basis.column(c));
        let mut r = gb.clone();
        for k in 0..basis.rank() {
            let q = basis.column(k);
            let ip: f64 = q.iter().zip(&gb).map(|(a, b)| a * b).sum();
            for i in 0..m {
                r[i] -= ip * q[i];
            }
        }
        r.iter().map(|x| x * x).sum::<f64>().sqrt() <= tol
    })
}

fn same_subspace(a: &Frame, b: &Frame) -> bool {
    if a.rank() != b.rank() {
        return false;
    }
    // ‖P_a b_c‖ = 1 for every column of b
    (0..b.rank()).all(|c| {
        let v = b.column(c);
        let p: f64 = (0..a.rank()).map(|k| a.column(k).iter().zip(v).map(|(x, y)| x * y).sum::<f64>().powi(2)).sum();
        (p - 1.0).abs() < 1e-8
    })
}

/// Common invariant proper subspaces of the atoms of `mu`.
///
/// Candidates are the sums of real eigen-blocks of the first non-scalar
/// atom. When that atom has simple spectrum these are all of its invariant
/// subspaces and the scan is exhaustive; otherwise only a candidate lattice
/// is tested.
pub fn invariant_subspace_scan(mu: &DiscreteMatrixMeasure) -> InvariantScan {
    let m = mu.dim();
    let Some(pivot) = mu.atoms().iter().find(|g| !is_scalar(g)) else {
        return InvariantScan { subspaces: Vec::new(), all_invariant: true, exhaustive: true };
    };
    let (blocks, simple) = eigen_blocks(pivot);
    let blocks: Vec<_> = blocks.into_iter().take(MAX_BLOCKS).collect();
    let mut found: Vec<Frame> = Vec::new();
    for mask in 1u32..(1u32 << blocks.len()) {
        let cols: Vec<f64> = (0..blocks.len())
            .filter(|i| mask >> i & 1 == 1)
            .flat_map(|i| blocks[i].iter().flatten().copied())
            .collect();
        let r = cols.len() / m;
        if r == 0 || r >= m {
            continue;
        }
        let Ok(frame) = Frame::from_columns(m, r, &cols) else { continue };
        if found.iter().any(|f| same_subspace(f, &frame)) {
            continue;
        }
        if mu.atoms().iter().all(|g| is_invariant(g, &frame)) {
            found.push(frame);
        }
    }
    found.sort_by_key(|f| f.rank());
    let subspaces = found
        .iter()
        .map(|f| Subspace { basis: (0..f.rank()).map(|c| f.column(c).to_vec()).collect() })
        .collect();
    InvariantScan { subspaces, all_invariant: false, exhaustive: m == 2 || (simple && blocks.len() < MAX_BLOCKS) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn schrodinger(t: f64, e: f64) -> SquareMatrix {
        SquareMatrix::from_rows(&[vec![t - e, -1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn line_is(s: &Subspace, v: &[f64]) -> bool {
        let ip: f64 = s.basis[0].iter().zip(v).map(|(a, b)| a * b).sum();
        s.dim() == 1 && (ip.abs() - 1.0).abs() < 1e-9
    }

    #[test]
    fn schrodinger_pair_has_no_invariant_line() {
        for (t1, t2) in [(3.0, -2.5), (0.0, 1.0), (5.0, 6.0)] {
            let mu = DiscreteMatrixMeasure::uniform(vec![schrodinger(t1, 0.3), schrodinger(t2, 0.3)]).unwrap();
            let scan = invariant_subspace_scan(&mu);
            assert!(scan.subspaces.is_empty());
            assert!(scan.exhaustive && !scan.all_invariant);
        }
    }

    #[test]
    fn diagonal_atoms_keep_coordinate_lines() {
        let mu = DiscreteMatrixMeasure::uniform(vec![
            SquareMatrix::diag(&[3.0, 1.0]).unwrap(),
            SquareMatrix::diag(&[1.0, 3.0]).unwrap(),
        ])
        .unwrap();
        let scan = invariant_subspace_scan(&mu);
        assert_eq!(scan.subspaces.len(), 2);
        assert!(scan.subspaces.iter().any(|s| line_is(s, &[1.0, 0.0])));
        assert!(scan.subspaces.iter().any(|s| line_is(s, &[0.0, 1.0])));
    }

    #[test]
    fn single_atom_gives_its_eigenlines() {
        let g = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 0.5]]).unwrap();
        let scan = invariant_subspace_scan(&DiscreteMatrixMeasure::dirac(g));
        assert_eq!(scan.subspaces.len(), 2);
        assert!(scan.subspaces.iter().any(|s| line_is(s, &[1.0, 0.0])));
        let v = [1.0 / (1.0 + 1.5f64.powi(2)).sqrt(), -1.5 / (1.0 + 1.5f64.powi(2)).sqrt()];
        assert!(scan.subspaces.iter().any(|s| line_is(s, &v)));

        assert!(invariant_subspace_scan(&DiscreteMatrixMeasure::dirac(SquareMatrix::rotation(0.4))).subspaces.is_empty());
        assert!(invariant_subspace_scan(&DiscreteMatrixMeasure::dirac(SquareMatrix::identity(2))).all_invariant);
    }

    #[test]
    fn block_diagonal_three_dimensional_atoms() {
        // common invariant plane <e1, e2> and line <e3>
        let mut rng = stream_rng(41, 0);
        let mut atoms = Vec::new();
        for _ in 0..2 {
            let r = SquareMatrix::random_gaussian(2, &mut rng);
            let c: f64 = 0.7 + atoms.len() as f64;
            atoms.push(
                SquareMatrix::from_rows(&[
                    vec![r.get(0, 0), r.get(0, 1), 0.0],
                    vec![r.get(1, 0), r.get(1, 1), 0.0],
                    vec![0.0, 0.0, c],
                ])
                .unwrap(),
            );
        }
        let scan = invariant_subspace_scan(&DiscreteMatrixMeasure::uniform(atoms).unwrap());
        let dims: Vec<usize> = scan.subspaces.iter().map(|s| s.dim()).collect();
        assert_eq!(dims, vec![1, 2]);
        assert!(line_is(&scan.subspaces[0], &[0.0, 0.0, 1.0]));
    }

    #[test]
    fn generic_three_dimensional_pair_is_irreducible() {
        let mut rng = stream_rng(42, 0);
        let mu = DiscreteMatrixMeasure::uniform(vec![
            SquareMatrix::random_gaussian(3, &mut rng),
            SquareMatrix::random_gaussian(3, &mut rng),
        ])
        .unwrap();
        assert!(invariant_subspace_scan(&mu).subspaces.is_empty());
    }
}
