//! Transportation simplex on a dense cost matrix.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Optimal plan of `min Σ c_ij x_ij` subject to row sums `supply` and
/// column sums `demand` (both summing to the same total).
///
/// Returns the optimal cost and the basic cells `(i, j, x_ij)`, including
/// degenerate zero-flow cells. `cost` is row-major `supply.len() × demand.len()`.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64], tol: f64) -> Result<(f64, Vec<(usize, usize, f64)>)> {
    let (k, l) = (supply.len(), demand.len());
    if k == 0 || l == 0 || cost.len() != k * l {
        return Err(Error::invalid("transport problem shape"));
    }
    let mut basis = northwest_corner(supply, demand);
    let mut is_basic = vec![false; k * l];
    for &(i, j, _) in &basis {
        is_basic[i * l + j] = true;
    }
    let cmax = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let tol = tol * cmax.max(1.0);
    let max_iter = 50 * k * l + 100;
    let mut u = vec![0.0; k];
    let mut v = vec![0.0; l];
    for iter in 0.. {
        if iter > max_iter {
            return Err(Error::NoConvergence { iterations: iter, residual: f64::NAN });
        }
        let adj = adjacency(k, l, &basis);
        potentials(k, l, cost, &basis, &adj, &mut u, &mut v);
        let mut entering = None;
        let mut best = -tol;
        for i in 0..k {
            for j in 0..l {
                if is_basic[i * l + j] {
                    continue;
                }
                let r = cost[i * l + j] - u[i] - v[j];
                if r < best {
                    best = r;
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else { break };
        let path = tree_path(k, &adj, &basis, ei, k + ej);
        // edges along the path alternate -, +, -, ... ending with -
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &b) in path.iter().enumerate() {
            if pos % 2 == 0 && basis[b].2 < theta {
                theta = basis[b].2;
                leave = b;
            }
        }
        for (pos, &b) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[b].2 -= theta;
            } else {
                basis[b].2 += theta;
            }
        }
        let (li, lj, _) = basis[leave];
        is_basic[li * l + lj] = false;
        is_basic[ei * l + ej] = true;
        basis[leave] = (ei, ej, theta);
    }
    for b in basis.iter_mut() {
        b.2 = b.2.max(0.0);
    }
    let total = basis.iter().map(|&(i, j, x)| x * cost[i * l + j]).sum();
    Ok((total, basis))
}

fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<(usize, usize, f64)> {
    let (k, l) = (supply.len(), demand.len());
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let mut cells = Vec::with_capacity(k + l - 1);
    let (mut i, mut j) = (0, 0);
    while i < k && j < l {
        let x = ra[i].min(rb[j]).max(0.0);
        cells.push((i, j, x));
        ra[i] -= x;
        rb[j] -= x;
        if i == k - 1 {
            j += 1;
        } else if j == l - 1 || ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    cells
}

/// Node ids: rows `0..k`, columns `k..k+l`; entries are basis indices.
fn adjacency(k: usize, l: usize, basis: &[(usize, usize, f64)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); k + l];
    for (b, &(i, j, _)) in basis.iter().enumerate() {
        adj[i].push(b);
        adj[k + j].push(b);
    }
    adj
}

fn other_end(k: usize, cell: (usize, usize, f64), node: usize) -> usize {
    if node < k {
        k + cell.1
    } else {
        cell.0
    }
}

fn potentials(
    k: usize,
    l: usize,
    cost: &[f64],
    basis: &[(usize, usize, f64)],
    adj: &[Vec<usize>],
    u: &mut [f64],
    v: &mut [f64],
) {
    let mut seen = vec![false; k + l];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(n) = queue.pop_front() {
        for &b in &adj[n] {
            let c = basis[b];
            let m = other_end(k, c, n);
            if seen[m] {
                continue;
            }
            seen[m] = true;
            let cij = cost[c.0 * l + c.1];
            if m < k {
                u[m] = cij - v[c.1];
            } else {
                v[m - k] = cij - u[c.0];
            }
            queue.push_back(m);
        }
    }
}

/// Basis indices along the tree path from `from` to `to`.
fn tree_path(k: usize, adj: &[Vec<usize>], basis: &[(usize, usize, f64)], from: usize, to: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(n) = queue.pop_front() {
        if n == to {
            break;
        }
        for &b in &adj[n] {
            let m = other_end(k, basis[b], n);
            if !seen[m] {
                seen[m] = true;
                parent[m] = b;
                queue.push_back(m);
            }
        }
    }
    let mut path = Vec::new();
    let mut n = to;
    while n != from {
        let b = parent[n];
        path.push(b);
        n = other_end(k, basis[b], n);
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_picks_cheaper_diagonal() {
        let (c, plan) = solve(&[0.5, 0.5], &[0.5, 0.5], &[1.0, 0.0, 0.0, 1.0], 1e-11).unwrap();
        assert!(c.abs() < 1e-15);
        assert!(plan.iter().all(|&(i, j, x)| i != j || x == 0.0));
    }

    #[test]
    fn degenerate_supplies_are_handled() {
        let supply = [0.25, 0.25, 0.5];
        let demand = [0.25, 0.25, 0.5];
        let cost = [0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let (c, plan) = solve(&supply, &demand, &cost, 1e-11).unwrap();
        assert!(c.abs() < 1e-15);
        assert_eq!(plan.len(), 5);
    }

    #[test]
    fn northwest_corner_is_a_spanning_tree() {
        let cells = northwest_corner(&[0.3, 0.7], &[0.2, 0.2, 0.6]);
        assert_eq!(cells.len(), 4);
        let rows: f64 = cells.iter().filter(|c| c.0 == 1).map(|c| c.2).sum();
        assert!((rows - 0.7).abs() < 1e-15);
    }
}
