use cocycle_lab::deviations::ld_tail_cells;
use cocycle_lab::{DiscreteMatrixMeasure, ProjPoint, SquareMatrix};

const A: [[f64; 2]; 2] = [[1.2, 0.7], [-0.3, 0.9]];
const B: [[f64; 2]; 2] = [[0.4, -1.1], [0.8, 1.5]];
const W: [f64; 2] = [0.3, 0.7];

fn measure() -> DiscreteMatrixMeasure {
    let m = |a: [[f64; 2]; 2]| SquareMatrix::from_rows(&[a[0].to_vec(), a[1].to_vec()]).unwrap();
    DiscreteMatrixMeasure::new(vec![m(A), m(B)], W.to_vec()).unwrap()
}

/// All `2^n` words with their probabilities and `(1/n) log‖g_n⋯g_1 e₁‖`.
fn words(n: usize) -> Vec<(f64, f64)> {
    (0..1usize << n)
        .map(|bits| {
            let (mut x, mut y, mut p) = (1.0f64, 0.0f64, 1.0);
            for i in 0..n {
                let k = (bits >> i) & 1;
                let g = if k == 0 { A } else { B };
                (x, y) = (g[0][0] * x + g[0][1] * y, g[1][0] * x + g[1][1] * y);
                p *= W[k];
            }
            (p, (x * x + y * y).sqrt().ln() / n as f64)
        })
        .collect()
}

fn exact_tail(n: usize, l1: f64, eps: f64) -> f64 {
    words(n).iter().filter(|w| (w.1 - l1).abs() > eps).map(|w| w.0).sum()
}

#[test]
fn tail_frequencies_match_word_enumeration() {
    let l1 = 0.1;
    let cells: Vec<(usize, f64)> = [4, 7, 10].iter().flat_map(|&n| [0.05, 0.15, 0.3].map(|e| (n, e))).collect();
    for &(n, e) in &cells {
        let gap = words(n).iter().map(|w| ((w.1 - l1).abs() - e).abs()).fold(f64::INFINITY, f64::min);
        assert!(gap > 1e-9, "cell ({n}, {e}) sits on an attained deviation");
    }
    let trials = 200_000;
    let table = ld_tail_cells(&measure(), &ProjPoint::basis(2, 0), l1, &cells, trials, 9).unwrap();
    for r in &table.rows {
        let p = exact_tail(r.n, l1, r.epsilon);
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((r.p_hat - p).abs() <= 5.0 * sd + 1e-12, "n={} eps={} p_hat={} exact={p}", r.n, r.epsilon, r.p_hat);
    }
}

#[test]
fn no_hits_beyond_largest_attainable_deviation() {
    let l1 = 0.1;
    for n in [3, 6, 9] {
        let max_dev = words(n).iter().map(|w| (w.1 - l1).abs()).fold(0.0, f64::max);
        let table = ld_tail_cells(&measure(), &ProjPoint::basis(2, 0), l1, &[(n, max_dev + 1e-9)], 20_000, 3).unwrap();
        assert_eq!(table.rows[0].hits, 0);
        assert_eq!(table.rows[0].p_hat, 0.0);
        assert_eq!(table.rows[0].ci_hi, 3.0 / 20_000.0);
    }
}
