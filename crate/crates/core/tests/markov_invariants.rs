use cocycle_lab::lyapunov::{stationary_measure_grid, GridSettings};
use cocycle_lab::projmarkov::{standard_observables, GridObservable, MarkovGrid};
use cocycle_lab::{DiscreteMatrixMeasure, SquareMatrix};
use proptest::prelude::*;

fn sl2(t: f64, s: f64, phi: f64) -> SquareMatrix {
    SquareMatrix::rotation(phi).mul(&SquareMatrix::diag(&[s, 1.0 / s]).unwrap()).mul(&SquareMatrix::rotation(t))
}

fn pair() -> impl Strategy<Value = DiscreteMatrixMeasure> {
    (0.0..3.1f64, 1.05..3.0f64, 0.0..3.1f64, 0.0..3.1f64, 1.05..3.0f64, 0.0..3.1f64, 0.1..0.9f64).prop_map(|(a, b, c, d, e, f, w)| {
        DiscreteMatrixMeasure::new(vec![sl2(a, b, c), sl2(d, e, f)], vec![w, 1.0 - w]).unwrap()
    })
}

const N: usize = 512;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constants_are_fixed(mu in pair(), c in -5.0..5.0f64) {
        let q = MarkovGrid::new(&mu, N).unwrap();
        let out = q.apply(&GridObservable::constant(N, c).unwrap()).unwrap();
        for v in out.values() {
            prop_assert!((v - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn positive_and_sup_contracting(mu in pair(), seed in 0u64..1000) {
        let q = MarkovGrid::new(&mu, N).unwrap();
        let phi = GridObservable::from_fn(N, |t| ((seed as f64 + 1.0) * t).sin().abs()).unwrap();
        let out = q.apply(&phi).unwrap();
        prop_assert!(out.values().iter().all(|&v| v >= 0.0));
        prop_assert!(out.sup_norm() <= phi.sup_norm() + 1e-12);
    }

    #[test]
    fn stationary_integrals_are_preserved(mu in pair()) {
        let grid = stationary_measure_grid(&mu, &GridSettings { n_grid: N, ..GridSettings::default() }).unwrap();
        let eta = grid.measure.weights.clone();
        prop_assert!((eta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let q = MarkovGrid::new(&mu, N).unwrap();
        for phi in standard_observables(N).unwrap() {
            let lhs = q.apply(&phi).unwrap().integrate(&eta).unwrap();
            let rhs = phi.integrate(&eta).unwrap();
            prop_assert!((lhs - rhs).abs() <= 2.0 * phi.sup_norm() * grid.residual + 1e-12);
        }
    }
}

#[test]
fn rotation_permutes_grid_nodes() {
    let n = 64;
    let mu = DiscreteMatrixMeasure::dirac(SquareMatrix::rotation(std::f64::consts::PI * 5.0 / n as f64));
    let phi = GridObservable::from_fn(n, |t| (2.0 * t).cos()).unwrap();
    let out = MarkovGrid::new(&mu, n).unwrap().apply(&phi).unwrap();
    for i in 0..n {
        assert!((out.values()[i] - phi.values()[(i + 5) % n]).abs() < 1e-9);
    }
}
