use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::DiscreteMatrixMeasure;
use crate::matcore::SquareMatrix;
use crate::rng::{stream_rng, StreamRng};

/// Anything that can draw i.i.d. matrices from a law on `Mat_m(R)`.
pub trait MatrixSource: Sync {
    fn dim(&self) -> usize;

    /// One draw; discrete measures lend their atoms without copying.
    fn draw(&self, rng: &mut StreamRng) -> Cow<'_, SquareMatrix>;
}

impl MatrixSource for DiscreteMatrixMeasure {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> Cow<'_, SquareMatrix> {
        if self.atoms.len() == 1 {
            return Cow::Borrowed(&self.atoms[0]);
        }
        Cow::Borrowed(&self.atoms[self.index_for(rng.random::<f64>())])
    }
}

type Generator = dyn Fn(&mut StreamRng) -> SquareMatrix + Send + Sync;

/// Seeded stream of i.i.d. matrices from a generator closure.
///
/// `draw_at(i)` is a pure function of `(seed, i)`; the estimators instead
/// call [`MatrixSource::draw`] with their own per-trial streams.
#[derive(Clone)]
pub struct MatrixSampler {
    dim: usize,
    seed: u64,
    label: String,
    generate: Arc<Generator>,
}

impl fmt::Debug for MatrixSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixSampler").field("dim", &self.dim).field("seed", &self.seed).field("label", &self.label).finish()
    }
}

impl MatrixSampler {
    pub fn new(
        dim: usize,
        seed: u64,
        label: impl Into<String>,
        generate: impl Fn(&mut StreamRng) -> SquareMatrix + Send + Sync + 'static,
    ) -> Self {
        MatrixSampler { dim, seed, label: label.into(), generate: Arc::new(generate) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        MatrixSampler { seed, ..self.clone() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The matrix at stream position `index`.
    pub fn draw_at(&self, index: u64) -> SquareMatrix {
        (self.generate)(&mut stream_rng(self.seed, index))
    }

    /// Empirical measure of `count` consecutive draws, equal weights.
    pub fn discretize(&self, count: usize) -> DiscreteMatrixMeasure {
        let atoms: Vec<SquareMatrix> = (0..count as u64).map(|i| self.draw_at(i)).collect();
        DiscreteMatrixMeasure::uniform(atoms).expect("sampler produced an empty or ragged sample")
    }
}

impl MatrixSource for MatrixSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> Cow<'_, SquareMatrix> {
        Cow::Owned((self.generate)(rng))
    }
}

/// Either kind of measure, as built from a JSON measure spec.
#[derive(Debug, Clone)]
pub enum Source {
    Discrete(DiscreteMatrixMeasure),
    Sampler(MatrixSampler),
}

impl Source {
    pub fn as_discrete(&self) -> Option<&DiscreteMatrixMeasure> {
        match self {
            Source::Discrete(mu) => Some(mu),
            Source::Sampler(_) => None,
        }
    }
}

impl MatrixSource for Source {
    fn dim(&self) -> usize {
        match self {
            Source::Discrete(mu) => mu.dim(),
            Source::Sampler(s) => s.dim,
        }
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> Cow<'_, SquareMatrix> {
        match self {
            Source::Discrete(mu) => mu.draw(rng),
            Source::Sampler(s) => s.draw(rng),
        }
    }
}

impl From<DiscreteMatrixMeasure> for Source {
    fn from(mu: DiscreteMatrixMeasure) -> Self {
        Source::Discrete(mu)
    }
}

impl From<MatrixSampler> for Source {
    fn from(s: MatrixSampler) -> Self {
        Source::Sampler(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_sampler(seed: u64) -> MatrixSampler {
        MatrixSampler::new(2, seed, "gaussian", |rng| SquareMatrix::random_gaussian(2, rng))
    }

    #[test]
    fn draw_at_is_reproducible() {
        let s = gaussian_sampler(5);
        assert_eq!(s.draw_at(17), s.draw_at(17));
        assert_ne!(s.draw_at(17), s.draw_at(18));
        assert_ne!(s.draw_at(17), s.with_seed(6).draw_at(17));
    }

    #[test]
    fn discrete_draws_follow_weights() {
        let a = SquareMatrix::diag(&[1.0, 1.0]).unwrap();
        let b = SquareMatrix::diag(&[2.0, 1.0]).unwrap();
        let mu = DiscreteMatrixMeasure::new(vec![a, b.clone()], vec![0.25, 0.75]).unwrap();
        let mut rng = stream_rng(3, 0);
        let n = 40_000;
        let hits = (0..n).filter(|_| *mu.draw(&mut rng) == b).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }

    #[test]
    fn discretize_has_equal_weights() {
        let mu = gaussian_sampler(1).discretize(10);
        assert_eq!(mu.len(), 10);
        assert!(mu.weights().iter().all(|w| (w - 0.1).abs() < 1e-15));
    }
}
