//! Numerical laboratory for random linear cocycles over `Mat_m(R)`.
//!
//! The crate is organised around the objects that appear when one studies
//! products of i.i.d. random matrices:
//!
//! * [`matcore`]: small dense linear algebra: spectral norms, SVD, QR,
//!   exterior powers and the projective line/space.
//! * [`measures`]: finitely supported and sampler-backed matrix measures,
//!   convolution, the exponential moment functionals and the Hölder
//!   contraction coefficient of the projective action.
//! * [`transport`]: exact Wasserstein distances between discrete matrix
//!   measures and finite-instance checks of the continuity estimates.
//! * [`lyapunov`]: Lyapunov spectra, stationary measures, the Furstenberg
//!   formula and Hölder scans of the top exponent.
//! * [`projmarkov`]: the Markov operator on the projective line.
//! * [`deviations`]: empirical large-deviation tails and rate fits.
//! * [`models`]: Schrödinger, mixed-coupling and Jacobi cocycles.
//!
//! All Monte Carlo routines are deterministic functions of their seed: every
//! trial draws from its own counter-keyed stream (see [`rng`]), so results do
//! not depend on the number of worker threads.

pub mod deviations;
pub mod error;
pub mod lyapunov;
pub mod matcore;
pub mod measures;
pub mod models;
pub mod projmarkov;
pub mod rng;
pub mod spec;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use matcore::{ProjPoint, SquareMatrix};
pub use measures::{DiscreteMatrixMeasure, MatrixSampler, MatrixSource, Source};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/matrices.md")]
    pub mod matrices {}
    #[doc = include_str!("../../../book/src/measures.md")]
    pub mod measures {}
    #[doc = include_str!("../../../book/src/transport.md")]
    pub mod transport {}
    #[doc = include_str!("../../../book/src/lyapunov.md")]
    pub mod lyapunov {}
    #[doc = include_str!("../../../book/src/markov.md")]
    pub mod markov {}
    #[doc = include_str!("../../../book/src/deviations.md")]
    pub mod deviations {}
    #[doc = include_str!("../../../book/src/models.md")]
    pub mod models {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
