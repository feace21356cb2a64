//! Universal scaling limits of zero correlations of Gaussian random
//! polynomials.
//!
//! * [`formulas`]: closed-form limit pair correlations and the radial
//!   Laplacian pipeline behind them.
//! * [`gaussian`]: Gram-matrix frames and Gaussian log-moment integrals,
//!   by quadrature and Monte Carlo.
//! * [`ensemble`]: the projective (SU(m+1)) polynomial ensemble and its
//!   finite-degree Szegő kernel.
//! * [`roots`] and [`stats`]: empirical zeros and their pair correlation.
//! * [`harness`]: reproducible experiments behind the `zerocorr` binary.

pub mod ensemble;
pub mod error;
pub mod formulas;
pub mod gaussian;
pub mod harness;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod stats;

pub use error::{Error, Result};
