//! Numerical kernels that live outside the autodiff graph.

pub mod cholesky;
pub mod fft;
pub mod helmholtz;
pub mod sparse;

pub use cholesky::{cholesky, cholesky_with_jitter, CholeskyFactor};
pub use fft::{fft_forward, fft_inverse, Spectrum};
pub use helmholtz::{helmholtz_operator, helmholtz_solve, HelmholtzSolver};
pub use sparse::SparseMatrix;
