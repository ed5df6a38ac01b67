//! Sparse eigenvector basis of the discrete Fourier transform.
//!
//! The basis is built by projecting modulated delta trains onto the four
//! DFT eigenspaces. Every basis vector has at most `2(η₁ + η₂)` nonzeros,
//! where `η₁ ≤ √N ≤ η₂` are the divisors of `N` nearest `√N`, and the change
//! of basis runs through short subsampled FFTs.

pub mod basis;
pub mod cli;
pub mod delta_trains;
pub mod eigenprojection;
pub mod error;
pub mod fast_transform;
pub mod io;
pub mod numerics;

pub use basis::{build_basis, build_basis_with, gram_report, multiplicities, orthogonality_survey, EigenBasis, SelectionRule};
pub use delta_trains::{eta_pair, DivisorPair, ModulatedDeltaTrain};
pub use eigenprojection::{project, EigenClass, TrainSum};
pub use error::{Error, Result};
pub use fast_transform::{analyze, fft, synthesize, to_coefficients};
pub use numerics::{inner, naive_dft, DenseVector, TolerancePolicy};
