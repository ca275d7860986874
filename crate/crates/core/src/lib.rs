//! Numerical laboratory for quasiradial Bochner–Riesz means.
//!
//! The crate builds every object needed to study the maximal operator
//! `sup_t |F^{-1}[(1 - rho/t)_+^delta f^](x)|` on Hardy spaces `H^p`, `0 < p < 1`:
//!
//! * [`gauge`]: homogeneous distance functions `rho` and the critical index arithmetic.
//! * [`surface`]: convex-surface geometry of the unit sphere `{rho = 1}` (caps, the
//!   `Omega` function, finite-type probing, angle/height checks).
//! * [`decomp`]: the dyadic radial / angular decomposition of the multiplier.
//! * [`fourier`]: periodic grids, FFT synthesis of kernels and decay checks.
//! * [`hardy`]: `(p, mu)`-atoms, weak-`L^p` and `L^p` quasinorms.
//! * [`riesz`]: Riesz means, maximal fields and the end-to-end boundedness experiments.
//! * [`harness`]: configuration, validation, orchestration and persistence.

pub mod decomp;
pub mod error;
pub mod fit;
pub mod fourier;
pub mod gauge;
pub mod hardy;
pub mod harness;
pub mod quadrature;
pub mod riesz;
pub mod surface;

pub use error::{Error, Result};
