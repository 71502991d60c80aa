//! Strong-coupling spectral structure of the Fröhlich polaron.
//!
//! The pipeline runs in stages, each a pure function of its inputs:
//!
//! 1. [`pekar_solver`]: the radial Pekar minimizer `(ψ, φ)` and its
//!    scalars `e_pek`, `λ_pek`, the effective mass `m_lp`.
//! 2. [`hessian_spectrum`]: the field Hessian `H_K` in partial-wave
//!    momentum sectors, its eigenvalues, traces and zero-point energy.
//! 3. [`bogoliubov_ladder`]: the free boson ladder `Λ⁽ⁿ⁾` of multiset
//!    sums of `√λ`.
//! 4. [`band_calculator`]: band upper bounds, essential-spectrum edge,
//!    critical momentum and bound-state counts.
//! 5. [`trial_kernels`]: the displaced-field kernels `w_{P,y}`, their
//!    projections, `g_P(y)` and the weight function `n_{δ,η}`.
//!
//! Units: lengths in strong-coupling units with kinetic energy `−Δ`; the
//! electron Pekar functional is
//! `E(u) = ∫|∇u|² − (1/4π)∬|u(x)|²|u(y)|²/|x−y|`.
//!
//! Independent sector, cutoff and sweep evaluations are scheduled through
//! [`exec::Exec`]; results never depend on the thread count.

pub mod band_calculator;
pub mod bogoliubov_ladder;
pub mod error;
pub mod exec;
pub mod hessian_spectrum;
pub mod pekar_solver;
pub mod radial_numerics;
pub mod trial_kernels;

pub use error::{PolaronError, Result};

/// Crate version, recorded in artifacts and caches.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use exec::Exec;
