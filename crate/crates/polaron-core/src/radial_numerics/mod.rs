//! Grids, quadrature, special functions, radial convolutions and the
//! dense symmetric eigensolver used by every other module.
//!
//! Conventions: electron-side radial functions `f(r)` carry the measure
//! `4π r² dr` for `ℓ = 0` (see [`RadialFn::norm_sq`]); field-side
//! momentum amplitudes carry `k² dk` per partial wave.

mod banded;
mod bessel;
mod convolve;
mod eig;
mod grid;
mod momentum;

pub use banded::{radial_operator, PentaLdl, SymPenta};
pub use bessel::{spherical_bessel, spherical_bessel_all, MAX_ORDER};
pub use convolve::{
    coulomb_convolve, cumulative_integral, inverse_square_convolve,
    inverse_square_convolve_with_tail, legendre_chi2,
};
pub use eig::{dot, sym_eig, DenseMatrix, SymEigen};
pub use grid::{make_radial_grid, Mapping, RadialFn, RadialGrid, LOG_STRETCH};
pub use momentum::{gauss_legendre, make_momentum_grid, MomentumGrid, POINTS_PER_PANEL};
