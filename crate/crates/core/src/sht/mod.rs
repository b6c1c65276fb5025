//! Spherical harmonics and transforms between coefficients and grids.
//!
//! Conventions: Condon–Shortley phase, orthonormal Y_lm, longitudes on
//! [0, 2pi), Gauss–Legendre colatitudes.

mod alm;
mod grid;
mod legendre;
mod transform;

pub(crate) use alm::ExpandedAlm;
pub use alm::HarmonicCoefficients;
pub use grid::{GridSpec, SphereGrid};
pub use legendre::{gauss_legendre_rule, legendre_normalized, ylm};
pub use transform::{analyze, phi_transform_direct, phi_transform_fft, synthesize};
