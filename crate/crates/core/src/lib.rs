//! Band-limited random fields on the sphere.
//!
//! The crate covers the full chain from Wigner coupling coefficients to
//! Monte Carlo size and power studies of harmonic-space Gaussianity tests:
//!
//! * [`wigner`]: 3j and 6j symbols, Gaunt integrals, an exact rational oracle.
//! * [`sht`]: normalized Legendre functions, Gauss–Legendre grids and
//!   spherical harmonic transforms.
//! * [`estimators`]: sample power spectrum, bispectrum, normalized bispectra
//!   and their closed-form Gaussian moments.
//! * [`diagrams`]: brute-force moment evaluation over Wick pairings.
//! * [`gaussianity`]: the J-process partial-sum tests and their sup statistics.
//! * [`harness`]: field simulation, the quadratic non-Gaussian model and the
//!   Monte Carlo study driver.

pub mod diagrams;
pub mod error;
pub mod estimators;
pub mod gaussianity;
pub mod harness;
pub(crate) mod io;
pub mod sht;
pub(crate) mod sum;
pub mod wigner;

pub use error::{Error, Result};
pub use io::write_atomic;
pub use estimators::{BispectrumKind, BispectrumOrdinate, PowerSpectrum};
pub use gaussianity::{Statistic, TestConfig, TestProcessPath};
pub use harness::{SpectrumModel, StudyManifest, StudyReport};
pub use num_complex::Complex64;
pub use sht::{GridSpec, HarmonicCoefficients, SphereGrid};
pub use wigner::{SixJArguments, ThreeJCache, TripleLM};
