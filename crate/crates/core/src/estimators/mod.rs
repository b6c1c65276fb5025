//! Sample power spectrum, bispectrum, normalized bispectra and their
//! Gaussian moments.

mod bispectrum;
mod moments;
mod spectrum;

pub use bispectrum::{
    estimate_bispectrum, normalized_bispectrum, normalized_bispectrum_hat, ordinates_from_csv, ordinates_to_csv,
    write_ordinates, BispectrumEstimator, BispectrumKind, BispectrumOrdinate,
};
pub use moments::{
    delta_factor, g_factor, moment_I, moment_I2, moment_I4_offdiag, moment_Ihat, u_mixed_moment, uhat_mixed_moment,
    Exactness, MomentValue,
};
pub use spectrum::{estimate_cl, estimate_cl_all, PowerSpectrum};
