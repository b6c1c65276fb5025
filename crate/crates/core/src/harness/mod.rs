//! Field generation, theoretical bispectra and Monte Carlo size and power studies.

mod fields;
mod model;
mod study;

pub use fields::{
    make_nongaussian_alm, quadratic_component, quadratic_grid, sachs_wolfe_bispectrum, sample_gaussian_alm,
    MeanEstimate, NonGaussianConfig,
};
pub use model::{variance_of_spectrum, SpectrumKind, SpectrumModel};
pub use study::{
    empirical_quantile, replication_rng, run_power_study, run_size_study, run_study, threads_from_env, CellResult,
    StudyManifest, StudyReport, THREADS_ENV,
};
