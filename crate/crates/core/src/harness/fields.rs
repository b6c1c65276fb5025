use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::model::SpectrumModel;
use crate::error::{Error, Result};
use crate::estimators::PowerSpectrum;
use crate::sht::{analyze, synthesize, GridSpec, HarmonicCoefficients, SphereGrid};
use crate::wigner::{triangle_ok, wigner_3j_zero};

/// How E T^2 in T + f (T^2 - E T^2) is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum MeanEstimate {
    /// Quadrature mean of the realized T^2, so the quadratic term is exactly mean free.
    #[default]
    Realized,
    /// A known ensemble value, normally sum (2l+1) C_l / 4 pi of the generating spectrum.
    Ensemble(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonGaussianConfig {
    pub f_nl: f64,
    /// Var T the spectrum was normalized to.
    pub variance_target: f64,
    pub mean: MeanEstimate,
}

impl NonGaussianConfig {
    pub fn new(f_nl: f64) -> Self {
        Self { f_nl, variance_target: 1e-8, mean: MeanEstimate::Realized }
    }

    /// Rough ratio sd(f T^2) / sd(T) = sqrt(2) f sd(T) for Gaussian T.
    pub fn signal_fraction(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.f_nl.abs() * self.variance_target.sqrt()
    }
}

/// Gaussian coefficients with E|a_lm|^2 = C_l for l_min <= l <= L.
///
/// a_l0 is real N(0, C_l); for m > 0 the real and imaginary parts are
/// independent N(0, C_l / 2). Draws are taken in (l, m) order, real part first.
pub fn sample_gaussian_alm<R: Rng + ?Sized>(
    model: &SpectrumModel,
    l_min: usize,
    l_max: usize,
    rng: &mut R,
) -> Result<HarmonicCoefficients> {
    let mut a = HarmonicCoefficients::zeros(l_min, l_max)?;
    for l in l_min..=l_max {
        let c = model.cl(l)?;
        let (s0, s) = (c.sqrt(), (0.5 * c).sqrt());
        let re: f64 = rng.sample(StandardNormal);
        a.set_unchecked(l, 0, Complex64::new(s0 * re, 0.0));
        for m in 1..=l {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            a.set_unchecked(l, m, Complex64::new(s * re, s * im));
        }
    }
    Ok(a)
}

/// Grid on which T^2 of a band-L field is analyzed without aliasing.
pub fn quadratic_grid(l_max: usize) -> GridSpec {
    GridSpec::with_band(l_max, 2 * l_max)
}

fn squared_minus_mean(t: &SphereGrid, mean: MeanEstimate) -> SphereGrid {
    let mut sq = t.map(|x| x * x);
    let m = match mean {
        MeanEstimate::Realized => sq.mean(),
        MeanEstimate::Ensemble(v) => v,
    };
    for v in sq.values_mut() {
        *v -= m;
    }
    sq
}

/// Coefficients of T^2 - E T^2 up to `l_out`, over the multipoles of `alm`.
///
/// The non-Gaussian field is linear in f_nl given T, so a study computes this
/// once per realization and forms a + f Q for every f_nl it needs.
pub fn quadratic_component(alm: &HarmonicCoefficients, l_out: usize, mean: MeanEstimate) -> Result<HarmonicCoefficients> {
    let t = synthesize(alm, &quadratic_grid(alm.band_limit().max(l_out)))?;
    analyze(&squared_minus_mean(&t, mean), l_out, alm.l_min())
}

/// Coefficients of T + f (T^2 - E T^2), analyzed up to `l_out`.
///
/// Only a_00 depends on the mean, so the choice is invisible whenever l_min >= 1.
pub fn make_nongaussian_alm(alm: &HarmonicCoefficients, cfg: &NonGaussianConfig, l_out: usize) -> Result<HarmonicCoefficients> {
    if cfg.f_nl == 0.0 {
        return alm.truncated(l_out);
    }
    let l = alm.band_limit().max(l_out);
    let t = synthesize(alm, &quadratic_grid(l))?;
    let q = squared_minus_mean(&t, cfg.mean);
    let mut ng = t.clone();
    for (v, w) in ng.values_mut().iter_mut().zip(q.values()) {
        *v += cfg.f_nl * w;
    }
    analyze(&ng, l_out, alm.l_min())
}

/// G f_nl h (l1 l2 l3; 0 0 0) (C1 C2 + C2 C3 + C1 C3), h = sqrt((2l1+1)(2l2+1)(2l3+1)/4pi).
///
/// For the quadratic model T + f (T^2 - E T^2) the leading-order sample
/// bispectrum has G = 2.
pub fn sachs_wolfe_bispectrum(l1: usize, l2: usize, l3: usize, cl: &PowerSpectrum, f_nl: f64, g: f64) -> Result<f64> {
    let (a, b, c) = (l1 as i32, l2 as i32, l3 as i32);
    if !triangle_ok(a, b, c) {
        return Err(Error::Domain(format!("({l1}, {l2}, {l3}) violates the triangle rule")));
    }
    if (l1 + l2 + l3) % 2 == 1 {
        return Err(Error::Domain(format!("({l1}, {l2}, {l3}) has an odd sum")));
    }
    let (c1, c2, c3) = (cl.get(l1)?, cl.get(l2)?, cl.get(l3)?);
    let h = ((2 * l1 + 1) as f64 * (2 * l2 + 1) as f64 * (2 * l3 + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt();
    Ok(g * f_nl * h * wigner_3j_zero(a, b, c) * (c1 * c2 + c2 * c3 + c1 * c3))
}
