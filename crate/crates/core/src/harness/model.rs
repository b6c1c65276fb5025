use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::estimators::PowerSpectrum;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumKind {
    /// C_l = A l^{-alpha}.
    PowerLaw,
    /// C_l = A / (l (l+1)).
    SachsWolfe,
}

impl SpectrumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumKind::PowerLaw => "power_law",
            SpectrumKind::SachsWolfe => "sw",
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectrumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "power_law" => Ok(SpectrumKind::PowerLaw),
            "sw" | "sachs_wolfe" | "sachs_wolfe_like" => Ok(SpectrumKind::SachsWolfe),
            other => Err(invalid!("unknown spectrum `{other}` (expected power_law or sw)")),
        }
    }
}

/// Analytic angular power spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumModel {
    pub kind: SpectrumKind,
    pub amplitude: f64,
    /// Exponent of the power law; unused by the Sachs-Wolfe shape.
    pub alpha: f64,
}

impl SpectrumModel {
    pub fn power_law(amplitude: f64, alpha: f64) -> Result<Self> {
        Self::new(SpectrumKind::PowerLaw, amplitude, alpha)
    }

    pub fn sachs_wolfe(amplitude: f64) -> Result<Self> {
        Self::new(SpectrumKind::SachsWolfe, amplitude, 2.0)
    }

    pub fn new(kind: SpectrumKind, amplitude: f64, alpha: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(invalid!("spectrum amplitude must be positive, got {amplitude}"));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid!("spectral exponent must be non-negative, got {alpha}"));
        }
        Ok(Self { kind, amplitude, alpha })
    }

    /// C_l; both shapes are singular at l = 0, which needs alpha = 0.
    pub fn cl(&self, l: usize) -> Result<f64> {
        let x = l as f64;
        let v = match self.kind {
            SpectrumKind::PowerLaw if l == 0 && self.alpha > 0.0 => {
                return Err(invalid!("power law with alpha = {} is singular at l = 0", self.alpha))
            }
            SpectrumKind::PowerLaw => self.amplitude * x.powf(-self.alpha),
            SpectrumKind::SachsWolfe if l == 0 => return Err(invalid!("Sachs-Wolfe shape is singular at l = 0")),
            SpectrumKind::SachsWolfe => self.amplitude / (x * (x + 1.0)),
        };
        Ok(v)
    }

    pub fn power_spectrum(&self, l_min: usize, l_max: usize) -> Result<PowerSpectrum> {
        let values = (l_min..=l_max).map(|l| self.cl(l)).collect::<Result<Vec<_>>>()?;
        PowerSpectrum::new(l_min, values)
    }

    /// E T^2 = sum_{l=l_min}^{L} (2l+1) C_l / 4 pi.
    pub fn variance_of_field(&self, l_min: usize, l_max: usize) -> Result<f64> {
        let mut s = 0.0;
        for l in l_min..=l_max {
            s += (2 * l + 1) as f64 * self.cl(l)?;
        }
        Ok(s / (4.0 * std::f64::consts::PI))
    }

    /// Same shape with the amplitude solved so the field variance equals `target`.
    pub fn with_variance(&self, l_min: usize, l_max: usize, target: f64) -> Result<Self> {
        if !(target.is_finite() && target > 0.0) {
            return Err(invalid!("variance target must be positive, got {target}"));
        }
        let v = self.variance_of_field(l_min, l_max)?;
        Self::new(self.kind, self.amplitude * target / v, self.alpha)
    }
}

/// Variance of a field with an arbitrary tabulated spectrum.
pub fn variance_of_spectrum(cl: &PowerSpectrum) -> f64 {
    let s: f64 = cl.values().iter().zip(cl.l_min()..).map(|(c, l)| (2 * l + 1) as f64 * c).sum();
    s / (4.0 * std::f64::consts::PI)
}
