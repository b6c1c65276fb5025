use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::io::{csv_rows, parse_field, write_atomic};
use crate::sht::HarmonicCoefficients;

/// Angular power spectrum C_l over l_min..=L, strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrum {
    l_min: usize,
    values: Vec<f64>,
}

impl PowerSpectrum {
    pub fn new(l_min: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid!("power spectrum needs at least one multipole"));
        }
        for (k, &c) in values.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid!("C_{} = {c} is not strictly positive", l_min + k));
            }
        }
        Ok(Self { l_min, values })
    }

    pub fn from_fn(l_min: usize, l_max: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        if l_min > l_max {
            return Err(invalid!("l_min = {l_min} exceeds L = {l_max}"));
        }
        Self::new(l_min, (l_min..=l_max).map(f).collect())
    }

    pub fn l_min(&self) -> usize {
        self.l_min
    }

    pub fn band_limit(&self) -> usize {
        self.l_min + self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, l: usize) -> Result<f64> {
        if l < self.l_min || l > self.band_limit() {
            return Err(invalid!("multipole {l} outside {}..={}", self.l_min, self.band_limit()));
        }
        Ok(self.values[l - self.l_min])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,cl\n");
        for (k, c) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{},{c:e}", self.l_min + k);
        }
        s
    }

    /// Parse `l,cl` with consecutive multipoles.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut l_min = None;
        let mut values = Vec::new();
        for (line, f) in csv_rows(text, "l,cl")? {
            if f.len() != 2 {
                return Err(Error::Parse(format!("line {line}: expected 2 fields")));
            }
            let l: usize = parse_field(f[0], line, "l")?;
            let c: f64 = parse_field(f[1], line, "cl")?;
            let start = *l_min.get_or_insert(l);
            if l != start + values.len() {
                return Err(Error::Parse(format!("line {line}: multipoles must be consecutive")));
            }
            values.push(c);
        }
        let l_min = l_min.ok_or_else(|| Error::Parse("no multipoles".into()))?;
        Self::new(l_min, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Sample spectrum (1/(2l+1)) sum_m |a_lm|^2.
pub fn estimate_cl(alm: &HarmonicCoefficients, l: usize) -> Result<f64> {
    if !alm.contains(l) {
        return Err(invalid!(
            "multipole {l} outside {}..={}",
            alm.l_min(),
            alm.band_limit()
        ));
    }
    Ok(cl_of(alm, l))
}

#[inline]
pub(crate) fn cl_of(alm: &HarmonicCoefficients, l: usize) -> f64 {
    let row = alm.multipole(l);
    let s = row[0].norm_sqr() + 2.0 * row[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
    s / (2 * l + 1) as f64
}

/// Sample spectrum for every stored multipole, l_min..=L (may contain zeros).
pub fn estimate_cl_all(alm: &HarmonicCoefficients) -> Vec<f64> {
    (alm.l_min()..=alm.band_limit()).map(|l| cl_of(alm, l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn single_term() {
        let mut a = HarmonicCoefficients::zeros(1, 4).unwrap();
        a.set(3, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(estimate_cl(&a, 3).unwrap(), 1.0 / 7.0);
        assert_eq!(estimate_cl(&a, 2).unwrap(), 0.0);
        assert!(estimate_cl(&a, 0).is_err());
        assert!(estimate_cl(&a, 5).is_err());
    }

    #[test]
    fn positivity_and_csv() {
        assert!(PowerSpectrum::new(1, vec![1.0, 0.0]).is_err());
        assert!(PowerSpectrum::new(1, vec![1.0, f64::NAN]).is_err());
        let c = PowerSpectrum::from_fn(2, 6, |l| 1.0 / (l * l) as f64).unwrap();
        assert_eq!(c.band_limit(), 6);
        let d = PowerSpectrum::from_csv(&c.to_csv()).unwrap();
        assert_eq!(c, d);
        assert!(PowerSpectrum::from_csv("l,cl\n2,1\n4,1\n").is_err());
        assert!(PowerSpectrum::from_csv("l,cl\n2,-1\n").is_err());
    }
}
