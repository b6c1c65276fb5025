use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use super::spectrum::{cl_of, PowerSpectrum};
use crate::error::{invalid, Error, Result};
use crate::io::{csv_rows, parse_field, write_atomic};
use crate::sht::{ExpandedAlm, HarmonicCoefficients};
use crate::sum::ComplexNeumaier;
use crate::wigner::{row_unchecked, triangle_ok};

/// Which bispectrum quantity an ordinate carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BispectrumKind {
    /// Angle-averaged sample bispectrum B.
    Raw,
    /// Normalized with a known spectrum, I.
    Normalized,
    /// Normalized with the sample spectrum, I-hat.
    NormalizedHat,
}

impl BispectrumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Raw => "B",
            Self::Normalized => "I",
            Self::NormalizedHat => "Ihat",
        }
    }
}

impl fmt::Display for BispectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BispectrumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "raw" => Ok(Self::Raw),
            "I" | "normalized" => Ok(Self::Normalized),
            "Ihat" | "normalized_hat" => Ok(Self::NormalizedHat),
            _ => Err(Error::Parse(format!("unknown bispectrum kind `{s}` (B, I, Ihat)"))),
        }
    }
}

/// One bispectrum value at a sorted, admissible multipole triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BispectrumOrdinate {
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
    pub kind: BispectrumKind,
    pub value: f64,
}

impl BispectrumOrdinate {
    pub fn new(l1: usize, l2: usize, l3: usize, kind: BispectrumKind, value: f64) -> Result<Self> {
        if !(l1 <= l2 && l2 <= l3) {
            return Err(invalid!("ordinate ({l1}, {l2}, {l3}) is not sorted"));
        }
        check_admissible(l1, l2, l3)?;
        Ok(Self { l1, l2, l3, kind, value })
    }
}

pub fn ordinates_to_csv(rows: &[BispectrumOrdinate]) -> String {
    let mut s = String::from("l1,l2,l3,kind,value\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{:e}", r.l1, r.l2, r.l3, r.kind, r.value);
    }
    s
}

pub fn ordinates_from_csv(text: &str) -> Result<Vec<BispectrumOrdinate>> {
    let mut out = Vec::new();
    for (line, f) in csv_rows(text, "l1,l2,l3,kind,value")? {
        if f.len() != 5 {
            return Err(Error::Parse(format!("line {line}: expected 5 fields")));
        }
        let kind: BispectrumKind = f[3].parse()?;
        let r = BispectrumOrdinate::new(
            parse_field(f[0], line, "l1")?,
            parse_field(f[1], line, "l2")?,
            parse_field(f[2], line, "l3")?,
            kind,
            parse_field(f[4], line, "value")?,
        )
        .map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_ordinates(path: &Path, rows: &[BispectrumOrdinate]) -> Result<()> {
    write_atomic(path, ordinates_to_csv(rows).as_bytes())
}

fn check_admissible(l1: usize, l2: usize, l3: usize) -> Result<()> {
    if !triangle_ok(l1 as i32, l2 as i32, l3 as i32) {
        return Err(Error::Domain(format!("({l1}, {l2}, {l3}) violates the triangle rule")));
    }
    if (l1 + l2 + l3) % 2 == 1 {
        return Err(Error::Domain(format!(
            "({l1}, {l2}, {l3}) has an odd sum; the normalized bispectrum is defined on even triples only"
        )));
    }
    Ok(())
}

fn sorted(l1: usize, l2: usize, l3: usize) -> [usize; 3] {
    let mut s = [l1, l2, l3];
    s.sort_unstable();
    s
}

#[inline]
fn parity_sign(l1: usize, l2: usize, l3: usize) -> f64 {
    if ((l1 + l2 + l3) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reusable evaluator for many ordinates of one realization.
///
/// Holds the coefficients with negative orders expanded, the sample spectrum
/// and a scratch row, so a study can evaluate hundreds of triples per field
/// without reallocating.
pub struct BispectrumEstimator {
    alm: ExpandedAlm,
    l_min: usize,
    l_max: usize,
    cl_hat: Vec<f64>,
    buf: Vec<f64>,
}

impl BispectrumEstimator {
    pub fn new(alm: &HarmonicCoefficients) -> Self {
        Self {
            alm: ExpandedAlm::new(alm),
            l_min: alm.l_min(),
            l_max: alm.band_limit(),
            cl_hat: (alm.l_min()..=alm.band_limit()).map(|l| cl_of(alm, l)).collect(),
            buf: Vec::new(),
        }
    }

    /// Sample spectrum at l.
    pub fn cl_hat(&self, l: usize) -> Result<f64> {
        self.check_range(l)?;
        Ok(self.cl_hat[l - self.l_min])
    }

    fn check_range(&self, l: usize) -> Result<()> {
        if l < self.l_min || l > self.l_max {
            return Err(invalid!("multipole {l} outside {}..={}", self.l_min, self.l_max));
        }
        Ok(())
    }

    /// Sample bispectrum; permutation invariant, odd sums rejected.
    pub fn raw(&mut self, l1: usize, l2: usize, l3: usize) -> Result<f64> {
        check_admissible(l1, l2, l3)?;
        let [a, b, c] = sorted(l1, l2, l3);
        for l in [a, b, c] {
            self.check_range(l)?;
        }
        // m1 outer over the smallest multipole, m2 inner, m3 implied
        let (la, lb, lc) = (a as i32, b as i32, c as i32);
        let (r1, r2, r3) = (self.alm.multipole(a), self.alm.multipole(b), self.alm.multipole(c));
        let mut acc = ComplexNeumaier::default();
        let mut scale = 0.0;
        for m1 in -la..=la {
            let lo = row_unchecked(la, lb, lc, m1, &mut self.buf);
            let x1 = r1[(m1 + la) as usize];
            let n1 = x1.l1_norm();
            for (k, &w) in self.buf.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let m2 = lo + k as i32;
                let m3 = -m1 - m2;
                let x2 = r2[(m2 + lb) as usize];
                let x3 = r3[(m3 + lc) as usize];
                let t: Complex64 = x1 * x2 * x3 * w;
                scale += w.abs() * n1 * x2.l1_norm() * x3.l1_norm();
                acc.add(t);
            }
        }
        let v = acc.value();
        if v.im.abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Numeric(format!(
                "bispectrum ({a}, {b}, {c}) has imaginary part {:e} against scale {scale:e}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// I = (-1)^{(l1+l2+l3)/2} B / sqrt(C_l1 C_l2 C_l3) with a known spectrum.
    pub fn normalized(&mut self, l1: usize, l2: usize, l3: usize, cl: &PowerSpectrum) -> Result<f64> {
        let d = (cl.get(l1)? * cl.get(l2)? * cl.get(l3)?).sqrt();
        Ok(parity_sign(l1, l2, l3) * self.raw(l1, l2, l3)? / d)
    }

    /// I-hat: as [`Self::normalized`] with the sample spectrum of this realization.
    pub fn normalized_hat(&mut self, l1: usize, l2: usize, l3: usize) -> Result<f64> {
        let b = self.raw(l1, l2, l3)?;
        let d = self.cl_hat(l1)? * self.cl_hat(l2)? * self.cl_hat(l3)?;
        if d <= 0.0 {
            return Err(Error::Numeric(format!(
                "sample spectrum vanishes at one of ({l1}, {l2}, {l3}); realization rejected"
            )));
        }
        Ok(parity_sign(l1, l2, l3) * b / d.sqrt())
    }

    pub fn evaluate(&mut self, l1: usize, l2: usize, l3: usize, kind: BispectrumKind, cl: Option<&PowerSpectrum>) -> Result<f64> {
        match kind {
            BispectrumKind::Raw => self.raw(l1, l2, l3),
            BispectrumKind::NormalizedHat => self.normalized_hat(l1, l2, l3),
            BispectrumKind::Normalized => {
                let cl = cl.ok_or_else(|| invalid!("normalized bispectrum needs a power spectrum"))?;
                self.normalized(l1, l2, l3, cl)
            }
        }
    }
}

/// Angle-averaged sample bispectrum at (l1, l2, l3).
pub fn estimate_bispectrum(alm: &HarmonicCoefficients, l1: usize, l2: usize, l3: usize) -> Result<f64> {
    BispectrumEstimator::new(alm).raw(l1, l2, l3)
}

/// Normalized bispectrum with a known power spectrum.
pub fn normalized_bispectrum(
    alm: &HarmonicCoefficients,
    l1: usize,
    l2: usize,
    l3: usize,
    cl: &PowerSpectrum,
) -> Result<f64> {
    BispectrumEstimator::new(alm).normalized(l1, l2, l3, cl)
}

/// Normalized bispectrum with the sample spectrum of `alm`.
pub fn normalized_bispectrum_hat(alm: &HarmonicCoefficients, l1: usize, l2: usize, l3: usize) -> Result<f64> {
    BispectrumEstimator::new(alm).normalized_hat(l1, l2, l3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner::{wigner_3j, TripleLM};

    fn toy() -> HarmonicCoefficients {
        let mut a = HarmonicCoefficients::zeros(1, 5).unwrap();
        let mut k = 0.0;
        for (l, m, _) in a.clone().iter() {
            k += 1.0;
            let im = if m == 0 { 0.0 } else { (k * 0.37f64).cos() };
            a.set(l, m, Complex64::new((k * 0.91f64).sin(), im)).unwrap();
        }
        a
    }

    #[test]
    fn matches_direct_triple_sum() {
        let a = toy();
        let (l1, l2, l3) = (2i32, 3i32, 5i32);
        let mut want = Complex64::new(0.0, 0.0);
        for m1 in -l1..=l1 {
            for m2 in -l2..=l2 {
                let m3 = -m1 - m2;
                if m3.abs() > l3 {
                    continue;
                }
                let w = wigner_3j(&TripleLM::new(l1, l2, l3, m1, m2, m3)).unwrap();
                want += a.get(2, m1 as i64) * a.get(3, m2 as i64) * a.get(5, m3 as i64) * w;
            }
        }
        let got = estimate_bispectrum(&a, 2, 3, 5).unwrap();
        assert!(want.im.abs() < 1e-13);
        assert!((got - want.re).abs() < 1e-13);
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let a = toy();
        let v = estimate_bispectrum(&a, 2, 3, 5).unwrap();
        assert_eq!(v, estimate_bispectrum(&a, 3, 2, 5).unwrap());
        assert_eq!(v, estimate_bispectrum(&a, 5, 3, 2).unwrap());
    }

    #[test]
    fn rejects_odd_and_out_of_range() {
        let a = toy();
        assert!(matches!(estimate_bispectrum(&a, 2, 3, 4), Err(Error::Domain(_))));
        assert!(estimate_bispectrum(&a, 1, 1, 6).is_err());
        assert!(estimate_bispectrum(&a, 3, 4, 7).is_err());
    }

    #[test]
    fn zero_field() {
        let a = HarmonicCoefficients::zeros(1, 5).unwrap();
        assert_eq!(estimate_bispectrum(&a, 2, 3, 5).unwrap(), 0.0);
        assert!(normalized_bispectrum_hat(&a, 2, 3, 5).is_err());
    }

    #[test]
    fn homogeneity() {
        let a = toy();
        let c = PowerSpectrum::from_fn(1, 5, |l| 1.0 / l as f64).unwrap();
        let c4 = PowerSpectrum::from_fn(1, 5, |l| 4.0 / l as f64).unwrap();
        let i1 = normalized_bispectrum(&a, 2, 3, 5, &c).unwrap();
        let i2 = normalized_bispectrum(&a.scaled(2.0), 2, 3, 5, &c4).unwrap();
        assert!((i1 - i2).abs() < 1e-13 * i1.abs().max(1.0));
        let h1 = normalized_bispectrum_hat(&a, 4, 4, 4).unwrap();
        let h2 = normalized_bispectrum_hat(&a.scaled(-3.5), 4, 4, 4).unwrap();
        // odd scaling flips B and leaves C-hat alone, so I-hat flips sign
        assert!((h1 + h2).abs() < 1e-12 * h1.abs().max(1.0));
    }

    #[test]
    fn ordinate_csv() {
        let rows = vec![
            BispectrumOrdinate::new(2, 3, 5, BispectrumKind::Raw, 0.25).unwrap(),
            BispectrumOrdinate::new(4, 4, 4, BispectrumKind::NormalizedHat, -1.5).unwrap(),
        ];
        assert_eq!(ordinates_from_csv(&ordinates_to_csv(&rows)).unwrap(), rows);
        assert!(BispectrumOrdinate::new(3, 2, 5, BispectrumKind::Raw, 0.0).is_err());
        assert!(BispectrumOrdinate::new(2, 3, 4, BispectrumKind::Raw, 0.0).is_err());
    }
}
