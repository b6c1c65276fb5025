use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::io::{csv_rows, parse_field, write_atomic};

/// Triangular array a_lm for l_min <= l <= L and 0 <= m <= l.
///
/// Negative orders are implied by a_{l,-m} = (-1)^m conj(a_lm), which makes
/// the synthesized field real; a_l0 is therefore kept real.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoefficients {
    l_min: usize,
    l_max: usize,
    values: Vec<Complex64>,
}

#[inline]
fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

impl HarmonicCoefficients {
    pub fn zeros(l_min: usize, l_max: usize) -> Result<Self> {
        if l_min > l_max {
            return Err(invalid!("l_min = {l_min} exceeds band limit {l_max}"));
        }
        let n = tri_index(l_max + 1, 0) - tri_index(l_min, 0);
        Ok(Self { l_min, l_max, values: vec![Complex64::new(0.0, 0.0); n] })
    }

    pub fn l_min(&self) -> usize {
        self.l_min
    }

    /// Band limit L.
    pub fn band_limit(&self) -> usize {
        self.l_max
    }

    #[inline]
    fn offset(&self, l: usize, m: usize) -> usize {
        tri_index(l, m) - tri_index(self.l_min, 0)
    }

    pub fn contains(&self, l: usize) -> bool {
        l >= self.l_min && l <= self.l_max
    }

    /// a_lm for any |m| <= l; zero outside the stored multipole range.
    #[inline]
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        if !self.contains(l) || m.unsigned_abs() as usize > l {
            return Complex64::new(0.0, 0.0);
        }
        let v = self.values[self.offset(l, m.unsigned_abs() as usize)];
        if m >= 0 {
            v
        } else if m % 2 == 0 {
            v.conj()
        } else {
            -v.conj()
        }
    }

    /// Stored value for m >= 0 without bounds translation.
    #[inline]
    pub(crate) fn get_nonneg(&self, l: usize, m: usize) -> Complex64 {
        self.values[self.offset(l, m)]
    }

    pub fn set(&mut self, l: usize, m: usize, value: Complex64) -> Result<()> {
        if !self.contains(l) || m > l {
            return Err(invalid!(
                "(l, m) = ({l}, {m}) outside {}..={} x 0..=l",
                self.l_min,
                self.l_max
            ));
        }
        if m == 0 && value.im != 0.0 {
            return Err(invalid!("a_{{{l},0}} must be real, got imaginary part {}", value.im));
        }
        let k = self.offset(l, m);
        self.values[k] = value;
        Ok(())
    }

    pub(crate) fn set_unchecked(&mut self, l: usize, m: usize, value: Complex64) {
        let k = self.offset(l, m);
        self.values[k] = if m == 0 { Complex64::new(value.re, 0.0) } else { value };
    }

    /// Values for one multipole, m = 0..=l.
    pub fn multipole(&self, l: usize) -> &[Complex64] {
        let k = self.offset(l, 0);
        &self.values[k..k + l + 1]
    }

    /// Copy restricted to l_min..=min(L, l_max).
    pub fn truncated(&self, l_max: usize) -> Result<Self> {
        let top = l_max.min(self.l_max);
        let mut out = Self::zeros(self.l_min, top)?;
        let n = out.values.len();
        out.values.copy_from_slice(&self.values[..n]);
        Ok(out)
    }

    /// Copy with a different lower multipole; dropped entries vanish, new ones are zero.
    pub fn with_l_min(&self, l_min: usize) -> Result<Self> {
        let mut out = Self::zeros(l_min, self.l_max)?;
        for l in l_min.max(self.l_min)..=self.l_max {
            for m in 0..=l {
                out.set_unchecked(l, m, self.get_nonneg(l, m));
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            l_min: self.l_min,
            l_max: self.l_max,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// self + c * other over matching shapes.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        if self.l_min != other.l_min || self.l_max != other.l_max {
            return Err(invalid!("coefficient sets have different multipole ranges"));
        }
        Ok(Self {
            l_min: self.l_min,
            l_max: self.l_max,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b * c).collect(),
        })
    }

    /// Largest |difference| over the shared multipole range.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.l_min.max(other.l_min);
        let hi = self.l_max.min(other.l_max);
        let mut d: f64 = 0.0;
        for l in lo..=hi {
            for m in 0..=l {
                d = d.max((self.get_nonneg(l, m) - other.get_nonneg(l, m)).norm());
            }
        }
        d
    }

    /// `(l, m, a_lm)` for m >= 0 in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (self.l_min..=self.l_max).flat_map(move |l| (0..=l).map(move |m| (l, m, self.get_nonneg(l, m))))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,m,re,im\n");
        for (l, m, v) in self.iter() {
            let _ = writeln!(s, "{l},{m},{:e},{:e}", v.re, v.im);
        }
        s
    }

    /// Parse the `l,m,re,im` format: m >= 0, sorted by (l, m), complete triangle.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (line, f) in csv_rows(text, "l,m,re,im")? {
            if f.len() != 4 {
                return Err(Error::Parse(format!("line {line}: expected 4 fields")));
            }
            let l: usize = parse_field(f[0], line, "l")?;
            let m: usize = parse_field(f[1], line, "m")?;
            let re: f64 = parse_field(f[2], line, "re")?;
            let im: f64 = parse_field(f[3], line, "im")?;
            entries.push((line, l, m, Complex64::new(re, im)));
        }
        let Some(&(_, l_min, m0, _)) = entries.first() else {
            return Err(Error::Parse("no coefficients".into()));
        };
        let l_max = entries.last().map(|e| e.1).unwrap_or(l_min);
        if m0 != 0 {
            return Err(Error::Parse("first entry must have m = 0".into()));
        }
        let mut out = Self::zeros(l_min, l_max)?;
        let mut expect = (l_min, 0usize);
        for (line, l, m, v) in entries {
            if (l, m) != expect {
                return Err(Error::Parse(format!(
                    "line {line}: expected (l, m) = {expect:?}, found ({l}, {m})"
                )));
            }
            out.set(l, m, v)
                .map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
            expect = if m == l { (l + 1, 0) } else { (l, m + 1) };
        }
        if expect != (l_max + 1, 0) {
            return Err(Error::Parse("coefficient triangle is incomplete".into()));
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Dense (l, m) view with negative orders materialized, for estimator loops.
pub(crate) struct ExpandedAlm {
    l_min: usize,
    offsets: Vec<usize>,
    values: Vec<Complex64>,
}

impl ExpandedAlm {
    pub fn new(alm: &HarmonicCoefficients) -> Self {
        let mut offsets = Vec::with_capacity(alm.l_max - alm.l_min + 1);
        let mut values = Vec::new();
        for l in alm.l_min..=alm.l_max {
            offsets.push(values.len() + l);
            for m in -(l as i64)..=(l as i64) {
                values.push(alm.get(l, m));
            }
        }
        Self { l_min: alm.l_min, offsets, values }
    }

    /// Slice over m = -l..=l.
    #[inline]
    pub fn multipole(&self, l: usize) -> &[Complex64] {
        let c = self.offsets[l - self.l_min];
        &self.values[c - l..=c + l]
    }
}
