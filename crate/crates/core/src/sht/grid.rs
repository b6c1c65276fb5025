use std::fmt::Write as _;
use std::path::Path;

use super::legendre::gauss_legendre_rule;
use crate::error::{invalid, Error, Result};
use crate::io::{parse_field, write_atomic};

/// Sizing request for a Gauss–Legendre x uniform grid.
///
/// The grid resolves exactly the analysis of degrees up to `l_synth` for a
/// sampled field whose own band limit is `band`: n_theta >= ceil((L+B)/2)+1
/// and n_phi >= L+B+1. Products such as T^2 double the band of T, which is
/// why `band` is separate from `l_synth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub l_synth: usize,
    pub band: usize,
    pub oversample: usize,
}

impl GridSpec {
    /// Grid for fields band-limited at `l_synth`.
    pub fn new(l_synth: usize) -> Self {
        Self { l_synth, band: l_synth, oversample: 1 }
    }

    /// Grid that analyzes up to `l_synth` fields of band limit `band`.
    pub fn with_band(l_synth: usize, band: usize) -> Self {
        Self { l_synth, band: band.max(l_synth), oversample: 1 }
    }

    pub fn oversampled(mut self, factor: usize) -> Self {
        self.oversample = factor.max(1);
        self
    }

    pub fn n_theta(&self) -> usize {
        self.oversample * ((self.l_synth + self.band).div_ceil(2) + 1)
    }

    /// Uniform longitude count, rounded up to a 2^a 3^b 5^c FFT size.
    pub fn n_phi(&self) -> usize {
        next_smooth(self.oversample * (self.l_synth + self.band + 1))
    }
}

fn next_smooth(n: usize) -> usize {
    let mut k = n.max(1);
    loop {
        let mut r = k;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return k;
        }
        k += 1;
    }
}

/// Real field samples on Gauss–Legendre colatitudes x uniform longitudes
/// phi_j = 2 pi j / n_phi, j = 0..n_phi.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    cos_theta: Vec<f64>,
    theta_nodes: Vec<f64>,
    theta_weights: Vec<f64>,
    values: Vec<f64>,
    band: Option<usize>,
}

impl SphereGrid {
    pub fn zeros(spec: &GridSpec) -> Self {
        let mut g = Self::with_shape(spec.n_theta(), spec.n_phi());
        g.band = Some(spec.band);
        g
    }

    fn with_shape(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre_rule(n_theta);
        let theta = x.iter().map(|x| x.acos()).collect();
        Self {
            n_theta,
            n_phi,
            cos_theta: x,
            theta_nodes: theta,
            theta_weights: w,
            values: vec![0.0; n_theta * n_phi],
            band: None,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn theta_weights(&self) -> &[f64] {
        &self.theta_weights
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_phi as f64
    }

    /// Declared band limit of the sampled field, if known.
    pub fn band(&self) -> Option<usize> {
        self.band
    }

    pub fn set_band(&mut self, band: Option<usize>) {
        self.band = band;
    }

    /// Row-major values, n_theta rows of n_phi samples.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_phi..(i + 1) * self.n_phi]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_phi + j]
    }

    /// Quadrature mean (1/4pi) \int f dOmega.
    pub fn mean(&self) -> f64 {
        let dphi = 2.0 * std::f64::consts::PI / self.n_phi as f64;
        let mut acc = crate::sum::Neumaier::default();
        for i in 0..self.n_theta {
            let row: f64 = self.row(i).iter().sum();
            acc.add(self.theta_weights[i] * row * dphi);
        }
        acc.value() / (4.0 * std::f64::consts::PI)
    }

    /// Pointwise map producing a grid of the same geometry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = f(*v);
        }
        out
    }

    /// Check that analysis up to degree `l` of this grid is alias-free.
    pub fn check_resolves(&self, l: usize) -> Result<()> {
        let b = self.band.unwrap_or(l).max(l);
        let need_theta = (l + b).div_ceil(2) + 1;
        let need_phi = l + b + 1;
        if self.n_theta < need_theta || self.n_phi < need_phi {
            return Err(Error::Aliasing(format!(
                "grid {}x{} cannot resolve degree {l} of a band-{b} field (needs {need_theta}x{need_phi})",
                self.n_theta, self.n_phi
            )));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("n_theta,n_phi\n{},{}\n", self.n_theta, self.n_phi);
        for i in 0..self.n_theta {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "n_theta,n_phi" => {}
            _ => return Err(Error::Parse("expected header `n_theta,n_phi`".into())),
        }
        let (ln, dims) = lines.next().ok_or_else(|| Error::Parse("missing grid shape".into()))?;
        let dims: Vec<&str> = dims.split(',').map(str::trim).collect();
        if dims.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected n_theta,n_phi", ln + 1)));
        }
        let n_theta: usize = parse_field(dims[0], ln + 1, "n_theta")?;
        let n_phi: usize = parse_field(dims[1], ln + 1, "n_phi")?;
        if n_theta == 0 || n_phi == 0 {
            return Err(invalid!("grid dimensions must be positive"));
        }
        let mut g = Self::with_shape(n_theta, n_phi);
        let mut rows = 0;
        for (i, line) in lines {
            if rows == n_theta {
                return Err(Error::Parse(format!("line {}: more than {n_theta} rows", i + 1)));
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != n_phi {
                return Err(Error::Parse(format!("line {}: expected {n_phi} values", i + 1)));
            }
            for (j, f) in fields.iter().enumerate() {
                g.values[rows * n_phi + j] = parse_field(f, i + 1, "value")?;
            }
            rows += 1;
        }
        if rows != n_theta {
            return Err(Error::Parse(format!("expected {n_theta} rows, found {rows}")));
        }
        Ok(g)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}
