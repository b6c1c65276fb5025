//! Forward and inverse spherical harmonic transforms on Gauss–Legendre grids.
//!
//! Synthesis runs one colatitude row per task: Legendre sums give the
//! Fourier coefficients F_m(theta), and an inverse FFT of the Hermitian
//! extension yields F_0 + 2 Re sum_{m>0} F_m e^{i m phi}. Analysis runs one
//! order m per task, accumulating rows in a fixed order. Both are independent
//! of the worker count.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::legendre::recursion_coefficients;
use super::{GridSpec, HarmonicCoefficients, SphereGrid};
use crate::error::{invalid, Error, Result};

/// Recursion coefficients for all (l, m) up to a band limit.
struct LegendreTables {
    l_max: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    sectoral: Vec<f64>,
}

impl LegendreTables {
    fn new(l_max: usize) -> Self {
        let n = (l_max + 1) * (l_max + 2) / 2;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for m in 0..=l_max {
            for l in m + 2..=l_max {
                let (x, y) = recursion_coefficients(l, m);
                a[l * (l + 1) / 2 + m] = x;
                b[l * (l + 1) / 2 + m] = y;
            }
        }
        let sectoral = (0..=l_max)
            .map(|m| if m == 0 { 0.0 } else { -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() })
            .collect();
        Self { l_max, a, b, sectoral }
    }

    /// lambda_mm(x) for m = 0..=l_max at one colatitude.
    fn sectorals(&self, s: f64, out: &mut Vec<f64>) {
        out.clear();
        let mut v = 1.0 / (4.0 * PI).sqrt();
        out.push(v);
        for m in 1..=self.l_max {
            v *= self.sectoral[m] * s;
            out.push(v);
        }
    }

    /// Visit lambda_lm(x) for l = m..=l_top, starting from lambda_mm.
    #[inline]
    fn walk(&self, m: usize, l_top: usize, x: f64, pmm: f64, mut f: impl FnMut(usize, f64)) {
        if m > l_top {
            return;
        }
        f(m, pmm);
        if m == l_top {
            return;
        }
        let mut prev = pmm;
        let mut cur = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        f(m + 1, cur);
        for l in m + 2..=l_top {
            let k = l * (l + 1) / 2 + m;
            let next = self.a[k] * (x * cur - self.b[k] * prev);
            prev = cur;
            cur = next;
            f(l, cur);
        }
    }
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut p = FftPlanner::new();
    if forward {
        p.plan_fft_forward(n)
    } else {
        p.plan_fft_inverse(n)
    }
}

/// Evaluate sum_{l,m} a_lm Y_lm on the grid described by `spec`.
pub fn synthesize(alm: &HarmonicCoefficients, spec: &GridSpec) -> Result<SphereGrid> {
    let l_max = alm.band_limit();
    if spec.l_synth < l_max {
        return Err(invalid!(
            "grid spec resolves degree {} but coefficients reach {l_max}",
            spec.l_synth
        ));
    }
    let mut grid = SphereGrid::zeros(spec);
    let n_phi = grid.n_phi();
    if n_phi < 2 * l_max + 1 {
        return Err(Error::Aliasing(format!("n_phi = {n_phi} < 2L+1 = {}", 2 * l_max + 1)));
    }
    let tables = LegendreTables::new(l_max);
    let fft = plan(n_phi, false);
    let l_min = alm.l_min();
    let cos = grid.cos_theta().to_vec();

    let rows: Vec<Result<Vec<f64>>> = cos
        .par_iter()
        .map(|&x| {
            let s = ((1.0 - x) * (1.0 + x)).sqrt();
            let mut pmm = Vec::with_capacity(l_max + 1);
            tables.sectorals(s, &mut pmm);
            let mut buf = vec![Complex64::new(0.0, 0.0); n_phi];
            let mut scale = 0.0;
            for m in 0..=l_max {
                let mut acc = Complex64::new(0.0, 0.0);
                tables.walk(m, l_max, x, pmm[m], |l, p| {
                    if l >= l_min {
                        acc += alm.get_nonneg(l, m) * p;
                    }
                });
                scale += acc.norm();
                if m == 0 {
                    buf[0] = acc;
                } else {
                    buf[m] = acc;
                    buf[n_phi - m] = acc.conj();
                }
            }
            fft.process(&mut buf);
            let tol = 1e-10 * scale.max(1.0);
            let mut row = Vec::with_capacity(n_phi);
            for z in &buf {
                if z.im.abs() > tol {
                    return Err(Error::Numeric(format!(
                        "synthesized field has imaginary residue {:e}",
                        z.im
                    )));
                }
                row.push(z.re);
            }
            Ok(row)
        })
        .collect();

    let vals = grid.values_mut();
    for (i, row) in rows.into_iter().enumerate() {
        vals[i * n_phi..(i + 1) * n_phi].copy_from_slice(&row?);
    }
    Ok(grid)
}

/// Quadrature estimate of a_lm = \int f conj(Y_lm) dOmega for l_min <= l <= L.
pub fn analyze(grid: &SphereGrid, l_max: usize, l_min: usize) -> Result<HarmonicCoefficients> {
    if l_min > l_max {
        return Err(invalid!("l_min = {l_min} exceeds L = {l_max}"));
    }
    grid.check_resolves(l_max)?;
    let n_theta = grid.n_theta();
    let n_phi = grid.n_phi();
    let fft = plan(n_phi, true);
    let dphi = 2.0 * PI / n_phi as f64;

    // G[i][m] = w_i dphi sum_j f(theta_i, phi_j) e^{-i m phi_j}
    let g: Vec<Vec<Complex64>> = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            let mut buf: Vec<Complex64> = grid.row(i).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.process(&mut buf);
            let w = grid.theta_weights()[i] * dphi;
            buf.truncate(l_max + 1);
            for z in buf.iter_mut() {
                *z *= w;
            }
            buf
        })
        .collect();

    let tables = LegendreTables::new(l_max);
    let cos = grid.cos_theta();
    let pmm: Vec<Vec<f64>> = cos
        .par_iter()
        .map(|&x| {
            let mut v = Vec::with_capacity(l_max + 1);
            tables.sectorals(((1.0 - x) * (1.0 + x)).sqrt(), &mut v);
            v
        })
        .collect();

    let per_m: Vec<Vec<Complex64>> = (0..=l_max)
        .into_par_iter()
        .map(|m| {
            let mut acc = vec![Complex64::new(0.0, 0.0); l_max + 1 - m];
            for i in 0..n_theta {
                let gm = g[i][m];
                tables.walk(m, l_max, cos[i], pmm[i][m], |l, p| {
                    acc[l - m] += gm * p;
                });
            }
            acc
        })
        .collect();

    let mut out = HarmonicCoefficients::zeros(l_min, l_max)?;
    for (m, col) in per_m.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            let l = m + k;
            if l >= l_min {
                out.set_unchecked(l, m, v);
            }
        }
    }
    Ok(out)
}

/// Longitude transform by direct summation, the reference for the FFT path.
pub fn phi_transform_direct(row: &[f64], m_max: usize) -> Vec<Complex64> {
    let n = row.len();
    (0..=m_max)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in row.iter().enumerate() {
                // reduce the phase index first so the angle stays small
                let k = (m * j) % n;
                let ang = -2.0 * PI * k as f64 / n as f64;
                acc += Complex64::from_polar(v, ang);
            }
            acc
        })
        .collect()
}

/// Longitude transform through the FFT (same convention as the direct sum).
pub fn phi_transform_fft(row: &[f64], m_max: usize) -> Vec<Complex64> {
    let fft = plan(row.len(), true);
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    buf.truncate(m_max + 1);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sht::ylm;

    #[test]
    fn single_dipole_term() {
        let mut a = HarmonicCoefficients::zeros(0, 4).unwrap();
        a.set(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        let g = synthesize(&a, &GridSpec::new(4)).unwrap();
        let c = (3.0 / (4.0 * PI)).sqrt();
        for i in 0..g.n_theta() {
            for j in 0..g.n_phi() {
                assert!((g.get(i, j) - c * g.cos_theta()[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_field() {
        let a = HarmonicCoefficients::zeros(1, 6).unwrap();
        let g = synthesize(&a, &GridSpec::new(6)).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_pointwise_harmonics() {
        let mut a = HarmonicCoefficients::zeros(1, 5).unwrap();
        a.set(3, 2, Complex64::new(0.3, -0.7)).unwrap();
        a.set(5, 5, Complex64::new(-1.1, 0.2)).unwrap();
        let g = synthesize(&a, &GridSpec::new(5)).unwrap();
        for i in [0, 2, 5] {
            for j in [0, 3, 7] {
                let (th, ph) = (g.theta_nodes()[i], g.phi(j));
                let mut v = Complex64::new(0.0, 0.0);
                for (l, m) in [(3usize, 2i64), (5, 5)] {
                    v += a.get(l, m) * ylm(l, m, th, ph).unwrap();
                    v += a.get(l, -m) * ylm(l, -m, th, ph).unwrap();
                }
                assert!(v.im.abs() < 1e-14);
                assert!((g.get(i, j) - v.re).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn constant_grid_analysis() {
        let mut g = SphereGrid::zeros(&GridSpec::new(8));
        for v in g.values_mut() {
            *v = 2.5;
        }
        let a = analyze(&g, 8, 0).unwrap();
        assert!((a.get(0, 0).re - 2.5 * (4.0 * PI).sqrt()).abs() < 1e-12);
        for (l, _, v) in a.iter() {
            if l > 0 {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let row: Vec<f64> = (0..750).map(|j| ((j * 37 % 101) as f64 - 50.0) / 7.0).collect();
        let d = phi_transform_direct(&row, 300);
        let f = phi_transform_fft(&row, 300);
        let scale: f64 = row.iter().map(|v| v.abs()).sum();
        for (a, b) in d.iter().zip(&f) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn spec_too_small() {
        let a = HarmonicCoefficients::zeros(1, 10).unwrap();
        assert!(synthesize(&a, &GridSpec::new(9)).is_err());
    }
}
