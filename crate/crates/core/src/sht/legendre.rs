use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const BIG: f64 = 1.0e250;

/// Fully normalized associated Legendre function
/// sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_lm(x), Condon–Shortley phase included.
///
/// The sectoral seed sin^m(theta) is carried with a separate binary
/// exponent, so the recursion neither overflows nor loses the value to
/// underflow for degrees in the thousands.
pub fn legendre_normalized(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain(format!("legendre order m = {m} exceeds l = {l}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("legendre argument {x} outside [-1, 1]")));
    }
    let s = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut v = 1.0 / (4.0 * PI).sqrt();
    let mut exp: i32 = 0;
    for k in 1..=m {
        v *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
        if v == 0.0 {
            return Ok(0.0);
        }
        if v.abs() < 1.0 / BIG {
            v *= BIG;
            exp -= 1;
        }
    }
    if l == m {
        return Ok(unscale(v, exp));
    }
    let mut prev = v;
    let mut cur = (2.0 * m as f64 + 3.0).sqrt() * x * v;
    for ll in m + 2..=l {
        let (a, b) = recursion_coefficients(ll, m);
        let next = a * (x * cur - b * prev);
        prev = cur;
        cur = next;
        if exp < 0 && cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            exp += 1;
        }
    }
    Ok(unscale(cur, exp))
}

#[inline]
fn unscale(v: f64, exp: i32) -> f64 {
    let mut v = v;
    for _ in 0..(-exp) {
        v /= BIG;
        if v == 0.0 {
            break;
        }
    }
    v
}

/// Coefficients of lambda_lm = a (x lambda_{l-1,m} - b lambda_{l-2,m}).
#[inline]
pub(crate) fn recursion_coefficients(l: usize, m: usize) -> (f64, f64) {
    let (lf, mf) = (l as f64, m as f64);
    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
    let lm1 = lf - 1.0;
    let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
    (a, b)
}

/// Spherical harmonic Y_lm(theta, phi) with the Condon–Shortley phase;
/// negative orders via Y_{l,-m} = (-1)^m conj(Y_lm).
pub fn ylm(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::Domain(format!("|m| = {am} exceeds l = {l}")));
    }
    let p = legendre_normalized(l, am, theta.cos().clamp(-1.0, 1.0))?;
    let y = Complex64::from_polar(1.0, am as f64 * phi) * p;
    if m >= 0 {
        Ok(y)
    } else if am % 2 == 0 {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// Gauss–Legendre nodes (descending, so that theta = acos(x) ascends) and weights.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs n >= 1");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_p_and_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// P_n(z) and P_n'(z) by the three-term recursion.
fn legendre_p_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
