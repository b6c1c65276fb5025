//! Three-term recursion in m2 for a full row of 3j symbols.
//!
//! For fixed (l1, l2, l3, m1) the values f(m2) = (l1 l2 l3; m1 m2 -m1-m2)
//! satisfy
//!
//!   C(m2+1) f(m2+1) + D(m2) f(m2) + C(m2) f(m2-1) = 0
//!
//! with C and D below. Forward iteration is stable while |f| grows out of
//! the lower forbidden region, backward iteration while it grows out of the
//! upper one, so we run both and splice them where the forward pass first
//! turns over.

use crate::sum::Neumaier;

const RESCALE_AT: f64 = 1e200;

#[inline]
fn coef_c(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64) -> f64 {
    let _ = l1;
    let m3 = -m1 - m2;
    let v = (l2 - m2 + 1) * (l2 + m2) * (l3 + m3 + 1) * (l3 - m3);
    (v.max(0) as f64).sqrt()
}

#[inline]
fn coef_d(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64) -> f64 {
    let m3 = -m1 - m2;
    (l2 * (l2 + 1) + l3 * (l3 + 1) - l1 * (l1 + 1) + 2 * m2 * m3) as f64
}

/// Admissible m2 range of the row, possibly empty (lo > hi).
#[inline]
pub fn m2_range(l2: i32, l3: i32, m1: i32) -> (i32, i32) {
    ((-l2).max(-l3 - m1), l2.min(l3 - m1))
}

/// Fill `out` with the row values for m2 = lo..=hi and return lo.
///
/// Caller guarantees a valid triangle and |m1| <= l1.
pub fn row_into(l1: i32, l2: i32, l3: i32, m1: i32, out: &mut Vec<f64>) -> i32 {
    let (lo, hi) = m2_range(l2, l3, m1);
    out.clear();
    if lo > hi {
        return lo;
    }
    let n = (hi - lo + 1) as usize;
    let (a, b, c, m) = (l1 as i64, l2 as i64, l3 as i64, m1 as i64);
    let lo64 = lo as i64;

    // sign of the value at m2 = lo
    let sign = if lo == -l2 {
        let m3 = -m + b;
        parity(a - b - m3)
    } else {
        parity(a - c + lo64)
    };

    if n == 1 {
        out.push(sign / ((2 * l1 + 1) as f64).sqrt());
        return lo;
    }

    let cc = |k: usize| coef_c(a, b, c, m, lo64 + k as i64);
    let dd = |k: usize| coef_d(a, b, c, m, lo64 + k as i64);

    // forward pass, stops one past the first local maximum of |y|
    out.resize(n, 0.0);
    let y = out;
    y[0] = 1.0;
    y[1] = -dd(0) / cc(1);
    let mut kf = n - 1;
    let mut k = 1;
    while k < n - 1 {
        if y[k].abs() < y[k - 1].abs() {
            kf = k - 1;
            break;
        }
        y[k + 1] = -(dd(k) * y[k] + cc(k) * y[k - 1]) / cc(k + 1);
        if y[k + 1].abs() > RESCALE_AT {
            for v in y[..=k + 1].iter_mut() {
                *v /= RESCALE_AT;
            }
        }
        k += 1;
    }
    if k == n - 1 && kf == n - 1 && y[n - 1].abs() < y[n - 2].abs() {
        kf = n - 2;
    }

    if kf < n - 1 {
        // backward pass from hi down to the splice window [kf-1, kf]
        let stop = kf.saturating_sub(1);
        let mut z = vec![0.0; n];
        z[n - 1] = 1.0;
        z[n - 2] = -dd(n - 1) / cc(n - 1);
        let mut j = n - 2;
        while j > stop {
            z[j - 1] = -(dd(j) * z[j] + cc(j + 1) * z[j + 1]) / cc(j);
            if z[j - 1].abs() > RESCALE_AT {
                for v in z[j - 1..].iter_mut() {
                    *v /= RESCALE_AT;
                }
            }
            j -= 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for i in stop..=kf {
            num += y[i] * z[i];
            den += z[i] * z[i];
        }
        let s = num / den;
        for i in kf + 1..n {
            y[i] = s * z[i];
        }
    }

    let mut norm = Neumaier::default();
    for v in y.iter() {
        norm.add(v * v);
    }
    let scale = 1.0 / (norm.value() * (2 * l1 + 1) as f64).sqrt();
    let scale = if y[0] >= 0.0 { scale } else { -scale } * sign;
    for v in y.iter_mut() {
        *v *= scale;
    }
    lo
}

#[inline]
pub(crate) fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}
