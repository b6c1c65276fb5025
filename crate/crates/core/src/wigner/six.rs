//! 6j symbols by three-term recursion in the first upper argument.
//!
//! For f(j1) = {j1 j2 j3; l1 l2 l3}:
//!
//!   j1 E(j1+1) f(j1+1) + F(j1) f(j1) + (j1+1) E(j1) f(j1-1) = 0,
//!
//! normalized by sum_j1 (2 j1 + 1)(2 l1 + 1) f(j1)^2 = 1, with the sign of
//! f at the top of the range equal to (-1)^(j2+j3+l2+l3).

use super::row::parity;
use super::SixJArguments;
use crate::sum::Neumaier;

const RESCALE_AT: f64 = 1e200;

struct Coefs {
    j2: f64,
    j3: f64,
    l1: f64,
    l2: f64,
    l3: f64,
}

impl Coefs {
    fn e(&self, j: f64) -> f64 {
        let (j2, j3, l2, l3) = (self.j2, self.j3, self.l2, self.l3);
        let v = (j * j - (j2 - j3).powi(2))
            * ((j2 + j3 + 1.0).powi(2) - j * j)
            * (j * j - (l2 - l3).powi(2))
            * ((l2 + l3 + 1.0).powi(2) - j * j);
        v.max(0.0).sqrt()
    }

    fn f(&self, j: f64) -> f64 {
        let jj = j * (j + 1.0);
        let a2 = self.j2 * (self.j2 + 1.0);
        let a3 = self.j3 * (self.j3 + 1.0);
        let b1 = self.l1 * (self.l1 + 1.0);
        let b2 = self.l2 * (self.l2 + 1.0);
        let b3 = self.l3 * (self.l3 + 1.0);
        (2.0 * j + 1.0)
            * (jj * (-jj + a2 + a3 - 2.0 * b1) + b2 * (jj + a2 - a3) + b3 * (jj - a2 + a3))
    }
}

/// Canonical member of the 24-element symmetry class of a 6j symbol.
///
/// The symbol is invariant under column permutations and under exchanging
/// upper and lower entries in any two columns.
fn canonical(s: &SixJArguments) -> [i32; 6] {
    let cols = [(s.a, s.d), (s.b, s.e), (s.c, s.f)];
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    const SWAPS: [[bool; 3]; 4] = [
        [false, false, false],
        [true, true, false],
        [true, false, true],
        [false, true, true],
    ];
    let mut best = [i32::MAX; 6];
    for p in PERMS {
        for sw in SWAPS {
            let mut up = [0; 3];
            let mut dn = [0; 3];
            for k in 0..3 {
                let (u, d) = cols[p[k]];
                if sw[k] {
                    up[k] = d;
                    dn[k] = u;
                } else {
                    up[k] = u;
                    dn[k] = d;
                }
            }
            let cand = [up[0], up[1], up[2], dn[0], dn[1], dn[2]];
            if cand < best {
                best = cand;
            }
        }
    }
    best
}

/// Wigner 6j symbol {a b c; d e f}; exactly zero when a triangle fails.
pub fn wigner_6j(s: &SixJArguments) -> f64 {
    if !s.triangles_ok() {
        return 0.0;
    }
    let [j1, j2, j3, l1, l2, l3] = canonical(s);
    let lo = (j2 - j3).abs().max((l2 - l3).abs());
    let hi = (j2 + j3).min(l2 + l3);
    let n = (hi - lo + 1) as usize;
    let sign = parity((j2 + j3 + l2 + l3) as i64);
    if n == 1 {
        return sign / (((2 * lo + 1) * (2 * l1 + 1)) as f64).sqrt();
    }
    let c = Coefs {
        j2: j2 as f64,
        j3: j3 as f64,
        l1: l1 as f64,
        l2: l2 as f64,
        l3: l3 as f64,
    };
    let jv = |k: usize| (lo as usize + k) as f64;

    // backward from the top; all the way down when the range starts at 0,
    // where the forward recursion is degenerate
    let mut z = vec![0.0; n];
    z[n - 1] = 1.0;
    let top = jv(n - 1);
    z[n - 2] = -c.f(top) / ((top + 1.0) * c.e(top));
    let backward_to = |z: &mut Vec<f64>, stop: usize| {
        let mut k = n - 2;
        while k > stop {
            let j = jv(k);
            z[k - 1] = -(j * c.e(j + 1.0) * z[k + 1] + c.f(j) * z[k]) / ((j + 1.0) * c.e(j));
            if z[k - 1].abs() > RESCALE_AT {
                for v in z[k - 1..].iter_mut() {
                    *v /= RESCALE_AT;
                }
            }
            k -= 1;
        }
    };

    let out = if lo == 0 {
        backward_to(&mut z, 0);
        z
    } else {
        let mut y = vec![0.0; n];
        y[0] = 1.0;
        let j0 = jv(0);
        y[1] = -c.f(j0) / (j0 * c.e(j0 + 1.0));
        let mut kf = n - 1;
        let mut k = 1;
        while k < n - 1 {
            if y[k].abs() < y[k - 1].abs() {
                kf = k - 1;
                break;
            }
            let j = jv(k);
            y[k + 1] = -(c.f(j) * y[k] + (j + 1.0) * c.e(j) * y[k - 1]) / (j * c.e(j + 1.0));
            if y[k + 1].abs() > RESCALE_AT {
                for v in y[..=k + 1].iter_mut() {
                    *v /= RESCALE_AT;
                }
            }
            k += 1;
        }
        if kf == n - 1 && y[n - 1].abs() < y[n - 2].abs() {
            kf = n - 2;
        }
        if kf < n - 1 {
            let stop = kf.saturating_sub(1);
            backward_to(&mut z, stop);
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
        y
    };

    let mut norm = Neumaier::default();
    for (k, v) in out.iter().enumerate() {
        norm.add((2.0 * jv(k) + 1.0) * (2 * l1 + 1) as f64 * v * v);
    }
    let mut scale = 1.0 / norm.value().sqrt();
    if out[n - 1] < 0.0 {
        scale = -scale;
    }
    sign * scale * out[(j1 - lo) as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_triangle_is_zero() {
        assert_eq!(wigner_6j(&SixJArguments::new(1, 1, 1, 1, 1, 5)), 0.0);
    }

    #[test]
    fn known_values() {
        assert!((wigner_6j(&SixJArguments::new(1, 1, 1, 1, 1, 1)) - 1.0 / 6.0).abs() < 1e-15);
        // {2 3 5; 2 3 5} = 1/2310
        let v = wigner_6j(&SixJArguments::new(2, 3, 5, 2, 3, 5));
        assert!((v - 1.0 / 2310.0).abs() < 1e-17, "{v}");
    }

    #[test]
    fn symmetric_class_evaluates_identically() {
        let s = SixJArguments::new(3, 4, 5, 6, 2, 4);
        let v = wigner_6j(&s);
        assert_eq!(v, wigner_6j(&SixJArguments::new(4, 3, 5, 2, 6, 4)));
        assert_eq!(v, wigner_6j(&SixJArguments::new(6, 2, 5, 3, 4, 4)));
    }
}
