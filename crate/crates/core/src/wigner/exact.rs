//! Exact evaluation of 3j and 6j symbols from the Racah sum formulas.
//!
//! Both symbols are a sign times the square root of a rational number. The
//! rational part is computed with arbitrary-precision integers, so the only
//! rounding is the final conversion to double. Slow, and meant as an oracle.

use std::cell::RefCell;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{tri, SixJArguments, TripleLM};
use crate::error::Result;

thread_local! {
    static FACT: RefCell<Vec<BigUint>> = RefCell::new(vec![BigUint::one()]);
}

fn fact(n: i64) -> BigUint {
    debug_assert!(n >= 0);
    FACT.with(|f| {
        let mut f = f.borrow_mut();
        while f.len() <= n as usize {
            let k = f.len();
            let next = &f[k - 1] * BigUint::from(k);
            f.push(next);
        }
        f[n as usize].clone()
    })
}

/// sign * sqrt(square), held exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedSqrt {
    pub sign: i8,
    pub square: BigRational,
}

impl SignedSqrt {
    pub fn zero() -> Self {
        Self { sign: 0, square: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Correctly scaled conversion; keeps at least 64 significant bits
    /// before the final rounding to double.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let num = self.square.numer().magnitude();
        let den = self.square.denom().magnitude();
        let gap = den.bits() as i64 - num.bits() as i64;
        let k = (gap / 2 + 70).max(0) as u64;
        let scaled = (num << (2 * k)) / den;
        let root = scaled.sqrt();
        let v = root.to_f64().unwrap_or(f64::INFINITY);
        let v = v * 2f64.powi(-(k as i32));
        if self.sign < 0 {
            -v
        } else {
            v
        }
    }
}

/// Delta(a b c) = (a+b-c)! (a-b+c)! (-a+b+c)! / (a+b+c+1)!
fn triangle_coefficient(a: i64, b: i64, c: i64) -> BigRational {
    let num = fact(a + b - c) * fact(a - b + c) * fact(-a + b + c);
    BigRational::new(num.into(), fact(a + b + c + 1).into())
}

/// Exact 3j symbol from the Racah sum.
pub fn wigner_3j_exact(t: &TripleLM) -> Result<SignedSqrt> {
    t.check()?;
    let (l1, l2, l3) = (t.l1 as i64, t.l2 as i64, t.l3 as i64);
    let (m1, m2, m3) = (t.m1 as i64, t.m2 as i64, t.m3 as i64);
    if m1 + m2 + m3 != 0 || !tri(t.l1, t.l2, t.l3) {
        return Ok(SignedSqrt::zero());
    }
    let zmin = 0.max(l2 - l3 - m1).max(l1 - l3 + m2);
    let zmax = (l1 + l2 - l3).min(l1 - m1).min(l2 + m2);
    if zmin > zmax {
        return Ok(SignedSqrt::zero());
    }
    // each denominator divides q, so q / denom(z) is an integer
    let q = fact(zmax)
        * fact(l1 + l2 - l3 - zmin)
        * fact(l1 - m1 - zmin)
        * fact(l2 + m2 - zmin)
        * fact(l3 - l2 + m1 + zmax)
        * fact(l3 - l1 - m2 + zmax);
    let mut s = BigInt::zero();
    for z in zmin..=zmax {
        let den = fact(z)
            * fact(l1 + l2 - l3 - z)
            * fact(l1 - m1 - z)
            * fact(l2 + m2 - z)
            * fact(l3 - l2 + m1 + z)
            * fact(l3 - l1 - m2 + z);
        let term = BigInt::from(&q / den);
        if z % 2 == 0 {
            s += term;
        } else {
            s -= term;
        }
    }
    if s.is_zero() {
        return Ok(SignedSqrt::zero());
    }
    let pre = triangle_coefficient(l1, l2, l3)
        * BigRational::from_integer(
            (fact(l1 + m1) * fact(l1 - m1) * fact(l2 + m2) * fact(l2 - m2) * fact(l3 + m3) * fact(l3 - m3))
                .into(),
        );
    let qi = BigInt::from(q);
    let square = pre * BigRational::new(&s * &s, &qi * &qi);
    let phase = if (l1 - l2 - m3).rem_euclid(2) == 0 { 1 } else { -1 };
    let sign = if s.sign() == Sign::Minus { -phase } else { phase };
    Ok(SignedSqrt { sign, square })
}

/// Exact 6j symbol {j1 j2 j3; j4 j5 j6} from the Racah sum.
pub fn wigner_6j_exact(s: &SixJArguments) -> SignedSqrt {
    if !s.triangles_ok() {
        return SignedSqrt::zero();
    }
    let [j1, j2, j3, j4, j5, j6] = [s.a, s.b, s.c, s.d, s.e, s.f].map(|x| x as i64);
    let a = [j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3];
    let b = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4];
    let tmin = *a.iter().max().unwrap();
    let tmax = *b.iter().min().unwrap();
    if tmin > tmax {
        return SignedSqrt::zero();
    }
    let mut q = BigUint::one();
    for x in a {
        q *= fact(tmax - x);
    }
    for x in b {
        q *= fact(x - tmin);
    }
    let mut sum = BigInt::zero();
    for t in tmin..=tmax {
        let mut den = BigUint::one();
        for x in a {
            den *= fact(t - x);
        }
        for x in b {
            den *= fact(x - t);
        }
        let term = BigInt::from(&q / den * fact(t + 1));
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return SignedSqrt::zero();
    }
    let pre = triangle_coefficient(j1, j2, j3)
        * triangle_coefficient(j1, j5, j6)
        * triangle_coefficient(j4, j2, j6)
        * triangle_coefficient(j4, j5, j3);
    let qi = BigInt::from(q);
    let sign = if sum.is_negative() { -1 } else { 1 };
    let square = pre * BigRational::new(&sum * &sum, &qi * &qi);
    SignedSqrt { sign, square }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_j_222() {
        let v = wigner_3j_exact(&TripleLM::zero(2, 2, 2)).unwrap();
        assert_eq!(v.sign, -1);
        assert_eq!(v.square, BigRational::new(2.into(), 35.into()));
    }

    #[test]
    fn three_j_known_fraction() {
        // (1 1 0; 1 -1 0) = 1/sqrt(3)
        let v = wigner_3j_exact(&TripleLM::new(1, 1, 0, 1, -1, 0)).unwrap();
        assert_eq!(v.sign, 1);
        assert_eq!(v.square, BigRational::new(1.into(), 3.into()));
    }

    #[test]
    fn six_j_known_fractions() {
        let v = wigner_6j_exact(&SixJArguments::new(1, 1, 1, 1, 1, 1));
        assert_eq!((v.sign, v.square), (1, BigRational::new(1.into(), 36.into())));
        let v = wigner_6j_exact(&SixJArguments::new(2, 3, 5, 2, 3, 5));
        assert_eq!(v.square, BigRational::new(1.into(), (2310 * 2310).into()));
    }

    #[test]
    fn conversion_keeps_tiny_values_relative() {
        let v = SignedSqrt {
            sign: 1,
            square: BigRational::new(1.into(), BigInt::from(10).pow(80)),
        };
        assert!((v.to_f64() / 1e-40 - 1.0).abs() < 1e-15);
    }
}
