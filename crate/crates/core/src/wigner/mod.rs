//! Wigner 3j and 6j symbols and Gaunt integrals for integer momenta.
//!
//! The fast paths are three-term recursions (in m2 for 3j, in j1 for 6j)
//! run from both ends and spliced in the classically allowed region; they
//! keep full double precision well past l = 100, where a floating Racah
//! sum loses every digit to cancellation. [`exact`] evaluates the Racah
//! formulas in rational arithmetic and serves as the conformance oracle.

mod cache;
pub mod exact;
pub mod identities;
mod row;
mod six;

use std::f64::consts::PI;

pub use cache::{FrozenThreeJCache, ThreeJCache, TripleRows};
pub use six::wigner_6j;

use crate::error::{Error, Result};
use row::parity;

/// Integer multipoles and orders of a 3j symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TripleLM {
    pub l1: i32,
    pub l2: i32,
    pub l3: i32,
    pub m1: i32,
    pub m2: i32,
    pub m3: i32,
}

impl TripleLM {
    pub fn new(l1: i32, l2: i32, l3: i32, m1: i32, m2: i32, m3: i32) -> Self {
        Self { l1, l2, l3, m1, m2, m3 }
    }

    /// All multipoles zero-order (the "(l1 l2 l3; 0 0 0)" row).
    pub fn zero(l1: i32, l2: i32, l3: i32) -> Self {
        Self::new(l1, l2, l3, 0, 0, 0)
    }

    /// True iff every |m_i| <= l_i (and every l_i >= 0).
    pub fn admissible(&self) -> bool {
        [(self.l1, self.m1), (self.l2, self.m2), (self.l3, self.m3)]
            .iter()
            .all(|&(l, m)| l >= 0 && m.abs() <= l)
    }

    fn check(&self) -> Result<()> {
        if self.admissible() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "3j arguments ({}, {}, {}; {}, {}, {}) need 0 <= |m_i| <= l_i",
                self.l1, self.l2, self.l3, self.m1, self.m2, self.m3
            )))
        }
    }
}

/// Six integer momenta {a b c; d e f}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SixJArguments {
    pub a: i32,
    pub b: i32,
    pub c: i32,
    pub d: i32,
    pub e: i32,
    pub f: i32,
}

impl SixJArguments {
    pub fn new(a: i32, b: i32, c: i32, d: i32, e: i32, f: i32) -> Self {
        Self { a, b, c, d, e, f }
    }

    /// The four embedded triangles all hold.
    pub fn triangles_ok(&self) -> bool {
        let &Self { a, b, c, d, e, f } = self;
        [a, b, c, d, e, f].iter().all(|&x| x >= 0)
            && tri(a, b, c)
            && tri(a, e, f)
            && tri(d, b, f)
            && tri(d, e, c)
    }
}

#[inline]
fn tri(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b
}

/// Triangle rule l_i <= l_j + l_k for all permutations.
pub fn triangle_ok(l1: i32, l2: i32, l3: i32) -> bool {
    l1 >= 0 && l2 >= 0 && l3 >= 0 && tri(l1, l2, l3)
}

/// Reduce a 3j to a canonical member of its 12-element symmetry class.
///
/// Returns the canonical arguments and the sign relating the two values,
/// or a zero sign when the symmetry forces the symbol to vanish.
/// Every member of a class evaluates through the same canonical row, which
/// makes the permutation and reflection symmetries hold bit for bit.
fn canonical(t: &TripleLM) -> (TripleLM, f64) {
    let cols = [(t.l1, t.m1), (t.l2, t.m2), (t.l3, t.m3)];
    let odd = parity((t.l1 + t.l2 + t.l3) as i64);
    const PERMS: [([usize; 3], bool); 6] = [
        ([0, 1, 2], false),
        ([1, 2, 0], false),
        ([2, 0, 1], false),
        ([1, 0, 2], true),
        ([0, 2, 1], true),
        ([2, 1, 0], true),
    ];
    let mut best: Option<([(i32, i32); 3], f64)> = None;
    for (p, transposition) in PERMS {
        for flip in [false, true] {
            let s = if flip { -1 } else { 1 };
            let c = [
                (cols[p[0]].0, s * cols[p[0]].1),
                (cols[p[1]].0, s * cols[p[1]].1),
                (cols[p[2]].0, s * cols[p[2]].1),
            ];
            let sign = if transposition ^ flip { odd } else { 1.0 };
            match best {
                Some((b, _)) if c > b => {}
                // reached by two operations of opposite sign: the symbol vanishes
                Some((b, s)) if c == b && s != sign => best = Some((c, 0.0)),
                Some((b, _)) if c == b => {}
                _ => best = Some((c, sign)),
            }
        }
    }
    let (c, sign) = best.expect("nonempty symmetry class");
    (
        TripleLM::new(c[0].0, c[1].0, c[2].0, c[0].1, c[1].1, c[2].1),
        sign,
    )
}

/// Wigner 3j symbol.
///
/// Exactly zero when the orders do not sum to zero, the triangle rule fails,
/// or all orders vanish with an odd l-sum. Errors only for |m_i| > l_i.
pub fn wigner_3j(t: &TripleLM) -> Result<f64> {
    t.check()?;
    if t.m1 + t.m2 + t.m3 != 0 || !tri(t.l1, t.l2, t.l3) {
        return Ok(0.0);
    }
    if t.m1 == 0 && t.m2 == 0 {
        return Ok(wigner_3j_zero(t.l1, t.l2, t.l3));
    }
    let (c, sign) = canonical(t);
    if sign == 0.0 {
        return Ok(0.0);
    }
    let mut buf = Vec::new();
    let lo = row::row_into(c.l1, c.l2, c.l3, c.m1, &mut buf);
    Ok(sign * buf[(c.m2 - lo) as usize])
}

/// Closed form of (l1 l2 l3; 0 0 0).
///
/// With g = (l1+l2+l3)/2 and t(n) = prod_{k<=n} (1 - 1/(2k)),
/// the square is t(g-l1) t(g-l2) t(g-l3) / (t(g) (2g+1)) and the sign is (-1)^g.
/// The product form avoids factorials entirely.
pub fn wigner_3j_zero(l1: i32, l2: i32, l3: i32) -> f64 {
    if !triangle_ok(l1, l2, l3) || (l1 + l2 + l3) % 2 != 0 {
        return 0.0;
    }
    let g = (l1 + l2 + l3) / 2;
    let t = |n: i32| -> f64 {
        let mut p = 1.0;
        for k in 1..=n {
            p *= 1.0 - 0.5 / k as f64;
        }
        p
    };
    let sq = t(g - l1) * t(g - l2) * t(g - l3) / (t(g) * (2 * g + 1) as f64);
    parity(g as i64) * sq.sqrt()
}

/// A full row of 3j values over the admissible m2 for fixed (l1, l2, l3, m1).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ThreeJRow {
    pub m2_min: i32,
    pub values: Vec<f64>,
}

impl ThreeJRow {
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Value at m2, zero outside the admissible range.
    pub fn get(&self, m2: i32) -> f64 {
        let k = m2 - self.m2_min;
        if k < 0 {
            return 0.0;
        }
        self.values.get(k as usize).copied().unwrap_or(0.0)
    }

    /// (m2, value) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.m2_min + k as i32, v))
    }
}

/// All (l1 l2 l3; m1 m2 -m1-m2) for m2 in [max(-l2, -l3-m1), min(l2, l3-m1)].
///
/// An empty row is returned when the triangle fails or the range is empty.
pub fn wigner_3j_row(l1: i32, l2: i32, l3: i32, m1: i32) -> Result<ThreeJRow> {
    if l1 < 0 || l2 < 0 || l3 < 0 || m1.abs() > l1 {
        return Err(Error::Domain(format!(
            "3j row ({l1}, {l2}, {l3}; m1 = {m1}) needs |m1| <= l1"
        )));
    }
    let mut values = Vec::new();
    if !tri(l1, l2, l3) {
        return Ok(ThreeJRow { m2_min: 0, values });
    }
    let m2_min = row::row_into(l1, l2, l3, m1, &mut values);
    Ok(ThreeJRow { m2_min, values })
}

/// Row evaluation without argument checks, reusing a buffer.
pub(crate) fn row_unchecked(l1: i32, l2: i32, l3: i32, m1: i32, buf: &mut Vec<f64>) -> i32 {
    row::row_into(l1, l2, l3, m1, buf)
}

/// Gaunt integral of Y_{l1 m1} Y_{l2 m2} Y_{l3 m3} over the sphere.
pub fn gaunt(t: &TripleLM) -> Result<f64> {
    t.check()?;
    let zero = wigner_3j_zero(t.l1, t.l2, t.l3);
    if zero == 0.0 {
        return Ok(0.0);
    }
    let h = ((2 * t.l1 + 1) as f64 * (2 * t.l2 + 1) as f64 * (2 * t.l3 + 1) as f64 / (4.0 * PI)).sqrt();
    Ok(h * zero * wigner_3j(t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_examples() {
        assert!(triangle_ok(2, 3, 5));
        assert!(!triangle_ok(1, 1, 3));
        assert!(triangle_ok(4, 4, 4));
    }

    #[test]
    fn selection_rules_give_exact_zero() {
        assert_eq!(wigner_3j(&TripleLM::zero(1, 1, 3)).unwrap(), 0.0);
        assert_eq!(wigner_3j(&TripleLM::new(2, 3, 5, 1, 1, 1)).unwrap(), 0.0);
        assert_eq!(wigner_3j(&TripleLM::zero(2, 2, 3)).unwrap(), 0.0);
        assert_eq!(wigner_3j_zero(2, 2, 3), 0.0);
    }

    #[test]
    fn out_of_range_order_is_a_domain_error() {
        assert!(matches!(
            wigner_3j(&TripleLM::new(1, 1, 1, 2, -1, -1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_row_value() {
        let want = -(2.0f64 / 35.0).sqrt();
        assert!((wigner_3j_zero(2, 2, 2) - want).abs() < 1e-15);
        assert_eq!(wigner_3j(&TripleLM::zero(2, 2, 2)).unwrap(), wigner_3j_zero(2, 2, 2));
    }

    #[test]
    fn zero_row_matches_recursion() {
        for (a, b, c) in [(2, 3, 5), (10, 20, 30), (40, 41, 59), (99, 100, 3)] {
            let closed = wigner_3j_zero(a, b, c);
            let row = wigner_3j_row(a, b, c, 0).unwrap();
            let rec = row.get(0);
            assert!((closed - rec).abs() <= 1e-12 * closed.abs(), "{a} {b} {c}: {closed} vs {rec}");
        }
    }

    #[test]
    fn row_agrees_with_pointwise() {
        let row = wigner_3j_row(2, 3, 5, 0).unwrap();
        assert_eq!(row.m2_min, -3);
        for (m2, v) in row.iter() {
            let p = wigner_3j(&TripleLM::new(2, 3, 5, 0, m2, -m2)).unwrap();
            assert!((p - v).abs() < 1e-14);
        }
    }

    #[test]
    fn row_edge_cases() {
        assert!(wigner_3j_row(1, 1, 3, 0).unwrap().is_empty());
        let r = wigner_3j_row(0, 4, 4, 0).unwrap();
        assert_eq!(r.len(), 9);
        // (0 l l; 0 m -m) = (-1)^(l-m) / sqrt(2l+1)
        for (m2, v) in r.iter() {
            let want = parity((4 - m2) as i64) / 3.0;
            assert!((v - want).abs() < 1e-15, "m2 {m2}: {v}");
        }
    }

    #[test]
    fn canonical_form_is_shared_by_the_class() {
        let t = TripleLM::new(3, 4, 6, 1, -3, 2);
        let (c0, s0) = canonical(&t);
        let swapped = TripleLM::new(4, 3, 6, -3, 1, 2);
        let (c1, s1) = canonical(&swapped);
        assert_eq!(c0, c1);
        assert_eq!(s0, -s1);
    }

    #[test]
    fn gaunt_zero_row() {
        assert_eq!(gaunt(&TripleLM::zero(2, 2, 3)).unwrap(), 0.0);
        let want = (125.0 / (4.0 * PI)).sqrt() * (2.0 / 35.0);
        assert!((gaunt(&TripleLM::zero(2, 2, 2)).unwrap() - want).abs() < 1e-14);
    }
}
