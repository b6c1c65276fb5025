//! Brute-force checks of the standard 3j/6j sum rules.
//!
//! Every sweep evaluates both sides from scratch over all arguments up to a
//! bound and reports the worst absolute discrepancy. The 3j values come from
//! a dense table filled by the row recursion; the 6j values from
//! [`wigner_6j`]. The contraction identities are used in the forms
//!
//! * sum_a (-1)^a (a a b; al -al be) = (-1)^a sqrt(2a+1) delta_b0 delta_be0
//! * sum (-1)^{e+f+ep+ph} (a b e; al be ep)(c d e; ga de -ep)(a d f; al de -ph)(c b f; ga be ph) = {a b e; c d f}
//! * sum_{al,be,de} (-1)^{a+b+d+al+be+de} (e b d; ep be -de)(a f d; -al ph de)(a b c; al -be ga)
//!   = (e f c; ep ph ga) {a b c; e f d}
//! * sum_{be,ga,ep,ph} (a b c; al -be -ga)(d f e; de -ph -ep)(g b e; et be ep)(j f c; mu ph ga)
//!   = (-1)^{b+f+g+j+de+mu} sum_{s,si} (2s+1) (a s j; -al si -mu)(g s d; et si de) {b c a; j s f} {b e g; d s f}
//!
//! The last two differ from some printed versions, which are not consistent
//! in their magnetic indices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{triangle_ok, wigner_3j_row, wigner_6j, SixJArguments};
use crate::error::Result;

/// All 3j symbols with every l <= l_max, stored densely.
pub struct DenseThreeJ {
    n: i32,
    span: usize,
    data: Vec<f64>,
}

impl DenseThreeJ {
    pub fn new(l_max: i32) -> Result<Self> {
        let n = l_max;
        let span = (2 * n + 1) as usize;
        let nl = (n + 1) as usize;
        let mut data = vec![0.0; nl * nl * nl * span * span];
        for l1 in 0..=n {
            for l2 in 0..=n {
                for l3 in 0..=n {
                    if !triangle_ok(l1, l2, l3) {
                        continue;
                    }
                    for m1 in -l1..=l1 {
                        for (m2, v) in wigner_3j_row(l1, l2, l3, m1)?.iter() {
                            let k = Self::index(n, span, l1, l2, l3, m1, m2);
                            data[k] = v;
                        }
                    }
                }
            }
        }
        Ok(Self { n, span, data })
    }

    #[inline]
    fn index(n: i32, span: usize, l1: i32, l2: i32, l3: i32, m1: i32, m2: i32) -> usize {
        let nl = (n + 1) as usize;
        ((((l1 as usize * nl + l2 as usize) * nl + l3 as usize) * span) + (m1 + n) as usize) * span + (m2 + n) as usize
    }

    /// All symbols with fixed (l1, l2, l3), indexed by (m1, m2).
    fn slab(&self, l1: i32, l2: i32, l3: i32) -> Slab<'_> {
        let start = Self::index(self.n, self.span, l1, l2, l3, -self.n, -self.n);
        Slab { n: self.n, span: self.span, data: &self.data[start..start + self.span * self.span] }
    }

    /// (l1 l2 l3; m1 m2 m3), zero outside the selection rules.
    #[inline]
    pub fn get(&self, l1: i32, l2: i32, l3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
        if m1 + m2 + m3 != 0 || m1.abs() > l1 || m2.abs() > l2 || m3.abs() > l3 {
            return 0.0;
        }
        if l1 > self.n || l2 > self.n || l3 > self.n {
            return 0.0;
        }
        self.data[Self::index(self.n, self.span, l1, l2, l3, m1, m2)]
    }
}

/// Entries with an out-of-range m3 were never written and read as zero, so
/// `at` only needs |m1|, |m2| <= n.
#[derive(Clone, Copy)]
struct Slab<'a> {
    n: i32,
    span: usize,
    data: &'a [f64],
}

impl Slab<'_> {
    #[inline]
    fn at(&self, m1: i32, m2: i32) -> f64 {
        self.data[(m1 + self.n) as usize * self.span + (m2 + self.n) as usize]
    }
}

/// Outcome of an identity sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepReport {
    /// Argument sets where at least one side is not forced to zero by selection rules.
    pub cases: usize,
    pub max_error: f64,
}

impl SweepReport {
    fn record(&mut self, lhs: f64, rhs: f64) {
        self.cases += 1;
        self.max_error = self.max_error.max((lhs - rhs).abs());
    }

    fn merge(&mut self, other: SweepReport) {
        self.cases += other.cases;
        self.max_error = self.max_error.max(other.max_error);
    }
}

#[inline]
fn sign(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// sum_{m1,m2,m3} (l1 l2 l3; m)^2 = 1 for every triangle with all l <= n.
pub fn sweep_normalization(t: &DenseThreeJ, n: i32) -> SweepReport {
    let mut r = SweepReport::default();
    for l1 in 0..=n {
        for l2 in 0..=n {
            for l3 in 0..=n {
                if !triangle_ok(l1, l2, l3) {
                    continue;
                }
                let mut s = 0.0;
                for m1 in -l1..=l1 {
                    for m2 in -l2..=l2 {
                        let v = t.get(l1, l2, l3, m1, m2, -m1 - m2);
                        s += v * v;
                    }
                }
                r.record(s, 1.0);
            }
        }
    }
    r
}

/// Normalization of one triple of any size through the row recursion.
pub fn normalization_residual(l1: i32, l2: i32, l3: i32) -> Result<f64> {
    let mut s = 0.0;
    for m1 in -l1..=l1 {
        for (_, v) in wigner_3j_row(l1, l2, l3, m1)?.iter() {
            s += v * v;
        }
    }
    Ok((s - 1.0).abs())
}

/// Orthogonality over (m1, m2) between triples (l1 l2 L) and (l1 l2 L').
pub fn sweep_orthogonality(t: &DenseThreeJ, n: i32) -> SweepReport {
    let mut r = SweepReport::default();
    for l1 in 0..=n {
        for l2 in 0..=n {
            for big in 0..=n {
                if !triangle_ok(l1, l2, big) {
                    continue;
                }
                for big2 in 0..=n {
                    if !triangle_ok(l1, l2, big2) {
                        continue;
                    }
                    for mm in -big..=big {
                        for mm2 in -big2..=big2 {
                            let mut s = 0.0;
                            for m1 in -l1..=l1 {
                                let m2 = -m1 - mm;
                                if m2.abs() > l2 || -m1 - m2 != mm || m1 + m2 + mm2 != 0 {
                                    continue;
                                }
                                s += t.get(l1, l2, big, m1, m2, mm) * t.get(l1, l2, big2, m1, m2, mm2);
                            }
                            let want = if big == big2 && mm == mm2 { 1.0 / (2 * big + 1) as f64 } else { 0.0 };
                            r.record(s, want);
                        }
                    }
                }
            }
        }
    }
    r
}

/// sum_al (-1)^al (a a b; al -al be) = (-1)^a sqrt(2a+1) delta_b0 delta_be0.
pub fn sweep_alternating_sum(t: &DenseThreeJ, n: i32) -> SweepReport {
    let mut r = SweepReport::default();
    for a in 0..=n {
        for b in 0..=n {
            for be in -b..=b {
                let mut s = 0.0;
                for al in -a..=a {
                    s += sign(al) * t.get(a, a, b, al, -al, be);
                }
                let want = if b == 0 && be == 0 { sign(a) * ((2 * a + 1) as f64).sqrt() } else { 0.0 };
                r.record(s, want);
            }
        }
    }
    r
}

/// The 6j as a contraction of four 3j symbols.
pub fn sweep_six_j_contraction(t: &DenseThreeJ, n: i32) -> SweepReport {
    let mut r = SweepReport::default();
    for a in 0..=n {
        for b in 0..=n {
            for e in 0..=n {
                if !triangle_ok(a, b, e) {
                    continue;
                }
                for c in 0..=n {
                    for d in 0..=n {
                        if !triangle_ok(c, d, e) {
                            continue;
                        }
                        for f in 0..=n {
                            if !triangle_ok(a, d, f) || !triangle_ok(c, b, f) {
                                continue;
                            }
                            let mut s = 0.0;
                            for al in -a..=a {
                                for be in -b..=b {
                                    let ep = -al - be;
                                    if ep.abs() > e {
                                        continue;
                                    }
                                    let x = t.get(a, b, e, al, be, ep);
                                    if x == 0.0 {
                                        continue;
                                    }
                                    for ga in -c..=c {
                                        let de = ep - ga;
                                        if de.abs() > d {
                                            continue;
                                        }
                                        let ph = al + de;
                                        if ph.abs() > f {
                                            continue;
                                        }
                                        s += sign(e + f + ep + ph)
                                            * x
                                            * t.get(c, d, e, ga, de, -ep)
                                            * t.get(a, d, f, al, de, -ph)
                                            * t.get(c, b, f, ga, be, ph);
                                    }
                                }
                            }
                            r.record(s, wigner_6j(&SixJArguments::new(a, b, e, c, d, f)));
                        }
                    }
                }
            }
        }
    }
    r
}

/// Three-3j contraction equal to one 3j times a 6j.
pub fn sweep_three_j_recoupling(t: &DenseThreeJ, n: i32) -> SweepReport {
    let mut r = SweepReport::default();
    for a in 0..=n {
        for b in 0..=n {
            for c in 0..=n {
                if !triangle_ok(a, b, c) {
                    continue;
                }
                for d in 0..=n {
                    for e in 0..=n {
                        if !triangle_ok(e, b, d) {
                            continue;
                        }
                        for f in 0..=n {
                            if !triangle_ok(a, f, d) {
                                continue;
                            }
                            let w6 = wigner_6j(&SixJArguments::new(a, b, c, e, f, d));
                            for ga in -c..=c {
                                for ph in -f..=f {
                                    let ep = -ga - ph;
                                    if ep.abs() > e {
                                        continue;
                                    }
                                    let mut s = 0.0;
                                    for al in -a..=a {
                                        let be = al + ga;
                                        let de = al - ph;
                                        if be.abs() > b || de.abs() > d {
                                            continue;
                                        }
                                        s += sign(a + b + d + al + be + de)
                                            * t.get(e, b, d, ep, be, -de)
                                            * t.get(a, f, d, -al, ph, de)
                                            * t.get(a, b, c, al, -be, ga);
                                    }
                                    r.record(s, t.get(e, f, c, ep, ph, ga) * w6);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    r
}

/// Per-tuple data for the four-3j identity: the four lhs slabs and, for each
/// intermediate s with a nonzero 6j product, the two rhs slabs.
struct FourJ<'a> {
    l: [i32; 8],
    lhs: [Slab<'a>; 4],
    rhs: Vec<(i32, f64, Slab<'a>, Slab<'a>)>,
}

impl<'a> FourJ<'a> {
    fn new(t: &'a DenseThreeJ, l: [i32; 8]) -> Self {
        let [a, b, c, d, e, f, g, j] = l;
        let rhs = (0..=2 * t.n)
            .filter_map(|s| {
                let x = wigner_6j(&SixJArguments::new(b, c, a, j, s, f));
                if x == 0.0 || !triangle_ok(a, s, j) || !triangle_ok(g, s, d) {
                    return None;
                }
                let w = (2 * s + 1) as f64 * x * wigner_6j(&SixJArguments::new(b, e, g, d, s, f));
                Some((s, w, t.slab(a, s, j), t.slab(g, s, d)))
            })
            .collect();
        let lhs = [t.slab(a, b, c), t.slab(d, f, e), t.slab(g, b, e), t.slab(j, f, c)];
        Self { l, lhs, rhs }
    }

    /// Both sides at one choice of the free orders.
    fn case(&self, al: i32, de: i32, et: i32) -> (f64, f64) {
        let [_, b, c, _, e, f, g, j] = self.l;
        let mu = -al - de - et;
        let [sa, sd, sg, sj] = self.lhs;
        let mut lhs = 0.0;
        // |be|, |al - be|, |et + be| and |de + et + be| all within range
        let lo = (-b).max(al - c).max(-et - e).max(-f - de - et);
        let hi = b.min(al + c).min(e - et).min(f - de - et);
        for be in lo..=hi {
            let ph = de + et + be;
            lhs += sa.at(al, -be) * sd.at(de, -ph) * sg.at(et, be) * sj.at(mu, ph);
        }
        let si = al + mu;
        let mut rhs = 0.0;
        for &(s, w, ra, rg) in &self.rhs {
            if si.abs() <= s {
                rhs += w * ra.at(-al, si) * rg.at(et, si);
            }
        }
        (lhs, rhs * sign(b + f + g + j + de + mu))
    }
}

fn four_j_admissible(l: [i32; 8]) -> bool {
    let [a, b, c, d, e, f, g, j] = l;
    triangle_ok(a, b, c) && triangle_ok(d, f, e) && triangle_ok(g, b, e) && triangle_ok(j, f, c)
}

fn four_j_all_orders(t: &DenseThreeJ, l: [i32; 8]) -> SweepReport {
    let [a, _, _, d, _, _, g, j] = l;
    let q = FourJ::new(t, l);
    let mut r = SweepReport::default();
    for al in -a..=a {
        for de in -d..=d {
            // orders with |mu| > j make both sides vanish trivially
            for et in (-g).max(-j - al - de)..=g.min(j - al - de) {
                let (lhs, rhs) = q.case(al, de, et);
                r.record(lhs, rhs);
            }
        }
    }
    r
}

/// Four-3j recoupling identity for every argument set with all l <= n.
///
/// The intermediate s runs to 2n, so `t` must cover 2n.
pub fn sweep_four_j_recoupling(t: &DenseThreeJ, n: i32) -> SweepReport {
    assert!(t.n >= 2 * n, "table must cover the intermediate sum");
    let base = (n + 1) as usize;
    (0..base.pow(8))
        .into_par_iter()
        .map(|code| {
            let mut l = [0i32; 8];
            let mut k = code;
            for slot in l.iter_mut() {
                *slot = (k % base) as i32;
                k /= base;
            }
            if four_j_admissible(l) {
                four_j_all_orders(t, l)
            } else {
                SweepReport::default()
            }
        })
        .reduce(SweepReport::default, |mut a, b| {
            a.merge(b);
            a
        })
}

/// Four-3j recoupling identity on `samples` random admissible argument sets with all l <= n.
pub fn sample_four_j_recoupling(t: &DenseThreeJ, n: i32, samples: usize, seed: u64) -> SweepReport {
    assert!(t.n >= 2 * n, "table must cover the intermediate sum");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SweepReport::default();
    let mut taken = 0;
    while taken < samples {
        let l: [i32; 8] = std::array::from_fn(|_| rng.random_range(0..=n));
        if four_j_admissible(l) {
            r.merge(four_j_all_orders(t, l));
            taken += 1;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweeps_are_tight() {
        let t = DenseThreeJ::new(4).unwrap();
        for rep in [
            sweep_normalization(&t, 3),
            sweep_orthogonality(&t, 3),
            sweep_alternating_sum(&t, 3),
            sweep_six_j_contraction(&t, 2),
            sweep_three_j_recoupling(&t, 2),
            sweep_four_j_recoupling(&t, 1),
        ] {
            assert!(rep.cases > 0);
            assert!(rep.max_error < 1e-12, "{rep:?}");
        }
    }

    #[test]
    fn dense_table_matches_pointwise() {
        let t = DenseThreeJ::new(3).unwrap();
        let p = super::super::wigner_3j(&super::super::TripleLM::new(2, 3, 3, 1, -2, 1)).unwrap();
        assert_eq!(t.get(2, 3, 3, 1, -2, 1), p);
        assert_eq!(t.get(2, 3, 3, 1, -2, 0), 0.0);
    }
}
