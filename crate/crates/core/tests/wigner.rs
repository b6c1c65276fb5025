use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spherebispec::wigner::exact::{wigner_3j_exact, wigner_6j_exact};
use spherebispec::wigner::{
    triangle_ok, wigner_3j, wigner_3j_row, wigner_3j_zero, wigner_6j, SixJArguments, TripleLM,
};

fn w3(l1: i32, l2: i32, l3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    wigner_3j(&TripleLM::new(l1, l2, l3, m1, m2, m3)).unwrap()
}

fn random_triple(rng: &mut ChaCha8Rng, lmax: i32) -> TripleLM {
    loop {
        let l1 = rng.random_range(0..=lmax);
        let l2 = rng.random_range(0..=lmax);
        let lo = (l1 - l2).abs();
        let hi = (l1 + l2).min(lmax);
        if lo > hi {
            continue;
        }
        let l3 = rng.random_range(lo..=hi);
        let m1 = rng.random_range(-l1..=l1);
        let m2lo = (-l2).max(-l3 - m1);
        let m2hi = l2.min(l3 - m1);
        if m2lo > m2hi {
            continue;
        }
        let m2 = rng.random_range(m2lo..=m2hi);
        return TripleLM::new(l1, l2, l3, m1, m2, -m1 - m2);
    }
}

#[test]
fn fast_3j_matches_exact_oracle_on_random_arguments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1500 {
        let t = random_triple(&mut rng, 100);
        let exact = wigner_3j_exact(&t).unwrap().to_f64();
        let fast = wigner_3j(&t).unwrap();
        if exact == 0.0 {
            assert!(fast.abs() <= 1e-14, "{t:?}: exact zero, fast {fast}");
        } else {
            let rel = (fast - exact).abs() / exact.abs();
            assert!(rel <= 1e-10, "{t:?}: fast {fast} exact {exact} rel {rel}");
        }
    }
}

#[test]
fn fast_6j_matches_exact_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 400 {
        let v: Vec<i32> = (0..6).map(|_| rng.random_range(0..=100)).collect();
        let s = SixJArguments::new(v[0], v[1], v[2], v[3], v[4], v[5]);
        if !s.triangles_ok() {
            continue;
        }
        checked += 1;
        let exact = wigner_6j_exact(&s).to_f64();
        let fast = wigner_6j(&s);
        if exact == 0.0 {
            assert!(fast.abs() <= 1e-14);
        } else {
            assert!((fast - exact).abs() <= 1e-9 * exact.abs(), "{s:?}: {fast} vs {exact}");
        }
    }
}

#[test]
fn small_6j_exhaustive_against_oracle() {
    let n: i32 = 5;
    for a in 0..=n {
        for b in 0..=n {
            for c in 0..=n {
                for d in 0..=n {
                    for e in 0..=n {
                        for f in 0..=n {
                            let s = SixJArguments::new(a, b, c, d, e, f);
                            let exact = wigner_6j_exact(&s).to_f64();
                            let fast = wigner_6j(&s);
                            assert!(
                                (fast - exact).abs() <= 1e-13 * exact.abs().max(1e-3),
                                "{s:?}: {fast} vs {exact}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn six_j_equals_contraction_of_four_3j() {
    // the 6j as a contraction of four 3j symbols, all (a..f) <= 3
    let n: i32 = 3;
    for a in 0..=n {
        for b in 0..=n {
            for e in 0..=n {
                for c in 0..=n {
                    for d in 0..=n {
                        for f in 0..=n {
                            let want = wigner_6j(&SixJArguments::new(a, b, e, c, d, f));
                            let mut s = 0.0;
                            for al in -a..=a {
                                for be in -b..=b {
                                    let ep = -al - be;
                                    if ep.abs() > e {
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
                                        let sign = if (e + f + ep + ph).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                                        s += sign
                                            * w3(a, b, e, al, be, ep)
                                            * w3(c, d, e, ga, de, -ep)
                                            * w3(a, d, f, al, de, -ph)
                                            * w3(c, b, f, ga, be, ph);
                                    }
                                }
                            }
                            assert!((s - want).abs() < 1e-12, "{a}{b}{e}{c}{d}{f}: {s} vs {want}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn orthonormality_over_all_orders() {
    let mut total = 0.0;
    for m1 in -2..=2 {
        for m2 in -3..=3 {
            let m3: i32 = -m1 - m2;
            if m3.abs() <= 4 {
                total += w3(2, 3, 4, m1, m2, m3).powi(2);
            }
        }
    }
    assert!((total - 1.0).abs() < 1e-14);
}

#[test]
fn cross_row_orthogonality() {
    let (l1, l2) = (3, 4);
    for big_l in 1..=7 {
        for big_lp in 1..=7 {
            for mm in -big_l.min(2)..=big_l.min(2) {
                for mmp in -big_lp.min(2)..=big_lp.min(2) {
                    let mut s = 0.0;
                    for m1 in -l1..=l1 {
                        for m2 in -l2..=l2 {
                            if m1 + m2 + mm != 0 || m1 + m2 + mmp != 0 {
                                continue;
                            }
                            s += w3(l1, l2, big_l, m1, m2, mm) * w3(l1, l2, big_lp, m1, m2, mmp);
                        }
                    }
                    let want = if big_l == big_lp && mm == mmp && triangle_ok(l1, l2, big_l) {
                        1.0 / (2 * big_l + 1) as f64
                    } else {
                        0.0
                    };
                    assert!((s - want).abs() < 1e-13, "L={big_l} L'={big_lp} M={mm} M'={mmp}");
                }
            }
        }
    }
}

#[test]
fn closed_zero_row_decays_like_inverse_l() {
    let scaled: Vec<f64> = [100, 200, 400, 800, 1600]
        .iter()
        .map(|&l| wigner_3j_zero(l, l, l).abs() * l as f64)
        .collect();
    for w in scaled.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.01, "{scaled:?}");
    }
}

#[test]
fn row_at_large_l_stays_normalized() {
    // 3j rows at the largest band limits used by the studies
    for m1 in [-3, 0, 5] {
        let r = wigner_3j_row(5, 600, 603, m1).unwrap();
        let s: f64 = r.values.iter().map(|v| v * v).sum();
        assert!((s * 11.0 - 1.0).abs() < 1e-12);
        assert!(r.values.iter().all(|v| v.is_finite()));
    }
    let r = wigner_3j_row(1000, 1000, 1000, 0).unwrap();
    let s: f64 = r.values.iter().map(|v| v * v).sum();
    assert!((s * 2001.0 - 1.0).abs() < 1e-12);
    assert!((r.get(0) - wigner_3j_zero(1000, 1000, 1000)).abs() < 1e-12 * r.get(0).abs());
}

proptest! {
    #[test]
    fn parity_and_permutations_are_exact(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_triple(&mut rng, 60);
        let v = wigner_3j(&t).unwrap();
        let odd = if (t.l1 + t.l2 + t.l3) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(w3(t.l1, t.l2, t.l3, -t.m1, -t.m2, -t.m3), odd * v);
        prop_assert_eq!(w3(t.l2, t.l3, t.l1, t.m2, t.m3, t.m1), v);
        prop_assert_eq!(w3(t.l3, t.l1, t.l2, t.m3, t.m1, t.m2), v);
        prop_assert_eq!(w3(t.l2, t.l1, t.l3, t.m2, t.m1, t.m3), odd * v);
        prop_assert_eq!(w3(t.l1, t.l3, t.l2, t.m1, t.m3, t.m2), odd * v);
        let lmax = t.l1.max(t.l2).max(t.l3);
        prop_assert!(v.abs() <= (1.0 / (2 * lmax + 1) as f64).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn six_j_bound_and_column_symmetry(a in 0i32..30, b in 0i32..30, c in 0i32..30, d in 0i32..30, e in 0i32..30, f in 0i32..30) {
        let s = SixJArguments::new(a, b, c, d, e, f);
        let v = wigner_6j(&s);
        let bound = 1.0 / (((2 * c + 1) * (2 * f + 1)) as f64).sqrt();
        prop_assert!(v.abs() <= bound * (1.0 + 1e-12));
        prop_assert_eq!(v, wigner_6j(&SixJArguments::new(b, a, c, e, d, f)));
        prop_assert_eq!(v, wigner_6j(&SixJArguments::new(c, b, a, f, e, d)));
        prop_assert_eq!(v, wigner_6j(&SixJArguments::new(a, e, f, d, b, c)));
    }

    #[test]
    fn row_entries_match_pointwise(seed in 0u64..5_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_triple(&mut rng, 80);
        let row = wigner_3j_row(t.l1, t.l2, t.l3, t.m1).unwrap();
        for (m2, v) in row.iter() {
            let p = w3(t.l1, t.l2, t.l3, t.m1, m2, -t.m1 - m2);
            prop_assert!((p - v).abs() <= 1e-12);
        }
    }
}

mod identity_sweeps {
    use spherebispec::wigner::identities::*;

    #[test]
    fn identities_hold_exhaustively_to_six() {
        let t = DenseThreeJ::new(6).unwrap();
        for (name, rep) in [
            ("normalization", sweep_normalization(&t, 6)),
            ("orthogonality", sweep_orthogonality(&t, 6)),
            ("alternating", sweep_alternating_sum(&t, 6)),
            ("six-j contraction", sweep_six_j_contraction(&t, 6)),
            ("three-j recoupling", sweep_three_j_recoupling(&t, 6)),
        ] {
            assert!(rep.cases > 100, "{name}: {rep:?}");
            assert!(rep.max_error < 1e-9, "{name}: {rep:?}");
        }
    }

    #[test]
    fn four_j_recoupling() {
        // the full sweep to 6 lives in the acceptance suite
        let t = DenseThreeJ::new(12).unwrap();
        let ex = sweep_four_j_recoupling(&t, 4);
        let rnd = sample_four_j_recoupling(&t, 6, 500, 7);
        assert!(ex.cases > 1_000_000 && rnd.cases > 0);
        assert!(ex.max_error < 1e-12 && rnd.max_error < 1e-12, "{ex:?} {rnd:?}");
    }

    #[test]
    fn normalization_for_large_multipoles() {
        for (a, b, c) in [(50, 50, 50), (17, 33, 49), (0, 50, 50), (25, 40, 21)] {
            assert!(normalization_residual(a, b, c).unwrap() < 1e-10);
        }
    }
}
