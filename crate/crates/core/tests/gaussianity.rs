use spherebispec::estimators::BispectrumEstimator;
use spherebispec::gaussianity::{j_process, required_ordinates, run_test, Statistic, TestConfig};
use spherebispec::harness::{replication_rng, sample_gaussian_alm, SpectrumModel};
use std::collections::HashMap;

fn field(l: usize, seed: u64) -> spherebispec::HarmonicCoefficients {
    let model = SpectrumModel::power_law(1.0, 2.0).unwrap();
    sample_gaussian_alm(&model, 1, l, &mut replication_rng(seed, l, 0)).unwrap()
}

#[test]
fn paths_are_scale_invariant() {
    let a = field(40, 1);
    for s in Statistic::ALL {
        let cfg = TestConfig::new(s, 40, 2, 2).unwrap();
        let p = run_test(&cfg, &a).unwrap();
        let q = run_test(&cfg, &a.scaled(3.7e-5)).unwrap();
        for (x, y) in p.values.iter().zip(&q.values) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{s}: {x} vs {y}");
        }
        assert_eq!(p.r_grid, q.r_grid);
    }
}

#[test]
fn run_test_matches_table_lookup() {
    let a = field(30, 2);
    let cfg = TestConfig::new(Statistic::J4, 30, 3, 1).unwrap();
    let mut est = BispectrumEstimator::new(&a);
    let table: HashMap<[usize; 3], f64> =
        required_ordinates(&cfg).into_iter().map(|t| (t, est.normalized_hat(t[0], t[1], t[2]).unwrap())).collect();
    assert_eq!(j_process(&cfg, &table).unwrap(), run_test(&cfg, &a).unwrap());
}

#[test]
fn empty_prefix_is_exactly_zero() {
    let a = field(40, 3);
    for s in Statistic::ALL {
        let cfg = TestConfig::new(s, 40, 4, 2).unwrap();
        let p = run_test(&cfg, &a).unwrap();
        let first = cfg.jump_multipoles()[0] as f64 / 40.0;
        for (r, v) in p.r_grid.iter().zip(&p.values) {
            if *r < first {
                assert_eq!(*v, 0.0);
            }
        }
        assert_eq!(p.at(first - 1e-9), 0.0);
        assert!(p.sup >= 0.0 && (0.0..=1.0).contains(&p.p_value));
    }
}

#[test]
fn appending_a_multipole_only_changes_later_values() {
    let a = field(41, 4);
    let short = run_test(&TestConfig::new(Statistic::J3, 40, 2, 0).unwrap(), &a).unwrap();
    let long = run_test(&TestConfig::new(Statistic::J3, 41, 2, 0).unwrap(), &a).unwrap();
    // same partial sums, rescaled by sqrt(40/41), with one extra jump at l = 37
    let c = (40.0f64 / 41.0).sqrt();
    let n = short.values.len() - 1;
    for i in 0..n {
        assert!((long.values[i] - c * short.values[i]).abs() < 1e-12);
    }
    assert_eq!(long.values.len(), short.values.len() + 1);
}

#[test]
fn coefficients_must_cover_the_ordinates() {
    let a = field(20, 5);
    let cfg = TestConfig::new(Statistic::J3, 30, 2, 0).unwrap();
    assert!(run_test(&cfg, &a).is_err());
}

#[test]
fn j4_terminal_variance_is_near_one() {
    let l = 60;
    let model = SpectrumModel::power_law(1.0, 1.0).unwrap();
    let cfg = TestConfig::new(Statistic::J4, l, 2, 0).unwrap();
    let xs: Vec<f64> = (0..400)
        .map(|r| {
            let a = sample_gaussian_alm(&model, 1, l, &mut replication_rng(6, l, r)).unwrap();
            run_test(&cfg, &a).unwrap().terminal()
        })
        .collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    // sampling sd of a variance estimate from 400 draws is about 0.07 for a Gaussian,
    // more for the heavier-tailed squares; the O(1/l) bias is small at l0 = 2
    assert!((v - 1.0).abs() < 0.35, "variance {v}");
}
