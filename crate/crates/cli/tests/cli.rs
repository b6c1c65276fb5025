use std::path::Path;
use std::process::{Command, Output};

use spherebispec::gaussianity::{p_value_sup, run_test, Statistic, TestConfig};
use spherebispec::HarmonicCoefficients;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spherebispec")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn wigner_three_j_value() {
    let o = run(&["wigner", "--3j", "2", "2", "2", "0", "0", "0"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v + 0.2390457218668787).abs() < 1e-15);
    let o = run(&["wigner", "--3j", "2", "2", "2", "0", "0", "0", "--exact"]);
    assert!(stdout(&o).contains("square = 2/35"));
    let o = run(&["wigner", "--6j", "1", "1", "1", "1", "1", "1"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["wigner"]).status.code(), Some(1));
    assert_eq!(run(&["test", "--stat", "J7", "--L", "10", "--alm", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(run(&["spectrum", "--alm", p(&missing)]).status.code(), Some(1));

    // a field with vanishing sample spectrum trips the numeric guard
    let zeros = dir.path().join("zeros.csv");
    HarmonicCoefficients::zeros(1, 20).unwrap().write_csv(&zeros).unwrap();
    let o = run(&["test", "--stat", "J3", "--L", "20", "--alm", p(&zeros)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["oracle", "40", "40", "40"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_documents_dipole_convention() {
    for sub in ["synth", "analyze"] {
        let h = stdout(&run(&[sub, "--help"]));
        assert!(h.contains("--lmin") && h.contains("dipole") && h.contains("[default: 1]"), "{h}");
    }
}

#[test]
fn synth_analyze_test_pipeline_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let alm = dir.path().join("alm.csv");
    let map = dir.path().join("map.csv");
    let back = dir.path().join("back.csv");
    let args = ["synth", "--L", "32", "--seed", "5", "--fnl", "300", "--alpha", "2", "--out", p(&alm), "--map", p(&map)];
    assert!(run(&args).status.success());
    assert!(run(&["analyze", "--map", p(&map), "--L", "32", "--out", p(&back)]).status.success());

    let a = HarmonicCoefficients::read_csv(&alm).unwrap();
    let b = HarmonicCoefficients::read_csv(&back).unwrap();
    let err = (1..=32)
        .flat_map(|l| (0..=l as i64).map(move |m| (l, m)))
        .map(|(l, m)| (a.get(l, m) - b.get(l, m)).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-10 * 1e-4, "round trip {err}");

    let csv = dir.path().join("path.csv");
    let json = dir.path().join("res.json");
    let o = run(&["test", "--stat", "J3", "--L", "32", "--l0", "2", "--K", "1", "--alm", p(&alm), "--out", p(&csv), "--json", p(&json)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(std::fs::read_to_string(&json).unwrap(), stdout(&o));

    let lib = run_test(&TestConfig::new(Statistic::J3, 32, 2, 1).unwrap(), &a).unwrap();
    assert_eq!(v["sup"].as_f64().unwrap(), lib.sup);
    assert_eq!(v["p_value"].as_f64().unwrap(), p_value_sup(lib.sup).unwrap());
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), lib.to_csv());
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("r,value\n0,0"));
}

#[test]
fn spectrum_and_bispectrum_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let alm = dir.path().join("alm.csv");
    assert!(run(&["synth", "--L", "12", "--seed", "1", "--out", p(&alm)]).status.success());
    let cl = dir.path().join("cl.csv");
    assert!(run(&["spectrum", "--alm", p(&alm), "--out", p(&cl)]).status.success());
    let text = std::fs::read_to_string(&cl).unwrap();
    assert!(text.starts_with("l,cl\n1,"));
    assert_eq!(text.lines().count(), 13);

    let o = run(&["bispectrum", "--alm", p(&alm), "--triple", "2", "3", "5", "--triple", "4", "4", "4", "--kind", "I", "--cl", p(&cl)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(rows[0], "l1,l2,l3,kind,value");
    assert!(rows[1].starts_with("2,3,5,I,") && rows[2].starts_with("4,4,4,I,"));
    // with the sample spectrum plugged in, I equals Ihat
    let o2 = run(&["bispectrum", "--alm", p(&alm), "--triple", "2", "3", "5", "--triple", "4", "4", "4"]);
    let hat: Vec<f64> = stdout(&o2).lines().skip(1).map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    let plain: Vec<f64> = rows[1..].iter().map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    for (x, y) in hat.iter().zip(&plain) {
        assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
    }
    let o3 = run(&["bispectrum", "--alm", p(&alm), "--stat", "J4", "--L", "12", "--l0", "2", "--K", "0"]);
    assert!(o3.status.success());
    assert!(stdout(&o3).lines().skip(1).all(|r| r.contains(",Ihat,")));
}

#[test]
fn oracle_agrees_with_closed_form() {
    let o = run(&["oracle", "2", "3", "3", "--p", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (b, c) = (v["bruteforce"].as_f64().unwrap(), v["closed_form"].as_f64().unwrap());
    assert!((b - c).abs() < 1e-10 * c.abs());
}

#[test]
fn study_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("size.cfg");
    std::fs::write(&manifest, "# small size study\nL = 16, 20\nreps = 10\nstatistics = J1, J3\nK = 0, 1\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = run(&["study", "--manifest", p(&manifest), "--seed", "42", "--out", p(&a)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = Command::new(env!("CARGO_BIN_EXE_spherebispec"))
        .args(["study", "--manifest", p(&manifest), "--seed", "42", "--out", p(&b)])
        .env("SPHEREBISPEC_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(a.with_extension("json")).unwrap(), std::fs::read(b.with_extension("json")).unwrap());

    // seeds are mandatory
    assert_eq!(run(&["study", "--manifest", p(&manifest)]).status.code(), Some(1));
}
