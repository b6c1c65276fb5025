use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fields::{quadratic_component, sample_gaussian_alm, MeanEstimate};
use super::model::{SpectrumKind, SpectrumModel};
use crate::error::{invalid, Error, Result};
use crate::estimators::BispectrumEstimator;
use crate::gaussianity::{critical_value, j_process_with, Statistic, TestConfig};
use crate::io::write_atomic;
use crate::sht::HarmonicCoefficients;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SPHEREBISPEC_THREADS";

/// Monte Carlo study description, read from `key = value` lines.
///
/// Keys: statistics, L, K, l0, fnl, reps, seed, levels, lmin, spectrum,
/// alpha, amplitude, variance_target, mean. Lists are comma separated and
/// `#` starts a comment. L and reps are required.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyManifest {
    pub statistics: Vec<Statistic>,
    pub l_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub l0: usize,
    pub fnl: Vec<f64>,
    pub reps: usize,
    pub seed: Option<u64>,
    pub levels: Vec<f64>,
    pub l_min: usize,
    pub spectrum: SpectrumKind,
    pub alpha: f64,
    /// Fixed amplitude; when absent it is solved from `variance_target` at each L.
    pub amplitude: Option<f64>,
    pub variance_target: f64,
    /// Use the ensemble E T^2 instead of the realized mean.
    pub ensemble_mean: bool,
}

impl StudyManifest {
    /// Defaults for everything but the band limits and replication count.
    pub fn new(l_values: Vec<usize>, reps: usize) -> Self {
        Self {
            statistics: vec![Statistic::J3],
            l_values,
            k_values: vec![0],
            l0: 2,
            fnl: vec![0.0],
            reps,
            seed: None,
            levels: vec![0.10, 0.05],
            l_min: 1,
            spectrum: SpectrumKind::PowerLaw,
            alpha: 3.0,
            amplitude: None,
            variance_target: 1e-8,
            ensemble_mean: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new(Vec::new(), 0);
        let (mut have_l, mut have_reps) = (false, false);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ln = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {ln}: expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Parse(format!("line {ln}: bad {what} `{value}`"));
            match key {
                "statistics" | "statistic" => m.statistics = list(value, |s| s.parse::<Statistic>().map_err(|_| bad("statistic")))?,
                "L" => {
                    m.l_values = list(value, |s| s.parse().map_err(|_| bad("L")))?;
                    have_l = true;
                }
                "K" => m.k_values = list(value, |s| s.parse().map_err(|_| bad("K")))?,
                "l0" => m.l0 = value.parse().map_err(|_| bad("l0"))?,
                "fnl" | "f_nl" => m.fnl = list(value, |s| s.parse().map_err(|_| bad("fnl")))?,
                "reps" | "R" => {
                    m.reps = value.parse().map_err(|_| bad("reps"))?;
                    have_reps = true;
                }
                "seed" => m.seed = Some(value.parse().map_err(|_| bad("seed"))?),
                "levels" => m.levels = list(value, |s| s.parse().map_err(|_| bad("level")))?,
                "lmin" => m.l_min = value.parse().map_err(|_| bad("lmin"))?,
                "spectrum" => m.spectrum = value.parse().map_err(|_| bad("spectrum"))?,
                "alpha" => m.alpha = value.parse().map_err(|_| bad("alpha"))?,
                "amplitude" | "amp" => m.amplitude = Some(value.parse().map_err(|_| bad("amplitude"))?),
                "variance_target" => m.variance_target = value.parse().map_err(|_| bad("variance_target"))?,
                "mean" => {
                    m.ensemble_mean = match value {
                        "realized" => false,
                        "ensemble" => true,
                        _ => return Err(bad("mean (expected realized or ensemble)")),
                    }
                }
                _ => return Err(Error::Parse(format!("line {ln}: unknown key `{key}`"))),
            }
        }
        if !have_l {
            return Err(Error::Parse("manifest needs `L`".into()));
        }
        if !have_reps {
            return Err(Error::Parse("manifest needs `reps`".into()));
        }
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form; parsing it gives back the same manifest.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "statistics = {}", join(self.statistics.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "L = {}", join(self.l_values.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "K = {}", join(self.k_values.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "l0 = {}", self.l0);
        let _ = writeln!(s, "fnl = {}", join(self.fnl.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "reps = {}", self.reps);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "levels = {}", join(self.levels.iter().map(|x| x.to_string()).collect()));
        let _ = writeln!(s, "lmin = {}", self.l_min);
        let _ = writeln!(s, "spectrum = {}", self.spectrum);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        if let Some(a) = self.amplitude {
            let _ = writeln!(s, "amplitude = {a}");
        }
        let _ = writeln!(s, "variance_target = {}", self.variance_target);
        let _ = writeln!(s, "mean = {}", if self.ensemble_mean { "ensemble" } else { "realized" });
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(invalid!("reps must be at least 1"));
        }
        for (name, empty) in [
            ("statistics", self.statistics.is_empty()),
            ("L", self.l_values.is_empty()),
            ("K", self.k_values.is_empty()),
            ("fnl", self.fnl.is_empty()),
            ("levels", self.levels.is_empty()),
        ] {
            if empty {
                return Err(invalid!("`{name}` must list at least one value"));
            }
        }
        // a level of 1 is the degenerate always-reject threshold
        if let Some(a) = self.levels.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(invalid!("levels must lie in (0, 1], got {a}"));
        }
        if self.fnl.iter().any(|f| !f.is_finite()) {
            return Err(invalid!("fnl values must be finite"));
        }
        if self.l_min > self.l0 {
            return Err(invalid!("lmin = {} exceeds l0 = {}", self.l_min, self.l0));
        }
        for &l in &self.l_values {
            for &s in &self.statistics {
                for &k in &self.k_values {
                    TestConfig::new(s, l, self.l0, k)?;
                }
            }
            self.model_at(l)?;
        }
        Ok(())
    }

    /// Spectrum used at band limit L.
    pub fn model_at(&self, l_max: usize) -> Result<SpectrumModel> {
        let base = SpectrumModel::new(self.spectrum, self.amplitude.unwrap_or(1.0), self.alpha)?;
        match self.amplitude {
            Some(_) => Ok(base),
            None => base.with_variance(self.l_min, l_max, self.variance_target),
        }
    }

    fn null_fnl(&self) -> bool {
        self.fnl.contains(&0.0)
    }
}

fn list<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

/// Rejection summary for one (f_nl, statistic, L, K) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub fnl: f64,
    pub statistic: Statistic,
    pub l_max: usize,
    pub k: usize,
    /// Rejection rate at the asymptotic threshold, one per level.
    pub asymptotic: Vec<f64>,
    /// Rejection rate at the Monte Carlo critical value of the matching f_nl = 0 cell.
    pub tabulated: Vec<f64>,
    /// Empirical (1 - level) quantile of the sup statistic in this cell.
    pub quantiles: Vec<f64>,
    pub mean_sup: f64,
    pub sups: Vec<f64>,
}

/// Outcome of a study; both exports are deterministic functions of the manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub manifest: StudyManifest,
    pub seed: u64,
    /// Spectrum amplitude used at each L, in manifest order.
    pub amplitudes: Vec<f64>,
    pub cells: Vec<CellResult>,
}

fn rate_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// Lower empirical quantile: the smallest sample value with at least a
/// fraction q of the sample at or below it. q = 0 maps to -inf so that a
/// level of 1 rejects everything.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    if q <= 0.0 || sorted.is_empty() {
        return f64::NEG_INFINITY;
    }
    let n = sorted.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

fn threshold(level: f64) -> Result<f64> {
    if level >= 1.0 {
        Ok(f64::NEG_INFINITY)
    } else {
        critical_value(level)
    }
}

impl StudyReport {
    pub fn cell(&self, fnl: f64, statistic: Statistic, l_max: usize, k: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.fnl == fnl && c.statistic == statistic && c.l_max == l_max && c.k == k)
    }

    /// One row per (f_nl, statistic, L); columns K x {T, A} x levels.
    pub fn to_csv(&self) -> String {
        let m = &self.manifest;
        let mut s = String::from("fnl,statistic,L");
        for k in &m.k_values {
            for kind in ["T", "A"] {
                for a in &m.levels {
                    let _ = write!(s, ",K{k}_{kind}_{a}");
                }
            }
        }
        s.push('\n');
        for &f in &m.fnl {
            for &st in &m.statistics {
                for &l in &m.l_values {
                    let _ = write!(s, "{f},{st},{l}");
                    for &k in &m.k_values {
                        let c = self.cell(f, st, l, k).expect("every cell is computed");
                        for v in c.tabulated.iter().chain(&c.asymptotic) {
                            let _ = write!(s, ",{v}");
                        }
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    /// Sidecar with standard errors, critical values and the seeding scheme.
    pub fn to_json(&self) -> String {
        let m = &self.manifest;
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|c| {
                let levels: Vec<serde_json::Value> = m
                    .levels
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        let asym = threshold(a).unwrap_or(f64::NAN);
                        serde_json::json!({
                            "level": a,
                            "asymptotic_rate": c.asymptotic[i],
                            "asymptotic_se": rate_se(c.asymptotic[i], m.reps),
                            "tabulated_rate": c.tabulated[i],
                            "tabulated_se": rate_se(c.tabulated[i], m.reps),
                            "asymptotic_critical_value": finite_or_null(asym),
                            "monte_carlo_critical_value": finite_or_null(c.quantiles[i]),
                        })
                    })
                    .collect();
                serde_json::json!({
                    "fnl": c.fnl,
                    "statistic": c.statistic.as_str(),
                    "L": c.l_max,
                    "K": c.k,
                    "mean_sup": c.mean_sup,
                    "levels": levels,
                })
            })
            .collect();
        let v = serde_json::json!({
            "seed": self.seed,
            "reps": m.reps,
            "rng": "ChaCha8, seed_from_u64(seed), stream (L << 32) | replication",
            "manifest": m.to_text(),
            "amplitudes": m.l_values.iter().zip(&self.amplitudes).map(|(l, a)| serde_json::json!({"L": l, "amplitude": a})).collect::<Vec<_>>(),
            "cells": cells,
        });
        serde_json::to_string_pretty(&v).expect("plain JSON values") + "\n"
    }

    /// Writes the CSV at `path` and the JSON sidecar next to it with extension `.json`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let sidecar = path.with_extension("json");
        if sidecar == path {
            return Err(invalid!("report path {} would collide with its JSON sidecar", path.display()));
        }
        write_atomic(path, self.to_csv().as_bytes())?;
        write_atomic(&sidecar, self.to_json().as_bytes())?;
        Ok(sidecar)
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::Null
    }
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(invalid!("{THREADS_ENV} must be a positive integer, got `{v}`")),
        },
        Err(_) => Ok(None),
    }
}

/// Random stream for replication `rep` at band limit `l_max`.
///
/// Every f_nl, statistic and K at the same L sees the same field, so power
/// comparisons use common random numbers.
pub fn replication_rng(seed: u64, l_max: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((l_max as u64) << 32) | rep as u64);
    rng
}

/// sup statistics of one replication, indexed [fnl][statistic][K].
fn replicate(m: &StudyManifest, model: &SpectrumModel, seed: u64, l_max: usize, rep: usize) -> Result<Vec<f64>> {
    let mut rng = replication_rng(seed, l_max, rep);
    let a = sample_gaussian_alm(model, m.l_min, l_max, &mut rng)?;
    let q = if m.fnl.iter().any(|&f| f != 0.0) {
        let mean = if m.ensemble_mean {
            MeanEstimate::Ensemble(model.variance_of_field(m.l_min, l_max)?)
        } else {
            MeanEstimate::Realized
        };
        Some(quadratic_component(&a, l_max, mean)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(m.fnl.len() * m.statistics.len() * m.k_values.len());
    for &f in &m.fnl {
        let field: HarmonicCoefficients = match &q {
            Some(q) if f != 0.0 => a.add_scaled(f, q)?,
            _ => a.clone(),
        };
        let mut est = BispectrumEstimator::new(&field);
        let mut cache: HashMap<[usize; 3], f64> = HashMap::new();
        for &st in &m.statistics {
            for &k in &m.k_values {
                let cfg = TestConfig::new(st, l_max, m.l0, k)?;
                let path = j_process_with(&cfg, |t| {
                    if let Some(&v) = cache.get(&t) {
                        return Ok(v);
                    }
                    let v = est.normalized_hat(t[0], t[1], t[2])?;
                    cache.insert(t, v);
                    Ok(v)
                })?;
                out.push(path.sup);
            }
        }
    }
    Ok(out)
}

/// Runs every cell of the manifest; `threads` overrides [`THREADS_ENV`].
///
/// Replications run in parallel and are gathered in index order, so the
/// report does not depend on the worker count.
pub fn run_study(manifest: &StudyManifest, threads: Option<usize>) -> Result<StudyReport> {
    manifest.validate()?;
    let seed = manifest.seed.ok_or_else(|| invalid!("a study needs an explicit seed"))?;
    let threads = match threads {
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::ResourceGuard(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(manifest, seed))
}

fn run_in_pool(m: &StudyManifest, seed: u64) -> Result<StudyReport> {
    let (ns, nk) = (m.statistics.len(), m.k_values.len());
    let mut cells = Vec::new();
    let mut amplitudes = Vec::new();
    for &l_max in &m.l_values {
        let model = m.model_at(l_max)?;
        amplitudes.push(model.amplitude);
        let reps: Vec<Vec<f64>> =
            (0..m.reps).into_par_iter().map(|r| replicate(m, &model, seed, l_max, r)).collect::<Result<_>>()?;
        let zero = m.fnl.iter().position(|&f| f == 0.0);
        let mut quantiles_by_cell = vec![Vec::new(); m.fnl.len() * ns * nk];
        for (fi, _) in m.fnl.iter().enumerate() {
            for si in 0..ns {
                for ki in 0..nk {
                    let idx = (fi * ns + si) * nk + ki;
                    let mut v: Vec<f64> = reps.iter().map(|r| r[idx]).collect();
                    v.sort_by(f64::total_cmp);
                    quantiles_by_cell[idx] = m.levels.iter().map(|&a| empirical_quantile(&v, 1.0 - a)).collect();
                }
            }
        }
        for (fi, &f) in m.fnl.iter().enumerate() {
            for (si, &st) in m.statistics.iter().enumerate() {
                for (ki, &k) in m.k_values.iter().enumerate() {
                    let idx = (fi * ns + si) * nk + ki;
                    let sups: Vec<f64> = reps.iter().map(|r| r[idx]).collect();
                    let rate = |c: f64| sups.iter().filter(|&&s| s > c).count() as f64 / m.reps as f64;
                    let asymptotic = m.levels.iter().map(|&a| threshold(a).map(rate)).collect::<Result<Vec<_>>>()?;
                    // without a null cell the asymptotic thresholds stand in
                    let tabulated = match zero {
                        Some(z) => quantiles_by_cell[(z * ns + si) * nk + ki].iter().map(|&c| rate(c)).collect(),
                        None => asymptotic.clone(),
                    };
                    let mean_sup = sups.iter().sum::<f64>() / m.reps as f64;
                    cells.push(CellResult {
                        fnl: f,
                        statistic: st,
                        l_max,
                        k,
                        asymptotic,
                        tabulated,
                        quantiles: quantiles_by_cell[idx].clone(),
                        mean_sup,
                        sups,
                    });
                }
            }
        }
    }
    Ok(StudyReport { manifest: m.clone(), seed, amplitudes, cells })
}

/// Size study: every cell is run, and the manifest must include f_nl = 0.
pub fn run_size_study(manifest: &StudyManifest, threads: Option<usize>) -> Result<StudyReport> {
    if !manifest.null_fnl() {
        return Err(invalid!("a size study needs fnl = 0 in the manifest"));
    }
    run_study(manifest, threads)
}

/// Power study: f_nl = 0 is added when missing so the tabulated column has
/// its Monte Carlo critical values.
pub fn run_power_study(manifest: &StudyManifest, threads: Option<usize>) -> Result<StudyReport> {
    if manifest.fnl.iter().all(|&f| f == 0.0) {
        return Err(invalid!("a power study needs at least one nonzero fnl"));
    }
    let mut m = manifest.clone();
    if !m.null_fnl() {
        m.fnl.insert(0, 0.0);
    }
    run_study(&m, threads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let text = "# size study\nstatistics = J3, J1\nL = 20, 30\nK = 0, 2\nfnl = 0, 100\nreps = 5\nseed = 42\nlevels = 0.1, 0.05\n";
        let m = StudyManifest::parse(text).unwrap();
        assert_eq!(m.statistics, vec![Statistic::J3, Statistic::J1]);
        assert_eq!(m.l_values, vec![20, 30]);
        assert_eq!(m.seed, Some(42));
        assert_eq!(StudyManifest::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn manifest_errors() {
        assert!(StudyManifest::parse("L = 20\n").is_err());
        assert!(StudyManifest::parse("reps = 3\n").is_err());
        assert!(StudyManifest::parse("L = 20\nreps = 0\n").is_err());
        assert!(StudyManifest::parse("L = 20\nreps = 3\nlevels = 0\n").is_err());
        assert!(StudyManifest::parse("L = 20\nreps = 3\nbogus = 1\n").is_err());
        assert!(StudyManifest::parse("L = 20\nreps = 3\nK = x\n").is_err());
        assert!(StudyManifest::parse("L = 4\nreps = 3\nK = 2\n").is_err());
        assert!(StudyManifest::parse("L = 20 reps 3\n").is_err());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.9), 4.0);
        assert_eq!(empirical_quantile(&v, 0.5), 2.0);
        assert_eq!(empirical_quantile(&v, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn tiny_study() {
        let mut m = StudyManifest::new(vec![12], 6);
        m.seed = Some(7);
        m.statistics = Statistic::ALL.to_vec();
        m.k_values = vec![0, 1];
        m.levels = vec![0.1, 1.0];
        m.fnl = vec![0.0, 50.0];
        let r = run_study(&m, Some(1)).unwrap();
        assert_eq!(r.cells.len(), 2 * 4 * 2);
        for c in &r.cells {
            assert_eq!(c.asymptotic[1], 1.0);
            assert!(c.asymptotic.iter().chain(&c.tabulated).all(|x| (0.0..=1.0).contains(x)));
            assert!(c.quantiles[0] >= c.quantiles[1]);
        }
        assert!(run_size_study(&StudyManifest { fnl: vec![5.0], ..m.clone() }, Some(1)).is_err());
        m.seed = None;
        assert!(run_study(&m, Some(1)).is_err());
    }
}
