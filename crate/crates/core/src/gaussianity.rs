//! Partial-sum processes J1..J4 built from normalized bispectrum ordinates,
//! their sup statistics and Brownian-limit p-values.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use statrs::function::erf::erfc_inv;

use crate::error::{invalid, Error, Result};
use crate::estimators::BispectrumEstimator;
use crate::io::write_atomic;
use crate::sht::HarmonicCoefficients;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    /// Equilateral-type triples (l-u, l, l+u), linear in I-hat.
    J1,
    /// Same triples, centred squares.
    J2,
    /// Triples (l0+u, l, l+l0+u), linear in I-hat.
    J3,
    /// Same triples, centred squares.
    J4,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [Statistic::J1, Statistic::J2, Statistic::J3, Statistic::J4];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::J1 => "J1",
            Statistic::J2 => "J2",
            Statistic::J3 => "J3",
            Statistic::J4 => "J4",
        }
    }

    fn equilateral(self) -> bool {
        matches!(self, Statistic::J1 | Statistic::J2)
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    /// Accepts `J1`..`J4`, and `S1`..`S4` for the matching sup statistics.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "J1" | "S1" => Ok(Statistic::J1),
            "J2" | "S2" => Ok(Statistic::J2),
            "J3" | "S3" => Ok(Statistic::J3),
            "J4" | "S4" => Ok(Statistic::J4),
            other => Err(invalid!("unknown statistic `{other}` (expected J1, J2, J3 or J4)")),
        }
    }
}

/// Which process, at which band limit, with which base multipole and pooling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestConfig {
    pub statistic: Statistic,
    pub l_max: usize,
    pub l0: usize,
    pub k: usize,
}

impl TestConfig {
    pub fn new(statistic: Statistic, l_max: usize, l0: usize, k: usize) -> Result<Self> {
        if l0 < 2 {
            return Err(invalid!("l0 must be at least 2, got {l0}"));
        }
        let need = if statistic.equilateral() { l0 + k } else { l0 + k + 1 };
        if need > l_max {
            return Err(invalid!("{statistic} with l0 = {l0}, K = {k} needs L >= {need}, got L = {l_max}"));
        }
        Ok(Self { statistic, l_max, l0, k })
    }

    /// Middle multipoles l that contribute, in increasing order.
    pub fn jump_multipoles(&self) -> Vec<usize> {
        let (l0, k, l_max) = (self.l0, self.k, self.l_max);
        if self.statistic.equilateral() {
            // l + K must stay observable, and 3l must be even
            let hi = l_max - k;
            (l0 + k..=hi).filter(|l| l % 2 == 0).collect()
        } else if l_max >= 2 * l0 + k + 1 {
            (l0 + k + 1..=l_max - l0 - k).collect()
        } else {
            Vec::new()
        }
    }

    /// The K+1 pooled triples attached to middle multipole `l`.
    pub fn triples_at(&self, l: usize) -> impl Iterator<Item = [usize; 3]> + '_ {
        let eq = self.statistic.equilateral();
        let l0 = self.l0;
        (0..=self.k).map(move |u| if eq { [l - u, l, l + u] } else { [l0 + u, l, l + l0 + u] })
    }

    /// 1/sqrt(L/2) for the equilateral family, 1/sqrt(L) otherwise.
    fn prefactor(&self) -> f64 {
        let n = self.l_max as f64;
        if self.statistic.equilateral() {
            (2.0 / n).sqrt()
        } else {
            1.0 / n.sqrt()
        }
    }

    /// Smallest and largest multipole any ordinate touches.
    pub fn multipole_range(&self) -> Option<(usize, usize)> {
        let ls = self.jump_multipoles();
        let (first, last) = (*ls.first()?, *ls.last()?);
        if self.statistic.equilateral() {
            Some((first - self.k, last + self.k))
        } else {
            Some((self.l0, last + self.l0 + self.k))
        }
    }
}

/// Every I-hat argument the process needs, ordered by middle multipole then u.
pub fn required_ordinates(cfg: &TestConfig) -> Vec<[usize; 3]> {
    cfg.jump_multipoles().into_iter().flat_map(|l| cfg.triples_at(l).collect::<Vec<_>>()).collect()
}

fn multiplicity(t: [usize; 3]) -> f64 {
    let d = |a: usize, b: usize| f64::from(u8::from(a == b));
    1.0 + d(t[0], t[1]) + d(t[1], t[2]) + 3.0 * d(t[0], t[2])
}

/// Step path r -> J(r), stored at its jump points plus the endpoints 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TestProcessPath {
    pub config: TestConfig,
    pub r_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub sup: f64,
    pub p_value: f64,
}

impl TestProcessPath {
    /// J(r) for any r in [0, 1].
    pub fn at(&self, r: f64) -> f64 {
        let i = self.r_grid.partition_point(|&x| x <= r);
        if i == 0 {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// J(1).
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (r, v) in self.r_grid.iter().zip(&self.values) {
            let _ = writeln!(s, "{r},{v}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        let c = &self.config;
        let v = serde_json::json!({
            "statistic": c.statistic.as_str(),
            "L": c.l_max,
            "l0": c.l0,
            "K": c.k,
            "sup": self.sup,
            "p_value": self.p_value,
        });
        serde_json::to_string_pretty(&v).expect("plain JSON values") + "\n"
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

/// Builds the path from an I-hat lookup; `ihat` is called once per ordinate
/// in [`required_ordinates`] order.
pub fn j_process_with(cfg: &TestConfig, mut ihat: impl FnMut([usize; 3]) -> Result<f64>) -> Result<TestProcessPath> {
    let n = cfg.l_max as f64;
    let pre = cfg.prefactor();
    let pool = 1.0 / ((cfg.k + 1) as f64).sqrt();
    let mut r_grid = vec![0.0];
    let mut values = vec![0.0];
    let mut acc = 0.0;
    for l in cfg.jump_multipoles() {
        let mut inner = 0.0;
        for t in cfg.triples_at(l) {
            let x = ihat(t)?;
            inner += match cfg.statistic {
                Statistic::J1 => x / multiplicity(t).sqrt(),
                Statistic::J2 => {
                    let d = multiplicity(t);
                    (x * x - d) / (std::f64::consts::SQRT_2 * d)
                }
                Statistic::J3 => x,
                Statistic::J4 => (x * x - 1.0) / std::f64::consts::SQRT_2,
            };
        }
        acc += pool * inner;
        r_grid.push(l as f64 / n);
        values.push(pre * acc);
    }
    if *r_grid.last().unwrap() < 1.0 {
        r_grid.push(1.0);
        values.push(pre * acc);
    }
    let sup = sup_statistic(&values);
    Ok(TestProcessPath { config: *cfg, r_grid, values, sup, p_value: p_value_sup(sup)? })
}

/// Builds the path from a table of I-hat values keyed by sorted triple.
pub fn j_process(cfg: &TestConfig, ihat: &HashMap<[usize; 3], f64>) -> Result<TestProcessPath> {
    j_process_with(cfg, |t| {
        ihat.get(&t).copied().ok_or_else(|| invalid!("missing ordinate ({}, {}, {})", t[0], t[1], t[2]))
    })
}

/// Runs the test on one realization, with the sample spectrum shared by every ordinate.
pub fn run_test(cfg: &TestConfig, alm: &HarmonicCoefficients) -> Result<TestProcessPath> {
    if let Some((lo, hi)) = cfg.multipole_range() {
        if lo < alm.l_min() || hi > alm.band_limit() {
            return Err(invalid!(
                "{} with L = {} needs multipoles {lo}..={hi}, coefficients cover {}..={}",
                cfg.statistic,
                cfg.l_max,
                alm.l_min(),
                alm.band_limit()
            ));
        }
    }
    let mut est = BispectrumEstimator::new(alm);
    j_process_with(cfg, |[a, b, c]| est.normalized_hat(a, b, c))
}

/// One-sided sup over the step values, including the initial 0.
pub fn sup_statistic(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Sup of |J|; no limiting law is tabulated for it.
pub fn sup_abs_statistic(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// P(sup_{[0,1]} W > x) = 2(1 - Phi(x)) for standard Brownian motion W.
pub fn p_value_sup(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("sup statistic must be non-negative, got {x}")));
    }
    // libm's erfc is accurate to about an ulp; the statrs one only to ~1e-11
    Ok(libm::erfc(x / std::f64::consts::SQRT_2))
}

/// Asymptotic critical value c with P(sup W > c) = alpha.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid!("level must lie in (0, 1], got {alpha}"));
    }
    // polish the statrs inverse with Newton steps on the accurate erfc
    let mut x = std::f64::consts::SQRT_2 * erfc_inv(alpha);
    if x.is_finite() && x > 0.0 {
        for _ in 0..3 {
            let f = p_value_sup(x)? - alpha;
            let df = -(2.0 / std::f64::consts::PI).sqrt() * (-0.5 * x * x).exp();
            x -= f / df;
        }
    }
    Ok(x.max(0.0))
}
