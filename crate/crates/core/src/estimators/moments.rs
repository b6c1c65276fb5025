//! Closed-form Gaussian moments of the normalized bispectra.

use crate::diagrams::{double_factorial, moment_bruteforce, MAX_ORACLE_L};
use crate::error::{invalid, Error, Result};
use crate::wigner::{triangle_ok, wigner_6j, SixJArguments};

/// Whether a moment value is exact or only its leading asymptotic term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    /// (2p-1)!! Delta^p, correct up to O(1/l1).
    Asymptotic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentValue {
    pub value: f64,
    pub exactness: Exactness,
}

impl MomentValue {
    fn exact(value: f64) -> Self {
        Self { value, exactness: Exactness::Exact }
    }
}

fn check_admissible(l1: usize, l2: usize, l3: usize) -> Result<()> {
    if !triangle_ok(l1 as i32, l2 as i32, l3 as i32) {
        return Err(Error::Domain(format!("({l1}, {l2}, {l3}) violates the triangle rule")));
    }
    if (l1 + l2 + l3) % 2 == 1 {
        return Err(Error::Domain(format!("({l1}, {l2}, {l3}) has an odd sum")));
    }
    Ok(())
}

fn sorted(l1: usize, l2: usize, l3: usize) -> (usize, usize, usize) {
    let mut s = [l1, l2, l3];
    s.sort_unstable();
    (s[0], s[1], s[2])
}

/// Multiplicity factor: 1 for distinct, 2 for one coincidence, 6 for all equal.
pub fn delta_factor(l1: usize, l2: usize, l3: usize) -> Result<u32> {
    if !(l1 <= l2 && l2 <= l3) {
        return Err(invalid!("delta_factor expects l1 <= l2 <= l3, got ({l1}, {l2}, {l3})"));
    }
    let d = |a: usize, b: usize| u32::from(a == b);
    Ok(1 + d(l1, l2) + d(l2, l3) + 3 * d(l1, l3))
}

/// E I^2 = Delta.
#[allow(non_snake_case)]
pub fn moment_I2(l1: usize, l2: usize, l3: usize) -> Result<f64> {
    check_admissible(l1, l2, l3)?;
    let (a, b, c) = sorted(l1, l2, l3);
    Ok(delta_factor(a, b, c)? as f64)
}

/// E I^4 for l1 < l2 < l3.
///
/// The last term is the 6j symbol {l1 l2 l3; l1 l2 l3} itself, not its
/// square: each of the six complete-graph pairings contributes exactly one
/// 6j, which the brute-force diagram sum confirms.
#[allow(non_snake_case)]
pub fn moment_I4_offdiag(l1: usize, l2: usize, l3: usize) -> Result<f64> {
    if !(l1 < l2 && l2 < l3) {
        return Err(invalid!("moment_I4_offdiag needs l1 < l2 < l3, got ({l1}, {l2}, {l3})"));
    }
    check_admissible(l1, l2, l3)?;
    let (a, b, c) = (l1 as i32, l2 as i32, l3 as i32);
    let w = wigner_6j(&SixJArguments::new(a, b, c, a, b, c));
    let inv = |l: usize| 6.0 / (2 * l + 1) as f64;
    Ok(3.0 + inv(l1) + inv(l2) + inv(l3) + 6.0 * w)
}

/// g(l; p) = prod_{k=1}^{p} (2l+1)/(2l+2k-1).
pub fn g_factor(l: usize, p: usize) -> f64 {
    let n = (2 * l + 1) as f64;
    (1..=p).map(|k| n / (2 * l + 2 * k - 1) as f64).product()
}

/// E I^{2p} with a known spectrum, p in {1, 2}.
///
/// Repeated-index fourth moments have no printed closed form; they come from
/// the diagram oracle when every multipole is at most the oracle limit and
/// are otherwise reported as the labelled leading term 3 Delta^2.
#[allow(non_snake_case)]
pub fn moment_I(l1: usize, l2: usize, l3: usize, p: usize) -> Result<MomentValue> {
    check_admissible(l1, l2, l3)?;
    let (a, b, c) = sorted(l1, l2, l3);
    let delta = delta_factor(a, b, c)? as f64;
    match p {
        1 => Ok(MomentValue::exact(delta)),
        2 if a < b && b < c => Ok(MomentValue::exact(moment_I4_offdiag(a, b, c)?)),
        2 if c <= MAX_ORACLE_L => Ok(MomentValue::exact(moment_bruteforce(2, a, b, c)?)),
        2 => Ok(MomentValue { value: 3.0 * delta * delta, exactness: Exactness::Asymptotic }),
        _ => Err(invalid!("moments are available for 2p in {{2, 4}}, got 2p = {}", 2 * p)),
    }
}

/// E I-hat^{2p}: E I^{2p} times the g-factor pattern fixed by the repeated indices.
#[allow(non_snake_case)]
pub fn moment_Ihat(l1: usize, l2: usize, l3: usize, p: usize) -> Result<MomentValue> {
    let base = moment_I(l1, l2, l3, p)?;
    let (a, b, c) = sorted(l1, l2, l3);
    let g = if a == c {
        g_factor(a, 3 * p)
    } else if a == b {
        g_factor(a, 2 * p) * g_factor(c, p)
    } else if b == c {
        g_factor(a, p) * g_factor(c, 2 * p)
    } else {
        g_factor(a, p) * g_factor(b, p) * g_factor(c, p)
    };
    Ok(MomentValue { value: base.value * g, exactness: base.exactness })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// E{ u_{l0}^{q0} prod_i u_{lm_i}^{q_i} conj(u_{lm_i})^{q'_i} } for u = a/sqrt(C_l).
///
/// `pairs` lists (q_i, q'_i) for distinct orders m_i > 0.
pub fn u_mixed_moment(q0: u32, pairs: &[(u32, u32)]) -> f64 {
    if q0 % 2 == 1 || pairs.iter().any(|&(q, qc)| q != qc) {
        return 0.0;
    }
    let p0 = q0 / 2;
    let df = if p0 == 0 { 1.0 } else { double_factorial((2 * p0 - 1) as usize) as f64 };
    df * pairs.iter().map(|&(q, _)| factorial(q)).product::<f64>()
}

/// Same moment with u-hat = a/sqrt(C-hat_l): u_mixed_moment times g(l; p),
/// where p = q0/2 + sum q_i is half the number of factors.
pub fn uhat_mixed_moment(l: usize, q0: u32, pairs: &[(u32, u32)]) -> Result<f64> {
    if pairs.len() > l {
        return Err(invalid!("{} order slots requested but multipole {l} has only {l} positive orders", pairs.len()));
    }
    let base = u_mixed_moment(q0, pairs);
    if base == 0.0 {
        return Ok(0.0);
    }
    let p = (q0 / 2 + pairs.iter().map(|&(q, _)| q).sum::<u32>()) as usize;
    Ok(base * g_factor(l, p))
}
