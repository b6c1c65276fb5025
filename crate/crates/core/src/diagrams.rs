//! Brute-force Gaussian moments of the normalized bispectrum via diagrams.
//!
//! A diagram is a perfect matching of the cells of a 2p x 3 grid; cell
//! (i, j) stands for the coefficient a_{l_j m_ij} in row i of the product
//! I^{2p}. Each edge contributes (-1)^m delta(m, -m') delta(l_j, l_j'), and
//! every row contributes its 3j symbol, so E I^{2p} is the sum of the values
//! of all (6p-1)!! diagrams. Cells are numbered row * 3 + col, 0-based.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::sum::neumaier_sum;
use crate::wigner::{triangle_ok, wigner_3j_row, wigner_6j, SixJArguments};

/// Largest multipole accepted by the evaluators.
pub const MAX_ORACLE_L: usize = 6;
/// Largest p accepted by [`enumerate_diagrams`].
pub const MAX_ENUMERATED_P: usize = 2;
/// Largest p accepted by [`diagram_value`] on explicitly built diagrams.
pub const MAX_EVALUATED_P: usize = 3;

/// Perfect matching of the 6p cells, stored as sorted pairs (a < b).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Diagram {
    p: usize,
    edges: Vec<(usize, usize)>,
}

impl Diagram {
    /// Build from 0-based cell pairs; the list is canonicalized.
    pub fn new(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if p == 0 {
            return Err(invalid!("diagram needs p >= 1"));
        }
        let n = 6 * p;
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(3 * p);
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(invalid!("edge ({a}, {b}) is not a pair of distinct cells below {n}"));
            }
            for c in [a, b] {
                if seen[c] {
                    return Err(invalid!("cell {c} appears in more than one edge"));
                }
                seen[c] = true;
            }
            out.push((a.min(b), a.max(b)));
        }
        if out.len() != 3 * p {
            return Err(invalid!("expected {} edges, got {}", 3 * p, out.len()));
        }
        out.sort_unstable();
        Ok(Self { p, edges: out })
    }

    /// Build from 1-based `((row, col), (row, col))` pairs.
    pub fn from_cells(p: usize, pairs: &[((usize, usize), (usize, usize))]) -> Result<Self> {
        let cell = |(i, j): (usize, usize)| -> Result<usize> {
            if i == 0 || j == 0 || j > 3 || i > 2 * p {
                return Err(invalid!("cell ({i}, {j}) outside the {} x 3 grid", 2 * p));
            }
            Ok((i - 1) * 3 + (j - 1))
        };
        let edges = pairs
            .iter()
            .map(|&(a, b)| Ok((cell(a)?, cell(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, &edges)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn rows(&self) -> usize {
        2 * self.p
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Partner of each cell.
    fn partners(&self) -> Vec<usize> {
        let mut v = vec![0; 6 * self.p];
        for &(a, b) in &self.edges {
            v[a] = b;
            v[b] = a;
        }
        v
    }
}

/// All (6p-1)!! diagrams, in lexicographic order of their edge lists.
pub fn enumerate_diagrams(p: usize) -> Result<Vec<Diagram>> {
    if p == 0 {
        return Err(invalid!("p must be at least 1"));
    }
    if p > MAX_ENUMERATED_P {
        return Err(Error::ResourceGuard(format!(
            "enumerating diagrams for p = {p} means {} matchings",
            double_factorial(6 * p - 1)
        )));
    }
    let n = 6 * p;
    let mut out = Vec::with_capacity(double_factorial(n - 1) as usize);
    let mut used = vec![false; n];
    let mut edges = Vec::with_capacity(n / 2);
    fn rec(used: &mut [bool], edges: &mut Vec<(usize, usize)>, p: usize, out: &mut Vec<Diagram>) {
        let Some(a) = used.iter().position(|u| !u) else {
            out.push(Diagram { p, edges: edges.clone() });
            return;
        };
        used[a] = true;
        for b in a + 1..used.len() {
            if !used[b] {
                used[b] = true;
                edges.push((a, b));
                rec(used, edges, p, out);
                edges.pop();
                used[b] = false;
            }
        }
        used[a] = false;
    }
    rec(&mut used, &mut edges, p, &mut out);
    Ok(out)
}

/// n!! for n >= -1 (with (-1)!! = 1).
pub fn double_factorial(n: usize) -> u64 {
    let mut k = n as u64;
    let mut acc = 1u64;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

/// Structural flags of a diagram, read off its row multigraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagramClass {
    pub has_flat_edge: bool,
    pub connected: bool,
    pub paired: bool,
    /// Shortest cycle length in the row multigraph (1 = self-loop, 2 = double edge).
    pub min_loop_order: Option<usize>,
}

pub fn classify(d: &Diagram) -> DiagramClass {
    let r = d.rows();
    let mut adj = vec![Vec::new(); r];
    let mut has_flat_edge = false;
    for &(a, b) in &d.edges {
        let (i, k) = (a / 3, b / 3);
        if i == k {
            has_flat_edge = true;
        } else {
            adj[i].push(k);
            adj[k].push(i);
        }
    }

    // connectivity
    let mut seen = vec![false; r];
    let mut q = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    let connected = seen.iter().all(|&s| s);

    let paired = !has_flat_edge && adj.iter().all(|n| n.len() == 3 && n.iter().all(|&w| w == n[0]));

    let min_loop_order = if has_flat_edge {
        Some(1)
    } else {
        let double = adj.iter().any(|n| {
            let mut s = n.clone();
            s.sort_unstable();
            s.windows(2).any(|w| w[0] == w[1])
        });
        if double {
            Some(2)
        } else {
            girth(&adj)
        }
    };

    DiagramClass { has_flat_edge, connected, paired, min_loop_order }
}

/// Girth of a simple graph by BFS from every vertex.
fn girth(adj: &[Vec<usize>]) -> Option<usize> {
    let n = adj.len();
    let mut best: Option<usize> = None;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = v;
                    q.push_back(w);
                } else if parent[v] != w {
                    let c = dist[v] + dist[w] + 1;
                    best = Some(best.map_or(c, |b| b.min(c)));
                }
            }
        }
    }
    best
}

/// 3j values of one triple indexed by (m1 + l1, m2 + l2), m3 implied.
struct ThreeJTable {
    l: [i32; 3],
    width: usize,
    values: Vec<f64>,
}

impl ThreeJTable {
    fn new(l1: i32, l2: i32, l3: i32) -> Result<Self> {
        let width = (2 * l2 + 1) as usize;
        let mut values = vec![0.0; (2 * l1 + 1) as usize * width];
        for m1 in -l1..=l1 {
            let row = wigner_3j_row(l1, l2, l3, m1)?;
            for (m2, v) in row.iter() {
                values[(m1 + l1) as usize * width + (m2 + l2) as usize] = v;
            }
        }
        Ok(Self { l: [l1, l2, l3], width, values })
    }

    #[inline]
    fn get(&self, m1: i32, m2: i32, m3: i32) -> f64 {
        if m1 + m2 + m3 != 0 || m3.abs() > self.l[2] {
            return 0.0;
        }
        self.values[(m1 + self.l[0]) as usize * self.width + (m2 + self.l[1]) as usize]
    }
}

fn check_triple(l1: usize, l2: usize, l3: usize) -> Result<()> {
    if !triangle_ok(l1 as i32, l2 as i32, l3 as i32) {
        return Err(Error::Domain(format!("({l1}, {l2}, {l3}) violates the triangle rule")));
    }
    if l1.max(l2).max(l3) > MAX_ORACLE_L {
        return Err(Error::ResourceGuard(format!(
            "diagram evaluation is limited to multipoles <= {MAX_ORACLE_L}"
        )));
    }
    Ok(())
}

fn check_admissible(l1: usize, l2: usize, l3: usize) -> Result<()> {
    check_triple(l1, l2, l3)?;
    if (l1 + l2 + l3) % 2 == 1 {
        return Err(Error::Domain(format!("({l1}, {l2}, {l3}) has an odd multipole sum")));
    }
    Ok(())
}

/// Value D[gamma; l1, l2, l3] of one diagram.
///
/// The triangle rule is required; odd multipole sums are accepted because
/// the loop-reduction identities are purely algebraic.
pub fn diagram_value(d: &Diagram, l1: usize, l2: usize, l3: usize) -> Result<f64> {
    check_triple(l1, l2, l3)?;
    if d.p > MAX_EVALUATED_P {
        return Err(Error::ResourceGuard(format!("diagram evaluation is limited to p <= {MAX_EVALUATED_P}")));
    }
    let table = ThreeJTable::new(l1 as i32, l2 as i32, l3 as i32)?;
    Ok(evaluate(d, &table))
}

fn evaluate(d: &Diagram, t: &ThreeJTable) -> f64 {
    // edges across columns with different multipoles vanish outright
    for &(a, b) in &d.edges {
        if t.l[a % 3] != t.l[b % 3] {
            return 0.0;
        }
    }
    let mut ev = Evaluator {
        t,
        partner: d.partners(),
        m: vec![None; 6 * d.p],
        rows: 2 * d.p,
        total: 0.0,
    };
    ev.search(1.0);
    ev.total
}

struct Evaluator<'a> {
    t: &'a ThreeJTable,
    partner: Vec<usize>,
    m: Vec<Option<i32>>,
    rows: usize,
    total: f64,
}

impl Evaluator<'_> {
    /// Depth-first search over edge orders, propagating row constraints.
    fn search(&mut self, weight: f64) {
        // a row with two assigned cells forces the third
        let mut forced = None;
        let mut free = None;
        for r in 0..self.rows {
            let cells = [3 * r, 3 * r + 1, 3 * r + 2];
            let unset: Vec<usize> = cells.iter().copied().filter(|&c| self.m[c].is_none()).collect();
            match unset.len() {
                1 => {
                    let s: i32 = cells.iter().filter_map(|&c| self.m[c]).sum();
                    forced = Some((unset[0], -s));
                    break;
                }
                0 => {}
                _ => {
                    if free.is_none() {
                        free = Some(unset[0]);
                    }
                }
            }
        }
        if let Some((c, v)) = forced {
            self.try_assign(c, v, weight);
            return;
        }
        let Some(c) = free else {
            let mut w = weight;
            for r in 0..self.rows {
                let m = |k: usize| self.m[3 * r + k].unwrap_or(0);
                w *= self.t.get(m(0), m(1), m(2));
                if w == 0.0 {
                    return;
                }
            }
            self.total += w;
            return;
        };
        let l = self.t.l[c % 3];
        for v in -l..=l {
            self.try_assign(c, v, weight);
        }
    }

    fn try_assign(&mut self, c: usize, v: i32, weight: f64) {
        let l = self.t.l[c % 3];
        if v.abs() > l {
            return;
        }
        let o = self.partner[c];
        self.m[c] = Some(v);
        self.m[o] = Some(-v);
        // a completed row with a zero 3j kills the branch early
        let mut ok = true;
        for r in [c / 3, o / 3] {
            let cells = [3 * r, 3 * r + 1, 3 * r + 2];
            if cells.iter().all(|&k| self.m[k].is_some()) {
                let m = |k: usize| self.m[3 * r + k].unwrap();
                if self.t.get(m(0), m(1), m(2)) == 0.0 {
                    ok = false;
                }
            }
        }
        if ok {
            let sign = if v % 2 == 0 { 1.0 } else { -1.0 };
            self.search(weight * sign);
        }
        self.m[c] = None;
        self.m[o] = None;
    }
}

fn family_sum(p: usize, l1: usize, l2: usize, l3: usize, keep: impl Fn(&Diagram) -> bool + Sync) -> Result<f64> {
    check_admissible(l1, l2, l3)?;
    let diagrams = enumerate_diagrams(p)?;
    let table = ThreeJTable::new(l1 as i32, l2 as i32, l3 as i32)?;
    let values: Vec<f64> = diagrams
        .par_iter()
        .map(|d| if keep(d) { evaluate(d, &table) } else { 0.0 })
        .collect();
    Ok(neumaier_sum(values))
}

/// E I^{2p} for a Gaussian field as the sum over every diagram.
pub fn moment_bruteforce(p: usize, l1: usize, l2: usize, l3: usize) -> Result<f64> {
    family_sum(p, l1, l2, l3, |_| true)
}

/// Sum over paired diagrams only; equals (2p-1)!! Delta^p.
pub fn paired_family_value(p: usize, l1: usize, l2: usize, l3: usize) -> Result<f64> {
    family_sum(p, l1, l2, l3, |d| classify(d).paired)
}

/// Node choice for a loop reduction (0-based rows).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopReduction {
    /// Rows i1, i2 joined by exactly two edges.
    TwoLoop { i1: usize, i2: usize },
    /// Rows i1, i2, i3 joined pairwise by one edge each.
    ThreeLoop { i1: usize, i2: usize, i3: usize },
}

/// Reduced diagram gamma_R for the given node choice.
pub fn reduce(d: &Diagram, how: LoopReduction) -> Result<Diagram> {
    if d.p < 2 {
        return Err(invalid!("loop reductions need at least four rows"));
    }
    let class = classify(d);
    if class.has_flat_edge || !class.connected {
        return Err(invalid!("loop reductions apply to connected diagrams without flat edges"));
    }
    let row = |c: usize| c / 3;
    let between = |i: usize, k: usize| -> Vec<(usize, usize)> {
        d.edges
            .iter()
            .copied()
            .filter(|&(a, b)| (row(a) == i && row(b) == k) || (row(a) == k && row(b) == i))
            .collect()
    };
    // external edge of row i as (own cell, far cell), excluding rows in `inside`
    let external = |i: usize, inside: &[usize]| -> Vec<(usize, usize)> {
        d.edges
            .iter()
            .filter_map(|&(a, b)| {
                if row(a) == i && !inside.contains(&row(b)) {
                    Some((a, b))
                } else if row(b) == i && !inside.contains(&row(a)) {
                    Some((b, a))
                } else {
                    None
                }
            })
            .collect()
    };
    let (drop, mut kept): (Vec<usize>, Vec<(usize, usize)>) = match how {
        LoopReduction::TwoLoop { i1, i2 } => {
            if i1 == i2 || i1.max(i2) >= d.rows() || between(i1, i2).len() != 2 {
                return Err(invalid!("rows {i1}, {i2} are not joined by exactly two edges"));
            }
            let (e3, e4) = (external(i1, &[i2]), external(i2, &[i1]));
            let (&[(_, far3)], &[(_, far4)]) = (e3.as_slice(), e4.as_slice()) else {
                return Err(invalid!("two-loop rows must each have one external edge"));
            };
            let mut kept: Vec<(usize, usize)> = d
                .edges
                .iter()
                .copied()
                .filter(|&(a, b)| ![i1, i2].contains(&row(a)) && ![i1, i2].contains(&row(b)))
                .collect();
            kept.push((far3, far4));
            (vec![i1, i2], kept)
        }
        LoopReduction::ThreeLoop { i1, i2, i3 } => {
            let set = [i1, i2, i3];
            if i1 == i2 || i2 == i3 || i1 == i3 || set.iter().any(|&i| i >= d.rows()) {
                return Err(invalid!("three distinct rows are required"));
            }
            if between(i1, i2).len() != 1 || between(i2, i3).len() != 1 || between(i3, i1).len() != 1 {
                return Err(invalid!("rows {i1}, {i2}, {i3} do not form a 3-loop"));
            }
            let ext: Vec<(usize, usize)> = set.iter().flat_map(|&i| external(i, &set)).collect();
            if ext.len() != 3 {
                return Err(invalid!("each loop row needs exactly one external edge"));
            }
            let mut cols: Vec<usize> = ext.iter().map(|&(own, _)| own % 3).collect();
            cols.sort_unstable();
            if cols != [0, 1, 2] {
                return Err(invalid!("external edges leave the loop from repeated columns; merged row is not a valid row"));
            }
            let mut kept: Vec<(usize, usize)> = d
                .edges
                .iter()
                .copied()
                .filter(|&(a, b)| !set.contains(&row(a)) && !set.contains(&row(b)))
                .collect();
            for &(own, far) in &ext {
                kept.push((i1 * 3 + own % 3, far));
            }
            (vec![i2, i3], kept)
        }
    };
    // renumber the surviving rows
    let mut map = vec![usize::MAX; d.rows()];
    let mut next = 0;
    for (r, slot) in map.iter_mut().enumerate() {
        if !drop.contains(&r) {
            *slot = next;
            next += 1;
        }
    }
    for e in kept.iter_mut() {
        e.0 = map[e.0 / 3] * 3 + e.0 % 3;
        e.1 = map[e.1 / 3] * 3 + e.1 % 3;
    }
    Diagram::new(d.p - 1, &kept)
}

/// (lhs, rhs) of the loop-reduction identities: lhs = D[gamma] and
/// rhs = D[gamma_R] / (2 l_{j3} + 1) for a two-loop, or
/// rhs = {l1 l2 l3; l1 l2 l3} D[gamma_R] for a three-loop.
///
/// Removing rows flips the orders of one 3j, so for an odd l1 + l2 + l3 the
/// right side carries an extra (-1)^{l1+l2+l3}; for admissible triples this
/// is 1. Diagrams with an edge between unequal multipoles vanish identically
/// while their reduction need not, so they are rejected.
pub fn verify_loop_reduction(d: &Diagram, how: LoopReduction, l1: usize, l2: usize, l3: usize) -> Result<(f64, f64)> {
    let ls = [l1, l2, l3];
    if d.edges.iter().any(|&(a, b)| ls[a % 3] != ls[b % 3]) {
        return Err(invalid!("diagram pairs unequal multipoles at ({l1}, {l2}, {l3}) and vanishes identically"));
    }
    let reduced = reduce(d, how)?;
    let lhs = diagram_value(d, l1, l2, l3)?;
    let parity = if (l1 + l2 + l3) % 2 == 0 { 1.0 } else { -1.0 };
    let red = parity * diagram_value(&reduced, l1, l2, l3)?;
    let rhs = match how {
        LoopReduction::TwoLoop { i1, i2 } => {
            // column of row i1's external edge
            let j3 = d
                .edges
                .iter()
                .find_map(|&(a, b)| {
                    if a / 3 == i1 && b / 3 != i2 {
                        Some(a % 3)
                    } else if b / 3 == i1 && a / 3 != i2 {
                        Some(b % 3)
                    } else {
                        None
                    }
                })
                .expect("validated by reduce");
            red / (2 * ls[j3] + 1) as f64
        }
        LoopReduction::ThreeLoop { .. } => {
            let (a, b, c) = (l1 as i32, l2 as i32, l3 as i32);
            wigner_6j(&SixJArguments::new(a, b, c, a, b, c)) * red
        }
    };
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(enumerate_diagrams(1).unwrap().len(), 15);
        let d2 = enumerate_diagrams(2).unwrap();
        assert_eq!(d2.len(), 10395);
        let mut s = d2.clone();
        s.dedup();
        assert_eq!(s.len(), d2.len());
        assert!(d2.iter().all(|d| d.edges().len() == 6));
        assert!(matches!(enumerate_diagrams(3), Err(Error::ResourceGuard(_))));
    }

    #[test]
    fn classification_examples() {
        let col = Diagram::from_cells(1, &[((1, 1), (2, 1)), ((1, 2), (2, 2)), ((1, 3), (2, 3))]).unwrap();
        let c = classify(&col);
        assert!(c.paired && c.connected && !c.has_flat_edge);
        assert_eq!(c.min_loop_order, Some(2));

        let flat = Diagram::from_cells(1, &[((1, 1), (1, 2)), ((1, 3), (2, 3)), ((2, 1), (2, 2))]).unwrap();
        let c = classify(&flat);
        assert!(c.has_flat_edge && !c.paired);
        assert_eq!(c.min_loop_order, Some(1));

        let two = Diagram::from_cells(
            2,
            &[
                ((1, 1), (2, 1)),
                ((1, 2), (2, 2)),
                ((1, 3), (2, 3)),
                ((3, 1), (4, 1)),
                ((3, 2), (4, 2)),
                ((3, 3), (4, 3)),
            ],
        )
        .unwrap();
        let c = classify(&two);
        assert!(c.paired && !c.connected);
    }

    #[test]
    fn invalid_diagrams() {
        assert!(Diagram::new(1, &[(0, 1), (1, 2), (3, 4)]).is_err());
        assert!(Diagram::new(1, &[(0, 1), (2, 3)]).is_err());
        assert!(Diagram::from_cells(1, &[((3, 1), (1, 1))]).is_err());
    }

    #[test]
    fn second_moments() {
        assert!((moment_bruteforce(1, 2, 3, 5).unwrap() - 1.0).abs() < 1e-12);
        assert!((moment_bruteforce(1, 3, 3, 4).unwrap() - 2.0).abs() < 1e-12);
        assert!((moment_bruteforce(1, 4, 4, 4).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn guards() {
        assert!(matches!(moment_bruteforce(1, 2, 5, 7), Err(Error::ResourceGuard(_))));
        assert!(matches!(moment_bruteforce(1, 2, 3, 4), Err(Error::Domain(_))));
        assert!(moment_bruteforce(1, 1, 1, 4).is_err());
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(0), 1);
        assert_eq!(double_factorial(5), 15);
        assert_eq!(double_factorial(11), 10395);
    }
}
