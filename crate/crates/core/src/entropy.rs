//! (n, ε)-separated and spanning sets and entropy estimates.
//!
//! For symbolic systems, odometers and their products the relation
//! "not (n, ε)-separated" is an equivalence: two points are separated iff
//! they differ on a fixed coordinate window. Counting classes then gives the
//! exact maximum. Other systems fall back to a separation graph.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::rational::{self, ceil_log2_inv, q_int, Q};
use crate::spaces::{PointRep, SpaceError, Symbol, SymbolicWindow, SystemHandle};
use crate::subshift::SubshiftError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("pool of {size} points has {pairs} pairs, over the exact budget {budget}")]
    PoolTooLarge { size: usize, pairs: usize, budget: usize },
    #[error("pool is empty")]
    EmptyPool,
    #[error("pool kind {pool} does not fit system {system}")]
    PoolMismatch { pool: &'static str, system: &'static str },
    #[error("horizon n must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Subshift(#[from] SubshiftError),
}

/// Pair budget for the exact clique search.
pub const EXACT_PAIR_BUDGET: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ExactMax,
    Greedy,
}

/// How hard `max_separated` may try.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effort {
    /// exact when the pool fits the budget, greedy otherwise
    Auto,
    /// exact or PoolTooLarge
    ExactOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatedSet {
    pub points: Vec<PointRep>,
    pub n: usize,
    #[serde(with = "rational::serde_q")]
    pub eps: Q,
    pub mode: Mode,
    /// size of the set (points may be elided for huge block pools)
    pub count: u64,
}

/// Candidate points.
#[derive(Debug, Clone, PartialEq)]
pub enum Pool {
    Points(Vec<PointRep>),
    /// the orbit x, Tx, …, T^(len−1) x
    Orbit { start: PointRep, len: usize },
    /// every admissible block of the horizon length, continued admissibly
    Blocks,
    /// k/m for k = 0..=m
    Grid { m: u64 },
    /// the points k mod s_level, k < s_level
    Cylinders { level: usize },
}

impl Pool {
    fn name(&self) -> &'static str {
        match self {
            Pool::Points(_) => "points",
            Pool::Orbit { .. } => "orbit",
            Pool::Blocks => "blocks",
            Pool::Grid { .. } => "grid",
            Pool::Cylinders { .. } => "cylinders",
        }
    }

    /// Explicit points of the pool at horizon n.
    pub fn materialize(&self, system: &SystemHandle, n: usize) -> Result<Vec<PointRep>, EntropyError> {
        let mismatch = || EntropyError::PoolMismatch { pool: self.name(), system: system.kind_name() };
        match self {
            Pool::Points(v) => Ok(v.clone()),
            Pool::Orbit { start, len } => Ok(system.orbit_segment(start, *len)?),
            Pool::Blocks => {
                let sft = system.as_sft().ok_or_else(mismatch)?;
                let mut out = Vec::new();
                for w in sft.language(n)? {
                    let ext = sft.admissible_extension(&w).unwrap_or_else(|| SymbolicWindow::finite(w));
                    out.push(PointRep::Symbolic(ext));
                }
                Ok(out)
            }
            Pool::Grid { m } => {
                if !matches!(system, SystemHandle::PLInterval(_)) {
                    return Err(mismatch());
                }
                Ok((0..=*m).map(|k| PointRep::Real(Q::new((k as i64).into(), (*m as i64).into()))).collect())
            }
            Pool::Cylinders { level } => match system {
                SystemHandle::Odometer(spec) => {
                    let s = spec.period(*level).map_err(SpaceError::from)?;
                    Ok((0..s).map(|k| PointRep::Digits(spec.point_of(k))).collect())
                }
                _ => Err(mismatch()),
            },
        }
    }
}

/// Number K of metric scales 2^(−j) (j ≥ 0) strictly above eps.
fn scales_above(eps: &Q) -> usize {
    if *eps >= q_int(1) {
        0
    } else {
        ceil_log2_inv(eps) as usize
    }
}

/// Whether the relation is an equivalence with a computable class key.
fn keyed(system: &SystemHandle) -> bool {
    match system {
        SystemHandle::PLInterval(_) => false,
        SystemHandle::Product(fs) => fs.iter().all(keyed),
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Block(Vec<Symbol>),
    Digit(Option<u64>),
    Tuple(Vec<Key>),
}

/// Class of x under "not (n, ε)-separated".
fn class_key(system: &SystemHandle, x: &PointRep, n: usize, k: usize) -> Result<Key, EntropyError> {
    let unknown = |a: i64, b: i64| SpaceError::InsufficientWindow { lower: "0".into(), upper: format!("coordinates {a}..{b} unknown") };
    match (system, x) {
        (SystemHandle::Product(fs), PointRep::Tuple(xs)) => {
            Ok(Key::Tuple(fs.iter().zip(xs).map(|(f, x)| class_key(f, x, n, k)).collect::<Result<_, _>>()?))
        }
        (SystemHandle::Odometer(_), PointRep::Digits(d)) => {
            // separation at scale 2^(−l) needs l ≤ k − 1; the map preserves digit differences
            if k <= 1 {
                return Ok(Key::Digit(None));
            }
            let level = k - 1;
            let digit = d.digits.get(level - 1).ok_or_else(|| unknown(level as i64, level as i64 + 1))?;
            Ok(Key::Digit(Some(*digit)))
        }
        (_, PointRep::Symbolic(w)) => {
            let (_, two_sided, _) = system
                .symbolic_info()
                .ok_or(SpaceError::KindMismatch { system: system.kind_name(), point: x.kind_name() })?;
            if k == 0 {
                return Ok(Key::Block(Vec::new()));
            }
            let (a, b) = if two_sided { (-(k as i64 - 1), (n + k - 1) as i64) } else { (0, (n + k - 1) as i64) };
            Ok(Key::Block(w.slice(a, b).ok_or_else(|| unknown(a, b))?))
        }
        _ => Err(SpaceError::KindMismatch { system: system.kind_name(), point: x.kind_name() }.into()),
    }
}

/// d_n(x, y) > eps, decided exactly over the orbit segments.
fn separated(system: &SystemHandle, ox: &[PointRep], oy: &[PointRep], eps: &Q) -> Result<bool, EntropyError> {
    for (a, b) in ox.iter().zip(oy) {
        let d = system.dist(a, b)?;
        if d.lower > *eps {
            return Ok(true);
        }
        if d.upper > *eps {
            return Err(SpaceError::InsufficientWindow {
                lower: rational::fmt_q(&d.lower),
                upper: rational::fmt_q(&d.upper),
            }
            .into());
        }
    }
    Ok(false)
}

// deterministic lexicographic order on rendered points
fn sort_key(p: &PointRep) -> String {
    format!("{p:?}")
}

/// Largest (n, ε)-separated subset of the pool.
pub fn max_separated(system: &SystemHandle, n: usize, eps: &Q, pool: &Pool, effort: Effort) -> Result<SeparatedSet, EntropyError> {
    if n == 0 {
        return Err(EntropyError::ZeroHorizon);
    }
    if keyed(system) {
        let k = scales_above(eps);
        // blocks at K = 1 are their own keys, no need to materialize points
        if matches!(pool, Pool::Blocks) && k == 1 && !matches!(system.symbolic_info(), Some((_, true, _))) {
            let sft = system.as_sft().expect("symbolic kind");
            let count = sft.language_count(n);
            let count = u64::try_from(count).unwrap_or(u64::MAX);
            return Ok(SeparatedSet { points: Vec::new(), n, eps: eps.clone(), mode: Mode::ExactMax, count });
        }
        let classes = classes(system, n, pool, k)?;
        let points: Vec<PointRep> = classes.into_iter().map(|c| c.0).collect();
        let count = points.len() as u64;
        return Ok(SeparatedSet { points, n, eps: eps.clone(), mode: Mode::ExactMax, count });
    }
    let mut pts = pool.materialize(system, n)?;
    if pts.is_empty() {
        return Err(EntropyError::EmptyPool);
    }
    pts.sort_by_cached_key(sort_key);
    pts.dedup();
    let orbits: Vec<Vec<PointRep>> = pts.iter().map(|p| system.orbit_segment(p, n)).collect::<Result<_, _>>()?;
    let size = pts.len();
    let pairs = size * (size - 1) / 2;
    let exact = pairs <= EXACT_PAIR_BUDGET;
    if !exact && effort == Effort::ExactOnly {
        return Err(EntropyError::PoolTooLarge { size, pairs, budget: EXACT_PAIR_BUDGET });
    }
    let chosen = if exact {
        let words = size.div_ceil(64);
        let mut adj = vec![vec![0u64; words]; size];
        for i in 0..size {
            for j in (i + 1)..size {
                if separated(system, &orbits[i], &orbits[j], eps)? {
                    adj[i][j / 64] |= 1 << (j % 64);
                    adj[j][i / 64] |= 1 << (i % 64);
                }
            }
        }
        max_clique(&adj, size)
    } else {
        greedy_separated(system, &orbits, eps)?
    };
    let points: Vec<PointRep> = chosen.iter().map(|&i| pts[i].clone()).collect();
    let count = points.len() as u64;
    Ok(SeparatedSet { points, n, eps: eps.clone(), mode: if exact { Mode::ExactMax } else { Mode::Greedy }, count })
}

// one representative (lexicographically first) per class
fn classes(system: &SystemHandle, n: usize, pool: &Pool, k: usize) -> Result<Vec<(PointRep, Key)>, EntropyError> {
    let mut seen: HashMap<Key, PointRep> = HashMap::new();
    let mut add = |p: PointRep, key: Key| {
        match seen.get_mut(&key) {
            Some(rep) => {
                if sort_key(&p) < sort_key(rep) {
                    *rep = p;
                }
            }
            None => {
                seen.insert(key, p);
            }
        }
    };
    match pool {
        Pool::Orbit { start, len } => {
            let mut cur = start.clone();
            for j in 0..*len {
                let key = class_key(system, &cur, n, k)?;
                let next = if j + 1 < *len { Some(system.apply(&cur)?) } else { None };
                add(cur, key);
                match next {
                    Some(x) => cur = x,
                    None => break,
                }
            }
        }
        _ => {
            let pts = pool.materialize(system, n)?;
            if pts.is_empty() {
                return Err(EntropyError::EmptyPool);
            }
            for p in pts {
                let key = class_key(system, &p, n, k)?;
                add(p, key);
            }
        }
    }
    let mut out: Vec<(PointRep, Key)> = seen.into_iter().map(|(k, p)| (p, k)).collect();
    out.sort_by_cached_key(|(p, _)| sort_key(p));
    Ok(out)
}

fn greedy_separated(system: &SystemHandle, orbits: &[Vec<PointRep>], eps: &Q) -> Result<Vec<usize>, EntropyError> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..orbits.len() {
        let mut ok = true;
        for &c in &chosen {
            if !separated(system, &orbits[i], &orbits[c], eps)? {
                ok = false;
                break;
            }
        }
        if ok {
            chosen.push(i);
        }
    }
    Ok(chosen)
}

/// Maximum clique by branch and bound with greedy-colouring bounds.
fn max_clique(adj: &[Vec<u64>], n: usize) -> Vec<usize> {
    let words = n.div_ceil(64);
    let mut best: Vec<usize> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut cand = vec![0u64; words];
    for i in 0..n {
        cand[i / 64] |= 1 << (i % 64);
    }
    expand(adj, &mut cur, cand, &mut best);
    best.sort_unstable();
    best
}

fn bits(set: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (w, &word) in set.iter().enumerate() {
        let mut x = word;
        while x != 0 {
            let b = x.trailing_zeros() as usize;
            out.push(w * 64 + b);
            x &= x - 1;
        }
    }
    out
}

fn expand(adj: &[Vec<u64>], cur: &mut Vec<usize>, cand: Vec<u64>, best: &mut Vec<usize>) {
    // colour classes bound the clique size reachable from each vertex
    let verts = bits(&cand);
    if verts.is_empty() {
        if cur.len() > best.len() {
            *best = cur.clone();
        }
        return;
    }
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(verts.len());
    let mut uncoloured = cand.clone();
    let mut colour = 0;
    while uncoloured.iter().any(|&w| w != 0) {
        colour += 1;
        let mut avail = uncoloured.clone();
        while let Some(v) = bits(&avail).first().copied() {
            order.push((v, colour));
            uncoloured[v / 64] &= !(1 << (v % 64));
            avail[v / 64] &= !(1 << (v % 64));
            for (a, b) in avail.iter_mut().zip(&adj[v]) {
                *a &= !b;
            }
        }
    }
    let mut cand = cand;
    for &(v, c) in order.iter().rev() {
        if cur.len() + c <= best.len() {
            return;
        }
        cur.push(v);
        let next: Vec<u64> = cand.iter().zip(&adj[v]).map(|(a, b)| a & b).collect();
        expand(adj, cur, next, best);
        cur.pop();
        cand[v / 64] &= !(1 << (v % 64));
    }
}

/// Spanning set chosen greedily in lexicographic order; every pool point is
/// within d_n ≤ ε of a chosen point (verified), and the result is itself
/// separated, so its size never exceeds the maximum separated count.
pub fn min_spanning(system: &SystemHandle, n: usize, eps: &Q, pool: &Pool) -> Result<SeparatedSet, EntropyError> {
    if n == 0 {
        return Err(EntropyError::ZeroHorizon);
    }
    if keyed(system) {
        let set = max_separated(system, n, eps, pool, Effort::Auto)?;
        return Ok(SeparatedSet { mode: Mode::Greedy, ..set });
    }
    let mut pts = pool.materialize(system, n)?;
    if pts.is_empty() {
        return Err(EntropyError::EmptyPool);
    }
    pts.sort_by_cached_key(sort_key);
    pts.dedup();
    let orbits: Vec<Vec<PointRep>> = pts.iter().map(|p| system.orbit_segment(p, n)).collect::<Result<_, _>>()?;
    let chosen = greedy_separated(system, &orbits, eps)?;
    // cover check
    let chosen_set: HashSet<usize> = chosen.iter().copied().collect();
    for i in 0..orbits.len() {
        if chosen_set.contains(&i) {
            continue;
        }
        let mut covered = false;
        for &c in &chosen {
            if !separated(system, &orbits[i], &orbits[c], eps)? {
                covered = true;
                break;
            }
        }
        assert!(covered, "a maximal separated set spans the pool");
    }
    let points: Vec<PointRep> = chosen.iter().map(|&i| pts[i].clone()).collect();
    let count = points.len() as u64;
    Ok(SeparatedSet { points, n, eps: eps.clone(), mode: Mode::Greedy, count })
}

/// One row of an entropy table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    #[serde(with = "rational::serde_q")]
    pub eps: Q,
    pub count: u64,
    /// log(count) / n
    pub rate: f64,
    pub mode: Mode,
}

/// log s_n(ε) / n over the grid of (n, ε).
pub fn entropy_estimate(system: &SystemHandle, n_list: &[usize], eps_list: &[Q], pool: &Pool) -> Result<Vec<EntropyRow>, EntropyError> {
    let mut rows = Vec::new();
    for &n in n_list {
        for eps in eps_list {
            let s = max_separated(system, n, eps, pool, Effort::Auto)?;
            rows.push(EntropyRow { n, eps: eps.clone(), count: s.count, rate: (s.count as f64).ln() / n as f64, mode: s.mode });
        }
    }
    Ok(rows)
}

/// CSV rendering: n,eps,count,rate,mode.
pub fn rows_to_csv(rows: &[EntropyRow]) -> String {
    let mut s = String::from("n,eps,count,rate,mode\n");
    for r in rows {
        let mode = match r.mode {
            Mode::ExactMax => "exact_max",
            Mode::Greedy => "greedy",
        };
        s.push_str(&format!("{},{},{},{:.12},{}\n", r.n, rational::fmt_q(&r.eps), r.count, r.rate, mode));
    }
    s
}

/// Exact check that every pair of the set is (n, ε)-separated.
pub fn audit_separated(system: &SystemHandle, set: &SeparatedSet) -> Result<bool, EntropyError> {
    let orbits: Vec<Vec<PointRep>> = set.points.iter().map(|p| system.orbit_segment(p, set.n)).collect::<Result<_, _>>()?;
    for i in 0..orbits.len() {
        for j in (i + 1)..orbits.len() {
            if !separated(system, &orbits[i], &orbits[j], &set.eps)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;

    #[test]
    fn block_counts() {
        let s = SystemHandle::full_shift(2);
        let r = max_separated(&s, 3, &q_frac(1, 2), &Pool::Blocks, Effort::Auto).unwrap();
        assert_eq!(r.count, 8);
        let g = SystemHandle::golden_mean();
        let r = max_separated(&g, 5, &q_frac(3, 4), &Pool::Blocks, Effort::Auto).unwrap();
        assert_eq!(r.count, 13);
        let r = max_separated(&g, 5, &q_frac(1, 4), &Pool::Blocks, Effort::Auto).unwrap();
        assert!(audit_separated(&g, &r).unwrap());
    }

    #[test]
    fn clique_matches_keys() {
        // a two-level tent grid has a genuine graph; compare with brute force
        let t = SystemHandle::PLInterval(crate::interval_maps::tent(&q_int(2)).unwrap());
        let r = max_separated(&t, 2, &q_frac(1, 5), &Pool::Grid { m: 10 }, Effort::ExactOnly).unwrap();
        assert!(audit_separated(&t, &r).unwrap());
        let sp = min_spanning(&t, 2, &q_frac(1, 5), &Pool::Grid { m: 10 }).unwrap();
        assert!(sp.count <= r.count);
    }
}
