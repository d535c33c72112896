//! Finitely supported measures, empirical measures and the d_BL metric.

mod family;
pub mod transport;

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::rational::{self, q_frac, q_int, Q};
use crate::spaces::{Extension, PointRep, SpaceError, Symbol, SystemHandle};
use crate::subshift::SubshiftError;

pub use family::{TestFamily, TestFunction, DEFAULT_N_MAX};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("weights sum to {0}, not 1")]
    WeightSum(String),
    #[error("weight {0} is not positive")]
    NonPositiveWeight(String),
    #[error("measures live on different systems")]
    SystemMismatch,
    #[error("test family was built for a different system")]
    FamilyMismatch,
    #[error("union support of {size} points exceeds the cap {cap}")]
    SupportTooLarge { size: usize, cap: usize },
    #[error("index set is empty")]
    EmptySet,
    #[error("index {index} outside a list of {len} points")]
    IndexRange { index: usize, len: usize },
    #[error("empirical measure needs n >= 1")]
    EmptyOrbit,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Subshift(#[from] SubshiftError),
}

/// Default cap on the union support handled by [`bl_exact`].
pub const BL_SUPPORT_CAP: usize = 64;

/// A piece of a measure: a Dirac mass, or the uniform average over
/// x, Tx, …, T^(len−1) x.
#[derive(Debug, Clone, PartialEq)]
pub enum Part {
    Atom(PointRep),
    Segment { start: PointRep, len: u64 },
}

/// Finitely supported probability measure with exact weights.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    system: Arc<SystemHandle>,
    parts: Vec<(Part, Q)>,
}

fn same_system(a: &Arc<SystemHandle>, b: &Arc<SystemHandle>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl DiscreteMeasure {
    /// Checks positivity and total mass 1.
    pub fn from_parts(system: Arc<SystemHandle>, parts: Vec<(Part, Q)>) -> Result<Self, MeasureError> {
        let mut total = q_int(0);
        for (part, w) in &parts {
            if !w.is_positive() {
                return Err(MeasureError::NonPositiveWeight(rational::fmt_q(w)));
            }
            match part {
                Part::Atom(x) => system.validate_point(x)?,
                Part::Segment { start, len } => {
                    if *len == 0 {
                        return Err(MeasureError::EmptyOrbit);
                    }
                    system.validate_point(start)?
                }
            }
            total += w;
        }
        if total != q_int(1) {
            return Err(MeasureError::WeightSum(rational::fmt_q(&total)));
        }
        Ok(DiscreteMeasure { system, parts })
    }

    pub fn from_atoms(system: Arc<SystemHandle>, atoms: Vec<(PointRep, Q)>) -> Result<Self, MeasureError> {
        Self::from_parts(system, atoms.into_iter().map(|(x, w)| (Part::Atom(x), w)).collect())
    }

    pub fn dirac(system: Arc<SystemHandle>, x: PointRep) -> Result<Self, MeasureError> {
        Self::from_atoms(system, vec![(x, q_int(1))])
    }

    /// Uniform measure on the listed points (repeats count with multiplicity).
    pub fn uniform(system: Arc<SystemHandle>, points: &[PointRep]) -> Result<Self, MeasureError> {
        if points.is_empty() {
            return Err(MeasureError::EmptySet);
        }
        let w = q_frac(1, points.len() as i64);
        Self::from_atoms(system, points.iter().map(|p| (p.clone(), w.clone())).collect())
    }

    pub fn system(&self) -> &Arc<SystemHandle> {
        &self.system
    }

    pub fn parts(&self) -> &[(Part, Q)] {
        &self.parts
    }

    /// Total mass (always 1 for a constructed measure).
    pub fn total_weight(&self) -> Q {
        self.parts.iter().map(|(_, w)| w.clone()).sum()
    }

    /// Support points with merged weights, in a deterministic order.
    pub fn atoms(&self) -> Result<Vec<(PointRep, Q)>, MeasureError> {
        let mut merged: HashMap<PointRep, Q> = HashMap::new();
        let mut order: Vec<PointRep> = Vec::new();
        let mut add = |x: PointRep, w: Q| {
            let c = self.system.canonical(&x);
            match merged.get_mut(&c) {
                Some(v) => *v += w,
                None => {
                    order.push(c.clone());
                    merged.insert(c, w);
                }
            }
        };
        for (part, w) in &self.parts {
            match part {
                Part::Atom(x) => add(x.clone(), w.clone()),
                Part::Segment { start, len } => {
                    let each = w / Q::from_integer((*len).into());
                    let mut cur = start.clone();
                    for j in 0..*len {
                        let next = if j + 1 < *len { Some(self.system.apply(&cur)?) } else { None };
                        add(cur, each.clone());
                        if let Some(n) = next {
                            cur = n;
                        } else {
                            break;
                        }
                    }
                }
            }
        }
        let mut out: Vec<(PointRep, Q)> = order.into_iter().map(|p| {
            let w = merged.remove(&p).unwrap();
            (p, w)
        }).collect();
        out.sort_by_cached_key(|(p, _)| serde_json_key(p));
        Ok(out)
    }

    /// Equality as measures (after merging atoms).
    pub fn same_measure(&self, other: &DiscreteMeasure) -> Result<bool, MeasureError> {
        if !same_system(&self.system, &other.system) {
            return Ok(false);
        }
        Ok(self.atoms()? == other.atoms()?)
    }

    /// JSON document {"atoms": [{"point": …, "weight": "p/q"}]}.
    pub fn to_doc(&self) -> Result<MeasureDoc, MeasureError> {
        Ok(MeasureDoc {
            atoms: self.atoms()?.into_iter().map(|(point, weight)| AtomDoc { point, weight }).collect(),
        })
    }
}

// deterministic sort key for points
fn serde_json_key(p: &PointRep) -> String {
    format!("{p:?}")
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureDoc {
    pub atoms: Vec<AtomDoc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomDoc {
    pub point: PointRep,
    #[serde(with = "rational::serde_q")]
    pub weight: Q,
}

/// Exact period of a point's representation, when it is purely periodic.
pub fn representation_period(system: &SystemHandle, x: &PointRep) -> Option<u64> {
    match (system, x) {
        (SystemHandle::Product(fs), PointRep::Tuple(xs)) => {
            let mut p = 1u64;
            for (f, x) in fs.iter().zip(xs) {
                p = rational::lcm_u64(p, representation_period(f, x)?);
            }
            Some(p)
        }
        (SystemHandle::Odometer(spec), PointRep::Digits(d)) if d.digits.len() == spec.levels() => {
            spec.periods.last().copied()
        }
        (_, PointRep::Symbolic(w)) => {
            let (_, two_sided, _) = system.symbolic_info()?;
            let n = w.normalize(two_sided);
            match n.extension {
                Extension::PeriodicRepeat(p) if n.symbols.len() == p => Some(p as u64),
                _ => None,
            }
        }
        _ => None,
    }
}

/// E_n(x) = (1/n) Σ_{j<n} δ_{T^j x}.
pub fn empirical(system: &Arc<SystemHandle>, x: &PointRep, n: u64) -> Result<DiscreteMeasure, MeasureError> {
    if n == 0 {
        return Err(MeasureError::EmptyOrbit);
    }
    system.validate_point(x)?;
    // a full number of periods collapses to one period
    let len = match representation_period(system, x) {
        Some(p) if n % p == 0 => p,
        _ => n,
    };
    DiscreteMeasure::from_parts(system.clone(), vec![(Part::Segment { start: x.clone(), len }, q_int(1))])
}

/// Σ α_i μ_i; zero weights are dropped.
pub fn mix(measures: &[DiscreteMeasure], weights: &[Q]) -> Result<DiscreteMeasure, MeasureError> {
    if measures.is_empty() || measures.len() != weights.len() {
        return Err(MeasureError::EmptySet);
    }
    let system = measures[0].system.clone();
    let mut total = q_int(0);
    let mut parts = Vec::new();
    for (m, a) in measures.iter().zip(weights) {
        if !same_system(&system, &m.system) {
            return Err(MeasureError::SystemMismatch);
        }
        if a.is_negative() {
            return Err(MeasureError::NonPositiveWeight(rational::fmt_q(a)));
        }
        total += a;
        if a.is_zero() {
            continue;
        }
        for (p, w) in &m.parts {
            parts.push((p.clone(), a * w));
        }
    }
    if total != q_int(1) {
        return Err(MeasureError::WeightSum(rational::fmt_q(&total)));
    }
    DiscreteMeasure::from_parts(system, parts)
}

/// ∫ f_n dμ for every function of the family, exactly.
pub fn integrals(mu: &DiscreteMeasure, family: &TestFamily) -> Result<Vec<Q>, MeasureError> {
    if !same_system(&mu.system, family.system()) {
        return Err(MeasureError::FamilyMismatch);
    }
    let system = &*mu.system;
    if system.is_symbolic() {
        return symbolic_integrals(mu, family);
    }
    let atoms = mu.atoms()?;
    family
        .functions()
        .iter()
        .map(|f| {
            let mut acc = q_int(0);
            for (x, w) in &atoms {
                let v = f.eval(system, x)?;
                if !v.is_zero() {
                    acc += v * w;
                }
            }
            Ok(acc)
        })
        .collect()
}

// Histogram of the coordinate blocks the family reads, then one pass per function.
fn symbolic_integrals(mu: &DiscreteMeasure, family: &TestFamily) -> Result<Vec<Q>, MeasureError> {
    let spans: Vec<(i64, i64)> = family.functions().iter().filter_map(|f| f.symbolic_span()).collect();
    let lo = spans.iter().map(|s| s.0).min().unwrap_or(0);
    let hi = spans.iter().map(|s| s.1).max().unwrap_or(0);
    let width = (hi - lo) as usize;
    let mut hist: HashMap<Vec<Symbol>, Q> = HashMap::new();
    let unknown = |a: i64, b: i64| SpaceError::InsufficientWindow { lower: "0".into(), upper: format!("coordinates {a}..{b} unknown") };
    for (part, w) in &mu.parts {
        let (start, len) = match part {
            Part::Atom(x) => (x, 1u64),
            Part::Segment { start, len } => (start, *len),
        };
        let sym = start.as_symbolic().ok_or(SpaceError::KindMismatch {
            system: mu.system.kind_name(),
            point: start.kind_name(),
        })?;
        let end = hi + len as i64 - 1;
        let seq = sym.slice(lo, end).ok_or_else(|| unknown(lo, end))?;
        let mut counts: HashMap<Vec<Symbol>, u64> = HashMap::new();
        for j in 0..len as usize {
            let block = &seq[j..j + width];
            match counts.get_mut(block) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(block.to_vec(), 1);
                }
            }
        }
        let each = w / Q::from_integer(len.into());
        for (block, c) in counts {
            let add = &each * Q::from_integer(c.into());
            *hist.entry(block).or_insert_with(|| q_int(0)) += add;
        }
    }
    Ok(family
        .functions()
        .iter()
        .map(|f| {
            let mut acc = q_int(0);
            for (block, w) in &hist {
                let v = f.eval_block(lo, block);
                if !v.is_zero() {
                    acc += v * w;
                }
            }
            acc
        })
        .collect())
}

/// Truncated d_BL value with the bound on the omitted tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DblValue {
    #[serde(with = "rational::serde_q")]
    pub value: Q,
    #[serde(with = "rational::serde_q")]
    pub tail: Q,
}

impl DblValue {
    pub fn value_f64(&self) -> f64 {
        rational::to_f64(&self.value)
    }

    /// Upper bound on the full series.
    pub fn upper(&self) -> Q {
        &self.value + &self.tail
    }
}

/// Σ_{n ≤ N} 2^(−n) |∫ f_n dμ − ∫ f_n dν| with tail 2^(1−N).
pub fn dbl(mu: &DiscreteMeasure, nu: &DiscreteMeasure, family: &TestFamily) -> Result<DblValue, MeasureError> {
    if !same_system(&mu.system, family.system()) || !same_system(&nu.system, family.system()) {
        return Err(MeasureError::FamilyMismatch);
    }
    let a = integrals(mu, family)?;
    let b = integrals(nu, family)?;
    Ok(DblValue { value: dbl_from_integrals(&a, &b), tail: family.tail_bound() })
}

/// The truncated series from precomputed integrals.
pub fn dbl_from_integrals(a: &[Q], b: &[Q]) -> Q {
    let mut value = q_int(0);
    let mut weight = q_frac(1, 2);
    for (x, y) in a.iter().zip(b) {
        let diff = (x - y).abs();
        if !diff.is_zero() {
            value += &weight * diff;
        }
        weight /= q_int(2);
    }
    value
}

/// Exact sup over ‖f‖_BL ≤ 1 of |∫ f dμ − ∫ f dν|.
pub fn bl_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Q, MeasureError> {
    bl_exact_capped(mu, nu, BL_SUPPORT_CAP)
}

pub fn bl_exact_capped(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cap: usize) -> Result<Q, MeasureError> {
    if !same_system(&mu.system, &nu.system) {
        return Err(MeasureError::SystemMismatch);
    }
    let mut points: Vec<PointRep> = Vec::new();
    let mut index: HashMap<PointRep, usize> = HashMap::new();
    let mut masses: Vec<Q> = Vec::new();
    for (sign, m) in [(1i64, mu), (-1, nu)] {
        for (x, w) in m.atoms()? {
            let i = *index.entry(x.clone()).or_insert_with(|| {
                points.push(x);
                masses.push(q_int(0));
                points.len() - 1
            });
            masses[i] += q_int(sign) * w;
        }
    }
    if points.len() > cap {
        return Err(MeasureError::SupportTooLarge { size: points.len(), cap });
    }
    let n = points.len();
    let mut dist = vec![vec![q_int(0); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = mu.system.dist_exact(&points[i], &points[j])?;
            dist[i][j] = d.clone();
            dist[j][i] = d;
        }
    }
    Ok(transport::bl_dual(&masses, &dist))
}

/// Both sides of the empirical-set inequality for uniform measures on A and B.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetBound {
    #[serde(with = "rational::serde_q")]
    pub bound: Q,
    #[serde(with = "rational::serde_q")]
    pub actual: Q,
    pub holds: bool,
}

/// (|A|+|B|)/(|A||B|)·|A Δ B| + ||A|−|B||/(|A||B|)·|A ∩ B| against the
/// d_BL distance of the uniform measures on {x_i : i ∈ A} and {x_i : i ∈ B}.
pub fn split_bound(
    family: &TestFamily,
    points: &[PointRep],
    a: &[usize],
    b: &[usize],
) -> Result<SetBound, MeasureError> {
    let norm = |s: &[usize]| -> Result<Vec<usize>, MeasureError> {
        if s.is_empty() {
            return Err(MeasureError::EmptySet);
        }
        if let Some(&i) = s.iter().find(|&&i| i >= points.len()) {
            return Err(MeasureError::IndexRange { index: i, len: points.len() });
        }
        let mut v = s.to_vec();
        v.sort_unstable();
        v.dedup();
        Ok(v)
    };
    let a = norm(a)?;
    let b = norm(b)?;
    let inter = a.iter().filter(|i| b.binary_search(i).is_ok()).count() as i64;
    let (na, nb) = (a.len() as i64, b.len() as i64);
    let sym = na + nb - 2 * inter;
    let bound = q_frac((na + nb) * sym, na * nb) + q_frac((na - nb).abs() * inter, na * nb);
    let system = family.system().clone();
    let pick = |s: &[usize]| s.iter().map(|&i| points[i].clone()).collect::<Vec<_>>();
    let ea = DiscreteMeasure::uniform(system.clone(), &pick(&a))?;
    let eb = DiscreteMeasure::uniform(system, &pick(&b))?;
    let actual = dbl(&ea, &eb, family)?.value;
    let holds = actual <= bound;
    Ok(SetBound { bound, actual, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_maps::tent;

    fn interval() -> Arc<SystemHandle> {
        Arc::new(SystemHandle::PLInterval(tent(&q_int(2)).unwrap()))
    }

    #[test]
    fn tent_empirical() {
        let sys = interval();
        let mu = empirical(&sys, &PointRep::Real(q_frac(3, 10)), 4).unwrap();
        let atoms = mu.atoms().unwrap();
        assert_eq!(atoms.len(), 4);
        assert!(atoms.iter().all(|(_, w)| *w == q_frac(1, 4)));
    }

    #[test]
    fn periodic_collapse() {
        let sys = Arc::new(SystemHandle::full_shift(2));
        let x = PointRep::periodic(vec![0, 1]);
        let a = empirical(&sys, &x, 4).unwrap();
        let b = empirical(&sys, &x, 1000).unwrap();
        assert!(a.same_measure(&b).unwrap());
        assert_eq!(a.atoms().unwrap().len(), 2);
    }

    #[test]
    fn bl_examples() {
        let sys = interval();
        let d0 = DiscreteMeasure::dirac(sys.clone(), PointRep::Real(q_int(0))).unwrap();
        let dh = DiscreteMeasure::dirac(sys.clone(), PointRep::Real(q_frac(1, 2))).unwrap();
        assert_eq!(bl_exact(&d0, &dh).unwrap(), q_frac(2, 5));
        assert_eq!(bl_exact(&d0, &d0).unwrap(), q_int(0));
        let d1 = DiscreteMeasure::dirac(sys.clone(), PointRep::Real(q_int(1))).unwrap();
        let half = mix(&[d0, d1], &[q_frac(1, 2), q_frac(1, 2)]).unwrap();
        assert_eq!(bl_exact(&half, &dh).unwrap(), q_frac(2, 5));
    }

    #[test]
    fn set_bound_example() {
        let sys = interval();
        let fam = TestFamily::canonical(sys, DEFAULT_N_MAX).unwrap();
        let pts: Vec<PointRep> = [0, 1, 2].iter().map(|&i| PointRep::Real(q_frac(i, 3))).collect();
        let r = split_bound(&fam, &pts, &[0, 1], &[0, 1, 2]).unwrap();
        assert_eq!(r.bound, q_frac(7, 6));
        assert!(r.holds);
    }
}
