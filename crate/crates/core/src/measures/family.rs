//! Canonical bounded-Lipschitz test functions, one enumeration per system kind.

use std::sync::Arc;

use num_traits::Signed;
use serde::Serialize;

use crate::rational::{self, pow2, q_int, Q};
use crate::spaces::{PointRep, SpaceError, Symbol, SystemHandle};

use super::MeasureError;

/// Default truncation of the family.
pub const DEFAULT_N_MAX: usize = 24;

/// One test function; every variant has sup + Lipschitz constant ≤ 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    /// max(0, 1 − 2^m |x − k/2^m|) / (1 + 2^m)
    Hat { m: u32, k: u64 },
    /// max(0, 1 − 2^scale·d(x, C)) / (1 + 2^scale) for the cylinder C fixing
    /// coordinates lo..lo+|word|; the scale makes this the scaled indicator of C
    Cylinder { lo: i64, word: Vec<Symbol>, scale: u32 },
    /// scaled indicator of {x : x_level = residue} on an odometer
    Residue { level: usize, residue: u64 },
    /// product of one function per factor
    Tensor(Vec<TestFunction>),
}

impl TestFunction {
    /// f(x), exactly.
    pub fn eval(&self, system: &SystemHandle, x: &PointRep) -> Result<Q, MeasureError> {
        match self {
            TestFunction::Constant => Ok(q_int(1)),
            TestFunction::Hat { m, k } => {
                let v = match x {
                    PointRep::Real(q) => q.clone(),
                    PointRep::Float(f) => rational::from_f64(*f).ok_or_else(|| SpaceError::InvalidPoint(format!("{f}")))?,
                    _ => return Err(mismatch(system, x)),
                };
                Ok(hat(*m, *k, &v))
            }
            TestFunction::Cylinder { lo, word, scale } => {
                let w = x.as_symbolic().ok_or_else(|| mismatch(system, x))?;
                let hi = lo + word.len() as i64;
                let seen = w.slice(*lo, hi).ok_or_else(|| SpaceError::InsufficientWindow {
                    lower: "0".into(),
                    upper: format!("coordinates {lo}..{hi} unknown"),
                })?;
                Ok(cylinder_value(word, &seen, *scale))
            }
            TestFunction::Residue { level, residue } => {
                let PointRep::Digits(d) = x else { return Err(mismatch(system, x)) };
                let digit = d.digits.get(level - 1).ok_or_else(|| SpaceError::InsufficientWindow {
                    lower: "0".into(),
                    upper: format!("level {level} not materialized"),
                })?;
                Ok(if digit == residue { scaled_one(*level as u32) } else { q_int(0) })
            }
            TestFunction::Tensor(parts) => {
                let (SystemHandle::Product(fs), PointRep::Tuple(xs)) = (system, x) else {
                    return Err(mismatch(system, x));
                };
                let mut acc = q_int(1);
                for ((f, s), xi) in parts.iter().zip(fs).zip(xs) {
                    acc *= f.eval(s, xi)?;
                    if acc == q_int(0) {
                        break;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Coordinates lo..hi a symbolic function reads, if any.
    pub(crate) fn symbolic_span(&self) -> Option<(i64, i64)> {
        match self {
            TestFunction::Cylinder { lo, word, .. } => Some((*lo, lo + word.len() as i64)),
            _ => None,
        }
    }

    /// Value on a known coordinate block starting at index `base`.
    pub(crate) fn eval_block(&self, base: i64, block: &[Symbol]) -> Q {
        match self {
            TestFunction::Constant => q_int(1),
            TestFunction::Cylinder { lo, word, scale } => {
                let off = (lo - base) as usize;
                cylinder_value(word, &block[off..off + word.len()], *scale)
            }
            _ => unreachable!("only symbolic functions read blocks"),
        }
    }
}

fn mismatch(system: &SystemHandle, x: &PointRep) -> MeasureError {
    SpaceError::KindMismatch { system: system.kind_name(), point: x.kind_name() }.into()
}

fn scaled_one(scale: u32) -> Q {
    q_int(1) / (q_int(1) + pow2(scale as i64))
}

fn cylinder_value(word: &[Symbol], seen: &[Symbol], scale: u32) -> Q {
    if word == seen {
        scaled_one(scale)
    } else {
        q_int(0)
    }
}

fn hat(m: u32, k: u64, x: &Q) -> Q {
    let scale = pow2(m as i64);
    let center = Q::from_integer(k.into()) / &scale;
    let v = q_int(1) - &scale * (x - center).abs();
    if v.is_positive() {
        v / (q_int(1) + scale)
    } else {
        q_int(0)
    }
}

/// The first `n_max` functions f_1, f_2, … of a system's canonical family.
#[derive(Debug, Clone)]
pub struct TestFamily {
    system: Arc<SystemHandle>,
    functions: Vec<TestFunction>,
}

impl TestFamily {
    pub fn canonical(system: Arc<SystemHandle>, n_max: usize) -> Result<Self, MeasureError> {
        let functions = enumerate(&system, n_max)?;
        Ok(TestFamily { system, functions })
    }

    pub fn system(&self) -> &Arc<SystemHandle> {
        &self.system
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    /// Number of functions actually enumerated (may fall short of the request
    /// when an odometer has few materialized levels).
    pub fn n_max(&self) -> usize {
        self.functions.len()
    }

    /// Bound on the omitted part of the series: Σ_{n > N} 2^(−n)·2.
    pub fn tail_bound(&self) -> Q {
        pow2(1 - self.functions.len() as i64)
    }
}

fn enumerate(system: &SystemHandle, n_max: usize) -> Result<Vec<TestFunction>, MeasureError> {
    let mut out = vec![TestFunction::Constant];
    match system {
        SystemHandle::PLInterval(_) => {
            'outer: for m in 0u32.. {
                for k in 0..=(1u64 << m) {
                    if out.len() >= n_max {
                        break 'outer;
                    }
                    out.push(TestFunction::Hat { m, k });
                }
            }
        }
        SystemHandle::Odometer(spec) => {
            'outer: for level in 1..=spec.levels() {
                for residue in 0..spec.periods[level - 1] {
                    if out.len() >= n_max {
                        break 'outer;
                    }
                    out.push(TestFunction::Residue { level, residue });
                }
            }
        }
        SystemHandle::Product(fs) => {
            let factor: Vec<Vec<TestFunction>> = fs.iter().map(|f| enumerate(f, n_max)).collect::<Result<_, _>>()?;
            out.clear();
            for tuple in DiagonalTuples::new(factor.iter().map(Vec::len).collect()).take(n_max) {
                out.push(TestFunction::Tensor(tuple.iter().zip(&factor).map(|(&i, f)| f[i].clone()).collect()));
            }
        }
        _ => {
            let (_, two_sided, _) = system.symbolic_info().expect("symbolic kind");
            let sft = system.as_sft().expect("symbolic kind");
            'outer: for level in 1usize.. {
                let (len, lo, scale) = if two_sided {
                    (2 * level - 1, -(level as i64 - 1), level as u32)
                } else {
                    (level, 0, level as u32)
                };
                let mut words = sft.language(len)?;
                words.sort();
                if words.is_empty() {
                    break;
                }
                for word in words {
                    if out.len() >= n_max {
                        break 'outer;
                    }
                    out.push(TestFunction::Cylinder { lo, word, scale });
                }
            }
        }
    }
    out.truncate(n_max);
    Ok(out)
}

/// Index tuples ordered by coordinate sum, then lexicographically.
struct DiagonalTuples {
    bounds: Vec<usize>,
    sum: usize,
    pending: Vec<Vec<usize>>,
}

impl DiagonalTuples {
    fn new(bounds: Vec<usize>) -> Self {
        DiagonalTuples { bounds, sum: 0, pending: Vec::new() }
    }

    fn fill(&mut self) -> bool {
        let max_sum: usize = self.bounds.iter().map(|b| b.saturating_sub(1)).sum();
        while self.pending.is_empty() {
            if self.sum > max_sum || self.bounds.iter().any(|&b| b == 0) {
                return false;
            }
            let mut acc = Vec::new();
            let mut cur = Vec::new();
            compositions(&self.bounds, self.sum, &mut cur, &mut acc);
            acc.reverse();
            self.pending = acc;
            self.sum += 1;
        }
        true
    }
}

fn compositions(bounds: &[usize], rest: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == bounds.len() {
        if rest == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let i = cur.len();
    for v in 0..bounds[i].min(rest + 1) {
        cur.push(v);
        compositions(bounds, rest - v, cur, out);
        cur.pop();
    }
}

impl Iterator for DiagonalTuples {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if !self.fill() {
            return None;
        }
        self.pending.pop()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_maps::tent;
    use crate::rational::q_frac;

    #[test]
    fn interval_order() {
        let sys = Arc::new(SystemHandle::PLInterval(tent(&q_int(2)).unwrap()));
        let fam = TestFamily::canonical(sys, 6).unwrap();
        assert_eq!(
            fam.functions()[1..],
            [
                TestFunction::Hat { m: 0, k: 0 },
                TestFunction::Hat { m: 0, k: 1 },
                TestFunction::Hat { m: 1, k: 0 },
                TestFunction::Hat { m: 1, k: 1 },
                TestFunction::Hat { m: 1, k: 2 },
            ]
        );
        assert_eq!(hat(1, 1, &q_frac(1, 2)), q_frac(1, 3));
    }

    #[test]
    fn diagonal_order() {
        let t: Vec<_> = DiagonalTuples::new(vec![3, 3]).collect();
        assert_eq!(t, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0], vec![1, 2], vec![2, 1], vec![2, 2]]);
    }

    #[test]
    fn shift_cylinders() {
        let fam = TestFamily::canonical(Arc::new(SystemHandle::full_shift(2)), 7).unwrap();
        assert_eq!(fam.functions()[1], TestFunction::Cylinder { lo: 0, word: vec![0], scale: 1 });
        assert_eq!(fam.functions()[6], TestFunction::Cylinder { lo: 0, word: vec![1, 1], scale: 2 });
    }
}
