//! System classes, point representations, canonical metrics and the maps.

use std::hash::{Hash, Hasher};

use num_integer::Integer;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval_maps::{self, IntervalError, PLMap, PlFamily};
use crate::odometer::{odometer_add, DigitVector, OdometerError, OdometerSpec};
use crate::rational::{self, pow2, q_int, Q};
use crate::subshift::{Sft, SubshiftError};

pub type Symbol = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("point kind {point} does not match system kind {system}")]
    KindMismatch { system: &'static str, point: &'static str },
    #[error("windows too short: distance only known within [{lower}, {upper}]")]
    InsufficientWindow { lower: String, upper: String },
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid system description: {0}")]
    InvalidSystem(String),
    #[error(transparent)]
    Subshift(#[from] SubshiftError),
    #[error(transparent)]
    Odometer(#[from] OdometerError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// How a symbolic window continues outside its explicit symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// every coordinate outside the window is 0
    Zeros,
    /// to the right repeat the last p symbols; to the left the first p
    PeriodicRepeat(usize),
    /// coordinates outside the window are unknown
    Unspecified,
}

/// Coordinates lo..lo+len of a symbolic point plus an extension rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicWindow {
    pub lo: i64,
    pub symbols: Vec<Symbol>,
    pub extension: Extension,
}

impl SymbolicWindow {
    pub fn new(lo: i64, symbols: Vec<Symbol>, extension: Extension) -> Self {
        SymbolicWindow { lo, symbols, extension }
    }

    /// The purely periodic one-sided point block^∞.
    pub fn periodic(block: Vec<Symbol>) -> Self {
        let p = block.len();
        SymbolicWindow::new(0, block, Extension::PeriodicRepeat(p))
    }

    /// The two-sided periodic point with x_0 = block[0].
    pub fn periodic_two_sided(block: Vec<Symbol>) -> Self {
        Self::periodic(block)
    }

    /// prefix followed by block^∞ (one-sided).
    pub fn eventually_periodic(prefix: &[Symbol], block: &[Symbol]) -> Self {
        let mut s = prefix.to_vec();
        s.extend_from_slice(block);
        SymbolicWindow::new(0, s, Extension::PeriodicRepeat(block.len()))
    }

    pub fn finite(symbols: Vec<Symbol>) -> Self {
        SymbolicWindow::new(0, symbols, Extension::Unspecified)
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.symbols.len() as i64
    }

    pub fn validate(&self, alphabet: u32) -> Result<(), SpaceError> {
        if let Some(&s) = self.symbols.iter().find(|&&s| s >= alphabet) {
            return Err(SpaceError::InvalidPoint(format!("symbol {s} outside alphabet {alphabet}")));
        }
        match self.extension {
            Extension::PeriodicRepeat(p) if p == 0 || p > self.symbols.len() => {
                Err(SpaceError::InvalidPoint(format!("period {p} does not fit a window of {}", self.symbols.len())))
            }
            Extension::Zeros if self.symbols.is_empty() => Err(SpaceError::InvalidPoint("empty window".into())),
            _ => Ok(()),
        }
    }

    pub fn is_determined(&self) -> bool {
        !matches!(self.extension, Extension::Unspecified)
    }

    /// Coordinate i, or None where the window says nothing.
    pub fn get(&self, i: i64) -> Option<Symbol> {
        let len = self.symbols.len() as i64;
        let off = i - self.lo;
        if (0..len).contains(&off) {
            return Some(self.symbols[off as usize]);
        }
        match self.extension {
            Extension::Zeros => Some(0),
            Extension::Unspecified => None,
            Extension::PeriodicRepeat(p) => {
                let p = p as i64;
                if off >= len {
                    Some(self.symbols[(len - p + (off - len).mod_floor(&p)) as usize])
                } else {
                    Some(self.symbols[off.mod_floor(&p) as usize])
                }
            }
        }
    }

    /// Symbols at indices a..b, if all known.
    pub fn slice(&self, a: i64, b: i64) -> Option<Vec<Symbol>> {
        (a..b).map(|i| self.get(i)).collect()
    }

    // period of the pair sequence far out, used to bound disagreement scans
    fn tail_period(&self) -> usize {
        match self.extension {
            Extension::PeriodicRepeat(p) => p,
            _ => 1,
        }
    }

    /// Zeros rewritten as an explicit periodic rule (keeps the same point).
    fn as_periodic(&self, two_sided: bool) -> SymbolicWindow {
        match self.extension {
            Extension::Zeros => {
                let mut s = Vec::with_capacity(self.symbols.len() + 2);
                let mut lo = self.lo;
                if two_sided {
                    s.push(0);
                    lo -= 1;
                }
                s.extend_from_slice(&self.symbols);
                s.push(0);
                SymbolicWindow::new(lo, s, Extension::PeriodicRepeat(1))
            }
            _ => self.clone(),
        }
    }

    /// Minimal equivalent representation (smallest period, shortest window).
    pub fn normalize(&self, two_sided: bool) -> SymbolicWindow {
        let mut w = self.as_periodic(two_sided);
        if !two_sided && w.lo != 0 && w.is_determined() {
            // one-sided points live on indices >= 0
            let s: Vec<Symbol> = (0..w.hi().max(1)).map(|i| w.get(i).unwrap()).collect();
            let p = w.tail_period();
            let mut s = s;
            if s.len() < p {
                let extra: Vec<Symbol> = (s.len() as i64..p as i64).map(|i| w.get(i).unwrap()).collect();
                s.extend(extra);
            }
            w = SymbolicWindow::new(0, s, w.extension);
        }
        let p = match w.extension {
            Extension::PeriodicRepeat(p) => p,
            _ => return w,
        };
        let mut p = p;
        loop {
            // reduce the period to the smallest divisor both end blocks respect
            let len = w.symbols.len();
            let right = &w.symbols[len - p..];
            let left = &w.symbols[..p];
            let q = (1..=p)
                .filter(|q| p % q == 0)
                .find(|&q| {
                    (0..p).all(|i| right[i] == right[(i + q) % p]) && (!two_sided || (0..p).all(|i| left[i] == left[(i + q) % p]))
                })
                .unwrap();
            p = q;
            let mut changed = false;
            while w.symbols.len() > p && w.symbols[w.symbols.len() - 1] == w.symbols[w.symbols.len() - 1 - p] {
                w.symbols.pop();
                changed = true;
            }
            if two_sided {
                while w.symbols.len() > p && w.symbols[0] == w.symbols[p] {
                    w.symbols.remove(0);
                    w.lo += 1;
                    changed = true;
                }
            }
            w.extension = Extension::PeriodicRepeat(p);
            if !changed {
                break;
            }
        }
        w
    }

    /// One step of the one-sided shift.
    pub fn shift_one_sided(&self, n: u64) -> SymbolicWindow {
        if n == 0 {
            return self.clone();
        }
        if self.lo > 0 {
            let k = (self.lo as u64).min(n);
            let mut w = self.clone();
            w.lo -= k as i64;
            return w.shift_one_sided(n - k);
        }
        let mut w = self.clone();
        if w.lo < 0 {
            let drop = (-w.lo) as usize;
            let drop = drop.min(w.symbols.len());
            w.symbols.drain(..drop);
            w.lo = 0;
        }
        let len = w.symbols.len() as u64;
        match w.extension {
            Extension::Unspecified => {
                let k = n.min(len) as usize;
                w.symbols.drain(..k);
                w
            }
            Extension::Zeros => {
                if n < len {
                    w.symbols.drain(..n as usize);
                } else {
                    w.symbols = vec![0];
                }
                w
            }
            Extension::PeriodicRepeat(p) => {
                let pre = len - p as u64;
                if n <= pre {
                    w.symbols.drain(..n as usize);
                } else {
                    let block: Vec<Symbol> = w.symbols[pre as usize..].to_vec();
                    let off = ((n - pre) % p as u64) as usize;
                    let mut rot = block[off..].to_vec();
                    rot.extend_from_slice(&block[..off]);
                    w.symbols = rot;
                }
                w
            }
        }
    }
}

/// A point of some system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRep {
    Symbolic(SymbolicWindow),
    Real(#[serde(with = "rational::serde_q")] Q),
    Float(f64),
    Digits(DigitVector),
    Tuple(Vec<PointRep>),
}

impl PartialEq for PointRep {
    fn eq(&self, other: &Self) -> bool {
        use PointRep::*;
        match (self, other) {
            (Symbolic(a), Symbolic(b)) => a == b,
            (Real(a), Real(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Digits(a), Digits(b)) => a == b,
            (Tuple(a), Tuple(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for PointRep {}

impl Hash for PointRep {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            PointRep::Symbolic(w) => w.hash(state),
            PointRep::Real(q) => q.hash(state),
            PointRep::Float(f) => f.to_bits().hash(state),
            PointRep::Digits(d) => d.hash(state),
            PointRep::Tuple(t) => t.hash(state),
        }
    }
}

impl PointRep {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PointRep::Symbolic(_) => "symbolic",
            PointRep::Real(_) => "real",
            PointRep::Float(_) => "float",
            PointRep::Digits(_) => "digits",
            PointRep::Tuple(_) => "tuple",
        }
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicWindow> {
        match self {
            PointRep::Symbolic(w) => Some(w),
            _ => None,
        }
    }

    pub fn real(q: Q) -> Self {
        PointRep::Real(q)
    }

    pub fn periodic(block: Vec<Symbol>) -> Self {
        PointRep::Symbolic(SymbolicWindow::periodic(block))
    }
}

/// Certified enclosure of a distance; exact when lower == upper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bracket {
    #[serde(with = "rational::serde_q")]
    pub lower: Q,
    #[serde(with = "rational::serde_q")]
    pub upper: Q,
}

impl Bracket {
    pub fn exact(v: Q) -> Self {
        Bracket { lower: v.clone(), upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> Q {
        &self.upper - &self.lower
    }

    pub fn value(&self) -> Option<&Q> {
        self.is_exact().then_some(&self.lower)
    }

    fn max(self, other: Bracket) -> Bracket {
        Bracket {
            lower: rational::q_max(self.lower, other.lower),
            upper: rational::q_max(self.upper, other.upper),
        }
    }
}

/// A concrete dynamical system: space, metric and map.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemHandle {
    OneSidedShift { alphabet: u32 },
    TwoSidedShift { alphabet: u32 },
    SftOneSided(Sft),
    SftTwoSided(Sft),
    PLInterval(PLMap),
    Odometer(OdometerSpec),
    Product(Vec<SystemHandle>),
}

impl SystemHandle {
    pub fn full_shift(alphabet: u32) -> Self {
        SystemHandle::OneSidedShift { alphabet }
    }

    pub fn golden_mean() -> Self {
        SystemHandle::SftOneSided(Sft::golden_mean())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SystemHandle::OneSidedShift { .. } => "one_sided_shift",
            SystemHandle::TwoSidedShift { .. } => "two_sided_shift",
            SystemHandle::SftOneSided(_) => "sft_one_sided",
            SystemHandle::SftTwoSided(_) => "sft_two_sided",
            SystemHandle::PLInterval(_) => "pl_interval",
            SystemHandle::Odometer(_) => "odometer",
            SystemHandle::Product(_) => "product",
        }
    }

    /// Name of the canonical metric attached to the kind.
    pub fn metric_id(&self) -> &'static str {
        match self {
            SystemHandle::OneSidedShift { .. } | SystemHandle::SftOneSided(_) => "dyadic-first-disagreement",
            SystemHandle::TwoSidedShift { .. } | SystemHandle::SftTwoSided(_) => "dyadic-central-disagreement",
            SystemHandle::PLInterval(_) => "absolute-value",
            SystemHandle::Odometer(_) => "dyadic-first-level",
            SystemHandle::Product(_) => "max-of-factors",
        }
    }

    pub fn is_symbolic(&self) -> bool {
        self.symbolic_info().is_some()
    }

    /// (alphabet, two-sided, sft) for shift kinds.
    pub fn symbolic_info(&self) -> Option<(u32, bool, Option<&Sft>)> {
        match self {
            SystemHandle::OneSidedShift { alphabet } => Some((*alphabet, false, None)),
            SystemHandle::TwoSidedShift { alphabet } => Some((*alphabet, true, None)),
            SystemHandle::SftOneSided(s) => Some((s.alphabet(), false, Some(s))),
            SystemHandle::SftTwoSided(s) => Some((s.alphabet(), true, Some(s))),
            _ => None,
        }
    }

    /// The SFT describing a shift kind (full shifts become forbidden-free SFTs).
    pub fn as_sft(&self) -> Option<Sft> {
        match self.symbolic_info()? {
            (_, _, Some(s)) => Some(s.clone()),
            (k, _, None) => Some(Sft::full_shift(k)),
        }
    }

    fn mismatch(&self, x: &PointRep) -> SpaceError {
        SpaceError::KindMismatch { system: self.kind_name(), point: x.kind_name() }
    }

    pub fn validate_point(&self, x: &PointRep) -> Result<(), SpaceError> {
        match (self, x) {
            (SystemHandle::Product(fs), PointRep::Tuple(xs)) => {
                if fs.len() != xs.len() {
                    return Err(SpaceError::InvalidPoint(format!("tuple of {} for {} factors", xs.len(), fs.len())));
                }
                fs.iter().zip(xs).try_for_each(|(f, x)| f.validate_point(x))
            }
            (SystemHandle::PLInterval(_), PointRep::Real(q)) => {
                if q.is_negative() || *q > q_int(1) {
                    return Err(SpaceError::InvalidPoint(format!("{} outside [0, 1]", rational::fmt_q(q))));
                }
                Ok(())
            }
            (SystemHandle::PLInterval(_), PointRep::Float(f)) => {
                if !(0.0..=1.0).contains(f) {
                    return Err(SpaceError::InvalidPoint(format!("{f} outside [0, 1]")));
                }
                Ok(())
            }
            (SystemHandle::Odometer(spec), PointRep::Digits(d)) => Ok(spec.validate(d)?),
            (_, PointRep::Symbolic(w)) => match self.symbolic_info() {
                Some((k, _, _)) => w.validate(k),
                None => Err(self.mismatch(x)),
            },
            _ => Err(self.mismatch(x)),
        }
    }

    /// Canonical distance as a certified bracket.
    pub fn dist(&self, x: &PointRep, y: &PointRep) -> Result<Bracket, SpaceError> {
        match (self, x, y) {
            (SystemHandle::Product(fs), PointRep::Tuple(xs), PointRep::Tuple(ys)) => {
                if xs.len() != fs.len() || ys.len() != fs.len() {
                    return Err(SpaceError::InvalidPoint("tuple arity".into()));
                }
                let mut acc = Bracket::exact(q_int(0));
                for ((f, a), b) in fs.iter().zip(xs).zip(ys) {
                    acc = acc.max(f.dist(a, b)?);
                }
                Ok(acc)
            }
            (SystemHandle::PLInterval(_), a, b) => {
                let a = real_value(a).ok_or_else(|| self.mismatch(a))?;
                let b = real_value(b).ok_or_else(|| self.mismatch(b))?;
                Ok(Bracket::exact((a - b).abs()))
            }
            (SystemHandle::Odometer(spec), PointRep::Digits(a), PointRep::Digits(b)) => Ok(odometer_dist(spec, a, b)),
            (_, PointRep::Symbolic(a), PointRep::Symbolic(b)) => {
                let (_, two_sided, _) = self.symbolic_info().ok_or_else(|| self.mismatch(x))?;
                Ok(symbolic_dist(a, b, two_sided))
            }
            (_, PointRep::Symbolic(_), other) | (_, other, _) => Err(self.mismatch(other)),
        }
    }

    /// Exact distance or InsufficientWindow.
    pub fn dist_exact(&self, x: &PointRep, y: &PointRep) -> Result<Q, SpaceError> {
        self.dist_within(x, y, &q_int(0)).map(|b| b.upper)
    }

    /// Distance bracket whose width is at most `tol`.
    pub fn dist_within(&self, x: &PointRep, y: &PointRep, tol: &Q) -> Result<Bracket, SpaceError> {
        let b = self.dist(x, y)?;
        if b.width() > *tol {
            return Err(SpaceError::InsufficientWindow {
                lower: rational::fmt_q(&b.lower),
                upper: rational::fmt_q(&b.upper),
            });
        }
        Ok(b)
    }

    /// One application of the map.
    pub fn apply(&self, x: &PointRep) -> Result<PointRep, SpaceError> {
        self.apply_n(x, 1)
    }

    /// T^n(x), jumping directly where the representation allows it.
    pub fn apply_n(&self, x: &PointRep, n: u64) -> Result<PointRep, SpaceError> {
        match (self, x) {
            (SystemHandle::Product(fs), PointRep::Tuple(xs)) if fs.len() == xs.len() => {
                let parts = fs.iter().zip(xs).map(|(f, x)| f.apply_n(x, n)).collect::<Result<_, _>>()?;
                Ok(PointRep::Tuple(parts))
            }
            (SystemHandle::PLInterval(m), PointRep::Real(q)) => {
                let mut cur = q.clone();
                for _ in 0..n {
                    cur = m.eval(&cur)?;
                }
                Ok(PointRep::Real(cur))
            }
            (SystemHandle::PLInterval(m), PointRep::Float(f)) => {
                let mut cur = *f;
                for _ in 0..n {
                    cur = m.eval_f64(cur);
                }
                Ok(PointRep::Float(cur))
            }
            (SystemHandle::Odometer(spec), PointRep::Digits(d)) => Ok(PointRep::Digits(odometer_add(spec, d, n as i128))),
            (_, PointRep::Symbolic(w)) => {
                let (_, two_sided, _) = self.symbolic_info().ok_or_else(|| self.mismatch(x))?;
                if two_sided {
                    let mut w = w.clone();
                    w.lo -= n as i64;
                    Ok(PointRep::Symbolic(w))
                } else {
                    Ok(PointRep::Symbolic(w.shift_one_sided(n)))
                }
            }
            _ => Err(self.mismatch(x)),
        }
    }

    /// [x, T x, …, T^(n−1) x].
    pub fn orbit_segment(&self, x: &PointRep, n: usize) -> Result<Vec<PointRep>, SpaceError> {
        let mut out = Vec::with_capacity(n);
        let mut cur = x.clone();
        for i in 0..n {
            let next = if i + 1 < n { Some(self.apply(&cur)?) } else { None };
            out.push(cur);
            match next {
                Some(nx) => cur = nx,
                None => break,
            }
        }
        Ok(out)
    }

    /// Canonical representative, equal for points at distance zero.
    pub fn canonical(&self, x: &PointRep) -> PointRep {
        match (self, x) {
            (SystemHandle::Product(fs), PointRep::Tuple(xs)) => {
                PointRep::Tuple(fs.iter().zip(xs).map(|(f, x)| f.canonical(x)).collect())
            }
            (SystemHandle::PLInterval(_), PointRep::Float(f)) => match rational::from_f64(*f) {
                Some(q) => PointRep::Real(q),
                None => x.clone(),
            },
            (_, PointRep::Symbolic(w)) => {
                let two = self.symbolic_info().map(|i| i.1).unwrap_or(false);
                PointRep::Symbolic(w.normalize(two))
            }
            _ => x.clone(),
        }
    }
}

fn real_value(x: &PointRep) -> Option<Q> {
    match x {
        PointRep::Real(q) => Some(q.clone()),
        PointRep::Float(f) => rational::from_f64(*f),
        _ => None,
    }
}

fn odometer_dist(spec: &OdometerSpec, a: &DigitVector, b: &DigitVector) -> Bracket {
    let common = a.digits.len().min(b.digits.len());
    for n in 0..common {
        if a.digits[n] != b.digits[n] {
            return Bracket::exact(pow2(-(n as i64 + 1)));
        }
    }
    if common >= spec.levels() {
        Bracket::exact(q_int(0))
    } else {
        Bracket { lower: q_int(0), upper: pow2(-(common as i64 + 1)) }
    }
}

/// Index order used by the metric: 0, 1, 2, … (one-sided) or 0, ±1, ±2, … (two-sided).
fn symbolic_dist(a: &SymbolicWindow, b: &SymbolicWindow, two_sided: bool) -> Bracket {
    let per = a.tail_period().lcm(&b.tail_period()) as i64;
    let reach = |w: &SymbolicWindow| w.lo.abs().max(w.hi().abs());
    let bound = reach(a).max(reach(b)) + per + 1;
    let mut first_unknown: Option<i64> = None;
    for k in 0..=bound {
        let idx: &[i64] = if two_sided && k > 0 { &[k, -k] } else { &[k] };
        for &i in idx {
            match (a.get(i), b.get(i)) {
                (Some(s), Some(t)) if s != t => {
                    let d = pow2(-k);
                    return match first_unknown {
                        None => Bracket::exact(d),
                        Some(u) => Bracket { lower: d, upper: pow2(-u) },
                    };
                }
                (Some(_), Some(_)) => {}
                _ => {
                    if first_unknown.is_none() {
                        first_unknown = Some(k);
                    }
                }
            }
        }
    }
    match first_unknown {
        None => Bracket::exact(q_int(0)),
        Some(u) => Bracket { lower: q_int(0), upper: pow2(-u) },
    }
}

/// Free-function forms of the system methods.
pub fn dist(system: &SystemHandle, x: &PointRep, y: &PointRep) -> Result<Bracket, SpaceError> {
    system.dist(x, y)
}

pub fn apply(system: &SystemHandle, x: &PointRep) -> Result<PointRep, SpaceError> {
    system.apply(x)
}

pub fn orbit_segment(system: &SystemHandle, x: &PointRep, n: usize) -> Result<Vec<PointRep>, SpaceError> {
    system.orbit_segment(x, n)
}

// JSON document form of a system.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphabet: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forbidden: Vec<WordDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    breakpoints: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    periods: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    factors: Vec<SystemDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<PlFamily>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum WordDoc {
    Symbols(Vec<Symbol>),
    Digits(String),
}

impl WordDoc {
    fn into_word(self) -> Result<Vec<Symbol>, SpaceError> {
        match self {
            WordDoc::Symbols(v) => Ok(v),
            WordDoc::Digits(s) => s
                .chars()
                .map(|c| c.to_digit(10).ok_or_else(|| SpaceError::InvalidSystem(format!("bad word {s:?}"))))
                .collect(),
        }
    }
}

impl SystemDoc {
    fn from_system(s: &SystemHandle) -> SystemDoc {
        let mut doc = SystemDoc {
            kind: s.kind_name().to_string(),
            alphabet: None,
            forbidden: Vec::new(),
            breakpoints: Vec::new(),
            periods: Vec::new(),
            factors: Vec::new(),
            family: None,
        };
        match s {
            SystemHandle::OneSidedShift { alphabet } | SystemHandle::TwoSidedShift { alphabet } => doc.alphabet = Some(*alphabet),
            SystemHandle::SftOneSided(sft) | SystemHandle::SftTwoSided(sft) => {
                doc.alphabet = Some(sft.alphabet());
                doc.forbidden = sft.forbidden().iter().cloned().map(WordDoc::Symbols).collect();
            }
            SystemHandle::PLInterval(m) => {
                doc.breakpoints = m.breakpoints().iter().map(|(x, y)| (rational::fmt_q(x), rational::fmt_q(y))).collect();
                doc.family = m.family().cloned();
            }
            SystemHandle::Odometer(spec) => doc.periods = spec.periods.clone(),
            SystemHandle::Product(fs) => doc.factors = fs.iter().map(SystemDoc::from_system).collect(),
        }
        doc
    }

    fn into_system(self) -> Result<SystemHandle, SpaceError> {
        let key: String = self.kind.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        let alphabet = || self.alphabet.ok_or_else(|| SpaceError::InvalidSystem("missing alphabet".into()));
        let sft = || -> Result<Sft, SpaceError> {
            let words = self.forbidden.iter().cloned().map(WordDoc::into_word).collect::<Result<Vec<_>, _>>()?;
            Ok(Sft::new(alphabet()?, words)?)
        };
        match key.as_str() {
            "onesidedshift" | "fullshift" => Ok(SystemHandle::OneSidedShift { alphabet: alphabet()? }),
            "twosidedshift" => Ok(SystemHandle::TwoSidedShift { alphabet: alphabet()? }),
            "sftonesided" | "sft" => Ok(SystemHandle::SftOneSided(sft()?)),
            "sfttwosided" => Ok(SystemHandle::SftTwoSided(sft()?)),
            "odometer" => Ok(SystemHandle::Odometer(OdometerSpec::new(self.periods.clone())?)),
            "plinterval" | "interval" => {
                let from_family = match &self.family {
                    Some(PlFamily::Tent { lambda }) => Some(interval_maps::tent(lambda)?),
                    Some(PlFamily::CoreTent { lambda }) => Some(interval_maps::core_tent(lambda)?),
                    Some(PlFamily::Delahaye { level }) => Some(interval_maps::delahaye(*level)?),
                    None => None,
                };
                let table = if self.breakpoints.is_empty() {
                    None
                } else {
                    let pts = self
                        .breakpoints
                        .iter()
                        .map(|(x, y)| Ok((rational::parse_q(x)?, rational::parse_q(y)?)))
                        .collect::<Result<Vec<_>, rational::ParseRationalError>>()
                        .map_err(|e| SpaceError::InvalidSystem(e.to_string()))?;
                    Some(PLMap::new(pts)?)
                };
                match (from_family, table) {
                    (Some(f), Some(t)) => {
                        if f.breakpoints() != t.breakpoints() {
                            return Err(SpaceError::InvalidSystem("breakpoints disagree with the named family".into()));
                        }
                        Ok(SystemHandle::PLInterval(f))
                    }
                    (Some(f), None) => Ok(SystemHandle::PLInterval(f)),
                    (None, Some(t)) => Ok(SystemHandle::PLInterval(t)),
                    (None, None) => Err(SpaceError::InvalidSystem("interval map needs breakpoints or a family".into())),
                }
            }
            "product" => {
                if self.factors.is_empty() {
                    return Err(SpaceError::InvalidSystem("product needs factors".into()));
                }
                let fs = self.factors.into_iter().map(SystemDoc::into_system).collect::<Result<_, _>>()?;
                Ok(SystemHandle::Product(fs))
            }
            _ => Err(SpaceError::InvalidSystem(format!("unknown kind {:?}", self.kind))),
        }
    }
}

impl Serialize for SystemHandle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SystemDoc::from_system(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SystemHandle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        SystemDoc::deserialize(d)?.into_system().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;

    #[test]
    fn periodic_get_and_shift() {
        let w = SymbolicWindow::periodic(vec![0, 1, 1, 1]);
        let s = SystemHandle::full_shift(2);
        let t = s.apply(&PointRep::Symbolic(w)).unwrap();
        assert_eq!(t.as_symbolic().unwrap().symbols, vec![1, 1, 1, 0]);
        let w = SymbolicWindow::eventually_periodic(&[1, 1], &[0, 1]);
        assert_eq!(w.slice(0, 7).unwrap(), vec![1, 1, 0, 1, 0, 1, 0]);
        let jumped = w.shift_one_sided(5);
        assert_eq!(jumped.slice(0, 4).unwrap(), vec![1, 0, 1, 0]);
    }

    #[test]
    fn one_sided_distance() {
        let s = SystemHandle::full_shift(2);
        let x = PointRep::periodic(vec![0, 1]);
        let y = PointRep::periodic(vec![0, 1, 1, 1]);
        // 0101… and 0111… first differ at index 2
        assert_eq!(s.dist_exact(&x, &y).unwrap(), q_frac(1, 4));
        let y = PointRep::periodic(vec![0, 0, 1]);
        assert_eq!(s.dist_exact(&x, &y).unwrap(), q_frac(1, 2));
        assert_eq!(s.dist_exact(&x, &x).unwrap(), q_int(0));
        let z = PointRep::periodic(vec![0, 1, 0, 1]);
        assert_eq!(s.dist_exact(&x, &z).unwrap(), q_int(0));
    }

    #[test]
    fn unspecified_windows_bracket() {
        let s = SystemHandle::full_shift(2);
        let x = PointRep::Symbolic(SymbolicWindow::finite(vec![0, 1, 0]));
        let y = PointRep::periodic(vec![0, 1]);
        let b = s.dist(&x, &y).unwrap();
        assert_eq!(b, Bracket { lower: q_int(0), upper: q_frac(1, 8) });
        assert!(s.dist_exact(&x, &y).is_err());
    }

    #[test]
    fn two_sided_distance() {
        let s = SystemHandle::TwoSidedShift { alphabet: 2 };
        let x = PointRep::Symbolic(SymbolicWindow::new(-2, vec![1, 0, 0, 0, 0], Extension::Zeros));
        let y = PointRep::Symbolic(SymbolicWindow::new(0, vec![0], Extension::Zeros));
        assert_eq!(s.dist_exact(&x, &y).unwrap(), q_frac(1, 4));
        let tx = s.apply(&x).unwrap();
        assert_eq!(tx.as_symbolic().unwrap().get(-3), Some(1));
    }

    #[test]
    fn normalize_examples() {
        let w = SymbolicWindow::new(0, vec![0, 1, 0, 1, 0, 1], Extension::PeriodicRepeat(4));
        let n = w.normalize(false);
        assert_eq!(n.symbols, vec![0, 1]);
        assert_eq!(n.extension, Extension::PeriodicRepeat(2));
        let z = SymbolicWindow::new(0, vec![1, 0, 0], Extension::Zeros).normalize(false);
        assert_eq!(z.symbols, vec![1, 0]);
    }

    #[test]
    fn kind_mismatch() {
        let s = SystemHandle::full_shift(2);
        assert!(matches!(
            s.dist(&PointRep::Real(q_int(0)), &PointRep::Real(q_int(0))),
            Err(SpaceError::KindMismatch { .. })
        ));
    }
}
