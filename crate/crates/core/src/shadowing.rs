//! Pseudo-orbits, shadowing moduli and tracing with certificates.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval_maps::{IntervalError, PLMap, PlFamily};
use crate::rational::{self, ceil_log2_inv, pow2, q_frac, q_int, Q};
use crate::spaces::{Extension, PointRep, SpaceError, Symbol, SymbolicWindow, SystemHandle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShadowError {
    #[error("pseudo-orbit needs at least two points (or a nonempty periodic block)")]
    TooShort,
    #[error("gap {worst} is not below delta {delta}")]
    NotVerified { worst: String, delta: String },
    #[error("delta {delta} exceeds the modulus {modulus} for this epsilon")]
    DeltaTooLarge { delta: String, modulus: String },
    #[error("no tracer: nested preimage intervals became empty at index {index}")]
    NoTracer { index: usize },
    #[error("no verified shadowing modulus for {0}")]
    Unsupported(String),
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// A finite pseudo-orbit (`block` empty) or `points` followed by `block` repeated forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub points: Vec<PointRep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block: Vec<PointRep>,
    #[serde(with = "rational::serde_q")]
    pub delta: Q,
    #[serde(default)]
    pub verified: bool,
}

impl PseudoOrbit {
    pub fn finite(points: Vec<PointRep>, delta: Q) -> Self {
        PseudoOrbit { points, block: Vec::new(), delta, verified: false }
    }

    pub fn eventually_periodic(prefix: Vec<PointRep>, block: Vec<PointRep>, delta: Q) -> Self {
        PseudoOrbit { points: prefix, block, delta, verified: false }
    }

    pub fn periodic(block: Vec<PointRep>, delta: Q) -> Self {
        Self::eventually_periodic(Vec::new(), block, delta)
    }

    /// The exact orbit segment of x, as a pseudo-orbit.
    pub fn true_orbit(system: &SystemHandle, x: &PointRep, n: usize, delta: Q) -> Result<Self, SpaceError> {
        Ok(Self::finite(system.orbit_segment(x, n)?, delta))
    }

    pub fn is_periodic(&self) -> bool {
        !self.block.is_empty()
    }

    /// Number of explicitly listed points (prefix plus one block).
    pub fn listed_len(&self) -> usize {
        self.points.len() + self.block.len()
    }

    /// x_i (periodic pseudo-orbits are defined for every i).
    pub fn point(&self, i: usize) -> Option<&PointRep> {
        if i < self.points.len() {
            return Some(&self.points[i]);
        }
        if self.block.is_empty() {
            return None;
        }
        Some(&self.block[(i - self.points.len()) % self.block.len()])
    }

    // consecutive pairs (x_i, x_{i+1}), including the wrap of the block
    fn pairs(&self) -> Vec<(&PointRep, &PointRep)> {
        let n = self.listed_len();
        let steps = if self.is_periodic() { n } else { n.saturating_sub(1) };
        (0..steps).map(|i| (self.point(i).unwrap(), self.point(i + 1).unwrap())).collect()
    }
}

/// Outcome of checking d(T x_i, x_{i+1}) < delta.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapReport {
    #[serde(with = "rational::serde_q")]
    pub worst: Q,
    pub holds: bool,
}

/// Max over consecutive pairs of d(T x_i, x_{i+1}); sets `verified`.
pub fn verify_pseudo_orbit(system: &SystemHandle, po: &mut PseudoOrbit) -> Result<GapReport, ShadowError> {
    let pairs = po.pairs();
    if pairs.is_empty() {
        return Err(ShadowError::TooShort);
    }
    let mut worst = q_int(0);
    let mut undecided: Option<SpaceError> = None;
    for (a, b) in pairs {
        system.validate_point(a)?;
        system.validate_point(b)?;
        let ta = system.apply(a)?;
        let d = system.dist(&ta, b)?;
        if d.upper >= po.delta && d.lower < po.delta {
            undecided = Some(SpaceError::InsufficientWindow {
                lower: rational::fmt_q(&d.lower),
                upper: rational::fmt_q(&d.upper),
            });
        }
        if d.upper > worst {
            worst = d.upper;
        }
    }
    let holds = worst < po.delta;
    if !holds {
        if let Some(e) = undecided {
            return Err(e.into());
        }
    }
    po.verified = holds;
    Ok(GapReport { worst, holds })
}

/// Largest depth k with 2^(−k) ≤ eps.
fn depth_for(eps: &Q) -> i64 {
    ceil_log2_inv(eps).max(0)
}

/// δ such that every δ-pseudo-orbit is ε-traced by [`trace`].
pub fn modulus(system: &SystemHandle, eps: &Q) -> Result<Q, ShadowError> {
    if !eps.is_positive() {
        return Err(ShadowError::BadEpsilon);
    }
    match system {
        SystemHandle::Product(fs) => {
            let mut best: Option<Q> = None;
            for f in fs {
                let d = modulus(f, eps)?;
                best = Some(match best {
                    Some(b) if b <= d => b,
                    _ => d,
                });
            }
            best.ok_or_else(|| ShadowError::Unsupported("empty product".into()))
        }
        SystemHandle::Odometer(_) => Ok(pow2(-depth_for(eps))),
        SystemHandle::PLInterval(map) => interval_modulus(map, eps),
        _ => {
            let sft = system.as_sft().expect("symbolic kind");
            // diagonal construction: agreement on k + memory coordinates
            Ok(pow2(-(depth_for(eps) + sft.memory() as i64)))
        }
    }
}

// margin kept below the contraction bound of the inverse branches
const INTERVAL_SAFEGUARD: (i64, i64) = (15, 16);

fn interval_modulus(map: &PLMap, eps: &Q) -> Result<Q, ShadowError> {
    let lambda = match map.family() {
        Some(PlFamily::Tent { lambda }) | Some(PlFamily::CoreTent { lambda }) => lambda.clone(),
        Some(PlFamily::Delahaye { .. }) => return Err(ShadowError::Unsupported("Delahaye map".into())),
        None => return Err(ShadowError::Unsupported("piecewise-linear map outside the tent family".into())),
    };
    if lambda <= q_int(1) {
        return Err(ShadowError::Unsupported("slope at most 1".into()));
    }
    Ok(eps * (&lambda - q_int(1)) / &lambda * q_frac(INTERVAL_SAFEGUARD.0, INTERVAL_SAFEGUARD.1))
}

/// Whether the tracing guarantee covers every index or only a checked horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    Exact,
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracingCertificate {
    pub tracer: PointRep,
    #[serde(with = "rational::serde_q")]
    pub epsilon: Q,
    pub horizon: usize,
    pub guarantee: Guarantee,
    /// max over checked n of d(T^n y, x_n) (upper end of the bracket)
    #[serde(with = "rational::serde_q")]
    pub worst: Q,
}

/// Builds a tracer for a verified pseudo-orbit and checks it.
pub fn trace(system: &SystemHandle, po: &PseudoOrbit, eps: &Q) -> Result<TracingCertificate, ShadowError> {
    let mut po = po.clone();
    let gaps = verify_pseudo_orbit(system, &mut po)?;
    if !gaps.holds {
        return Err(ShadowError::NotVerified { worst: rational::fmt_q(&gaps.worst), delta: rational::fmt_q(&po.delta) });
    }
    let m = modulus(system, eps)?;
    if po.delta > m {
        return Err(ShadowError::DeltaTooLarge { delta: rational::fmt_q(&po.delta), modulus: rational::fmt_q(&m) });
    }
    let (tracer, guarantee) = build_tracer(system, &po, eps)?;
    let horizon = default_horizon(&po);
    let worst = tracing_error(system, &po, &tracer, horizon)?;
    Ok(TracingCertificate { tracer, epsilon: eps.clone(), horizon, guarantee, worst })
}

fn default_horizon(po: &PseudoOrbit) -> usize {
    if po.is_periodic() {
        po.points.len() + 2 * po.block.len()
    } else {
        po.points.len()
    }
}

/// Independent re-check: max_{n < horizon} d(T^n y, x_n).
pub fn tracing_error(system: &SystemHandle, po: &PseudoOrbit, tracer: &PointRep, horizon: usize) -> Result<Q, ShadowError> {
    let mut worst = q_int(0);
    let mut y = tracer.clone();
    for n in 0..horizon {
        let Some(x) = po.point(n) else { break };
        let d = system.dist(&y, x)?.upper;
        if d > worst {
            worst = d;
        }
        if n + 1 < horizon {
            y = system.apply(&y)?;
        }
    }
    Ok(worst)
}

impl TracingCertificate {
    /// Recomputes the error along the pseudo-orbit without trusting `worst`.
    pub fn reverify(&self, system: &SystemHandle, po: &PseudoOrbit) -> Result<bool, ShadowError> {
        Ok(tracing_error(system, po, &self.tracer, self.horizon)? < self.epsilon)
    }
}

fn build_tracer(system: &SystemHandle, po: &PseudoOrbit, eps: &Q) -> Result<(PointRep, Guarantee), ShadowError> {
    match system {
        SystemHandle::Product(fs) => {
            let mut parts = Vec::with_capacity(fs.len());
            let mut guarantee = Guarantee::Exact;
            for (k, f) in fs.iter().enumerate() {
                let project = |v: &[PointRep]| -> Result<Vec<PointRep>, ShadowError> {
                    v.iter()
                        .map(|x| match x {
                            PointRep::Tuple(xs) if xs.len() == fs.len() => Ok(xs[k].clone()),
                            other => Err(SpaceError::KindMismatch { system: "product", point: other.kind_name() }.into()),
                        })
                        .collect()
                };
                let sub = PseudoOrbit {
                    points: project(&po.points)?,
                    block: project(&po.block)?,
                    delta: po.delta.clone(),
                    verified: true,
                };
                let (t, g) = build_tracer(f, &sub, eps)?;
                if g == Guarantee::Finite {
                    guarantee = Guarantee::Finite;
                }
                parts.push(t);
            }
            Ok((PointRep::Tuple(parts), guarantee))
        }
        SystemHandle::Odometer(_) => {
            // δ-pseudo-orbits are exact orbits at the resolved levels
            let start = po.point(0).ok_or(ShadowError::TooShort)?.clone();
            Ok((start, Guarantee::Finite))
        }
        SystemHandle::PLInterval(map) => Ok((PointRep::Real(interval_tracer(map, po, eps)?), Guarantee::Finite)),
        _ => {
            let (_, two_sided, _) = system.symbolic_info().expect("symbolic kind");
            Ok((PointRep::Symbolic(diagonal_tracer(po, two_sided)?), Guarantee::Exact))
        }
    }
}

fn symbolic(x: &PointRep) -> Result<&SymbolicWindow, ShadowError> {
    x.as_symbolic().ok_or_else(|| SpaceError::KindMismatch { system: "shift", point: x.kind_name() }.into())
}

fn zeroth(x: &PointRep) -> Result<Symbol, ShadowError> {
    symbolic(x)?.get(0).ok_or_else(|| {
        ShadowError::Space(SpaceError::InsufficientWindow { lower: "0".into(), upper: "coordinate 0 unknown".into() })
    })
}

/// y_i = (x_i)_0; the tail continues as the last point (finite case) or
/// repeats the diagonal of the block (periodic case).
pub fn diagonal_tracer(po: &PseudoOrbit, two_sided: bool) -> Result<SymbolicWindow, ShadowError> {
    let first = po.point(0).ok_or(ShadowError::TooShort)?;
    let left = if two_sided && !po.points.is_empty() { Some(symbolic(first)?.normalize(true)) } else { None };
    if po.is_periodic() {
        let prefix: Vec<Symbol> = po.points.iter().map(zeroth).collect::<Result<_, _>>()?;
        let block: Vec<Symbol> = po.block.iter().map(zeroth).collect::<Result<_, _>>()?;
        let right = SymbolicWindow::periodic(block);
        return Ok(splice(left.as_ref(), &prefix, &right, two_sided));
    }
    let n = po.points.len();
    if n < 2 {
        return Err(ShadowError::TooShort);
    }
    let mid: Vec<Symbol> = po.points[..n - 1].iter().map(zeroth).collect::<Result<_, _>>()?;
    let last = symbolic(&po.points[n - 1])?.normalize(two_sided);
    Ok(splice(left.as_ref(), &mid, &last, two_sided))
}

/// The point equal to `left` below 0 (two-sided only), to `mid` on
/// 0..|mid|, and to `right` shifted by |mid| from there on.
pub fn splice(left: Option<&SymbolicWindow>, mid: &[Symbol], right: &SymbolicWindow, two_sided: bool) -> SymbolicWindow {
    let l = mid.len() as i64;
    let period = |w: &SymbolicWindow| match w.extension {
        Extension::PeriodicRepeat(p) => Some(p as u64),
        _ => None,
    };
    let right_p = period(right);
    let left_p = match left {
        Some(w) if two_sided => period(w),
        _ => Some(1),
    };
    let get = |i: i64| -> Option<Symbol> {
        if i < 0 {
            left.and_then(|w| w.get(i))
        } else if i < l {
            Some(mid[i as usize])
        } else {
            right.get(i - l)
        }
    };
    match (left_p, right_p) {
        (Some(pl), Some(pr)) if left.is_some() || !two_sided => {
            let p = rational::lcm_u64(pl, pr) as i64;
            let a = if two_sided { left.map_or(0, |w| w.lo.min(0)) - p } else { 0 };
            let b = (l + right.hi()).max(l) + p;
            let symbols: Vec<Symbol> = (a..b).map(|i| get(i).expect("determined")).collect();
            SymbolicWindow::new(a, symbols, Extension::PeriodicRepeat(p as usize))
        }
        (_, Some(pr)) if two_sided && left.is_none() => {
            // no left information: repeat the right rule on both sides
            let b = (l + right.hi()).max(l) + pr as i64;
            let symbols: Vec<Symbol> = (0..b).map(|i| get(i).expect("determined")).collect();
            let w = SymbolicWindow::new(0, symbols, Extension::PeriodicRepeat(pr as usize));
            if l == 0 {
                w
            } else {
                // left tail stays unknown
                SymbolicWindow::new(0, w.symbols, Extension::Unspecified)
            }
        }
        _ => {
            // keep the known stretch only
            let a = if two_sided { left.map_or(0, |w| w.lo.min(0)) } else { 0 };
            let mut symbols = Vec::new();
            let mut i = a;
            while let Some(s) = get(i) {
                symbols.push(s);
                i += 1;
                if i >= l + right.hi() {
                    break;
                }
            }
            SymbolicWindow::new(a, symbols, Extension::Unspecified)
        }
    }
}

/// Number of leading coordinates on which σ^n y and x_n agree, minimized over n.
pub fn agreement_depth(system: &SystemHandle, po: &PseudoOrbit, tracer: &PointRep, horizon: usize) -> Result<u32, ShadowError> {
    let mut depth = u32::MAX;
    let mut y = tracer.clone();
    for n in 0..horizon {
        let Some(x) = po.point(n) else { break };
        let d = system.dist(&y, x)?.upper;
        let k = if d.is_zero() { u32::MAX } else { (-rational::log2_floor(&d)) as u32 };
        depth = depth.min(k);
        y = system.apply(&y)?;
    }
    Ok(depth)
}

// closed-ball radius strictly inside eps
const BALL_SHRINK: (i64, i64) = (63, 64);

fn interval_point(x: &PointRep) -> Result<Q, ShadowError> {
    match x {
        PointRep::Real(q) => Ok(q.clone()),
        PointRep::Float(f) => rational::from_f64(*f).ok_or_else(|| SpaceError::InvalidPoint(format!("{f}")).into()),
        other => Err(SpaceError::KindMismatch { system: "pl_interval", point: other.kind_name() }.into()),
    }
}

/// Backward nesting J_i = B(x_i) ∩ T^(−1)(J_{i+1}); the tracer is the
/// midpoint of the leftmost component of J_0.
fn interval_tracer(map: &PLMap, po: &PseudoOrbit, eps: &Q) -> Result<Q, ShadowError> {
    // periodic pseudo-orbits are unrolled over a fixed number of blocks
    let n = if po.is_periodic() { po.points.len() + 8 * po.block.len() } else { po.points.len() };
    let r = eps * q_frac(BALL_SHRINK.0, BALL_SHRINK.1);
    let ball = |x: &Q| -> (Q, Q) {
        let lo = x - &r;
        let hi = x + &r;
        (rational::q_max(lo, q_int(0)), rational::q_min(hi, q_int(1)))
    };
    let mut current: Vec<(Q, Q)> = vec![ball(&interval_point(po.point(n - 1).unwrap())?)];
    for i in (0..n - 1).rev() {
        let (blo, bhi) = ball(&interval_point(po.point(i).unwrap())?);
        let mut next: Vec<(Q, Q)> = Vec::new();
        for (a, b) in &current {
            for (p, q) in map.preimage(a, b) {
                let lo = rational::q_max(p, blo.clone());
                let hi = rational::q_min(q, bhi.clone());
                if lo <= hi {
                    next.push((lo, hi));
                }
            }
        }
        next.sort();
        let mut merged: Vec<(Q, Q)> = Vec::new();
        for (p, q) in next {
            match merged.last_mut() {
                Some(last) if p <= last.1 => {
                    if q > last.1 {
                        last.1 = q;
                    }
                }
                _ => merged.push((p, q)),
            }
        }
        if merged.is_empty() {
            return Err(ShadowError::NoTracer { index: i });
        }
        current = merged;
    }
    let (a, b) = &current[0];
    Ok((a + b) / q_int(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_maps::tent;

    #[test]
    fn modulus_values() {
        assert_eq!(modulus(&SystemHandle::full_shift(2), &q_frac(1, 4)).unwrap(), q_frac(1, 8));
        assert_eq!(modulus(&SystemHandle::golden_mean(), &q_frac(1, 4)).unwrap(), q_frac(1, 8));
        let odo = SystemHandle::Odometer(crate::odometer::OdometerSpec::geometric(2, 4));
        assert_eq!(modulus(&odo, &q_frac(1, 8)).unwrap(), q_frac(1, 8));
        let prod = SystemHandle::Product(vec![SystemHandle::full_shift(2), odo]);
        assert_eq!(modulus(&prod, &q_frac(1, 4)).unwrap(), q_frac(1, 8));
    }

    #[test]
    fn shift_gap_example() {
        let s = SystemHandle::full_shift(2);
        let mut po = PseudoOrbit::finite(vec![PointRep::periodic(vec![0]), PointRep::periodic(vec![1])], q_frac(1, 2));
        let r = verify_pseudo_orbit(&s, &mut po).unwrap();
        assert_eq!(r.worst, q_int(1));
        assert!(!r.holds && !po.verified);
    }

    #[test]
    fn tent_example() {
        let s = SystemHandle::PLInterval(tent(&q_int(2)).unwrap());
        let pts = ["3/10", "61/100", "79/100"].iter().map(|t| PointRep::Real(rational::parse_q(t).unwrap())).collect();
        let mut po = PseudoOrbit::finite(pts, q_frac(2, 100));
        let r = verify_pseudo_orbit(&s, &mut po).unwrap();
        assert_eq!(r.worst, q_frac(1, 100));
        assert!(r.holds);
        let cert = trace(&s, &po, &q_frac(5, 100)).unwrap();
        assert!(cert.worst < q_frac(5, 100));
        let y = interval_point(&cert.tracer).unwrap();
        assert!(y >= q_frac(1, 4) && y <= q_frac(7, 20));
    }

    #[test]
    fn golden_periodic_trace() {
        let s = SystemHandle::golden_mean();
        // seven coordinates of (001)^∞ shifted by i, then zeros
        let block: Vec<PointRep> = (0..3)
            .map(|i| PointRep::Symbolic(SymbolicWindow::new(0, (i..i + 7).map(|j| u32::from(j % 3 == 2)).collect(), Extension::Zeros)))
            .collect();
        let po = PseudoOrbit::periodic(block, q_frac(1, 8));
        let cert = trace(&s, &po, &q_frac(1, 4)).unwrap();
        assert_eq!(cert.guarantee, Guarantee::Exact);
        let y = cert.tracer.as_symbolic().unwrap().normalize(false);
        assert_eq!(y.extension, Extension::PeriodicRepeat(3));
        assert!(cert.reverify(&s, &po).unwrap());
    }
}
