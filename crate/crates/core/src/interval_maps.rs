//! Piecewise-linear interval maps: tent family, tent cores, Delahaye's map.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, q_frac, q_int, Q};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("lambda = {0} outside [sqrt 2, 2]")]
    ParamRange(String),
    #[error("breakpoints must start at x = 0, end at x = 1 and increase strictly")]
    BadBreakpoints,
    #[error("map leaves [0, 1] at a breakpoint")]
    ImageOutOfRange,
    #[error("point {0} outside [0, 1]")]
    PointRange(String),
    #[error("level-1 table cannot be renormalized further")]
    LevelExhausted,
    #[error("renormalization needs a Delahaye table")]
    NotDelahaye,
    #[error("Delahaye level must be at least 1")]
    ZeroLevel,
}

/// Named members of the supported map families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PlFamily {
    Tent {
        #[serde(with = "rational::serde_q")]
        lambda: Q,
    },
    CoreTent {
        #[serde(with = "rational::serde_q")]
        lambda: Q,
    },
    Delahaye {
        level: u32,
    },
}

/// Continuous piecewise-linear self-map of [0, 1] given by its breakpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLMap {
    breakpoints: Vec<(Q, Q)>,
    family: Option<PlFamily>,
    /// beyond this x the table is a linear closure of infinitely many pieces
    truncated_from: Option<Q>,
}

impl PLMap {
    pub fn new(breakpoints: Vec<(Q, Q)>) -> Result<Self, IntervalError> {
        let zero = q_int(0);
        let one = q_int(1);
        if breakpoints.len() < 2 || breakpoints[0].0 != zero || breakpoints.last().unwrap().0 != one {
            return Err(IntervalError::BadBreakpoints);
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(IntervalError::BadBreakpoints);
        }
        if breakpoints.iter().any(|(_, y)| *y < zero || *y > one) {
            return Err(IntervalError::ImageOutOfRange);
        }
        Ok(PLMap { breakpoints, family: None, truncated_from: None })
    }

    pub fn breakpoints(&self) -> &[(Q, Q)] {
        &self.breakpoints
    }

    pub fn family(&self) -> Option<&PlFamily> {
        self.family.as_ref()
    }

    pub fn truncated_from(&self) -> Option<&Q> {
        self.truncated_from.as_ref()
    }

    pub fn segments(&self) -> impl Iterator<Item = (&(Q, Q), &(Q, Q))> {
        self.breakpoints.iter().zip(self.breakpoints.iter().skip(1))
    }

    fn segment_index(&self, x: &Q) -> usize {
        // last breakpoint with bx <= x, clamped to a real segment
        let i = self.breakpoints.partition_point(|(bx, _)| bx <= x);
        i.saturating_sub(1).min(self.breakpoints.len() - 2)
    }

    /// Exact evaluation.
    pub fn eval(&self, x: &Q) -> Result<Q, IntervalError> {
        if *x < q_int(0) || *x > q_int(1) {
            return Err(IntervalError::PointRange(rational::fmt_q(x)));
        }
        let i = self.segment_index(x);
        let (x0, y0) = &self.breakpoints[i];
        let (x1, y1) = &self.breakpoints[i + 1];
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// Binary64 evaluation, clamped into [0, 1].
    pub fn eval_f64(&self, x: f64) -> f64 {
        let xs = x.clamp(0.0, 1.0);
        let i = self
            .breakpoints
            .partition_point(|(bx, _)| rational::to_f64(bx) <= xs)
            .saturating_sub(1)
            .min(self.breakpoints.len() - 2);
        let (x0, y0) = (rational::to_f64(&self.breakpoints[i].0), rational::to_f64(&self.breakpoints[i].1));
        let (x1, y1) = (rational::to_f64(&self.breakpoints[i + 1].0), rational::to_f64(&self.breakpoints[i + 1].1));
        (y0 + (y1 - y0) * (xs - x0) / (x1 - x0)).clamp(0.0, 1.0)
    }

    /// Slopes of every segment.
    pub fn slopes(&self) -> Vec<Q> {
        self.segments().map(|((x0, y0), (x1, y1))| (y1 - y0) / (x1 - x0)).collect()
    }

    /// Does x lie in the truncated zone of the table?
    pub fn in_truncated_zone(&self, x: &Q) -> bool {
        self.truncated_from.as_ref().is_some_and(|t| x > t && *x < q_int(1))
    }

    /// Orbit with a flag raised if any point enters the truncated zone.
    pub fn orbit_flagged(&self, x: &Q, n: usize) -> Result<(Vec<Q>, TruncationFlag), IntervalError> {
        let mut out = Vec::with_capacity(n);
        let mut flag = TruncationFlag::default();
        let mut cur = x.clone();
        for i in 0..n {
            if self.in_truncated_zone(&cur) && flag.first_index.is_none() {
                flag.first_index = Some(i);
            }
            let next = self.eval(&cur)?;
            out.push(std::mem::replace(&mut cur, next));
        }
        Ok((out, flag))
    }

    /// Preimage of [a, b] as a sorted list of disjoint closed intervals.
    pub fn preimage(&self, a: &Q, b: &Q) -> Vec<(Q, Q)> {
        let mut parts: Vec<(Q, Q)> = Vec::new();
        for ((x0, y0), (x1, y1)) in self.segments() {
            let (lo_y, hi_y) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
            let lo = if a > lo_y { a } else { lo_y };
            let hi = if b < hi_y { b } else { hi_y };
            if lo > hi {
                continue;
            }
            if y0 == y1 {
                parts.push((x0.clone(), x1.clone()));
                continue;
            }
            let inv = |y: &Q| x0 + (x1 - x0) * (y - y0) / (y1 - y0);
            let (p, q) = (inv(lo), inv(hi));
            parts.push(if p <= q { (p, q) } else { (q, p) });
        }
        parts.sort();
        let mut merged: Vec<(Q, Q)> = Vec::new();
        for (p, q) in parts {
            match merged.last_mut() {
                Some(last) if p <= last.1 => {
                    if q > last.1 {
                        last.1 = q;
                    }
                }
                _ => merged.push((p, q)),
            }
        }
        merged
    }

    /// Breakpoint table of f∘g on [0, 1] (requires nothing beyond continuity).
    pub fn compose(&self, g: &PLMap) -> PLMap {
        // breakpoints of g plus g-preimages of self's breakpoints
        let mut xs: Vec<Q> = g.breakpoints.iter().map(|(x, _)| x.clone()).collect();
        for (bx, _) in &self.breakpoints {
            for (p, q) in g.preimage(bx, bx) {
                xs.push(p);
                xs.push(q);
            }
        }
        xs.sort();
        xs.dedup();
        let pts: Vec<(Q, Q)> = xs
            .into_iter()
            .map(|x| {
                let y = self.eval(&g.eval(&x).unwrap()).unwrap();
                (x, y)
            })
            .collect();
        PLMap { breakpoints: simplify_collinear(pts), family: None, truncated_from: None }
    }
}

/// Records the first orbit index inside a truncated zone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TruncationFlag {
    pub first_index: Option<usize>,
}

fn simplify_collinear(pts: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    let mut out: Vec<(Q, Q)> = Vec::with_capacity(pts.len());
    for p in pts {
        while out.len() >= 2 {
            let (a, b) = (&out[out.len() - 2], &out[out.len() - 1]);
            let s1 = (&b.1 - &a.1) / (&b.0 - &a.0);
            let s2 = (&p.1 - &b.1) / (&p.0 - &b.0);
            if s1 == s2 {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

fn check_lambda(lambda: &Q) -> Result<(), IntervalError> {
    // λ ∈ [√2, 2] decided exactly via λ² ≥ 2
    if lambda.is_negative() || lambda * lambda < q_int(2) || *lambda > q_int(2) {
        return Err(IntervalError::ParamRange(rational::fmt_q(lambda)));
    }
    Ok(())
}

/// Tent map f_λ(x) = λx on [0, ½], λ(1 − x) on [½, 1].
pub fn tent(lambda: &Q) -> Result<PLMap, IntervalError> {
    check_lambda(lambda)?;
    let half = q_frac(1, 2);
    let mut m = PLMap::new(vec![(q_int(0), q_int(0)), (half.clone(), lambda * &half), (q_int(1), q_int(0))])?;
    m.family = Some(PlFamily::Tent { lambda: lambda.clone() });
    Ok(m)
}

/// Tent restricted to its core and rescaled to [0, 1]: peak at (λ−1)/λ.
pub fn core_tent(lambda: &Q) -> Result<PLMap, IntervalError> {
    check_lambda(lambda)?;
    let two = q_int(2);
    let peak = (lambda - Q::one()) / lambda;
    let mut m = PLMap::new(vec![(q_int(0), &two - lambda), (peak, q_int(1)), (q_int(1), q_int(0))])?;
    m.family = Some(PlFamily::CoreTent { lambda: lambda.clone() });
    Ok(m)
}

/// Delahaye's map truncated after `level` breakpoint pairs, closed linearly to (1, 0).
pub fn delahaye(level: u32) -> Result<PLMap, IntervalError> {
    if level == 0 {
        return Err(IntervalError::ZeroLevel);
    }
    let mut pts = vec![(q_int(0), q_frac(2, 3))];
    let mut p3 = Q::one();
    for _ in 1..=level {
        let prev = p3.clone(); // 3^(n-1)
        p3 *= q_int(3); // 3^n
        pts.push((q_int(1) - q_int(2) / &p3, Q::one() / &prev));
        pts.push((q_int(1) - Q::one() / &p3, q_int(2) / (&p3 * q_int(3))));
    }
    let truncated_from = pts.last().unwrap().0.clone();
    pts.push((q_int(1), q_int(0)));
    let mut m = PLMap::new(pts)?;
    m.family = Some(PlFamily::Delahaye { level });
    m.truncated_from = Some(truncated_from);
    Ok(m)
}

/// The fixed point of F_D on [1/3, 2/3], solved exactly on that segment.
pub fn delahaye_fixed_point(map: &PLMap) -> Option<Q> {
    let third = q_frac(1, 3);
    let two_thirds = q_frac(2, 3);
    for ((x0, y0), (x1, y1)) in map.segments() {
        if *x0 >= third && *x1 <= two_thirds {
            // y0 + s (x − x0) = x
            let s = (y1 - y0) / (x1 - x0);
            if s == Q::one() {
                continue;
            }
            let x = (y0 - &s * x0) / (Q::one() - &s);
            if &x >= x0 && &x <= x1 {
                return Some(x);
            }
        }
    }
    None
}

/// F² on [0, 1/3], rescaled affinely to [0, 1].
pub fn renormalize_square(map: &PLMap) -> Result<PLMap, IntervalError> {
    let level = match map.family {
        Some(PlFamily::Delahaye { level }) => level,
        _ => return Err(IntervalError::NotDelahaye),
    };
    if level <= 1 {
        return Err(IntervalError::LevelExhausted);
    }
    let sq = map.compose(map);
    let third = q_frac(1, 3);
    let three = q_int(3);
    let mut pts: Vec<(Q, Q)> = sq
        .breakpoints
        .iter()
        .filter(|(x, _)| *x <= third)
        .map(|(x, y)| (x * &three, y * &three))
        .collect();
    if pts.last().map(|(x, _)| x) != Some(&q_int(1)) {
        let y = sq.eval(&third)? * &three;
        pts.push((q_int(1), y));
    }
    let mut out = PLMap::new(simplify_collinear(pts))?;
    out.family = Some(PlFamily::Delahaye { level: level - 1 });
    out.truncated_from = Some(q_int(1) - Q::one() / num_traits::pow(q_int(3), (level - 1) as usize));
    Ok(out)
}

/// Do two maps agree at every breakpoint of either table?
pub fn agree_on_breakpoints(f: &PLMap, g: &PLMap) -> bool {
    f.breakpoints
        .iter()
        .chain(g.breakpoints.iter())
        .all(|(x, _)| f.eval(x).ok() == g.eval(x).ok())
}

/// Iterations until x leaves (1/3, 2/3), or None within `max_iter`.
pub fn escape_time(map: &PLMap, x: &Q, max_iter: usize) -> Option<usize> {
    let third = q_frac(1, 3);
    let two_thirds = q_frac(2, 3);
    let mut cur = x.clone();
    for n in 0..=max_iter {
        if cur <= third || cur >= two_thirds {
            return Some(n);
        }
        cur = map.eval(&cur).ok()?;
    }
    None
}

/// Smallest k such that every dyadic interval of length 2^-depth maps onto [0,1]
/// within k iterates, if it happens within `max_iter`.
pub fn covering_depth(map: &PLMap, depth: u32, max_iter: usize) -> Option<usize> {
    let n = 1u64 << depth;
    let mut worst = 0;
    for i in 0..n {
        let mut lo = q_frac(i as i64, n as i64);
        let mut hi = q_frac(i as i64 + 1, n as i64);
        let mut k = 0;
        loop {
            if lo.is_zero() && hi == q_int(1) {
                break;
            }
            if k >= max_iter {
                return None;
            }
            let (a, b) = image_of_interval(map, &lo, &hi);
            lo = a;
            hi = b;
            k += 1;
        }
        worst = worst.max(k);
    }
    Some(worst)
}

/// Image of [lo, hi] (an interval, by continuity).
pub fn image_of_interval(map: &PLMap, lo: &Q, hi: &Q) -> (Q, Q) {
    let mut vals = vec![map.eval(lo).unwrap(), map.eval(hi).unwrap()];
    for (x, y) in &map.breakpoints {
        if x > lo && x < hi {
            vals.push(y.clone());
        }
    }
    let min = vals.iter().min().unwrap().clone();
    let max = vals.iter().max().unwrap().clone();
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_values() {
        let t = tent(&q_int(2)).unwrap();
        assert_eq!(t.eval(&q_frac(3, 10)).unwrap(), q_frac(3, 5));
        let core = core_tent(&q_int(2)).unwrap();
        assert_eq!(core.eval(&q_frac(1, 4)).unwrap(), q_frac(1, 2));
        assert_eq!(core.eval(&q_frac(3, 4)).unwrap(), q_frac(1, 2));
        let c = core_tent(&q_frac(3, 2)).unwrap();
        assert_eq!(c.eval(&q_frac(1, 3)).unwrap(), q_int(1));
        assert_eq!(c.eval(&q_int(1)).unwrap(), q_int(0));
        assert!(tent(&q_frac(7, 5)).is_err());
        assert!(tent(&q_frac(17, 12)).is_ok());
    }

    #[test]
    fn delahaye_table() {
        let f = delahaye(3).unwrap();
        assert_eq!(f.eval(&q_int(0)).unwrap(), q_frac(2, 3));
        assert_eq!(f.eval(&q_int(1)).unwrap(), q_int(0));
        assert_eq!(f.eval(&q_frac(1, 3)).unwrap(), q_int(1));
        assert_eq!(delahaye_fixed_point(&f), Some(q_frac(8, 15)));
        let r = renormalize_square(&f).unwrap();
        assert!(agree_on_breakpoints(&r, &delahaye(2).unwrap()));
        assert_eq!(renormalize_square(&delahaye(1).unwrap()), Err(IntervalError::LevelExhausted));
    }

    #[test]
    fn preimage_of_tent() {
        let t = tent(&q_int(2)).unwrap();
        let pre = t.preimage(&q_frac(1, 2), &q_int(1));
        assert_eq!(pre, vec![(q_frac(1, 4), q_frac(3, 4))]);
        let pre = t.preimage(&q_frac(1, 2), &q_frac(3, 4));
        assert_eq!(pre, vec![(q_frac(1, 4), q_frac(3, 8)), (q_frac(5, 8), q_frac(3, 4))]);
    }
}
