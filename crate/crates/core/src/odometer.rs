//! Odometers (adding machines) G_s with the +1 map.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, q_frac, q_int, Q};
use crate::spaces::{PointRep, SpaceError, SystemHandle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdometerError {
    #[error("period sequence must be nonempty and start at s_1 >= 1")]
    EmptyPeriods,
    #[error("s_{level} = {next} is not a multiple of s_{prev_level} = {prev}")]
    NotDivisible { prev_level: usize, prev: u64, level: usize, next: u64 },
    #[error("digit {digit} at level {level} is outside Z_{period}")]
    DigitRange { level: usize, digit: u64, period: u64 },
    #[error("digit at level {level} is inconsistent with the level above")]
    Incompatible { level: usize },
    #[error("level {level} is beyond the materialized {available} levels")]
    LevelRange { level: usize, available: usize },
    #[error("residue {residue} outside Z_{period}")]
    ResidueRange { residue: u64, period: u64 },
    #[error("horizon {horizon} too short for period {period}")]
    HorizonTooShort { horizon: usize, period: u64 },
    #[error(transparent)]
    Space(#[from] Box<SpaceError>),
}

/// Default number of materialized levels for generated sequences.
pub const DEFAULT_LEVELS: usize = 12;

/// Period sequence s_1 | s_2 | … of an odometer, finitely materialized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OdometerSpec {
    pub periods: Vec<u64>,
}

impl OdometerSpec {
    pub fn new(periods: Vec<u64>) -> Result<Self, OdometerError> {
        if periods.is_empty() || periods[0] == 0 {
            return Err(OdometerError::EmptyPeriods);
        }
        for (i, w) in periods.windows(2).enumerate() {
            if w[1] == 0 || w[1] % w[0] != 0 {
                return Err(OdometerError::NotDivisible { prev_level: i + 1, prev: w[0], level: i + 2, next: w[1] });
            }
        }
        Ok(OdometerSpec { periods })
    }

    /// s_n = base^n for n = 1..=levels, e.g. the dyadic odometer (2, 4, 8, …).
    pub fn geometric(base: u64, levels: usize) -> Self {
        let periods = (1..=levels as u32).map(|n| base.pow(n)).collect();
        OdometerSpec::new(periods).expect("geometric periods divide")
    }

    pub fn levels(&self) -> usize {
        self.periods.len()
    }

    /// s_n for 1-based n.
    pub fn period(&self, n: usize) -> Result<u64, OdometerError> {
        self.periods
            .get(n.wrapping_sub(1))
            .copied()
            .ok_or(OdometerError::LevelRange { level: n, available: self.periods.len() })
    }

    /// The point whose projection to every level is `k mod s_n`.
    pub fn point_of(&self, k: u64) -> DigitVector {
        DigitVector { digits: self.periods.iter().map(|&s| k % s).collect() }
    }

    pub fn zero(&self) -> DigitVector {
        self.point_of(0)
    }

    pub fn validate(&self, x: &DigitVector) -> Result<(), OdometerError> {
        if x.digits.len() > self.periods.len() {
            return Err(OdometerError::LevelRange { level: x.digits.len(), available: self.periods.len() });
        }
        for (i, (&d, &s)) in x.digits.iter().zip(&self.periods).enumerate() {
            if d >= s {
                return Err(OdometerError::DigitRange { level: i + 1, digit: d, period: s });
            }
            if i + 1 < x.digits.len() && x.digits[i + 1] % s != d {
                return Err(OdometerError::Incompatible { level: i + 1 });
            }
        }
        Ok(())
    }
}

/// Finite prefix (x_1, …, x_N) of an inverse-limit point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DigitVector {
    pub digits: Vec<u64>,
}

impl DigitVector {
    pub fn new(digits: Vec<u64>) -> Self {
        DigitVector { digits }
    }

    pub fn level(&self) -> usize {
        self.digits.len()
    }
}

/// Digitwise (x_n + m) mod s_n; negative m subtracts.
pub fn odometer_add(spec: &OdometerSpec, x: &DigitVector, m: i128) -> DigitVector {
    let digits = x
        .digits
        .iter()
        .zip(&spec.periods)
        .map(|(&d, &s)| {
            let s = s as i128;
            ((d as i128 + m.mod_floor(&s)).mod_floor(&s)) as u64
        })
        .collect();
    DigitVector { digits }
}

/// Haar mass of the level-n cylinder of residue r: 1/s_n.
pub fn haar_cylinder(spec: &OdometerSpec, n: usize, r: u64) -> Result<Q, OdometerError> {
    let s = spec.period(n)?;
    if r >= s {
        return Err(OdometerError::ResidueRange { residue: r, period: s });
    }
    Ok(q_frac(1, s as i64))
}

/// Stages (n_k, eps_k): claimed d(T^(j·n_k) z, z) <= eps_k for all j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCertificate {
    pub stages: Vec<RecurrenceStage>,
    pub point: PointRep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceStage {
    pub period: u64,
    #[serde(with = "rational::serde_q")]
    pub bound: Q,
}

/// Result of re-checking a certificate along j = 1..=returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceAudit {
    pub returns_checked: usize,
    #[serde(with = "rational::serde_q_vec")]
    pub worst_per_stage: Vec<Q>,
    pub holds: bool,
}

impl RecurrenceCertificate {
    /// Independently recompute d(T^(j n_k) z, z) for j ≤ returns at every stage.
    pub fn verify(&self, system: &SystemHandle, returns: usize) -> Result<RecurrenceAudit, SpaceError> {
        let mut worst_per_stage = Vec::with_capacity(self.stages.len());
        let mut holds = true;
        for w in self.stages.windows(2) {
            // bounds must decrease strictly
            if w[1].bound >= w[0].bound && w[0].bound > q_int(0) {
                holds = false;
            }
        }
        for stage in &self.stages {
            let mut worst = q_int(0);
            let mut y = self.point.clone();
            for _ in 0..returns {
                y = system.apply_n(&y, stage.period)?;
                let d = system.dist(&y, &self.point)?.upper;
                if d > worst {
                    worst = d;
                }
            }
            if worst > stage.bound {
                holds = false;
            }
            worst_per_stage.push(worst);
        }
        Ok(RecurrenceAudit { returns_checked: returns, worst_per_stage, holds })
    }
}

/// Diameters of the classes {T^(i+jp) z} and their mutual separation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub period: u64,
    pub horizon: usize,
    #[serde(with = "rational::serde_q_vec")]
    pub diameters: Vec<Q>,
    #[serde(with = "rational::serde_q")]
    pub max_diameter: Q,
    #[serde(with = "rational::serde_q")]
    pub separation: Q,
    /// max diameter <= 1/p and separation > 0
    pub od_member: bool,
}

// classes larger than this are audited against a deterministic sample
const CLASS_SAMPLE: usize = 96;

/// Audit the p-periodic decomposition of the orbit of z over `horizon` steps.
pub fn periodic_decomposition(
    system: &SystemHandle,
    z: &PointRep,
    p: u64,
    horizon: usize,
) -> Result<DecompositionReport, OdometerError> {
    if p == 0 || (horizon as u64) < p {
        return Err(OdometerError::HorizonTooShort { horizon, period: p });
    }
    let orbit = system.orbit_segment(z, horizon).map_err(|e| OdometerError::Space(Box::new(e)))?;
    let mut classes: Vec<Vec<&PointRep>> = vec![Vec::new(); p as usize];
    for (t, x) in orbit.iter().enumerate() {
        classes[t % p as usize].push(x);
    }
    for c in classes.iter_mut() {
        if c.len() > CLASS_SAMPLE {
            let step = c.len().div_ceil(CLASS_SAMPLE);
            *c = c.iter().step_by(step).copied().collect();
        }
    }
    let d = |a: &PointRep, b: &PointRep| -> Result<Q, OdometerError> {
        Ok(system.dist(a, b).map_err(|e| OdometerError::Space(Box::new(e)))?.upper)
    };
    let mut diameters = Vec::with_capacity(classes.len());
    for c in &classes {
        let mut diam = q_int(0);
        for i in 0..c.len() {
            for j in (i + 1)..c.len() {
                let v = d(c[i], c[j])?;
                if v > diam {
                    diam = v;
                }
            }
        }
        diameters.push(diam);
    }
    let mut separation: Option<Q> = None;
    for a in 0..classes.len() {
        for b in (a + 1)..classes.len() {
            for x in &classes[a] {
                for y in &classes[b] {
                    let v = d(x, y)?;
                    if separation.as_ref().map_or(true, |s| v < *s) {
                        separation = Some(v);
                    }
                }
            }
        }
    }
    // a single class has nothing to be separated from
    let separation = separation.unwrap_or_else(|| q_int(1));
    let max_diameter = diameters.iter().max().cloned().unwrap_or_else(|| q_int(0));
    let od_member = max_diameter <= q_frac(1, p as i64) && separation > q_int(0);
    Ok(DecompositionReport { period: p, horizon, diameters, max_diameter, separation, od_member })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_examples() {
        let s = OdometerSpec::new(vec![2, 4, 8]).unwrap();
        let x = DigitVector::new(vec![1, 1, 1]);
        assert_eq!(odometer_add(&s, &x, 1).digits, vec![0, 2, 2]);
        assert_eq!(odometer_add(&s, &x, 8), x);
        let s = OdometerSpec::new(vec![3, 6]).unwrap();
        assert_eq!(odometer_add(&s, &DigitVector::new(vec![2, 5]), 2).digits, vec![1, 1]);
        let all_max = DigitVector::new(vec![1, 3, 7]);
        let s = OdometerSpec::geometric(2, 3);
        assert_eq!(odometer_add(&s, &all_max, 1).digits, vec![0, 0, 0]);
        assert_eq!(odometer_add(&s, &all_max, -8), all_max);
    }

    #[test]
    fn haar_masses() {
        let s = OdometerSpec::new(vec![2, 4]).unwrap();
        assert_eq!(haar_cylinder(&s, 1, 0).unwrap(), q_frac(1, 2));
        assert_eq!(haar_cylinder(&s, 2, 3).unwrap(), q_frac(1, 4));
        let total: Q = (0..4).map(|r| haar_cylinder(&s, 2, r).unwrap()).sum();
        assert_eq!(total, q_int(1));
        assert!(haar_cylinder(&s, 2, 4).is_err());
    }

    #[test]
    fn validation() {
        assert!(OdometerSpec::new(vec![2, 3]).is_err());
        let s = OdometerSpec::new(vec![2, 4]).unwrap();
        assert!(s.validate(&DigitVector::new(vec![1, 3])).is_ok());
        assert!(s.validate(&DigitVector::new(vec![0, 3])).is_err());
    }
}
