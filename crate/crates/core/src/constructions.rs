//! Finite-stage versions of the near-periodic refinement, the odometer point,
//! the measure approximation by an odometer, and the entropy-controlled
//! approximation built from separated block families.
//!
//! Every construction returns the point it built together with a report
//! whose entries are recomputed from that point, never from intermediate
//! state.

use std::sync::Arc;

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::entropy::{self, EntropyError, EntropyRow, Pool};
use crate::measures::{self, empirical, integrals, mix, DiscreteMeasure, MeasureError, Part, TestFamily};
use crate::odometer::{OdometerError, RecurrenceCertificate, RecurrenceStage};
use crate::rational::{self, ceil_log2_inv, lcm_u64, q_frac, q_int, Q};
use crate::shadowing::{self, PseudoOrbit, ShadowError};
use crate::spaces::{PointRep, SpaceError, Symbol, SymbolicWindow, SystemHandle};
use crate::subshift::{Sft, SubshiftError, ToeplitzSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no tracer: {0}")]
    NoTracer(String),
    #[error("no connector from vertex {from} to vertex {to}")]
    NoConnector { from: String, to: String },
    #[error("inequality {inequality} missed: value {value} is not below {bound}")]
    ToleranceMiss { inequality: String, value: String, bound: String },
    #[error("target entropy {target} not reachable: {reason}")]
    CNotReachable { target: f64, reason: String },
    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),
    #[error("Toeplitz skeleton certifies {have}, needs more than {need}")]
    ToeplitzEntropyShortfall { need: f64, have: f64 },
    #[error("diameter condition violated: {0}")]
    DiameterViolation(String),
    #[error("certificate did not re-verify: {0}")]
    CertificateFailed(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Shadow(#[from] ShadowError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Subshift(#[from] SubshiftError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Odometer(#[from] OdometerError),
}

type Result<T> = std::result::Result<T, ConstructionError>;

/// One inequality of a proof chain with the value the run achieved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub tag: String,
    pub statement: String,
    #[serde(with = "rational::serde_q")]
    pub value: Q,
    #[serde(with = "rational::serde_q")]
    pub bound: Q,
    /// value < bound (or ≤ where the chain allows equality)
    pub holds: bool,
}

impl Inequality {
    fn strict(tag: &str, statement: &str, value: Q, bound: Q) -> Self {
        let holds = value < bound;
        Inequality { tag: tag.into(), statement: statement.into(), value, bound, holds }
    }

    fn weak(tag: &str, statement: &str, value: Q, bound: Q) -> Self {
        let holds = value <= bound;
        Inequality { tag: tag.into(), statement: statement.into(), value, bound, holds }
    }

    fn miss(&self) -> ConstructionError {
        ConstructionError::ToleranceMiss {
            inequality: self.tag.clone(),
            value: rational::fmt_q(&self.value),
            bound: rational::fmt_q(&self.bound),
        }
    }
}

/// A measure with a point generic for it (exactly, for periodic points).
#[derive(Debug, Clone)]
pub struct Component {
    pub measure: DiscreteMeasure,
    pub generic: PointRep,
    pub weight: Q,
}

// ---------------------------------------------------------------------------
// schedules

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// ε_1 = ε/4, ε_{k+1} = ε_k/4, δ_k = modulus(ε_k)
    Periodic,
    /// ε_{k+1} = ε_k − 2η_k, η_{k+1} = η_k/8, λ_k = η/4^k, δ_k = modulus(η_k/2)
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSchedule {
    pub mode: ScheduleMode,
    #[serde(with = "rational::serde_q_vec")]
    pub eps_seq: Vec<Q>,
    /// one entry more than the stages, so stage k can look at δ_{k+1}
    #[serde(with = "rational::serde_q_vec")]
    pub delta_seq: Vec<Q>,
    #[serde(with = "rational::serde_q_vec")]
    pub eta_seq: Vec<Q>,
    #[serde(with = "rational::serde_q_vec")]
    pub lambda_seq: Vec<Q>,
    #[serde(with = "rational::serde_q_vec")]
    pub xi_seq: Vec<Q>,
    #[serde(with = "rational::serde_q")]
    pub eta: Q,
}

impl StageSchedule {
    pub fn periodic(system: &SystemHandle, eps: &Q, stages: usize) -> Result<Self> {
        if stages == 0 || !eps.is_positive() {
            return Err(ConstructionError::ScheduleInfeasible("need ε > 0 and at least one stage".into()));
        }
        let mut eps_seq = vec![eps / q_int(4)];
        for k in 1..=stages {
            let next = &eps_seq[k - 1] / q_int(4);
            eps_seq.push(next);
        }
        let delta_seq = eps_seq.iter().map(|e| shadowing::modulus(system, e)).collect::<std::result::Result<Vec<_>, _>>()?;
        eps_seq.truncate(stages);
        let xi_seq = delta_seq[1..].to_vec();
        let s = StageSchedule {
            mode: ScheduleMode::Periodic,
            eps_seq,
            delta_seq,
            eta_seq: Vec::new(),
            lambda_seq: Vec::new(),
            xi_seq,
            eta: q_int(0),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn entropy(system: &SystemHandle, eps: &Q, eta: &Q, stages: usize) -> Result<Self> {
        if stages == 0 || !eps.is_positive() || !eta.is_positive() {
            return Err(ConstructionError::ScheduleInfeasible("need ε, η > 0 and at least one stage".into()));
        }
        let mut eps_seq = vec![eps.clone()];
        let mut eta_seq = vec![eta.clone()];
        let mut lambda_seq = vec![eta / q_int(4)];
        for k in 1..=stages {
            let e = &eps_seq[k - 1] - q_int(2) * &eta_seq[k - 1];
            eps_seq.push(e);
            let h = &eta_seq[k - 1] / q_int(8);
            eta_seq.push(h);
            let l = &lambda_seq[k - 1] / q_int(4);
            lambda_seq.push(l);
        }
        let delta_seq = eta_seq
            .iter()
            .map(|h| shadowing::modulus(system, &(h / q_int(2))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let xi_seq: Vec<Q> = (0..stages)
            .map(|k| rational::q_min(rational::q_min(lambda_seq[k].clone(), delta_seq[k + 1].clone()), eta_seq[k + 1].clone()))
            .collect();
        eps_seq.truncate(stages);
        eta_seq.truncate(stages + 1);
        lambda_seq.truncate(stages);
        let s = StageSchedule {
            mode: ScheduleMode::Entropy,
            eps_seq,
            delta_seq,
            eta_seq,
            lambda_seq,
            xi_seq,
            eta: eta.clone(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn stages(&self) -> usize {
        self.eps_seq.len()
    }

    /// Π_k (1 − λ_k), exactly.
    pub fn lambda_product(&self) -> Q {
        self.lambda_seq.iter().fold(q_int(1), |acc, l| acc * (q_int(1) - l))
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .eps_seq
            .iter()
            .chain(&self.delta_seq)
            .chain(&self.eta_seq)
            .chain(&self.lambda_seq)
            .chain(&self.xi_seq);
        if let Some(bad) = all.into_iter().find(|q| !q.is_positive()) {
            return Err(ConstructionError::ScheduleInfeasible(format!("non-positive entry {}", rational::fmt_q(bad))));
        }
        if self.mode == ScheduleMode::Entropy && self.lambda_product() <= q_int(1) - &self.eta {
            return Err(ConstructionError::ScheduleInfeasible(format!(
                "product of (1 − λ_k) is {} ≤ 1 − η",
                rational::fmt_q(&self.lambda_product())
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// near-periodic refinement and the odometer point

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearPeriodic {
    pub point: PointRep,
    pub period: u64,
    #[serde(with = "rational::serde_q")]
    pub delta: Q,
    /// d(T^period x′, x′)
    #[serde(with = "rational::serde_q")]
    pub gap: Q,
    /// max over t < horizon of d(T^t x′, T^(t mod n) x)
    #[serde(with = "rational::serde_q")]
    pub worst_shadow: Q,
    pub horizon: usize,
}

fn symbolic_of(x: &PointRep) -> Result<&SymbolicWindow> {
    x.as_symbolic().ok_or_else(|| ConstructionError::Precondition(format!("expected a symbolic point, got {}", x.kind_name())))
}

fn known(w: &SymbolicWindow, a: i64, b: i64) -> Result<Vec<Symbol>> {
    w.slice(a, b).ok_or_else(|| {
        SpaceError::InsufficientWindow { lower: "0".into(), upper: format!("coordinates {a}..{b} unknown") }.into()
    })
}

// cyclic admissibility of block^∞
fn cyclic_admissible(sft: &Sft, block: &[Symbol]) -> Result<bool> {
    if block.is_empty() {
        return Ok(false);
    }
    let reps = sft.order().div_ceil(block.len()) + 1;
    Ok(sft.is_admissible(&block.repeat(reps))?)
}

fn refine_inner(system: &SystemHandle, x: &PointRep, n: u64, xi: &Q) -> Result<(PointRep, u64)> {
    match (system, x) {
        (SystemHandle::Product(fs), PointRep::Tuple(xs)) => {
            let mut parts = Vec::with_capacity(fs.len());
            let mut period = n;
            for (f, xi_) in fs.iter().zip(xs) {
                let (p, np) = refine_inner(f, xi_, n, xi)?;
                period = lcm_u64(period, np);
                parts.push(p);
            }
            Ok((PointRep::Tuple(parts), period))
        }
        (SystemHandle::Odometer(spec), PointRep::Digits(_)) => {
            // x itself is regularly recurrent; only the return time grows
            let mut period = n;
            let mut level = 1;
            while system.dist(&system.apply_n(x, period)?, x)?.upper >= *xi {
                if level > spec.levels() {
                    return Err(ConstructionError::NoTracer("odometer levels exhausted before ξ".into()));
                }
                period = lcm_u64(period, spec.period(level)?);
                level += 1;
            }
            Ok((x.clone(), period))
        }
        (_, PointRep::Symbolic(w)) if system.is_symbolic() => {
            // the tracer set of the periodic pseudo-orbit is a single point here
            let sft = system.as_sft().expect("symbolic");
            let block = known(w, 0, n as i64)?;
            if !cyclic_admissible(&sft, &block)? {
                return Err(ConstructionError::NoTracer("periodic continuation of the first n symbols is not admissible".into()));
            }
            Ok((PointRep::periodic(block), n))
        }
        (SystemHandle::PLInterval(_), _) => Err(ConstructionError::Unsupported("interval maps have no exact periodic tracer here".into())),
        _ => Err(SpaceError::KindMismatch { system: system.kind_name(), point: x.kind_name() }.into()),
    }
}

/// From a point with d(T^n x, x) < modulus(ε), a point x′ and a multiple n′
/// of n with d(T^n′ x′, x′) < ξ whose orbit ε-follows the first n steps of
/// x periodically.
pub fn near_periodic_refine(system: &SystemHandle, x: &PointRep, n: u64, eps: &Q, xi: &Q) -> Result<NearPeriodic> {
    if n == 0 {
        return Err(ConstructionError::Precondition("n must be positive".into()));
    }
    let delta = shadowing::modulus(system, eps)?;
    let gap_in = system.dist(&system.apply_n(x, n)?, x)?.upper;
    if gap_in >= delta {
        return Err(ConstructionError::Precondition(format!(
            "d(T^n x, x) ≤ {} is not below δ = {}",
            rational::fmt_q(&gap_in),
            rational::fmt_q(&delta)
        )));
    }
    let (point, period) = refine_inner(system, x, n, xi)?;
    let gap = system.dist(&system.apply_n(&point, period)?, &point)?.upper;
    if gap >= *xi && !gap.is_zero() {
        return Err(ConstructionError::NoTracer(format!("return gap {} not below ξ", rational::fmt_q(&gap))));
    }
    let horizon = (4 * period) as usize;
    let worst = follow_error(system, &point, x, n, horizon as u64)?;
    if worst > *eps {
        return Err(ConstructionError::NoTracer(format!("shadowing error {} exceeds ε", rational::fmt_q(&worst))));
    }
    Ok(NearPeriodic { point, period, delta, gap, worst_shadow: worst, horizon })
}

/// max over t < horizon of d(T^t y, T^(t mod n) x), computed exactly.
pub fn follow_error(system: &SystemHandle, y: &PointRep, x: &PointRep, n: u64, horizon: u64) -> Result<Q> {
    if let (Some((_, two_sided, _)), PointRep::Symbolic(a), PointRep::Symbolic(b)) = (system.symbolic_info(), y, x) {
        if let Some(k) = symbolic_follow(a, b, n, horizon, two_sided) {
            return Ok(k.map_or_else(|| q_int(0), |k| rational::pow2(-k)));
        }
    }
    let mut worst = q_int(0);
    let mut a = y.clone();
    let mut b = x.clone();
    for t in 1..=horizon {
        let d = system.dist(&a, &b)?.upper;
        if d > worst {
            worst = d;
        }
        a = system.apply(&a)?;
        b = if t % n == 0 { x.clone() } else { system.apply(&b)? };
    }
    Ok(worst)
}

fn tail_period(w: &SymbolicWindow) -> Option<u64> {
    match w.extension {
        crate::spaces::Extension::PeriodicRepeat(p) => Some(p as u64),
        crate::spaces::Extension::Zeros => Some(1),
        crate::spaces::Extension::Unspecified => None,
    }
}

// Smallest disagreement depth over the horizon (None: the orbits agree
// everywhere), or None at the outer level when some needed symbol is unknown.
// Past reach + lcm of the tail periods both shifted points repeat, so
// agreement on that many coordinates is agreement everywhere.
fn symbolic_follow(a: &SymbolicWindow, b: &SymbolicWindow, n: u64, horizon: u64, two_sided: bool) -> Option<Option<i64>> {
    let per = num_integer::lcm(tail_period(a)?, tail_period(b)?) as i64;
    let reach = |w: &SymbolicWindow| w.lo.abs().max(w.hi().abs());
    let bound = reach(a).max(reach(b)) + per + 1;
    let (h, n) = (horizon as i64, n as i64);
    let back = if two_sided { bound } else { 0 };
    let ua: Vec<Symbol> = (-back..h + bound + 1).map(|i| a.get(i)).collect::<Option<_>>()?;
    let ub: Vec<Symbol> = (-back..n + bound + 1).map(|i| b.get(i)).collect::<Option<_>>()?;
    let at = |t: i64| &ua[(t + back) as usize..];
    let bt = |s: i64| &ub[(s + back) as usize..];
    let mut best: Option<i64> = None;
    for t in 0..h {
        let s = t % n;
        let limit = best.unwrap_or(bound + 1) as usize;
        let (fa, fb) = (at(t), bt(s));
        let fwd = fa[..limit].iter().zip(&fb[..limit]).position(|(p, q)| p != q);
        let mut k = fwd.map(|k| k as i64);
        if two_sided {
            // coordinates −1, −2, … of the shifted points
            for j in 1..limit as i64 {
                if k.is_some_and(|k| k <= j) {
                    break;
                }
                if ua[(t + back - j) as usize] != ub[(s + back - j) as usize] {
                    k = Some(j);
                    break;
                }
            }
        }
        if let Some(k) = k {
            if best.is_none_or(|b| k < b) {
                best = Some(k);
            }
        }
        if best == Some(0) {
            break;
        }
    }
    Some(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdometerPoint {
    pub point: PointRep,
    pub periods: Vec<u64>,
    pub certificate: RecurrenceCertificate,
    /// max d(T^(jn+i) z, T^i x) over the checked horizon
    #[serde(with = "rational::serde_q")]
    pub worst_follow: Q,
    #[serde(with = "rational::serde_q")]
    pub follow_bound: Q,
}

/// K stages of [`near_periodic_refine`] with certificate stages (n_k, 4ε_k).
pub fn build_odometer_point(system: &SystemHandle, x: &PointRep, n: u64, schedule: &StageSchedule) -> Result<OdometerPoint> {
    if schedule.mode != ScheduleMode::Periodic {
        return Err(ConstructionError::ScheduleInfeasible("odometer point needs a periodic-mode schedule".into()));
    }
    let gap = system.dist(&system.apply_n(x, n)?, x)?.upper;
    if gap >= schedule.delta_seq[0] {
        return Err(ConstructionError::Precondition(format!(
            "d(T^n x, x) ≤ {} is not below δ_1 = {}",
            rational::fmt_q(&gap),
            rational::fmt_q(&schedule.delta_seq[0])
        )));
    }
    let mut z = x.clone();
    let mut period = n;
    let mut periods = Vec::new();
    let mut stages = Vec::new();
    for k in 0..schedule.stages() {
        let step = near_periodic_refine(system, &z, period, &schedule.eps_seq[k], &schedule.xi_seq[k])?;
        z = step.point;
        period = step.period;
        periods.push(period);
        stages.push(RecurrenceStage { period, bound: q_int(4) * &schedule.eps_seq[k] });
    }
    let certificate = RecurrenceCertificate { stages, point: z.clone() };
    let audit = certificate.verify(system, 4)?;
    if !audit.holds {
        return Err(ConstructionError::CertificateFailed("recurrence stages".into()));
    }
    // conclusion: z follows the first n steps of x along every block of n
    let follow_bound = q_int(4) * &schedule.eps_seq[0];
    let worst = follow_error(system, &z, x, n, 4 * period)?;
    if worst > follow_bound {
        return Err(ConstructionError::CertificateFailed(format!("follow error {}", rational::fmt_q(&worst))));
    }
    Ok(OdometerPoint { point: z, periods, certificate, worst_follow: worst, follow_bound })
}

// ---------------------------------------------------------------------------
// measure approximation by an odometer

#[derive(Debug, Clone, Serialize)]
pub struct OdometerApprox {
    #[serde(skip)]
    pub nu: DiscreteMeasure,
    pub point: PointRep,
    /// period of the pseudo-orbit (= n of the chain)
    pub n: u64,
    pub block_len: u64,
    pub connector_bound: u64,
    pub connector_lens: Vec<u64>,
    pub repetitions: usize,
    pub report: Vec<Inequality>,
    #[serde(with = "rational::serde_q")]
    pub final_dbl: Q,
    pub certificate: RecurrenceCertificate,
}

// equal-weight decomposition: component i repeated weight_i · lcm(denominators) times
fn repetitions(components: &[Component]) -> Result<Vec<usize>> {
    if components.is_empty() {
        return Err(ConstructionError::Precondition("no components".into()));
    }
    let total: Q = components.iter().map(|c| c.weight.clone()).sum();
    if total != q_int(1) || components.iter().any(|c| !c.weight.is_positive()) {
        return Err(ConstructionError::Precondition("component weights must be positive and sum to 1".into()));
    }
    let mut l = 1u64;
    for c in components {
        let d = c.weight.denom().to_u64().ok_or_else(|| ConstructionError::Unsupported("weight denominator too large".into()))?;
        l = lcm_u64(l, d);
    }
    let mut seq = Vec::new();
    for (i, c) in components.iter().enumerate() {
        let r = (&c.weight * Q::from_integer(l.into())).to_integer().to_usize().unwrap_or(0);
        seq.extend(std::iter::repeat(i).take(r));
    }
    Ok(seq)
}

fn upper_dbl(family: &TestFamily, a: &[Q], mu: &DiscreteMeasure) -> Result<Q> {
    let b = integrals(mu, family)?;
    Ok(measures::dbl_from_integrals(a, &b) + family.tail_bound())
}

const N_CAP: u64 = 1 << 22;

/// A point whose orbit closure is an odometer (here: a periodic orbit) with
/// empirical measure within ε of Σ w_i μ_i.
pub fn approx_measure_by_odometer(system: &Arc<SystemHandle>, components: &[Component], eps: &Q) -> Result<OdometerApprox> {
    if !eps.is_positive() {
        return Err(ConstructionError::Precondition("ε must be positive".into()));
    }
    let measures_: Vec<DiscreteMeasure> = components.iter().map(|c| c.measure.clone()).collect();
    let weights: Vec<Q> = components.iter().map(|c| c.weight.clone()).collect();
    let mu = mix(&measures_, &weights)?;
    let family = TestFamily::canonical(system.clone(), measures::DEFAULT_N_MAX)?;
    let mu_int = integrals(&mu, &family)?;
    match &**system {
        SystemHandle::Odometer(spec) => odometer_case(system, spec.levels(), &mu_int, &family, eps),
        s if s.is_symbolic() => symbolic_odometer_approx(system, components, &mu_int, &family, eps),
        other => Err(ConstructionError::Unsupported(format!("measure approximation on {}", other.kind_name()))),
    }
}

// uniquely ergodic: the zero point equidistributes at every full level
fn odometer_case(system: &Arc<SystemHandle>, levels: usize, mu_int: &[Q], family: &TestFamily, eps: &Q) -> Result<OdometerApprox> {
    let SystemHandle::Odometer(spec) = &**system else { unreachable!() };
    let z = PointRep::Digits(spec.zero());
    let p = spec.period(levels)?;
    let nu = empirical(system, &z, p)?;
    let d = upper_dbl(family, mu_int, &nu)?;
    let ineq = Inequality::strict("final", "d_BL(ν, μ) < ε", d.clone(), eps.clone());
    if !ineq.holds {
        return Err(ineq.miss());
    }
    let certificate = RecurrenceCertificate { stages: vec![RecurrenceStage { period: p, bound: q_int(0) }], point: z.clone() };
    Ok(OdometerApprox {
        nu,
        point: z,
        n: p,
        block_len: p,
        connector_bound: 0,
        connector_lens: Vec::new(),
        repetitions: 1,
        report: vec![ineq],
        final_dbl: d,
        certificate,
    })
}

// shift a symbolic window so that coordinate `by` becomes 0 (by may be negative)
fn shifted(w: &SymbolicWindow, by: i64, two_sided: bool) -> Result<SymbolicWindow> {
    if two_sided {
        let mut v = w.clone();
        v.lo -= by;
        Ok(v)
    } else if by >= 0 {
        Ok(w.clone().shift_one_sided(by as u64))
    } else {
        Err(ConstructionError::Precondition("one-sided points cannot be shifted right".into()))
    }
}

fn vertex(sft: &Sft, block: &[Symbol]) -> Result<usize> {
    sft.vertex_of(block)
        .ok_or_else(|| ConstructionError::Precondition(format!("block {block:?} is not an admissible memory block")))
}

fn symbolic_odometer_approx(
    system: &Arc<SystemHandle>,
    components: &[Component],
    mu_int: &[Q],
    family: &TestFamily,
    eps: &Q,
) -> Result<OdometerApprox> {
    let (_, two_sided, _) = system.symbolic_info().expect("symbolic");
    let sft = system.as_sft().expect("symbolic");
    let mem = sft.memory() as i64;
    let seq = repetitions(components)?;
    let k = seq.len();

    // odometer-1: the equal-weight average is μ itself
    let avg_measures: Vec<DiscreteMeasure> = seq.iter().map(|&i| components[i].measure.clone()).collect();
    let avg = mix(&avg_measures, &vec![q_frac(1, k as i64); k])?;
    let ineq1 = Inequality::strict("odometer-1", "d_BL((1/K)Σ μ_i, μ) < ε/8", upper_dbl(family, mu_int, &avg)?, eps / q_int(8));

    let delta = shadowing::modulus(system, &(eps / q_int(32)))?;
    let xi = shadowing::modulus(system, &(&delta / q_int(2)))?;
    // agreement on D coordinates (on both sides when two-sided) puts points within ξ
    let depth = ceil_log2_inv(&xi) + 1;
    let back = if two_sided { depth } else { 0 };

    // M bounds every connector, independently of N
    let entry_vertices: Vec<usize> = components
        .iter()
        .map(|c| {
            let w = symbolic_of(&c.generic)?;
            vertex(&sft, &known(w, -back, -back + mem)?)
        })
        .collect::<Result<_>>()?;
    let mut longest = 0usize;
    for a in sft.core_vertices() {
        for &b in &entry_vertices {
            let path = sft.connector(a, b).ok_or_else(|| ConstructionError::NoConnector {
                from: format!("{:?}", sft.vertex_blocks()[a]),
                to: format!("{:?}", sft.vertex_blocks()[b]),
            })?;
            longest = longest.max(path.len());
        }
    }
    let m_bound = (depth - mem + back) as u64 + longest as u64;

    // N: M < N, 4M/N < ε/8 and d_BL(E_N(x_i), μ_i) < ε/8
    let comp_int: Vec<Vec<Q>> = components.iter().map(|c| integrals(&c.measure, family)).collect::<std::result::Result<_, _>>()?;
    let thirty_two_m = Q::from_integer((32 * m_bound).into()) / eps;
    let mut n_block = (thirty_two_m.floor().to_integer().to_u64().unwrap_or(N_CAP) + 1).max(m_bound + 1);
    let (ineq2_val, n_block) = loop {
        let mut worst = q_int(0);
        for (c, ci) in components.iter().zip(&comp_int) {
            let e = empirical(system, &c.generic, n_block)?;
            let d = upper_dbl(family, ci, &e)?;
            if d > worst {
                worst = d;
            }
        }
        if worst < eps / q_int(8) {
            break (worst, n_block);
        }
        if n_block >= N_CAP {
            return Err(Inequality::strict("odometer-2", "", worst, eps / q_int(8)).miss());
        }
        n_block *= 2;
    };
    let ineq2 = Inequality::strict("odometer-2", "max_i d_BL(E_N(x_i), μ_i) < ε/8", ineq2_val, eps / q_int(8));

    // connector points z_i: N-th iterate of x_i on D coordinates, a path, then x_{i+1}
    let mut points: Vec<PointRep> = Vec::new();
    let mut parts: Vec<(PointRep, u64)> = Vec::new();
    let mut connector_lens = Vec::with_capacity(k);
    for j in 0..k {
        let x = &components[seq[j]].generic;
        let next = &components[seq[(j + 1) % k]].generic;
        let tx = system.apply_n(x, n_block)?;
        let txw = symbolic_of(&tx)?.clone();
        let head = known(&txw, 0, depth)?;
        let nw = symbolic_of(next)?;
        let a = vertex(&sft, &head[(depth - mem) as usize..])?;
        let b = vertex(&sft, &known(nw, -back, -back + mem)?)?;
        let path = sft
            .connector(a, b)
            .ok_or_else(|| ConstructionError::NoConnector { from: format!("{:?}", sft.vertex_blocks()[a]), to: format!("{:?}", sft.vertex_blocks()[b]) })?;
        let mut mid = head;
        mid.extend_from_slice(&path);
        let tail = shifted(nw, mem - back, two_sided)?;
        let left = if two_sided { Some(&txw) } else { None };
        let z = PointRep::Symbolic(shadowing::splice(left, &mid, &tail, two_sided));
        let m_i = (depth + path.len() as i64 - mem + back) as u64;
        connector_lens.push(m_i);
        points.extend(system.orbit_segment(x, n_block as usize)?);
        points.extend(system.orbit_segment(&z, m_i as usize)?);
        parts.push((x.clone(), n_block));
        parts.push((z, m_i));
    }
    let n = points.len() as u64;
    let sum_m: u64 = connector_lens.iter().sum();

    // odometer-3: pseudo-orbit measure against the average of the E_N(x_i)
    let po_measure = DiscreteMeasure::from_parts(
        system.clone(),
        parts.iter().map(|(p, len)| (Part::Segment { start: p.clone(), len: *len }, q_frac(*len as i64, n as i64))).collect(),
    )?;
    let avg_en: Vec<DiscreteMeasure> = seq.iter().map(|&i| empirical(system, &components[i].generic, n_block)).collect::<std::result::Result<_, _>>()?;
    let avg_en = mix(&avg_en, &vec![q_frac(1, k as i64); k])?;
    let avg_en_int = integrals(&avg_en, family)?;
    let po_int = integrals(&po_measure, family)?;
    let kn = Q::from_integer((k as u64 * n_block).into());
    let sm = Q::from_integer(sum_m.into());
    let sn: Q = Q::from_integer((k as u64 * n_block + sum_m).into());
    let split = ((&kn + &sn) * &sm + &kn * &sm) / (&kn * &sn);
    let four_m_n = Q::from_integer((4 * m_bound).into()) / Q::from_integer(n_block.into());
    let ineq3_val = measures::dbl_from_integrals(&avg_en_int, &po_int) + family.tail_bound();
    let ineq3 = Inequality::strict(
        "odometer-3",
        "d_BL((1/K)Σ E_N(x_i), (1/n)Σ δ_{y_i}) ≤ split bound ≤ 4M/N < ε/8",
        ineq3_val.clone(),
        eps / q_int(8),
    );
    let chain3_ok = ineq3_val <= &split + family.tail_bound() && split <= four_m_n && four_m_n < eps / q_int(8) && m_bound < n_block;
    if !chain3_ok {
        return Err(ConstructionError::ToleranceMiss {
            inequality: "odometer-3".into(),
            value: rational::fmt_q(&four_m_n),
            bound: rational::fmt_q(&(eps / q_int(8))),
        });
    }

    // the periodic ξ-pseudo-orbit and its tracer
    let po = PseudoOrbit::periodic(points, xi.clone());
    let cert = shadowing::trace(system, &po, &(&delta / q_int(2)))?;
    let y = cert.tracer.clone();
    let y_measure = empirical(system, &y, n)?;
    let y_int = integrals(&y_measure, family)?;
    let ineq4 = Inequality::strict(
        "odometer-4",
        "d_BL(E_n(y), (1/n)Σ δ_{y_i}) < δ/2 < ε/8",
        measures::dbl_from_integrals(&y_int, &po_int) + family.tail_bound(),
        rational::q_min(&delta / q_int(2), eps / q_int(8)),
    );

    // odometer point from y with ε/32
    let schedule = StageSchedule::periodic(system, &(eps / q_int(32)), 3)?;
    let odo = build_odometer_point(system, &y, n, &schedule)?;
    let z = odo.point.clone();
    let zn = *odo.periods.last().expect("stages");
    let z_measure = empirical(system, &z, zn)?;
    let z_int = integrals(&z_measure, family)?;
    let ineq5 = Inequality::weak(
        "odometer-5",
        "d_BL(E_jn(z), E_n(y)) ≤ ε/8",
        measures::dbl_from_integrals(&z_int, &y_int) + family.tail_bound(),
        eps / q_int(8),
    );
    // z is periodic, so its unique invariant measure is E_jn(z) itself
    let nu = z_measure.clone();
    let ineq6 = Inequality::strict("odometer-6", "d_BL(E_jn(z), ν) < ε/8", family.tail_bound(), eps / q_int(8));

    let final_dbl = upper_dbl(family, mu_int, &nu)?;
    let partial: Q = [&ineq1, &ineq2, &ineq3, &ineq4, &ineq5, &ineq6].iter().map(|i| i.value.clone()).sum();
    let ineq7 = Inequality::strict("odometer-sum", "sum of the partial bounds, hence d_BL(μ, ν), below ε", partial.clone(), eps.clone());
    let report = vec![ineq1, ineq2, ineq3, ineq4, ineq5, ineq6, ineq7];
    if let Some(bad) = report.iter().find(|i| !i.holds) {
        return Err(bad.miss());
    }
    // the chained sum dominates the direct value by the triangle inequality
    if final_dbl >= *eps || final_dbl > partial + q_int(6) * family.tail_bound() {
        return Err(ConstructionError::ToleranceMiss {
            inequality: "final".into(),
            value: rational::fmt_q(&final_dbl),
            bound: rational::fmt_q(eps),
        });
    }
    Ok(OdometerApprox {
        nu,
        point: z,
        n,
        block_len: n_block,
        connector_bound: m_bound,
        connector_lens,
        repetitions: k,
        report,
        final_dbl,
        certificate: odo.certificate,
    })
}

// ---------------------------------------------------------------------------
// separated block families, the entropy point and the entropy approximation

// report values computed in floating point (logarithms)
fn f64_q(x: f64) -> Q {
    rational::from_f64(x).unwrap_or_else(|| q_int(1))
}

/// Entropy enclosure of the stage-K skeleton subshift (natural log).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyBracket {
    pub lower: f64,
    pub upper: f64,
    pub stage: usize,
    /// length of the base blocks
    pub n: u64,
    /// number of base blocks
    pub s: u64,
    /// period of the constructed point
    pub period: u64,
}

impl EntropyBracket {
    fn zero(n: u64, period: u64) -> Self {
        EntropyBracket { lower: 0.0, upper: 0.0, stage: 1, n, s: 1, period }
    }

    pub fn contains(&self, h: f64, slack: f64) -> bool {
        h >= self.lower - slack && h <= self.upper + slack
    }

    /// Distance from c to the bracket (0 inside).
    pub fn distance_to(&self, c: f64) -> f64 {
        if c < self.lower {
            self.lower - c
        } else if c > self.upper {
            c - self.upper
        } else {
            0.0
        }
    }
}

/// Bookkeeping of one separated-family refinement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineReport {
    pub s: u64,
    pub n: u64,
    /// number of base blocks per skeleton period
    pub r: u64,
    pub n_prime: u64,
    /// free slots per period; s′ = s^free members
    pub free: u64,
    #[serde(with = "rational::serde_q")]
    pub xi: Q,
    /// (i): sampled member pairs are (n′, ε − 2η)-separated
    pub separated: bool,
    pub pairs_checked: usize,
    /// literal diam(Λ ∪ T^n Λ), informational for block families
    #[serde(with = "rational::serde_q")]
    pub diameter: Q,
    #[serde(with = "rational::serde_q")]
    pub delta: Q,
    /// (iii): free ≥ (1 − ξ) r, so s′ ≥ s^((1−ξ)r)
    pub free_ok: bool,
    /// (iv): occurrences of each base block among the pinned slots
    pub pin_counts: Vec<u64>,
    pub entropy_lower: f64,
    /// pinned slot → base block index, None for free slots
    #[serde(skip)]
    pub slots: Vec<Option<Symbol>>,
}

impl RefineReport {
    pub fn holds(&self) -> bool {
        self.separated && self.free_ok && self.pin_counts.iter().all(|&c| c > 0)
    }
}

fn concat_admissible(system: &SystemHandle, blocks: &[Vec<Symbol>]) -> Result<()> {
    let sft = system.as_sft().ok_or_else(|| ConstructionError::Unsupported("block families need a symbolic system".into()))?;
    let n = blocks[0].len();
    if blocks.iter().any(|b| b.len() != n) || n == 0 {
        return Err(ConstructionError::Precondition("blocks must be nonempty and of equal length".into()));
    }
    if sft.order() > n + 1 {
        return Err(ConstructionError::Unsupported("forbidden words longer than two blocks".into()));
    }
    for a in blocks {
        for b in blocks {
            let mut w = a.clone();
            w.extend_from_slice(b);
            if !sft.is_admissible(&w)? {
                return Err(ConstructionError::DiameterViolation(format!("blocks {a:?} and {b:?} do not glue; no common memory state")));
            }
        }
    }
    Ok(())
}

// max over t < n of d(T^t x, T^t y), i.e. d_n
fn dn(system: &SystemHandle, x: &PointRep, y: &PointRep, n: u64, stop_above: &Q) -> Result<Q> {
    // a disagreement at coordinate t < n puts T^t x and T^t y at distance 1, the diameter
    if let (PointRep::Symbolic(a), PointRep::Symbolic(b)) = (x, y) {
        if (0..n as i64).any(|t| matches!((a.get(t), b.get(t)), (Some(p), Some(q)) if p != q)) {
            return Ok(q_int(1));
        }
    }
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut worst = q_int(0);
    for _ in 0..n {
        let d = system.dist(&a, &b)?.lower;
        if d > worst {
            worst = d;
            if worst > *stop_above {
                break;
            }
        }
        a = system.apply(&a)?;
        b = system.apply(&b)?;
    }
    Ok(worst)
}

fn fill(slots: &[Option<Symbol>], s: u64, rng: &mut ChaCha8Rng) -> Vec<Symbol> {
    slots.iter().map(|p| p.unwrap_or_else(|| rng.gen_range(0..s as u32))).collect()
}

fn expand_blocks(blocks: &[Vec<Symbol>], itinerary: &[Symbol]) -> Vec<Symbol> {
    itinerary.iter().flat_map(|&i| blocks[i as usize].iter().copied()).collect()
}

/// One refinement step: a Toeplitz skeleton over the block family with
/// s pins per period r, r chosen so the free density exceeds 1 − ξ/4.
pub fn refine_separated(system: &SystemHandle, blocks: &[Vec<Symbol>], eps: &Q, eta: &Q, xi: &Q, seed: u64) -> Result<RefineReport> {
    if blocks.is_empty() {
        return Err(ConstructionError::Precondition("empty block family".into()));
    }
    concat_admissible(system, blocks)?;
    let s = blocks.len() as u64;
    let n = blocks[0].len() as u64;
    if *eta >= eps / q_int(4) {
        return Err(ConstructionError::Precondition("η must be below ε/4".into()));
    }
    let points: Vec<PointRep> = blocks.iter().map(|b| PointRep::periodic(b.clone())).collect();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if dn(system, &points[i], &points[j], n, eps)? <= *eps {
                return Err(ConstructionError::Precondition(format!("blocks {i} and {j} are not (n, ε)-separated")));
            }
        }
    }
    let mut diameter = q_int(0);
    for a in &points {
        for b in &points {
            let d = system.dist(a, b)?.upper;
            if d > diameter {
                diameter = d;
            }
        }
    }
    let delta = shadowing::modulus(system, &(eta / q_int(2)))?;

    let inv = (q_int(4) / xi).ceil().to_integer().to_u64().ok_or_else(|| ConstructionError::ScheduleInfeasible("ξ too small".into()))?;
    let r = s * (inv + 1);
    let spec = ToeplitzSpec::new(s as u32, vec![r], q_int(1) - q_frac(s as i64, r as i64))?;
    let cert = spec.certify()?;
    let need = (1.0 - rational::to_f64(xi) / 4.0) * (s as f64).ln();
    if s > 1 && cert.free_density <= q_int(1) - xi / q_int(4) {
        return Err(ConstructionError::ToeplitzEntropyShortfall { need, have: cert.entropy_lower });
    }
    let pattern = spec.pattern(1)?;
    let free = pattern.free_positions().len() as u64;
    let free_ok = Q::from_integer(free.into()) >= (q_int(1) - xi) * Q::from_integer(r.into());
    let mut pin_counts = vec![0u64; s as usize];
    for p in pattern.slots.iter().flatten() {
        pin_counts[*p as usize] += 1;
    }

    // (i) on sampled pairs of distinct members
    let n_prime = r * n;
    let target = eps - q_int(2) * eta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut separated = true;
    let mut pairs_checked = 0;
    if s > 1 {
        for _ in 0..8 {
            let a = fill(&pattern.slots, s, &mut rng);
            let mut b = a.clone();
            let free_pos = pattern.free_positions();
            let j = free_pos[rng.gen_range(0..free_pos.len())];
            b[j] = (b[j] + 1 + rng.gen_range(0..(s as u32 - 1))) % s as u32;
            let pa = PointRep::periodic(expand_blocks(blocks, &a));
            let pb = PointRep::periodic(expand_blocks(blocks, &b));
            pairs_checked += 1;
            if dn(system, &pa, &pb, n_prime, &target)? <= target {
                separated = false;
            }
        }
    }
    Ok(RefineReport {
        s,
        n,
        r,
        n_prime,
        free,
        xi: xi.clone(),
        separated,
        pairs_checked,
        diameter,
        delta,
        free_ok,
        pin_counts,
        entropy_lower: cert.entropy_lower,
        slots: pattern.slots,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyPoint {
    pub point: PointRep,
    pub period: u64,
    pub bracket: EntropyBracket,
    pub certificate: RecurrenceCertificate,
    pub schedule: StageSchedule,
    pub refine: Option<RefineReport>,
    /// (a): every block of the point is the base block its itinerary names
    pub itinerary_ok: bool,
    pub itinerary: Vec<Symbol>,
}

/// Stage-K point over a separated block family. Only K = 2 (one
/// refinement) is materialized; later stages grow the period by r each.
pub fn build_entropy_point(system: &SystemHandle, blocks: &[Vec<Symbol>], eps: &Q, eta: &Q, stages: usize, seed: u64) -> Result<EntropyPoint> {
    if stages != 2 {
        return Err(ConstructionError::Unsupported(format!("{stages} stages; only 2 are materialized")));
    }
    if *eta >= eps / q_int(8) {
        return Err(ConstructionError::Precondition("η must be below ε/8".into()));
    }
    let schedule = StageSchedule::entropy(system, eps, eta, stages - 1)?;
    if blocks.is_empty() {
        return Err(ConstructionError::Precondition("empty block family".into()));
    }
    let n = blocks[0].len() as u64;
    if blocks.len() == 1 {
        concat_admissible(system, blocks)?;
        let point = PointRep::periodic(blocks[0].clone());
        let certificate = RecurrenceCertificate { stages: vec![RecurrenceStage { period: n, bound: eta.clone() }], point: point.clone() };
        verify_certificate(system, &certificate)?;
        return Ok(EntropyPoint {
            point,
            period: n,
            bracket: EntropyBracket::zero(n, n),
            certificate,
            schedule,
            refine: None,
            itinerary_ok: true,
            itinerary: vec![0],
        });
    }
    let report = refine_separated(system, blocks, eps, eta, &schedule.xi_seq[0], seed)?;
    if !report.holds() {
        return Err(ConstructionError::CertificateFailed("separated refinement conditions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let itinerary = fill(&report.slots, report.s, &mut rng);
    let word = expand_blocks(blocks, &itinerary);
    let point = PointRep::periodic(word);
    let period = report.n_prime;

    // (a) recomputed from the point itself
    let w = symbolic_of(&point)?;
    let mut itinerary_ok = true;
    for (j, &i) in itinerary.iter().enumerate() {
        let a = (j as u64 * n) as i64;
        if known(w, a, a + n as i64)? != blocks[i as usize] {
            itinerary_ok = false;
        }
    }
    let certificate = RecurrenceCertificate { stages: vec![RecurrenceStage { period, bound: eta.clone() }], point: point.clone() };
    verify_certificate(system, &certificate)?;
    let upper = (report.s as f64).ln() / n as f64;
    let bracket = EntropyBracket {
        lower: rational::to_f64(&schedule.lambda_product()) * upper,
        upper,
        stage: stages,
        n,
        s: report.s,
        period,
    };
    Ok(EntropyPoint { point, period, bracket, certificate, schedule, refine: Some(report), itinerary_ok, itinerary })
}

fn verify_certificate(system: &SystemHandle, cert: &RecurrenceCertificate) -> Result<()> {
    let audit = cert.verify(system, 4)?;
    if audit.holds {
        Ok(())
    } else {
        Err(ConstructionError::CertificateFailed("recurrence stages".into()))
    }
}

/// Entropy estimate of the orbit closure of a periodic symbolic point:
/// the pool is every phase of the period, cut to the key window.
pub fn orbit_closure_estimate(system: &SystemHandle, z: &PointRep, period: u64, n: usize, eps: &Q) -> Result<EntropyRow> {
    let w = symbolic_of(z)?;
    let (_, two_sided, _) = system.symbolic_info().ok_or_else(|| ConstructionError::Unsupported("estimate needs a symbolic system".into()))?;
    let k = if *eps >= q_int(1) { 0 } else { ceil_log2_inv(eps) as i64 };
    let back = if two_sided { (k - 1).max(0) } else { 0 };
    let len = n as i64 + k - 1;
    let mut windows = Vec::with_capacity(period as usize);
    for phase in 0..period as i64 {
        let lo = phase + if two_sided { period as i64 } else { 0 };
        let symbols = known(w, lo - back, lo + len.max(0))?;
        windows.push(PointRep::Symbolic(SymbolicWindow::new(-back, symbols, crate::spaces::Extension::Unspecified)));
    }
    let mut rows = entropy::entropy_estimate(system, &[n], std::slice::from_ref(eps), &Pool::Points(windows))?;
    Ok(rows.remove(0))
}

#[derive(Debug, Clone)]
pub struct EntropyOptions {
    pub m_max: usize,
    pub eta: Q,
    /// separation scale of the block families
    pub eps_sep: Q,
    pub stages: usize,
    pub seed: u64,
    pub max_period: usize,
    pub max_family: usize,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions { m_max: 12, eta: q_frac(1, 32), eps_sep: q_frac(1, 2), stages: 2, seed: 0, max_period: 8, max_family: 4096 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyApprox {
    #[serde(skip)]
    pub nu: DiscreteMeasure,
    pub point: PointRep,
    pub period: u64,
    pub bracket: EntropyBracket,
    /// chosen block length and per-component block counts (empty in the c = 0 case)
    pub m: usize,
    pub counts: Vec<u64>,
    pub report: Vec<Inequality>,
    #[serde(with = "rational::serde_q")]
    pub final_dbl: Q,
    pub certificate: RecurrenceCertificate,
    pub entropy_point: Option<EntropyPoint>,
}

// typical cycles of length m per component, sorted by distance then lexicographically
fn typical_cycles(
    system: &Arc<SystemHandle>,
    sft: &Sft,
    m: usize,
    comp_int: &[Vec<Q>],
    family: &TestFamily,
    bound: &Q,
) -> Result<Vec<Vec<(Q, Vec<Symbol>, Option<usize>)>>> {
    let words = sft.language_capped(m, 1 << 16)?;
    let mem = sft.memory();
    let gated = !sft.forbidden().is_empty();
    let mut out = vec![Vec::new(); comp_int.len()];
    for b in words {
        // entry state q with q·b admissible and ending in q
        let state = if gated {
            let mut found = None;
            for q in sft.core_vertices() {
                let mut w = sft.vertex_blocks()[q].clone();
                w.extend_from_slice(&b);
                if w[w.len() - mem..] == sft.vertex_blocks()[q][..] && sft.is_admissible(&w)? {
                    found = Some(q);
                    break;
                }
            }
            match found {
                Some(q) => Some(q),
                None => continue,
            }
        } else {
            if !cyclic_admissible(sft, &b)? {
                continue;
            }
            None
        };
        let e = empirical(system, &PointRep::periodic(b.clone()), m as u64)?;
        let ei = integrals(&e, family)?;
        for (i, ci) in comp_int.iter().enumerate() {
            let d = measures::dbl_from_integrals(ci, &ei) + family.tail_bound();
            if d < *bound {
                out[i].push((d, b.clone(), state));
            }
        }
    }
    for list in &mut out {
        list.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    }
    Ok(out)
}

// block count s with |ln s / m − c| < tol, closest first
fn count_for(c: f64, m: usize, tol: f64, available: usize) -> Option<u64> {
    let ideal = (c * m as f64).exp();
    let mut best: Option<(f64, u64)> = None;
    for s in [ideal.floor(), ideal.ceil()] {
        let s = s.max(1.0) as u64;
        if s as usize > available {
            continue;
        }
        let err = ((s as f64).ln() / m as f64 - c).abs();
        if err < tol && best.is_none_or(|(e, _)| err < e) {
            best = Some((err, s));
        }
    }
    best.map(|(_, s)| s)
}

/// A point whose orbit closure carries entropy bracketed near c and whose
/// empirical measure is within ε of Σ w_i μ_i.
pub fn approx_measure_with_entropy(system: &Arc<SystemHandle>, components: &[Component], c: f64, eps: &Q, opts: &EntropyOptions) -> Result<EntropyApprox> {
    if !eps.is_positive() || !(c >= 0.0) {
        return Err(ConstructionError::Precondition("need ε > 0 and c ≥ 0".into()));
    }
    let sft = system
        .as_sft()
        .ok_or_else(|| ConstructionError::Unsupported(format!("entropy approximation on {}", system.kind_name())))?;
    let measures_: Vec<DiscreteMeasure> = components.iter().map(|cp| cp.measure.clone()).collect();
    let weights: Vec<Q> = components.iter().map(|cp| cp.weight.clone()).collect();
    let mu = mix(&measures_, &weights)?;
    let family = TestFamily::canonical(system.clone(), measures::DEFAULT_N_MAX)?;
    let mu_int = integrals(&mu, &family)?;
    if c == 0.0 {
        return zero_entropy_case(system, &sft, components, &mu_int, &family, eps, opts);
    }

    let seq = repetitions(components)?;
    let k = seq.len();
    let comp_int: Vec<Vec<Q>> = measures_.iter().map(|m| integrals(m, &family)).collect::<std::result::Result<_, _>>()?;
    let tol = rational::to_f64(eps) / 8.0;
    let typ_bound = eps / q_int(8);
    let mut chosen: Option<(usize, Vec<Vec<(Q, Vec<Symbol>, Option<usize>)>>, Vec<u64>)> = None;
    let mut best_reason = String::from("no block length tried");
    for m in 1..=opts.m_max {
        let typ = typical_cycles(system, &sft, m, &comp_int, &family, &typ_bound)?;
        // common entry state for every component
        let states: Vec<Option<usize>> = if sft.forbidden().is_empty() { vec![None] } else { sft.core_vertices().map(Some).collect() };
        for q in states {
            let lists: Vec<Vec<_>> = typ.iter().map(|l| l.iter().filter(|t| t.2 == q).cloned().collect()).collect();
            let counts: Option<Vec<u64>> = lists.iter().map(|l| count_for(c, m, tol, l.len())).collect();
            match counts {
                Some(counts) => {
                    chosen = Some((m, lists, counts));
                    break;
                }
                None => {
                    best_reason = format!("m = {m}: typical block counts {:?}", lists.iter().map(Vec::len).collect::<Vec<_>>());
                }
            }
        }
        if chosen.is_some() {
            break;
        }
    }
    let (m, lists, counts) = chosen.ok_or(ConstructionError::CNotReachable { target: c, reason: best_reason })?;

    // trimming: keep the most typical s_i blocks of each component
    let trimmed: Vec<Vec<(Q, Vec<Symbol>)>> =
        lists.iter().zip(&counts).map(|(l, &s)| l.iter().take(s as usize).map(|t| (t.0.clone(), t.1.clone())).collect()).collect();
    let rate: f64 = seq.iter().map(|&i| (counts[i] as f64).ln() / m as f64).sum::<f64>() / k as f64;
    let h1 = Inequality::strict("entropy-h1", "|(1/K)Σ log|Γ′_i|/m − c| < ε/8", f64_q((rate - c).abs()), typ_bound.clone());
    let worst_typ = trimmed.iter().flatten().map(|t| t.0.clone()).max().unwrap_or_else(|| q_int(0));
    let h2 = Inequality::strict("entropy-h2", "every kept block is ε/8-typical for its component", worst_typ, typ_bound.clone());

    // composite blocks: one kept block per slot of the equal-weight sequence
    let total: u64 = seq.iter().map(|&i| counts[i]).product();
    if total as usize > opts.max_family {
        return Err(ConstructionError::Unsupported(format!("{total} composite blocks exceed the cap {}", opts.max_family)));
    }
    let mut composite: Vec<Vec<Symbol>> = vec![Vec::new()];
    for &i in &seq {
        composite = composite
            .into_iter()
            .flat_map(|pre| {
                trimmed[i].iter().map(move |(_, b)| {
                    let mut w = pre.clone();
                    w.extend_from_slice(b);
                    w
                })
            })
            .collect();
    }
    // the common entry state makes every concatenation admissible, so connectors are empty
    let h3 = Inequality::weak("entropy-h3", "connector share of each composite block ≤ ε/8", q_int(0), typ_bound.clone());

    let ep = build_entropy_point(system, &composite, &opts.eps_sep, &opts.eta, opts.stages, opts.seed)?;
    let lp = ep.schedule.lambda_product();
    let h4 = Inequality::strict("entropy-h4", "1 − Π(1 − λ_k) < η", q_int(1) - lp, opts.eta.clone());
    let h5 = match &ep.refine {
        Some(r) => Inequality::weak(
            "entropy-h5",
            "(1 − ξ) r ≤ free slots per period",
            (q_int(1) - &r.xi) * Q::from_integer(r.r.into()),
            Q::from_integer(r.free.into()),
        ),
        None => Inequality::weak("entropy-h5", "(1 − ξ) r ≤ free slots per period", q_int(0), q_int(0)),
    };
    let h6 = Inequality::strict("entropy-h6", "distance from c to the entropy bracket < ε", f64_q(ep.bracket.distance_to(c)), eps.clone());
    let nu = empirical(system, &ep.point, ep.period)?;
    let final_dbl = upper_dbl(&family, &mu_int, &nu)?;
    let h7 = Inequality::strict("entropy-h7", "d_BL(ν, μ) < ε", final_dbl.clone(), eps.clone());
    let report = vec![h1, h2, h3, h4, h5, h6, h7];
    if let Some(bad) = report.iter().find(|i| !i.holds) {
        return Err(bad.miss());
    }
    Ok(EntropyApprox {
        nu,
        point: ep.point.clone(),
        period: ep.period,
        bracket: ep.bracket.clone(),
        m,
        counts: seq.iter().map(|&i| counts[i]).collect(),
        report,
        final_dbl,
        certificate: ep.certificate.clone(),
        entropy_point: Some(ep),
    })
}

// c = 0: a short periodic orbit when one is close enough, the odometer engine otherwise
fn zero_entropy_case(
    system: &Arc<SystemHandle>,
    sft: &Sft,
    components: &[Component],
    mu_int: &[Q],
    family: &TestFamily,
    eps: &Q,
    opts: &EntropyOptions,
) -> Result<EntropyApprox> {
    for p in 1..=opts.max_period {
        let mut best: Option<(Q, Vec<Symbol>)> = None;
        for b in sft.language_capped(p, 1 << 16)? {
            if !cyclic_admissible(sft, &b)? {
                continue;
            }
            let e = empirical(system, &PointRep::periodic(b.clone()), p as u64)?;
            let d = upper_dbl(family, mu_int, &e)?;
            if d < *eps && best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, b));
            }
        }
        if let Some((d, b)) = best {
            let point = PointRep::periodic(b);
            let nu = empirical(system, &point, p as u64)?;
            let certificate = RecurrenceCertificate { stages: vec![RecurrenceStage { period: p as u64, bound: opts.eta.clone() }], point: point.clone() };
            verify_certificate(system, &certificate)?;
            let report = vec![
                Inequality::weak("entropy-h6", "distance from 0 to the entropy bracket < ε", q_int(0), eps.clone()),
                Inequality::strict("entropy-h7", "d_BL(ν, μ) < ε", d.clone(), eps.clone()),
            ];
            return Ok(EntropyApprox {
                nu,
                point,
                period: p as u64,
                bracket: EntropyBracket::zero(p as u64, p as u64),
                m: p,
                counts: Vec::new(),
                report,
                final_dbl: d,
                certificate,
                entropy_point: None,
            });
        }
    }
    let odo = approx_measure_by_odometer(system, components, eps)?;
    let period = odo.certificate.stages.last().map_or(odo.n, |s| s.period);
    Ok(EntropyApprox {
        nu: odo.nu,
        point: odo.point,
        period,
        bracket: EntropyBracket::zero(odo.n, period),
        m: 0,
        counts: Vec::new(),
        final_dbl: odo.final_dbl,
        report: odo.report,
        certificate: odo.certificate,
        entropy_point: None,
    })
}
