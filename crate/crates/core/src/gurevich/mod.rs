//! A countable graph whose vertex shift is transitive, has shadowing and
//! entropy log 2, but no measure of maximal entropy.
//!
//! G(N) has a hub vertex u. For each n there are a(n) simple cycles of
//! length n through u (the v-cycles) and, for n ≥ P = 2^N + 1, one more
//! (the w-cycle). First returns to u are therefore counted by
//! f(n) = a(n) + [n ≥ P], and the whole analysis runs through f.

mod tracing;

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, fmt_q, pow2, q_frac, q_int, Q};
use crate::spectral::Digraph;

pub use tracing::{
    constructed_pseudo_orbit, gamma_dist, gamma_parameters, trace_in_gamma, zero_orbit, Cell, GammaCertificate,
    GammaParams, GammaPseudoOrbit, GammaWindow, StepAudit,
};

#[derive(Debug, Error)]
pub enum GurevichError {
    #[error("parameter N must be at least 1")]
    BadParameter,
    #[error("level {level} has {vertices} vertices, above the cap {cap}")]
    VertexCap { level: u64, vertices: String, cap: u64 },
    #[error("no such vertex: {0}")]
    BadVertex(String),
    #[error("pseudo-orbit windows need radius {needed}, got {got}")]
    WindowTooShort { needed: i64, got: i64 },
    #[error("pseudo-orbit gap {gap} is not below gamma {gamma}")]
    GammaTooLarge { gap: String, gamma: String },
    #[error("level {0} is below 1")]
    ZeroLevel(u64),
    #[error("window is not a stretch of a point in the closure: {0}")]
    InvalidWindow(String),
    #[error("a pseudo-orbit needs at least two points")]
    TooFewPoints,
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Shadow(#[from] crate::shadowing::ShadowError),
}

/// Vertex cap for materialized subgraphs and entropy levels.
pub const VERTEX_CAP: u64 = 1 << 20;

/// The graph G(N), optionally with the w-cycle family replaced by
/// `w_copies` parallel copies (1 is the graph itself).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GurevichGraph {
    pub n: u32,
    #[serde(default = "one_copy")]
    pub w_copies: u32,
}

fn one_copy() -> u32 {
    1
}

/// A vertex; `V{n, i, k}` is the k-th vertex of the i-th v-cycle of length n,
/// `W{n, k, copy}` the k-th vertex of a w-cycle of length n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GVertex {
    U,
    V { n: u64, i: u64, k: u64 },
    W { n: u64, k: u64, copy: u32 },
}

impl GurevichGraph {
    pub fn new(n: u32) -> Result<Self, GurevichError> {
        Self::with_w_copies(n, 1)
    }

    /// Variant used to contrast classifications: 0 drops the w-cycles,
    /// 2 doubles them.
    pub fn with_w_copies(n: u32, w_copies: u32) -> Result<Self, GurevichError> {
        if n == 0 || n > 62 {
            return Err(GurevichError::BadParameter);
        }
        Ok(GurevichGraph { n, w_copies })
    }

    /// P = 2^N + 1.
    pub fn p(&self) -> u64 {
        (1u64 << self.n) + 1
    }

    /// Number of v-cycles of length n.
    pub fn a(&self, n: u64) -> BigUint {
        if n == 1 {
            return BigUint::one();
        }
        if !n.is_power_of_two() {
            return BigUint::zero();
        }
        let k = n.trailing_zeros();
        let full = BigUint::one() << (n - k as u64);
        if k == self.n {
            full - 1u32
        } else if k >= 2 {
            full
        } else {
            BigUint::zero()
        }
    }

    /// First-return count f_uu(n).
    pub fn f_uu(&self, n: u64) -> BigUint {
        let mut f = self.a(n);
        if n >= self.p() {
            f += self.w_copies;
        }
        f
    }

    /// Vertices on cycles of length < n (the hub included): the index offset
    /// of the length-n block in the enumeration q_1 = u, q_2, ….
    fn offset(&self, n: u64) -> BigUint {
        let mut c = BigUint::one();
        let mut m = 2u64;
        while m < n {
            c += self.a(m) * (m - 1);
            m *= 2;
        }
        // w-cycles of length P..n−1 contribute Σ (m − 1)
        let p = self.p();
        if n > p {
            let lo = p - 1;
            let hi = n - 2;
            let s = (BigUint::from(lo) + hi) * (hi - lo + 1) / 2u32;
            c += s * self.w_copies;
        }
        c
    }

    /// Vertices of the subgraph built from all cycles of length ≤ n.
    pub fn level_size(&self, n: u64) -> BigUint {
        self.offset(n + 1)
    }

    /// Position j of a vertex in the enumeration (u has j = 1).
    pub fn index(&self, v: &GVertex) -> Result<BigUint, GurevichError> {
        match *v {
            GVertex::U => Ok(BigUint::one()),
            GVertex::V { n, i, k } => {
                if n < 2 || k == 0 || k >= n || i == 0 || BigUint::from(i) > self.a(n) {
                    return Err(GurevichError::BadVertex(format!("{v:?}")));
                }
                Ok(self.offset(n) + BigUint::from(i - 1) * (n - 1) + k)
            }
            GVertex::W { n, k, copy } => {
                if n < self.p() || k == 0 || k >= n || copy >= self.w_copies {
                    return Err(GurevichError::BadVertex(format!("{v:?}")));
                }
                Ok(self.offset(n) + self.a(n) * (n - 1) + BigUint::from(copy) * (n - 1) + k)
            }
        }
    }

    /// Embedded value 1/j of a vertex.
    pub fn value(&self, v: &GVertex) -> Result<Q, GurevichError> {
        Ok(Q::new(BigInt::one(), BigInt::from(self.index(v)?)))
    }

    /// Cycle length a vertex lies on (1 for u).
    pub fn cycle_length(v: &GVertex) -> u64 {
        match *v {
            GVertex::U => 1,
            GVertex::V { n, .. } | GVertex::W { n, .. } => n,
        }
    }

    /// Successors of a vertex other than u (u has one edge into each cycle).
    pub fn next(v: &GVertex) -> GVertex {
        match *v {
            GVertex::U => GVertex::U,
            GVertex::V { n, i, k } => {
                if k + 1 == n {
                    GVertex::U
                } else {
                    GVertex::V { n, i, k: k + 1 }
                }
            }
            GVertex::W { n, k, copy } => {
                if k + 1 == n {
                    GVertex::U
                } else {
                    GVertex::W { n, k: k + 1, copy }
                }
            }
        }
    }

    /// Whether a → b is an edge of G.
    pub fn has_edge(&self, a: &GVertex, b: &GVertex) -> bool {
        match a {
            GVertex::U => match b {
                GVertex::U => true,
                GVertex::V { k, .. } | GVertex::W { k, .. } => *k == 1 && self.index(b).is_ok(),
            },
            _ => Self::next(a) == *b,
        }
    }

    /// The cycle vertices u, c_1, …, c_{m−1} of every cycle of length m ≤ n,
    /// in enumeration order, capped.
    pub fn level_vertices(&self, n: u64) -> Result<Vec<GVertex>, GurevichError> {
        let size = self.level_size(n);
        if size > BigUint::from(VERTEX_CAP) {
            return Err(GurevichError::VertexCap { level: n, vertices: size.to_string(), cap: VERTEX_CAP });
        }
        let mut out = vec![GVertex::U];
        for m in 2..=n {
            let am = self.a(m).to_u64().expect("capped");
            for i in 1..=am {
                out.extend((1..m).map(|k| GVertex::V { n: m, i, k }));
            }
            if m >= self.p() {
                for copy in 0..self.w_copies {
                    out.extend((1..m).map(|k| GVertex::W { n: m, k, copy }));
                }
            }
        }
        Ok(out)
    }

    /// Vertex shift on the cycles of length ≤ n, vertices in enumeration order.
    pub fn materialize(&self, n: u64) -> Result<(Digraph, Vec<GVertex>), GurevichError> {
        let verts = self.level_vertices(n)?;
        let mut g = Digraph::new(verts.len());
        for (j, v) in verts.iter().enumerate() {
            match v {
                GVertex::U => g.add_edge(0, 0),
                GVertex::V { k, .. } | GVertex::W { k, .. } => {
                    if *k == 1 {
                        g.add_edge(0, j);
                    }
                    // the cycle successor is the next vertex in enumeration order
                    if Self::next(v) == GVertex::U {
                        g.add_edge(j, 0);
                    } else {
                        g.add_edge(j, j + 1);
                    }
                }
            }
        }
        Ok((g, verts))
    }

    /// Graphviz rendering of the level-n subgraph.
    pub fn to_dot(&self, n: u64) -> Result<String, GurevichError> {
        let (g, verts) = self.materialize(n)?;
        let mut s = String::from("digraph G {\n");
        for (j, v) in verts.iter().enumerate() {
            let label = match v {
                GVertex::U => "u".to_string(),
                GVertex::V { n, i, k } => format!("v{k}^{n},{i}"),
                GVertex::W { n, k, copy } => format!("w{k}^{n}#{copy}"),
            };
            let _ = writeln!(s, "  q{} [label=\"{label}\"];", j + 1);
        }
        for (a, outs) in g.out.iter().enumerate() {
            for &b in outs {
                let _ = writeln!(s, "  q{} -> q{};", a + 1, b + 1);
            }
        }
        s.push_str("}\n");
        Ok(s)
    }

    /// Σ_{m ≤ n} f(m) r^m.
    pub fn loop_series(&self, r: &Q, n: u64) -> Q {
        let mut acc = q_int(0);
        let mut pow = q_int(1);
        for m in 1..=n {
            pow *= r;
            let f = self.f_uu(m);
            if !f.is_zero() {
                acc += &pow * Q::from_integer(BigInt::from(f));
            }
        }
        acc
    }
}

/// First-return and path-count ledger of u.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesLedger {
    pub n: u32,
    #[serde(with = "rational::serde_q")]
    pub l: Q,
    /// f(1..=n_max), index 0 holds f(1)
    #[serde(skip)]
    pub f_terms: Vec<BigUint>,
    /// p(0..=p_max) with p(0) = 1
    #[serde(skip)]
    pub p_terms: Vec<BigUint>,
    /// (n, Σ_{m≤n} f(m) L^m) for n ≤ 256 and at every power of two
    #[serde(skip)]
    pub partial_sums: Vec<(u64, Q)>,
}

const DENSE_PARTIALS: u64 = 256;

impl SeriesLedger {
    /// Builds f up to `n_max` and p up to `p_max` (p needs quadratic work).
    pub fn build(graph: &GurevichGraph, l: &Q, n_max: u64, p_max: u64) -> Self {
        let f_terms: Vec<BigUint> = (1..=n_max).map(|m| graph.f_uu(m)).collect();
        let p_max = p_max.min(n_max) as usize;
        let mut p_terms = vec![BigUint::one()];
        for n in 1..=p_max {
            let mut s = BigUint::zero();
            for j in 1..=n {
                let f = &f_terms[j - 1];
                if !f.is_zero() {
                    s += f * &p_terms[n - j];
                }
            }
            p_terms.push(s);
        }
        let mut partial_sums = Vec::new();
        let mut acc = q_int(0);
        let mut pow = q_int(1);
        for (idx, f) in f_terms.iter().enumerate() {
            let n = idx as u64 + 1;
            pow *= l;
            if !f.is_zero() {
                acc += &pow * Q::from_integer(BigInt::from(f.clone()));
            }
            if n <= DENSE_PARTIALS || n.is_power_of_two() || n == n_max {
                partial_sums.push((n, acc.clone()));
            }
        }
        SeriesLedger { n: graph.n, l: l.clone(), f_terms, p_terms, partial_sums }
    }

    /// CSV with columns n,a,f,p,partial_sum (p blank beyond the p range).
    pub fn to_csv(&self, graph: &GurevichGraph) -> String {
        let mut s = String::from("n,a,f,p,partial_sum_num,partial_sum_den\n");
        for (n, sum) in &self.partial_sums {
            let p = self.p_terms.get(*n as usize).map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{n},{},{},{p},{},{}",
                graph.a(*n),
                self.f_terms[*n as usize - 1],
                sum.numer(),
                sum.denom()
            );
        }
        s
    }
}

/// Σ_{n ≤ n_max} f(n) L^n exactly (integer Horner, one denominator).
pub fn return_sum(graph: &GurevichGraph, l: &Q, n_max: u64) -> Q {
    let (p, q) = (l.numer().clone(), l.denom().clone());
    let mut num = BigInt::zero();
    let mut pn = BigInt::one();
    for m in 1..=n_max {
        pn *= &p;
        num *= &q;
        let f = graph.f_uu(m);
        if !f.is_zero() {
            num += BigInt::from(f) * &pn;
        }
    }
    Q::new(num, num_traits::pow(q, n_max as usize))
}

/// Σ_{n ≤ n_max} n·f(n)·L^n exactly.
pub fn weighted_return_sum(graph: &GurevichGraph, l: &Q, n_max: u64) -> Q {
    let (p, q) = (l.numer().clone(), l.denom().clone());
    let mut num = BigInt::zero();
    let mut pn = BigInt::one();
    for m in 1..=n_max {
        pn *= &p;
        num *= &q;
        let f = graph.f_uu(m);
        if !f.is_zero() {
            num += BigInt::from(f) * m * &pn;
        }
    }
    Q::new(num, num_traits::pow(q, n_max as usize))
}

/// Closed-form remainder Σ_{n > n_max} f(n) 2^(−n), split by family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCertificate {
    #[serde(with = "rational::serde_q")]
    pub a_tail: Q,
    #[serde(with = "rational::serde_q")]
    pub w_tail: Q,
    /// partial sum plus both tails
    #[serde(with = "rational::serde_q")]
    pub total: Q,
}

fn tails_at_half(graph: &GurevichGraph, n_max: u64) -> (Q, Q) {
    // a(2^k) 2^(−2^k) = 2^(−k) for k ≥ 2, minus 2^(−2^N) at k = N
    let k0 = 64 - n_max.leading_zeros() as i64; // smallest k with 2^k > n_max
    let mut a_tail = pow2(1 - k0.max(2));
    let big_n = graph.n as i64;
    if big_n >= 2 && big_n >= k0 {
        a_tail -= pow2(-(1i64 << big_n));
    }
    if big_n == 1 && k0 <= 1 {
        // a(2) = 1 under N = 1 sits outside the k ≥ 2 sum
        a_tail += q_frac(1, 4);
    }
    let from = n_max.max(graph.p() - 1) as i64;
    let w_tail = pow2(-from) * q_int(graph.w_copies as i64);
    (a_tail, w_tail)
}

/// Partial sums of the first-return series and its weighted companion.
#[derive(Debug, Clone, Serialize)]
pub struct ReturnSeriesReport {
    pub n: u32,
    pub n_max: u64,
    #[serde(with = "rational::serde_q")]
    pub l: Q,
    #[serde(with = "rational::serde_q")]
    pub partial: Q,
    pub partial_f64: f64,
    /// present at L = 1/2
    pub tails: Option<TailCertificate>,
    #[serde(with = "rational::serde_q")]
    pub weighted_partial: Q,
    pub weighted_partial_f64: f64,
    /// levels k with 2^k ≤ n_max whose v-cycles contribute exactly 1
    pub unit_levels: Vec<u32>,
}

pub fn return_series_partial(graph: &GurevichGraph, l: &Q, n_max: u64) -> ReturnSeriesReport {
    let n_max = n_max.max(1);
    let partial = return_sum(graph, l, n_max);
    let weighted_partial = weighted_return_sum(graph, l, n_max);
    let tails = (*l == q_frac(1, 2)).then(|| {
        let (a_tail, w_tail) = tails_at_half(graph, n_max);
        let total = &partial + &a_tail + &w_tail;
        TailCertificate { a_tail, w_tail, total }
    });
    ReturnSeriesReport {
        n: graph.n,
        n_max,
        l: l.clone(),
        partial_f64: rational::to_f64(&partial),
        partial,
        tails,
        weighted_partial_f64: rational::to_f64(&weighted_partial),
        weighted_partial,
        unit_levels: unit_levels(graph, n_max),
    }
}

fn unit_levels(graph: &GurevichGraph, n_max: u64) -> Vec<u32> {
    (2..64u32)
        .take_while(|k| (1u64 << k) <= n_max)
        .filter(|&k| {
            let n = 1u64 << k;
            // the v-part alone: n·a(n)·2^(−n) == 1
            let term = Q::from_integer(BigInt::from(graph.a(n) * n)) * pow2(-(n as i64));
            term == q_int(1)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recurrence {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
}

/// Vere-Jones classification at the radius L = 1/2 of the f-series.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub class: Recurrence,
    pub n_max: u64,
    /// Σ f(n) 2^(−n) including the closed-form tails
    #[serde(with = "rational::serde_q")]
    pub return_mass: Q,
    #[serde(with = "rational::serde_q")]
    pub weighted_partial: Q,
    /// number of exact unit contributions seen up to n_max; every later
    /// level k ≠ N contributes another 1, so the weighted series diverges
    pub unit_levels: u32,
    pub notes: Vec<String>,
}

pub fn classify(graph: &GurevichGraph, n_max: u64) -> Classification {
    let n_max = n_max.max(graph.p());
    let rep = return_series_partial(graph, &q_frac(1, 2), n_max);
    let mass = rep.tails.as_ref().expect("L = 1/2").total.clone();
    let one = q_int(1);
    let mut notes = vec![format!("sum f(n) 2^-n = {} with closed-form tails", fmt_q(&mass))];
    let class = if mass < one {
        notes.push("return mass below 1 at the radius: transient".into());
        Recurrence::Transient
    } else if mass > one {
        notes.push("return mass exceeds 1 at 1/2: R < 1/2 and the weighted series converges at R".into());
        Recurrence::PositiveRecurrent
    } else {
        notes.push(format!(
            "weighted partial sum {:.4} with {} unit levels up to n_max; each level 2^k, k >= 2, k != N adds exactly 1",
            rep.weighted_partial_f64,
            rep.unit_levels.len()
        ));
        Recurrence::NullRecurrent
    };
    Classification {
        class,
        n_max,
        return_mass: mass,
        weighted_partial: rep.weighted_partial,
        unit_levels: rep.unit_levels.len() as u32,
        notes,
    }
}

/// Certified enclosure of h(G_n) = −log r, where r solves Σ_{m≤n} f(m) r^m = 1.
#[derive(Debug, Clone, Serialize)]
pub struct SubgraphEntropy {
    pub level: u64,
    pub vertices: String,
    #[serde(with = "rational::serde_q")]
    pub r_lower: Q,
    #[serde(with = "rational::serde_q")]
    pub r_upper: Q,
    pub h_lower: f64,
    pub h_upper: f64,
    /// Σ_{m≤n} f(m) 2^(−m), strictly below 1 exactly when h < log 2
    #[serde(with = "rational::serde_q")]
    pub mass_at_half: Q,
    pub below_log2: bool,
}

impl SubgraphEntropy {
    pub fn width(&self) -> f64 {
        self.h_upper - self.h_lower
    }

    pub fn midpoint_r(&self) -> Q {
        (&self.r_lower + &self.r_upper) / q_int(2)
    }
}

// absorbs the rounding of one f64 conversion and one ln
const LOG_PAD: f64 = 1e-14;

/// Target width of the entropy enclosure.
pub const ENTROPY_WIDTH: f64 = 1e-9;

/// The level-n subgraph keeps every cycle of length ≤ n; the spectral radius
/// of a rose of cycles through one hub is 1/r for the root r above.
pub fn subgraph_entropy(graph: &GurevichGraph, n: u64) -> Result<SubgraphEntropy, GurevichError> {
    if n == 0 {
        return Err(GurevichError::ZeroLevel(n));
    }
    let size = graph.level_size(n);
    if size > BigUint::from(VERTEX_CAP) {
        return Err(GurevichError::VertexCap { level: n, vertices: size.to_string(), cap: VERTEX_CAP });
    }
    let half = q_frac(1, 2);
    let mass_at_half = graph.loop_series(&half, n);
    let one = q_int(1);
    // F is increasing on (0, 1] with F(1) ≥ f(1) = 1
    let (mut lo, mut hi) = if mass_at_half < one { (half.clone(), one.clone()) } else { (q_int(0), half.clone()) };
    if graph.loop_series(&hi, n) == one {
        lo = hi.clone();
    }
    while lo != hi && rational::to_f64(&((&hi - &lo) / &lo)) > ENTROPY_WIDTH / 4.0 {
        let mid = (&lo + &hi) / q_int(2);
        if graph.loop_series(&mid, n) < one {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h_lower = (-rational::to_f64(&hi).ln() - LOG_PAD).max(0.0);
    let h_upper = -rational::to_f64(&lo).ln() + LOG_PAD;
    let below_log2 = mass_at_half < one && h_upper < std::f64::consts::LN_2;
    Ok(SubgraphEntropy {
        level: n,
        vertices: size.to_string(),
        r_lower: lo,
        r_upper: hi,
        h_lower,
        h_upper,
        mass_at_half,
        below_log2,
    })
}

/// One row of the no-maximizer evidence table.
#[derive(Debug, Clone, Serialize)]
pub struct EvidenceRow {
    pub level: u64,
    pub h_lower: f64,
    pub h_upper: f64,
    pub gap_to_log2: f64,
    /// mean return time of the maximizing loop measure on the level
    pub optimal_mean_return: f64,
    /// loop measure with return law ∝ f(n) 2^(−n) truncated at the level
    pub geometric_entropy: f64,
    pub geometric_mean_return: f64,
    pub geometric_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContrastCase {
    pub description: String,
    pub graph_entropy: f64,
    pub measure_entropy: f64,
    pub mme_exists: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoMmeReport {
    pub n: u32,
    pub log2: f64,
    pub rows: Vec<EvidenceRow>,
    /// every level strictly below log 2 while the mean return of the
    /// level maximizer keeps growing
    pub levels_below_log2: bool,
    pub mean_return_increasing: bool,
    pub contrast: ContrastCase,
}

pub fn no_mme_evidence(graph: &GurevichGraph, levels: &[u64]) -> Result<NoMmeReport, GurevichError> {
    let mut rows = Vec::new();
    for &n in levels {
        let e = subgraph_entropy(graph, n)?;
        let r = rational::to_f64(&e.midpoint_r());
        let mut mean = 0.0;
        let mut geo_mass = 0.0;
        let mut geo_mean = 0.0;
        for m in 1..=n {
            let f = rational::ln_biguint(&graph.f_uu(m));
            if f == f64::NEG_INFINITY {
                continue;
            }
            let fm = f.exp();
            let mf = m as f64;
            mean += mf * (f + mf * r.ln()).exp();
            let g = fm * 0.5f64.powi(m as i32);
            geo_mass += g;
            geo_mean += mf * g;
        }
        geo_mean /= geo_mass;
        // p_m = f(m) 2^(−m)/Z gives (Σ p_m log(f(m)/p_m)) / Σ m p_m = log 2 + log Z / E
        let geometric_entropy = std::f64::consts::LN_2 + geo_mass.ln() / geo_mean;
        rows.push(EvidenceRow {
            level: n,
            h_lower: e.h_lower,
            h_upper: e.h_upper,
            gap_to_log2: std::f64::consts::LN_2 - e.h_upper,
            optimal_mean_return: mean,
            geometric_entropy,
            geometric_mean_return: geo_mean,
            geometric_mass: geo_mass,
        });
    }
    let levels_below_log2 = rows.iter().all(|r| r.h_upper < std::f64::consts::LN_2);
    let mean_return_increasing = rows.windows(2).all(|w| w[1].optimal_mean_return >= w[0].optimal_mean_return);
    Ok(NoMmeReport {
        n: graph.n,
        log2: std::f64::consts::LN_2,
        rows,
        levels_below_log2,
        mean_return_increasing,
        contrast: ContrastCase {
            description: "single loop at u: the fixed point carries the only invariant measure".into(),
            graph_entropy: 0.0,
            measure_entropy: 0.0,
            mme_exists: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_values() {
        let g = GurevichGraph::new(2).unwrap();
        assert_eq!(g.f_uu(1), BigUint::from(1u32));
        assert_eq!(g.f_uu(2), BigUint::zero());
        assert_eq!(g.f_uu(3), BigUint::zero());
        assert_eq!(g.f_uu(4), BigUint::from(3u32));
        assert_eq!(g.f_uu(8), BigUint::from(33u32));
        assert_eq!(g.f_uu(6), BigUint::from(1u32));
    }

    #[test]
    fn series_identity() {
        let g = GurevichGraph::new(2).unwrap();
        let rep = return_series_partial(&g, &q_frac(1, 2), 64);
        assert_eq!(rep.partial, q_frac(63, 64) - pow2(-64));
        assert_eq!(rep.tails.unwrap().total, q_int(1));
        assert_eq!(classify(&g, 64).class, Recurrence::NullRecurrent);
        let none = GurevichGraph::with_w_copies(2, 0).unwrap();
        let c = classify(&none, 64);
        assert_eq!(c.return_mass, q_int(1) - pow2(-4));
        assert_eq!(c.class, Recurrence::Transient);
        let two = GurevichGraph::with_w_copies(2, 2).unwrap();
        assert_eq!(classify(&two, 64).class, Recurrence::PositiveRecurrent);
    }

    #[test]
    fn enumeration() {
        let g = GurevichGraph::new(2).unwrap();
        assert_eq!(g.index(&GVertex::V { n: 4, i: 1, k: 1 }).unwrap(), BigUint::from(2u32));
        assert_eq!(g.index(&GVertex::W { n: 5, k: 1, copy: 0 }).unwrap(), BigUint::from(11u32));
        assert_eq!(g.level_size(8), BigUint::from(256u32));
        let verts = g.level_vertices(9).unwrap();
        for (j, v) in verts.iter().enumerate() {
            assert_eq!(g.index(v).unwrap(), BigUint::from(j as u64 + 1));
        }
    }

    #[test]
    fn level_one_has_zero_entropy() {
        let g = GurevichGraph::new(2).unwrap();
        let e = subgraph_entropy(&g, 1).unwrap();
        assert!(e.h_upper < 1e-12);
    }

    #[test]
    fn rose_matches_power_iteration() {
        let g = GurevichGraph::new(2).unwrap();
        for n in [4, 6, 8, 12] {
            let e = subgraph_entropy(&g, n).unwrap();
            let (dg, _) = g.materialize(n).unwrap();
            let (lo, hi) = dg.radius(1e-10, 200_000).log_bracket();
            assert!(lo <= e.h_upper + 1e-9 && e.h_lower <= hi + 1e-9, "n={n}: {lo} {hi} vs {e:?}");
        }
    }
}
