//! Tracing pseudo-orbits in the closure of the path space of G.
//!
//! Vertices are embedded as q_j = 1/j and the closure adds the value 0.
//! Points are compared with d(x, y) = Σ_i 4^(−|i|) |x_i − y_i|. A
//! γ-pseudo-orbit is recoded into an auxiliary finite-alphabet shift Z
//! (vertices of the level-K subgraph plus a blank c standing for every
//! small coordinate), traced there by the diagonal construction, and the
//! blanks are filled back with w-chains of matching length.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GVertex, GurevichError, GurevichGraph};
use crate::rational::{self, pow2, q_frac, q_int, Q};
use crate::shadowing::{diagonal_tracer, PseudoOrbit};
use crate::spaces::{Bracket, Extension, PointRep, Symbol, SymbolicWindow};

/// One coordinate of a point in the closure: a vertex or the added point 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Zero,
    Vertex(GVertex),
}

/// Coordinates lo..lo+len of a point; everything else is unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaWindow {
    pub lo: i64,
    pub cells: Vec<Cell>,
}

impl GammaWindow {
    pub fn hi(&self) -> i64 {
        self.lo + self.cells.len() as i64
    }

    pub fn get(&self, i: i64) -> Option<&Cell> {
        let off = i - self.lo;
        (off >= 0).then(|| self.cells.get(off as usize)).flatten()
    }

    /// The window of σ^n of this point.
    pub fn shifted(&self, n: i64) -> GammaWindow {
        GammaWindow { lo: self.lo - n, cells: self.cells.clone() }
    }

    fn covers(&self, radius: i64) -> bool {
        self.lo <= -radius && self.hi() > radius
    }
}

/// A finite γ-pseudo-orbit z^0, …, z^(T−1), each given on a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaPseudoOrbit {
    pub points: Vec<GammaWindow>,
}

/// Every constant the tracing argument derives from ε.
#[derive(Debug, Clone, Serialize)]
pub struct GammaParams {
    #[serde(with = "rational::serde_q")]
    pub eps: Q,
    /// vertices outside the level K − 1 subgraph have value < ε/8
    pub k: u64,
    /// w-chains of length ≥ J are exactly those outside level K
    pub j: u64,
    /// vertices of the level-K subgraph; Z has one more symbol, the blank
    pub level_k_size: u64,
    pub z_memory: usize,
    /// symbolic depth m: agreement on |i| < m keeps Z-points ε/8 close
    pub z_depth: u32,
    #[serde(with = "rational::serde_q")]
    pub delta_z: Q,
    /// smallest gap between distinct values of level-K vertices
    #[serde(with = "rational::serde_q")]
    pub separation: Q,
    #[serde(with = "rational::serde_q")]
    pub delta: Q,
    pub big_m: i64,
    #[serde(with = "rational::serde_q")]
    pub gamma: Q,
    /// windows must cover |i| ≤ radius so unknown tails stay below γ/2
    pub window_radius: i64,
}

impl GammaParams {
    fn blank(&self) -> Symbol {
        self.level_k_size as Symbol
    }
}

/// Derives K, J, the Z modulus, M, γ and the window radius for ε.
pub fn gamma_parameters(graph: &GurevichGraph, eps: &Q) -> Result<GammaParams, GurevichError> {
    if !eps.is_positive() || *eps > q_int(1) || graph.w_copies != 1 {
        return Err(GurevichError::BadParameter);
    }
    let eighth = eps / q_int(8);
    // smallest K with 1/(|V(G_{K−1})| + 1) < ε/8
    let mut k = 2u64;
    loop {
        let outside = graph.level_size(k - 1) + 1u32;
        if Q::new(BigInt::one(), BigInt::from(outside)) < eighth {
            break;
        }
        k += 1;
    }
    let size = graph.level_size(k);
    if size > BigUint::from(super::VERTEX_CAP) {
        return Err(GurevichError::VertexCap { level: k, vertices: size.to_string(), cap: super::VERTEX_CAP });
    }
    let level_k_size: u64 = size.try_into().expect("capped");
    let j = graph.p().max(k + 1);
    // the longest forbidden word u c^(J−2) u has length J
    let z_memory = (j - 1) as usize;
    let mut z_depth = 1u32;
    while q_frac(8, 3) * rational::pow4_neg(z_depth as u64) >= eighth {
        z_depth += 1;
    }
    let delta_z = pow2(-(z_depth as i64 + z_memory as i64));
    let v = Q::from_integer(BigInt::from(level_k_size));
    let separation = q_int(1) / (&v * (&v + q_int(1)));
    let delta = rational::q_min(rational::q_min(delta_z.clone(), separation.clone()), eighth.clone());
    // M > J with Σ_{|i|≥M} 2^(−|i|) = 4·2^(−M) < δ/8
    let mut big_m = j as i64 + 1;
    while q_int(4) * pow2(-big_m) >= &delta / q_int(8) {
        big_m += 1;
    }
    let gamma = &delta * rational::pow4_neg((2 * big_m + 1) as u64);
    let mut window_radius = 2 * big_m + 2;
    while outside_mass(-window_radius, window_radius + 1) >= &gamma / q_int(2) {
        window_radius += 1;
    }
    Ok(GammaParams {
        eps: eps.clone(),
        k,
        j,
        level_k_size,
        z_memory,
        z_depth,
        delta_z,
        separation,
        delta,
        big_m,
        gamma,
        window_radius,
    })
}

/// Σ 4^(−|i|) over i outside lo..hi.
fn outside_mass(lo: i64, hi: i64) -> Q {
    let mut inside = q_int(0);
    for i in lo..hi {
        inside += rational::pow4_neg(i.unsigned_abs());
    }
    q_frac(5, 3) - inside
}

const PREC: u64 = 320;

/// Interval sum kept as integers in units of 2^(−PREC).
#[derive(Default)]
struct DyadicSum {
    lo: BigInt,
    hi: BigInt,
}

impl DyadicSum {
    /// Adds 4^(−|i|)·|x − y| for exact fractions x, y.
    fn add_diff(&mut self, x: &(BigUint, BigUint), y: &(BigUint, BigUint), i: i64) {
        let a = BigInt::from(&x.0 * &y.1);
        let b = BigInt::from(&y.0 * &x.1);
        let num = (a - b).abs();
        if num.is_zero() {
            return;
        }
        let den = BigInt::from(&x.1 * &y.1);
        let shift = PREC - 2 * i.unsigned_abs();
        let (q, r) = (num << shift).div_rem(&den);
        self.lo += &q;
        self.hi += q + if r.is_zero() { 0 } else { 1 };
    }

    fn add_upper(&mut self, v: &Q) {
        let scaled = v * Q::from_integer(BigInt::one() << PREC);
        self.hi += scaled.ceil().to_integer();
    }

    fn bracket(&self) -> Bracket {
        let den = BigInt::one() << PREC;
        Bracket { lower: Q::new(self.lo.clone(), den.clone()), upper: Q::new(self.hi.clone(), den) }
    }
}

fn cell_value(graph: &GurevichGraph, c: &Cell) -> Result<(BigUint, BigUint), GurevichError> {
    Ok(match c {
        Cell::Zero => (BigUint::zero(), BigUint::one()),
        Cell::Vertex(v) => (BigUint::one(), graph.index(v)?),
    })
}

/// d(x, y) for points known on windows; unknown coordinates count fully.
pub fn gamma_dist(graph: &GurevichGraph, x: &GammaWindow, y: &GammaWindow) -> Result<Bracket, GurevichError> {
    let lo = x.lo.max(y.lo);
    let hi = x.hi().min(y.hi());
    if 2 * lo.unsigned_abs().max(hi.unsigned_abs()) >= PREC {
        return Err(GurevichError::Inconsistent("window wider than the accumulator precision".into()));
    }
    let mut acc = DyadicSum::default();
    for i in lo..hi {
        let (a, b) = (x.get(i).unwrap(), y.get(i).unwrap());
        if a != b {
            acc.add_diff(&cell_value(graph, a)?, &cell_value(graph, b)?, i);
        }
    }
    acc.add_upper(&outside_mass(lo, hi.max(lo)));
    Ok(acc.bracket())
}

/// Checks that a window can be a stretch of a point in the closure: edges
/// between vertices, 0 only next to u or 0, and no 0-run closed by u on both sides.
fn validate_window(graph: &GurevichGraph, w: &GammaWindow) -> Result<(), GurevichError> {
    for c in &w.cells {
        if let Cell::Vertex(v) = c {
            graph.index(v)?;
        }
    }
    let bad = |msg: String| Err(GurevichError::InvalidWindow(msg));
    for (t, pair) in w.cells.windows(2).enumerate() {
        let at = w.lo + t as i64;
        match (&pair[0], &pair[1]) {
            (Cell::Vertex(a), Cell::Vertex(b)) if !graph.has_edge(a, b) => return bad(format!("no edge at {at}")),
            (Cell::Vertex(v), Cell::Zero) | (Cell::Zero, Cell::Vertex(v)) if *v != GVertex::U => {
                return bad(format!("0 next to a vertex other than u at {at}"))
            }
            _ => {}
        }
    }
    let mut last_u: Option<usize> = None;
    for (t, c) in w.cells.iter().enumerate() {
        if *c == Cell::Vertex(GVertex::U) {
            if let Some(s) = last_u {
                if t > s + 1 && w.cells[s + 1] == Cell::Zero {
                    return bad(format!("0-run closed by u on both sides at {}", w.lo + s as i64));
                }
            }
            last_u = Some(t);
        }
    }
    Ok(())
}

fn z_symbol(graph: &GurevichGraph, params: &GammaParams, c: &Cell) -> Result<Symbol, GurevichError> {
    match c {
        Cell::Vertex(v) if GurevichGraph::cycle_length(v) <= params.k => {
            let j: u64 = graph.index(v)?.try_into().expect("level K is capped");
            Ok((j - 1) as Symbol)
        }
        _ => Ok(params.blank()),
    }
}

/// Symbol of Z back as a cell (the blank becomes 0).
fn z_cell(verts: &[GVertex], params: &GammaParams, s: Symbol) -> Cell {
    if s == params.blank() {
        Cell::Zero
    } else {
        Cell::Vertex(verts[s as usize].clone())
    }
}

/// Admissibility in Z: level-K edges, the blank only next to u or itself,
/// and blank runs between two u's of length at least J − 1.
fn z_admissible(graph: &GurevichGraph, params: &GammaParams, verts: &[GVertex], w: &[Symbol]) -> bool {
    let blank = params.blank();
    let u = 0 as Symbol;
    for p in w.windows(2) {
        let ok = match (p[0] == blank, p[1] == blank) {
            (true, true) => true,
            (true, false) => p[1] == u,
            (false, true) => p[0] == u,
            (false, false) => graph.has_edge(&verts[p[0] as usize], &verts[p[1] as usize]),
        };
        if !ok {
            return false;
        }
    }
    let mut last_u: Option<usize> = None;
    for (t, &s) in w.iter().enumerate() {
        if s == u {
            if let Some(a) = last_u {
                let run = t - a - 1;
                if run > 0 && w[a + 1] == blank && (run as u64) < params.j - 1 {
                    return false;
                }
            }
            last_u = Some(t);
        }
    }
    true
}

/// Proof-chain terms for one time n of the certificate.
#[derive(Debug, Clone, Serialize)]
pub struct StepAudit {
    pub n: usize,
    /// Σ_{|i| ≥ M} 4^(−|i|)|q_{n+i} − z^n_i|, unknown tail included (bound ε/4)
    #[serde(with = "rational::serde_q")]
    pub far: Q,
    /// positions |i| < M where the Z-coding kept a vertex (bound d(σ^n x, y^n))
    #[serde(with = "rational::serde_q")]
    pub kept: Q,
    /// positions |i| < M coded by the blank (bound ε/3)
    #[serde(with = "rational::serde_q")]
    pub substituted: Q,
    /// d(σ^n x, y^n) in Z with the blank read as 0 (bound ε/8)
    #[serde(with = "rational::serde_q")]
    pub z_error: Q,
    /// d(σ^n q, z^n) recomputed directly
    #[serde(with = "rational::serde_q")]
    pub direct: Q,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaCertificate {
    pub params: GammaParams,
    #[serde(with = "rational::serde_q")]
    pub gap_worst: Q,
    /// traced point q on its window
    pub traced: GammaWindow,
    pub blank_runs_filled: usize,
    pub steps: Vec<StepAudit>,
    #[serde(with = "rational::serde_q")]
    pub worst: Q,
    pub holds: bool,
}

impl GammaCertificate {
    /// Recomputes every d(σ^n q, z^n) from the windows alone.
    pub fn reverify(&self, graph: &GurevichGraph, po: &GammaPseudoOrbit) -> Result<Q, GurevichError> {
        let mut worst = q_int(0);
        for (n, z) in po.points.iter().enumerate() {
            let d = gamma_dist(graph, &self.traced.shifted(n as i64), z)?.upper;
            if d > worst {
                worst = d;
            }
        }
        Ok(worst)
    }
}

/// Traces a γ-pseudo-orbit through the auxiliary shift Z.
pub fn trace_in_gamma(graph: &GurevichGraph, po: &GammaPseudoOrbit, eps: &Q) -> Result<GammaCertificate, GurevichError> {
    let params = gamma_parameters(graph, eps)?;
    let radius = params.window_radius;
    if po.points.len() < 2 {
        return Err(GurevichError::TooFewPoints);
    }
    for z in &po.points {
        if !z.covers(radius) {
            let got = (-z.lo).min(z.hi() - 1);
            return Err(GurevichError::WindowTooShort { needed: radius, got });
        }
        validate_window(graph, z)?;
    }
    // γ-pseudo-orbit check
    let mut gap_worst = q_int(0);
    for pair in po.points.windows(2) {
        let d = gamma_dist(graph, &pair[0].shifted(1), &pair[1])?.upper;
        if d > gap_worst {
            gap_worst = d;
        }
    }
    if gap_worst >= params.gamma {
        return Err(GurevichError::GammaTooLarge {
            gap: rational::to_f64(&gap_worst).to_string(),
            gamma: rational::to_f64(&params.gamma).to_string(),
        });
    }

    let verts = graph.level_vertices(params.k)?;
    // recode into Z on |i| ≤ radius
    let mut ys: Vec<Vec<Symbol>> = Vec::with_capacity(po.points.len());
    for z in &po.points {
        let y: Vec<Symbol> = (-radius..=radius)
            .map(|i| z_symbol(graph, &params, z.get(i).unwrap()))
            .collect::<Result<_, _>>()?;
        if !z_admissible(graph, &params, &verts, &y) {
            return Err(GurevichError::Inconsistent(format!("recoded window is not admissible in Z: {y:?}")));
        }
        ys.push(y);
    }
    // δ_Z-pseudo-orbit in Z: σy^i and y^(i+1) agree on |j| ≤ m + memory
    let depth = params.z_depth as i64 + params.z_memory as i64;
    for (i, pair) in ys.windows(2).enumerate() {
        for jj in -depth..=depth {
            let a = pair[0][(jj + 1 + radius) as usize];
            let b = pair[1][(jj + radius) as usize];
            if a != b {
                return Err(GurevichError::Inconsistent(format!("Z pseudo-orbit breaks at step {i}, coordinate {jj}")));
            }
        }
    }
    let z_points: Vec<PointRep> = ys
        .iter()
        .map(|y| PointRep::Symbolic(SymbolicWindow::new(-radius, y.clone(), Extension::Unspecified)))
        .collect();
    let x = diagonal_tracer(&PseudoOrbit::finite(z_points, params.delta_z.clone()), true)?;
    if !z_admissible(graph, &params, &verts, &x.symbols) {
        return Err(GurevichError::Inconsistent("diagonal tracer left Z".into()));
    }

    // fill blank runs closed by u on both sides with w-chains
    let x_cells: Vec<Cell> = x.symbols.iter().map(|&s| z_cell(&verts, &params, s)).collect();
    let mut q_cells = x_cells.clone();
    let mut filled = 0usize;
    let mut last_u: Option<usize> = None;
    for t in 0..x_cells.len() {
        if x_cells[t] == Cell::Vertex(GVertex::U) {
            if let Some(a) = last_u {
                let run = (t - a - 1) as u64;
                if run > 0 && x_cells[a + 1] == Cell::Zero {
                    let len = run + 1;
                    for (off, slot) in q_cells[a + 1..t].iter_mut().enumerate() {
                        *slot = Cell::Vertex(GVertex::W { n: len, k: off as u64 + 1, copy: 0 });
                    }
                    filled += 1;
                }
            }
            last_u = Some(t);
        }
    }
    let traced = GammaWindow { lo: x.lo, cells: q_cells };
    validate_window(graph, &traced)?;
    let x_window = GammaWindow { lo: x.lo, cells: x_cells };

    let big_m = params.big_m;
    let eighth = &params.eps / q_int(8);
    let mut steps = Vec::with_capacity(po.points.len());
    let mut worst = q_int(0);
    let mut all = true;
    for (n, z) in po.points.iter().enumerate() {
        let qn = traced.shifted(n as i64);
        let xn = x_window.shifted(n as i64);
        let yn = GammaWindow {
            lo: -radius,
            cells: ys[n].iter().map(|&s| z_cell(&verts, &params, s)).collect(),
        };
        let (mut far, mut kept, mut subst) = (DyadicSum::default(), DyadicSum::default(), DyadicSum::default());
        let (lo, hi) = (qn.lo.max(z.lo), qn.hi().min(z.hi()));
        let mut small_ok = true;
        for i in lo..hi {
            let (a, b) = (qn.get(i).unwrap(), z.get(i).unwrap());
            let blank = ys[n].get((i + radius) as usize).map_or(false, |&s| s == params.blank());
            if blank && i.abs() < big_m {
                small_ok &= below(graph, a, &eighth)? && below(graph, b, &eighth)?;
            }
            if a == b {
                continue;
            }
            let (va, vb) = (cell_value(graph, a)?, cell_value(graph, b)?);
            if i.abs() >= big_m {
                far.add_diff(&va, &vb, i);
            } else if blank {
                subst.add_diff(&va, &vb, i);
            } else {
                kept.add_diff(&va, &vb, i);
            }
        }
        far.add_upper(&outside_mass(lo, hi));
        let z_error = gamma_dist(graph, &xn, &yn)?.upper;
        let direct = gamma_dist(graph, &qn, z)?.upper;
        let (far, kept, substituted) = (far.bracket().upper, kept.bracket().upper, subst.bracket().upper);
        let holds = small_ok
            && far <= &params.eps / q_int(4)
            && kept <= z_error
            && z_error < eighth
            && substituted <= &params.eps / q_int(3)
            && direct < params.eps;
        all &= holds;
        if direct > worst {
            worst = direct.clone();
        }
        steps.push(StepAudit { n, far, kept, substituted, z_error, direct, holds });
    }
    Ok(GammaCertificate { params, gap_worst, traced, blank_runs_filled: filled, steps, worst, holds: all })
}

fn below(graph: &GurevichGraph, c: &Cell, bound: &Q) -> Result<bool, GurevichError> {
    let (num, den) = cell_value(graph, c)?;
    Ok(Q::new(BigInt::from(num), BigInt::from(den)) < *bound)
}

/// The orbit of the fixed point 0^∞ on the windows the parameters need.
pub fn zero_orbit(params: &GammaParams, len: usize) -> GammaPseudoOrbit {
    let r = params.window_radius;
    let w = GammaWindow { lo: -r, cells: vec![Cell::Zero; (2 * r + 1) as usize] };
    GammaPseudoOrbit { points: vec![w; len] }
}

/// A random γ-pseudo-orbit of length `len`: short cycles of the level-K
/// subgraph interleaved with long cycles, 0-gaps of the closure and jumps
/// that relabel a long w-cycle far from the window edges.
pub fn constructed_pseudo_orbit(
    graph: &GurevichGraph,
    params: &GammaParams,
    len: usize,
    seed: u64,
) -> Result<GammaPseudoOrbit, GurevichError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = params.window_radius as usize;
    let mut scroll: Vec<Cell> = Vec::new();
    let short: Vec<(u64, u64)> = (1..=params.k)
        .flat_map(|n| {
            let a: u64 = graph.a(n).try_into().unwrap_or(0);
            let mut v: Vec<(u64, u64)> = (1..=a.min(64)).map(|i| (n, i)).collect();
            if n >= graph.p() {
                v.push((n, 0));
            }
            v
        })
        .collect();
    let push_cycle = |scroll: &mut Vec<Cell>, n: u64, i: u64| {
        scroll.push(Cell::Vertex(GVertex::U));
        for k in 1..n {
            scroll.push(Cell::Vertex(if i == 0 { GVertex::W { n, k, copy: 0 } } else { GVertex::V { n, i, k } }));
        }
    };
    let need = len + 2 * r + 4;
    while scroll.len() < need + 2 * r {
        match rng.gen_range(0..10) {
            0..=4 => {
                let (n, i) = short[rng.gen_range(0..short.len())];
                push_cycle(&mut scroll, n, i);
            }
            5 => push_cycle(&mut scroll, rng.gen_range(params.j..=params.j + 30), 0),
            6 => {
                let n = 1u64 << (params.k.ilog2() + 1);
                let a: u64 = graph.a(n).try_into().unwrap_or(u64::MAX);
                push_cycle(&mut scroll, n, rng.gen_range(1..=a.min(1 << 20)));
            }
            7 | 8 => push_cycle(&mut scroll, rng.gen_range(200..=260), 0),
            _ => {
                scroll.push(Cell::Vertex(GVertex::U));
                let gap = 2 * r + 2 + rng.gen_range(0..8);
                scroll.extend(std::iter::repeat(Cell::Zero).take(gap));
            }
        }
    }
    scroll.push(Cell::Vertex(GVertex::U));

    let mut points = Vec::with_capacity(len);
    let mut center = r;
    for step in 0..len {
        if step > 0 {
            center += 1;
            if rng.gen_bool(0.3) {
                relabel_long_cycle(&mut scroll, center, r);
            }
        }
        let cells = scroll[center - r..=center + r].to_vec();
        points.push(GammaWindow { lo: -(r as i64), cells });
    }
    Ok(GammaPseudoOrbit { points })
}

// Lengthens the w-cycle covering the window by one when its closing u lies
// beyond the window: only coordinates with tiny values change.
fn relabel_long_cycle(scroll: &mut Vec<Cell>, center: usize, r: usize) {
    let Cell::Vertex(GVertex::W { n, k, copy: 0 }) = scroll[center] else { return };
    if n < 200 {
        return;
    }
    let start = center - k as usize;
    let end = start + n as usize;
    if end <= center + r + 1 {
        return;
    }
    let m = n + 1;
    for kk in 1..n {
        scroll[start + kk as usize] = Cell::Vertex(GVertex::W { n: m, k: kk, copy: 0 });
    }
    scroll.insert(end, Cell::Vertex(GVertex::W { n: m, k: n, copy: 0 }));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_for_quarter() {
        let g = GurevichGraph::new(2).unwrap();
        let p = gamma_parameters(&g, &q_frac(1, 4)).unwrap();
        assert_eq!(p.k, 9);
        assert_eq!(p.j, 10);
        assert_eq!(p.level_k_size, 264);
        assert!(p.delta <= p.delta_z);
    }

    #[test]
    fn zero_orbit_traces_to_zero() {
        let g = GurevichGraph::new(2).unwrap();
        let eps = q_frac(1, 4);
        let p = gamma_parameters(&g, &eps).unwrap();
        let po = zero_orbit(&p, 5);
        let cert = trace_in_gamma(&g, &po, &eps).unwrap();
        assert!(cert.holds);
        assert!(cert.traced.cells.iter().all(|c| *c == Cell::Zero));
        assert_eq!(cert.reverify(&g, &po).unwrap(), cert.worst);
    }

    #[test]
    fn constructed_window_traces() {
        let g = GurevichGraph::new(2).unwrap();
        let eps = q_frac(1, 4);
        let p = gamma_parameters(&g, &eps).unwrap();
        let po = constructed_pseudo_orbit(&g, &p, 40, 7).unwrap();
        let cert = trace_in_gamma(&g, &po, &eps).unwrap();
        assert!(cert.holds, "{:?}", cert.steps.iter().find(|s| !s.holds));
        assert!(cert.worst < eps);
        assert_eq!(cert.reverify(&g, &po).unwrap(), cert.worst);
        let jumps = (0..6u64)
            .map(|seed| {
                let po = constructed_pseudo_orbit(&g, &p, 60, seed).unwrap();
                trace_in_gamma(&g, &po, &eps).unwrap().gap_worst
            })
            .filter(|gap| *gap > outside_mass(-p.window_radius, p.window_radius))
            .count();
        assert!(jumps > 0);
    }
}
