//! Subshifts of finite type and the Toeplitz skeleton driver.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, q_int, Q};
use crate::spaces::{Extension, Symbol, SymbolicWindow};
use crate::spectral::Digraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubshiftError {
    #[error("alphabet must be nonempty")]
    EmptyAlphabet,
    #[error("forbidden word {0:?} is shorter than 2")]
    ShortForbiddenWord(Vec<Symbol>),
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolRange { symbol: Symbol, alphabet: u32 },
    #[error("language of length {n} has {count} words, above the cap {cap}")]
    ResourceLimit { n: usize, count: String, cap: u64 },
    #[error("block graph would need more than {0} vertices")]
    GraphTooLarge(usize),
    #[error("requested entropy {target} exceeds the certified bound {bound}")]
    TargetUnreachable { target: f64, bound: f64 },
    #[error("invalid Toeplitz spec: {0}")]
    BadToeplitzSpec(String),
}

/// Default cap on enumerated languages.
pub const LANGUAGE_CAP: u64 = 1 << 26;
const GRAPH_VERTEX_CAP: usize = 1 << 22;

/// A subshift of finite type in normalized form.
///
/// The transition graph has the admissible (m−1)-blocks as vertices, where
/// m = max(2, longest forbidden word); it is built once at construction.
#[derive(Debug, Clone)]
pub struct Sft {
    alphabet: u32,
    forbidden: Vec<Vec<Symbol>>,
    memory: usize,
    blocks: Vec<Vec<Symbol>>,
    index: HashMap<Vec<Symbol>, usize>,
    graph: Digraph,
    /// symbol appended along each edge, parallel to `graph.out`
    labels: Vec<Vec<Symbol>>,
    core: Vec<bool>,
}

impl PartialEq for Sft {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.forbidden == other.forbidden
    }
}

impl Serialize for Sft {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SftDoc { alphabet: self.alphabet, forbidden: self.forbidden.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sft {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = SftDoc::deserialize(d)?;
        Sft::new(doc.alphabet, doc.forbidden).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct SftDoc {
    alphabet: u32,
    #[serde(default)]
    forbidden: Vec<Vec<Symbol>>,
}

fn contains_subword(w: &[Symbol], f: &[Symbol]) -> bool {
    f.len() <= w.len() && w.windows(f.len()).any(|x| x == f)
}

impl Sft {
    pub fn new(alphabet: u32, forbidden: Vec<Vec<Symbol>>) -> Result<Self, SubshiftError> {
        if alphabet == 0 {
            return Err(SubshiftError::EmptyAlphabet);
        }
        for w in &forbidden {
            if w.len() < 2 {
                return Err(SubshiftError::ShortForbiddenWord(w.clone()));
            }
            if let Some(&s) = w.iter().find(|&&s| s >= alphabet) {
                return Err(SubshiftError::SymbolRange { symbol: s, alphabet });
            }
        }
        let mut words: Vec<Vec<Symbol>> = forbidden.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        // drop words that contain another forbidden word
        let snapshot = words.clone();
        words.retain(|w| !snapshot.iter().any(|f| f != w && contains_subword(w, f)));
        words.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        let order = words.iter().map(Vec::len).max().unwrap_or(2).max(2);
        let memory = order - 1;
        let mut sft = Sft {
            alphabet,
            forbidden: words,
            memory,
            blocks: Vec::new(),
            index: HashMap::new(),
            graph: Digraph::default(),
            labels: Vec::new(),
            core: Vec::new(),
        };
        sft.build_graph()?;
        Ok(sft)
    }

    pub fn full_shift(alphabet: u32) -> Self {
        Sft::new(alphabet, Vec::new()).expect("full shift is valid")
    }

    /// The golden-mean shift on {0,1} forbidding 11.
    pub fn golden_mean() -> Self {
        Sft::new(2, vec![vec![1, 1]]).expect("golden mean is valid")
    }

    fn free_of_forbidden(&self, w: &[Symbol]) -> bool {
        !self.forbidden.iter().any(|f| contains_subword(w, f))
    }

    fn build_graph(&mut self) -> Result<(), SubshiftError> {
        // grow admissible blocks symbol by symbol, pruning as we go
        let mut layer: Vec<Vec<Symbol>> = vec![Vec::new()];
        for _ in 0..self.memory {
            let mut next = Vec::new();
            for w in &layer {
                for a in 0..self.alphabet {
                    let mut x = w.clone();
                    x.push(a);
                    if self.free_of_forbidden(&x) {
                        next.push(x);
                    }
                }
            }
            if next.len() > GRAPH_VERTEX_CAP {
                return Err(SubshiftError::GraphTooLarge(GRAPH_VERTEX_CAP));
            }
            layer = next;
        }
        self.index = layer.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        self.graph = Digraph::new(layer.len());
        self.labels = vec![Vec::new(); layer.len()];
        for (i, w) in layer.iter().enumerate() {
            for a in 0..self.alphabet {
                let mut e = w.clone();
                e.push(a);
                if !self.free_of_forbidden(&e) {
                    continue;
                }
                if let Some(&j) = self.index.get(&e[1..]) {
                    self.graph.add_edge(i, j);
                    self.labels[i].push(a);
                }
            }
        }
        let mut core = vec![false; layer.len()];
        for v in self.graph.recurrent_core() {
            core[v] = true;
        }
        self.core = core;
        self.blocks = layer;
        Ok(())
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn forbidden(&self) -> &[Vec<Symbol>] {
        &self.forbidden
    }

    /// Longest forbidden word length (at least 2).
    pub fn order(&self) -> usize {
        self.memory + 1
    }

    /// Block length of the transition-graph vertices.
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn is_full_shift(&self) -> bool {
        self.forbidden.is_empty()
    }

    pub fn vertex_blocks(&self) -> &[Vec<Symbol>] {
        &self.blocks
    }

    pub fn vertex_of(&self, block: &[Symbol]) -> Option<usize> {
        self.index.get(block).copied()
    }

    /// Vertices that lie on bi-infinite paths.
    pub fn core_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.blocks.len()).filter(|&v| self.core[v])
    }

    pub fn in_core(&self, v: usize) -> bool {
        self.core[v]
    }

    /// Edges out of `v` as (appended symbol, target vertex).
    pub fn successors(&self, v: usize) -> impl Iterator<Item = (Symbol, usize)> + '_ {
        self.labels[v].iter().copied().zip(self.graph.out[v].iter().map(|&t| t as usize))
    }

    /// Core-to-core edges only.
    pub fn core_successors(&self, v: usize) -> impl Iterator<Item = (Symbol, usize)> + '_ {
        self.successors(v).filter(move |&(_, t)| self.core[t])
    }

    fn check_symbols(&self, w: &[Symbol]) -> Result<(), SubshiftError> {
        match w.iter().find(|&&s| s >= self.alphabet) {
            Some(&s) => Err(SubshiftError::SymbolRange { symbol: s, alphabet: self.alphabet }),
            None => Ok(()),
        }
    }

    /// True iff `w` has no forbidden subword and extends to a bi-infinite point.
    pub fn is_admissible(&self, w: &[Symbol]) -> Result<bool, SubshiftError> {
        self.check_symbols(w)?;
        Ok(self.admissible_unchecked(w))
    }

    pub(crate) fn admissible_unchecked(&self, w: &[Symbol]) -> bool {
        if !self.free_of_forbidden(w) {
            return false;
        }
        let m = self.memory;
        if w.len() < m {
            return self.core_vertices().any(|v| self.blocks[v].starts_with(w));
        }
        w.windows(m).all(|b| self.index.get(b).map(|&v| self.core[v]).unwrap_or(false))
    }

    /// Number of admissible words of length n, exactly.
    pub fn language_count(&self, n: usize) -> BigUint {
        let m = self.memory;
        if n == 0 {
            return BigUint::from(1u32);
        }
        if n < m {
            let set: BTreeSet<&[Symbol]> = self.core_vertices().map(|v| &self.blocks[v][..n]).collect();
            return BigUint::from(set.len());
        }
        let nv = self.blocks.len();
        let mut counts: Vec<BigUint> = (0..nv).map(|v| BigUint::from(self.core[v] as u32)).collect();
        for _ in 0..(n - m) {
            let mut next = vec![BigUint::zero(); nv];
            for v in self.core_vertices() {
                if counts[v].is_zero() {
                    continue;
                }
                for (_, t) in self.core_successors(v) {
                    next[t] += &counts[v];
                }
            }
            counts = next;
        }
        counts.into_iter().sum()
    }

    /// All admissible words of length n in lexicographic order.
    pub fn language(&self, n: usize) -> Result<Vec<Vec<Symbol>>, SubshiftError> {
        self.language_capped(n, LANGUAGE_CAP)
    }

    pub fn language_capped(&self, n: usize, cap: u64) -> Result<Vec<Vec<Symbol>>, SubshiftError> {
        let count = self.language_count(n);
        if count > BigUint::from(cap) {
            return Err(SubshiftError::ResourceLimit { n, count: count.to_string(), cap });
        }
        let m = self.memory;
        if n < m {
            let set: BTreeSet<Vec<Symbol>> = self.core_vertices().map(|v| self.blocks[v][..n].to_vec()).collect();
            return Ok(set.into_iter().collect());
        }
        let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
        let mut starts: Vec<usize> = self.core_vertices().collect();
        starts.sort_by(|&a, &b| self.blocks[a].cmp(&self.blocks[b]));
        for v in starts {
            let mut word = self.blocks[v].clone();
            self.extend_words(v, n, &mut word, &mut out);
        }
        Ok(out)
    }

    fn extend_words(&self, v: usize, n: usize, word: &mut Vec<Symbol>, out: &mut Vec<Vec<Symbol>>) {
        if word.len() == n {
            out.push(word.clone());
            return;
        }
        let mut succ: Vec<(Symbol, usize)> = self.core_successors(v).collect();
        succ.sort_unstable();
        for (a, t) in succ {
            word.push(a);
            self.extend_words(t, n, word, out);
            word.pop();
        }
    }

    /// Certified topological entropy (natural log).
    pub fn entropy_exact(&self) -> EntropyValue {
        let core: Vec<usize> = self.core_vertices().collect();
        let g = self.graph.induced(&core);
        if g.edge_count() == 0 {
            return EntropyValue { value: 0.0, lower: 0.0, upper: 0.0 };
        }
        let r = g.radius(1e-12, 2_000_000);
        let (lo, hi) = r.log_bracket();
        let lo = lo.max(0.0);
        let hi = hi.max(0.0);
        EntropyValue { value: 0.5 * (lo + hi), lower: lo, upper: hi }
    }

    /// Shortest path (as appended symbols) from vertex `a` to vertex `b` within the core.
    pub fn connector(&self, a: usize, b: usize) -> Option<Vec<Symbol>> {
        if !self.core[a] || !self.core[b] {
            return None;
        }
        let n = self.blocks.len();
        let mut prev: Vec<Option<(usize, Symbol)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        seen[a] = true;
        queue.push_back(a);
        if a == b {
            return Some(Vec::new());
        }
        while let Some(v) = queue.pop_front() {
            let mut succ: Vec<(Symbol, usize)> = self.core_successors(v).collect();
            succ.sort_unstable();
            for (s, t) in succ {
                if seen[t] {
                    continue;
                }
                seen[t] = true;
                prev[t] = Some((v, s));
                if t == b {
                    let mut path = Vec::new();
                    let mut cur = b;
                    while let Some((p, s)) = prev[cur] {
                        path.push(s);
                        cur = p;
                        if cur == a {
                            break;
                        }
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(t);
            }
        }
        None
    }

    /// Shortest cycle through core vertex `v`, as appended symbols.
    pub fn shortest_cycle_from(&self, v: usize) -> Option<Vec<Symbol>> {
        let mut best: Option<Vec<Symbol>> = None;
        let mut succ: Vec<(Symbol, usize)> = self.core_successors(v).collect();
        succ.sort_unstable();
        for (s, t) in succ {
            if let Some(mut rest) = self.connector(t, v) {
                rest.insert(0, s);
                if best.as_ref().map_or(true, |b| rest.len() < b.len()) {
                    best = Some(rest);
                }
            }
        }
        best
    }

    /// Periodic admissible continuation of a word ending at a core vertex:
    /// shortest path to a cycle, then that cycle forever. Returns the
    /// window with a `PeriodicRepeat` rule.
    pub fn admissible_extension(&self, word: &[Symbol]) -> Option<SymbolicWindow> {
        if !self.admissible_unchecked(word) {
            return None;
        }
        let m = self.memory;
        let mut symbols = word.to_vec();
        let mut v = if word.len() >= m {
            self.vertex_of(&word[word.len() - m..])?
        } else {
            // pad on the right along the lexicographically first core vertex with this prefix
            let mut cands: Vec<usize> = self.core_vertices().filter(|&v| self.blocks[v].starts_with(word)).collect();
            cands.sort_by(|&a, &b| self.blocks[a].cmp(&self.blocks[b]));
            let v = *cands.first()?;
            symbols = self.blocks[v].clone();
            v
        };
        // walk greedily until a vertex repeats; the repeated segment is the cycle
        let mut seen: HashMap<usize, usize> = HashMap::new();
        loop {
            if let Some(&at) = seen.get(&v) {
                let period = symbols.len() - at;
                return Some(SymbolicWindow::new(0, symbols, Extension::PeriodicRepeat(period)));
            }
            seen.insert(v, symbols.len());
            let (s, t) = self
                .core_successors(v)
                .min_by_key(|&(s, t)| (self.cycle_distance_hint(t), s))?;
            symbols.push(s);
            v = t;
        }
    }

    // prefer successors that lie on short cycles so the extension is compact
    fn cycle_distance_hint(&self, v: usize) -> usize {
        self.shortest_cycle_from(v).map_or(usize::MAX, |c| c.len())
    }

    /// Export of a word set as newline-delimited text.
    pub fn words_to_text(words: &[Vec<Symbol>]) -> String {
        let mut s = String::new();
        for w in words {
            for a in w {
                s.push_str(&a.to_string());
            }
            s.push('\n');
        }
        s
    }
}

/// Entropy with certified enclosure `lower <= value <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl EntropyValue {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Periodic-skeleton description of a Toeplitz sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzSpec {
    pub alphabet_size: u32,
    pub skeleton_periods: Vec<u64>,
    /// fraction of the still-free positions left free at each level
    #[serde(with = "rational::serde_q")]
    pub fill_density: Q,
}

/// What a skeleton certifies before any sequence is generated.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCertificate {
    /// first level (1-based) after which every symbol is pinned
    pub pinned_level: Option<usize>,
    /// period of that level
    pub pinned_period: Option<u64>,
    /// exact free density after the pinned level
    pub free_density: Q,
    /// free density · log s, the entropy of the level skeleton subshift
    pub entropy_lower: f64,
    /// every window of this length contains all symbols at pinned positions
    pub n0: Option<u64>,
    /// free positions per period at each level
    pub free_counts: Vec<u128>,
}

/// Periodic pinned pattern of a skeleton level: `None` marks a free slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPattern {
    pub period: u64,
    pub slots: Vec<Option<Symbol>>,
}

impl SkeletonPattern {
    pub fn free_positions(&self) -> Vec<usize> {
        self.slots.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i).collect()
    }

    /// Does `word` (read from phase 0) agree with every pinned slot?
    pub fn accepts(&self, word: &[Symbol]) -> bool {
        word.iter()
            .enumerate()
            .all(|(i, &a)| self.slots[i % self.slots.len()].map_or(true, |p| p == a))
    }
}

#[derive(Debug, Clone)]
pub struct ToeplitzOutput {
    pub window: SymbolicWindow,
    pub certificate: ToeplitzCertificate,
    /// level at which each coordinate of the window got filled (1-based)
    pub fill_level: Vec<u32>,
    /// period of each level used, skeleton levels first
    pub level_periods: Vec<u64>,
}

const PATTERN_CAP: u64 = 1 << 27;

impl ToeplitzSpec {
    pub fn new(alphabet_size: u32, skeleton_periods: Vec<u64>, fill_density: Q) -> Result<Self, SubshiftError> {
        let spec = ToeplitzSpec { alphabet_size, skeleton_periods, fill_density };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SubshiftError> {
        let bad = |m: &str| Err(SubshiftError::BadToeplitzSpec(m.to_string()));
        if self.alphabet_size == 0 {
            return bad("alphabet must be nonempty");
        }
        if self.skeleton_periods.is_empty() {
            return bad("need at least one skeleton period");
        }
        if self.skeleton_periods[0] == 0 {
            return bad("periods must be positive");
        }
        for w in self.skeleton_periods.windows(2) {
            if w[1] % w[0] != 0 || w[1] / w[0] < 2 {
                return bad("each period must be a multiple (at least double) of the previous one");
            }
        }
        if self.fill_density < q_int(0) || self.fill_density > q_int(1) {
            return bad("fill density must lie in [0, 1]");
        }
        Ok(())
    }

    /// Number of pins placed at a level holding `free` slots.
    fn pins_for(&self, free: u128) -> u128 {
        let pinned_fraction = q_int(1) - &self.fill_density;
        let want = pinned_fraction * Q::from_integer(free.into());
        let c = want.ceil().to_integer();
        c.to_u128().unwrap_or(free).min(free)
    }

    /// Pinned pattern of skeleton level `level` (1-based), materialized.
    pub fn pattern(&self, level: usize) -> Result<SkeletonPattern, SubshiftError> {
        let level = level.min(self.skeleton_periods.len()).max(1);
        let period = self.skeleton_periods[level - 1];
        if period > PATTERN_CAP {
            return Err(SubshiftError::BadToeplitzSpec(format!("period {period} too large to materialize")));
        }
        let mut slots: Vec<Option<Symbol>> = vec![None; period as usize];
        let mut cum = 0u128;
        for l in 0..level {
            let p = self.skeleton_periods[l] as usize;
            // free slots of the first block; the pattern is periodic with p
            let free: Vec<usize> = (0..p).filter(|&i| slots[i].is_none()).collect();
            let c = self.pins_for(free.len() as u128) as usize;
            let mut block_pins = Vec::with_capacity(c);
            for r in 0..c {
                let pos = free[r * free.len() / c];
                block_pins.push((pos, pin_symbol(cum + r as u128, self.alphabet_size)));
            }
            cum += c as u128;
            for k in 0..(period as usize / p) {
                for &(pos, sym) in &block_pins {
                    slots[k * p + pos] = Some(sym);
                }
            }
        }
        Ok(SkeletonPattern { period, slots })
    }

    /// Certificate: pinned level, free density, entropy bound and N₀.
    pub fn certify(&self) -> Result<ToeplitzCertificate, SubshiftError> {
        self.validate()?;
        let s = self.alphabet_size;
        let mut free: u128 = self.skeleton_periods[0] as u128;
        let mut prev_p: u128 = self.skeleton_periods[0] as u128;
        let mut cum = 0u128;
        let mut free_counts = Vec::new();
        let mut pinned_level = None;
        for (l, &p) in self.skeleton_periods.iter().enumerate() {
            if l > 0 {
                free *= p as u128 / prev_p;
            }
            prev_p = p as u128;
            let c = self.pins_for(free);
            cum += c;
            free -= c;
            free_counts.push(free);
            if cum >= s as u128 {
                pinned_level = Some(l + 1);
                break;
            }
        }
        let level = pinned_level.unwrap_or(self.skeleton_periods.len());
        let period = self.skeleton_periods[level - 1];
        let free_density = Q::new(free_counts[level - 1].into(), (period as u128).into());
        let entropy_lower = match pinned_level {
            Some(_) => rational::to_f64(&free_density) * (s as f64).ln(),
            None => 0.0,
        };
        let n0 = match pinned_level {
            Some(l) => Some(self.window_audit(&self.pattern(l)?)),
            None => None,
        };
        Ok(ToeplitzCertificate {
            pinned_level,
            pinned_period: pinned_level.map(|_| period),
            free_density,
            entropy_lower,
            n0,
            free_counts,
        })
    }

    /// Smallest N such that every cyclic window of length N of the pattern
    /// contains every symbol at a pinned slot.
    pub fn window_audit(&self, pat: &SkeletonPattern) -> u64 {
        let s = self.alphabet_size as usize;
        let p = pat.slots.len();
        let mut need = vec![0usize; s];
        let mut have = 0usize;
        let mut worst = 0usize;
        let mut right = 0usize; // exclusive, over the doubled sequence
        for left in 0..p {
            while have < s && right < left + 2 * p {
                if let Some(a) = pat.slots[right % p] {
                    if need[a as usize] == 0 {
                        have += 1;
                    }
                    need[a as usize] += 1;
                }
                right += 1;
            }
            if have < s {
                return u64::MAX;
            }
            worst = worst.max(right - left);
            if let Some(a) = pat.slots[left % p] {
                need[a as usize] -= 1;
                if need[a as usize] == 0 {
                    have -= 1;
                }
            }
        }
        worst as u64
    }

    /// Certificate, failing if its bound falls short of `target`.
    pub fn require_entropy(&self, target: f64) -> Result<ToeplitzCertificate, SubshiftError> {
        let cert = self.certify()?;
        if target > cert.entropy_lower + 1e-15 {
            return Err(SubshiftError::TargetUnreachable { target, bound: cert.entropy_lower });
        }
        Ok(cert)
    }
}

// pins cycle through the alphabet, so the first s pins cover every symbol
fn pin_symbol(cumulative: u128, s: u32) -> Symbol {
    (cumulative % s as u128) as Symbol
}

/// First `horizon` symbols of the Toeplitz sequence of `spec`.
///
/// Skeleton levels pin slots as in [`ToeplitzSpec::pattern`]. Past the last
/// skeleton period P, level t uses period P·4^t and fills the free slots in
/// the first P·2^t positions of each block with seeded symbols, so every
/// coordinate is eventually filled while the filled density stays below
/// 2^(1−t₀).
pub fn toeplitz_generate(spec: &ToeplitzSpec, horizon: usize, seed: u64) -> Result<ToeplitzOutput, SubshiftError> {
    let certificate = spec.certify()?;
    let mut slots: Vec<Option<Symbol>> = vec![None; horizon];
    let mut fill_level = vec![0u32; horizon];
    let mut cum = 0u128;
    let mut free_per_period: u128 = 0;
    let mut prev_p: u128 = 1;
    let mut level_periods = Vec::new();
    for (l, &p) in spec.skeleton_periods.iter().enumerate() {
        let p128 = p as u128;
        free_per_period = if l == 0 { p128 } else { free_per_period * (p128 / prev_p) };
        prev_p = p128;
        let c = spec.pins_for(free_per_period);
        let first_block = (p as usize).min(horizon);
        let free_here: Vec<usize> = (0..first_block).filter(|&i| slots[i].is_none()).collect();
        let mut pins = Vec::new();
        for r in 0..c {
            let rank = (r * free_per_period / c) as usize;
            if rank >= free_here.len() {
                break;
            }
            pins.push((free_here[rank], pin_symbol(cum + r, spec.alphabet_size)));
        }
        cum += c;
        free_per_period -= c;
        let mut start = 0usize;
        while start < horizon {
            for &(pos, sym) in &pins {
                if start + pos < horizon {
                    slots[start + pos] = Some(sym);
                    fill_level[start + pos] = (l + 1) as u32;
                }
            }
            start += p as usize;
        }
        level_periods.push(p);
    }
    let base = *spec.skeleton_periods.last().unwrap() as u128;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 4u32;
    let mut level = spec.skeleton_periods.len() as u32;
    while slots.iter().any(Option::is_none) {
        level += 1;
        let period = base << (2 * t);
        let head = (base << t).min(horizon as u128) as usize;
        let fills: Vec<(usize, Symbol)> = (0..head)
            .filter(|&i| slots[i].is_none())
            .map(|i| (i, rng.gen_range(0..spec.alphabet_size)))
            .collect();
        let mut start = 0u128;
        while start < horizon as u128 {
            for &(pos, sym) in &fills {
                let at = start as usize + pos;
                if at < horizon && slots[at].is_none() {
                    slots[at] = Some(sym);
                    fill_level[at] = level;
                }
            }
            start += period;
        }
        level_periods.push(period.min(u64::MAX as u128) as u64);
        t += 1;
    }
    let symbols: Vec<Symbol> = slots.into_iter().map(|s| s.unwrap()).collect();
    Ok(ToeplitzOutput {
        window: SymbolicWindow::new(0, symbols, Extension::Unspecified),
        certificate,
        fill_level,
        level_periods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;

    #[test]
    fn normalization_drops_superwords() {
        let s = Sft::new(2, vec![vec![1, 1], vec![0, 1, 1], vec![1, 1]]).unwrap();
        assert_eq!(s.forbidden(), &[vec![1, 1]]);
        assert_eq!(s.order(), 2);
    }

    #[test]
    fn golden_language() {
        let g = Sft::golden_mean();
        assert_eq!(g.language(2).unwrap(), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(g.language(5).unwrap().len(), 13);
        assert!(g.is_admissible(&[0, 1, 0, 1]).unwrap());
        assert!(!g.is_admissible(&[0, 1, 1, 0]).unwrap());
    }

    #[test]
    fn dead_ends_are_not_admissible() {
        // 1 can never be followed by anything: only 0^∞ survives
        let s = Sft::new(2, vec![vec![1, 0], vec![1, 1]]).unwrap();
        assert!(!s.is_admissible(&[0, 1]).unwrap());
        assert_eq!(s.language_count(4), BigUint::from(1u32));
    }

    #[test]
    fn entropy_values() {
        let full = Sft::full_shift(2).entropy_exact();
        assert!((full.value - 2f64.ln()).abs() < 1e-9);
        let fixed = Sft::new(2, vec![vec![0, 1], vec![1, 0]]).unwrap().entropy_exact();
        assert_eq!(fixed.upper, 0.0);
    }

    #[test]
    fn extension_is_admissible_and_periodic() {
        let g = Sft::golden_mean();
        let w = g.admissible_extension(&[1, 0, 1]).unwrap();
        let long: Vec<Symbol> = (0..40).map(|i| w.get(i).unwrap()).collect();
        assert!(g.is_admissible(&long).unwrap());
        assert!(matches!(w.extension, Extension::PeriodicRepeat(_)));
    }

    #[test]
    fn toeplitz_pins_and_density() {
        let spec = ToeplitzSpec::new(2, vec![4, 16, 64], q_frac(1, 2)).unwrap();
        let cert = spec.certify().unwrap();
        assert_eq!(cert.pinned_level, Some(1));
        assert_eq!(cert.free_density, q_frac(1, 2));
        let out = toeplitz_generate(&spec, 1000, 7).unwrap();
        assert_eq!(out.window.symbols.len(), 1000);
    }
}
