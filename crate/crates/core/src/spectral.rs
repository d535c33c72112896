//! Sparse directed multigraphs and certified spectral-radius enclosures.

/// Directed multigraph on `0..n`; parallel edges are listed repeatedly.
#[derive(Debug, Clone, Default)]
pub struct Digraph {
    pub out: Vec<Vec<u32>>,
}

/// Enclosure `lower <= rho(A) <= upper` of a spectral radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusBracket {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

impl RadiusBracket {
    pub fn log_bracket(&self) -> (f64, f64) {
        let lo = if self.lower > 0.0 { self.lower.ln() } else { f64::NEG_INFINITY };
        (lo, self.upper.ln())
    }
}

// relative padding that absorbs the rounding in one sparse mat-vec
const ROUNDING_PAD: f64 = 1e-13;

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph { out: vec![Vec::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        self.out[a].push(b as u32);
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Strongly connected components (iterative Tarjan), in reverse topological order.
    pub fn sccs(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comps = Vec::new();
        let mut next = 0usize;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = next;
            low[root] = next;
            next += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut ei)) = call.last_mut() {
                if *ei < self.out[v].len() {
                    let w = self.out[v][*ei] as usize;
                    *ei += 1;
                    if index[w] == usize::MAX {
                        index[w] = next;
                        low[w] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
        comps
    }

    /// Subgraph induced on `vertices` (relabelled in the given order).
    pub fn induced(&self, vertices: &[usize]) -> Digraph {
        let mut label = std::collections::HashMap::with_capacity(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            label.insert(v, i);
        }
        let mut g = Digraph::new(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            for &w in &self.out[v] {
                if let Some(&j) = label.get(&(w as usize)) {
                    g.out[i].push(j as u32);
                }
            }
        }
        g
    }

    /// Vertices lying on bi-infinite paths: repeatedly strip sources and sinks.
    pub fn recurrent_core(&self) -> Vec<usize> {
        let n = self.len();
        let mut indeg = vec![0usize; n];
        let mut outdeg = vec![0usize; n];
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for v in 0..n {
            for &w in &self.out[v] {
                indeg[w as usize] += 1;
                outdeg[v] += 1;
                preds[w as usize].push(v as u32);
            }
        }
        let mut alive = vec![true; n];
        let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0 || outdeg[v] == 0).collect();
        while let Some(v) = queue.pop() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            for &w in &self.out[v] {
                let w = w as usize;
                indeg[w] -= 1;
                if alive[w] && indeg[w] == 0 {
                    queue.push(w);
                }
            }
            for &p in &preds[v] {
                let p = p as usize;
                outdeg[p] -= 1;
                if alive[p] && outdeg[p] == 0 {
                    queue.push(p);
                }
            }
        }
        (0..n).filter(|&v| alive[v]).collect()
    }

    /// Certified enclosure of the spectral radius of an irreducible graph.
    ///
    /// Power iteration runs on A + I, which is primitive whenever A is
    /// irreducible; Collatz–Wielandt quotients of the iterate bound the
    /// radius from both sides at every step.
    pub fn radius_irreducible(&self, seed: Option<&[f64]>, width: f64, max_iter: usize) -> RadiusBracket {
        let n = self.len();
        if n == 0 || self.edge_count() == 0 {
            return RadiusBracket { lower: 0.0, upper: 0.0, iterations: 0 };
        }
        // constant out-degree d gives radius exactly d
        let d0 = self.out[0].len();
        if self.out.iter().all(|o| o.len() == d0) {
            return RadiusBracket { lower: d0 as f64, upper: d0 as f64, iterations: 0 };
        }
        let mut v: Vec<f64> = match seed {
            Some(s) if s.len() == n && s.iter().all(|x| *x > 0.0) => s.to_vec(),
            _ => vec![1.0; n],
        };
        let mut best = RadiusBracket { lower: 0.0, upper: f64::INFINITY, iterations: 0 };
        let mut w = vec![0.0; n];
        for it in 0..max_iter {
            // w = (A + I) v
            w.copy_from_slice(&v);
            for (a, outs) in self.out.iter().enumerate() {
                let va = v[a];
                for &b in outs {
                    // column convention does not matter for the radius; use A^T v
                    w[b as usize] += va;
                }
            }
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..n {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let lo = (lo * (1.0 - ROUNDING_PAD) - 1.0).max(0.0);
            let hi = hi * (1.0 + ROUNDING_PAD) - 1.0;
            if lo > best.lower {
                best.lower = lo;
            }
            if hi < best.upper {
                best.upper = hi;
            }
            best.iterations = it + 1;
            if best.lower > 0.0 && (best.upper / best.lower).ln() <= width {
                break;
            }
            let norm = w.iter().cloned().fold(0.0f64, f64::max);
            for i in 0..n {
                v[i] = w[i] / norm;
                if v[i] < 1e-300 {
                    v[i] = 1e-300;
                }
            }
        }
        best
    }

    /// Enclosure of the spectral radius: maximum over nontrivial SCCs.
    pub fn radius(&self, width: f64, max_iter: usize) -> RadiusBracket {
        let mut best = RadiusBracket { lower: 0.0, upper: 0.0, iterations: 0 };
        for comp in self.sccs() {
            let sub = self.induced(&comp);
            if sub.edge_count() == 0 {
                continue;
            }
            let r = sub.radius_irreducible(None, width, max_iter);
            best.lower = best.lower.max(r.lower);
            best.upper = best.upper.max(r.upper);
            best.iterations += r.iterations;
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Digraph {
        let mut g = Digraph::new(2);
        g.add_edge(0, 0);
        g.add_edge(0, 1);
        g.add_edge(1, 0);
        g
    }

    #[test]
    fn golden_radius() {
        let r = golden().radius(1e-12, 100_000);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(r.lower <= phi && phi <= r.upper);
        assert!(r.upper - r.lower < 1e-9);
    }

    #[test]
    fn cycle_has_radius_one() {
        let mut g = Digraph::new(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(2, 0);
        let r = g.radius(1e-12, 1000);
        assert!((r.lower - 1.0).abs() < 1e-12 && (r.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn core_strips_transients() {
        let mut g = Digraph::new(4);
        g.add_edge(0, 1);
        g.add_edge(1, 1);
        g.add_edge(1, 2);
        g.add_edge(3, 3);
        assert_eq!(g.recurrent_core(), vec![1, 3]);
        assert_eq!(g.sccs().len(), 4);
    }
}
