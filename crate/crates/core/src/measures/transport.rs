//! Exact bounded-Lipschitz distance between finitely supported measures.
//!
//! For a signed mass vector m with total 0 the dual problem
//! sup { Σ m_i g_i : |g_i| ≤ a, |g_i − g_j| ≤ b·d_ij, a + b ≤ 1 }
//! equals max over t ∈ [0, 1] of the transport cost of m⁺ onto m⁻ under the
//! truncated metric ρ_t = min((1 − t)·d, 2t). The cost is concave in t and
//! piecewise linear, so it is maximized exactly with cutting planes between
//! consecutive kinks d/(2 + d).

use num_traits::{Signed, Zero};

use crate::rational::{q_int, Q};

/// Optimal transport of `supply` onto `demand` (equal totals) under `cost`.
/// Returns the cost and the coupling as (source, sink, mass) triples.
pub fn transport(supply: &[Q], demand: &[Q], cost: &[Vec<Q>]) -> (Q, Vec<(usize, usize, Q)>) {
    let ns = supply.len();
    let nt = demand.len();
    // nodes: 0 = S, 1..=ns sources, ns+1..=ns+nt sinks, ns+nt+1 = T
    let n = ns + nt + 2;
    let t_node = n - 1;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |edges: &mut Vec<Edge>, a: usize, b: usize, cap: Option<Q>, c: Q| {
        adj[a].push(edges.len());
        edges.push(Edge { to: b, cap: cap.clone(), flow: q_int(0), cost: c.clone() });
        adj[b].push(edges.len());
        edges.push(Edge { to: a, cap: Some(q_int(0)), flow: q_int(0), cost: -c });
    };
    for (i, s) in supply.iter().enumerate() {
        add(&mut edges, 0, 1 + i, Some(s.clone()), q_int(0));
    }
    let mut pair_edge = vec![vec![0usize; nt]; ns];
    for i in 0..ns {
        for j in 0..nt {
            pair_edge[i][j] = edges.len();
            add(&mut edges, 1 + i, 1 + ns + j, None, cost[i][j].clone());
        }
    }
    for (j, d) in demand.iter().enumerate() {
        add(&mut edges, 1 + ns + j, t_node, Some(d.clone()), q_int(0));
    }

    loop {
        // Bellman-Ford on the residual graph; reverse edges may be negative
        let mut dist: Vec<Option<Q>> = vec![None; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        dist[0] = Some(q_int(0));
        for _ in 0..n {
            let mut changed = false;
            for a in 0..n {
                let Some(da) = dist[a].clone() else { continue };
                for &e in &adj[a] {
                    let ed = &edges[e];
                    if !ed.has_residual() {
                        continue;
                    }
                    let nd = &da + &ed.cost;
                    if dist[ed.to].as_ref().map_or(true, |cur| nd < *cur) {
                        dist[ed.to] = Some(nd);
                        via[ed.to] = Some(e);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[t_node].is_none() {
            break;
        }
        // bottleneck along the path
        let mut push: Option<Q> = None;
        let mut v = t_node;
        while v != 0 {
            let e = via[v].expect("path edge");
            if let Some(r) = edges[e].residual() {
                push = Some(match push {
                    Some(p) if p <= r => p,
                    _ => r,
                });
            }
            v = edges[e ^ 1].to;
        }
        let push = push.expect("source edges are capacitated");
        if push.is_zero() {
            break;
        }
        let mut v = t_node;
        while v != 0 {
            let e = via[v].unwrap();
            edges[e].flow += &push;
            edges[e ^ 1].flow -= &push;
            v = edges[e ^ 1].to;
        }
    }

    let mut total = q_int(0);
    let mut coupling = Vec::new();
    for i in 0..ns {
        for j in 0..nt {
            let f = &edges[pair_edge[i][j]].flow;
            if f.is_positive() {
                total += f * &cost[i][j];
                coupling.push((i, j, f.clone()));
            }
        }
    }
    (total, coupling)
}

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: Option<Q>,
    flow: Q,
    cost: Q,
}

impl Edge {
    fn residual(&self) -> Option<Q> {
        self.cap.as_ref().map(|c| c - &self.flow)
    }

    fn has_residual(&self) -> bool {
        match &self.cap {
            None => true,
            Some(c) => self.flow < *c,
        }
    }
}

fn rho(t: &Q, d: &Q) -> Q {
    let a = (q_int(1) - t) * d;
    let b = q_int(2) * t;
    if a <= b {
        a
    } else {
        b
    }
}

/// sup over ‖g‖_BL ≤ 1 of Σ m_i g_i for a signed mass vector with total 0.
pub fn bl_dual(masses: &[Q], dist: &[Vec<Q>]) -> Q {
    let pos: Vec<usize> = (0..masses.len()).filter(|&i| masses[i].is_positive()).collect();
    let neg: Vec<usize> = (0..masses.len()).filter(|&i| masses[i].is_negative()).collect();
    if pos.is_empty() || neg.is_empty() {
        return q_int(0);
    }
    let supply: Vec<Q> = pos.iter().map(|&i| masses[i].clone()).collect();
    let demand: Vec<Q> = neg.iter().map(|&j| -masses[j].clone()).collect();
    let d: Vec<Vec<Q>> = pos.iter().map(|&i| neg.iter().map(|&j| dist[i][j].clone()).collect()).collect();

    let mut kinks: Vec<Q> = vec![q_int(0), q_int(1)];
    for row in &d {
        for v in row {
            kinks.push(v / (q_int(2) + v));
        }
    }
    kinks.sort();
    kinks.dedup();

    let emd = |t: &Q| {
        let c: Vec<Vec<Q>> = d.iter().map(|row| row.iter().map(|v| rho(t, v)).collect()).collect();
        transport(&supply, &demand, &c)
    };

    let mut best = q_int(0);
    let mut cache: Vec<(Q, Q, Vec<(usize, usize, Q)>)> = Vec::new();
    let eval = |t: &Q, cache: &mut Vec<(Q, Q, Vec<(usize, usize, Q)>)>| {
        if let Some(hit) = cache.iter().find(|c| c.0 == *t) {
            return (hit.1.clone(), hit.2.clone());
        }
        let (v, pi) = emd(t);
        cache.push((t.clone(), v.clone(), pi.clone()));
        (v, pi)
    };
    for w in kinks.windows(2) {
        let (ta, tb) = (&w[0], &w[1]);
        let mid = (ta + tb) / q_int(2);
        // on [ta, tb] each pair cost is affine: slope and intercept per pair
        let affine: Vec<Vec<(Q, Q)>> = d
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        if (q_int(1) - &mid) * v <= q_int(2) * &mid {
                            (v.clone(), -v.clone())
                        } else {
                            (q_int(0), q_int(2))
                        }
                    })
                    .collect()
            })
            .collect();
        let line_of = |pi: &[(usize, usize, Q)]| {
            let mut a = q_int(0);
            let mut b = q_int(0);
            for (i, j, m) in pi {
                a += m * &affine[*i][*j].0;
                b += m * &affine[*i][*j].1;
            }
            (a, b)
        };
        let mut lines: Vec<(Q, Q)> = Vec::new();
        for t in [ta, tb] {
            let (_, pi) = eval(t, &mut cache);
            lines.push(line_of(&pi));
        }
        loop {
            let (t_star, upper) = maximize_lower_envelope(&lines, ta, tb);
            let (v, pi) = eval(&t_star, &mut cache);
            if v >= upper {
                if v > best {
                    best = v;
                }
                break;
            }
            let l = line_of(&pi);
            if lines.contains(&l) {
                // cannot happen for an optimal coupling; keep the certified value
                if v > best {
                    best = v;
                }
                break;
            }
            lines.push(l);
        }
    }
    best
}

/// argmax over [lo, hi] of min_k (a_k + b_k t), with the maximum.
fn maximize_lower_envelope(lines: &[(Q, Q)], lo: &Q, hi: &Q) -> (Q, Q) {
    let env = |t: &Q| lines.iter().map(|(a, b)| a + b * t).min().expect("nonempty");
    let mut cands = vec![lo.clone(), hi.clone()];
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            let db = &lines[i].1 - &lines[j].1;
            if db.is_zero() {
                continue;
            }
            let t = (&lines[j].0 - &lines[i].0) / db;
            if t > *lo && t < *hi {
                cands.push(t);
            }
        }
    }
    let mut best: Option<(Q, Q)> = None;
    for t in cands {
        let v = env(&t);
        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((t, v));
        }
    }
    best.unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;

    #[test]
    fn two_diracs() {
        // δ_x − δ_y at distance d gives 2d/(2 + d)
        let d = q_frac(1, 2);
        let dist = vec![vec![q_int(0), d.clone()], vec![d.clone(), q_int(0)]];
        let v = bl_dual(&[q_int(1), q_int(-1)], &dist);
        assert_eq!(v, q_frac(2, 5));
    }

    #[test]
    fn transport_basic() {
        let (c, _) = transport(
            &[q_frac(1, 2), q_frac(1, 2)],
            &[q_frac(1, 2), q_frac(1, 2)],
            &[vec![q_int(1), q_int(3)], vec![q_int(3), q_int(1)]],
        );
        assert_eq!(c, q_int(1));
    }
}
