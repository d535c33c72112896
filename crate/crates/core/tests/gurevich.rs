use num_bigint::BigUint;
use num_traits::ToPrimitive;
use shadowlab_core::gurevich::{classify, return_series_partial, subgraph_entropy, GVertex, GurevichGraph, Recurrence, SeriesLedger};
use shadowlab_core::rational::{q_frac, q_int};

// walks u -> u of each length m ≤ max that avoid u in between, on the materialized level
fn first_returns(g: &GurevichGraph, level: u64, max: usize) -> Vec<u128> {
    let (graph, verts) = g.materialize(level).unwrap();
    assert_eq!(verts[0], GVertex::U);
    let mut counts = Vec::new();
    let mut mass = vec![0u128; graph.len()];
    mass[0] = 1;
    for _ in 0..max {
        let mut next = vec![0u128; graph.len()];
        for (v, outs) in graph.out.iter().enumerate() {
            for &w in outs {
                next[w as usize] += mass[v];
            }
        }
        counts.push(std::mem::take(&mut next[0]));
        mass = next;
    }
    counts
}

// spectral radius by power iteration on the materialized level
fn power_radius(g: &GurevichGraph, level: u64) -> f64 {
    let (graph, _) = g.materialize(level).unwrap();
    let mut x = vec![1.0f64; graph.len()];
    let mut rho = 0.0;
    for _ in 0..4000 {
        let mut y = vec![0.0; graph.len()];
        for (v, outs) in graph.out.iter().enumerate() {
            for &w in outs {
                y[w as usize] += x[v];
            }
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        rho = norm;
        x = y.into_iter().map(|v| v / norm).collect();
    }
    rho
}

#[test]
fn first_return_counts_match_the_materialized_graph() {
    for n in [1u32, 2, 3] {
        let g = GurevichGraph::new(n).unwrap();
        let level = 12;
        let walks = first_returns(&g, level, level as usize);
        for (m, &c) in walks.iter().enumerate() {
            assert_eq!(BigUint::from(c), g.f_uu(m as u64 + 1), "N = {n}, m = {}", m + 1);
        }
    }
}

#[test]
fn level_enumeration_is_consistent() {
    for n in [1u32, 2, 3] {
        let g = GurevichGraph::new(n).unwrap();
        for level in 1..=12 {
            let verts = g.level_vertices(level).unwrap();
            assert_eq!(BigUint::from(verts.len()), g.level_size(level));
            for (j, v) in verts.iter().enumerate() {
                assert_eq!(g.index(v).unwrap(), BigUint::from(j + 1));
                assert!(g.has_edge(v, &GurevichGraph::next(v)) || *v == GVertex::U);
            }
        }
    }
}

#[test]
fn return_mass_at_one_half_is_exactly_one() {
    for n in 2..=5u32 {
        let g = GurevichGraph::new(n).unwrap();
        let mut prev = q_int(0);
        for n_max in [1u64, 3, 8, 17, 40, 64, 100] {
            let rep = return_series_partial(&g, &q_frac(1, 2), n_max);
            assert!(rep.partial >= prev && rep.partial < q_int(1));
            assert_eq!(rep.tails.unwrap().total, q_int(1), "N = {n}, n_max = {n_max}");
            prev = rep.partial;
        }
        assert_eq!(classify(&g, 64).class, Recurrence::NullRecurrent);
    }
    // N = 1 puts a 2-cycle at the top of the a-family on top of the w-cycles from 3 on:
    // 1/2 + 1/4 + Σ_{k≥2} 2^-k + Σ_{n≥3} 2^-n = 3/2
    let g = GurevichGraph::new(1).unwrap();
    for n_max in [1u64, 2, 5, 64] {
        assert_eq!(return_series_partial(&g, &q_frac(1, 2), n_max).tails.unwrap().total, q_frac(3, 2));
    }
    assert_eq!(classify(&g, 64).class, Recurrence::PositiveRecurrent);
}

#[test]
fn contrast_graphs_classify_differently() {
    assert_eq!(classify(&GurevichGraph::with_w_copies(3, 0).unwrap(), 64).class, Recurrence::Transient);
    assert_eq!(classify(&GurevichGraph::with_w_copies(3, 2).unwrap(), 64).class, Recurrence::PositiveRecurrent);
}

#[test]
fn ledger_partials_agree_with_direct_sums() {
    let g = GurevichGraph::new(2).unwrap();
    let ledger = SeriesLedger::build(&g, &q_frac(1, 2), 40, 20);
    for (n, sum) in &ledger.partial_sums {
        assert_eq!(*sum, return_series_partial(&g, &q_frac(1, 2), *n).partial);
    }
    // p(n) counts all returns: compare with the walk count on a large enough level
    let (graph, _) = g.materialize(20).unwrap();
    let mut mass = vec![0u128; graph.len()];
    mass[0] = 1;
    for n in 1..=20 {
        let mut next = vec![0u128; graph.len()];
        for (v, outs) in graph.out.iter().enumerate() {
            for &w in outs {
                next[w as usize] += mass[v];
            }
        }
        mass = next;
        assert_eq!(ledger.p_terms[n].to_u128().unwrap(), mass[0], "n = {n}");
    }
}

#[test]
fn subgraph_entropies_increase_below_log_two() {
    let g = GurevichGraph::new(2).unwrap();
    let mut prev = 0.0;
    for level in [1u64, 2, 4, 8, 12, 16] {
        let h = subgraph_entropy(&g, level).unwrap();
        assert!(h.below_log2);
        assert!(h.width() <= 1e-8);
        assert!(h.h_lower >= prev - 1e-12);
        let rho = power_radius(&g, level).ln();
        assert!(h.h_lower - 1e-6 <= rho && rho <= h.h_upper + 1e-6, "level {level}: {rho} vs [{}, {}]", h.h_lower, h.h_upper);
        prev = h.h_lower;
    }
}
