use proptest::prelude::*;
use shadowlab_core::entropy::{audit_separated, entropy_estimate, max_separated, min_spanning, Effort, Pool};
use shadowlab_core::interval_maps::tent;
use shadowlab_core::rational::{pow2, q_frac, q_int};
use shadowlab_core::{PointRep, SystemHandle, Q};

// d_n by stepping both points and taking the largest distance
fn bowen(sys: &SystemHandle, x: &PointRep, y: &PointRep, n: usize) -> Q {
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut worst = q_int(0);
    for _ in 0..n {
        worst = worst.max(sys.dist_exact(&a, &b).unwrap());
        a = sys.apply(&a).unwrap();
        b = sys.apply(&b).unwrap();
    }
    worst
}

// largest pairwise separated subset, by trying every subset
fn brute_max(sys: &SystemHandle, pts: &[PointRep], n: usize, eps: &Q) -> u64 {
    let m = pts.len();
    let sep: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| bowen(sys, &pts[i], &pts[j], n) > *eps).collect()).collect();
    (0u32..1 << m)
        .filter(|mask| {
            (0..m).all(|i| mask & (1 << i) == 0 || (i + 1..m).all(|j| mask & (1 << j) == 0 || sep[i][j]))
        })
        .map(|mask| mask.count_ones() as u64)
        .max()
        .unwrap()
}

fn distinct_cycles() -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::btree_set(prop::collection::vec(0u32..2, 1..6), 1..11).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn symbolic_point_pools_match_brute_force(cycles in distinct_cycles(), n in 1usize..5, j in 0i64..4) {
        let sys = SystemHandle::full_shift(2);
        let pts: Vec<PointRep> = cycles.into_iter().map(PointRep::periodic).collect();
        let eps = pow2(-j) * q_frac(3, 4);
        let set = max_separated(&sys, n, &eps, &Pool::Points(pts.clone()), Effort::ExactOnly).unwrap();
        prop_assert_eq!(set.count, brute_max(&sys, &pts, n, &eps));
        prop_assert!(audit_separated(&sys, &set).unwrap());
    }

    #[test]
    fn tent_grid_pools_match_brute_force(m in 2u64..11, n in 1usize..4, k in 1i64..8) {
        let sys = SystemHandle::PLInterval(tent(&q_int(2)).unwrap());
        let pool = Pool::Grid { m };
        let pts = pool.materialize(&sys, n).unwrap();
        let eps = q_frac(k, 16);
        let set = max_separated(&sys, n, &eps, &pool, Effort::ExactOnly).unwrap();
        prop_assert_eq!(set.count, brute_max(&sys, &pts, n, &eps));
        prop_assert!(audit_separated(&sys, &set).unwrap());
        let span = min_spanning(&sys, n, &eps, &pool).unwrap();
        prop_assert!(span.count <= set.count);
        prop_assert!(audit_separated(&sys, &span).unwrap());
    }
}

#[test]
fn full_shift_block_counts_give_log_k() {
    for k in 2..4u32 {
        let sys = SystemHandle::full_shift(k);
        let rows = entropy_estimate(&sys, &[4, 8, 12], &[q_frac(1, 2)], &Pool::Blocks).unwrap();
        for r in rows {
            // distance above 1/2 means a disagreement at coordinate 0, so d_n sees n symbols
            assert_eq!(r.count, (k as u64).pow(r.n as u32));
            assert!((r.rate - (k as f64).ln()).abs() < 1e-12);
        }
    }
}

#[test]
fn golden_mean_rates_approach_log_phi() {
    let sys = SystemHandle::golden_mean();
    let phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let rows = entropy_estimate(&sys, &[10, 20, 30], &[q_frac(1, 2)], &Pool::Blocks).unwrap();
    let errs: Vec<f64> = rows.iter().map(|r| (r.rate - phi).abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(errs[2] < 0.05);
}

#[test]
fn odometer_cylinders_have_no_growth() {
    let sys = SystemHandle::Odometer(shadowlab_core::odometer::OdometerSpec::geometric(2, 6));
    for n in [1, 5, 20] {
        let set = max_separated(&sys, n, &q_frac(1, 8), &Pool::Cylinders { level: 4 }, Effort::Auto).unwrap();
        // scale 1/8 distinguishes the first two levels only, at any horizon
        assert_eq!(set.count, 4);
    }
}

#[test]
fn zero_horizon_is_rejected() {
    let sys = SystemHandle::full_shift(2);
    assert!(max_separated(&sys, 0, &q_frac(1, 2), &Pool::Blocks, Effort::Auto).is_err());
    assert!(max_separated(&sys, 3, &q_frac(1, 2), &Pool::Grid { m: 4 }, Effort::Auto).is_err());
}
