use proptest::prelude::*;
use shadowlab_core::rational::{pow2, q_int};
use shadowlab_core::spaces::Extension;
use shadowlab_core::{PointRep, SymbolicWindow, SystemHandle, Q};

// first disagreement of two periodic sequences, by unrolling
fn first_disagreement(a: &[u32], b: &[u32]) -> Option<usize> {
    (0..a.len() * b.len()).find(|&i| a[i % a.len()] != b[i % b.len()])
}

fn cycle() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..3, 1..6)
}

proptest! {
    #[test]
    fn one_sided_distance_is_dyadic_first_disagreement(a in cycle(), b in cycle()) {
        let s = SystemHandle::full_shift(3);
        let d = s.dist_exact(&PointRep::periodic(a.clone()), &PointRep::periodic(b.clone())).unwrap();
        let expected = first_disagreement(&a, &b).map_or(q_int(0), |i| pow2(-(i as i64)));
        prop_assert_eq!(d, expected);
    }

    #[test]
    fn one_sided_metric_is_an_ultrametric(a in cycle(), b in cycle(), c in cycle()) {
        let s = SystemHandle::full_shift(3);
        let (x, y, z) = (PointRep::periodic(a), PointRep::periodic(b), PointRep::periodic(c));
        let d = |p: &PointRep, q: &PointRep| s.dist_exact(p, q).unwrap();
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        let bound = std::cmp::max(d(&x, &y), d(&y, &z));
        prop_assert!(d(&x, &z) <= bound);
    }

    #[test]
    fn apply_n_matches_repeated_apply(a in cycle(), prefix in prop::collection::vec(0u32..3, 0..5), n in 0u64..20) {
        let s = SystemHandle::full_shift(3);
        let x = PointRep::Symbolic(SymbolicWindow::eventually_periodic(&prefix, &a));
        let mut y = x.clone();
        for _ in 0..n {
            y = s.apply(&y).unwrap();
        }
        prop_assert_eq!(s.dist_exact(&s.apply_n(&x, n).unwrap(), &y).unwrap(), q_int(0));
        // the shift reads coordinate n + i of x at i
        let w = x.as_symbolic().unwrap();
        let t = s.apply_n(&x, n).unwrap();
        let tw = t.as_symbolic().unwrap();
        for i in 0..10i64 {
            prop_assert_eq!(tw.get(i), w.get(i + n as i64));
        }
    }

    #[test]
    fn two_sided_distance_uses_the_central_disagreement(lo in -6i64..0, syms in prop::collection::vec(0u32..2, 12), flip in 0usize..12) {
        let s = SystemHandle::TwoSidedShift { alphabet: 2 };
        let mut other = syms.clone();
        other[flip] ^= 1;
        let x = PointRep::Symbolic(SymbolicWindow::new(lo, syms, Extension::Zeros));
        let y = PointRep::Symbolic(SymbolicWindow::new(lo, other, Extension::Zeros));
        let i = lo + flip as i64;
        prop_assert_eq!(s.dist_exact(&x, &y).unwrap(), pow2(-i.abs()));
    }
}

#[test]
fn unknown_coordinates_give_a_bracket() {
    let s = SystemHandle::full_shift(2);
    let x = PointRep::Symbolic(SymbolicWindow::finite(vec![1, 1]));
    let y = PointRep::periodic(vec![1]);
    let b = s.dist(&x, &y).unwrap();
    assert_eq!(b.lower, q_int(0));
    assert_eq!(b.upper, pow2(-2));
    assert!(!b.is_exact());
}

#[test]
fn system_documents_round_trip() {
    let docs = [
        r#"{"kind":"one_sided_shift","alphabet":3}"#,
        r#"{"kind":"sft","alphabet":2,"forbidden":["11"]}"#,
        r#"{"kind":"odometer","periods":[2,4,8]}"#,
        r#"{"kind":"pl_interval","family":{"name":"delahaye","level":3}}"#,
    ];
    for d in docs {
        let s: SystemHandle = serde_json::from_str(d).unwrap_or_else(|e| panic!("{d}: {e}"));
        let back: SystemHandle = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back, "{d}");
    }
    assert!(serde_json::from_str::<SystemHandle>(r#"{"kind":"baker"}"#).is_err());
    assert!(serde_json::from_str::<SystemHandle>(r#"{"kind":"sft","alphabet":2,"forbidden":["1"]}"#).is_err());
}

#[test]
fn interval_points_use_the_absolute_value() {
    let s: SystemHandle = serde_json::from_str(r#"{"kind":"pl_interval","breakpoints":[["0","0"],["1/2","1"],["1","0"]]}"#).unwrap();
    let x = PointRep::real(Q::new(1.into(), 3.into()));
    let y = PointRep::real(Q::new(3.into(), 4.into()));
    assert_eq!(s.dist_exact(&x, &y).unwrap(), Q::new(5.into(), 12.into()));
    // tent map: 1/3 -> 2/3
    assert_eq!(s.apply(&x).unwrap(), PointRep::real(Q::new(2.into(), 3.into())));
}
