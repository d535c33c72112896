use std::sync::Arc;

use proptest::prelude::*;
use shadowlab_core::interval_maps::tent;
use shadowlab_core::measures::{bl_exact, dbl, empirical, integrals, mix, DiscreteMeasure, TestFamily, DEFAULT_N_MAX};
use shadowlab_core::rational::{q_frac, q_int};
use shadowlab_core::{PointRep, SystemHandle, Q};

fn shift() -> Arc<SystemHandle> {
    Arc::new(SystemHandle::full_shift(2))
}

// a random finitely supported measure on periodic points
fn measure() -> impl Strategy<Value = Vec<(Vec<u32>, i64)>> {
    prop::collection::vec((prop::collection::vec(0u32..2, 1..5), 1i64..6), 1..4)
}

fn build(sys: &Arc<SystemHandle>, parts: &[(Vec<u32>, i64)]) -> DiscreteMeasure {
    let total: i64 = parts.iter().map(|p| p.1).sum();
    let atoms = parts.iter().map(|(c, w)| (PointRep::periodic(c.clone()), q_frac(*w, total))).collect();
    DiscreteMeasure::from_atoms(sys.clone(), atoms).unwrap()
}

// Σ 2^-(n+1) |∫f_n dμ − ∫f_n dν|, evaluating every test function on every atom
fn dbl_oracle(fam: &TestFamily, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Q {
    let integral = |m: &DiscreteMeasure, f: &shadowlab_core::measures::TestFunction| -> Q {
        m.atoms().unwrap().iter().map(|(x, w)| f.eval(fam.system(), x).unwrap() * w).sum()
    };
    fam.functions()
        .iter()
        .enumerate()
        .map(|(n, f)| {
            let d = integral(mu, f) - integral(nu, f);
            let d = if d < q_int(0) { -d } else { d };
            d / Q::from_integer(num_bigint::BigInt::from(2u32).pow(n as u32 + 1))
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dbl_matches_direct_evaluation(a in measure(), b in measure()) {
        let sys = shift();
        let fam = TestFamily::canonical(sys.clone(), DEFAULT_N_MAX).unwrap();
        let (mu, nu) = (build(&sys, &a), build(&sys, &b));
        prop_assert_eq!(dbl(&mu, &nu, &fam).unwrap().value, dbl_oracle(&fam, &mu, &nu));
    }

    #[test]
    fn dbl_is_a_pseudometric(a in measure(), b in measure(), c in measure()) {
        let sys = shift();
        let fam = TestFamily::canonical(sys.clone(), DEFAULT_N_MAX).unwrap();
        let (x, y, z) = (build(&sys, &a), build(&sys, &b), build(&sys, &c));
        let d = |p: &DiscreteMeasure, q: &DiscreteMeasure| dbl(p, q, &fam).unwrap().value;
        prop_assert_eq!(d(&x, &x), q_int(0));
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
    }

    #[test]
    fn dbl_is_dominated_by_the_bounded_lipschitz_distance(a in measure(), b in measure()) {
        let sys = shift();
        let fam = TestFamily::canonical(sys.clone(), DEFAULT_N_MAX).unwrap();
        let (mu, nu) = (build(&sys, &a), build(&sys, &b));
        prop_assert!(dbl(&mu, &nu, &fam).unwrap().value <= bl_exact(&mu, &nu).unwrap());
    }

    #[test]
    fn dbl_is_convex_in_each_argument(a in measure(), b in measure(), c in measure(), w in 1i64..10) {
        let sys = shift();
        let fam = TestFamily::canonical(sys.clone(), DEFAULT_N_MAX).unwrap();
        let (m1, m2, nu) = (build(&sys, &a), build(&sys, &b), build(&sys, &c));
        let t = q_frac(w, 10);
        let m = mix(&[m1.clone(), m2.clone()], &[t.clone(), q_int(1) - &t]).unwrap();
        let d = |p: &DiscreteMeasure| dbl(p, &nu, &fam).unwrap().value;
        prop_assert!(d(&m) <= &t * d(&m1) + (q_int(1) - &t) * d(&m2));
    }

    #[test]
    fn periodic_orbit_measures_are_invariant(cycle in prop::collection::vec(0u32..2, 1..7)) {
        let sys = shift();
        let x = PointRep::periodic(cycle.clone());
        let p = cycle.len() as u64;
        let mu = empirical(&sys, &x, p).unwrap();
        let nu = empirical(&sys, &sys.apply(&x).unwrap(), p).unwrap();
        prop_assert!(mu.same_measure(&nu).unwrap());
        // averaging over several periods changes nothing
        prop_assert!(mu.same_measure(&empirical(&sys, &x, 3 * p).unwrap()).unwrap());
    }
}

#[test]
fn dirac_distances_are_bounded_by_the_metric() {
    let sys = shift();
    let pts = [vec![0], vec![1], vec![0, 1], vec![0, 0, 1], vec![0, 0, 0, 1]];
    for a in &pts {
        for b in &pts {
            let (x, y) = (PointRep::periodic(a.clone()), PointRep::periodic(b.clone()));
            let bl = bl_exact(&DiscreteMeasure::dirac(sys.clone(), x.clone()).unwrap(), &DiscreteMeasure::dirac(sys.clone(), y.clone()).unwrap()).unwrap();
            let d = sys.dist_exact(&x, &y).unwrap();
            assert!(bl <= d, "{a:?} {b:?}");
            assert_eq!(bl == q_int(0), d == q_int(0));
        }
    }
}

#[test]
fn constant_function_integrates_to_one() {
    let sys = shift();
    let fam = TestFamily::canonical(sys.clone(), 8).unwrap();
    let mu = build(&sys, &[(vec![0, 1], 1), (vec![1], 2)]);
    let ints = integrals(&mu, &fam).unwrap();
    assert_eq!(ints.len(), fam.functions().len());
    assert!(ints.contains(&q_int(1)));
    assert!(ints.iter().all(|v| *v >= q_int(0) && *v <= q_int(1)));
}

#[test]
fn bad_weights_are_rejected() {
    let sys = shift();
    let x = PointRep::periodic(vec![0]);
    assert!(DiscreteMeasure::from_atoms(sys.clone(), vec![(x.clone(), q_frac(1, 2))]).is_err());
    assert!(DiscreteMeasure::from_atoms(sys.clone(), vec![(x.clone(), q_int(2)), (x, q_int(-1))]).is_err());
    assert!(DiscreteMeasure::uniform(sys, &[]).is_err());
}

#[test]
fn interval_measures_use_hat_functions() {
    let sys = Arc::new(SystemHandle::PLInterval(tent(&q_int(2)).unwrap()));
    let fam = TestFamily::canonical(sys.clone(), DEFAULT_N_MAX).unwrap();
    let at = |q: Q| DiscreteMeasure::dirac(sys.clone(), PointRep::real(q)).unwrap();
    let near = dbl(&at(q_frac(1, 3)), &at(q_frac(1, 3) + q_frac(1, 1000)), &fam).unwrap().value;
    let far = dbl(&at(q_int(0)), &at(q_int(1)), &fam).unwrap().value;
    assert!(near > q_int(0) && near < far);
    assert!(far <= bl_exact(&at(q_int(0)), &at(q_int(1))).unwrap());
}
