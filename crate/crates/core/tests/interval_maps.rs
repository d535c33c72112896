use proptest::prelude::*;
use shadowlab_core::interval_maps::{core_tent, delahaye, delahaye_fixed_point, image_of_interval, tent, PLMap};
use shadowlab_core::rational::{q_frac, q_int};
use shadowlab_core::Q;

fn unit() -> impl Strategy<Value = Q> {
    (0i64..=997).prop_map(|k| q_frac(k, 997))
}

fn lambda() -> impl Strategy<Value = Q> {
    // slopes in [√2, 2]
    (0i64..=20).prop_map(|k| q_frac(3, 2) + q_frac(k, 40))
}

fn family() -> impl Strategy<Value = PLMap> {
    prop_oneof![
        lambda().prop_map(|l| tent(&l).unwrap()),
        lambda().prop_map(|l| core_tent(&l).unwrap()),
        (1u32..6).prop_map(|n| delahaye(n).unwrap()),
    ]
}

proptest! {
    #[test]
    fn tent_follows_its_formula(l in lambda(), x in unit()) {
        let expected = if x <= q_frac(1, 2) { &l * &x } else { &l * (q_int(1) - &x) };
        prop_assert_eq!(tent(&l).unwrap().eval(&x).unwrap(), expected);
    }

    #[test]
    fn composition_is_pointwise(f in family(), g in family(), x in unit()) {
        let fg = f.compose(&g);
        prop_assert_eq!(fg.eval(&x).unwrap(), f.eval(&g.eval(&x).unwrap()).unwrap());
    }

    #[test]
    fn maps_stay_in_the_unit_interval(f in family(), x in unit()) {
        let y = f.eval(&x).unwrap();
        prop_assert!(y >= q_int(0) && y <= q_int(1));
    }

    #[test]
    fn preimages_are_exact(f in family(), a in unit(), w in 0i64..200, x in unit()) {
        let b = (&a + q_frac(w, 997)).min(q_int(1));
        let parts = f.preimage(&a, &b);
        let y = f.eval(&x).unwrap();
        let inside = parts.iter().any(|(p, q)| *p <= x && x <= *q);
        prop_assert_eq!(inside, a <= y && y <= b);
        // endpoints map into [a, b] and the parts are disjoint and sorted
        for (p, q) in &parts {
            for e in [p, q] {
                let v = f.eval(e).unwrap();
                prop_assert!(a <= v && v <= b);
            }
        }
        prop_assert!(parts.windows(2).all(|w| w[0].1 < w[1].0));
    }

    #[test]
    fn interval_images_are_tight(f in family(), a in unit(), b in unit()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (ilo, ihi) = image_of_interval(&f, &lo, &hi);
        // every sample lands inside, and both ends are attained at a sample or breakpoint
        let mut samples: Vec<Q> = (0..=40).map(|k| &lo + (&hi - &lo) * q_frac(k, 40)).collect();
        samples.extend(f.breakpoints().iter().map(|(x, _)| x.clone()).filter(|x| *x >= lo && *x <= hi));
        let vals: Vec<Q> = samples.iter().map(|x| f.eval(x).unwrap()).collect();
        prop_assert!(vals.iter().all(|v| ilo <= *v && *v <= ihi));
        prop_assert_eq!(vals.iter().min().unwrap(), &ilo);
        prop_assert_eq!(vals.iter().max().unwrap(), &ihi);
    }
}

#[test]
fn tent_orbit_example() {
    let t = tent(&q_int(2)).unwrap();
    assert_eq!(t.eval(&q_frac(3, 10)).unwrap(), q_frac(3, 5));
    let (orbit, flag) = t.orbit_flagged(&q_frac(3, 10), 4).unwrap();
    assert_eq!(orbit, vec![q_frac(3, 10), q_frac(3, 5), q_frac(4, 5), q_frac(2, 5)]);
    assert_eq!(flag.first_index, None);
}

#[test]
fn delahaye_orbits_flag_the_truncated_zone() {
    let f = delahaye(2).unwrap();
    let (_, flag) = f.orbit_flagged(&q_frac(98, 100), 3).unwrap();
    assert_eq!(flag.first_index, Some(0));
    let (_, flag) = f.orbit_flagged(&q_frac(1, 2), 10).unwrap();
    assert_eq!(flag.first_index, Some(3));
    let p = delahaye_fixed_point(&f).unwrap();
    let (orbit, flag) = f.orbit_flagged(&p, 10).unwrap();
    assert!(orbit.iter().all(|x| *x == p));
    assert_eq!(flag.first_index, None);
}

#[test]
fn bad_tables_are_rejected() {
    assert!(PLMap::new(vec![(q_int(0), q_int(0))]).is_err());
    assert!(PLMap::new(vec![(q_int(0), q_int(0)), (q_frac(1, 2), q_int(2)), (q_int(1), q_int(0))]).is_err());
    assert!(PLMap::new(vec![(q_int(0), q_int(0)), (q_int(1), q_int(1)), (q_frac(1, 2), q_int(0))]).is_err());
    assert!(tent(&q_int(3)).is_err());
    assert!(delahaye(0).is_err());
}
