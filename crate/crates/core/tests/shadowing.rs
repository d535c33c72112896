use proptest::prelude::*;
use shadowlab_core::interval_maps::tent;
use shadowlab_core::rational::{pow2, q_frac, q_int};
use shadowlab_core::shadowing::{modulus, trace, verify_pseudo_orbit, PseudoOrbit, ShadowError};
use shadowlab_core::spaces::Extension;
use shadowlab_core::{PointRep, SymbolicWindow, SystemHandle, Q};

fn window(symbols: Vec<u32>) -> PointRep {
    PointRep::Symbolic(SymbolicWindow::new(0, symbols, Extension::Zeros))
}

// x_{i+1} keeps `keep` coordinates of T x_i; the rest come from `noise`
fn symbolic_pseudo_orbit(keep: usize, noise: &[Vec<u32>]) -> Vec<PointRep> {
    let mut cur = noise[0].clone();
    let mut out = vec![window(cur.clone())];
    for fresh in &noise[1..] {
        let mut next = cur[1..=keep].to_vec();
        next.extend(fresh.iter().take(cur.len() - keep));
        out.push(window(next.clone()));
        cur = next;
    }
    out
}

// independent tracing check: step the tracer and compare
fn max_error(sys: &SystemHandle, tracer: &PointRep, pts: &[PointRep]) -> Q {
    let mut y = tracer.clone();
    let mut worst = q_int(0);
    for x in pts {
        let d = sys.dist(&y, x).unwrap().upper;
        worst = worst.max(d);
        y = sys.apply(&y).unwrap();
    }
    worst
}

// kicks of size below δ, clamped to [0, 1]
fn tent_pseudo_orbit(lambda: Q, start: i64, kicks: &[i64]) -> (SystemHandle, Vec<PointRep>, Q) {
    let map = tent(&lambda).unwrap();
    let sys = SystemHandle::PLInterval(map.clone());
    let eps = q_frac(1, 16);
    let delta = modulus(&sys, &eps).unwrap();
    let mut x = q_frac(start, 1000);
    let mut pts = vec![PointRep::real(x.clone())];
    for &k in kicks {
        let y = (map.eval(&x).unwrap() + &delta * q_frac(k, 1001)).clamp(q_int(0), q_int(1));
        pts.push(PointRep::real(y.clone()));
        x = y;
    }
    (sys, pts, eps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn full_shift_pseudo_orbits_are_traced(k in 1i64..6, noise in prop::collection::vec(prop::collection::vec(0u32..3, 12), 2..60)) {
        let sys = SystemHandle::full_shift(3);
        let eps = pow2(-k);
        let delta = modulus(&sys, &eps).unwrap();
        let keep = (k + 2) as usize;
        prop_assume!(keep + 1 < 12);
        let pts = symbolic_pseudo_orbit(keep, &noise);
        let po = PseudoOrbit::finite(pts.clone(), delta);
        let cert = trace(&sys, &po, &eps).unwrap();
        prop_assert!(cert.reverify(&sys, &po).unwrap());
        prop_assert!(max_error(&sys, &cert.tracer, &pts) < eps);
    }

    #[test]
    fn true_orbits_trace_themselves(cycle in prop::collection::vec(0u32..2, 1..8), n in 2usize..40) {
        let sys = SystemHandle::full_shift(2);
        let x = PointRep::periodic(cycle);
        let po = PseudoOrbit::true_orbit(&sys, &x, n, q_frac(1, 64)).unwrap();
        let cert = trace(&sys, &po, &q_frac(1, 8)).unwrap();
        prop_assert_eq!(cert.worst, q_int(0));
    }

    #[test]
    fn tent_pseudo_orbits_are_traced(start in 1i64..999, kicks in prop::collection::vec(-1000i64..1000, 1..30)) {
        let (sys, pts, eps) = tent_pseudo_orbit(q_int(2), start, &kicks);
        let po = PseudoOrbit::finite(pts.clone(), modulus(&sys, &eps).unwrap());
        let cert = trace(&sys, &po, &eps).unwrap();
        prop_assert!(max_error(&sys, &cert.tracer, &pts) < eps);
    }

    // below slope 2 shadowing can fail; a tracer, when found, must still work
    #[test]
    fn slow_tent_either_traces_or_reports(start in 1i64..999, kicks in prop::collection::vec(-1000i64..1000, 1..30)) {
        let (sys, pts, eps) = tent_pseudo_orbit(q_frac(3, 2), start, &kicks);
        let po = PseudoOrbit::finite(pts.clone(), modulus(&sys, &eps).unwrap());
        match trace(&sys, &po, &eps) {
            Ok(cert) => prop_assert!(max_error(&sys, &cert.tracer, &pts) < eps),
            Err(e) => prop_assert!(matches!(e, ShadowError::NoTracer { .. }), "{e}"),
        }
    }
}

#[test]
fn moduli_of_the_standard_shifts() {
    for sys in [SystemHandle::full_shift(2), SystemHandle::golden_mean()] {
        assert_eq!(modulus(&sys, &q_frac(1, 4)).unwrap(), q_frac(1, 8));
        assert_eq!(modulus(&sys, &q_frac(1, 16)).unwrap(), q_frac(1, 32));
    }
    assert_eq!(modulus(&SystemHandle::full_shift(2), &q_int(0)), Err(ShadowError::BadEpsilon));
}

#[test]
fn gaps_above_delta_are_rejected() {
    let sys = SystemHandle::full_shift(2);
    // T(0000…) = 000… but the next point starts with 1: gap 1
    let mut po = PseudoOrbit::finite(vec![window(vec![0, 0, 0]), window(vec![1, 0, 0])], q_frac(1, 8));
    let gaps = verify_pseudo_orbit(&sys, &mut po).unwrap();
    assert!(!gaps.holds);
    assert!(matches!(trace(&sys, &po, &q_frac(1, 4)), Err(ShadowError::NotVerified { .. })));
}

#[test]
fn periodic_pseudo_orbits_get_periodic_tracers() {
    let sys = SystemHandle::full_shift(2);
    // a 3-periodic pseudo-orbit whose points agree with T x_i on two coordinates
    let block = vec![window(vec![0, 1, 1, 0]), window(vec![1, 1, 0, 1]), window(vec![1, 0, 1, 1])];
    let po = PseudoOrbit::periodic(block.clone(), q_frac(1, 4));
    let cert = trace(&sys, &po, &q_frac(1, 2)).unwrap();
    let unrolled: Vec<PointRep> = (0..30).map(|i| block[i % 3].clone()).collect();
    assert!(max_error(&sys, &cert.tracer, &unrolled) < q_frac(1, 2));
}
