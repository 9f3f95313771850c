mod common;

use common::{oracle_avoidance, oracle_event_check, oracle_torus_returns, q};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reebcz::generate::{dc_system, quadratic_irrational};
use reebcz::recurrence::{
    find_recurrence_events, minkowski_solutions, torus_returns, verify_event,
};
use reebcz::{BlockPath, Error, ExactReal, Orbit, OrbitSystem, RecurrenceParams};

fn golden() -> OrbitSystem {
    OrbitSystem::new(vec![Orbit {
        label: Some("golden".into()),
        path: BlockPath::rotation(q("-1/2+1/2*sqrt5")).unwrap(),
        action: q("sqrt5-1"),
    }])
    .unwrap()
}

/// Every nonzero vector in the box, normalized and ordered by max-norm then lexicographically.
fn brute_minkowski(
    n: usize,
    forms: &[Vec<ExactReal>],
    bounds: &[ExactReal],
    divisor: i64,
    count: usize,
    r: i64,
) -> Vec<Vec<i64>> {
    let mut all = Vec::new();
    let side = (2 * r + 1) as usize;
    for code in 0..side.pow(n as u32) {
        let mut c = code;
        let v: Vec<i64> = (0..n)
            .map(|_| {
                let x = (c % side) as i64 - r;
                c /= side;
                x
            })
            .collect();
        let first = v.iter().find(|x| **x != 0).copied().unwrap_or(0);
        if first <= 0 || v.iter().any(|x| x % divisor != 0) {
            continue;
        }
        let ok = forms.iter().zip(bounds).all(|(f, b)| {
            let val: ExactReal = f.iter().zip(&v).map(|(a, x)| a.mul_int(*x)).sum();
            val.abs().unwrap().lt(b).unwrap()
        });
        if ok {
            all.push(v);
        }
    }
    all.sort_by_key(|v| (v.iter().map(|x| x.abs()).max().unwrap(), v.clone()));
    all.truncate(count);
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn torus_returns_match_scan(seed in any::<u64>(), n in 0usize..=3, eps_den in 3i64..=30, divisor in 1u64..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambdas: Vec<ExactReal> = (0..n).map(|_| quadratic_irrational(&mut rng)).collect();
        let eps = ExactReal::ratio(1, eps_den);
        let expected = oracle_torus_returns(&lambdas, &eps, divisor, 400);
        match torus_returns(&lambdas, &eps, divisor, 400) {
            Ok(r) => {
                let gap = expected.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
                prop_assert_eq!(r.max_gap, gap);
                prop_assert_eq!(r.ks, expected);
            }
            Err(Error::EmptyWindow { .. }) => prop_assert!(expected.is_empty()),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn minkowski_matches_box_scan(seed in any::<u64>(), n in 2usize..=3, bound_den in 2i64..=8, divisor in 1u64..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forms: Vec<Vec<ExactReal>> = (0..n - 1)
            .map(|_| {
                let mut f: Vec<ExactReal> = (0..n).map(|_| quadratic_irrational(&mut rng)).collect();
                f[0] = ExactReal::one();
                f
            })
            .collect();
        let bounds = vec![ExactReal::ratio(1, bound_den); n - 1];
        let r = 12i64;
        let expected = brute_minkowski(n, &forms, &bounds, divisor as i64, 6, r);
        match minkowski_solutions(n, &forms, &bounds, divisor, 6, r as u64) {
            Ok(s) => prop_assert_eq!(s.vectors, expected),
            Err(Error::EmptyWindow { .. }) => prop_assert!(expected.is_empty()),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn events_of_convex_systems_verify(seed in any::<u64>(), orbits in 1usize..=3, half in 1usize..=2, even in any::<bool>()) {
        let sys = dc_system(&mut ChaCha8Rng::seed_from_u64(seed), orbits, half).unwrap();
        let mut p = RecurrenceParams::new(q("2/5"), 1);
        p.event_count = 2;
        p.k_ceiling = 20_000;
        if even {
            p.divisor = 2;
        }
        let out = match find_recurrence_events(&sys, &p) {
            Ok(o) => o,
            Err(Error::ParamTooTight(_)) => return Err(TestCaseError::reject("no event in the window")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for ev in &out.events {
            let rep = verify_event(&sys, ev, 300).unwrap();
            prop_assert!(rep.passed, "{:?}", rep);
            oracle_event_check(&sys, &ev.c, &ev.d, &ev.k, &ev.params.eta, 1).map_err(TestCaseError::fail)?;
            if even {
                prop_assert!(ev.k.iter().all(|k| k % 2 == 0));
                prop_assert!(ev.d.iter().all(|d| d % 2 == 0));
            }
            let mut bad = ev.clone();
            bad.d[0] += 1;
            let rep = verify_event(&sys, &bad, 300).unwrap();
            prop_assert!(!rep.passed);
            prop_assert!(rep.failures.iter().any(|f| f.item == "IR1"));
        }
        for w in out.events.windows(2) {
            prop_assert!(w[0].c.lt(&w[1].c).unwrap());
            prop_assert!(w[0].k.iter().zip(&w[1].k).all(|(a, b)| a < b));
        }
    }
}

#[test]
fn golden_events_follow_the_torus_returns() {
    let mut p = RecurrenceParams::new(q("1/5"), 1);
    p.event_count = 20;
    let out = find_recurrence_events(&golden(), &p).unwrap();
    assert_eq!(out.events.len(), 20);
    let eps = q("1/20");
    assert_eq!(out.params.event.epsilon, eps);
    let last = *out.events.last().unwrap().k.first().unwrap();
    let returns = oracle_torus_returns(&[q("-1/2+1/2*sqrt5")], &eps, 1, last);
    let ks: Vec<u64> = out.events.iter().map(|e| e.k[0]).collect();
    assert_eq!(ks, returns);
    let gap = returns.windows(2).map(|w| w[1] - w[0]).max().unwrap();
    assert_eq!(out.observed_gaps, vec![gap]);
    // three-distance: gaps between returns take at most three values
    let mut gaps: Vec<u64> = returns.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort();
    gaps.dedup();
    assert!(gaps.len() <= 3, "{gaps:?}");
    for ev in &out.events {
        oracle_event_check(&golden(), &ev.c, &ev.d, &ev.k, &ev.params.eta, 1).unwrap();
    }
}

#[test]
fn avoidance_agrees_with_oracle() {
    let mut p = RecurrenceParams::new(q("1/5"), 1);
    p.k_ceiling = 200;
    let ev = find_recurrence_events(&golden(), &p)
        .unwrap()
        .events
        .remove(0);
    let rep = verify_event(&golden(), &ev, 200).unwrap();
    assert!(rep.passed);
    // a single rotation is not dynamically convex, so no avoidance is claimed
    assert!(rep.avoidance.is_none());

    let sys = reebcz::orbits::ellipsoid_system(&[q("1"), q("sqrt2")]).unwrap();
    let mut p = RecurrenceParams::new(q("3/20"), 1);
    p.epsilon = Some(q("3/40"));
    p.sigma = Some(q("3/40"));
    p.k_ceiling = 100;
    let ev = find_recurrence_events(&sys, &p).unwrap().events.remove(0);
    let rep = verify_event(&sys, &ev, 100).unwrap();
    assert!(rep.avoidance.unwrap().holds);
    oracle_avoidance(&sys, &ev.k, 100).unwrap();
}

#[test]
fn empty_search_window_is_reported() {
    let mut p = RecurrenceParams::new(q("1/5"), 1);
    p.k_ceiling = 5;
    assert!(matches!(
        find_recurrence_events(&golden(), &p),
        Err(Error::ParamTooTight(_))
    ));
    let mut p = RecurrenceParams::new(q("1/2"), 1);
    p.k_ceiling = 100;
    assert!(matches!(
        find_recurrence_events(&golden(), &p),
        Err(Error::InvalidParams(_))
    ));
}
