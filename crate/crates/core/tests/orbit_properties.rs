mod common;

use common::{floor_by_search, oracle_mean_index, oracle_mu_pm, q};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reebcz::blockpaths::is_admissible;
use reebcz::generate::{block_path, ellipsoid_deltas};
use reebcz::orbits::{
    chieq, classify_orbit, degree_shift_predict, ellipsoid_comparison, ellipsoid_system,
    local_homology, multiplicity_audit, staircase_barcode, ShiftRule,
};
use reebcz::persistence::{beg_end_assignment, check_beg_end, dim_at};
use reebcz::recurrence::{cluster_orbits, find_recurrence_events};
use reebcz::{
    BlockPath, ClosedOrbitRecord, Error, ExactReal, OrbitSystem, RecurrenceParams, Support,
};

/// Index of `y_j^k` on an ellipsoid from the closed floor-sum formula.
fn ellipsoid_index(deltas: &[ExactReal], j: usize, k: u64) -> i64 {
    let n = deltas.len() as i64;
    let mut s = 2 * k as i64 + n - 1;
    for (i, di) in deltas.iter().enumerate() {
        if i != j {
            s += 2 * floor_by_search(&deltas[j].checked_div(di).unwrap().mul_int(k as i64));
        }
    }
    s
}

/// Iterates `(j, k)` with action below the smallest `k_max`-th iterate action, sorted by action.
fn iterates_below(deltas: &[ExactReal], k_max: u64) -> Vec<(usize, u64)> {
    let top = deltas[0].mul_int(k_max as i64);
    let mut v: Vec<(usize, u64, ExactReal)> = Vec::new();
    for (j, d) in deltas.iter().enumerate() {
        for k in 1..=k_max {
            let a = d.mul_int(k as i64);
            if a.le(&top).unwrap() {
                v.push((j, k, a));
            }
        }
    }
    v.sort_by(|x, y| x.2.cmp_exact(&y.2).unwrap());
    v.into_iter().map(|(j, k, _)| (j, k)).collect()
}

fn e1_sqrt2() -> OrbitSystem {
    ellipsoid_system(&[q("1"), q("sqrt2")]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ellipsoid_degrees_are_a_monotone_bijection(seed in any::<u64>(), n in 2usize..=4) {
        let deltas = ellipsoid_deltas(&mut ChaCha8Rng::seed_from_u64(seed), n).unwrap();
        let sys = ellipsoid_system(&deltas).unwrap();
        prop_assert_eq!(cluster_orbits(&sys).unwrap().len(), 1);
        let mut expected = n as i64 + 1;
        for (j, k) in iterates_below(&deltas, 200) {
            let path = &sys.orbits()[j].path;
            let (mm, mp) = oracle_mu_pm(path, k);
            prop_assert_eq!(mm, mp);
            prop_assert_eq!(mm, ellipsoid_index(&deltas, j, k));
            prop_assert_eq!(mm, expected);
            // every visible iterate sits in degree parity n+1
            let rec = ClosedOrbitRecord::new("y", path, &deltas[j], k).unwrap();
            match local_homology(&rec, 0).unwrap().ch {
                Support::Exact { degrees } => prop_assert_eq!(degrees, vec![mm]),
                other => prop_assert!(false, "{:?}", other),
            }
            prop_assert_eq!((mm - n as i64 - 1).rem_euclid(2), 0);
            expected += 2;
        }
        // mean index of y_j is 2 delta_j times the reciprocal sum
        let recip: ExactReal = deltas.iter().map(|d| d.recip().unwrap()).sum();
        for (j, o) in sys.orbits().iter().enumerate() {
            prop_assert_eq!(oracle_mean_index(&o.path), deltas[j].mul_int(2).checked_div(&recip.recip().unwrap()).unwrap());
        }
    }

    #[test]
    fn staircase_has_one_bar_at_every_level(seed in any::<u64>(), n in 2usize..=4) {
        let deltas = ellipsoid_deltas(&mut ChaCha8Rng::seed_from_u64(seed), n).unwrap();
        let sys = ellipsoid_system(&deltas).unwrap();
        let st = staircase_barcode(&sys, 60).unwrap();
        let bars = st.barcode.bars();
        for (i, bar) in bars.iter().enumerate() {
            prop_assert_eq!(bar.deg, n as i64 + 2 * i as i64);
            prop_assert_eq!(st.orbits[i].degree, bar.deg + 1);
            if i > 0 {
                prop_assert_eq!(&bar.a, bars[i - 1].b.as_ref().unwrap());
            }
        }
        let top = bars.last().unwrap().b.clone().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        for _ in 0..300 {
            let t = common::rational_below(&mut rng, &top);
            prop_assert_eq!(dim_at(&st.barcode, &t, None).unwrap(), 1);
        }
        let be = beg_end_assignment(&st.barcode, &st.homology).unwrap();
        prop_assert!(check_beg_end(&st.barcode, &st.homology, &be).unwrap().holds);
        for (i, b) in be.beg.iter().enumerate() {
            prop_assert_eq!(*b, i);
            prop_assert_eq!(be.en[i], Some(i + 1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn equivariant_euler_characteristic_is_invariant(seed in any::<u64>(), k in (0u64..50).prop_map(|j| 2 * j + 1)) {
        let prime = block_path(&mut ChaCha8Rng::seed_from_u64(seed), 3).unwrap();
        let c1 = classify_orbit(&prime, 1);
        prop_assume!(c1.as_ref().is_ok_and(|c| c.nondegenerate) && is_admissible(&prime, k));
        let x = ClosedOrbitRecord::new("x", &prime, &ExactReal::one(), 1).unwrap();
        let xk = x.iterate(k).unwrap();
        let (mu1, _) = oracle_mu_pm(&prime, 1);
        let (muk, _) = oracle_mu_pm(&prime, k);
        let sign = |m: i64| if m.rem_euclid(2) == 0 { 1 } else { -1 };
        prop_assert_eq!(chieq(&x).unwrap(), sign(mu1));
        prop_assert_eq!(chieq(&xk).unwrap(), chieq(&x).unwrap());
        prop_assert_eq!(sign(muk), sign(mu1));
    }

    #[test]
    fn degree_shift_matches_index_oracle(seed in any::<u64>(), k in (0u64..50).prop_map(|j| 2 * j + 1), deg in -3i64..=12) {
        let prime = block_path(&mut ChaCha8Rng::seed_from_u64(seed), 3).unwrap();
        let rec = ClosedOrbitRecord::new("x", &prime, &ExactReal::one(), 1).unwrap().with_degree(deg);
        match degree_shift_predict(&rec, k) {
            Ok(p) => {
                prop_assert_eq!(p.k, k);
                if prime.is_totally_degenerate() {
                    prop_assert_eq!(p.rule, ShiftRule::TotallyDegenerate);
                    let shift = oracle_mean_index(&prime).mul_int(k as i64 - 1);
                    prop_assert_eq!(ExactReal::integer(p.degree - deg), shift);
                } else {
                    prop_assert_eq!(p.rule, ShiftRule::NondegeneratePart);
                    let psi = prime.nondegenerate_part();
                    prop_assert_eq!(p.degree, deg + oracle_mu_pm(&psi, k).0 - oracle_mu_pm(&psi, 1).0);
                    if k == 1 {
                        prop_assert_eq!(p.degree, deg);
                    }
                }
            }
            Err(Error::NotApplicable(_)) => {
                let integral = oracle_mean_index(&prime).is_integer().unwrap();
                prop_assert!(!is_admissible(&prime, k) || (prime.is_totally_degenerate() && !integral));
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

#[test]
fn degree_shift_reproduces_staircase_degrees() {
    let deltas = [q("1"), q("sqrt2"), q("sqrt3")];
    let sys = ellipsoid_system(&deltas).unwrap();
    let st = staircase_barcode(&sys, 80).unwrap();
    for o in &st.orbits {
        let first = st
            .orbits
            .iter()
            .find(|p| p.orbit == o.orbit && p.k == 1)
            .unwrap();
        let prime = &sys.orbits()[o.orbit].path;
        let rec = ClosedOrbitRecord::new("y", prime, &deltas[o.orbit], 1)
            .unwrap()
            .with_degree(first.degree);
        if o.k % 2 == 1 {
            assert_eq!(degree_shift_predict(&rec, o.k).unwrap().degree, o.degree);
        } else {
            assert!(matches!(
                degree_shift_predict(&rec, o.k),
                Err(Error::NotApplicable(_))
            ));
        }
    }
}

#[test]
fn classification_examples() {
    let c = classify_orbit(&BlockPath::rotation(q("3/10")).unwrap(), 1).unwrap();
    assert!(!c.alternating);
    for k in 1..=30 {
        let c = classify_orbit(&BlockPath::rotation(q("3/10")).unwrap(), k).unwrap();
        assert!(c.good != Some(false));
    }
    let h = BlockPath::hyperbolic(1, true).unwrap();
    assert!(classify_orbit(&h, 1).unwrap().alternating);
    assert_eq!(classify_orbit(&h, 2).unwrap().good, Some(false));
    assert_eq!(classify_orbit(&h, 3).unwrap().good, Some(true));
    let mixed = h.direct_sum(&BlockPath::rotation(q("1/2")).unwrap());
    assert!(matches!(
        classify_orbit(&mixed, 2),
        Err(Error::ClassificationUndefined(_))
    ));
}

#[test]
fn squared_alternating_orbit_is_invisible() {
    let h = BlockPath::hyperbolic(1, true).unwrap();
    let x = ClosedOrbitRecord::new("x", &h, &q("1"), 1).unwrap();
    let x2 = x.iterate(2).unwrap();
    let lh = local_homology(&x2, 0).unwrap();
    let mu = oracle_mu_pm(&h, 2).0;
    assert_eq!(
        lh.sh,
        Support::Exact {
            degrees: vec![mu, mu + 1]
        }
    );
    assert_eq!(lh.ch, Support::Exact { degrees: vec![] });
    assert_eq!(chieq(&x2).unwrap(), 0);
    assert_eq!(chieq(&x).unwrap(), -1);
    assert_eq!(chieq(&x.iterate(3).unwrap()).unwrap(), -1);
}

#[test]
fn local_homology_examples() {
    let good = ClosedOrbitRecord::new("y2", &e1_sqrt2().orbits()[1].path, &q("sqrt2"), 1).unwrap();
    // index 5 on E(1, sqrt2); a good orbit of index 3 is checked through y1
    let y1 = ClosedOrbitRecord::new("y1", &e1_sqrt2().orbits()[0].path, &q("1"), 1).unwrap();
    let lh = local_homology(&y1, 0).unwrap();
    assert_eq!(
        lh.sh,
        Support::Exact {
            degrees: vec![3, 4]
        }
    );
    assert_eq!(lh.ch, Support::Exact { degrees: vec![3] });
    assert_eq!(chieq(&y1).unwrap(), -1);
    assert_eq!(
        local_homology(&good, 0).unwrap().ch,
        Support::Exact { degrees: vec![5] }
    );
    let shear = BlockPath::shear(reebcz::ShearForm::QPlus { d: 1 }).unwrap();
    let rec = ClosedOrbitRecord::new("s", &shear, &q("1"), 1).unwrap();
    match local_homology(&rec, 0).unwrap().sh {
        Support::Bounded { lo, hi, .. } => assert_eq!((lo, hi), (0, Some(2))),
        other => panic!("{other:?}"),
    }
    assert!(matches!(chieq(&rec), Err(Error::NotApplicable(_))));
    // positive characteristic dividing the iterate only yields a bound
    let y1_2 = y1.iterate(2).unwrap();
    assert!(!local_homology(&y1_2, 2).unwrap().ch.is_exact());
}

#[test]
fn ellipsoid_staircase_example() {
    let st = staircase_barcode(&e1_sqrt2(), 7).unwrap();
    let degrees: Vec<i64> = st.orbits.iter().map(|o| o.degree).collect();
    assert_eq!(degrees, vec![3, 5, 7, 9, 11, 13, 15]);
    let actions: Vec<ExactReal> = st.orbits.iter().map(|o| o.action.clone()).collect();
    assert_eq!(
        actions,
        ["1", "sqrt2", "2", "2*sqrt2", "3", "4", "3*sqrt2"]
            .map(q)
            .to_vec()
    );
    let bars = st.barcode.bars();
    assert_eq!((bars[0].a.clone(), bars[0].deg), (q("0"), 2));
    let z = reebcz::persistence::zeta_counts(&st.barcode, &q("sqrt2")).unwrap();
    assert_eq!((z[&5].total, z[&6].total), (1, 1));
}

#[test]
fn multiplicity_audit_on_two_axis_ellipsoid() {
    let sys = e1_sqrt2();
    let mut p = RecurrenceParams::new(q("3/20"), 1);
    p.epsilon = Some(q("3/40"));
    p.sigma = Some(q("3/40"));
    p.k_ceiling = 100;
    let ev = find_recurrence_events(&sys, &p).unwrap().events.remove(0);
    assert_eq!((ev.k.clone(), ev.d.clone()), (vec![7, 5], vec![24]));
    let rep = multiplicity_audit(&sys, &ev, 100).unwrap();
    assert!(rep.passed, "{:?}", rep.checks);
    assert_eq!(rep.levels[0].interval, (23, 25));
    let slots: Vec<(i64, Vec<(usize, u64)>)> = rep.levels[0]
        .slots
        .iter()
        .map(|s| (s.degree, s.filled_by.clone()))
        .collect();
    assert_eq!(slots, vec![(23, vec![(0, 7)]), (25, vec![(1, 5)])]);
    assert_eq!(rep.distinct_primes, 2);

    // removing an orbit leaves a slot empty
    let one = sys.without(1).unwrap();
    let mut ev1 = ev.clone();
    ev1.k = vec![7];
    match multiplicity_audit(&one, &ev1, 100) {
        Ok(r) => assert!(!r.passed),
        Err(e) => assert!(matches!(e, Error::EventMismatch(_)), "{e}"),
    }
}

#[test]
fn ellipsoid_comparison_examples() {
    let sys = e1_sqrt2().rescaled_to_mean_index();
    let rep = ellipsoid_comparison(&sys, 200).unwrap();
    assert!(rep.passed);
    assert_eq!(rep.reciprocal_sum, q("1/2"));
    for o in &rep.orbits {
        assert_eq!(o.rotations_system, o.rotations_ellipsoid);
    }
    let resonant = ellipsoid_system(&[q("1"), q("sqrt2")]).unwrap();
    assert!(matches!(
        ellipsoid_comparison(&resonant, 10),
        Err(Error::HypothesisViolation(_))
    ));
}
