mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use septangle::canonical::{construction_41, good_nested_set};
use septangle::duality::check_separable;
use septangle::gen::{random_graph, random_instance, random_submodular, rng};
use septangle::graphsep::{build_sk, graph_of, tk_star, GraphUniverse};
use septangle::order::check_order_submodular;
use septangle::orient::{
    consistent_orientations, distinguishes_efficiently, enumerate_tangles, is_regular, maximal_elements,
    oracle_tangles, profile_family,
};
use septangle::refine::{closely_related, distinguishes_well, find_close_witness};
use septangle::system::{corner_uids, uid_nested};
use septangle::trees::{check_tree_set, lives_at, nodes_of, NestedSet};
use septangle::{Orientation, Sep, SeparationSystem, Universe};

fn system(seed: u64) -> Option<SeparationSystem> {
    let mut r = rng(seed);
    let n = r.gen_range(3..=5);
    let start = r.gen_range(2..=5);
    random_submodular(&mut r, n, start, 10).ok()
}

fn close(s: &SeparationSystem, x: Sep, p: &Orientation) -> bool {
    closely_related(s, x, p).is_ok()
}

/// `x ∧ y₁ ∧ … ∧ yₙ` in the universe, if it lies in `s`.
fn meet_all(s: &SeparationSystem, x: Sep, ys: &[Sep]) -> Option<Sep> {
    let u = s.universe();
    let m = ys.iter().fold(s.uid(x), |acc, &y| u.meet(acc, s.uid(y)));
    s.sep_of(m)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    #[test]
    fn pruned_search_matches_oracle(seed in any::<u64>()) {
        let (s, f, _) = random_instance(seed, 12).unwrap();
        let ts = enumerate_tangles(&s, &f, limits()).unwrap();
        prop_assert_eq!(&ts, &oracle_tangles(&s, &f).unwrap());
        prop_assert_eq!(&ts, &naive_tangles(&s, &f));
        for t in &ts {
            prop_assert!(is_regular(&s, t));
        }
    }

    #[test]
    fn profile_family_tangles_are_profiles(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        let ts = enumerate_tangles(&s, &profile_family(&s), limits()).unwrap();
        prop_assert_eq!(ts, naive_profiles(&s));
    }

    #[test]
    fn maximal_members_of_profiles_are_close(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        for p in naive_profiles(&s) {
            for x in maximal_elements(&s, p.seps()) {
                prop_assert!(close(&s, x, &p), "{}", s.label(x));
            }
        }
    }

    #[test]
    fn submodular_systems_are_separable(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        prop_assert_eq!(check_separable(&s), Ok(()));
    }

    #[test]
    fn consistent_orientations_live_at_one_node(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        let mut r = rng(seed ^ 0x5eed);
        let mut keys = s.unoriented();
        keys.shuffle(&mut r);
        let mut chosen: Vec<Sep> = Vec::new();
        for k in keys {
            if chosen.iter().all(|&c| s.nested(c, k)) && !s.is_trivial(k) && !s.is_trivial(s.inv(k))
                && !s.is_small(k) && !s.is_small(s.inv(k)) {
                chosen.push(k);
            }
        }
        let n = NestedSet::new(&s, &chosen).unwrap();
        prop_assume!(check_tree_set(&s, &n, true).is_ok());
        let nodes = nodes_of(&s, &n, limits()).unwrap();
        for o in consistent_orientations(&n.as_system(&s), limits()).unwrap() {
            let home = lives_at(&s, &o, &n).unwrap();
            prop_assert_eq!(nodes.iter().filter(|node| **node == home).count(), 1);
        }
    }

    #[test]
    fn graph_orders_are_submodular(seed in any::<u64>(), n in 2usize..=7, k in 1usize..=3) {
        let g = random_graph(&mut rng(seed), n, 0.5).unwrap();
        let s = build_sk(&g, k).unwrap();
        prop_assert!(s.is_submodular().is_ok());
        let u = graph_of(&s).unwrap();
        let elems: Vec<_> = s.oriented().map(|x| s.uid(x)).collect();
        prop_assert!(check_order_submodular(u, u, &elems).is_ok());
    }

    #[test]
    fn corners_of_graph_separations(seed in any::<u64>(), n in 2usize..=6) {
        let g = random_graph(&mut rng(seed), n, 0.5).unwrap();
        let u = GraphUniverse::new(g);
        let all = u.elements().unwrap();
        let mut r = rng(seed);
        for _ in 0..200 {
            let (a, b, t) = (*all.choose(&mut r).unwrap(), *all.choose(&mut r).unwrap(), *all.choose(&mut r).unwrap());
            if uid_nested(&u, a, b) || !uid_nested(&u, t, a) || !uid_nested(&u, t, b) {
                continue;
            }
            for c in corner_uids(&u, a, b) {
                prop_assert!(uid_nested(&u, t, c));
            }
        }
    }

    #[test]
    fn good_sets_and_canonical_sets_on_profiles(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        let ps = naive_profiles(&s);
        let c = construction_41(&s, &ps, limits()).unwrap();
        prop_assert!(c.records().all(|r| close(&s, r.s_p, &c.profiles[r.profile])));
        let g = good_nested_set(&s, &ps).unwrap();
        for &x in g.nested.seps() {
            prop_assert!(septangle::refine::good(&s, x, &ps).is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, .. ProptestConfig::default() })]

    #[test]
    fn closeness_passes_down(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        for p in naive_profiles(&s) {
            for &x in p.seps() {
                if !close(&s, x, &p) {
                    continue;
                }
                for r in s.oriented().filter(|&r| s.leq(r, x)) {
                    let below_ok = s.oriented().filter(|&u| s.leq(u, x)).all(|u| s.meet(r, u).is_some());
                    if below_ok {
                        prop_assert!(close(&s, r, &p), "{} below {}", s.label(r), s.label(x));
                    }
                }
            }
        }
    }

    #[test]
    fn infima_of_close_separations(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        let ps = naive_profiles(&s);
        let mut r = rng(seed);
        for x in s.oriented() {
            let pool: Vec<Sep> = s
                .oriented()
                .filter(|&m| ps.iter().any(|q| q.contains(x) && close(&s, m, q)))
                .collect();
            if pool.is_empty() {
                continue;
            }
            let size = r.gen_range(1..=pool.len().min(3));
            let m: Vec<Sep> = pool.choose_multiple(&mut r, size).copied().collect();
            let inf = meet_all(&s, x, &m);
            prop_assert!(inf.is_some(), "{} with {:?}", s.label(x), s.labels(&m));
            for p in ps.iter().filter(|p| close(&s, x, p)) {
                prop_assert!(close(&s, inf.unwrap(), p));
            }
        }
    }

    #[test]
    fn maximal_members_nested_with_close_inverses(seed in any::<u64>()) {
        let Some(s) = system(seed) else { return Ok(()) };
        let ps = naive_profiles(&s);
        let mut r = rng(seed);
        for p in &ps {
            let mut pool: Vec<Sep> = p
                .seps()
                .iter()
                .copied()
                .filter(|&y| find_close_witness(&s, s.inv(y), &ps).is_some())
                .collect();
            pool.shuffle(&mut r);
            let mut y: Vec<Sep> = Vec::new();
            for c in pool {
                if y.iter().all(|&d| s.nested(c, d)) && r.gen_bool(0.6) {
                    y.push(c);
                }
            }
            let py: Vec<Sep> = p.seps().iter().copied().filter(|&x| y.iter().all(|&d| s.nested(x, d))).collect();
            for x in maximal_elements(&s, &py) {
                prop_assert!(close(&s, x, p));
            }
        }
    }
}

/// Efficient distinction implies closeness on both sides, on graphs with at
/// most seven vertices and `k <= 3`.
#[test]
fn efficient_distinguishers_are_close() {
    let mut checked = 0;
    for seed in 0..60u64 {
        let mut r = rng(seed);
        let n = r.gen_range(3..=7);
        let g = random_graph(&mut r, n, 0.55).unwrap();
        for k in 1..=3 {
            let s = build_sk(&g, k).unwrap();
            let f = tk_star(&s).unwrap();
            let ts = enumerate_tangles(&s, &f, limits()).unwrap();
            let u = graph_of(&s).unwrap();
            for p in &ts {
                for q in ts.iter().filter(|q| *q != p) {
                    for &x in p.seps() {
                        if distinguishes_efficiently(&s, u, x, p, q).unwrap() {
                            assert!(close(&s, x, p) && close(&s, s.inv(x), q), "seed {seed} k {k}: {}", s.label(x));
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 0);
}

/// Well versus efficiently: counterexamples in either direction are
/// reported, not failed on.
#[test]
fn well_versus_efficiently_report() {
    let (mut agree, mut well_only, mut eff_only) = (0, 0, 0);
    for seed in 0..40u64 {
        let mut r = rng(seed);
        let n = r.gen_range(3..=7);
        let g = random_graph(&mut r, n, 0.55).unwrap();
        for k in 2..=3 {
            let s = build_sk(&g, k).unwrap();
            let ps = naive_tangles(&s, &profile_family(&s)).into_iter().filter(|p| is_regular(&s, p)).collect::<Vec<_>>();
            let u = graph_of(&s).unwrap();
            for p in &ps {
                for q in ps.iter().filter(|q| *q != p) {
                    for &x in p.seps().iter().filter(|&&x| q.contains(s.inv(x))) {
                        let w = distinguishes_well(&s, x, p, q);
                        let e = distinguishes_efficiently(&s, u, x, p, q).unwrap();
                        match (w, e) {
                            (true, false) => well_only += 1,
                            (false, true) => eff_only += 1,
                            _ => agree += 1,
                        }
                    }
                }
            }
        }
    }
    println!("well/efficient agree {agree}, well only {well_only}, efficient only {eff_only}");
    assert!(agree > 0);
}

#[test]
fn corners_in_u4() {
    let s = u4();
    let u = s.universe();
    let all = u.elements().unwrap();
    for &a in &all {
        for &b in &all {
            if uid_nested(u.as_ref(), a, b) {
                continue;
            }
            for &t in all.iter().filter(|&&t| uid_nested(u.as_ref(), t, a) && uid_nested(u.as_ref(), t, b)) {
                for c in corner_uids(u.as_ref(), a, b) {
                    assert!(uid_nested(u.as_ref(), t, c));
                }
            }
        }
    }
}
