//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use rand::Rng;

use septangle::canonical::{check_canonicity, construction_41, good_nested_set, refined_canonical, Builder, Canonical};
use septangle::duality::{check_closed_under_shifting, check_separable, duality_decide, Duality, DualityOptions};
use septangle::gen::{random_graph, random_instance, random_submodular, rng, symmetric_graph};
use septangle::graphsep::{automorphisms, build_sk, graph_of, graph_tangles, induced_isomorphism, tk_star, Graph};
use septangle::orient::{distinguishes_efficiently, distinguishes_set, maximal_elements, oracle_tangles};
use septangle::refine::{closely_related, find_close_witness, good};
use septangle::system::{corner_uids, uid_nested};
use septangle::trees::{essential_nodes, nodes_of, stree_validate, NestedSet};
use septangle::{Orientation, Sep, SeparationSystem, StarFamily, Universe};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(s: &SeparationSystem, x: Sep, p: &Orientation) -> bool {
    closely_related(s, x, p).is_ok()
}

fn random_system(seed: u64) -> SeparationSystem {
    let mut r = rng(seed);
    let n = r.gen_range(3..=5);
    let start = r.gen_range(2..=6);
    random_submodular(&mut r, n, start, 10).expect("small system")
}

/// Checks the closeness and home-node properties of a finished
/// construction, and that inverses in inessential nodes are close.
fn recheck_construction(s: &SeparationSystem, c: &Canonical) -> Result<usize, String> {
    ensure(distinguishes_set(s, c.nested.seps(), &c.profiles).is_ok(), || "not distinguishing".into())?;
    let nodes = nodes_of(s, &c.nested, limits()).map_err(|e| e.to_string())?;
    for r in c.records() {
        let p = &c.profiles[r.profile];
        ensure(close(s, r.s_p, p), || format!("{} not close to its profile", s.label(r.s_p)))?;
        let node = nodes.iter().find(|n| n.contains(&r.s_p)).ok_or("s_P in no node")?;
        ensure(p.contains_all(node), || format!("profile does not live at the node of {}", s.label(r.s_p)))?;
    }
    let homes = essential_nodes(&nodes, &c.profiles);
    let mut inessential = 0;
    for (node, home) in nodes.iter().zip(homes) {
        if home.is_none() {
            inessential += 1;
            for &x in node {
                ensure(find_close_witness(s, s.inv(x), &c.profiles).is_some(), || {
                    format!("inverse of {} is close to no profile", s.label(x))
                })?;
            }
        }
    }
    Ok(inessential)
}

fn recheck_good(s: &SeparationSystem, ps: &[Orientation]) -> Result<(), String> {
    let g = good_nested_set(s, ps).map_err(|e| e.to_string())?;
    ensure(s.is_nested_set(g.nested.seps()).is_ok(), || "good set is not nested".into())?;
    ensure(distinguishes_set(s, g.nested.seps(), ps).is_ok(), || "good set does not distinguish".into())?;
    ensure(g.nested.seps().iter().all(|&x| good(s, x, ps).is_some()), || "a separation is not good".into())
}

/// Every node of `n` is a star of `f` or contains a tangle of `ts`.
fn every_node_accounted(s: &SeparationSystem, n: &NestedSet, f: &StarFamily, ts: &[Orientation]) -> Result<(), String> {
    for node in nodes_of(s, n, limits()).map_err(|e| e.to_string())? {
        let mut sorted = node.clone();
        sorted.sort_unstable();
        let in_f = f.contains(&sorted);
        let home = ts.iter().any(|t| t.contains_all(&node));
        ensure(in_f || home, || format!("node {:?} is neither in F nor a tangle home", s.labels(&node)))?;
    }
    Ok(())
}

fn tripod() -> Graph {
    septangle::io::load_instance(&fixture("tripod.txt"), Some(3))
        .unwrap()
        .graph()
        .unwrap()
        .clone()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (s, f, ts) = graph_tangles(&tripod(), 3, limits()).map_err(|e| e.to_string())?;
    ensure(ts.len() == 3, || format!("{} tangles", ts.len()))?;
    let oracle = naive_tangles(&s, &f);
    ensure(oracle == ts, || format!("oracle finds {} tangles", oracle.len()))?;
    let c = construction_41(&s, &ts, limits()).map_err(|e| e.to_string())?;
    ensure(distinguishes_set(&s, c.nested.seps(), &ts).is_ok(), || "canonical set misses a pair".into())?;
    let r = refined_canonical(&s, &f, limits()).map_err(|e| e.to_string())?;
    every_node_accounted(&s, &r.refinement.refined, &f, &r.tangles)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{} separations, 3 tangles (oracle agrees), |N~| = {}, |N| = {}, {:.1}s",
        s.len_unoriented(),
        c.nested.len(),
        r.refinement.refined.len(),
        secs
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (mut tangles, mut trees) = (0, 0);
    for seed in 0..240u64 {
        let (s, f, _) = random_instance(seed, 10).map_err(|e| e.to_string())?;
        ensure(check_closed_under_shifting(&s, &f).is_ok(), || format!("seed {seed}: family not shift-closed"))?;
        let oracle = oracle_tangles(&s, &f).map_err(|e| e.to_string())?;
        match duality_decide(&s, &f, DualityOptions::default()).map_err(|e| format!("seed {seed}: {e}"))? {
            Duality::Tangle(t) => {
                ensure(oracle.contains(&t), || format!("seed {seed}: tangle not confirmed by oracle"))?;
                tangles += 1;
            }
            Duality::Tree(t) => {
                ensure(oracle.is_empty(), || format!("seed {seed}: tree returned but oracle finds tangles"))?;
                let rep = stree_validate(&s, &t, Some(&f));
                ensure(rep.is_stree && rep.over_f == Some(true), || format!("seed {seed}: tree fails validation"))?;
                trees += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1}s"))?;
    Ok(format!("240 instances: {tangles} tangle, {trees} tree, all agree with the oracle, {secs:.1}s"))
}

fn corners_exhaustive(u: &dyn Universe, all: &[u64]) -> Result<usize, String> {
    let mut checked = 0;
    for (i, &a) in all.iter().enumerate() {
        for &b in &all[i + 1..] {
            if uid_nested(u, a, b) {
                continue;
            }
            let corners = corner_uids(u, a, b);
            for &t in all.iter().filter(|&&t| uid_nested(u, t, a) && uid_nested(u, t, b)) {
                checked += 1;
                ensure(corners.iter().all(|&c| uid_nested(u, t, c)), || {
                    format!("{} nested with {} and {} but not their corners", u.label(t), u.label(a), u.label(b))
                })?;
            }
        }
    }
    Ok(checked)
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();

    let s = u4();
    let mut corners = corners_exhaustive(s.universe().as_ref(), &s.universe().elements().unwrap())?;
    for seed in 0..20u64 {
        let g = random_graph(&mut rng(seed), 3 + (seed as usize % 4), 0.5).map_err(|e| e.to_string())?;
        let u = septangle::graphsep::GraphUniverse::new(g);
        corners += corners_exhaustive(&u, &u.elements().unwrap())?;
    }
    notes.push(format!("corners {corners}"));

    let mut maximal = 0;
    for seed in 0..200u64 {
        let s = random_system(seed);
        for p in naive_profiles(&s) {
            for x in maximal_elements(&s, p.seps()) {
                maximal += 1;
                ensure(close(&s, x, &p), || format!("seed {seed}: maximal {} not close", s.label(x)))?;
            }
        }
    }
    notes.push(format!("maximal {maximal}"));

    let (mut down, mut inf, mut nested_max) = (0, 0, 0);
    for seed in 1000..1500u64 {
        let s = random_system(seed);
        let ps = naive_profiles(&s);
        let mut r = rng(seed);
        for p in &ps {
            for &x in p.seps().iter().filter(|&&x| close(&s, x, p)) {
                for y in s.oriented().filter(|&y| s.leq(y, x)) {
                    if s.oriented().filter(|&u| s.leq(u, x)).all(|u| s.meet(y, u).is_some()) {
                        down += 1;
                        ensure(close(&s, y, p), || format!("seed {seed}: closeness does not pass down"))?;
                    }
                }
            }
        }
        for x in s.oriented() {
            let pool: Vec<Sep> = s.oriented().filter(|&m| ps.iter().any(|q| q.contains(x) && close(&s, m, q))).collect();
            if pool.is_empty() {
                continue;
            }
            let m: Vec<Sep> = pool.iter().copied().filter(|_| r.gen_bool(0.5)).collect();
            let uid = m.iter().fold(s.uid(x), |acc, &y| s.universe().meet(acc, s.uid(y)));
            inf += 1;
            let got = s.sep_of(uid).ok_or_else(|| format!("seed {seed}: infimum leaves S"))?;
            for p in ps.iter().filter(|p| close(&s, x, p)) {
                ensure(close(&s, got, p), || format!("seed {seed}: infimum not close"))?;
            }
        }
        for p in &ps {
            let mut y: Vec<Sep> = Vec::new();
            for &c in p.seps() {
                if find_close_witness(&s, s.inv(c), &ps).is_some() && y.iter().all(|&d| s.nested(c, d)) && r.gen_bool(0.5) {
                    y.push(c);
                }
            }
            let py: Vec<Sep> = p.seps().iter().copied().filter(|&x| y.iter().all(|&d| s.nested(x, d))).collect();
            for x in maximal_elements(&s, &py) {
                nested_max += 1;
                ensure(close(&s, x, p), || format!("seed {seed}: maximal nested member not close"))?;
            }
        }
    }
    notes.push(format!("down {down}, infima {inf}, nested-maximal {nested_max} over 500 trials"));

    let mut efficient = 0;
    for seed in 0..60u64 {
        let mut r = rng(seed);
        let n = r.gen_range(3..=7);
        let g = random_graph(&mut r, n, 0.55).map_err(|e| e.to_string())?;
        for k in 1..=3 {
            let s = build_sk(&g, k).map_err(|e| e.to_string())?;
            let f = tk_star(&s).map_err(|e| e.to_string())?;
            let ts = septangle::orient::enumerate_tangles(&s, &f, limits()).map_err(|e| e.to_string())?;
            let u = graph_of(&s).map_err(|e| e.to_string())?;
            for p in &ts {
                for q in ts.iter().filter(|q| *q != p) {
                    for &x in p.seps() {
                        if distinguishes_efficiently(&s, u, x, p, q).map_err(|e| e.to_string())? {
                            efficient += 1;
                            ensure(close(&s, x, p) && close(&s, s.inv(x), q), || {
                                format!("graph seed {seed}, k {k}: {} not close on both sides", s.label(x))
                            })?;
                        }
                    }
                }
            }
        }
    }
    notes.push(format!("efficient {efficient} on 60 graphs"));

    let mut good_runs = 0;
    for seed in 0..200u64 {
        let s = random_system(seed);
        ensure(check_separable(&s).is_ok(), || format!("seed {seed}: not separable"))?;
        let ps = naive_profiles(&s);
        good_nested_set(&s, &ps).map_err(|e| format!("seed {seed}: {e}"))?;
        good_runs += 1;
    }
    notes.push(format!("separable and good-set runs {good_runs}"));
    Ok(notes.join("; "))
}

fn criterion_4() -> Outcome {
    let mut corpus: Vec<(String, SeparationSystem, Vec<Orientation>)> = Vec::new();
    let s = u4();
    let ps = naive_profiles(&s);
    corpus.push(("u4".into(), s, ps));
    for (name, k) in [("tripod.txt", 3), ("c5.txt", 2), ("k6.txt", 3), ("p3.txt", 2)] {
        let inst = load(name, Some(k));
        let f = tk_star(&inst.system).map_err(|e| e.to_string())?;
        let ts = septangle::orient::enumerate_tangles(&inst.system, &f, limits()).map_err(|e| e.to_string())?;
        corpus.push((name.into(), inst.system, ts));
    }
    for seed in 0..150u64 {
        let s = random_system(seed);
        let ps = naive_profiles(&s);
        corpus.push((format!("system {seed}"), s, ps));
    }
    for seed in 0..30u64 {
        let mut r = rng(seed);
        let n = r.gen_range(4..=7);
        let g = random_graph(&mut r, n, 0.5).map_err(|e| e.to_string())?;
        let (s, _, ts) = graph_tangles(&g, 2 + seed as usize % 2, limits()).map_err(|e| e.to_string())?;
        corpus.push((format!("graph {seed}"), s, ts));
    }
    let mut max_inessential = 0;
    for (name, s, ps) in &corpus {
        let c = construction_41(s, ps, limits()).map_err(|e| format!("{name}: {e}"))?;
        max_inessential = max_inessential.max(recheck_construction(s, &c).map_err(|e| format!("{name}: {e}"))?);
        recheck_good(s, ps).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("{} instances, max inessential nodes {max_inessential}", corpus.len()))
}

fn clique_swap(g: &Graph, a: usize, b: usize) -> Vec<usize> {
    let names = g.names();
    let index = |n: &str| names.iter().position(|m| m == n).unwrap();
    (0..g.len())
        .map(|v| {
            let n = &names[v];
            let swapped = if let Some(rest) = n.strip_prefix(&format!("k{a}_")) {
                format!("k{b}_{rest}")
            } else if let Some(rest) = n.strip_prefix(&format!("k{b}_")) {
                format!("k{a}_{rest}")
            } else {
                n.clone()
            };
            index(&swapped)
        })
        .collect()
}

fn wide() -> septangle::Limits {
    septangle::Limits { max_seps: 4096, ..limits() }
}

fn canonical_orbit(s: &SeparationSystem, ts: &[Orientation], perm: &[usize]) -> Result<(), String> {
    let phi = induced_isomorphism(s, perm).map_err(|e| e.to_string())?;
    let mapped: Vec<Orientation> = ts.iter().map(|t| phi.map_orientation(s, t)).collect();
    for (builder, build) in [
        (Builder::Construction41, 0),
        (Builder::GoodNested, 1),
    ] {
        let ok = check_canonicity(builder, s, s, &phi, ts, wide()).map_err(|e| e.to_string())?;
        ensure(ok, || format!("{builder:?} is not invariant"))?;
        let (a, b) = if build == 0 {
            (
                construction_41(s, ts, wide()).map_err(|e| e.to_string())?.nested,
                construction_41(s, &mapped, wide()).map_err(|e| e.to_string())?.nested,
            )
        } else {
            (
                good_nested_set(s, ts).map_err(|e| e.to_string())?.nested,
                good_nested_set(s, &mapped).map_err(|e| e.to_string())?.nested,
            )
        };
        let image: Vec<Sep> = a.seps().iter().map(|&x| phi.apply(x)).collect();
        ensure(canonical_json(s, &image) == canonical_json(s, b.seps()), || {
            format!("{builder:?}: serializations differ")
        })?;
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let g = tripod();
    let (s, _, ts) = graph_tangles(&g, 3, wide()).map_err(|e| e.to_string())?;
    let swaps = [clique_swap(&g, 0, 1), clique_swap(&g, 1, 2), clique_swap(&g, 0, 2)];
    for p in &swaps {
        canonical_orbit(&s, &ts, p).map_err(|e| format!("tripod: {e}"))?;
    }
    let mut r = rng(5);
    let (mut instances, mut maps) = (0, 0);
    while instances < 24 {
        let g = symmetric_graph(&mut r).map_err(|e| e.to_string())?;
        let k = r.gen_range(2..=3);
        let (s, _, ts) = graph_tangles(&g, k, wide()).map_err(|e| e.to_string())?;
        for perm in automorphisms(&g, 12).into_iter().skip(1) {
            canonical_orbit(&s, &ts, &perm).map_err(|e| format!("instance {instances}: {e}"))?;
            maps += 1;
        }
        instances += 1;
    }
    Ok(format!("tripod: 3 clique swaps; {instances} symmetric graphs, {maps} automorphisms"))
}

fn criterion_6() -> Outcome {
    let mut reports = Vec::new();
    let mut check = |name: String, s: &SeparationSystem, f: &StarFamily| -> Result<bool, String> {
        let r = match refined_canonical(s, f, limits()) {
            Ok(r) => r,
            Err(septangle::Error::Domain(_)) => return Ok(false),
            Err(e) => return Err(format!("{name}: {e}")),
        };
        ensure(r.refinement.refined.is_superset_of(&r.canonical.nested), || format!("{name}: N does not contain N~"))?;
        ensure(s.is_nested_set(r.refinement.refined.seps()).is_ok(), || format!("{name}: N is not nested"))?;
        every_node_accounted(s, &r.refinement.refined, f, &r.tangles).map_err(|e| format!("{name}: {e}"))?;
        reports.push((r.inessential_in_canonical, r.refinement.refined.len() - r.canonical.nested.len()));
        Ok(true)
    };
    let inst = load("tripod.txt", Some(3));
    let f = tk_star(&inst.system).map_err(|e| e.to_string())?;
    ensure(check("tripod".into(), &inst.system, &f)?, || "tripod family is not friendly".into())?;
    let mut friendly = 1;
    for seed in 0..300u64 {
        let (s, f, _) = random_instance(seed, 10).map_err(|e| e.to_string())?;
        friendly += check(format!("system {seed}"), &s, &f)? as usize;
    }
    for seed in 0..40u64 {
        let mut r = rng(seed);
        let n = r.gen_range(4..=7);
        let g = random_graph(&mut r, n, 0.5).map_err(|e| e.to_string())?;
        let s = build_sk(&g, 2 + seed as usize % 2).map_err(|e| e.to_string())?;
        let f = tk_star(&s).map_err(|e| e.to_string())?;
        friendly += check(format!("graph {seed}"), &s, &f)? as usize;
    }
    let over_one = reports.iter().filter(|r| r.0 > 1).count();
    let grew = reports.iter().filter(|r| r.1 > 0).count();
    Ok(format!(
        "{friendly} friendly instances refined; {grew} needed new separations; inessential nodes in N~: max {}, {over_one} instances above one",
        reports.iter().map(|r| r.0).max().unwrap_or(0)
    ))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_septangle")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_7() -> Outcome {
    let dir = std::env::temp_dir().join(format!("septangle-acceptance-{}", std::process::id()));
    let mut inputs: Vec<(String, Option<&str>)> = vec![
        (fixture("tripod.txt").display().to_string(), Some("3")),
        (fixture("c5.txt").display().to_string(), Some("2")),
        (fixture("p3.txt").display().to_string(), Some("2")),
        (fixture("u4.json").display().to_string(), None),
    ];
    for seed in 0..4u64 {
        let out = dir.join(format!("g{seed}"));
        let (code, _) = run_cli(&["gen", "--seed", &seed.to_string(), "--out", out.to_str().unwrap()]);
        ensure(code == 0, || "gen failed".into())?;
        inputs.push((out.join("instance.json").display().to_string(), None));
    }
    let mut runs = 0;
    for (path, k) in &inputs {
        let family_file = Path::new(path).with_file_name("family.json");
        let family = family_file.exists().then(|| format!("file:{}", family_file.display()));
        for cmd in [
            vec!["tangles"],
            vec!["tree-of-tangles", "--trace"],
            vec!["tree-of-tangles", "--refine"],
            vec!["tree-of-tangles", "--good"],
            vec!["duality"],
            vec!["check"],
        ] {
            let mut base: Vec<String> = cmd.iter().map(|s| s.to_string()).collect();
            base.push(path.clone());
            if let Some(k) = k {
                base.extend(["--k".into(), k.to_string()]);
            }
            if let Some(f) = &family {
                base.extend(["--family".into(), f.clone()]);
            }
            let mut outputs = Vec::new();
            for jobs in ["1", "4", "1"] {
                let mut args = base.clone();
                args.extend(["--jobs".into(), jobs.into()]);
                let refs: Vec<&str> = args.iter().map(String::as_str).collect();
                outputs.push(run_cli(&refs));
                runs += 1;
            }
            ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{} differs across runs", base.join(" ")))?;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} inputs, {runs} runs, byte-identical across repeats and --jobs 1/4", inputs.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("three glued cliques", criterion_1),
        ("duality dichotomy", criterion_2),
        ("structural properties", criterion_3),
        ("construction post-checks", criterion_4),
        ("canonicity orbits", criterion_5),
        ("refinement end-to-end", criterion_6),
        ("determinism", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} [PASS] {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [FAIL] {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
