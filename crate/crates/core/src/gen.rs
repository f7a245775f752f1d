//! Seeded random instances.
//!
//! Systems are sets of bipartitions of a small ground set, closed up to
//! structural submodularity. Star families are "cover" families: stars of
//! bounded size whose first sides cover a fixed target set, plus
//! singletons whose first side contains one of a few seed sets. Both kinds
//! of condition survive shifting, so the families are closed under
//! shifting and standard by construction.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graphsep::Graph;
use crate::orient::{is_star, StarFamily};
use crate::system::{Frame, Sep, SeparationSystem};
use crate::universe::{BipartitionUniverse, Universe};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn points(n: usize) -> Vec<String> {
    (0..n).map(|i| char::from(b'a' + i as u8).to_string()).collect()
}

/// A structurally submodular set of at most `max_seps` bipartitions of a
/// ground set of `n` points, grown from `start` random separations.
pub fn random_submodular<R: Rng>(rng: &mut R, n: usize, start: usize, max_seps: usize) -> Result<SeparationSystem> {
    if !(2..=8).contains(&n) {
        return Err(Error::input("ground set size must be between 2 and 8"));
    }
    let u = Arc::new(BipartitionUniverse::new(points(n))?);
    let all = u.elements().expect("small universe");
    let frame = Frame::new(u.clone(), &all)?;
    let keys: Vec<Sep> = (0..frame.len()).filter(|&x| x < frame.inv(x)).collect();
    for _ in 0..64 {
        let mut chosen: Vec<Sep> = keys.choose_multiple(rng, start.min(keys.len())).copied().collect();
        loop {
            let s = SeparationSystem::from_seps(frame.clone(), &chosen);
            match s.is_submodular() {
                Ok(()) => break,
                Err((a, b)) => {
                    let m = frame.meet(a, b).expect("lattice");
                    let j = frame.join(a, b).expect("lattice");
                    chosen.push(if rng.gen_bool(0.5) { m } else { j });
                }
            }
        }
        let s = SeparationSystem::from_seps(frame.clone(), &chosen);
        if s.len_unoriented() <= max_seps {
            return Ok(s);
        }
    }
    Err(Error::resource("could not grow a small submodular system"))
}

/// All stars in `s` with at most `max_size` members.
pub fn stars_of(s: &SeparationSystem, max_size: usize) -> Vec<Vec<Sep>> {
    fn go(s: &SeparationSystem, seps: &[Sep], from: usize, cur: &mut Vec<Sep>, max: usize, out: &mut Vec<Vec<Sep>>) {
        out.push(cur.clone());
        if cur.len() == max {
            return;
        }
        for i in from..seps.len() {
            cur.push(seps[i]);
            if is_star(s, cur) {
                go(s, seps, i + 1, cur, max, out);
            }
            cur.pop();
        }
    }
    let seps = s.oriented_vec();
    let mut out = Vec::new();
    go(s, &seps, 0, &mut Vec::new(), max_size, &mut out);
    out.remove(0);
    out
}

/// Parameters of a cover family over a bipartition system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverSpec {
    /// Points that the first sides of a star must cover.
    pub target: u64,
    pub max_size: usize,
    /// A singleton `{x}` is included when the first side of `x` contains
    /// one of these sets.
    pub seeds: Vec<u64>,
}

pub fn cover_family(s: &SeparationSystem, spec: &CoverSpec) -> StarFamily {
    let cover = |star: &[Sep]| star.iter().fold(0, |acc, &x| acc | s.uid(x)) & spec.target == spec.target;
    let mut sets: Vec<Vec<Sep>> = stars_of(s, spec.max_size).into_iter().filter(|st| cover(st)).collect();
    sets.extend(
        s.oriented()
            .filter(|&x| spec.seeds.iter().any(|&m| s.uid(x) & m == m))
            .map(|x| vec![x]),
    );
    let singles: Vec<Sep> = s
        .oriented()
        .filter(|&x| s.is_trivial(x) || (s.is_small(x) && !s.is_degenerate(x)))
        .map(|x| s.inv(x))
        .collect();
    StarFamily::new(sets).with_singletons(singles)
}

pub fn random_cover_spec<R: Rng>(rng: &mut R, n: usize) -> CoverSpec {
    let size = rng.gen_range(2.min(n)..=n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let target = order[..size].iter().fold(0u64, |acc, &i| acc | 1 << i);
    let seeds = (0..rng.gen_range(0..=3))
        .map(|_| {
            let mut m = 0u64;
            let want = rng.gen_range(1..=2);
            while m.count_ones() < want {
                m |= 1 << rng.gen_range(0..n);
            }
            m
        })
        .collect();
    CoverSpec {
        target,
        max_size: rng.gen_range(1..=3),
        seeds,
    }
}

/// A random system with at most `max_seps` separations and a cover family.
pub fn random_instance(seed: u64, max_seps: usize) -> Result<(SeparationSystem, StarFamily, CoverSpec)> {
    let mut r = rng(seed);
    let n = r.gen_range(3..=5);
    let start = r.gen_range(2..=5);
    let s = random_submodular(&mut r, n, start, max_seps)?;
    let spec = random_cover_spec(&mut r, n);
    let f = cover_family(&s, &spec);
    Ok((s, f, spec))
}

/// `G(n, p)` with vertices `v0..`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Result<Graph> {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    Graph::new((0..n).map(|i| format!("v{i}")).collect(), &edges)
}

/// Copies of a random connected graph glued at one vertex, so that every
/// permutation of the copies is an automorphism.
pub fn symmetric_graph<R: Rng>(rng: &mut R) -> Result<Graph> {
    let size = rng.gen_range(3..=5);
    let copies = rng.gen_range(2..=3);
    let base = loop {
        let g = random_graph(rng, size, 0.7)?;
        if g.components(g.full()).len() == 1 {
            break g;
        }
    };
    let mut names = vec!["h".to_string()];
    let mut edges = Vec::new();
    for c in 0..copies {
        let offset = names.len();
        names.extend((1..size).map(|i| format!("c{c}_{i}")));
        let at = |v: usize| if v == 0 { 0 } else { offset + v - 1 };
        edges.extend(base.edges().into_iter().map(|(u, v)| (at(u), at(v))));
    }
    Graph::new(names, &edges)
}
