#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use septangle::io::{load_instance, Instance};
use septangle::orient::{is_profile, Limits};
use septangle::{BipartitionUniverse, Orientation, Sep, SeparationSystem, StarFamily};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(name: &str, k: Option<usize>) -> Instance {
    load_instance(&fixture(name), k).unwrap()
}

pub fn u4() -> SeparationSystem {
    let u = BipartitionUniverse::new(["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect()).unwrap();
    SeparationSystem::whole_universe(Arc::new(u)).unwrap()
}

/// Every separation of a bipartition system oriented away from the point
/// with mask `bit`.
pub fn principal(s: &SeparationSystem, bit: u64) -> Orientation {
    Orientation::new(s.frame().len(), s.oriented().filter(|&x| s.uid(x) & bit == 0))
}

pub fn limits() -> Limits {
    Limits::default()
}

/// Plain backtracking over separations in id order. A partial orientation
/// is abandoned once it is inconsistent or contains a star of `f` whose
/// separations are all decided. Shares no code with the library search.
pub fn naive_tangles(s: &SeparationSystem, f: &StarFamily) -> Vec<Orientation> {
    let keys: Vec<Sep> = s.unoriented();
    let pos = |x: Sep| keys.iter().position(|&k| k == s.key(x)).unwrap();
    let mut due: Vec<Vec<&Vec<Sep>>> = vec![Vec::new(); keys.len()];
    for star in f.sets() {
        if star.is_empty() {
            return Vec::new();
        }
        let last = star.iter().map(|&x| pos(x)).max().unwrap();
        due[last].push(star);
    }
    let mut chosen: Vec<Sep> = Vec::new();
    let mut out = Vec::new();
    fn go(
        s: &SeparationSystem,
        keys: &[Sep],
        due: &[Vec<&Vec<Sep>>],
        chosen: &mut Vec<Sep>,
        out: &mut Vec<Orientation>,
    ) {
        let i = chosen.len();
        if i == keys.len() {
            out.push(Orientation::new(s.frame().len(), chosen.iter().copied()));
            return;
        }
        let options: Vec<Sep> = if s.is_degenerate(keys[i]) {
            vec![keys[i]]
        } else {
            vec![keys[i], s.inv(keys[i])]
        };
        for x in options {
            let clash = chosen.iter().any(|&y| s.lt(s.inv(x), y) || s.lt(s.inv(y), x));
            if clash {
                continue;
            }
            chosen.push(x);
            let hit = due[i].iter().any(|star| star.iter().all(|m| chosen.contains(m)));
            if !hit {
                go(s, keys, due, chosen, out);
            }
            chosen.pop();
        }
    }
    go(s, &keys, &due, &mut chosen, &mut out);
    out.sort();
    out
}

/// All profiles, by filtering consistent orientations.
pub fn naive_profiles(s: &SeparationSystem) -> Vec<Orientation> {
    naive_tangles(s, &StarFamily::empty())
        .into_iter()
        .filter(|o| is_profile(s, o).is_ok())
        .collect()
}

/// Sorted unoriented labels as a JSON string.
pub fn canonical_json(s: &SeparationSystem, seps: &[Sep]) -> String {
    let mut labels: Vec<String> = seps.iter().map(|&x| s.label(s.key(x))).collect();
    labels.sort();
    serde_json::to_string(&labels).unwrap()
}
