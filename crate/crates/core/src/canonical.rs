//! The canonical tree of tangles, its refinement, and a canonical nested
//! set of good separations.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::duality::check_closed_under_shifting;
use crate::error::{Error, Result};
use crate::orient::{
    check_star_family, distinguishes_set, enumerate_tangles, FamilyReport, Limits, Orientation, StarFamily,
};
use crate::refine::{
    closely_related, distinguishes_well, find_close_witness, guarded_inf, refine_treeset, CloseWitness, RefineContext,
    Refinement,
};
use crate::system::{Sep, SeparationSystem};
use crate::trees::{essential_nodes, nodes_of, NestedSet};

/// Number of profiles in `ps` containing `x`.
fn holders(x: Sep, ps: &[&Orientation]) -> usize {
    ps.iter().filter(|p| p.contains(x)).count()
}

/// `x` lies in exactly one profile of `ps`.
pub fn exclusive(x: Sep, ps: &[Orientation]) -> bool {
    ps.iter().filter(|p| p.contains(x)).count() == 1
}

/// `M_{P,i}`: members of `si` that are `P`-exclusive for `remaining` and
/// maximal in `P ∩ S⃗_i`.
pub fn maximal_exclusive(si: &SeparationSystem, p: &Orientation, remaining: &[&Orientation]) -> Vec<Sep> {
    let inside: Vec<Sep> = p.seps().iter().copied().filter(|&x| si.contains(x)).collect();
    inside
        .iter()
        .copied()
        .filter(|&x| holders(x, remaining) == 1)
        .filter(|&x| !inside.iter().any(|&y| si.lt(x, y)))
        .collect()
}

fn check_profiles(s: &SeparationSystem, ps: &[Orientation]) -> Result<Vec<Orientation>> {
    let mut sorted = ps.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::input("duplicate profiles cannot be distinguished"));
    }
    for p in &sorted {
        if !p.is_orientation_of(s) {
            return Err(Error::input("a profile does not orient the whole system"));
        }
        if let Err(v) = crate::orient::is_profile(s, p) {
            return Err(Error::input(format!("not a profile: {v:?}")));
        }
    }
    Ok(sorted)
}

fn check_submodular(s: &SeparationSystem) -> Result<()> {
    s.is_submodular().map_err(|(a, b)| {
        Error::input(format!("system is not submodular at {} and {}", s.label(a), s.label(b)))
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExclusiveRecord {
    /// Index into the sorted profile list.
    pub profile: usize,
    pub m_set: Vec<Sep>,
    pub s_p: Sep,
    pub round: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    pub round: usize,
    pub records: Vec<ExclusiveRecord>,
    pub nested: Vec<Sep>,
    /// Unoriented size of `S_i`.
    pub system_size: usize,
}

#[derive(Clone, Debug)]
pub struct Canonical {
    pub nested: NestedSet,
    /// The input profiles in canonical order.
    pub profiles: Vec<Orientation>,
    pub rounds: Vec<RoundTrace>,
}

impl Canonical {
    pub fn records(&self) -> impl Iterator<Item = &ExclusiveRecord> {
        self.rounds.iter().flat_map(|r| r.records.iter())
    }

    pub fn trace_json(&self, s: &SeparationSystem) -> Value {
        let rounds: Vec<Value> = self
            .rounds
            .iter()
            .map(|r| {
                json!({
                    "round": r.round,
                    "system_size": r.system_size,
                    "nested": s.labels(&r.nested),
                    "records": r.records.iter().map(|x| json!({
                        "profile": x.profile,
                        "m_set": s.labels(&x.m_set),
                        "s_p": s.label(x.s_p),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "rounds": rounds, "nested": self.nested.labels(s) })
    }
}

/// The canonical nested set distinguishing `profiles`, built round by
/// round from infima of maximal exclusive separations, with the closeness
/// and home-node properties of its separations checked on the result.
pub fn construction_41(s: &SeparationSystem, profiles: &[Orientation], limits: Limits) -> Result<Canonical> {
    check_submodular(s)?;
    let ps = check_profiles(s, profiles)?;
    let mut remaining: Vec<usize> = (0..ps.len()).collect();
    let mut chosen: Vec<Sep> = Vec::new();
    let mut rounds = Vec::new();
    let mut si = s.clone();
    let mut round = 0;
    while remaining.len() > 1 {
        round += 1;
        if round > ps.len() {
            return Err(Error::integrity("construction did not finish within |P| rounds"));
        }
        let rem: Vec<&Orientation> = remaining.iter().map(|&i| &ps[i]).collect();
        let found: Vec<Result<Option<ExclusiveRecord>>> = remaining
            .par_iter()
            .map(|&i| {
                let p = &ps[i];
                let m = maximal_exclusive(&si, p, &rem);
                if m.is_empty() {
                    return Ok(None);
                }
                let rest: Vec<CloseWitness> = m[1..]
                    .iter()
                    .map(|&x| CloseWitness {
                        separation: x,
                        profile: p.clone(),
                    })
                    .collect();
                let s_p = guarded_inf(s, m[0], &rest, None).map_err(|e| {
                    Error::integrity(format!("infimum of the maximal exclusive set failed: {e}"))
                })?;
                if holders(s_p, &rem) != 1 || !p.contains(s_p) {
                    return Err(Error::integrity(format!("{} is not exclusive", s.label(s_p))));
                }
                Ok(Some(ExclusiveRecord {
                    profile: i,
                    m_set: m,
                    s_p,
                    round,
                }))
            })
            .collect();
        let mut records = Vec::new();
        for r in found {
            if let Some(r) = r? {
                records.push(r);
            }
        }
        if records.is_empty() {
            return Err(Error::integrity(format!(
                "round {round} retires no profile while {} remain",
                remaining.len()
            )));
        }
        chosen.extend(records.iter().map(|r| s.key(r.s_p)));
        chosen.sort_unstable();
        chosen.dedup();
        if let Err((a, b)) = s.is_nested_set(&chosen) {
            return Err(Error::integrity(format!(
                "chosen separations {} and {} cross",
                s.label(a),
                s.label(b)
            )));
        }
        let retired: Vec<usize> = records.iter().map(|r| r.profile).collect();
        remaining.retain(|i| !retired.contains(i));
        si = s.restrict_nested(&chosen)?;
        rounds.push(RoundTrace {
            round,
            records,
            nested: chosen.clone(),
            system_size: si.len_unoriented(),
        });
    }
    let nested = NestedSet::new(s, &chosen)?;
    let out = Canonical {
        nested,
        profiles: ps,
        rounds,
    };
    verify_construction(s, &out, limits)?;
    Ok(out)
}

fn verify_construction(s: &SeparationSystem, c: &Canonical, limits: Limits) -> Result<()> {
    if let Err((i, j)) = distinguishes_set(s, c.nested.seps(), &c.profiles) {
        return Err(Error::integrity(format!("profiles {i} and {j} are not distinguished")));
    }
    let nodes = nodes_of(s, &c.nested, limits)?;
    for r in c.records() {
        let p = &c.profiles[r.profile];
        if let Err(w) = closely_related(s, r.s_p, p) {
            return Err(Error::integrity(format!(
                "{} is not closely related to its profile: {w:?}",
                s.label(r.s_p)
            )));
        }
        let home = nodes.iter().find(|n| n.contains(&r.s_p));
        if !home.is_some_and(|n| p.contains_all(n)) {
            return Err(Error::integrity(format!(
                "profile {} does not live at the node containing {}",
                r.profile,
                s.label(r.s_p)
            )));
        }
    }
    for (node, home) in nodes.iter().zip(essential_nodes(&nodes, &c.profiles)) {
        if home.is_some() {
            continue;
        }
        for &x in node {
            if find_close_witness(s, s.inv(x), &c.profiles).is_none() {
                return Err(Error::integrity(format!(
                    "inverse of {} in an inessential node is closely related to no profile",
                    s.label(x)
                )));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RefinedCanonical {
    pub tangles: Vec<Orientation>,
    pub canonical: Canonical,
    pub refinement: Refinement,
    pub family: FamilyReport,
    /// Inessential nodes of the canonical set; at most one is expected.
    pub inessential_in_canonical: usize,
}

/// The canonical nested set of all `F`-tangles and its refinement in which
/// every node is a star in `F` or home to an `F`-tangle.
pub fn refined_canonical(s: &SeparationSystem, f: &StarFamily, limits: Limits) -> Result<RefinedCanonical> {
    check_submodular(s)?;
    let closed = check_closed_under_shifting(s, f);
    let family = check_star_family(f, s, closed.is_ok(), limits)?;
    if !family.friendly {
        let mut why = family.witnesses.clone();
        if let Err(w) = closed {
            why.push(format!(
                "shifting {} onto {} moves {:?} out of F",
                s.label(w.r),
                s.label(w.s),
                s.labels(&w.star)
            ));
        }
        return Err(Error::domain(format!("family is not friendly: {why:?}")));
    }
    let tangles = enumerate_tangles(s, f, limits)?;
    let canonical = construction_41(s, &tangles, limits)?;
    let ctx = RefineContext::new(s, f, &canonical.profiles, limits);
    let refinement = refine_treeset(&ctx, &canonical.nested)?;
    if !refinement.refined.is_superset_of(&canonical.nested) {
        return Err(Error::integrity("refinement dropped a canonical separation"));
    }
    let inessential_in_canonical = refinement.inessential.len();
    Ok(RefinedCanonical {
        tangles: canonical.profiles.clone(),
        canonical,
        refinement,
        family,
        inessential_in_canonical,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoodRecord {
    /// Index into the profile list of the current level.
    pub profile: usize,
    pub e_set: Vec<Sep>,
    pub r_p: Sep,
}

/// The standing hypothesis: every profile orients `m` the same way.
fn agree_on(s: &SeparationSystem, ps: &[&Orientation], m: &[Sep]) -> bool {
    m.iter().all(|&x| {
        let first = ps.first().map(|p| p.contains(x));
        ps.iter().all(|p| Some(p.contains(x)) == first) && (s.contains(x))
    })
}

/// `E_P` inside `S_M` for `ps`, and its unique maximal element. `None`
/// when `E_P` is empty, which is always the case for a single profile.
pub fn e_set(s: &SeparationSystem, sm: &SeparationSystem, p: &Orientation, ps: &[&Orientation]) -> Result<Option<(Vec<Sep>, Sep)>> {
    if ps.len() < 2 {
        return Ok(None);
    }
    let e: Vec<Sep> = p
        .seps()
        .iter()
        .copied()
        .filter(|&x| sm.contains(x) && holders(x, ps) == 1)
        .filter(|&x| {
            ps.iter()
                .any(|q| !std::ptr::eq(*q, p) && *q != p && distinguishes_well(s, x, p, q))
        })
        .collect();
    if e.is_empty() {
        return Ok(None);
    }
    let top: Vec<Sep> = e.iter().copied().filter(|&x| !e.iter().any(|&y| s.lt(x, y))).collect();
    if top.len() != 1 {
        return Err(Error::integrity(format!(
            "E_P has {} maximal elements: {:?}",
            top.len(),
            s.labels(&top)
        )));
    }
    Ok(Some((e, top[0])))
}

#[derive(Clone, Debug)]
pub struct GoodLevel {
    pub records: Vec<GoodRecord>,
    /// Indices of the profiles passed on to the next level.
    pub passed_on: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GoodNested {
    pub nested: NestedSet,
    pub profiles: Vec<Orientation>,
    pub levels: Vec<GoodLevel>,
}

/// A nested set of good separations distinguishing `profiles`, built by
/// taking the maximal exclusive well-distinguishing separation of each
/// profile and recursing on the profiles that have none.
pub fn good_nested_set(s: &SeparationSystem, profiles: &[Orientation]) -> Result<GoodNested> {
    check_submodular(s)?;
    let ps = check_profiles(s, profiles)?;
    let mut m: Vec<Sep> = Vec::new();
    let mut current: Vec<usize> = (0..ps.len()).collect();
    let mut levels = Vec::new();
    while current.len() > 1 {
        let refs: Vec<&Orientation> = current.iter().map(|&i| &ps[i]).collect();
        if !agree_on(s, &refs, &m) {
            return Err(Error::integrity("profiles disagree on the separations chosen so far"));
        }
        let sm = s.restrict_nested(&m)?;
        let found: Vec<Result<Option<GoodRecord>>> = current
            .par_iter()
            .map(|&i| {
                Ok(e_set(s, &sm, &ps[i], &refs)?.map(|(e, r)| GoodRecord {
                    profile: i,
                    e_set: e,
                    r_p: r,
                }))
            })
            .collect();
        let mut records = Vec::new();
        for r in found {
            if let Some(r) = r? {
                records.push(r);
            }
        }
        if records.is_empty() {
            return Err(Error::integrity(format!(
                "no profile among {} has an exclusive well-distinguishing separation",
                current.len()
            )));
        }
        let new: Vec<Sep> = records.iter().map(|r| r.r_p).collect();
        if let Err((a, b)) = s.is_nested_set(&new) {
            return Err(Error::integrity(format!(
                "maximal good separations {} and {} cross",
                s.label(a),
                s.label(b)
            )));
        }
        let retired: Vec<usize> = records.iter().map(|r| r.profile).collect();
        current.retain(|i| !retired.contains(i));
        m.extend(new.iter().map(|&x| s.key(x)));
        m.sort_unstable();
        m.dedup();
        if let Err((a, b)) = s.is_nested_set(&m) {
            return Err(Error::integrity(format!(
                "{} and {} cross across levels",
                s.label(a),
                s.label(b)
            )));
        }
        levels.push(GoodLevel {
            records,
            passed_on: current.clone(),
        });
    }
    let nested = NestedSet::new(s, &m)?;
    if let Err((i, j)) = distinguishes_set(s, nested.seps(), &ps) {
        return Err(Error::integrity(format!("profiles {i} and {j} are not distinguished")));
    }
    if let Some(&x) = nested.seps().iter().find(|&&x| crate::refine::good(s, x, &ps).is_none()) {
        return Err(Error::integrity(format!("{} is not good", s.label(x))));
    }
    Ok(GoodNested {
        nested,
        profiles: ps,
        levels,
    })
}

/// The first separation of `S_M`, in id order, distinguishing `p` and `q`
/// well, oriented as the member of `p`.
pub fn find_well_distinguisher(
    s: &SeparationSystem,
    p: &Orientation,
    q: &Orientation,
    m: &[Sep],
) -> Result<Sep> {
    if p == q {
        return Err(Error::input("identical profiles cannot be distinguished"));
    }
    let sm = s.restrict_nested(m)?;
    sm.unoriented()
        .into_iter()
        .map(|x| if p.contains(x) { x } else { s.inv(x) })
        .find(|&x| p.contains(x) && q.contains(s.inv(x)) && distinguishes_well(s, x, p, q))
        .ok_or_else(|| Error::integrity("no separation distinguishes the two profiles well"))
}

/// A bijection between the oriented separations of two systems.
#[derive(Clone, Debug)]
pub struct Isomorphism {
    map: Vec<Option<Sep>>,
}

impl Isomorphism {
    /// Validates that `f` is a bijection from `S⃗` onto `S⃗′` that respects
    /// the order and commutes with the involutions.
    pub fn new(s: &SeparationSystem, t: &SeparationSystem, f: impl Fn(Sep) -> Option<Sep>) -> Result<Self> {
        let mut map = vec![None; s.frame().len()];
        let mut hit = vec![false; t.frame().len()];
        for x in s.oriented() {
            let y = f(x).filter(|&y| t.contains(y)).ok_or_else(|| {
                Error::input(format!("{} has no image in the target system", s.label(x)))
            })?;
            if std::mem::replace(&mut hit[y], true) {
                return Err(Error::input(format!("{} is hit twice", t.label(y))));
            }
            map[x] = Some(y);
        }
        if t.oriented().count() != s.oriented().count() {
            return Err(Error::input("map is not onto"));
        }
        let iso = Isomorphism { map };
        for x in s.oriented() {
            if iso.apply(s.inv(x)) != t.inv(iso.apply(x)) {
                return Err(Error::input(format!("map does not commute with inverting {}", s.label(x))));
            }
            for y in s.oriented() {
                if s.leq(x, y) != t.leq(iso.apply(x), iso.apply(y)) {
                    return Err(Error::input(format!(
                        "map does not respect {} <= {}",
                        s.label(x),
                        s.label(y)
                    )));
                }
            }
        }
        Ok(iso)
    }

    pub fn apply(&self, x: Sep) -> Sep {
        self.map[x].expect("separation outside the domain")
    }

    /// `r ∨ s ∈ S⃗` exactly when `φ(r) ∨ φ(s) ∈ S⃗′`.
    pub fn is_lattice_compatible(&self, s: &SeparationSystem, t: &SeparationSystem) -> bool {
        s.oriented().all(|x| {
            s.oriented()
                .all(|y| s.join(x, y).is_some() == t.join(self.apply(x), self.apply(y)).is_some())
        })
    }

    pub fn map_orientation(&self, t: &SeparationSystem, o: &Orientation) -> Orientation {
        Orientation::new(t.frame().len(), o.seps().iter().map(|&x| self.apply(x)))
    }

    pub fn map_nested(&self, t: &SeparationSystem, n: &NestedSet) -> Result<NestedSet> {
        let img: Vec<Sep> = n.seps().iter().map(|&x| self.apply(x)).collect();
        NestedSet::new(t, &img)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builder {
    Construction41,
    GoodNested,
}

/// Whether building on `S` and mapping along `φ` agrees with building on
/// `S′` from the mapped profiles.
pub fn check_canonicity(
    builder: Builder,
    s: &SeparationSystem,
    t: &SeparationSystem,
    phi: &Isomorphism,
    profiles: &[Orientation],
    limits: Limits,
) -> Result<bool> {
    if builder == Builder::GoodNested && !phi.is_lattice_compatible(s, t) {
        return Err(Error::input("good nested sets are only invariant under lattice-compatible maps"));
    }
    let mapped: Vec<Orientation> = profiles.iter().map(|p| phi.map_orientation(t, p)).collect();
    let (a, b) = match builder {
        Builder::Construction41 => (
            construction_41(s, profiles, limits)?.nested,
            construction_41(t, &mapped, limits)?.nested,
        ),
        Builder::GoodNested => (good_nested_set(s, profiles)?.nested, good_nested_set(t, &mapped)?.nested),
    };
    Ok(phi.map_nested(t, &a)? == b)
}
