//! Closely related and good separations, and refinement of inessential
//! nodes of a tangle-distinguishing nested set.

use serde::Serialize;

use crate::duality::{duality_decide, shift_stree, Duality, DualityOptions};
use crate::error::{Error, Result, Verdict};
use crate::orient::{enumerate_tangles, is_star, maximal_elements, Limits, Orientation, StarFamily};
use crate::system::{Sep, SeparationSystem};
use crate::trees::{
    essential_nodes, irredundant_reduction, keys_of, nodes_of, stree_validate, trivial_in, NestedSet, STree,
};

/// Why `x` is not closely related to an orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NotClose {
    NotMember,
    /// Some `r ∈ P` with `x ∧ r ∉ S⃗`.
    Meet(Sep),
}

/// `x ∈ P` and `x ∧ r ∈ S⃗` for every `r ∈ P`.
pub fn closely_related(s: &SeparationSystem, x: Sep, p: &Orientation) -> Verdict<NotClose> {
    if !p.contains(x) {
        return Err(NotClose::NotMember);
    }
    match p.seps().iter().find(|&&r| s.meet(x, r).is_none()) {
        Some(&r) => Err(NotClose::Meet(r)),
        None => Ok(()),
    }
}

fn is_close(s: &SeparationSystem, x: Sep, p: &Orientation) -> bool {
    closely_related(s, x, p).is_ok()
}

/// Indices `(i, j)` of profiles with `x` closely related to the first and
/// `x̄` to the second, if `x` is good.
pub fn good(s: &SeparationSystem, x: Sep, profiles: &[Orientation]) -> Option<(usize, usize)> {
    let xb = s.inv(x);
    let i = profiles.iter().position(|p| is_close(s, x, p))?;
    let j = profiles.iter().position(|p| is_close(s, xb, p))?;
    Some((i, j))
}

/// One orientation of `x` is closely related to `p`, the other to `q`.
pub fn distinguishes_well(s: &SeparationSystem, x: Sep, p: &Orientation, q: &Orientation) -> bool {
    let xb = s.inv(x);
    (is_close(s, x, p) && is_close(s, xb, q)) || (is_close(s, xb, p) && is_close(s, x, q))
}

/// The maximal members of an orientation.
pub fn maximal_in(s: &SeparationSystem, p: &Orientation) -> Vec<Sep> {
    let mut m = maximal_elements(s, p.seps());
    m.sort_unstable();
    m
}

/// A separation together with a profile it is closely related to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CloseWitness {
    pub separation: Sep,
    pub profile: Orientation,
}

impl CloseWitness {
    pub fn new(s: &SeparationSystem, separation: Sep, profile: Orientation) -> Result<Self> {
        if let Err(w) = closely_related(s, separation, &profile) {
            return Err(Error::input(format!(
                "{} is not closely related to the given profile: {w:?}",
                s.label(separation)
            )));
        }
        Ok(CloseWitness { separation, profile })
    }
}

/// Some profile in `ps` that `x` is closely related to.
pub fn find_close_witness(s: &SeparationSystem, x: Sep, ps: &[Orientation]) -> Option<CloseWitness> {
    ps.iter().find(|p| is_close(s, x, p)).map(|p| CloseWitness {
        separation: x,
        profile: p.clone(),
    })
}

/// `x ∧ inf(M)`, where every witness in `M` is closely related to a
/// profile containing `x`. With `close_to`, also checks that the result is
/// closely related to that profile.
pub fn guarded_inf(
    s: &SeparationSystem,
    x: Sep,
    m: &[CloseWitness],
    close_to: Option<&Orientation>,
) -> Result<Sep> {
    s.check_member(x)?;
    for w in m {
        if !is_close(s, w.separation, &w.profile) {
            return Err(Error::input(format!(
                "{} is not closely related to its witness profile",
                s.label(w.separation)
            )));
        }
        if !w.profile.contains(x) {
            return Err(Error::input(format!(
                "witness profile of {} does not contain {}",
                s.label(w.separation),
                s.label(x)
            )));
        }
    }
    let mut acc = x;
    for w in m {
        acc = s.meet(acc, w.separation).ok_or_else(|| {
            Error::integrity(format!(
                "meet with {} left the system",
                s.label(w.separation)
            ))
        })?;
    }
    if let Some(p) = close_to {
        if is_close(s, x, p) && !is_close(s, acc, p) {
            return Err(Error::integrity(format!(
                "{} is not closely related to the profile although {} is",
                s.label(acc),
                s.label(x)
            )));
        }
    }
    Ok(acc)
}

/// Inputs shared by the refinement routines.
#[derive(Clone, Copy, Debug)]
pub struct RefineContext<'a> {
    pub s: &'a SeparationSystem,
    pub f: &'a StarFamily,
    /// All `F`-tangles of `S`.
    pub tangles: &'a [Orientation],
    pub limits: Limits,
}

impl<'a> RefineContext<'a> {
    pub fn new(s: &'a SeparationSystem, f: &'a StarFamily, tangles: &'a [Orientation], limits: Limits) -> Self {
        RefineContext { s, f, tangles, limits }
    }
}

/// An `S`-tree over `F ∪ {{s̄} : s ∈ σ}` in which every member of the
/// inessential star `σ` is a leaf separation.
///
/// `witnesses[i]`, when given, pairs the inverse of `σ[i]` with an
/// `F`-tangle it is closely related to; otherwise one is searched for.
pub fn refine_star(ctx: &RefineContext<'_>, sigma: &[Sep], witnesses: Option<&[CloseWitness]>) -> Result<STree> {
    let s = ctx.s;
    if sigma.is_empty() {
        return Err(Error::input("cannot refine the empty star"));
    }
    for &x in sigma {
        s.check_member(x)?;
    }
    if !is_star(s, sigma) {
        return Err(Error::input(format!("{:?} is not a star", s.labels(sigma))));
    }
    if let Some(t) = ctx.tangles.iter().find(|t| t.contains_all(sigma)) {
        return Err(Error::domain(format!(
            "star {:?} is essential: home to {:?}",
            s.labels(sigma),
            t.labels(s)
        )));
    }
    let mut homes: Vec<Orientation> = Vec::with_capacity(sigma.len());
    for (i, &x) in sigma.iter().enumerate() {
        let xb = s.inv(x);
        let w = match witnesses {
            Some(ws) => {
                let w = ws
                    .get(i)
                    .ok_or_else(|| Error::input(format!("no witness for {}", s.label(x))))?;
                if w.separation != xb || !is_close(s, xb, &w.profile) {
                    return Err(Error::input(format!("invalid witness for {}", s.label(x))));
                }
                if !ctx.tangles.contains(&w.profile) {
                    return Err(Error::input(format!("witness for {} is not an F-tangle", s.label(x))));
                }
                w.clone()
            }
            None => find_close_witness(s, xb, ctx.tangles).ok_or_else(|| {
                Error::domain(format!(
                    "the inverse of {} is closely related to no F-tangle",
                    s.label(x)
                ))
            })?,
        };
        homes.push(w.profile);
    }

    let inverses: Vec<Sep> = sigma.iter().map(|&x| s.inv(x)).collect();
    let above: Vec<Sep> = s
        .oriented()
        .filter(|&y| inverses.iter().any(|&b| s.leq(b, y)))
        .collect();
    let fbar = ctx.f.with_singletons(above.iter().copied());
    let opts = DualityOptions {
        limits: ctx.limits,
        assume_shift_closed: true,
        max_tree_vertices: 0,
    };
    let mut tree = match duality_decide(s, &fbar, opts)? {
        Duality::Tree(t) => t,
        Duality::Tangle(t) => {
            return Err(Error::integrity(format!(
                "the extended family still has a tangle: {:?}",
                t.labels(s)
            )))
        }
    };

    let present = |t: &STree| -> Vec<Sep> {
        let leaves = t.leaf_separations(s);
        sigma.iter().copied().filter(|x| leaves.contains(x)).collect()
    };
    let mut have = present(&tree);
    for _round in 0..=sigma.len() {
        let Some(i) = sigma.iter().position(|x| !have.contains(x)) else {
            break;
        };
        let stars = tree.stars(s);
        let home = &homes[i];
        let leaf = stars
            .iter()
            .enumerate()
            .find(|(_, st)| home.contains_all(st) && !ctx.f.contains(st))
            .map(|(v, _)| v)
            .ok_or_else(|| Error::integrity("witness tangle lives at no extension leaf"))?;
        if stars[leaf].len() != 1 || tree.degree(leaf) != 1 {
            return Err(Error::integrity("witness tangle lives at a non-leaf outside F"));
        }
        let x = stars[leaf][0];
        if !s.leq(inverses[i], x) {
            return Err(Error::integrity(format!(
                "leaf star {{{}}} of the witness tangle is not above {}",
                s.label(x),
                s.label(inverses[i])
            )));
        }
        let r = s.inv(x);
        let mut keep = have.clone();
        keep.push(r);
        keep.sort_unstable();
        keep.dedup();
        let reduced = irredundant_reduction(s, &tree, &keep)?;
        let shifted = shift_stree(s, &reduced, &fbar, r, sigma[i])?;
        let now = present(&shifted);
        if !(have.iter().all(|x| now.contains(x)) && now.contains(&sigma[i])) {
            return Err(Error::integrity(format!(
                "shifting onto {} lost a leaf separation",
                s.label(sigma[i])
            )));
        }
        tree = shifted;
        have = now;
    }
    if have.len() != sigma.len() {
        return Err(Error::integrity("refinement did not terminate with every member as a leaf"));
    }

    let target = ctx.f.with_singletons(inverses.iter().copied());
    let rep = stree_validate(s, &tree, Some(&target));
    if !rep.is_stree || rep.over_f != Some(true) {
        return Err(Error::integrity(format!(
            "refined tree is not over F ∪ {{s̄}}: {:?}",
            rep.witnesses
        )));
    }
    Ok(tree)
}

/// How a node of the refined set is accounted for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    /// The node is a star in `F`.
    InFamily,
    /// Index of an `F`-tangle living at the node.
    Home(usize),
    Unaccounted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeClass {
    pub node: Vec<Sep>,
    pub kind: NodeKind,
}

/// Classifies every node of `n` as an `F`-star or a tangle home.
pub fn classify_nodes(ctx: &RefineContext<'_>, n: &NestedSet) -> Result<Vec<NodeClass>> {
    let nodes = nodes_of(ctx.s, n, ctx.limits)?;
    let homes = essential_nodes(&nodes, ctx.tangles);
    Ok(nodes
        .into_iter()
        .zip(homes)
        .map(|(node, home)| {
            let kind = match home {
                Some(i) => NodeKind::Home(i),
                None if ctx.f.contains(&node) => NodeKind::InFamily,
                None => NodeKind::Unaccounted,
            };
            NodeClass { node, kind }
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub refined: NestedSet,
    /// The inessential nodes of the input.
    pub inessential: Vec<Vec<Sep>>,
    /// One tree per inessential node.
    pub trees: Vec<STree>,
    pub classes: Vec<NodeClass>,
}

fn proper_labels(s: &SeparationSystem, t: &STree) -> Vec<Sep> {
    t.edges
        .iter()
        .map(|e| e.label)
        .filter(|&x| !s.is_degenerate(x))
        .collect()
}

/// With no `F`-tangle at all, the whole of `S` is one inessential node and
/// is replaced by an `S`-tree over `F`.
fn tree_over_family(ctx: &RefineContext<'_>) -> Result<STree> {
    let opts = DualityOptions {
        limits: ctx.limits,
        assume_shift_closed: true,
        max_tree_vertices: 0,
    };
    match duality_decide(ctx.s, ctx.f, opts)? {
        Duality::Tree(t) => Ok(t),
        Duality::Tangle(t) => Err(Error::integrity(format!(
            "an F-tangle was missed: {:?}",
            t.labels(ctx.s)
        ))),
    }
}

/// Refines every inessential node of `ntilde`. The input must distinguish
/// all `F`-tangles, and the inverse of each member of an inessential node
/// must be closely related to some `F`-tangle.
pub fn refine_treeset(ctx: &RefineContext<'_>, ntilde: &NestedSet) -> Result<Refinement> {
    let s = ctx.s;
    if let Err((i, j)) = crate::orient::distinguishes_set(s, ntilde.seps(), ctx.tangles) {
        return Err(Error::domain(format!(
            "nested set does not distinguish tangles {i} and {j}"
        )));
    }
    let nodes = nodes_of(s, ntilde, ctx.limits)?;
    let homes = essential_nodes(&nodes, ctx.tangles);
    let mut inessential = Vec::new();
    let mut trees = Vec::new();
    let mut all: Vec<Sep> = ntilde.seps().to_vec();
    for (node, home) in nodes.iter().zip(&homes) {
        if home.is_some() {
            continue;
        }
        if node.is_empty() {
            let t = tree_over_family(ctx)?;
            all.extend(keys_of(s, &proper_labels(s, &t)));
            inessential.push(Vec::new());
            trees.push(t);
            continue;
        }
        for &x in node {
            if find_close_witness(s, s.inv(x), ctx.tangles).is_none() {
                return Err(Error::domain(format!(
                    "inverse of {} in an inessential node is closely related to no F-tangle",
                    s.label(x)
                )));
            }
        }
        let t = refine_star(ctx, node, None)?;
        all.extend(keys_of(s, &proper_labels(s, &t)));
        inessential.push(node.clone());
        trees.push(t);
    }
    let oriented: Vec<Sep> = keys_of(s, &all).into_iter().flat_map(|x| [x, s.inv(x)]).collect();
    all.retain(|&x| !trivial_in(s, &oriented, x) && !trivial_in(s, &oriented, s.inv(x)));
    let refined = NestedSet::new(s, &all).map_err(|e| Error::integrity(format!("refined set is not nested: {e}")))?;
    let classes = classify_nodes(ctx, &refined)?;
    if let Some(c) = classes.iter().find(|c| c.kind == NodeKind::Unaccounted) {
        return Err(Error::integrity(format!(
            "node {:?} is neither a star in F nor home to a tangle",
            s.labels(&c.node)
        )));
    }
    Ok(Refinement {
        refined,
        inessential,
        trees,
        classes,
    })
}

/// Tangles of `S` followed by [`refine_treeset`].
pub fn refine_treeset_with(s: &SeparationSystem, f: &StarFamily, ntilde: &NestedSet, limits: Limits) -> Result<Refinement> {
    let tangles = enumerate_tangles(s, f, limits)?;
    refine_treeset(&RefineContext::new(s, f, &tangles, limits), ntilde)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::check_closed_under_shifting;
    use crate::universe::BipartitionUniverse;
    use std::sync::Arc;

    fn u4() -> SeparationSystem {
        let u = BipartitionUniverse::new(["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect()).unwrap();
        SeparationSystem::whole_universe(Arc::new(u)).unwrap()
    }

    fn sep(s: &SeparationSystem, l: &str) -> Sep {
        s.parse(l).unwrap()
    }

    /// Cover stars, plus singletons `{X|V∖X}` for `X ⊇ {a, b}`, whose
    /// tangles are the principal orientations at `a` and at `b`.
    fn two_tangle_family(s: &SeparationSystem) -> StarFamily {
        let seps = s.oriented_vec();
        let mut out = Vec::new();
        fn go(s: &SeparationSystem, seps: &[Sep], i: usize, cur: &mut Vec<Sep>, used: u64, out: &mut Vec<Vec<Sep>>) {
            if used == 0b1111 && !cur.is_empty() {
                out.push(cur.clone());
            }
            for j in i..seps.len() {
                let a = s.uid(seps[j]);
                if a & used == 0 {
                    cur.push(seps[j]);
                    go(s, seps, j + 1, cur, used | a, out);
                    cur.pop();
                }
            }
        }
        go(s, &seps, 0, &mut Vec::new(), 0, &mut out);
        out.extend(seps.iter().filter(|&&x| s.uid(x) & 0b11 == 0b11).map(|&x| vec![x]));
        StarFamily::new(out)
    }

    #[test]
    fn full_lattice_makes_everything_close() {
        let s = u4();
        let f = two_tangle_family(&s);
        let ts = enumerate_tangles(&s, &f, Limits::default()).unwrap();
        assert_eq!(ts.len(), 2);
        for t in &ts {
            for &x in t.seps() {
                assert_eq!(closely_related(&s, x, t), Ok(()));
            }
            assert_eq!(closely_related(&s, s.inv(t.seps()[0]), t), Err(NotClose::NotMember));
        }
        let x = sep(&s, "b,c,d|a");
        assert!(distinguishes_well(&s, x, &ts[0], &ts[1]) || distinguishes_well(&s, x, &ts[1], &ts[0]));
        assert!(good(&s, x, &ts).is_some());
        assert!(good(&s, x, &[]).is_none());
    }

    #[test]
    fn missing_meet_is_reported() {
        let s = u4();
        let keep = [sep(&s, "a,b|c,d"), sep(&s, "a,c|b,d")];
        let sub = s.subsystem(|x| keep.contains(&x) || keep.contains(&s.inv(x)));
        let p = Orientation::new(s.frame().len(), keep);
        assert_eq!(closely_related(&sub, keep[0], &p), Err(NotClose::Meet(keep[1])));
    }

    #[test]
    fn guarded_inf_base_cases() {
        let s = u4();
        let f = two_tangle_family(&s);
        let ts = enumerate_tangles(&s, &f, Limits::default()).unwrap();
        let x = maximal_in(&s, &ts[0])[0];
        assert_eq!(guarded_inf(&s, x, &[], None).unwrap(), x);
        let other = ts[0].seps().iter().copied().find(|&y| y != x && !s.is_small(y)).unwrap();
        let w = CloseWitness::new(&s, other, ts[0].clone()).unwrap();
        let m = guarded_inf(&s, x, &[w], Some(&ts[0])).unwrap();
        assert_eq!(Some(m), s.meet(x, other));
    }

    #[test]
    fn middle_node_dissolves_into_family_stars() {
        let s = u4();
        let f = two_tangle_family(&s);
        assert_eq!(check_closed_under_shifting(&s, &f), Ok(()));
        let ts = enumerate_tangles(&s, &f, Limits::default()).unwrap();
        let ctx = RefineContext::new(&s, &f, &ts, Limits::default());
        let sigma = vec![sep(&s, "a|b,c,d"), sep(&s, "b|a,c,d")];
        let t = refine_star(&ctx, &sigma, None).unwrap();
        let leaves = t.leaf_separations(&s);
        assert!(sigma.iter().all(|x| leaves.contains(x)));

        let ntilde = NestedSet::new(&s, &[sep(&s, "b,c,d|a"), sep(&s, "a,c,d|b")]).unwrap();
        let r = refine_treeset(&ctx, &ntilde).unwrap();
        assert!(r.refined.is_superset_of(&ntilde));
        assert_eq!(r.inessential, vec![{
            let mut v = sigma.clone();
            v.sort_unstable();
            v
        }]);
        assert!(r.classes.iter().all(|c| c.kind != NodeKind::Unaccounted));
        assert_eq!(r.classes.iter().filter(|c| matches!(c.kind, NodeKind::Home(_))).count(), 2);
    }

    #[test]
    fn essential_star_is_refused() {
        let s = u4();
        let f = two_tangle_family(&s);
        let ts = enumerate_tangles(&s, &f, Limits::default()).unwrap();
        let ctx = RefineContext::new(&s, &f, &ts, Limits::default());
        let home = vec![sep(&s, "b,c,d|a")];
        assert!(matches!(refine_star(&ctx, &home, None), Err(Error::Domain(_))));
    }
}
