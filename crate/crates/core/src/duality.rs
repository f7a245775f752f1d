//! Shifting, emulation and the tangle-tree duality decision.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result, Verdict};
use crate::orient::{enumerate_tangles, is_f_tangle, is_star, Limits, Orientation, StarFamily};
use crate::system::{Sep, SeparationSystem};
use crate::trees::{stree_validate, STree, TreeEdge};

/// Why `s` fails to emulate `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EmulationFailure {
    NotAbove,
    /// Some `x >= r`, `x != r̄`, with `s ∨ x` outside `S`.
    Join(Sep),
}

fn check_shiftable(s: &SeparationSystem, r: Sep) -> Result<()> {
    s.check_member(r)?;
    if s.is_degenerate(r) {
        return Err(Error::input(format!("{} is degenerate", s.label(r))));
    }
    if s.is_trivial(r) {
        return Err(Error::input(format!("{} is trivial", s.label(r))));
    }
    Ok(())
}

/// `sv` emulates `r` in `S`: `sv >= r` and `sv ∨ x ∈ S` for every
/// `x >= r` of `S` other than `r̄`.
pub fn emulates(s: &SeparationSystem, sv: Sep, r: Sep) -> Result<Verdict<EmulationFailure>> {
    check_shiftable(s, r)?;
    s.check_member(sv)?;
    Ok(emulates_unchecked(s, sv, r))
}

fn emulates_unchecked(s: &SeparationSystem, sv: Sep, r: Sep) -> Verdict<EmulationFailure> {
    if !s.leq(r, sv) {
        return Err(EmulationFailure::NotAbove);
    }
    let rb = s.inv(r);
    for x in s.frame().up(r).ones() {
        if x != rb && s.contains(x) && s.join(sv, x).is_none() {
            return Err(EmulationFailure::Join(x));
        }
    }
    Ok(())
}

/// The shifting map `f↓(r, s)` on `S⃗_{>=r}`.
#[derive(Clone, Debug)]
pub struct ShiftMap<'a> {
    s: &'a SeparationSystem,
    r: Sep,
    sv: Sep,
}

impl<'a> ShiftMap<'a> {
    /// Requires `sv` to emulate `r`.
    pub fn new(s: &'a SeparationSystem, r: Sep, sv: Sep) -> Result<Self> {
        if let Err(w) = emulates(s, sv, r)? {
            return Err(Error::domain(format!(
                "{} does not emulate {}: {w:?}",
                s.label(sv),
                s.label(r)
            )));
        }
        Ok(ShiftMap { s, r, sv })
    }

    fn unchecked(s: &'a SeparationSystem, r: Sep, sv: Sep) -> Self {
        ShiftMap { s, r, sv }
    }

    /// `x ↦ x ∨ s` for `x >= r`, `x̄ ↦ (x ∨ s)*`; `None` off the domain.
    pub fn apply(&self, x: Sep) -> Option<Sep> {
        let s = self.s;
        let rb = s.inv(self.r);
        if s.leq(self.r, x) && x != rb {
            s.join(x, self.sv)
        } else {
            let xb = s.inv(x);
            if s.leq(self.r, xb) && xb != rb {
                s.join(xb, self.sv).map(|y| s.inv(y))
            } else {
                None
            }
        }
    }

    /// The image of a star that lies in `S⃗_{>=r} \ {r̄}` and has a member
    /// `>= r`; `None` if the star is not of that kind.
    pub fn image_of_star(&self, sigma: &[Sep]) -> Option<Vec<Sep>> {
        let s = self.s;
        let rb = s.inv(self.r);
        if sigma.contains(&rb) || !sigma.iter().any(|&x| s.leq(self.r, x)) {
            return None;
        }
        let mut out = Vec::with_capacity(sigma.len());
        for &x in sigma {
            out.push(self.apply(x)?);
        }
        out.sort_unstable();
        out.dedup();
        Some(out)
    }
}

/// `sv` emulates `r` in `S` for `F`: it emulates `r`, and every star of
/// `F` in `S⃗_{>=r} \ {r̄}` with a member `>= r` is shifted into `F`.
/// The error value is the index of an offending star.
pub fn emulates_for(s: &SeparationSystem, f: &StarFamily, sv: Sep, r: Sep) -> Result<Verdict<Option<usize>>> {
    if emulates(s, sv, r)?.is_err() {
        return Ok(Err(None));
    }
    let map = ShiftMap::unchecked(s, r, sv);
    for (i, sigma) in f.sets().iter().enumerate() {
        if let Some(img) = map.image_of_star(sigma) {
            if !f.contains(&img) {
                return Ok(Err(Some(i)));
            }
        }
    }
    Ok(Ok(()))
}

/// A triple `(r, s, σ)` with `s` emulating `r` in `S` but `f↓(r, s)(σ) ∉ F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftWitness {
    pub r: Sep,
    pub s: Sep,
    pub star: Vec<Sep>,
}

/// Closure of `F` under shifting in `S`. Among several failures the one
/// with the smallest `(r, s, star index)` is reported.
pub fn check_closed_under_shifting(s: &SeparationSystem, f: &StarFamily) -> Verdict<ShiftWitness> {
    let rs: Vec<Sep> = s
        .oriented()
        .filter(|&r| !s.is_degenerate(r) && !s.is_trivial(r))
        .collect();
    let found = rs
        .par_iter()
        .filter_map(|&r| {
            let rb = s.inv(r);
            let relevant: Vec<usize> = f
                .sets()
                .iter()
                .enumerate()
                .filter(|(_, sigma)| {
                    !sigma.contains(&rb)
                        && sigma.iter().all(|&x| s.contains(x))
                        && sigma.iter().any(|&x| s.leq(r, x))
                        && sigma.iter().all(|&x| s.leq(r, x) || s.leq(r, s.inv(x)))
                })
                .map(|(i, _)| i)
                .collect();
            for sv in s.frame().up(r).ones() {
                if !s.contains(sv) || emulates_unchecked(s, sv, r).is_err() {
                    continue;
                }
                let map = ShiftMap::unchecked(s, r, sv);
                for &i in &relevant {
                    let ok = map.image_of_star(&f.sets()[i]).is_some_and(|img| f.contains(&img));
                    if !ok {
                        return Some((r, sv, i));
                    }
                }
            }
            None
        })
        .min();
    match found {
        Some((r, sv, i)) => Err(ShiftWitness {
            r,
            s: sv,
            star: f.sets()[i].clone(),
        }),
        None => Ok(()),
    }
}

/// Shifts an irredundant tight tree over `F ∪ {{r̄}}` with leaf separation
/// `r` along `f↓(r, sv)`. The result is a tree over `F ∪ {{s̄v}}` in which
/// the old leaf carries `sv`.
pub fn shift_stree(s: &SeparationSystem, t: &STree, f: &StarFamily, r: Sep, sv: Sep) -> Result<STree> {
    check_shiftable(s, r)?;
    let rep = stree_validate(s, t, Some(&f.with_singletons([s.inv(r)])));
    if !rep.is_stree || !rep.irredundant || !rep.tight || rep.over_f != Some(true) {
        return Err(Error::domain(format!(
            "tree is not an irredundant tight tree over F ∪ {{r̄}}: {:?}",
            rep.witnesses
        )));
    }
    let leaf_edges = t.leaves_with(s, r);
    if leaf_edges.is_empty() {
        return Err(Error::domain(format!("{} is not a leaf separation", s.label(r))));
    }
    if t.label_count(s, r) != 1 {
        return Err(Error::domain(format!("{} labels more than one edge", s.label(r))));
    }
    match emulates_for(s, f, sv, r)? {
        Ok(()) => {}
        Err(_) => {
            return Err(Error::domain(format!(
                "{} does not emulate {} for F",
                s.label(sv),
                s.label(r)
            )))
        }
    }
    let map = ShiftMap::unchecked(s, r, sv);
    let mut edges = Vec::with_capacity(t.edges.len());
    for e in &t.edges {
        let label = map.apply(e.label).ok_or_else(|| {
            Error::domain(format!("edge label {} lies outside the shift domain", s.label(e.label)))
        })?;
        edges.push(TreeEdge { label, ..*e });
    }
    let out = STree {
        n_vertices: t.n_vertices,
        edges,
    };
    let target = f.with_singletons([s.inv(sv)]);
    let rep = stree_validate(s, &out, Some(&target));
    if !rep.is_stree || rep.over_f != Some(true) {
        return Err(Error::integrity(format!("shifted tree is not over F ∪ {{s̄}}: {:?}", rep.witnesses)));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Duality {
    Tangle(Orientation),
    Tree(STree),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DualityOptions {
    pub limits: Limits,
    /// Skip the closure-under-shifting check when the caller knows it holds.
    pub assume_shift_closed: bool,
    /// Cap on the vertices of the produced tree.
    pub max_tree_vertices: usize,
}

pub const DEFAULT_MAX_TREE_VERTICES: usize = 100_000;

/// Returns an `F`-tangle of `S` or an `S`-tree over `F`, exactly one of
/// which exists when `S` is submodular and `F` is a standard family of
/// stars closed under shifting.
pub fn duality_decide(s: &SeparationSystem, f: &StarFamily, opts: DualityOptions) -> Result<Duality> {
    if let Err((a, b)) = s.is_submodular() {
        return Err(Error::domain(format!(
            "system is not submodular at {} and {}",
            s.label(a),
            s.label(b)
        )));
    }
    if let Some(x) = s.oriented().find(|&x| s.is_trivial(x) && !f.contains_singleton(s.inv(x))) {
        return Err(Error::domain(format!("family is not standard: {{{}}} missing", s.label(s.inv(x)))));
    }
    if !opts.assume_shift_closed {
        if let Err(w) = check_closed_under_shifting(s, f) {
            return Err(Error::domain(format!(
                "family is not closed under shifting: {} onto {} moves {:?} out",
                s.label(w.r),
                s.label(w.s),
                s.labels(&w.star)
            )));
        }
    }
    let tangles = enumerate_tangles(s, f, opts.limits.first_only())?;
    if let Some(t) = tangles.into_iter().next() {
        if is_f_tangle(s, &t, f).is_err() {
            return Err(Error::integrity("enumerated orientation is not an F-tangle"));
        }
        return Ok(Duality::Tangle(t));
    }
    let cap = if opts.max_tree_vertices == 0 {
        DEFAULT_MAX_TREE_VERTICES
    } else {
        opts.max_tree_vertices
    };
    match tree_over(s, f, cap)? {
        Some(t) => {
            let rep = stree_validate(s, &t, Some(f));
            if !rep.is_stree || rep.over_f != Some(true) {
                return Err(Error::integrity(format!("constructed tree is invalid: {:?}", rep.witnesses)));
            }
            Ok(Duality::Tree(t))
        }
        None => Err(Error::integrity("neither an F-tangle nor an S-tree over F exists")),
    }
}

/// An `S`-tree over `F` built from tight stars of `F`, or `None`.
///
/// `covered(x)` holds when some finite branch hangs below an edge whose
/// inward label is `x`: a star of `F` containing `x̄` whose other members
/// are covered. A tree exists exactly when some star has all its members
/// covered, and the least fixpoint is computed with per-star counters.
pub fn tree_over(s: &SeparationSystem, f: &StarFamily, max_vertices: usize) -> Result<Option<STree>> {
    let stars: Vec<&Vec<Sep>> = f
        .sets()
        .iter()
        .filter(|sigma| {
            sigma.iter().all(|&x| s.contains(x))
                && is_star(s, sigma)
                && !sigma.iter().any(|&x| sigma.contains(&s.inv(x)))
        })
        .collect();
    if stars.iter().any(|sigma| sigma.is_empty()) {
        return Ok(Some(STree::single_vertex()));
    }
    let n = s.frame().len();
    let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, sigma) in stars.iter().enumerate() {
        for &x in sigma.iter() {
            occurs[x].push(i);
        }
    }
    let mut open: Vec<usize> = stars.iter().map(|sigma| sigma.len()).collect();
    let mut why: Vec<usize> = vec![usize::MAX; n];
    let mut queue: Vec<Sep> = Vec::new();
    let mut root = None;
    let mut covered = vec![false; n];
    let mut done = vec![false; n];
    for (i, sigma) in stars.iter().enumerate() {
        if sigma.len() == 1 {
            let y = s.inv(sigma[0]);
            if !covered[y] {
                covered[y] = true;
                why[y] = i;
                queue.push(y);
            }
        }
    }
    let mut head = 0;
    while head < queue.len() && root.is_none() {
        let y = queue[head];
        head += 1;
        done[y] = true;
        for &i in &occurs[y] {
            open[i] -= 1;
            match open[i] {
                0 => {
                    root = Some(i);
                    break;
                }
                1 => {
                    let w = *stars[i].iter().find(|&&w| !done[w]).expect("one open member");
                    let z = s.inv(w);
                    if !covered[z] {
                        covered[z] = true;
                        why[z] = i;
                        queue.push(z);
                    }
                }
                _ => {}
            }
        }
    }
    let Some(root) = root else { return Ok(None) };
    let mut tree = STree {
        n_vertices: 1,
        edges: Vec::new(),
    };
    // (parent vertex, inward label at the parent)
    let mut todo: Vec<(usize, Sep)> = stars[root].iter().map(|&x| (0, x)).collect();
    while let Some((parent, x)) = todo.pop() {
        if tree.n_vertices >= max_vertices {
            return Err(Error::resource(format!("tree exceeds {max_vertices} vertices")));
        }
        let child = tree.n_vertices;
        tree.n_vertices += 1;
        tree.edges.push(TreeEdge {
            tail: child,
            head: parent,
            label: x,
        });
        let sigma = stars[why[x]];
        let xb = s.inv(x);
        for &z in sigma.iter() {
            if z != xb {
                todo.push((child, z));
            }
        }
    }
    Ok(Some(tree))
}

/// A pair `s <= r` for which no `t` with `s <= t <= r` has `t` emulating `s`
/// and `t̄` emulating `r̄`. Pairs where `s` or `r̄` is trivial or degenerate
/// are skipped.
pub fn check_separable(s: &SeparationSystem) -> Verdict<(Sep, Sep)> {
    let ok = |x: Sep| !s.is_degenerate(x) && !s.is_trivial(x);
    let lows: Vec<Sep> = s.oriented().filter(|&a| ok(a)).collect();
    let bad = lows
        .par_iter()
        .filter_map(|&a| {
            s.frame().up(a).ones().find(|&r| {
                s.contains(r)
                    && ok(s.inv(r))
                    && !s.frame().up(a).ones().any(|t| {
                        s.contains(t)
                            && s.leq(t, r)
                            && emulates_unchecked(s, t, a).is_ok()
                            && emulates_unchecked(s, s.inv(t), s.inv(r)).is_ok()
                    })
            })
            .map(|r| (a, r))
        })
        .min();
    match bad {
        Some(w) => Err(w),
        None => Ok(()),
    }
}
