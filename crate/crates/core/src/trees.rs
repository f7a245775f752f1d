//! Nested sets, tree sets and `S`-trees.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orient::{consistent_orientations, is_consistent, maximal_elements, Limits, Orientation, StarFamily};
use crate::system::{Sep, SeparationSystem};

/// Canonical keys of `seps`, sorted and deduplicated.
pub fn keys_of(s: &SeparationSystem, seps: &[Sep]) -> Vec<Sep> {
    let mut v: Vec<Sep> = seps.iter().map(|&x| s.key(x)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Both orientations of every member of `n`.
pub fn oriented_members(s: &SeparationSystem, n: &[Sep]) -> Vec<Sep> {
    let mut v: Vec<Sep> = n.iter().flat_map(|&x| [x, s.inv(x)]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// A pairwise nested set of unoriented separations, stored by key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NestedSet {
    seps: Vec<Sep>,
}

impl NestedSet {
    pub fn new(s: &SeparationSystem, seps: &[Sep]) -> Result<Self> {
        for &x in seps {
            s.check_member(x)?;
        }
        let seps = keys_of(s, seps);
        if let Err((a, b)) = s.is_nested_set(&seps) {
            return Err(Error::input(format!("{} and {} cross", s.label(a), s.label(b))));
        }
        Ok(NestedSet { seps })
    }

    pub fn empty() -> Self {
        NestedSet { seps: Vec::new() }
    }

    pub fn seps(&self) -> &[Sep] {
        &self.seps
    }

    pub fn len(&self) -> usize {
        self.seps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seps.is_empty()
    }

    pub fn contains(&self, s: &SeparationSystem, x: Sep) -> bool {
        self.seps.binary_search(&s.key(x)).is_ok()
    }

    pub fn union(&self, s: &SeparationSystem, other: &[Sep]) -> Result<NestedSet> {
        let mut all = self.seps.clone();
        all.extend_from_slice(other);
        NestedSet::new(s, &all)
    }

    pub fn is_superset_of(&self, other: &NestedSet) -> bool {
        other.seps.iter().all(|x| self.seps.binary_search(x).is_ok())
    }

    pub fn oriented(&self, s: &SeparationSystem) -> Vec<Sep> {
        oriented_members(s, &self.seps)
    }

    /// The members as a separation system of their own.
    pub fn as_system(&self, s: &SeparationSystem) -> SeparationSystem {
        SeparationSystem::from_seps(s.frame().clone(), &self.seps)
    }

    pub fn labels(&self, s: &SeparationSystem) -> Vec<String> {
        s.labels(&self.seps)
    }

    /// Image under a map of oriented ids.
    pub fn map(&self, s: &SeparationSystem, f: impl Fn(Sep) -> Sep) -> NestedSet {
        NestedSet {
            seps: keys_of(s, &self.seps.iter().map(|&x| f(x)).collect::<Vec<_>>()),
        }
    }
}

/// Trivial within `N⃗`: some `r ∈ N⃗` with `x < r` and `x < r̄`.
pub(crate) fn trivial_in(s: &SeparationSystem, oriented: &[Sep], x: Sep) -> bool {
    oriented
        .iter()
        .any(|&r| s.key(r) != s.key(x) && s.lt(x, r) && s.lt(x, s.inv(r)))
}

/// Checks that `n` is a tree set (no degenerate or trivial members) and,
/// when `regular`, that it has no small members.
pub fn check_tree_set(s: &SeparationSystem, n: &NestedSet, regular: bool) -> Result<()> {
    let oriented = n.oriented(s);
    for &x in &oriented {
        if s.is_degenerate(x) {
            return Err(Error::input(format!("{} is degenerate", s.label(x))));
        }
        if trivial_in(s, &oriented, x) {
            return Err(Error::input(format!("{} is trivial in the nested set", s.label(x))));
        }
        if regular && s.is_small(x) {
            return Err(Error::input(format!("{} is small", s.label(x))));
        }
    }
    Ok(())
}

pub fn is_regular_tree_set(s: &SeparationSystem, n: &NestedSet) -> bool {
    check_tree_set(s, n, true).is_ok()
}

/// The nodes of `n`: the sets of maximal elements of its consistent
/// orientations, sorted and deduplicated.
pub fn nodes_of(s: &SeparationSystem, n: &NestedSet, limits: Limits) -> Result<Vec<Vec<Sep>>> {
    let sys = n.as_system(s);
    let mut nodes: Vec<Vec<Sep>> = consistent_orientations(&sys, limits)?
        .iter()
        .map(|o| {
            let mut m = maximal_elements(&sys, o.seps());
            m.sort_unstable();
            m
        })
        .collect();
    nodes.sort();
    nodes.dedup();
    Ok(nodes)
}

/// The node of a regular tree set at which a consistent orientation lives.
pub fn lives_at(s: &SeparationSystem, o: &Orientation, n: &NestedSet) -> Result<Vec<Sep>> {
    if let Err((a, b)) = is_consistent(s, o.seps()) {
        return Err(Error::input(format!(
            "orientation is inconsistent at {} / {}",
            s.label(a),
            s.label(b)
        )));
    }
    if !is_regular_tree_set(s, n) {
        return Err(Error::domain("home node is only unique for regular tree sets"));
    }
    let sys = n.as_system(s);
    let restricted = o.restrict(&sys);
    if !restricted.is_orientation_of(&sys) {
        return Err(Error::input("orientation does not orient every member of the nested set"));
    }
    let mut m = maximal_elements(&sys, restricted.seps());
    m.sort_unstable();
    Ok(m)
}

/// For each node, the index of an orientation in `os` living there.
pub fn essential_nodes(nodes: &[Vec<Sep>], os: &[Orientation]) -> Vec<Option<usize>> {
    nodes
        .iter()
        .map(|sigma| os.iter().position(|o| o.contains_all(sigma)))
        .collect()
}

/// An edge with `α(tail, head) = label`; the reverse direction carries the
/// inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TreeEdge {
    pub tail: usize,
    pub head: usize,
    pub label: Sep,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct STree {
    pub n_vertices: usize,
    pub edges: Vec<TreeEdge>,
}

/// `(neighbour, α(v, neighbour), α(neighbour, v))`.
pub type Adjacency = Vec<Vec<(usize, Sep, Sep)>>;

impl STree {
    pub fn single_vertex() -> Self {
        STree {
            n_vertices: 1,
            edges: Vec::new(),
        }
    }

    pub fn single_edge(label: Sep) -> Self {
        STree {
            n_vertices: 2,
            edges: vec![TreeEdge { tail: 0, head: 1, label }],
        }
    }

    pub fn adjacency(&self, s: &SeparationSystem) -> Adjacency {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for e in &self.edges {
            adj[e.tail].push((e.head, e.label, s.inv(e.label)));
            adj[e.head].push((e.tail, s.inv(e.label), e.label));
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        adj
    }

    /// `α(u, v)` for adjacent `u, v`.
    pub fn alpha(&self, s: &SeparationSystem, u: usize, v: usize) -> Option<Sep> {
        self.edges.iter().find_map(|e| {
            if e.tail == u && e.head == v {
                Some(e.label)
            } else if e.tail == v && e.head == u {
                Some(s.inv(e.label))
            } else {
                None
            }
        })
    }

    /// The star `σ_t = { α(t', t) }` at every vertex, as sorted sets.
    pub fn stars(&self, s: &SeparationSystem) -> Vec<Vec<Sep>> {
        self.adjacency(s)
            .into_iter()
            .map(|nb| {
                let mut v: Vec<Sep> = nb.into_iter().map(|(_, _, inward)| inward).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.tail == v || e.head == v).count()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n_vertices)
            .filter(|&v| self.n_vertices > 1 && self.degree(v) == 1)
            .collect()
    }

    pub fn is_tree(&self) -> bool {
        if self.n_vertices == 0 || self.edges.len() + 1 != self.n_vertices {
            return false;
        }
        if self.edges.iter().any(|e| e.tail >= self.n_vertices || e.head >= self.n_vertices) {
            return false;
        }
        let mut seen = vec![false; self.n_vertices];
        let mut adj = vec![Vec::new(); self.n_vertices];
        for e in &self.edges {
            adj[e.tail].push(e.head);
            adj[e.head].push(e.tail);
        }
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().all(|&b| b)
    }

    /// Distances between all pairs of vertices.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        let n = self.n_vertices;
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.tail].push(e.head);
            adj[e.head].push(e.tail);
        }
        (0..n)
            .map(|src| {
                let mut d = vec![usize::MAX; n];
                d[src] = 0;
                let mut queue = VecDeque::from([src]);
                while let Some(v) = queue.pop_front() {
                    for &w in &adj[v] {
                        if d[w] == usize::MAX {
                            d[w] = d[v] + 1;
                            queue.push_back(w);
                        }
                    }
                }
                d
            })
            .collect()
    }

    /// The vertices on `from`'s side after deleting the edge `from`–`away`.
    pub fn branch(&self, from: usize, away: usize) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for e in &self.edges {
            adj[e.tail].push(e.head);
            adj[e.head].push(e.tail);
        }
        let mut seen = vec![false; self.n_vertices];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] && !(v == from && w == away) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// The subtree on `keep` (which must induce a subtree), plus `extra`
    /// edges given in old vertex numbers, renumbered densely.
    pub fn rebuild(&self, keep: &[bool], extra: &[TreeEdge]) -> STree {
        let mut new_id = vec![usize::MAX; self.n_vertices];
        let mut count = 0;
        for v in 0..self.n_vertices {
            if keep[v] {
                new_id[v] = count;
                count += 1;
            }
        }
        let mut edges: Vec<TreeEdge> = self
            .edges
            .iter()
            .chain(extra.iter())
            .filter(|e| keep[e.tail] && keep[e.head])
            .map(|e| TreeEdge {
                tail: new_id[e.tail],
                head: new_id[e.head],
                label: e.label,
            })
            .collect();
        edges.sort_unstable();
        STree {
            n_vertices: count,
            edges,
        }
    }

    /// Applies `f` to every label (both directions follow since the
    /// reverse label is always the inverse).
    pub fn relabel(&self, f: impl Fn(Sep) -> Sep) -> STree {
        STree {
            n_vertices: self.n_vertices,
            edges: self
                .edges
                .iter()
                .map(|e| TreeEdge {
                    label: f(e.label),
                    ..*e
                })
                .collect(),
        }
    }

    /// Oriented edge labels pointing from each leaf to its neighbour.
    pub fn leaf_separations(&self, s: &SeparationSystem) -> Vec<Sep> {
        let adj = self.adjacency(s);
        let mut out: Vec<Sep> = self
            .leaves()
            .into_iter()
            .map(|l| adj[l][0].1)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `(leaf, neighbour)` pairs whose leaf separation is `x`.
    pub fn leaves_with(&self, s: &SeparationSystem, x: Sep) -> Vec<(usize, usize)> {
        let adj = self.adjacency(s);
        self.leaves()
            .into_iter()
            .filter(|&l| adj[l][0].1 == x)
            .map(|l| (l, adj[l][0].0))
            .collect()
    }

    /// Number of edges whose label (in either direction) is `x`.
    pub fn label_count(&self, s: &SeparationSystem, x: Sep) -> usize {
        self.edges
            .iter()
            .filter(|e| e.label == x || s.inv(e.label) == x)
            .count()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TreeReport {
    pub is_stree: bool,
    pub over_f: Option<bool>,
    pub irredundant: bool,
    pub tight: bool,
    pub order_preserving: bool,
    pub witnesses: Vec<String>,
}

impl TreeReport {
    pub fn all_ok(&self) -> bool {
        self.is_stree && self.over_f != Some(false) && self.irredundant && self.tight && self.order_preserving
    }
}

pub fn stree_validate(s: &SeparationSystem, t: &STree, f: Option<&StarFamily>) -> TreeReport {
    let mut rep = TreeReport {
        is_stree: t.is_tree() && t.edges.iter().all(|e| s.contains(e.label)),
        ..Default::default()
    };
    if !rep.is_stree {
        rep.witnesses.push("not a tree labelled in S".into());
        return rep;
    }
    let adj = t.adjacency(s);
    let stars = t.stars(s);
    if let Some(f) = f {
        let bad = stars.iter().position(|st| !f.contains(st));
        rep.over_f = Some(bad.is_none());
        if let Some(v) = bad {
            rep.witnesses.push(format!("star at vertex {v} not in F: {:?}", s.labels(&stars[v])));
        }
    }
    rep.irredundant = true;
    for (v, nb) in adj.iter().enumerate() {
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                if nb[i].1 == nb[j].1 {
                    rep.irredundant = false;
                    rep.witnesses.push(format!(
                        "vertex {v} has two neighbours with label {}",
                        s.label(nb[i].1)
                    ));
                }
            }
        }
    }
    rep.tight = true;
    for (v, st) in stars.iter().enumerate() {
        if let Some(&x) = st.iter().find(|&&x| !s.is_degenerate(x) && st.contains(&s.inv(x))) {
            rep.tight = false;
            rep.witnesses.push(format!("star at vertex {v} contains both orientations of {}", s.label(x)));
        }
    }
    rep.order_preserving = true;
    let d = t.distances();
    let oriented: Vec<(usize, usize, Sep)> = t
        .edges
        .iter()
        .flat_map(|e| [(e.tail, e.head, e.label), (e.head, e.tail, s.inv(e.label))])
        .collect();
    'outer: for &(a, b, x) in &oriented {
        for &(c, e, y) in &oriented {
            let distinct = !(a == c && b == e || a == e && b == c);
            // (a,b) < (c,e): the path from a to e runs through b and c.
            if distinct && d[a][e] == d[b][c] + 2 && !s.leq(x, y) {
                rep.order_preserving = false;
                rep.witnesses.push(format!(
                    "edge order not preserved: {} vs {}",
                    s.label(x),
                    s.label(y)
                ));
                break 'outer;
            }
        }
    }
    rep
}

/// The tree of a tree set: one vertex per node, one edge per
/// separation, labelled toward the node containing the label.
pub fn treeset_to_stree(s: &SeparationSystem, n: &NestedSet, limits: Limits) -> Result<(STree, Vec<Vec<Sep>>)> {
    check_tree_set(s, n, false)?;
    let nodes = nodes_of(s, n, limits)?;
    let mut home: BTreeMap<Sep, usize> = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        for &x in node {
            if home.insert(x, i).is_some() {
                return Err(Error::integrity(format!("{} lies in two nodes", s.label(x))));
            }
        }
    }
    let mut edges = Vec::new();
    for &k in n.seps() {
        let (Some(&h), Some(&t)) = (home.get(&k), home.get(&s.inv(k))) else {
            return Err(Error::integrity(format!("{} lies in no node", s.label(k))));
        };
        edges.push(TreeEdge {
            tail: t,
            head: h,
            label: k,
        });
    }
    edges.sort_unstable();
    let tree = STree {
        n_vertices: nodes.len(),
        edges,
    };
    if !tree.is_tree() {
        return Err(Error::integrity("node graph of a tree set is not a tree"));
    }
    Ok((tree, nodes))
}

/// `im(α)` as a nested set; rejects degenerate or trivial labels.
pub fn stree_to_treeset(s: &SeparationSystem, t: &STree) -> Result<NestedSet> {
    let labels: Vec<Sep> = t.edges.iter().map(|e| e.label).collect();
    let oriented = oriented_members(s, &labels);
    for e in &t.edges {
        if s.is_degenerate(e.label) || trivial_in(s, &oriented, e.label) || trivial_in(s, &oriented, s.inv(e.label)) {
            return Err(Error::domain(format!(
                "edge {}-{} carries a trivial or degenerate label {}",
                e.tail,
                e.head,
                s.label(e.label)
            )));
        }
    }
    NestedSet::new(s, &labels).map_err(|e| Error::domain(e.to_string()))
}

/// The union of `S`-tree images as a nested set, without tree-set checks.
pub fn image_of(s: &SeparationSystem, t: &STree) -> Vec<Sep> {
    keys_of(s, &t.edges.iter().map(|e| e.label).collect::<Vec<_>>())
}

fn keep_leaves_in(t: &STree, s: &SeparationSystem, side: &[bool], keep: &[Sep]) -> Vec<Sep> {
    let adj = t.adjacency(s);
    let mut found: Vec<Sep> = t
        .leaves()
        .into_iter()
        .filter(|&l| side[l] && keep.contains(&adj[l][0].1))
        .map(|l| adj[l][0].1)
        .collect();
    found.sort_unstable();
    found.dedup();
    found
}

/// Removes redundancy and non-tightness while keeping every separation of
/// `keep` as a leaf separation. Each step deletes at least one vertex and
/// preserves every remaining star, so the result is over any family the
/// input was over.
pub fn irredundant_reduction(s: &SeparationSystem, t: &STree, keep: &[Sep]) -> Result<STree> {
    for &k in keep {
        if !t.leaf_separations(s).contains(&k) {
            return Err(Error::domain(format!("{} is not a leaf separation", s.label(k))));
        }
    }
    let mut t = t.clone();
    'again: loop {
        let adj = t.adjacency(s);
        // Redundancy: two neighbours of v reached by the same label. The
        // two branches look alike from v; drop one whose kept leaves are
        // also present elsewhere.
        for (v, nb) in adj.iter().enumerate() {
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    if nb[i].1 != nb[j].1 {
                        continue;
                    }
                    for drop in [nb[j].0, nb[i].0] {
                        let side = t.branch(drop, v);
                        let rest: Vec<bool> = side.iter().map(|&b| !b).collect();
                        let lost = keep_leaves_in(&t, s, &side, keep);
                        let after = t.rebuild(&rest, &[]);
                        let kept = after.leaf_separations(s);
                        if lost.iter().all(|k| kept.contains(k)) && after.is_tree() {
                            t = normalize(after);
                            continue 'again;
                        }
                    }
                    return Err(Error::domain(format!(
                        "cannot remove redundancy at label {} without losing a kept leaf",
                        s.label(nb[i].1)
                    )));
                }
            }
        }
        // Tightness: v's star holds z = α(u, v) and z̄ = α(w, v). Join the
        // branches at u and w directly by an edge labelled α(u, w) = z.
        for (v, nb) in adj.iter().enumerate() {
            for &(u, _, z) in nb {
                if s.is_degenerate(z) {
                    continue;
                }
                if let Some(&(w, _, _)) = nb.iter().find(|&&(w, _, zz)| w != u && zz == s.inv(z)) {
                    let bu = t.branch(u, v);
                    let bw = t.branch(w, v);
                    let keep_mask: Vec<bool> = bu.iter().zip(&bw).map(|(&a, &b)| a || b).collect();
                    let after = t.rebuild(&keep_mask, &[TreeEdge { tail: u, head: w, label: z }]);
                    let kept = after.leaf_separations(s);
                    if let Some(&k) = keep.iter().find(|k| !kept.contains(k)) {
                        return Err(Error::domain(format!(
                            "tightening at vertex {v} loses kept leaf {}",
                            s.label(k)
                        )));
                    }
                    t = normalize(after);
                    continue 'again;
                }
            }
        }
        return Ok(t);
    }
}

/// Sorts the edge list; vertex numbering is left alone.
pub fn normalize(mut t: STree) -> STree {
    t.edges.sort_unstable();
    t
}
