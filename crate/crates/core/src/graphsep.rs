//! Separations of a finite graph.
//!
//! A separation is a pair `(A, B)` of vertex sets with `A ∪ B = V` and no
//! edge between `A ∖ B` and `B ∖ A`. Its id packs `A` into the low and `B`
//! into the high 32 bits. Orientations follow the subset order, so a
//! tangle "points toward" the big side `B` of each `(A, B)` it contains.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::Isomorphism;
use crate::error::{Error, Result};
use crate::order::induced_sk;
use crate::orient::{enumerate_tangles, is_star, Limits, Orientation, StarFamily};
use crate::scalar::OrderFunction;
use crate::system::{Sep, SeparationSystem};
use crate::trees::{treeset_to_stree, NestedSet};
use crate::universe::{UId, Universe};
use crate::GraphOrder;

pub const MAX_VERTICES: usize = 20;

/// Graphs up to this size list their whole universe of separations.
const LISTABLE: usize = 8;

type Mask = u32;

fn pack(a: Mask, b: Mask) -> UId {
    a as UId | ((b as UId) << 32)
}

fn unpack(x: UId) -> (Mask, Mask) {
    (x as Mask, (x >> 32) as Mask)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    names: Vec<String>,
    adj: Vec<Mask>,
}

impl Graph {
    pub fn new(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        if names.len() > MAX_VERTICES {
            return Err(Error::resource(format!(
                "{} vertices exceed the cap of {MAX_VERTICES}",
                names.len()
            )));
        }
        let mut sorted = names.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("duplicate vertex name"));
        }
        if names.iter().any(|n| n.is_empty() || n.contains([',', '|', ' '])) {
            return Err(Error::input("vertex names must be non-empty and free of ',', '|' and spaces"));
        }
        let mut adj = vec![0; names.len()];
        for &(u, v) in edges {
            if u >= names.len() || v >= names.len() {
                return Err(Error::input(format!("edge {u}-{v} names a missing vertex")));
            }
            if u == v {
                return Err(Error::input(format!("loop at {}", names[u])));
            }
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        Ok(Graph { names, adj })
    }

    /// Vertices named by their first appearance in `edges`, then `isolated`.
    pub fn from_named_edges(edges: &[(String, String)], isolated: &[String]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let id = |n: &String, names: &mut Vec<String>| match names.iter().position(|m| m == n) {
            Some(i) => i,
            None => {
                names.push(n.clone());
                names.len() - 1
            }
        };
        let mut pairs = Vec::new();
        for (u, v) in edges {
            let a = id(u, &mut names);
            let b = id(v, &mut names);
            pairs.push((a, b));
        }
        for n in isolated {
            id(n, &mut names);
        }
        Graph::new(names, &pairs)
    }

    fn numbered(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Graph::new((0..n).map(|i| format!("v{i}")).collect(), edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph::numbered(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::numbered(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Graph::numbered(n, &edges)
    }

    /// `copies` cliques on `size` vertices sharing the single vertex `v0`.
    pub fn glued_cliques(copies: usize, size: usize) -> Result<Self> {
        let mut names = vec!["v0".to_string()];
        let mut edges = Vec::new();
        for c in 0..copies {
            let base = names.len();
            let members: Vec<usize> = std::iter::once(0).chain(base..base + size - 1).collect();
            names.extend((1..size).map(|j| format!("k{c}_{j}")));
            for (i, &u) in members.iter().enumerate() {
                for &w in &members[i + 1..] {
                    edges.push((u, w));
                }
            }
        }
        Graph::new(names, &edges)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn full(&self) -> Mask {
        if self.len() == 32 {
            Mask::MAX
        } else {
            (1 << self.len()) - 1
        }
    }

    pub fn neighbours(&self, v: usize) -> Mask {
        self.adj[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|u| (u + 1..self.len()).filter(move |&v| self.adj[u] >> v & 1 == 1).map(move |v| (u, v)))
            .collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    /// Components of the graph induced on `within`.
    pub fn components(&self, within: Mask) -> Vec<Mask> {
        let mut left = within;
        let mut out = Vec::new();
        while left != 0 {
            let mut comp = left & left.wrapping_neg();
            loop {
                let grown = comp | self.reach(comp) & within;
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            out.push(comp);
            left &= !comp;
        }
        out
    }

    fn reach(&self, set: Mask) -> Mask {
        bits(set).fold(0, |acc, v| acc | self.adj[v])
    }

    /// The induced subgraphs on `sides` together contain every vertex and
    /// every edge.
    fn sides_cover(&self, sides: &[Mask]) -> bool {
        let union = sides.iter().fold(0, |a, &b| a | b);
        if union != self.full() {
            return false;
        }
        (0..self.len()).all(|u| {
            let around = sides.iter().filter(|&&a| a >> u & 1 == 1).fold(0, |acc, &a| acc | a);
            self.adj[u] & !around == 0
        })
    }

    pub fn mask_of(&self, names: &[&str]) -> Option<Mask> {
        names.iter().try_fold(0, |acc, n| {
            self.names.iter().position(|m| m == n).map(|i| acc | 1 << i)
        })
    }

    fn side(&self, m: Mask) -> String {
        bits(m).map(|i| self.names[i].as_str()).collect::<Vec<_>>().join(",")
    }

    fn parse_side(&self, s: &str) -> Option<Mask> {
        let s = s.trim();
        if s.is_empty() {
            return Some(0);
        }
        s.split(',').try_fold(0, |acc, n| {
            self.names.iter().position(|m| m == n.trim()).map(|i| acc | 1 << i)
        })
    }
}

fn bits(m: Mask) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| m >> i & 1 == 1)
}

/// All separations of a graph, ordered by `|A ∩ B|`.
#[derive(Clone, Debug)]
pub struct GraphUniverse {
    graph: Graph,
}

impl GraphUniverse {
    pub fn new(graph: Graph) -> Self {
        GraphUniverse { graph }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn sides(x: UId) -> (Mask, Mask) {
        unpack(x)
    }

    pub fn separation(&self, a: Mask, b: Mask) -> Option<UId> {
        let x = pack(a, b);
        self.contains(x).then_some(x)
    }

    /// Every separation with separator `x` of size below `k`, as the
    /// distributions of the components of `G - X` between the two sides.
    pub fn separations_below(&self, k: usize) -> Result<Vec<UId>> {
        let g = &self.graph;
        let n = g.len();
        let seps: Vec<Mask> = (0..=g.full()).filter(|&x| (x.count_ones() as usize) < k).collect();
        let parts: Vec<Result<Vec<UId>>> = seps
            .par_iter()
            .map(|&x| {
                let comps = g.components(g.full() & !x);
                if comps.len() > 16 {
                    return Err(Error::resource(format!(
                        "separator {{{}}} leaves {} components",
                        g.side(x),
                        comps.len()
                    )));
                }
                Ok((0u32..1 << comps.len())
                    .map(|choice| {
                        let a = comps
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| choice >> i & 1 == 1)
                            .fold(x, |acc, (_, &c)| acc | c);
                        let b = (g.full() & !a) | x;
                        pack(a, b)
                    })
                    .collect())
            })
            .collect();
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
            if out.len() > crate::system::MAX_FRAME {
                return Err(Error::resource(format!(
                    "more than {} separations of order below {k} on {n} vertices",
                    crate::system::MAX_FRAME
                )));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

impl Universe for GraphUniverse {
    fn kind(&self) -> &'static str {
        "graph"
    }

    fn contains(&self, x: UId) -> bool {
        let (a, b) = unpack(x);
        let full = self.graph.full();
        if x >> 32 >> self.graph.len() != 0 || a & !full != 0 || a | b != full {
            return false;
        }
        let (only_a, only_b) = (a & !b, b & !a);
        bits(only_a).all(|v| self.graph.adj[v] & only_b == 0)
    }

    fn invert(&self, x: UId) -> UId {
        let (a, b) = unpack(x);
        pack(b, a)
    }

    fn leq(&self, x: UId, y: UId) -> bool {
        let ((a, b), (c, d)) = (unpack(x), unpack(y));
        a & !c == 0 && d & !b == 0
    }

    fn meet(&self, x: UId, y: UId) -> UId {
        let ((a, b), (c, d)) = (unpack(x), unpack(y));
        pack(a & c, b | d)
    }

    fn join(&self, x: UId, y: UId) -> UId {
        let ((a, b), (c, d)) = (unpack(x), unpack(y));
        pack(a | c, b & d)
    }

    fn label(&self, x: UId) -> String {
        let (a, b) = unpack(x);
        format!("{}|{}", self.graph.side(a), self.graph.side(b))
    }

    fn parse_label(&self, s: &str) -> Option<UId> {
        let (a, b) = s.split_once('|')?;
        let x = pack(self.graph.parse_side(a)?, self.graph.parse_side(b)?);
        self.contains(x).then_some(x)
    }

    fn elements(&self) -> Option<Vec<UId>> {
        (self.graph.len() <= LISTABLE)
            .then(|| self.separations_below(self.graph.len() + 1).ok())
            .flatten()
    }
}

impl OrderFunction for GraphUniverse {
    type Scalar = GraphOrder;

    fn order(&self, x: UId) -> GraphOrder {
        let (a, b) = unpack(x);
        (a & b).count_ones()
    }
}

/// `S_k(G)`: separations of order less than `k`.
pub fn build_sk(g: &Graph, k: usize) -> Result<SeparationSystem> {
    let u = Arc::new(GraphUniverse::new(g.clone()));
    let elems = u.separations_below(k)?;
    let k = GraphOrder::try_from(k).map_err(|_| Error::input("k is too large"))?;
    induced_sk(u.clone(), u.as_ref(), &elems, k)
}

/// The graph universe underlying a system built by [`build_sk`].
pub fn graph_of(s: &SeparationSystem) -> Result<&GraphUniverse> {
    let u: &dyn std::any::Any = s.universe().as_ref();
    u.downcast_ref::<GraphUniverse>()
        .ok_or_else(|| Error::input("system is not built from a graph"))
}

/// Stars of at most three separations whose small sides cover `G`, with
/// the singletons of co-small and co-trivial separations.
pub fn tk_star(s: &SeparationSystem) -> Result<StarFamily> {
    let g = graph_of(s)?.graph();
    let seps = s.oriented_vec();
    let side = |x: Sep| unpack(s.uid(x)).0;
    let covering: Vec<Vec<Vec<Sep>>> = seps
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut out = Vec::new();
            if g.sides_cover(&[side(x)]) {
                out.push(vec![x]);
            }
            for (j, &y) in seps.iter().enumerate().skip(i + 1) {
                if !is_star(s, &[x, y]) {
                    continue;
                }
                if g.sides_cover(&[side(x), side(y)]) {
                    out.push(vec![x, y]);
                }
                for &z in &seps[j + 1..] {
                    if is_star(s, &[x, y, z]) && g.sides_cover(&[side(x), side(y), side(z)]) {
                        out.push(vec![x, y, z]);
                    }
                }
            }
            out
        })
        .collect();
    let singles: Vec<Sep> = s
        .oriented()
        .filter(|&x| s.is_trivial(x) || (s.is_small(x) && !s.is_degenerate(x)))
        .map(|x| s.inv(x))
        .collect();
    Ok(StarFamily::new(covering.into_iter().flatten()).with_singletons(singles))
}

/// The tangles of order `k` of `g`, as `T_k^*`-tangles of `S_k(G)`.
pub fn graph_tangles(g: &Graph, k: usize, limits: Limits) -> Result<(SeparationSystem, StarFamily, Vec<Orientation>)> {
    let s = build_sk(g, k)?;
    let f = tk_star(&s)?;
    let ts = enumerate_tangles(&s, &f, limits)?;
    Ok((s, f, ts))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Part {
    pub id: usize,
    pub vertices: Vec<String>,
    /// Index of the tangle living at this node.
    pub tangle: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionEdge {
    pub from: usize,
    pub to: usize,
    pub separator: Vec<String>,
    pub separation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub parts: Vec<Part>,
    pub edges: Vec<DecompositionEdge>,
}

/// The tree-decomposition of a regular tree set: the part of a node is the
/// intersection of the big sides of its separations.
pub fn decomposition(s: &SeparationSystem, n: &NestedSet, tangles: &[Orientation], limits: Limits) -> Result<Decomposition> {
    let g = graph_of(s)?.graph();
    let (tree, nodes) = treeset_to_stree(s, n, limits)?;
    let parts: Vec<Part> = nodes
        .iter()
        .enumerate()
        .map(|(id, node)| {
            let bag = node.iter().fold(g.full(), |acc, &x| acc & unpack(s.uid(x)).1);
            Part {
                id,
                vertices: bits(bag).map(|v| g.names[v].clone()).collect(),
                tangle: tangles.iter().position(|t| t.contains_all(node)),
            }
        })
        .collect();
    let edges = tree
        .edges
        .iter()
        .map(|e| {
            let (a, b) = unpack(s.uid(e.label));
            DecompositionEdge {
                from: e.tail,
                to: e.head,
                separator: bits(a & b).map(|v| g.names[v].clone()).collect(),
                separation: s.label(e.label),
            }
        })
        .collect();
    Ok(Decomposition { parts, edges })
}

impl Decomposition {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph decomposition {\n");
        for p in &self.parts {
            let mark = p.tangle.map_or(String::new(), |t| format!(" [tangle {t}]"));
            out.push_str(&format!(
                "  p{} [label=\"{{{}}}{}\"];\n",
                p.id,
                p.vertices.join(","),
                mark
            ));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  p{} -- p{} [label=\"{}\"];\n",
                e.from,
                e.to,
                e.separator.join(",")
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Vertex permutations preserving adjacency, identity first, at most `limit`.
pub fn automorphisms(g: &Graph, limit: usize) -> Vec<Vec<usize>> {
    fn go(g: &Graph, image: &mut Vec<usize>, used: Mask, limit: usize, out: &mut Vec<Vec<usize>>) {
        if out.len() >= limit {
            return;
        }
        let v = image.len();
        if v == g.len() {
            out.push(image.clone());
            return;
        }
        for w in 0..g.len() {
            if used >> w & 1 == 1 || g.adj[v].count_ones() != g.adj[w].count_ones() {
                continue;
            }
            if (0..v).all(|u| g.has_edge(u, v) == g.has_edge(image[u], w)) {
                image.push(w);
                go(g, image, used | 1 << w, limit, out);
                image.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, &mut Vec::new(), 0, limit, &mut out);
    out
}

fn permute(perm: &[usize], m: Mask) -> Mask {
    bits(m).fold(0, |acc, v| acc | 1 << perm[v])
}

/// The map a vertex automorphism induces on `S_k(G)`.
pub fn induced_isomorphism(s: &SeparationSystem, perm: &[usize]) -> Result<Isomorphism> {
    let g = graph_of(s)?.graph();
    if perm.len() != g.len() || (0..g.len()).any(|u| (0..g.len()).any(|v| g.has_edge(u, v) != g.has_edge(perm[u], perm[v]))) {
        return Err(Error::input("not an automorphism"));
    }
    Isomorphism::new(s, s, |x| {
        let (a, b) = unpack(s.uid(x));
        s.frame().sep_of(pack(permute(perm, a), permute(perm, b))).filter(|&y| s.contains(y))
    })
}

/// Canonical JSON-friendly form of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl From<&Graph> for GraphFile {
    fn from(g: &Graph) -> Self {
        GraphFile {
            vertices: g.names.clone(),
            edges: g
                .edges()
                .into_iter()
                .map(|(u, v)| (g.names[u].clone(), g.names[v].clone()))
                .collect(),
        }
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Graph> {
        let index: BTreeMap<&str, usize> = f.vertices.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut edges = Vec::new();
        for (u, v) in &f.edges {
            match (index.get(u.as_str()), index.get(v.as_str())) {
                (Some(&a), Some(&b)) => edges.push((a, b)),
                _ => return Err(Error::input(format!("edge {u}-{v} names a missing vertex"))),
            }
        }
        Graph::new(f.vertices, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::check_order_submodular;
    use crate::orient::oracle_tangles;

    fn count(g: &Graph, k: usize) -> usize {
        graph_tangles(g, k, Limits::default()).unwrap().2.len()
    }

    #[test]
    fn path_separations() {
        let g = Graph::path(3).unwrap();
        let s = build_sk(&g, 2).unwrap();
        assert!(s.parse("v0,v1|v1,v2").is_ok());
        assert!(s.parse("v1|v0,v1,v2").is_ok());
        let u = graph_of(&s).unwrap();
        assert!(s.oriented().all(|x| u.order(s.uid(x)) <= 1));
        assert!(s.is_submodular().is_ok());
    }

    #[test]
    fn order_zero_on_connected_graph() {
        let s = build_sk(&Graph::cycle(5).unwrap(), 1).unwrap();
        let mut got = s.labels(&s.oriented_vec());
        got.sort();
        assert_eq!(got, vec!["v0,v1,v2,v3,v4|", "|v0,v1,v2,v3,v4"]);
    }

    #[test]
    fn small_universe_obeys_laws() {
        let g = Graph::path(4).unwrap();
        let u = GraphUniverse::new(g);
        let all = u.elements().unwrap();
        crate::universe::check_laws(&u, &all).unwrap();
        assert!(check_order_submodular(&u, &u, &all).is_ok());
        for &x in &all {
            assert_eq!(u.parse_label(&u.label(x)), Some(x));
        }
    }

    #[test]
    fn small_tangle_counts_match_oracle() {
        let cases = [
            (Graph::path(3).unwrap(), 2),
            (Graph::cycle(5).unwrap(), 2),
            (Graph::complete(4).unwrap(), 2),
            (Graph::new(vec!["a".into(), "b".into(), "c".into()], &[]).unwrap(), 1),
        ];
        for (g, k) in cases {
            let (s, f, ts) = graph_tangles(&g, k, Limits::default()).unwrap();
            assert_eq!(ts, oracle_tangles(&s, &f).unwrap(), "{:?}", g.names());
        }
        assert_eq!(count(&Graph::cycle(5).unwrap(), 2), 1);
        assert_eq!(count(&Graph::path(3).unwrap(), 2), 2);
    }

    #[test]
    fn clique_has_one_tangle() {
        assert_eq!(count(&Graph::complete(6).unwrap(), 3), 1);
    }

    #[test]
    fn tripod_has_three_tangles() {
        let g = Graph::glued_cliques(3, 5).unwrap();
        let (s, _, ts) = graph_tangles(&g, 3, Limits::default()).unwrap();
        assert!(s.is_submodular().is_ok());
        assert_eq!(ts.len(), 3);
    }

    #[test]
    fn empty_tree_set_is_one_part() {
        let g = Graph::path(3).unwrap();
        let s = build_sk(&g, 2).unwrap();
        let d = decomposition(&s, &NestedSet::empty(), &[], Limits::default()).unwrap();
        assert_eq!(d.parts.len(), 1);
        assert_eq!(d.parts[0].vertices, g.names());
        let x = s.parse("v0,v1|v1,v2").unwrap();
        let d = decomposition(&s, &NestedSet::new(&s, &[x]).unwrap(), &[], Limits::default()).unwrap();
        let mut parts: Vec<_> = d.parts.iter().map(|p| p.vertices.join(",")).collect();
        parts.sort();
        assert_eq!(parts, vec!["v0,v1", "v1,v2"]);
        assert!(d.to_dot().contains("p0 -- p1") || d.to_dot().contains("p1 -- p0"));
    }

    #[test]
    fn clique_automorphisms() {
        assert_eq!(automorphisms(&Graph::complete(4).unwrap(), 100).len(), 24);
        assert_eq!(automorphisms(&Graph::cycle(5).unwrap(), 100).len(), 10);
        let g = Graph::path(3).unwrap();
        let s = build_sk(&g, 2).unwrap();
        for p in automorphisms(&g, 10) {
            let phi = induced_isomorphism(&s, &p).unwrap();
            assert!(phi.is_lattice_compatible(&s, &s));
        }
    }
}

#[cfg(test)]
mod pipeline {
    use super::*;
    use crate::canonical::refined_canonical;
    use crate::refine::NodeKind;

    #[test]
    fn tripod_refines() {
        let g = Graph::glued_cliques(3, 5).unwrap();
        let s = build_sk(&g, 3).unwrap();
        let f = tk_star(&s).unwrap();
        let r = refined_canonical(&s, &f, Limits::default()).unwrap();
        assert_eq!(s.len_unoriented(), 131);
        assert_eq!(r.tangles.len(), 3);
        assert_eq!(r.canonical.nested.len(), 3);
        assert_eq!(r.inessential_in_canonical, 1);
        assert!(r.refinement.classes.iter().all(|c| c.kind != NodeKind::Unaccounted));
    }
}
