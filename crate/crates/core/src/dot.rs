//! Graphviz output for S-trees and tree sets.

use crate::error::Result;
use crate::orient::{Limits, Orientation};
use crate::system::SeparationSystem;
use crate::trees::{treeset_to_stree, NestedSet, STree};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// An S-tree; edge `tail -> head` carries `α(tail, head)`.
pub fn stree_dot(s: &SeparationSystem, t: &STree) -> String {
    let mut out = String::from("digraph stree {\n");
    for v in 0..t.n_vertices {
        out.push_str(&format!("  t{v};\n"));
    }
    for e in &t.edges {
        out.push_str(&format!("  t{} -> t{} [label={}];\n", e.tail, e.head, quote(&s.label(e.label))));
    }
    out.push_str("}\n");
    out
}

/// The node tree of a regular tree set, marking the node each tangle
/// lives at.
pub fn treeset_dot(s: &SeparationSystem, n: &NestedSet, tangles: &[Orientation], limits: Limits) -> Result<String> {
    let (tree, nodes) = treeset_to_stree(s, n, limits)?;
    let mut out = String::from("digraph treeset {\n");
    for (i, node) in nodes.iter().enumerate() {
        let home = tangles.iter().position(|t| t.contains_all(node));
        let label = match home {
            Some(h) => format!("node {i} (tangle {h})"),
            None => format!("node {i}"),
        };
        out.push_str(&format!("  n{i} [label={}];\n", quote(&label)));
    }
    for e in &tree.edges {
        out.push_str(&format!("  n{} -> n{} [label={}];\n", e.tail, e.head, quote(&s.label(e.label))));
    }
    out.push_str("}\n");
    Ok(out)
}
