//! Instance and family files.
//!
//! Instances are JSON objects (a table universe, a bipartition universe or
//! a graph) or plain edge lists with one `u v` pair per line.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graphsep::{build_sk, Graph, GraphFile, GraphUniverse};
use crate::order::{check_order_submodular, check_order_symmetric, induced_sk};
use crate::orient::{Orientation, StarFamily};
use crate::system::{Frame, Sep, SeparationSystem};
use crate::universe::{BipartitionUniverse, TableSpec, Universe};
use crate::{Order, RationalTable};

/// An element named either by index or by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Text(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub elements: Vec<String>,
    pub involution: Vec<Ref>,
    #[serde(default)]
    pub leq_pairs: Vec<(Ref, Ref)>,
    #[serde(default)]
    pub meet: Option<Vec<Vec<Ref>>>,
    #[serde(default)]
    pub join: Option<Vec<Vec<Ref>>>,
    #[serde(default)]
    pub order: Option<Vec<Scalar>>,
    /// Restricts the system to these elements and their inverses.
    #[serde(default)]
    pub members: Option<Vec<Ref>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeparationList {
    All(String),
    Sides(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartitionFile {
    pub ground_set: Vec<String>,
    pub separations: SeparationList,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub stars: Vec<Vec<Ref>>,
}

#[derive(Clone, Debug)]
pub enum Source {
    Table(Arc<RationalTable>),
    Bipartition(Arc<BipartitionUniverse>),
    Graph(Graph),
}

/// A loaded instance and the system it describes.
#[derive(Clone, Debug)]
pub struct Instance {
    pub source: Source,
    pub system: SeparationSystem,
    /// Order submodularity and symmetry, when the instance has an order.
    pub order_check: Option<std::result::Result<(), String>>,
}

impl Instance {
    pub fn graph(&self) -> Option<&Graph> {
        match &self.source {
            Source::Graph(g) => Some(g),
            _ => None,
        }
    }
}

fn resolve(names: &[String], r: &Ref) -> Result<usize> {
    match r {
        Ref::Index(i) if *i < names.len() => Ok(*i),
        Ref::Index(i) => Err(Error::input(format!("element index {i} out of range"))),
        Ref::Name(n) => names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| Error::input(format!("unknown element {n:?}"))),
    }
}

fn scalar(v: &Scalar) -> Result<Order> {
    match v {
        Scalar::Int(i) => Ok(Order::from_integer(*i)),
        Scalar::Text(t) => Order::from_str(t.trim()).map_err(|_| Error::input(format!("bad order value {t:?}"))),
    }
}

fn table(file: &TableFile) -> Result<RationalTable> {
    let names = &file.elements;
    let table = |t: &Option<Vec<Vec<Ref>>>| -> Result<Option<Vec<Vec<usize>>>> {
        t.as_ref()
            .map(|rows| {
                rows.iter()
                    .map(|row| row.iter().map(|r| resolve(names, r)).collect())
                    .collect()
            })
            .transpose()
    };
    let spec = TableSpec {
        names: names.clone(),
        involution: file.involution.iter().map(|r| resolve(names, r)).collect::<Result<_>>()?,
        leq_pairs: file
            .leq_pairs
            .iter()
            .map(|(a, b)| Ok((resolve(names, a)?, resolve(names, b)?)))
            .collect::<Result<_>>()?,
        meet: table(&file.meet)?,
        join: table(&file.join)?,
        order: file
            .order
            .as_ref()
            .map(|o| o.iter().map(scalar).collect::<Result<Vec<_>>>())
            .transpose()?,
    };
    RationalTable::new(spec)
}

/// Parses an edge list: one `u v` per line, a lone name for an isolated
/// vertex, `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut isolated = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] => {}
            [v] => isolated.push(v.to_string()),
            [u, v] => edges.push((u.to_string(), v.to_string())),
            _ => return Err(Error::Parse(format!("line {}: expected `u v`", no + 1))),
        }
    }
    Graph::from_named_edges(&edges, &isolated)
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let names = g.names();
    let mut touched = vec![false; g.len()];
    for (u, v) in g.edges() {
        touched[u] = true;
        touched[v] = true;
        out.push_str(&format!("{} {}\n", names[u], names[v]));
    }
    for (v, t) in touched.iter().enumerate() {
        if !t {
            out.push_str(&format!("{}\n", names[v]));
        }
    }
    out
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Parses an instance from text; `k` selects `S_k` where an order exists.
pub fn parse_instance(text: &str, k: Option<usize>) -> Result<Instance> {
    let trimmed = text.trim_start();
    if !trimmed.starts_with('{') {
        let g = parse_edge_list(text)?;
        return graph_instance(g, k);
    }
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if v.get("ground_set").is_some() {
        let f: BipartitionFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
        bipartition_instance(&f, k)
    } else if v.get("involution").is_some() {
        let f: TableFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
        table_instance(&f, k)
    } else if v.get("edges").is_some() {
        let f: GraphFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
        graph_instance(Graph::try_from(f)?, k)
    } else {
        Err(Error::Parse(
            "expected a table (`involution`), bipartition (`ground_set`) or graph (`edges`) object".into(),
        ))
    }
}

pub fn load_instance(path: &Path, k: Option<usize>) -> Result<Instance> {
    parse_instance(&read(path)?, k)
}

fn graph_instance(g: Graph, k: Option<usize>) -> Result<Instance> {
    let k = k.ok_or_else(|| Error::input("graph instances need --k"))?;
    if k == 0 {
        return Err(Error::input("k must be positive"));
    }
    let system = build_sk(&g, k)?;
    let u = GraphUniverse::new(g.clone());
    let elems: Vec<_> = system.oriented().map(|x| system.uid(x)).collect();
    let order_check = Some(
        check_order_submodular(&u, &u, &elems)
            .map_err(|(a, b)| format!("order is not submodular at {} and {}", u.label(a), u.label(b))),
    );
    Ok(Instance {
        source: Source::Graph(g),
        system,
        order_check,
    })
}

fn table_instance(f: &TableFile, k: Option<usize>) -> Result<Instance> {
    let t = Arc::new(table(f)?);
    let all = t.elements().unwrap_or_default();
    let mut order_check = None;
    let mut system = match k {
        Some(k) if t.has_order() => {
            check_order_symmetric(t.as_ref(), t.as_ref(), &all)?;
            order_check = Some(
                check_order_submodular(t.as_ref(), t.as_ref(), &all)
                    .map_err(|(a, b)| format!("order is not submodular at {} and {}", t.label(a), t.label(b))),
            );
            let k = i64::try_from(k).map_err(|_| Error::input("k is too large"))?;
            induced_sk(t.clone(), t.as_ref(), &all, Order::from_integer(k))?
        }
        Some(_) => return Err(Error::input("--k needs an order in the table file")),
        None => SeparationSystem::whole_universe(t.clone())?,
    };
    if let Some(members) = &f.members {
        let keep: Vec<Sep> = members
            .iter()
            .map(|r| {
                let i = resolve(&f.elements, r)?;
                system
                    .sep_of(i as u64)
                    .ok_or_else(|| Error::input(format!("{} lies outside the system", f.elements[i])))
            })
            .collect::<Result<_>>()?;
        system = system.subsystem(|x| keep.contains(&x) || keep.contains(&system.inv(x)));
    }
    Ok(Instance {
        source: Source::Table(t),
        system,
        order_check,
    })
}

fn bipartition_instance(f: &BipartitionFile, k: Option<usize>) -> Result<Instance> {
    if k.is_some() {
        return Err(Error::input("bipartition instances carry no order; drop --k"));
    }
    let u = Arc::new(BipartitionUniverse::new(f.ground_set.clone())?);
    let system = match &f.separations {
        SeparationList::All(a) if a == "all" => SeparationSystem::whole_universe(u.clone())?,
        SeparationList::All(a) => return Err(Error::Parse(format!("separations must be \"all\" or a list, got {a:?}"))),
        SeparationList::Sides(sides) => {
            let mut uids = Vec::new();
            for side in sides {
                let names: Vec<&str> = side.iter().map(String::as_str).collect();
                uids.push(
                    u.mask_of(&names)
                        .ok_or_else(|| Error::input(format!("unknown point in {side:?}")))?,
                );
            }
            // The frame spans the whole universe when it can be listed, so
            // meets and joins outside S stay addressable.
            let frame = match u.elements() {
                Some(all) if all.len() <= crate::system::MAX_FRAME => Frame::new(u.clone(), &all)?,
                _ => Frame::new(u.clone(), &uids)?,
            };
            let mut bits = FixedBitSet::with_capacity(frame.len());
            for x in uids {
                let i = frame.sep_of(x).expect("listed in frame");
                bits.insert(i);
                bits.insert(frame.inv(i));
            }
            SeparationSystem::from_members(frame, bits)?
        }
    };
    Ok(Instance {
        source: Source::Bipartition(u),
        system,
        order_check: None,
    })
}

fn resolve_sep(s: &SeparationSystem, r: &Ref) -> Result<Sep> {
    let x = match r {
        Ref::Index(i) => *i,
        Ref::Name(n) => s.parse(n)?,
    };
    s.check_member(x)?;
    Ok(x)
}

pub fn parse_family(s: &SeparationSystem, text: &str) -> Result<StarFamily> {
    let f: FamilyFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let stars = f
        .stars
        .iter()
        .map(|set| set.iter().map(|r| resolve_sep(s, r)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(StarFamily::new(stars))
}

pub fn load_family(s: &SeparationSystem, path: &Path) -> Result<StarFamily> {
    parse_family(s, &read(path)?)
}

pub fn family_file(s: &SeparationSystem, f: &StarFamily) -> FamilyFile {
    FamilyFile {
        stars: f
            .sets()
            .iter()
            .map(|set| set.iter().map(|&x| Ref::Name(s.label(x))).collect())
            .collect(),
    }
}

/// A bipartition instance listing the first sides of `s`.
pub fn bipartition_file(s: &SeparationSystem, u: &BipartitionUniverse) -> BipartitionFile {
    let sides = s
        .unoriented()
        .into_iter()
        .map(|x| {
            let m = s.uid(x);
            u.points()
                .iter()
                .enumerate()
                .filter(|&(i, _)| m >> i & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect();
    BipartitionFile {
        ground_set: u.points().to_vec(),
        separations: SeparationList::Sides(sides),
    }
}

/// One label per separation of `s`, in id order, oriented as in `o`.
pub fn orientation_labels(s: &SeparationSystem, o: &Orientation) -> Vec<String> {
    s.unoriented()
        .into_iter()
        .map(|x| if o.contains(x) { s.label(x) } else { s.label(s.inv(x)) })
        .collect()
}
