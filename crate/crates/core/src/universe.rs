//! Universes of separations: finite lattices with an order-reversing
//! involution.
//!
//! Elements are addressed by opaque [`UId`]s whose meaning is backend
//! specific (a row index for tables, a bit mask for bipartitions, a packed
//! pair of vertex masks for graph separations).

use std::any::Any;
use std::collections::HashMap;
use std::fmt::Debug;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::scalar::{OrderFunction, OrderScalar};

pub type UId = u64;

pub trait Universe: Any + Debug + Send + Sync {
    fn kind(&self) -> &'static str;
    fn contains(&self, x: UId) -> bool;
    fn invert(&self, x: UId) -> UId;
    fn leq(&self, a: UId, b: UId) -> bool;
    fn meet(&self, a: UId, b: UId) -> UId;
    fn join(&self, a: UId, b: UId) -> UId;
    fn label(&self, x: UId) -> String;
    fn parse_label(&self, s: &str) -> Option<UId>;
    /// All elements, when the universe is small enough to list.
    fn elements(&self) -> Option<Vec<UId>>;
}

/// Checks the involution, order-reversal, bound and De Morgan laws on
/// `elems`. When `elems` is the whole universe this certifies a universe of
/// separations; on a subset it checks the laws restricted to that subset.
pub fn check_laws(u: &dyn Universe, elems: &[UId]) -> Result<()> {
    for &a in elems {
        let ia = u.invert(a);
        if !u.contains(ia) || u.invert(ia) != a {
            return Err(Error::input(format!("involution is not an involution at {}", u.label(a))));
        }
        if !u.leq(a, a) {
            return Err(Error::input(format!("order is not reflexive at {}", u.label(a))));
        }
    }
    for &a in elems {
        for &b in elems {
            if a != b && u.leq(a, b) && u.leq(b, a) {
                return Err(Error::input(format!(
                    "order is not antisymmetric: {} and {}",
                    u.label(a),
                    u.label(b)
                )));
            }
            if u.leq(a, b) && !u.leq(u.invert(b), u.invert(a)) {
                return Err(Error::input(format!(
                    "involution is not order-reversing on {} <= {}",
                    u.label(a),
                    u.label(b)
                )));
            }
            let m = u.meet(a, b);
            let j = u.join(a, b);
            if !(u.leq(m, a) && u.leq(m, b) && u.leq(a, j) && u.leq(b, j)) {
                return Err(Error::input(format!(
                    "meet/join of {} and {} are not bounds",
                    u.label(a),
                    u.label(b)
                )));
            }
            if u.invert(j) != u.meet(u.invert(a), u.invert(b)) {
                return Err(Error::input(format!(
                    "De Morgan fails for {} and {}",
                    u.label(a),
                    u.label(b)
                )));
            }
            for &c in elems {
                if u.leq(c, a) && u.leq(c, b) && !u.leq(c, m) {
                    return Err(Error::input(format!(
                        "meet of {} and {} is not greatest",
                        u.label(a),
                        u.label(b)
                    )));
                }
                if u.leq(a, c) && u.leq(b, c) && !u.leq(j, c) {
                    return Err(Error::input(format!(
                        "join of {} and {} is not least",
                        u.label(a),
                        u.label(b)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Explicit universe given by tables, for hand-built and adversarial
/// instances.
#[derive(Debug, Clone)]
pub struct TablePoset<W> {
    names: Vec<String>,
    by_name: HashMap<String, usize>,
    inv: Vec<usize>,
    leq: Vec<FixedBitSet>,
    meet: Vec<usize>,
    join: Vec<usize>,
    order: Option<Vec<W>>,
}

/// Raw description of a table universe, by element index.
#[derive(Debug, Clone, Default)]
pub struct TableSpec<W> {
    pub names: Vec<String>,
    pub involution: Vec<usize>,
    /// Generating pairs `a <= b`; the reflexive-transitive closure is taken.
    pub leq_pairs: Vec<(usize, usize)>,
    pub meet: Option<Vec<Vec<usize>>>,
    pub join: Option<Vec<Vec<usize>>>,
    pub order: Option<Vec<W>>,
}

impl<W: OrderScalar + 'static> TablePoset<W> {
    pub fn new(spec: TableSpec<W>) -> Result<Self> {
        let n = spec.names.len();
        if n == 0 {
            return Err(Error::input("table universe has no elements"));
        }
        let mut by_name = HashMap::new();
        for (i, name) in spec.names.iter().enumerate() {
            if by_name.insert(name.clone(), i).is_some() {
                return Err(Error::input(format!("duplicate element name {name}")));
            }
        }
        if spec.involution.len() != n || spec.involution.iter().any(|&j| j >= n) {
            return Err(Error::input("involution must map every element to an element"));
        }
        let mut leq: Vec<FixedBitSet> = (0..n)
            .map(|i| {
                let mut row = FixedBitSet::with_capacity(n);
                row.insert(i);
                row
            })
            .collect();
        for &(a, b) in &spec.leq_pairs {
            if a >= n || b >= n {
                return Err(Error::input("order pair refers to an unknown element"));
            }
            leq[a].insert(b);
        }
        // Warshall closure on rows: a <= k and k <= b imply a <= b.
        for k in 0..n {
            let row_k = leq[k].clone();
            for row in leq.iter_mut() {
                if row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        let le = |a: usize, b: usize| leq[a].contains(b);
        let table = |given: Option<Vec<Vec<usize>>>, lower: bool| -> Result<Vec<usize>> {
            let mut out = vec![0; n * n];
            if let Some(rows) = given {
                if rows.len() != n || rows.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
                    return Err(Error::input("meet/join table must be n x n over element indices"));
                }
                for a in 0..n {
                    for b in 0..n {
                        out[a * n + b] = rows[a][b];
                    }
                }
                return Ok(out);
            }
            for a in 0..n {
                for b in 0..n {
                    let bounds: Vec<usize> = (0..n)
                        .filter(|&c| if lower { le(c, a) && le(c, b) } else { le(a, c) && le(b, c) })
                        .collect();
                    let best = bounds.iter().copied().find(|&c| {
                        bounds.iter().all(|&d| if lower { le(d, c) } else { le(c, d) })
                    });
                    match best {
                        Some(c) => out[a * n + b] = c,
                        None => {
                            return Err(Error::input(format!(
                                "elements {} and {} have no {}",
                                spec.names[a],
                                spec.names[b],
                                if lower { "infimum" } else { "supremum" }
                            )))
                        }
                    }
                }
            }
            Ok(out)
        };
        let meet = table(spec.meet, true)?;
        let join = table(spec.join, false)?;
        if let Some(order) = &spec.order {
            if order.len() != n {
                return Err(Error::input("order function must assign a value to every element"));
            }
            for i in 0..n {
                if !order[i].is_non_negative() {
                    return Err(Error::input(format!("negative order at {}", spec.names[i])));
                }
                if order[i] != order[spec.involution[i]] {
                    return Err(Error::input(format!(
                        "order differs between {} and its inverse",
                        spec.names[i]
                    )));
                }
            }
        }
        let universe = TablePoset {
            names: spec.names,
            by_name,
            inv: spec.involution,
            leq,
            meet,
            join,
            order: spec.order,
        };
        let all: Vec<UId> = (0..n as UId).collect();
        check_laws(&universe, &all)?;
        Ok(universe)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn has_order(&self) -> bool {
        self.order.is_some()
    }

    pub fn order_of(&self, x: UId) -> Option<&W> {
        self.order.as_ref().map(|o| &o[x as usize])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }
}

impl<W: OrderScalar + 'static> Universe for TablePoset<W> {
    fn kind(&self) -> &'static str {
        "table"
    }

    fn contains(&self, x: UId) -> bool {
        (x as usize) < self.names.len()
    }

    fn invert(&self, x: UId) -> UId {
        self.inv[x as usize] as UId
    }

    fn leq(&self, a: UId, b: UId) -> bool {
        self.leq[a as usize].contains(b as usize)
    }

    fn meet(&self, a: UId, b: UId) -> UId {
        self.meet[a as usize * self.names.len() + b as usize] as UId
    }

    fn join(&self, a: UId, b: UId) -> UId {
        self.join[a as usize * self.names.len() + b as usize] as UId
    }

    fn label(&self, x: UId) -> String {
        self.names[x as usize].clone()
    }

    fn parse_label(&self, s: &str) -> Option<UId> {
        self.index_of(s.trim()).map(|i| i as UId)
    }

    fn elements(&self) -> Option<Vec<UId>> {
        Some((0..self.names.len() as UId).collect())
    }
}

impl<W: OrderScalar> OrderFunction for TablePoset<W> {
    type Scalar = W;

    /// Panics if the table was built without an order; check
    /// [`TablePoset::has_order`] first.
    fn order(&self, x: UId) -> W {
        self.order.as_ref().expect("table universe has no order function")[x as usize].clone()
    }
}

pub const MAX_GROUND_POINTS: usize = 24;

/// All bipartitions `(A, V \ A)` of a ground set of at most 24 points.
/// The oriented separation is identified with its first side `A`, encoded
/// as a bit mask; `A→ <= B→` iff `A ⊆ B`.
#[derive(Debug, Clone)]
pub struct BipartitionUniverse {
    points: Vec<String>,
    full: u64,
}

impl BipartitionUniverse {
    pub fn new(points: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("bipartition universe needs at least one point"));
        }
        if points.len() > MAX_GROUND_POINTS {
            return Err(Error::resource(format!(
                "ground set has {} points, cap is {MAX_GROUND_POINTS}",
                points.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &points {
            if p.is_empty() || p.contains(['|', ',']) || !seen.insert(p) {
                return Err(Error::input(format!("invalid or duplicate point name {p:?}")));
            }
        }
        let full = (1u64 << points.len()) - 1;
        Ok(BipartitionUniverse { points, full })
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn full(&self) -> UId {
        self.full
    }

    pub fn mask_of(&self, names: &[&str]) -> Option<UId> {
        let mut m = 0;
        for n in names {
            let i = self.points.iter().position(|p| p == n)?;
            m |= 1 << i;
        }
        Some(m)
    }

    fn side(&self, mask: u64) -> String {
        (0..self.points.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.points[i].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    fn parse_side(&self, s: &str) -> Option<u64> {
        let s = s.trim();
        if s.is_empty() {
            return Some(0);
        }
        let names: Vec<&str> = s.split(',').map(str::trim).collect();
        self.mask_of(&names)
    }
}

impl Universe for BipartitionUniverse {
    fn kind(&self) -> &'static str {
        "bipartition"
    }

    fn contains(&self, x: UId) -> bool {
        x & !self.full == 0
    }

    fn invert(&self, x: UId) -> UId {
        self.full ^ x
    }

    fn leq(&self, a: UId, b: UId) -> bool {
        a & !b == 0
    }

    fn meet(&self, a: UId, b: UId) -> UId {
        a & b
    }

    fn join(&self, a: UId, b: UId) -> UId {
        a | b
    }

    fn label(&self, x: UId) -> String {
        format!("{}|{}", self.side(x), self.side(self.full ^ x))
    }

    fn parse_label(&self, s: &str) -> Option<UId> {
        let (a, b) = match s.split_once('|') {
            Some(p) => p,
            None => (s, ""),
        };
        let first = self.parse_side(a)?;
        if s.contains('|') {
            let second = self.parse_side(b)?;
            if second != self.full ^ first {
                return None;
            }
        }
        Some(first)
    }

    fn elements(&self) -> Option<Vec<UId>> {
        (self.points.len() <= 16).then(|| (0..=self.full).collect())
    }
}
