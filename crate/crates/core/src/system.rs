//! Separation systems inside a universe.
//!
//! A [`Frame`] fixes a finite, involution-closed list of universe elements
//! and numbers them densely; the number is the canonical id used for every
//! set-valued output. A [`SeparationSystem`] is a subset of a frame. All
//! subsystems derived from one system (restrictions, `S_k`, `S_M`) share its
//! frame, so ids are stable across a run.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result, Verdict};
use crate::scalar::OrderScalar;
use crate::universe::{UId, Universe};

/// Canonical id of an oriented separation within a frame.
pub type Sep = usize;

pub const MAX_FRAME: usize = 8192;

/// Frames up to this size cache their meet and join tables.
const TABLE_LIMIT: usize = 1024;
const ABSENT: u32 = u32::MAX;

pub struct Frame {
    universe: Arc<dyn Universe>,
    uids: Vec<UId>,
    index: HashMap<UId, Sep>,
    inv: Vec<Sep>,
    up: Vec<FixedBitSet>,
    down: Vec<FixedBitSet>,
    level: Vec<u32>,
    meets: Vec<u32>,
    joins: Vec<u32>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("universe", &self.universe.kind())
            .field("len", &self.uids.len())
            .finish()
    }
}

impl Frame {
    /// Frame over `uids` (closed under involution), ordered by uid.
    pub fn new(universe: Arc<dyn Universe>, uids: &[UId]) -> Result<Arc<Frame>> {
        Self::build(universe, uids, |_| 0u32)
    }

    /// Frame ordered by `(|s|, uid)` so that enumeration follows the order
    /// function.
    pub fn with_order<W: OrderScalar>(
        universe: Arc<dyn Universe>,
        uids: &[UId],
        order: impl Fn(UId) -> W,
    ) -> Result<Arc<Frame>> {
        let mut values: Vec<(UId, W)> = Vec::new();
        for &x in uids {
            if !universe.contains(x) {
                return Err(Error::input(format!("unknown element id {x}")));
            }
            values.push((x, order(x)));
            let y = universe.invert(x);
            values.push((y, order(y)));
        }
        let mut distinct: Vec<W> = values.iter().map(|(_, w)| w.clone()).collect();
        distinct.sort_by(|a, b| a.total_cmp(b));
        distinct.dedup_by(|a, b| a.total_cmp(b).is_eq());
        let rank: HashMap<UId, u32> = values
            .iter()
            .map(|(x, w)| {
                let r = distinct.partition_point(|d| d.total_cmp(w).is_lt());
                (*x, r as u32)
            })
            .collect();
        Self::build(universe, uids, |x| rank[&x])
    }

    fn build(
        universe: Arc<dyn Universe>,
        uids: &[UId],
        level_of: impl Fn(UId) -> u32,
    ) -> Result<Arc<Frame>> {
        let mut all: Vec<UId> = Vec::with_capacity(uids.len() * 2);
        for &x in uids {
            if !universe.contains(x) {
                return Err(Error::input(format!("unknown element id {x}")));
            }
            all.push(x);
            all.push(universe.invert(x));
        }
        all.sort_unstable();
        all.dedup();
        if all.len() > MAX_FRAME {
            return Err(Error::resource(format!(
                "{} oriented separations exceed the frame cap of {MAX_FRAME}",
                all.len()
            )));
        }
        // Keep both orientations adjacent: sort by (level, smaller uid of
        // the pair, uid).
        all.sort_by_key(|&x| {
            let y = universe.invert(x);
            (level_of(x), x.min(y), x)
        });
        let n = all.len();
        let index: HashMap<UId, Sep> = all.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let inv: Vec<Sep> = all.iter().map(|&x| index[&universe.invert(x)]).collect();
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for i in 0..n {
            for j in 0..n {
                if universe.leq(all[i], all[j]) {
                    up[i].insert(j);
                    down[j].insert(i);
                }
            }
        }
        let level = all.iter().map(|&x| level_of(x)).collect();
        let (mut meets, mut joins) = (Vec::new(), Vec::new());
        if n <= TABLE_LIMIT {
            let lookup = |u: UId| index.get(&u).map_or(ABSENT, |&i| i as u32);
            meets.reserve(n * n);
            joins.reserve(n * n);
            for i in 0..n {
                for j in 0..n {
                    meets.push(lookup(universe.meet(all[i], all[j])));
                    joins.push(lookup(universe.join(all[i], all[j])));
                }
            }
        }
        Ok(Arc::new(Frame {
            universe,
            uids: all,
            index,
            inv,
            up,
            down,
            level,
            meets,
            joins,
        }))
    }

    pub fn len(&self) -> usize {
        self.uids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uids.is_empty()
    }

    pub fn universe(&self) -> &Arc<dyn Universe> {
        &self.universe
    }

    pub fn uid(&self, x: Sep) -> UId {
        self.uids[x]
    }

    pub fn sep_of(&self, uid: UId) -> Option<Sep> {
        self.index.get(&uid).copied()
    }

    pub fn inv(&self, x: Sep) -> Sep {
        self.inv[x]
    }

    pub fn leq(&self, a: Sep, b: Sep) -> bool {
        self.up[a].contains(b)
    }

    pub fn up(&self, x: Sep) -> &FixedBitSet {
        &self.up[x]
    }

    pub fn down(&self, x: Sep) -> &FixedBitSet {
        &self.down[x]
    }

    /// `a ∧ b` if it lies in the frame.
    pub fn meet(&self, a: Sep, b: Sep) -> Option<Sep> {
        if self.meets.is_empty() {
            self.sep_of(self.universe.meet(self.uids[a], self.uids[b]))
        } else {
            let m = self.meets[a * self.uids.len() + b];
            (m != ABSENT).then_some(m as Sep)
        }
    }

    /// `a ∨ b` if it lies in the frame.
    pub fn join(&self, a: Sep, b: Sep) -> Option<Sep> {
        if self.joins.is_empty() {
            self.sep_of(self.universe.join(self.uids[a], self.uids[b]))
        } else {
            let m = self.joins[a * self.uids.len() + b];
            (m != ABSENT).then_some(m as Sep)
        }
    }

    pub fn level(&self, x: Sep) -> u32 {
        self.level[x]
    }

    pub fn label(&self, x: Sep) -> String {
        self.universe.label(self.uids[x])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Classification {
    pub degenerate: bool,
    pub small: bool,
    pub cosmall: bool,
    pub trivial_in_s: bool,
    /// Some `r` with `s < r` and `s < r̄`, when trivial.
    pub witness: Option<Sep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Nestedness {
    Nested,
    Cross,
}

#[derive(Clone)]
pub struct SeparationSystem {
    frame: Arc<Frame>,
    members: FixedBitSet,
}

impl fmt::Debug for SeparationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.unoriented().iter().map(|&x| self.label(x)).collect();
        f.debug_struct("SeparationSystem").field("separations", &labels).finish()
    }
}

impl PartialEq for SeparationSystem {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.frame, &other.frame) && self.members == other.members
    }
}

impl SeparationSystem {
    /// The whole frame as a system.
    pub fn full(frame: Arc<Frame>) -> Self {
        let mut members = FixedBitSet::with_capacity(frame.len());
        members.insert_range(..);
        SeparationSystem { frame, members }
    }

    /// Every element of a listable universe.
    pub fn whole_universe(universe: Arc<dyn Universe>) -> Result<Self> {
        let elems = universe
            .elements()
            .ok_or_else(|| Error::resource("universe is too large to list"))?;
        Ok(Self::full(Frame::new(universe, &elems)?))
    }

    pub fn from_members(frame: Arc<Frame>, members: FixedBitSet) -> Result<Self> {
        let mut members = members;
        members.grow(frame.len());
        for x in members.ones() {
            if !members.contains(frame.inv(x)) {
                return Err(Error::input(format!(
                    "system is not closed under involution at {}",
                    frame.label(x)
                )));
            }
        }
        Ok(SeparationSystem { frame, members })
    }

    pub fn from_seps(frame: Arc<Frame>, seps: &[Sep]) -> Self {
        let mut members = FixedBitSet::with_capacity(frame.len());
        for &x in seps {
            members.insert(x);
            members.insert(frame.inv(x));
        }
        SeparationSystem { frame, members }
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn universe(&self) -> &Arc<dyn Universe> {
        self.frame.universe()
    }

    pub fn members(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn oriented(&self) -> impl Iterator<Item = Sep> + '_ {
        self.members.ones()
    }

    pub fn oriented_vec(&self) -> Vec<Sep> {
        self.members.ones().collect()
    }

    /// One representative (the smaller id) per unoriented separation.
    pub fn unoriented(&self) -> Vec<Sep> {
        self.members.ones().filter(|&x| x <= self.frame.inv(x)).collect()
    }

    pub fn len_unoriented(&self) -> usize {
        self.members.ones().filter(|&x| x <= self.frame.inv(x)).count()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn contains(&self, x: Sep) -> bool {
        self.members.contains(x)
    }

    pub fn contains_uid(&self, uid: UId) -> bool {
        self.sep_of(uid).is_some()
    }

    /// The id of `uid` if it is a member of this system.
    pub fn sep_of(&self, uid: UId) -> Option<Sep> {
        self.frame.sep_of(uid).filter(|&x| self.members.contains(x))
    }

    pub fn check_member(&self, x: Sep) -> Result<()> {
        if x < self.frame.len() && self.members.contains(x) {
            Ok(())
        } else {
            Err(Error::input(format!("separation id {x} is not in the system")))
        }
    }

    pub fn uid(&self, x: Sep) -> UId {
        self.frame.uid(x)
    }

    pub fn inv(&self, x: Sep) -> Sep {
        self.frame.inv(x)
    }

    /// Canonical unoriented key of `x`.
    pub fn key(&self, x: Sep) -> Sep {
        x.min(self.frame.inv(x))
    }

    pub fn leq(&self, a: Sep, b: Sep) -> bool {
        self.frame.leq(a, b)
    }

    pub fn lt(&self, a: Sep, b: Sep) -> bool {
        a != b && self.frame.leq(a, b)
    }

    pub fn label(&self, x: Sep) -> String {
        self.frame.label(x)
    }

    pub fn parse(&self, label: &str) -> Result<Sep> {
        self.universe()
            .parse_label(label)
            .and_then(|u| self.sep_of(u))
            .ok_or_else(|| Error::input(format!("unknown separation {label:?}")))
    }

    pub fn meet_uid(&self, a: Sep, b: Sep) -> UId {
        self.universe().meet(self.uid(a), self.uid(b))
    }

    pub fn join_uid(&self, a: Sep, b: Sep) -> UId {
        self.universe().join(self.uid(a), self.uid(b))
    }

    /// `a ∧ b`, if it lies in this system.
    pub fn meet(&self, a: Sep, b: Sep) -> Option<Sep> {
        self.frame.meet(a, b).filter(|&x| self.members.contains(x))
    }

    /// `a ∨ b`, if it lies in this system.
    pub fn join(&self, a: Sep, b: Sep) -> Option<Sep> {
        self.frame.join(a, b).filter(|&x| self.members.contains(x))
    }

    pub fn is_degenerate(&self, x: Sep) -> bool {
        self.inv(x) == x
    }

    pub fn is_small(&self, x: Sep) -> bool {
        self.leq(x, self.inv(x))
    }

    pub fn is_cosmall(&self, x: Sep) -> bool {
        self.leq(self.inv(x), x)
    }

    pub fn trivial_witness(&self, x: Sep) -> Option<Sep> {
        let up = self.frame.up(x);
        self.members
            .ones()
            .find(|&r| r != x && up.contains(r) && self.inv(r) != x && up.contains(self.inv(r)))
    }

    pub fn is_trivial(&self, x: Sep) -> bool {
        self.trivial_witness(x).is_some()
    }

    pub fn classify(&self, x: Sep) -> Classification {
        let witness = self.trivial_witness(x);
        Classification {
            degenerate: self.is_degenerate(x),
            small: self.is_small(x),
            cosmall: self.is_cosmall(x),
            trivial_in_s: witness.is_some(),
            witness,
        }
    }

    pub fn nested(&self, r: Sep, s: Sep) -> bool {
        let (ri, si) = (self.inv(r), self.inv(s));
        self.leq(r, s) || self.leq(r, si) || self.leq(ri, s) || self.leq(ri, si)
    }

    pub fn nestedness(&self, r: Sep, s: Sep) -> Nestedness {
        if self.nested(r, s) {
            Nestedness::Nested
        } else {
            Nestedness::Cross
        }
    }

    /// The four corner separations of `r` and `s`, as canonical unoriented
    /// uids (the smaller uid of each pair), sorted and deduplicated. They
    /// need not lie in the system.
    pub fn corner_separations(&self, r: Sep, s: Sep) -> Vec<UId> {
        corner_uids(self.universe().as_ref(), self.uid(self.key(r)), self.uid(self.key(s)))
    }

    /// First oriented pair `(r, s)` with neither `r ∨ s` nor `r ∧ s` in the
    /// system.
    pub fn is_submodular(&self) -> Verdict<(Sep, Sep)> {
        for r in self.members.ones() {
            for s in self.members.ones() {
                if s < r {
                    continue;
                }
                if self.join(r, s).is_none() && self.meet(r, s).is_none() {
                    return Err((r, s));
                }
            }
        }
        Ok(())
    }

    pub fn subsystem(&self, keep: impl Fn(Sep) -> bool) -> SeparationSystem {
        let mut members = FixedBitSet::with_capacity(self.frame.len());
        for x in self.members.ones() {
            if keep(x) && keep(self.inv(x)) {
                members.insert(x);
            }
        }
        SeparationSystem {
            frame: self.frame.clone(),
            members,
        }
    }

    /// `S_M`: the separations nested with every element of `m`.
    pub fn restrict_nested(&self, m: &[Sep]) -> Result<SeparationSystem> {
        for &x in m {
            self.check_member(x)?;
        }
        Ok(self.subsystem(|x| m.iter().all(|&y| self.nested(x, y))))
    }

    pub fn is_subsystem_of(&self, other: &SeparationSystem) -> bool {
        Arc::ptr_eq(&self.frame, &other.frame) && self.members.is_subset(&other.members)
    }

    /// Whether `seps` is pairwise nested.
    pub fn is_nested_set(&self, seps: &[Sep]) -> Verdict<(Sep, Sep)> {
        for (i, &a) in seps.iter().enumerate() {
            for &b in &seps[i + 1..] {
                if !self.nested(a, b) {
                    return Err((a, b));
                }
            }
        }
        Ok(())
    }

    pub fn labels(&self, seps: &[Sep]) -> Vec<String> {
        seps.iter().map(|&x| self.label(x)).collect()
    }
}

/// Corner separations computed directly in a universe.
pub fn corner_uids(u: &dyn Universe, r: UId, s: UId) -> Vec<UId> {
    let ri = u.invert(r);
    let mut out: Vec<UId> = [u.join(r, s), u.meet(r, s), u.join(ri, s), u.meet(ri, s)]
        .into_iter()
        .map(|x| x.min(u.invert(x)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub fn uid_nested(u: &dyn Universe, r: UId, s: UId) -> bool {
    let (ri, si) = (u.invert(r), u.invert(s));
    u.leq(r, s) || u.leq(r, si) || u.leq(ri, s) || u.leq(ri, si)
}
