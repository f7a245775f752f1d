//! Orientations, profiles, stars and `F`-tangles.
//!
//! The tangle enumerator is a small DPLL-style search: every separation is a
//! boolean variable, consistency is enforced by down-closure propagation
//! (choosing `s` forces every `r < s`), and each set in `F` carries a
//! counter so that a set with all but one member chosen forces the inverse
//! of the last one.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result, Verdict};
use crate::scalar::OrderFunction;
use crate::system::{Sep, SeparationSystem};

#[derive(Clone, Debug)]
pub struct Orientation {
    seps: Vec<Sep>,
    bits: FixedBitSet,
}

impl Orientation {
    pub fn new(frame_len: usize, seps: impl IntoIterator<Item = Sep>) -> Self {
        let mut bits = FixedBitSet::with_capacity(frame_len);
        for x in seps {
            bits.insert(x);
        }
        Orientation {
            seps: bits.ones().collect(),
            bits,
        }
    }

    pub fn from_bits(bits: FixedBitSet) -> Self {
        Orientation {
            seps: bits.ones().collect(),
            bits,
        }
    }

    pub fn seps(&self) -> &[Sep] {
        &self.seps
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.seps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seps.is_empty()
    }

    pub fn contains(&self, x: Sep) -> bool {
        self.bits.contains(x)
    }

    pub fn contains_all(&self, xs: &[Sep]) -> bool {
        xs.iter().all(|&x| self.contains(x))
    }

    /// The orientation of `x`'s separation chosen here, if any.
    pub fn choice(&self, s: &SeparationSystem, x: Sep) -> Option<Sep> {
        if self.contains(x) {
            Some(x)
        } else if self.contains(s.inv(x)) {
            Some(s.inv(x))
        } else {
            None
        }
    }

    /// Whether this picks exactly one orientation of every separation of
    /// `s` and nothing else.
    pub fn is_orientation_of(&self, s: &SeparationSystem) -> bool {
        self.seps.iter().all(|&x| s.contains(x))
            && s.oriented().all(|x| self.contains(x) != self.contains(s.inv(x)) || s.is_degenerate(x) && self.contains(x))
    }

    /// `O ∩ S⃗'` for a subsystem `S'`.
    pub fn restrict(&self, s: &SeparationSystem) -> Orientation {
        let mut bits = self.bits.clone();
        bits.intersect_with(s.members());
        Orientation::from_bits(bits)
    }

    pub fn labels(&self, s: &SeparationSystem) -> Vec<String> {
        s.labels(&self.seps)
    }

    /// Image under a map of ids.
    pub fn map(&self, frame_len: usize, f: impl Fn(Sep) -> Sep) -> Orientation {
        Orientation::new(frame_len, self.seps.iter().map(|&x| f(x)))
    }
}

impl PartialEq for Orientation {
    fn eq(&self, other: &Self) -> bool {
        self.seps == other.seps
    }
}

impl Eq for Orientation {}

impl Hash for Orientation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.seps.hash(state)
    }
}

impl PartialOrd for Orientation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Orientation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.seps.cmp(&other.seps)
    }
}

/// A finite family of sets of oriented separations, usually stars.
#[derive(Clone, Debug, Default)]
pub struct StarFamily {
    sets: Vec<Vec<Sep>>,
    lookup: HashSet<Vec<Sep>>,
}

impl PartialEq for StarFamily {
    fn eq(&self, other: &Self) -> bool {
        self.sets == other.sets
    }
}

impl StarFamily {
    pub fn new(sets: impl IntoIterator<Item = Vec<Sep>>) -> Self {
        let mut all: Vec<Vec<Sep>> = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        all.sort();
        all.dedup();
        let lookup = all.iter().cloned().collect();
        StarFamily { sets: all, lookup }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn sets(&self) -> &[Vec<Sep>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn contains(&self, set: &[Sep]) -> bool {
        if set.windows(2).all(|w| w[0] < w[1]) {
            self.lookup.contains(set)
        } else {
            let mut v = set.to_vec();
            v.sort_unstable();
            v.dedup();
            self.lookup.contains(&v)
        }
    }

    pub fn contains_singleton(&self, x: Sep) -> bool {
        self.lookup.contains(&vec![x])
    }

    pub fn union(&self, other: &StarFamily) -> StarFamily {
        StarFamily::new(self.sets.iter().chain(other.sets.iter()).cloned())
    }

    pub fn with_singletons(&self, xs: impl IntoIterator<Item = Sep>) -> StarFamily {
        StarFamily::new(self.sets.iter().cloned().chain(xs.into_iter().map(|x| vec![x])))
    }

    pub fn without(&self, set: &[Sep]) -> StarFamily {
        StarFamily::new(self.sets.iter().filter(|s| s.as_slice() != set).cloned())
    }

    /// First member that is not a star.
    pub fn first_non_star(&self, s: &SeparationSystem) -> Option<usize> {
        self.sets.iter().position(|set| !is_star(s, set))
    }

    pub fn labels(&self, s: &SeparationSystem) -> Vec<Vec<String>> {
        self.sets.iter().map(|set| s.labels(set)).collect()
    }
}

/// No degenerate members, and `r <= s̄` for all distinct members.
pub fn is_star(s: &SeparationSystem, set: &[Sep]) -> bool {
    set.iter().all(|&x| !s.is_degenerate(x))
        && set
            .iter()
            .all(|&r| set.iter().all(|&t| r == t || s.leq(r, s.inv(t))))
}

/// The maximal elements of `set`.
pub fn maximal_elements(s: &SeparationSystem, set: &[Sep]) -> Vec<Sep> {
    set.iter()
        .copied()
        .filter(|&x| !set.iter().any(|&y| s.lt(x, y)))
        .collect()
}

/// Returns `(r̄, s)` with `r < s`, both in `o`, for distinct `r, s`.
pub fn is_consistent(s: &SeparationSystem, o: &[Sep]) -> Verdict<(Sep, Sep)> {
    for &a in o {
        let r = s.inv(a);
        for &b in o {
            if s.key(a) != s.key(b) && s.lt(r, b) {
                return Err((a, b));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProfileViolation {
    Inconsistent(Sep, Sep),
    /// `r, s ∈ P` with `(r ∨ s)* ∈ P`.
    Join(Sep, Sep),
}

pub fn is_profile(s: &SeparationSystem, o: &Orientation) -> Verdict<ProfileViolation> {
    is_consistent(s, o.seps()).map_err(|(a, b)| ProfileViolation::Inconsistent(a, b))?;
    let u = s.universe();
    for &r in o.seps() {
        for &t in o.seps() {
            if t < r {
                continue;
            }
            let co = u.invert(s.join_uid(r, t));
            if s.sep_of(co).is_some_and(|x| o.contains(x)) {
                return Err(ProfileViolation::Join(r, t));
            }
        }
    }
    Ok(())
}

/// No co-small member.
pub fn is_regular(s: &SeparationSystem, o: &Orientation) -> bool {
    o.seps().iter().all(|&x| !s.is_cosmall(x))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TangleViolation {
    Inconsistent(Sep, Sep),
    /// Index into the family's sets.
    Contains(usize),
}

pub fn is_f_tangle(s: &SeparationSystem, o: &Orientation, f: &StarFamily) -> Verdict<TangleViolation> {
    is_consistent(s, o.seps()).map_err(|(a, b)| TangleViolation::Inconsistent(a, b))?;
    match f.sets().iter().position(|set| o.contains_all(set)) {
        Some(i) => Err(TangleViolation::Contains(i)),
        None => Ok(()),
    }
}

/// `P_S`: all sets `{r, s, (r ∨ s)*}` that lie in `S⃗`. Its tangles are
/// exactly the profiles.
pub fn profile_family(s: &SeparationSystem) -> StarFamily {
    let u = s.universe();
    let seps = s.oriented_vec();
    let mut sets = Vec::new();
    for (i, &r) in seps.iter().enumerate() {
        for &t in &seps[i..] {
            if let Some(co) = s.sep_of(u.invert(s.join_uid(r, t))) {
                sets.push(vec![r, t, co]);
            }
        }
    }
    StarFamily::new(sets)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_seps: usize,
    pub max_nodes: u64,
    pub max_solutions: usize,
}

pub const DEFAULT_MAX_SEPS: usize = 256;

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_seps: DEFAULT_MAX_SEPS,
            max_nodes: 20_000_000,
            max_solutions: usize::MAX,
        }
    }
}

impl Limits {
    pub fn first_only(self) -> Self {
        Limits {
            max_solutions: 1,
            ..self
        }
    }
}

struct Search<'a> {
    s: &'a SeparationSystem,
    sets: Vec<&'a [Sep]>,
    occ: Vec<Vec<usize>>,
    below: Vec<Vec<Sep>>,
    chosen: FixedBitSet,
    hit: Vec<usize>,
    dead: Vec<usize>,
    trail: Vec<Sep>,
    head: usize,
    nodes: u64,
}

impl<'a> Search<'a> {
    fn new(s: &'a SeparationSystem, f: &'a StarFamily) -> Self {
        let n = s.frame().len();
        let sets: Vec<&[Sep]> = f
            .sets()
            .iter()
            .filter(|set| set.iter().all(|&x| x < n && s.contains(x)))
            .map(|v| v.as_slice())
            .collect();
        let mut occ = vec![Vec::new(); n];
        for (j, set) in sets.iter().enumerate() {
            for &x in set.iter() {
                occ[x].push(j);
            }
        }
        let mut below = vec![Vec::new(); n];
        for x in s.oriented() {
            let mut d = s.frame().down(x).clone();
            d.intersect_with(s.members());
            below[x] = d.ones().filter(|&y| s.key(y) != s.key(x)).collect();
        }
        let m = sets.len();
        Search {
            s,
            sets,
            occ,
            below,
            chosen: FixedBitSet::with_capacity(n),
            hit: vec![0; m],
            dead: vec![0; m],
            trail: Vec::new(),
            head: 0,
            nodes: 0,
        }
    }

    /// Records `x` as chosen; `false` on a direct clash with its inverse.
    fn assign(&mut self, x: Sep) -> bool {
        let ix = self.s.inv(x);
        if self.chosen.contains(x) {
            return true;
        }
        if ix != x && self.chosen.contains(ix) {
            return false;
        }
        self.chosen.insert(x);
        self.trail.push(x);
        for &j in &self.occ[x] {
            self.hit[j] += 1;
        }
        if ix != x {
            for &j in &self.occ[ix] {
                self.dead[j] += 1;
            }
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let x = self.trail.pop().unwrap();
            self.chosen.set(x, false);
            for &j in &self.occ[x] {
                self.hit[j] -= 1;
            }
            let ix = self.s.inv(x);
            if ix != x {
                for &j in &self.occ[ix] {
                    self.dead[j] -= 1;
                }
            }
        }
        self.head = self.head.min(mark);
    }

    fn propagate(&mut self) -> bool {
        while self.head < self.trail.len() {
            let x = self.trail[self.head];
            self.head += 1;
            for i in 0..self.below[x].len() {
                let y = self.below[x][i];
                if !self.assign(y) {
                    return false;
                }
            }
            for i in 0..self.occ[x].len() {
                let j = self.occ[x][i];
                if self.dead[j] > 0 {
                    continue;
                }
                let len = self.sets[j].len();
                if self.hit[j] == len {
                    return false;
                }
                if self.hit[j] + 1 == len {
                    let m = *self.sets[j]
                        .iter()
                        .find(|&&m| !self.chosen.contains(m))
                        .expect("counter out of sync");
                    if !self.assign(self.s.inv(m)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn run(&mut self, keys: &[Sep], limits: Limits, out: &mut Vec<Orientation>) -> Result<()> {
        // Empty sets and sets consisting only of degenerate members exclude
        // everything; catch them before the search starts.
        if self.sets.iter().any(|set| set.is_empty()) {
            return Ok(());
        }
        for x in self.s.oriented() {
            if self.s.is_degenerate(x) && !self.assign(x) {
                return Ok(());
            }
        }
        for j in 0..self.sets.len() {
            if self.dead[j] == 0 && self.hit[j] == self.sets[j].len() {
                return Ok(());
            }
        }
        // Sets with a single open member force its inverse up front.
        for j in 0..self.sets.len() {
            if self.dead[j] == 0 && self.hit[j] + 1 == self.sets[j].len() {
                let m = *self.sets[j].iter().find(|&&m| !self.chosen.contains(m)).unwrap();
                if !self.assign(self.s.inv(m)) {
                    return Ok(());
                }
            }
        }
        if !self.propagate() {
            return Ok(());
        }
        self.dfs(keys, 0, limits, out)
    }

    fn dfs(&mut self, keys: &[Sep], from: usize, limits: Limits, out: &mut Vec<Orientation>) -> Result<()> {
        if out.len() >= limits.max_solutions {
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > limits.max_nodes {
            return Err(Error::resource(format!(
                "tangle search exceeded {} nodes",
                limits.max_nodes
            )));
        }
        let s = self.s;
        let next = keys[from..]
            .iter()
            .position(|&k| !self.chosen.contains(k) && !self.chosen.contains(s.inv(k)))
            .map(|p| from + p);
        let Some(i) = next else {
            out.push(Orientation::from_bits(self.chosen.clone()));
            return Ok(());
        };
        let k = keys[i];
        let ik = s.inv(k);
        let first = if s.leq(ik, k) && !s.leq(k, ik) { ik } else { k };
        for x in [first, s.inv(first)] {
            let mark = self.trail.len();
            if self.assign(x) && self.propagate() {
                self.dfs(keys, i + 1, limits, out)?;
            }
            self.undo_to(mark);
            if out.len() >= limits.max_solutions {
                break;
            }
        }
        Ok(())
    }
}

fn check_cap(s: &SeparationSystem, cap: usize) -> Result<Vec<Sep>> {
    let keys: Vec<Sep> = s.unoriented().into_iter().filter(|&x| !s.is_degenerate(x)).collect();
    if keys.len() > cap {
        return Err(Error::resource(format!(
            "{} separations exceed the enumeration cap of {cap} (raise --max-seps)",
            keys.len()
        )));
    }
    Ok(keys)
}

/// All `F`-tangles of `S`, sorted canonically. Sets of `F` that are not
/// contained in `S⃗` are ignored.
pub fn enumerate_tangles(s: &SeparationSystem, f: &StarFamily, limits: Limits) -> Result<Vec<Orientation>> {
    let keys = check_cap(s, limits.max_seps)?;
    let mut search = Search::new(s, f);
    let mut out = Vec::new();
    search.run(&keys, limits, &mut out)?;
    out.sort();
    Ok(out)
}

pub fn consistent_orientations(s: &SeparationSystem, limits: Limits) -> Result<Vec<Orientation>> {
    enumerate_tangles(s, &StarFamily::empty(), limits)
}

pub const ORACLE_CAP: usize = 24;

/// Unpruned reference: scans all `2^n` orientations and filters with
/// [`is_f_tangle`].
pub fn oracle_tangles(s: &SeparationSystem, f: &StarFamily) -> Result<Vec<Orientation>> {
    let keys = check_cap(s, ORACLE_CAP)?;
    let n = s.frame().len();
    let degenerate: Vec<Sep> = s.oriented().filter(|&x| s.is_degenerate(x)).collect();
    let relevant = StarFamily::new(
        f.sets()
            .iter()
            .filter(|set| set.iter().all(|&x| x < n && s.contains(x)))
            .cloned(),
    );
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << keys.len()) {
        let o = Orientation::new(
            n,
            keys.iter()
                .enumerate()
                .map(|(i, &k)| if mask >> i & 1 == 1 { s.inv(k) } else { k })
                .chain(degenerate.iter().copied()),
        );
        if is_f_tangle(s, &o, &relevant).is_ok() {
            out.push(o);
        }
    }
    out.sort();
    Ok(out)
}

pub fn distinguishes(s: &SeparationSystem, x: Sep, o1: &Orientation, o2: &Orientation) -> Result<bool> {
    if s.is_degenerate(x) {
        return Err(Error::input(format!("degenerate separation {} cannot distinguish", s.label(x))));
    }
    let ix = s.inv(x);
    Ok(o1.contains(x) && o2.contains(ix) || o1.contains(ix) && o2.contains(x))
}

/// Returns the first pair of indices into `os` not distinguished by `n`.
pub fn distinguishes_set(s: &SeparationSystem, n: &[Sep], os: &[Orientation]) -> Verdict<(usize, usize)> {
    for i in 0..os.len() {
        for j in i + 1..os.len() {
            let hit = n
                .iter()
                .any(|&x| !s.is_degenerate(x) && distinguishes(s, x, &os[i], &os[j]).unwrap_or(false));
            if !hit {
                return Err((i, j));
            }
        }
    }
    Ok(())
}

/// True iff `x` distinguishes `p` and `q` and no separation of strictly
/// lower order in `S` does.
pub fn distinguishes_efficiently<O>(
    s: &SeparationSystem,
    ord: &O,
    x: Sep,
    p: &Orientation,
    q: &Orientation,
) -> Result<bool>
where
    O: OrderFunction + ?Sized,
{
    if !distinguishes(s, x, p, q)? {
        return Ok(false);
    }
    let w = ord.order(s.uid(x));
    Ok(!s.unoriented().into_iter().any(|t| {
        !s.is_degenerate(t) && ord.order(s.uid(t)) < w && distinguishes(s, t, p, q).unwrap_or(false)
    }))
}

/// Index of an orientation in `os` containing `sigma`.
pub fn essential_star(sigma: &[Sep], os: &[Orientation]) -> Option<usize> {
    os.iter().position(|o| o.contains_all(sigma))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FamilyReport {
    pub all_stars: bool,
    pub standard: bool,
    pub has_small_singletons: bool,
    pub profile_respecting: bool,
    pub closed_under_shifting: bool,
    pub friendly: bool,
    pub tangles: usize,
    pub witnesses: Vec<String>,
}

/// Standardness, regularity singletons and profile-respect by direct scan.
/// Closure under shifting is computed elsewhere and passed in.
pub fn check_star_family(
    f: &StarFamily,
    s: &SeparationSystem,
    closed_under_shifting: bool,
    limits: Limits,
) -> Result<FamilyReport> {
    let mut rep = FamilyReport {
        closed_under_shifting,
        ..Default::default()
    };
    let non_star = f.first_non_star(s);
    rep.all_stars = non_star.is_none();
    if let Some(i) = non_star {
        rep.witnesses.push(format!("not a star: {:?}", s.labels(&f.sets()[i])));
    }
    let missing_trivial = s
        .oriented()
        .find(|&x| s.is_trivial(x) && !f.contains_singleton(s.inv(x)));
    rep.standard = missing_trivial.is_none();
    if let Some(x) = missing_trivial {
        rep.witnesses.push(format!("trivial {} but {{{}}} missing", s.label(x), s.label(s.inv(x))));
    }
    let missing_small = s
        .oriented()
        .find(|&x| !s.is_degenerate(x) && s.is_small(x) && !f.contains_singleton(s.inv(x)));
    rep.has_small_singletons = missing_small.is_none();
    if let Some(x) = missing_small {
        rep.witnesses.push(format!("small {} but {{{}}} missing", s.label(x), s.label(s.inv(x))));
    }
    let tangles = enumerate_tangles(s, f, limits)?;
    rep.tangles = tangles.len();
    let bad = tangles.iter().find(|t| is_profile(s, t).is_err());
    rep.profile_respecting = bad.is_none();
    if let Some(t) = bad {
        rep.witnesses.push(format!("tangle is not a profile: {:?}", t.labels(s)));
    }
    rep.friendly = rep.all_stars
        && rep.standard
        && rep.has_small_singletons
        && rep.profile_respecting
        && rep.closed_under_shifting;
    Ok(rep)
}

/// The `F`-tangle in `ts` living at `sigma`, if any.
pub fn home_of<'a>(sigma: &[Sep], ts: &'a [Orientation]) -> Option<&'a Orientation> {
    ts.iter().find(|t| t.contains_all(sigma))
}
