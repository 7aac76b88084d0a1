//! Finite event histories: posets of events under happens-before with
//! send/receive matching, plus prefix and extension enumeration.
//!
//! A [`Scenario`] fixes a maximal well-formed ground history; the histories
//! under analysis are its downward-closed prefixes. An optional exhaustive
//! enumerator produces every well-formed history over a small universe,
//! independent of any ground.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum number of events representable in one universe (bitmask-backed).
pub const MAX_EVENTS: usize = 64;

/// Hard ceiling for exhaustive history enumeration.
pub const EXHAUSTIVE_EVENT_LIMIT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "in")]
    Input,
    #[serde(rename = "int")]
    Internal,
    #[serde(rename = "send")]
    Send,
    #[serde(rename = "recv")]
    Recv,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Input => "in",
            EventKind::Internal => "int",
            EventKind::Send => "send",
            EventKind::Recv => "recv",
        };
        f.write_str(s)
    }
}

/// One node of a history.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub kind: EventKind,
    pub proc: String,
    #[serde(default)]
    pub label: String,
    /// Case-specific payload, stored as canonical compact JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl Event {
    pub fn new(id: &str, kind: EventKind, proc: &str, label: &str) -> Self {
        Event {
            id: id.to_string(),
            kind,
            proc: proc.to_string(),
            label: label.to_string(),
            payload: None,
        }
    }
}

/// The finite set of events a specification ranges over, together with
/// template edges (candidate causal constraints) and send/receive matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventUniverse {
    events: Vec<Event>,
    index: BTreeMap<String, usize>,
    template_edges: Vec<(usize, usize)>,
    msg_pairs: Vec<(usize, usize)>,
}

impl EventUniverse {
    pub fn new(
        events: Vec<Event>,
        edges: &[(&str, &str)],
        msg: &[(&str, &str)],
    ) -> Result<Arc<Self>> {
        let edge_vec: Vec<(String, String)> = edges
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let msg_vec: Vec<(String, String)> = msg
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        Self::from_parts(events, edge_vec, msg_vec)
    }

    pub fn from_parts(
        events: Vec<Event>,
        edges: Vec<(String, String)>,
        msg: Vec<(String, String)>,
    ) -> Result<Arc<Self>> {
        if events.len() > MAX_EVENTS {
            return Err(Error::InvalidUniverse(format!(
                "{} events exceeds the maximum of {MAX_EVENTS}",
                events.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateEvent(e.id.clone()));
            }
        }
        let look = |id: &String| -> Result<usize> {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownEvent(id.clone()))
        };
        let mut template_edges = Vec::new();
        for (a, b) in &edges {
            template_edges.push((look(a)?, look(b)?));
        }
        let mut msg_pairs = Vec::new();
        for (s, r) in &msg {
            let si = look(s)?;
            let ri = look(r)?;
            if events[si].kind != EventKind::Send {
                return Err(Error::InvalidUniverse(format!(
                    "message source `{s}` is not a send event"
                )));
            }
            if events[ri].kind != EventKind::Recv {
                return Err(Error::InvalidUniverse(format!(
                    "message target `{r}` is not a recv event"
                )));
            }
            msg_pairs.push((si, ri));
        }
        // Every recv in exactly one pair, every send in at most one.
        for (i, e) in events.iter().enumerate() {
            match e.kind {
                EventKind::Recv => {
                    let n = msg_pairs.iter().filter(|(_, r)| *r == i).count();
                    if n != 1 {
                        return Err(Error::InvalidUniverse(format!(
                            "recv `{}` appears in {n} message pairs, expected exactly 1",
                            e.id
                        )));
                    }
                }
                EventKind::Send => {
                    let n = msg_pairs.iter().filter(|(s, _)| *s == i).count();
                    if n > 1 {
                        return Err(Error::InvalidUniverse(format!(
                            "send `{}` appears in {n} message pairs, expected at most 1",
                            e.id
                        )));
                    }
                }
                _ => {}
            }
        }
        let u = EventUniverse {
            events,
            index,
            template_edges,
            msg_pairs,
        };
        // Template edges plus message edges must be acyclic over the full set.
        let mut all = u.template_edges.clone();
        all.extend(u.msg_pairs.iter().copied());
        if let Some(i) = find_cycle(u.events.len(), &all) {
            return Err(Error::OrderCycle(u.events[i].id.clone()));
        }
        Ok(Arc::new(u))
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, i: usize) -> &Event {
        &self.events[i]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownEvent(id.to_string()))
    }

    pub fn template_edges(&self) -> &[(usize, usize)] {
        &self.template_edges
    }

    pub fn msg_pairs(&self) -> &[(usize, usize)] {
        &self.msg_pairs
    }

    /// The send matched to a recv, if the recv is part of a pair.
    pub fn send_of(&self, recv: usize) -> Option<usize> {
        self.msg_pairs
            .iter()
            .find(|(_, r)| *r == recv)
            .map(|(s, _)| *s)
    }
}

fn find_cycle(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    // Kahn's algorithm; any node left over sits on a cycle.
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a == b {
            return Some(a);
        }
        indeg[b] += 1;
        succ[a].push(b);
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    if seen == n {
        None
    } else {
        (0..n).find(|&i| indeg[i] > 0)
    }
}

/// A finite history: a subset of a universe's events with a strict partial
/// order, stored transitively closed as per-event predecessor masks.
#[derive(Clone)]
pub struct History {
    universe: Arc<EventUniverse>,
    mask: u64,
    preds: Vec<u64>,
}

impl PartialEq for History {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.mask == other.mask && self.preds == other.preds
    }
}

impl Eq for History {}

impl PartialOrd for History {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for History {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sorted_ids()
            .cmp(&other.sorted_ids())
            .then_with(|| self.preds.cmp(&other.preds))
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "History{{{}}}", self.sorted_ids().join(","))
    }
}

impl History {
    /// Builds a history from event ids and order edges. Edges are closed
    /// transitively; a cycle is an error.
    pub fn new(
        universe: Arc<EventUniverse>,
        event_ids: &[&str],
        edges: &[(&str, &str)],
    ) -> Result<Self> {
        let mut mask = 0u64;
        for id in event_ids {
            mask |= 1u64 << universe.index_of(id)?;
        }
        let mut pairs = Vec::new();
        for (a, b) in edges {
            let ai = universe.index_of(a)?;
            let bi = universe.index_of(b)?;
            if mask & (1 << ai) == 0 {
                return Err(Error::AbsentEvent((*a).to_string()));
            }
            if mask & (1 << bi) == 0 {
                return Err(Error::AbsentEvent((*b).to_string()));
            }
            pairs.push((ai, bi));
        }
        Self::from_mask_and_pairs(universe, mask, &pairs)
    }

    pub(crate) fn from_mask_and_pairs(
        universe: Arc<EventUniverse>,
        mask: u64,
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        let n = universe.len();
        let mut preds = vec![0u64; n];
        for &(a, b) in pairs {
            preds[b] |= 1 << a;
        }
        // Transitive closure, then cycle check via irreflexivity.
        close_preds(&mut preds, mask);
        for i in 0..n {
            if mask & (1 << i) != 0 && preds[i] & (1 << i) != 0 {
                return Err(Error::OrderCycle(universe.event(i).id.clone()));
            }
            if mask & (1 << i) == 0 {
                preds[i] = 0;
            } else {
                preds[i] &= mask;
            }
        }
        Ok(History {
            universe,
            mask,
            preds,
        })
    }

    pub fn empty(universe: Arc<EventUniverse>) -> Self {
        let n = universe.len();
        History {
            universe,
            mask: 0,
            preds: vec![0; n],
        }
    }

    pub fn universe(&self) -> &Arc<EventUniverse> {
        &self.universe
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains_id(&self, id: &str) -> bool {
        match self.universe.index_of(id) {
            Ok(i) => self.mask & (1 << i) != 0,
            Err(_) => false,
        }
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask & (1 << idx) != 0
    }

    /// Strict causal precedence a -> b within this history.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.contains(a) && self.contains(b) && self.preds[b] & (1 << a) != 0
    }

    pub fn preds_of(&self, b: usize) -> u64 {
        self.preds[b]
    }

    /// Present event indices in ascending index order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe.len()).filter(move |&i| self.contains(i))
    }

    /// Present event ids, sorted.
    pub fn sorted_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .indices()
            .map(|i| self.universe.event(i).id.clone())
            .collect();
        ids.sort();
        ids
    }

    /// Closed order as sorted (id, id) pairs.
    pub fn order_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for b in self.indices() {
            for a in self.indices() {
                if a != b && self.preds[b] & (1 << a) != 0 {
                    out.push((
                        self.universe.event(a).id.clone(),
                        self.universe.event(b).id.clone(),
                    ));
                }
            }
        }
        out.sort();
        out
    }

    /// Canonical fingerprint: sorted id list plus sorted closed order pairs.
    pub fn fingerprint(&self) -> String {
        let ids = self.sorted_ids().join(",");
        let pairs: Vec<String> = self
            .order_pairs()
            .into_iter()
            .map(|(a, b)| format!("{a}<{b}"))
            .collect();
        format!("{ids}|{}", pairs.join(","))
    }

    /// Restriction of this history to the given mask (order restricted too).
    pub fn restrict(&self, mask: u64) -> History {
        let mask = mask & self.mask;
        let mut preds = self.preds.clone();
        for (i, p) in preds.iter_mut().enumerate() {
            if mask & (1 << i) == 0 {
                *p = 0;
            } else {
                *p &= mask;
            }
        }
        History {
            universe: Arc::clone(&self.universe),
            mask,
            preds,
        }
    }

    /// Restriction to input events.
    pub fn input_projection(&self) -> History {
        let mut mask = 0u64;
        for i in self.indices() {
            if self.universe.event(i).kind == EventKind::Input {
                mask |= 1 << i;
            }
        }
        self.restrict(mask)
    }

    pub fn is_input_only(&self) -> bool {
        self.indices()
            .all(|i| self.universe.event(i).kind == EventKind::Input)
    }
}

fn close_preds(preds: &mut [u64], mask: u64) {
    // Floyd-Warshall style saturation over the present set.
    let n = preds.len();
    let mut changed = true;
    while changed {
        changed = false;
        for b in 0..n {
            if mask & (1 << b) == 0 {
                continue;
            }
            let mut acc = preds[b];
            let mut through = preds[b] & mask;
            while through != 0 {
                let a = through.trailing_zeros() as usize;
                through &= through - 1;
                acc |= preds[a];
            }
            if acc != preds[b] {
                preds[b] = acc;
                changed = true;
            }
        }
    }
}

/// One clause violation found by [`validate_history`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub clause: String,
    pub detail: String,
}

/// Structural well-formedness report. An empty report means well-formed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, clause: &str, detail: String) {
        self.violations.push(Violation {
            clause: clause.to_string(),
            detail,
        });
    }
}

/// Checks the history clauses: irreflexivity, transitive closure, every
/// present recv causally after its unique present send, and no send
/// preceding two matched receives. Violations are data, not faults.
pub fn validate_history(h: &History) -> ValidationReport {
    let mut report = ValidationReport::default();
    let u = h.universe();
    for b in h.indices() {
        if h.preds_of(b) & (1 << b) != 0 {
            report.push(
                "irreflexivity",
                format!("event `{}` precedes itself", u.event(b).id),
            );
        }
    }
    // Transitivity of the stored relation.
    for c in h.indices() {
        let mut mids = h.preds_of(c);
        while mids != 0 {
            let b = mids.trailing_zeros() as usize;
            mids &= mids - 1;
            let missing = h.preds_of(b) & !h.preds_of(c) & h.mask();
            if missing != 0 {
                let a = missing.trailing_zeros() as usize;
                report.push(
                    "transitivity",
                    format!(
                        "`{}` < `{}` < `{}` but the outer pair is missing",
                        u.event(a).id,
                        u.event(b).id,
                        u.event(c).id
                    ),
                );
            }
        }
    }
    // Receive matching.
    for r in h.indices() {
        if u.event(r).kind != EventKind::Recv {
            continue;
        }
        match u.send_of(r) {
            Some(s) if h.contains(s) && h.precedes(s, r) => {}
            _ => report.push(
                "recv-matching",
                format!("recv `{}` lacks a causally prior matching send", u.event(r).id),
            ),
        }
    }
    // A send precedes at most one present matched receive.
    for s in h.indices() {
        if u.event(s).kind != EventKind::Send {
            continue;
        }
        let matched: Vec<usize> = u
            .msg_pairs()
            .iter()
            .filter(|&&(ss, r)| ss == s && h.contains(r) && h.precedes(s, r))
            .map(|&(_, r)| r)
            .collect();
        if matched.len() > 1 {
            report.push(
                "send-uniqueness",
                format!("send `{}` precedes two receives", u.event(s).id),
            );
        }
    }
    report
}

/// Returns true iff `h2` is a future of `h1`: same universe, events of `h1`
/// contained in `h2` with the restricted order, and downward closed under
/// the order of `h2`.
pub fn is_future(h1: &History, h2: &History) -> Result<bool> {
    if h1.universe() != h2.universe() {
        return Err(Error::UniverseMismatch);
    }
    if h1.mask() & !h2.mask() != 0 {
        return Ok(false);
    }
    for i in h2.indices() {
        if h1.contains(i) {
            // Order restriction must agree exactly.
            if h2.preds_of(i) & h1.mask() != h1.preds_of(i) {
                return Ok(false);
            }
            // Downward closure: everything below i in h2 is in h1.
            if h2.preds_of(i) & !h1.mask() != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff neither event precedes the other in `h`. An event is not
/// concurrent with itself.
pub fn concurrent(h: &History, a: &str, b: &str) -> Result<bool> {
    let ai = h.universe().index_of(a)?;
    let bi = h.universe().index_of(b)?;
    if !h.contains(ai) {
        return Err(Error::AbsentEvent(a.to_string()));
    }
    if !h.contains(bi) {
        return Err(Error::AbsentEvent(b.to_string()));
    }
    if ai == bi {
        return Ok(false);
    }
    Ok(!h.precedes(ai, bi) && !h.precedes(bi, ai))
}

/// A named maximal well-formed history; its downward-closed prefixes are the
/// histories under analysis.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub ground: History,
}

impl Scenario {
    pub fn new(name: &str, ground: History) -> Result<Self> {
        let report = validate_history(&ground);
        if !report.is_valid() {
            return Err(Error::InvalidScenario(format!(
                "ground history is not well-formed: {}",
                report
                    .violations
                    .iter()
                    .map(|v| v.detail.clone())
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        Ok(Scenario {
            name: name.to_string(),
            ground,
        })
    }

    /// Ground history assembled from a universe: all events, order closed
    /// over template edges plus message edges.
    pub fn from_universe(name: &str, universe: Arc<EventUniverse>) -> Result<Self> {
        let mask = if universe.len() == 64 {
            u64::MAX
        } else {
            (1u64 << universe.len()) - 1
        };
        let mut pairs = universe.template_edges().to_vec();
        pairs.extend(universe.msg_pairs().iter().copied());
        let ground = History::from_mask_and_pairs(universe, mask, &pairs)?;
        Scenario::new(name, ground)
    }

    pub fn universe(&self) -> &Arc<EventUniverse> {
        self.ground.universe()
    }

    /// The prefix of the ground induced by the given event ids, which must
    /// be downward closed.
    pub fn prefix(&self, ids: &[&str]) -> Result<History> {
        let mut mask = 0u64;
        for id in ids {
            mask |= 1 << self.universe().index_of(id)?;
        }
        let h = self.ground.restrict(mask);
        for i in h.indices() {
            if self.ground.preds_of(i) & !mask != 0 {
                return Err(Error::NotAPrefix);
            }
        }
        Ok(h)
    }
}

/// All downward-closed prefixes of the scenario ground, each carrying the
/// restricted order, sorted lexicographically by sorted event-id list.
pub fn enumerate_prefixes(s: &Scenario) -> Vec<History> {
    let ground = &s.ground;
    let mut seen = std::collections::BTreeSet::new();
    let mut stack = vec![0u64];
    seen.insert(0u64);
    while let Some(mask) = stack.pop() {
        for i in ground.indices() {
            let bit = 1u64 << i;
            if mask & bit != 0 {
                continue;
            }
            // Eligible when all predecessors are already present.
            if ground.preds_of(i) & !mask == 0 {
                let next = mask | bit;
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
    }
    let mut prefixes: Vec<History> = seen.into_iter().map(|m| ground.restrict(m)).collect();
    prefixes.sort_by(|a, b| a.sorted_ids().cmp(&b.sorted_ids()));
    prefixes
}

/// All prefixes of the scenario that are futures of `h`.
pub fn enumerate_extensions(h: &History, s: &Scenario) -> Result<Vec<History>> {
    if !is_future(h, &s.ground)? {
        return Err(Error::NotAPrefix);
    }
    let mut out = Vec::new();
    for p in enumerate_prefixes(s) {
        if is_future(h, &p)? {
            out.push(p);
        }
    }
    Ok(out)
}

/// Every well-formed history over the universe: all event subsets, all
/// strict partial orders extending the restricted template edges, filtered
/// by send/receive matching. Intended for small oracle runs.
pub fn enumerate_all_histories(
    universe: &Arc<EventUniverse>,
    max_events: usize,
) -> Result<Vec<History>> {
    let limit = max_events.min(EXHAUSTIVE_EVENT_LIMIT);
    if universe.len() > limit {
        return Err(Error::ExhaustiveTooLarge {
            limit,
            actual: universe.len(),
        });
    }
    let n = universe.len();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut out = Vec::new();
    let mut mask = 0u64;
    loop {
        let present: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let required: Vec<(usize, usize)> = universe
            .template_edges()
            .iter()
            .chain(universe.msg_pairs().iter())
            .copied()
            .filter(|&(a, b)| mask & (1 << a) != 0 && mask & (1 << b) != 0)
            .collect();
        let mut orders = std::collections::BTreeSet::new();
        enumerate_orders(&present, &required, &mut orders);
        for preds in orders {
            let pairs: Vec<(usize, usize)> = present
                .iter()
                .flat_map(|&b| {
                    let p = preds[b];
                    present
                        .iter()
                        .filter(move |&&a| p & (1 << a) != 0)
                        .map(move |&a| (a, b))
                })
                .collect();
            let h = History::from_mask_and_pairs(Arc::clone(universe), mask, &pairs)?;
            if validate_history(&h).is_valid() {
                out.push(h);
            }
        }
        if mask == full {
            break;
        }
        mask += 1;
    }
    out.sort();
    Ok(out)
}

/// Enumerates transitively-closed strict partial orders over `present`
/// extending `required`, as predecessor-mask vectors keyed by event index.
///
/// Elements are inserted one at a time; each new element chooses a
/// downward-closed predecessor set and an upward-closed successor set. Every
/// poset arises exactly once under the fixed insertion order.
fn enumerate_orders(
    present: &[usize],
    required: &[(usize, usize)],
    out: &mut std::collections::BTreeSet<Vec<u64>>,
) {
    let max_idx = present.iter().copied().max().map_or(0, |m| m + 1);
    let mut states: Vec<Vec<u64>> = vec![vec![0u64; max_idx.max(1)]];
    let mut placed = 0u64;
    for &e in present {
        let prior: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&i| placed & (1 << i) != 0)
            .collect();
        let mut next_states = Vec::new();
        for preds in &states {
            let succs: Vec<u64> = {
                let mut s = vec![0u64; max_idx.max(1)];
                for &b in &prior {
                    let mut below = preds[b];
                    while below != 0 {
                        let a = below.trailing_zeros() as usize;
                        below &= below - 1;
                        s[a] |= 1 << b;
                    }
                }
                s
            };
            for pset in subsets_of(&prior) {
                // Predecessor set must be downward closed.
                if prior.iter().any(|&p| pset & (1 << p) != 0 && preds[p] & !pset != 0) {
                    continue;
                }
                for sset in subsets_of(&prior) {
                    if pset & sset != 0 {
                        continue;
                    }
                    // Successor set must be upward closed.
                    if prior
                        .iter()
                        .any(|&s| sset & (1 << s) != 0 && succs[s] & !sset != 0)
                    {
                        continue;
                    }
                    // Every chosen predecessor must already precede every
                    // chosen successor, or closure would rewrite the prior order.
                    if prior
                        .iter()
                        .any(|&s| sset & (1 << s) != 0 && pset & !preds[s] != 0)
                    {
                        continue;
                    }
                    let mut np = preds.clone();
                    np[e] = pset;
                    for &s in &prior {
                        if sset & (1 << s) != 0 {
                            np[s] |= 1 << e;
                        }
                    }
                    next_states.push(np);
                }
            }
        }
        states = next_states;
        placed |= 1 << e;
    }
    for preds in states {
        let ok = required.iter().all(|&(a, b)| preds[b] & (1 << a) != 0);
        if ok {
            out.insert(preds);
        }
    }
}

fn subsets_of(items: &[usize]) -> Vec<u64> {
    let mut out = vec![0u64];
    for &i in items {
        let bit = 1u64 << i;
        let cur = out.clone();
        out.extend(cur.into_iter().map(|m| m | bit));
    }
    out
}

// --- Scenario JSON -----------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioJson {
    name: String,
    events: Vec<EventJson>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    msg: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventJson {
    id: String,
    kind: EventKind,
    proc: String,
    #[serde(default)]
    label: String,
    #[serde(default)]
    payload: Option<serde_json::Value>,
}

/// Loads a scenario from its JSON form. Order edges are closed transitively
/// on load; message pairs contribute order edges as well.
pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let raw: ScenarioJson = serde_json::from_str(text)?;
    let events: Vec<Event> = raw
        .events
        .into_iter()
        .map(|e| Event {
            id: e.id,
            kind: e.kind,
            proc: e.proc,
            label: e.label,
            payload: e.payload.map(|v| v.to_string()),
        })
        .collect();
    let universe = EventUniverse::from_parts(events, raw.edges, raw.msg)?;
    Scenario::from_universe(&raw.name, universe)
}

pub fn scenario_to_json(s: &Scenario) -> serde_json::Value {
    let u = s.universe();
    serde_json::json!({
        "name": s.name,
        "events": u.events().iter().map(|e| serde_json::json!({
            "id": e.id,
            "kind": e.kind,
            "proc": e.proc,
            "label": e.label,
            "payload": e.payload.as_ref().and_then(|p| serde_json::from_str::<serde_json::Value>(p).ok()),
        })).collect::<Vec<_>>(),
        "edges": s.ground.order_pairs(),
        "msg": u.msg_pairs().iter().map(|&(a, b)| (u.event(a).id.clone(), u.event(b).id.clone())).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain2() -> Scenario {
        let u = EventUniverse::new(
            vec![
                Event::new("e1", EventKind::Internal, "p", "a"),
                Event::new("e2", EventKind::Internal, "p", "b"),
            ],
            &[("e1", "e2")],
            &[],
        )
        .unwrap();
        Scenario::from_universe("chain2", u).unwrap()
    }

    fn antichain2() -> Scenario {
        let u = EventUniverse::new(
            vec![
                Event::new("a", EventKind::Internal, "p", ""),
                Event::new("b", EventKind::Internal, "q", ""),
            ],
            &[],
            &[],
        )
        .unwrap();
        Scenario::from_universe("antichain2", u).unwrap()
    }

    #[test]
    fn empty_history_is_valid() {
        let s = chain2();
        let h = History::empty(Arc::clone(s.universe()));
        assert!(validate_history(&h).is_valid());
    }

    #[test]
    fn recv_without_prior_send_is_invalid() {
        let u = EventUniverse::new(
            vec![
                Event::new("s", EventKind::Send, "p", ""),
                Event::new("r", EventKind::Recv, "q", ""),
            ],
            &[],
            &[("s", "r")],
        )
        .unwrap();
        // Both events present but no order edge between them.
        let h = History::new(Arc::clone(&u), &["s", "r"], &[]).unwrap();
        let report = validate_history(&h);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.clause == "recv-matching"));
    }

    #[test]
    fn send_preceding_two_matched_receives_is_invalid() {
        // Two pairs sharing a send are rejected at universe construction;
        // the history-level clause needs a hand-built relation instead.
        let err = EventUniverse::new(
            vec![
                Event::new("s", EventKind::Send, "p", ""),
                Event::new("r1", EventKind::Recv, "q", ""),
                Event::new("r2", EventKind::Recv, "q", ""),
            ],
            &[],
            &[("s", "r1"), ("s", "r2")],
        );
        assert!(err.is_err());
    }

    #[test]
    fn input_projection_restricts_to_inputs() {
        let u = EventUniverse::new(
            vec![
                Event::new("i1", EventKind::Input, "p", ""),
                Event::new("i2", EventKind::Input, "p", ""),
                Event::new("x", EventKind::Internal, "p", ""),
            ],
            &[("i1", "i2"), ("i1", "x")],
            &[],
        )
        .unwrap();
        let h = History::new(Arc::clone(&u), &["i1", "i2", "x"], &[("i1", "i2"), ("i1", "x")])
            .unwrap();
        let p = h.input_projection();
        assert_eq!(p.sorted_ids(), vec!["i1", "i2"]);
        assert!(p.precedes(u.index_of("i1").unwrap(), u.index_of("i2").unwrap()));
        assert!(validate_history(&p).is_valid());
        // Idempotence on input-only histories.
        assert_eq!(p.input_projection(), p);
        // No input events at all.
        let h2 = History::new(Arc::clone(&u), &["x"], &[]).unwrap();
        assert!(h2.input_projection().is_empty());
    }

    #[test]
    fn future_relation_basics() {
        let s = chain2();
        let ground = &s.ground;
        assert!(is_future(ground, ground).unwrap());
        let e1 = s.prefix(&["e1"]).unwrap();
        assert!(is_future(&e1, ground).unwrap());
        // {e2} alone is not downward closed under the ground order.
        let h2 = s.ground.restrict(1 << s.universe().index_of("e2").unwrap());
        assert!(!is_future(&h2, ground).unwrap());
    }

    #[test]
    fn future_requires_same_universe() {
        let s1 = chain2();
        let s2 = antichain2();
        assert!(matches!(
            is_future(&s1.ground, &s2.ground),
            Err(Error::UniverseMismatch)
        ));
    }

    #[test]
    fn prefix_counts_chain_and_antichain() {
        assert_eq!(enumerate_prefixes(&chain2()).len(), 3);
        assert_eq!(enumerate_prefixes(&antichain2()).len(), 4);
    }

    #[test]
    fn extensions_are_filtered_futures() {
        let s = antichain2();
        let all = enumerate_prefixes(&s);
        let h = s.prefix(&["a"]).unwrap();
        let exts = enumerate_extensions(&h, &s).unwrap();
        let expected: Vec<History> = all
            .iter()
            .filter(|p| is_future(&h, p).unwrap())
            .cloned()
            .collect();
        assert_eq!(exts, expected);
        assert_eq!(exts.len(), 2);
        // The ground extends only to itself; the empty history to everything.
        assert_eq!(enumerate_extensions(&s.ground, &s).unwrap(), vec![s.ground.clone()]);
        let empty = History::empty(Arc::clone(s.universe()));
        assert_eq!(enumerate_extensions(&empty, &s).unwrap().len(), 4);
    }

    #[test]
    fn concurrency_checks() {
        let s = chain2();
        assert!(!concurrent(&s.ground, "e1", "e2").unwrap());
        assert!(!concurrent(&s.ground, "e1", "e1").unwrap());
        let t = antichain2();
        assert!(concurrent(&t.ground, "a", "b").unwrap());
        let h = t.prefix(&["a"]).unwrap();
        assert!(matches!(
            concurrent(&h, "a", "b"),
            Err(Error::AbsentEvent(_))
        ));
    }

    #[test]
    fn exhaustive_enumeration_small() {
        // One event: empty history + singleton = 2.
        let u = EventUniverse::new(
            vec![Event::new("a", EventKind::Internal, "p", "")],
            &[],
            &[],
        )
        .unwrap();
        assert_eq!(enumerate_all_histories(&u, 6).unwrap().len(), 2);
        // Two unconstrained events: {}, {a}, {b}, {a,b} with 3 orders = 6.
        let t = antichain2();
        let all = enumerate_all_histories(t.universe(), 6).unwrap();
        assert_eq!(all.len(), 6);
        for h in &all {
            assert!(validate_history(h).is_valid());
        }
        // A template edge pins the order on the full subset.
        let c = chain2();
        let all = enumerate_all_histories(c.universe(), 6).unwrap();
        // {}, {e1}, {e1,e2 ordered}; {e2} alone is well-formed too.
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn scenario_json_round_trip() {
        let text = r#"{
            "name": "wire",
            "events": [
                {"id": "s", "kind": "send", "proc": "p", "label": "m"},
                {"id": "r", "kind": "recv", "proc": "q", "label": "m"}
            ],
            "edges": [],
            "msg": [["s", "r"]]
        }"#;
        let s = scenario_from_json(text).unwrap();
        assert_eq!(s.ground.len(), 2);
        assert!(s
            .ground
            .precedes(s.universe().index_of("s").unwrap(), s.universe().index_of("r").unwrap()));
        let v = scenario_to_json(&s);
        let s2 = scenario_from_json(&v.to_string()).unwrap();
        assert_eq!(s2.ground.fingerprint(), s.ground.fingerprint());
    }

    #[test]
    fn fingerprint_is_canonical() {
        let s = chain2();
        assert_eq!(s.ground.fingerprint(), "e1,e2|e1<e2");
        assert_eq!(
            History::empty(Arc::clone(s.universe())).fingerprint(),
            "|"
        );
    }
}
