//! Finite outcome domains carrying a refinement order, plus consistency
//! (common-refinement) checking.
//!
//! Constructors build the full finite carrier up front and validate the
//! order axioms, so downstream checks can brute-force over elements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on constructed carrier sizes.
pub const DEFAULT_CARRIER_CAP: usize = 20_000;

/// Exhaustive transitivity validation is skipped above this element count;
/// reflexivity and antisymmetry are always checked.
const TRANSITIVITY_CHECK_LIMIT: usize = 300;

/// A structured outcome value. Which variant is in play depends on the
/// domain a specification declares.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    /// Sequence of operation records, e.g. completed reads and writes.
    #[serde(rename = "seq")]
    Seq(Vec<String>),
    /// A set of facts or states.
    #[serde(rename = "facts")]
    Facts(BTreeSet<String>),
    /// A partial map, e.g. process to decided value or name.
    #[serde(rename = "map")]
    Map(BTreeMap<String, String>),
    /// A candidate set ordered by reverse inclusion.
    #[serde(rename = "candidates")]
    Candidates(BTreeSet<String>),
    /// An authority sequence plus slot decisions made under its last entry.
    #[serde(rename = "phase")]
    Phase {
        auth: Vec<String>,
        slots: BTreeMap<String, String>,
    },
    /// A numeric outcome ordered by `<=`.
    #[serde(rename = "num")]
    Num(u64),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Seq(items) => write!(f, "<{}>", items.join(",")),
            Outcome::Facts(facts) => {
                write!(f, "{{{}}}", facts.iter().cloned().collect::<Vec<_>>().join(","))
            }
            Outcome::Map(m) => {
                let body: Vec<String> = m.iter().map(|(k, v)| format!("{k}->{v}")).collect();
                write!(f, "{{{}}}", body.join(","))
            }
            Outcome::Candidates(c) => {
                write!(f, "~{{{}}}", c.iter().cloned().collect::<Vec<_>>().join(","))
            }
            Outcome::Phase { auth, slots } => {
                let body: Vec<String> = slots.iter().map(|(k, v)| format!("{k}->{v}")).collect();
                write!(f, "([{}],{{{}}})", auth.join(","), body.join(","))
            }
            Outcome::Num(n) => write!(f, "{n}"),
        }
    }
}

/// How a domain orders its elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "kebab-case")]
pub enum DomainKind {
    /// Prefix extension over bounded sequences of symbols, each symbol used
    /// at most once per sequence.
    Prefix {
        symbols: Vec<String>,
        max_len: usize,
    },
    /// Set inclusion over subsets of a fact universe.
    Inclusion { universe: Vec<String> },
    /// Partial-map extension over keys and values.
    Map {
        keys: Vec<String>,
        values: Vec<String>,
    },
    /// Reverse set inclusion over candidate subsets.
    ReverseInclusion { universe: Vec<String> },
    /// Authority-phase order: prefix extension of the authority sequence
    /// while no decisions are exposed, then map extension under a fixed
    /// authority sequence.
    Consensus {
        authorities: Vec<String>,
        max_auth_len: usize,
        slots: Vec<String>,
        values: Vec<String>,
    },
    /// Numeric order over 0..=max.
    Numeric { max: u64 },
    /// An explicitly supplied order over an explicit element list; produced
    /// by derived constructions such as the induced order of an
    /// implementation.
    Explicit,
}

/// A finite set of outcomes with a validated refinement order.
#[derive(Debug, Clone)]
pub struct OutcomeDomain {
    kind: DomainKind,
    elements: Vec<Outcome>,
    index: BTreeMap<Outcome, usize>,
    /// leq[a] holds the indices b with a <= b.
    above: Vec<BTreeSet<usize>>,
}

impl OutcomeDomain {
    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn elements(&self) -> &[Outcome] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, o: &Outcome) -> bool {
        self.index.contains_key(o)
    }

    fn idx(&self, o: &Outcome) -> Result<usize> {
        self.index
            .get(o)
            .copied()
            .ok_or_else(|| Error::NonMemberOutcome(o.to_string()))
    }

    /// Membership of (o1, o2) in the refinement order.
    pub fn leq(&self, o1: &Outcome, o2: &Outcome) -> Result<bool> {
        let a = self.idx(o1)?;
        let b = self.idx(o2)?;
        Ok(self.above[a].contains(&b))
    }

    /// True iff some element refines every member of `s`.
    pub fn is_consistent<'a, I>(&self, s: I) -> Result<bool>
    where
        I: IntoIterator<Item = &'a Outcome>,
    {
        Ok(!self.common_refinements(s)?.is_empty())
    }

    /// All elements refining every member of `s`; the empty set of
    /// constraints yields every element.
    pub fn common_refinements<'a, I>(&self, s: I) -> Result<BTreeSet<Outcome>>
    where
        I: IntoIterator<Item = &'a Outcome>,
    {
        let mut live: BTreeSet<usize> = (0..self.elements.len()).collect();
        for o in s {
            let a = self.idx(o)?;
            live = live.intersection(&self.above[a]).copied().collect();
            if live.is_empty() {
                break;
            }
        }
        Ok(live.into_iter().map(|i| self.elements[i].clone()).collect())
    }
}

/// Builds a domain from its descriptor with the default carrier cap.
pub fn make_domain(kind: DomainKind) -> Result<OutcomeDomain> {
    make_domain_capped(kind, DEFAULT_CARRIER_CAP)
}

pub fn make_domain_capped(kind: DomainKind, cap: usize) -> Result<OutcomeDomain> {
    let elements = generate_elements(&kind, cap)?;
    build_domain(kind, elements)
}

/// Builds a domain over an explicit element list using the kind's order
/// rule. Elements must belong to the kind's carrier shape.
pub fn domain_from_elements(kind: DomainKind, elements: Vec<Outcome>) -> Result<OutcomeDomain> {
    build_domain(kind, elements)
}

/// Builds a domain from an explicit strict-or-reflexive relation given as
/// (lower, higher) pairs; the reflexive-transitive closure is taken and the
/// axioms validated.
pub fn domain_from_relation(
    elements: Vec<Outcome>,
    pairs: &[(Outcome, Outcome)],
) -> Result<OutcomeDomain> {
    let mut elements = elements;
    elements.sort();
    elements.dedup();
    let mut index = BTreeMap::new();
    for (i, o) in elements.iter().enumerate() {
        index.insert(o.clone(), i);
    }
    let n = elements.len();
    let mut above = vec![BTreeSet::new(); n];
    for (i, row) in above.iter_mut().enumerate() {
        row.insert(i);
    }
    for (lo, hi) in pairs {
        let a = index
            .get(lo)
            .copied()
            .ok_or_else(|| Error::NonMemberOutcome(lo.to_string()))?;
        let b = index
            .get(hi)
            .copied()
            .ok_or_else(|| Error::NonMemberOutcome(hi.to_string()))?;
        above[a].insert(b);
    }
    // Transitive closure.
    let mut changed = true;
    while changed {
        changed = false;
        for a in 0..n {
            let reach: Vec<usize> = above[a].iter().copied().collect();
            for b in reach {
                let extra: Vec<usize> = above[b].difference(&above[a]).copied().collect();
                if !extra.is_empty() {
                    above[a].extend(extra);
                    changed = true;
                }
            }
        }
    }
    let d = OutcomeDomain {
        kind: DomainKind::Explicit,
        elements,
        index,
        above,
    };
    validate_axioms(&d)?;
    Ok(d)
}

fn build_domain(kind: DomainKind, mut elements: Vec<Outcome>) -> Result<OutcomeDomain> {
    elements.sort();
    elements.dedup();
    let mut index = BTreeMap::new();
    for (i, o) in elements.iter().enumerate() {
        index.insert(o.clone(), i);
    }
    let mut above = vec![BTreeSet::new(); elements.len()];
    for (a, oa) in elements.iter().enumerate() {
        for (b, ob) in elements.iter().enumerate() {
            if leq_rule(&kind, oa, ob) {
                above[a].insert(b);
            }
        }
    }
    let d = OutcomeDomain {
        kind,
        elements,
        index,
        above,
    };
    validate_axioms(&d)?;
    Ok(d)
}

fn validate_axioms(d: &OutcomeDomain) -> Result<()> {
    let n = d.elements.len();
    for a in 0..n {
        if !d.above[a].contains(&a) {
            return Err(Error::InvalidDomain(format!(
                "order is not reflexive at {}",
                d.elements[a]
            )));
        }
        for &b in &d.above[a] {
            if b != a && d.above[b].contains(&a) {
                return Err(Error::InvalidDomain(format!(
                    "order is not antisymmetric between {} and {}",
                    d.elements[a], d.elements[b]
                )));
            }
        }
    }
    if n <= TRANSITIVITY_CHECK_LIMIT {
        for a in 0..n {
            for &b in &d.above[a] {
                for &c in &d.above[b] {
                    if !d.above[a].contains(&c) {
                        return Err(Error::InvalidDomain(format!(
                            "order is not transitive through {}",
                            d.elements[b]
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn leq_rule(kind: &DomainKind, a: &Outcome, b: &Outcome) -> bool {
    match (kind, a, b) {
        (DomainKind::Prefix { .. }, Outcome::Seq(x), Outcome::Seq(y)) => {
            x.len() <= y.len() && y[..x.len()] == x[..]
        }
        (DomainKind::Inclusion { .. }, Outcome::Facts(x), Outcome::Facts(y)) => x.is_subset(y),
        (DomainKind::Map { .. }, Outcome::Map(x), Outcome::Map(y)) => {
            x.iter().all(|(k, v)| y.get(k) == Some(v))
        }
        (DomainKind::ReverseInclusion { .. }, Outcome::Candidates(x), Outcome::Candidates(y)) => {
            y.is_subset(x)
        }
        (
            DomainKind::Consensus { .. },
            Outcome::Phase { auth: a1, slots: m1 },
            Outcome::Phase { auth: a2, slots: m2 },
        ) => {
            let auth_ext =
                m1.is_empty() && a1.len() <= a2.len() && a2[..a1.len()] == a1[..];
            let value_ext = a1 == a2 && m1.iter().all(|(k, v)| m2.get(k) == Some(v));
            auth_ext || value_ext
        }
        (DomainKind::Numeric { .. }, Outcome::Num(x), Outcome::Num(y)) => x <= y,
        _ => false,
    }
}

fn generate_elements(kind: &DomainKind, cap: usize) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    match kind {
        DomainKind::Prefix { symbols, max_len } => {
            // Sequences of distinct symbols up to max_len.
            let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
            out.push(Outcome::Seq(Vec::new()));
            for _ in 0..*max_len {
                let mut next = Vec::new();
                for seq in &frontier {
                    for s in symbols {
                        if !seq.contains(s) {
                            let mut grown = seq.clone();
                            grown.push(s.clone());
                            out.push(Outcome::Seq(grown.clone()));
                            next.push(grown);
                            check_cap(out.len(), cap)?;
                        }
                    }
                }
                frontier = next;
            }
        }
        DomainKind::Inclusion { universe } => {
            for set in power_set(universe, cap)? {
                out.push(Outcome::Facts(set));
            }
        }
        DomainKind::ReverseInclusion { universe } => {
            for set in power_set(universe, cap)? {
                out.push(Outcome::Candidates(set));
            }
        }
        DomainKind::Map { keys, values } => {
            let mut maps: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
            for k in keys {
                let mut next = Vec::new();
                for m in &maps {
                    next.push(m.clone());
                    for v in values {
                        let mut grown = m.clone();
                        grown.insert(k.clone(), v.clone());
                        next.push(grown);
                    }
                    check_cap(next.len(), cap)?;
                }
                maps = next;
            }
            out.extend(maps.into_iter().map(Outcome::Map));
        }
        DomainKind::Consensus {
            authorities,
            max_auth_len,
            slots,
            values,
        } => {
            let mut seqs: Vec<Vec<String>> = vec![Vec::new()];
            let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
            for _ in 0..*max_auth_len {
                let mut next = Vec::new();
                for seq in &frontier {
                    for a in authorities {
                        if !seq.contains(a) {
                            let mut grown = seq.clone();
                            grown.push(a.clone());
                            seqs.push(grown.clone());
                            next.push(grown);
                        }
                    }
                }
                frontier = next;
            }
            let mut maps: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
            for s in slots {
                let mut next = Vec::new();
                for m in &maps {
                    next.push(m.clone());
                    for v in values {
                        let mut grown = m.clone();
                        grown.insert(s.clone(), v.clone());
                        next.push(grown);
                    }
                }
                maps = next;
            }
            for seq in &seqs {
                for m in &maps {
                    // Decisions require an authority to decide under.
                    if seq.is_empty() && !m.is_empty() {
                        continue;
                    }
                    out.push(Outcome::Phase {
                        auth: seq.clone(),
                        slots: m.clone(),
                    });
                    check_cap(out.len(), cap)?;
                }
            }
        }
        DomainKind::Numeric { max } => {
            let count = (*max as usize).saturating_add(1);
            check_cap(count, cap)?;
            out.extend((0..=*max).map(Outcome::Num));
        }
        DomainKind::Explicit => {
            return Err(Error::InvalidDomain(
                "explicit domains require an element list and relation".to_string(),
            ));
        }
    }
    check_cap(out.len(), cap)?;
    Ok(out)
}

fn check_cap(actual: usize, cap: usize) -> Result<()> {
    if actual > cap {
        Err(Error::CarrierTooLarge { actual, cap })
    } else {
        Ok(())
    }
}

fn power_set(universe: &[String], cap: usize) -> Result<Vec<BTreeSet<String>>> {
    if universe.len() >= usize::BITS as usize || (1usize << universe.len()) > cap {
        return Err(Error::CarrierTooLarge {
            actual: usize::MAX,
            cap,
        });
    }
    let mut out = vec![BTreeSet::new()];
    for item in universe {
        let cur = out.clone();
        out.extend(cur.into_iter().map(|mut s: BTreeSet<String>| {
            s.insert(item.clone());
            s
        }));
    }
    Ok(out)
}

// Convenience constructors used across the case studies.

pub fn seq(items: &[&str]) -> Outcome {
    Outcome::Seq(items.iter().map(|s| s.to_string()).collect())
}

pub fn facts(items: &[&str]) -> Outcome {
    Outcome::Facts(items.iter().map(|s| s.to_string()).collect())
}

pub fn map(pairs: &[(&str, &str)]) -> Outcome {
    Outcome::Map(
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
    )
}

pub fn phase(auth: &[&str], slots: &[(&str, &str)]) -> Outcome {
    Outcome::Phase {
        auth: auth.iter().map(|s| s.to_string()).collect(),
        slots: slots
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn prefix_domain_small() {
        let d = make_domain(DomainKind::Prefix {
            symbols: strings(&["read(0)", "read(1)"]),
            max_len: 1,
        })
        .unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.leq(&seq(&[]), &seq(&["read(0)"])).unwrap());
        assert!(!d.leq(&seq(&["read(0)"]), &seq(&["read(1)"])).unwrap());
    }

    #[test]
    fn inclusion_domain_order() {
        let d = make_domain(DomainKind::Inclusion {
            universe: strings(&["f1", "f2"]),
        })
        .unwrap();
        assert!(d.leq(&facts(&["f1"]), &facts(&["f1", "f2"])).unwrap());
        assert!(!d.leq(&facts(&["f1", "f2"]), &facts(&["f1"])).unwrap());
    }

    #[test]
    fn map_domain_count_and_order() {
        let d = make_domain(DomainKind::Map {
            keys: strings(&["p", "q"]),
            values: strings(&["1", "2"]),
        })
        .unwrap();
        // Each key unset or one of two values.
        assert_eq!(d.len(), 9);
        assert!(d.leq(&map(&[("p", "1")]), &map(&[("p", "1"), ("q", "2")])).unwrap());
        assert!(!d.leq(&map(&[("p", "1")]), &map(&[("p", "2")])).unwrap());
    }

    #[test]
    fn consensus_phase_order() {
        let d = make_domain(DomainKind::Consensus {
            authorities: strings(&["a", "a'"]),
            max_auth_len: 2,
            slots: strings(&["1"]),
            values: strings(&["v"]),
        })
        .unwrap();
        assert!(d.leq(&phase(&["a"], &[]), &phase(&["a"], &[("1", "v")])).unwrap());
        assert!(!d.leq(&phase(&["a"], &[]), &phase(&["a'"], &[])).unwrap());
        assert!(d.leq(&phase(&["a"], &[]), &phase(&["a", "a'"], &[])).unwrap());
        // Decisions do not survive an authority change.
        assert!(!d
            .leq(&phase(&["a"], &[("1", "v")]), &phase(&["a", "a'"], &[("1", "v")]))
            .unwrap());
        // No element with decisions under an empty authority sequence.
        assert!(!d.contains(&phase(&[], &[("1", "v")])));
    }

    #[test]
    fn consensus_nonempty_slots_never_below_other_authority() {
        let d = make_domain(DomainKind::Consensus {
            authorities: strings(&["a", "b"]),
            max_auth_len: 2,
            slots: strings(&["1"]),
            values: strings(&["v"]),
        })
        .unwrap();
        let committed = phase(&["a"], &[("1", "v")]);
        for other in d.elements() {
            if let Outcome::Phase { auth, .. } = other {
                if auth != &strings(&["a"]) {
                    assert!(!d.leq(&committed, other).unwrap());
                }
            }
        }
    }

    #[test]
    fn numeric_domain() {
        let d = make_domain(DomainKind::Numeric { max: 4 }).unwrap();
        assert_eq!(d.len(), 5);
        assert!(d.leq(&Outcome::Num(2), &Outcome::Num(4)).unwrap());
        assert!(!d.leq(&Outcome::Num(4), &Outcome::Num(2)).unwrap());
    }

    #[test]
    fn consistency_checks() {
        let d = make_domain(DomainKind::Prefix {
            symbols: strings(&["read(0)", "read(1)", "write(1)"]),
            max_len: 2,
        })
        .unwrap();
        // Empty set: every element is a common refinement.
        assert!(d.is_consistent([]).unwrap());
        assert_eq!(d.common_refinements([]).unwrap().len(), d.len());
        // Contradicting register outcomes.
        let o0 = seq(&["read(0)"]);
        let o1 = seq(&["read(1)"]);
        assert!(!d.is_consistent([&o0, &o1]).unwrap());
        assert!(d.common_refinements([&o0, &o1]).unwrap().is_empty());
        // Singleton: the up-set.
        let up = d.common_refinements([&o0]).unwrap();
        assert!(up.contains(&o0));
        assert!(up.contains(&seq(&["read(0)", "write(1)"])));
        assert!(!up.contains(&seq(&["write(1)", "read(0)"])));
    }

    #[test]
    fn disjoint_maps_merge() {
        let d = make_domain(DomainKind::Map {
            keys: strings(&["p1", "p2"]),
            values: strings(&["a", "b"]),
        })
        .unwrap();
        let m1 = map(&[("p1", "a")]);
        let m2 = map(&[("p2", "b")]);
        assert!(d.is_consistent([&m1, &m2]).unwrap());
    }

    #[test]
    fn consistency_is_antitone() {
        let d = make_domain(DomainKind::Inclusion {
            universe: strings(&["x", "y", "z"]),
        })
        .unwrap();
        let a = facts(&["x"]);
        let b = facts(&["y"]);
        let c = facts(&["z"]);
        let big = [&a, &b, &c];
        let small = [&a, &b];
        if d.is_consistent(big).unwrap() {
            assert!(d.is_consistent(small).unwrap());
        }
    }

    #[test]
    fn carrier_cap_enforced() {
        let err = make_domain_capped(
            DomainKind::Inclusion {
                universe: (0..20).map(|i| format!("f{i}")).collect(),
            },
            1000,
        );
        assert!(matches!(err, Err(Error::CarrierTooLarge { .. })));
    }

    #[test]
    fn singleton_consistency_reflexive() {
        let d = make_domain(DomainKind::Numeric { max: 6 }).unwrap();
        for o in d.elements() {
            assert!(d.is_consistent([o]).unwrap());
        }
    }

    #[test]
    fn non_member_rejected() {
        let d = make_domain(DomainKind::Numeric { max: 2 }).unwrap();
        assert!(matches!(
            d.leq(&Outcome::Num(5), &Outcome::Num(1)),
            Err(Error::NonMemberOutcome(_))
        ));
    }
}
