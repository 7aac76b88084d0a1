//! Transactional isolation over a two-transaction workload with recorded
//! read values (the write-skew pair: T1 reads x and writes y, T2 reads y
//! and writes x, both reading 0).
//!
//! Outcomes are fact sets over commits and reads, ordered by inclusion.
//! Under the snapshot-ordered level each transaction reads from the causal
//! cut at its begin event and conflicting writers must not overlap, so a
//! completion whose recorded read contradicts its forced snapshot leaves no
//! admissible outcome at all. Read-committed constraints are prefix-stable:
//! recorded values need only be initial or committed, so facts accumulate.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsolationLevel {
    ReadCommitted,
    SnapshotOrdered,
}

#[derive(Debug, Clone)]
pub struct Txn {
    pub id: String,
    /// (variable, recorded value) for each read the transaction performed.
    pub reads: Vec<(String, u64)>,
    /// (variable, value) writes installed at commit.
    pub writes: Vec<(String, u64)>,
    pub begin: usize,
    pub commit: usize,
}

struct IsolationRule {
    level: IsolationLevel,
    txns: Vec<Txn>,
}

impl IsolationRule {
    fn committed<'a>(&'a self, h: &History) -> Vec<&'a Txn> {
        self.txns.iter().filter(|t| h.contains(t.commit)).collect()
    }

    fn facts_of(txns: &[&Txn]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in txns {
            out.insert(format!("commit({})", t.id));
            for (var, val) in &t.reads {
                out.insert(format!("read({},{},{})", t.id, var, val));
            }
        }
        out
    }

    fn valid(&self, h: &History, committed: &[&Txn]) -> bool {
        match self.level {
            IsolationLevel::ReadCommitted => {
                // Recorded values must be initial or installed by some
                // committed transaction.
                for t in committed {
                    for (var, val) in &t.reads {
                        let ok = *val == 0
                            || committed.iter().any(|t2| {
                                t2.writes.iter().any(|(v2, val2)| v2 == var && val2 == val)
                            });
                        if !ok {
                            return false;
                        }
                    }
                }
                true
            }
            IsolationLevel::SnapshotOrdered => {
                // Snapshot of t: transactions committed in the causal past
                // of its begin event.
                for t in committed {
                    let mut state: BTreeMap<&str, u64> = BTreeMap::new();
                    for t2 in committed {
                        if h.precedes(t2.commit, t.begin) {
                            for (var, val) in &t2.writes {
                                state.insert(var.as_str(), *val);
                            }
                        }
                    }
                    for (var, val) in &t.reads {
                        let seen = state.get(var.as_str()).copied().unwrap_or(0);
                        if seen != *val {
                            return false;
                        }
                    }
                }
                // First committer wins: write-write conflicting pairs must
                // not overlap.
                for (i, a) in committed.iter().enumerate() {
                    for b in committed.iter().skip(i + 1) {
                        let conflict = a
                            .writes
                            .iter()
                            .any(|(v, _)| b.writes.iter().any(|(v2, _)| v == v2));
                        if conflict
                            && !h.precedes(a.commit, b.begin)
                            && !h.precedes(b.commit, a.begin)
                        {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }
}

impl ObsEval for IsolationRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let committed = self.committed(h);
        if !self.valid(h, &committed) {
            return Ok(BTreeSet::new());
        }
        Ok([Outcome::Facts(Self::facts_of(&committed))]
            .into_iter()
            .collect())
    }
}

/// Write-skew workload: T1 begins, reads x = 0, writes y := 1, commits;
/// T2 begins after T1's commit is causally visible, reads y = 0 anyway,
/// writes x := 1, commits.
pub fn isolation_spec(level: IsolationLevel) -> Result<(Specification, Scenario)> {
    let events = vec![
        Event::new("t1", EventKind::Input, "c1", "txn-request"),
        Event::new("b1", EventKind::Internal, "s", "begin"),
        Event::new("c1", EventKind::Internal, "s", "commit"),
        Event::new("t2", EventKind::Input, "c2", "txn-request"),
        Event::new("b2", EventKind::Internal, "s", "begin"),
        Event::new("c2", EventKind::Internal, "s", "commit"),
    ];
    let edges = vec![
        ("t1".to_string(), "b1".to_string()),
        ("b1".to_string(), "c1".to_string()),
        ("c1".to_string(), "b2".to_string()),
        ("t2".to_string(), "b2".to_string()),
        ("b2".to_string(), "c2".to_string()),
    ];
    let universe = EventUniverse::from_parts(events, edges, Vec::new())?;
    let name = match level {
        IsolationLevel::ReadCommitted => "isolation-rc",
        IsolationLevel::SnapshotOrdered => "isolation-si",
    };
    let scenario = Scenario::from_universe(name, Arc::clone(&universe))?;
    let txns = vec![
        Txn {
            id: "T1".to_string(),
            reads: vec![("x".to_string(), 0)],
            writes: vec![("y".to_string(), 1)],
            begin: universe.index_of("b1")?,
            commit: universe.index_of("c1")?,
        },
        Txn {
            id: "T2".to_string(),
            reads: vec![("y".to_string(), 0)],
            writes: vec![("x".to_string(), 1)],
            begin: universe.index_of("b2")?,
            commit: universe.index_of("c2")?,
        },
    ];
    let mut fact_universe = BTreeSet::new();
    for t in &txns {
        fact_universe.insert(format!("commit({})", t.id));
        for (var, _) in &t.reads {
            for val in 0..=1u64 {
                fact_universe.insert(format!("read({},{},{})", t.id, var, val));
            }
        }
    }
    let domain = make_domain(DomainKind::Inclusion {
        universe: fact_universe.into_iter().collect(),
    })?;
    let rule = IsolationRule { level, txns };
    Ok((
        Specification::new(name, universe, domain, Arc::new(rule)),
        scenario,
    ))
}

pub fn isolation_case(level: IsolationLevel, params: &serde_json::Value) -> Result<CaseBundle> {
    if !params.is_null() && params != &serde_json::json!({}) {
        return Err(Error::InvalidParams(
            "isolation cases take no parameters; the workload is fixed".to_string(),
        ));
    }
    let (spec, scenario) = isolation_spec(level)?;
    let expected = matches!(level, IsolationLevel::ReadCommitted);
    Ok(CaseBundle {
        name: spec.name.clone(),
        spec,
        scenario,
        expected_monotone: Some(expected),
        claimed_monotone: Some(expected),
        reference: "transactional isolation",
        extras: serde_json::json!({}),
    })
}
