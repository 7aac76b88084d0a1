//! Specifications and the future-monotonicity decision procedure.
//!
//! A specification pairs an event universe with an observability function
//! (which outcomes may be exposed at each history) and a finite outcome
//! domain carrying the refinement order. The checker enumerates ordered
//! prefix pairs of a scenario (or, in exhaustive mode, all well-formed
//! histories over a small universe) and collects witnesses: outcomes
//! admitted at a history that no outcome of some future refines.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::history::{
    enumerate_all_histories, enumerate_extensions, enumerate_prefixes, is_future, History,
    Scenario,
};
use crate::outcome::{Outcome, OutcomeDomain};
use crate::{Error, Result};

/// Observability rule: total over well-formed histories of the universe.
pub trait ObsEval: Send + Sync {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>>;
}

/// A specification: universe, observability function, outcome domain.
#[derive(Clone)]
pub struct Specification {
    pub name: String,
    universe: Arc<crate::history::EventUniverse>,
    domain: Arc<OutcomeDomain>,
    rule: Arc<dyn ObsEval>,
}

impl Specification {
    pub fn new(
        name: &str,
        universe: Arc<crate::history::EventUniverse>,
        domain: OutcomeDomain,
        rule: Arc<dyn ObsEval>,
    ) -> Self {
        Specification {
            name: name.to_string(),
            universe,
            domain: Arc::new(domain),
            rule,
        }
    }

    pub fn universe(&self) -> &Arc<crate::history::EventUniverse> {
        &self.universe
    }

    pub fn domain(&self) -> &OutcomeDomain {
        &self.domain
    }

    pub fn rule_handle(&self) -> Arc<dyn ObsEval> {
        Arc::clone(&self.rule)
    }

    /// Replaces the outcome domain, keeping the observability rule.
    pub fn with_domain(&self, domain: OutcomeDomain) -> Specification {
        Specification {
            name: self.name.clone(),
            universe: Arc::clone(&self.universe),
            domain: Arc::new(domain),
            rule: Arc::clone(&self.rule),
        }
    }

    /// Outcomes admissible at `h`. Every outcome must be a domain element.
    pub fn obs(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        if h.universe() != &self.universe {
            return Err(Error::UniverseMismatch);
        }
        let set = self.rule.eval(h)?;
        for o in &set {
            if !self.domain.contains(o) {
                return Err(Error::NonMemberOutcome(o.to_string()));
            }
        }
        Ok(set)
    }
}

impl std::fmt::Debug for Specification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Specification({})", self.name)
    }
}

/// Table-driven observability keyed by canonical history fingerprints.
pub struct ObsTable {
    pub entries: BTreeMap<String, BTreeSet<Outcome>>,
}

impl ObsEval for ObsTable {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        self.entries
            .get(&h.fingerprint())
            .cloned()
            .ok_or_else(|| Error::TableMissing(h.fingerprint()))
    }
}

/// Checks that a table-driven specification is total on scenario prefixes.
pub fn validate_table_totality(spec: &Specification, s: &Scenario) -> Result<()> {
    for p in enumerate_prefixes(s) {
        spec.obs(&p)?;
    }
    Ok(())
}

/// Union of obs over all extensions of `h` within the scenario.
pub fn poss(spec: &Specification, h: &History, s: &Scenario) -> Result<BTreeSet<Outcome>> {
    let mut out = BTreeSet::new();
    for ext in enumerate_extensions(h, s)? {
        out.extend(spec.obs(&ext)?);
    }
    Ok(out)
}

/// All prefixes of the scenario whose input projection extends `h_in`.
pub fn admissible(h_in: &History, s: &Scenario) -> Result<Vec<History>> {
    if !h_in.is_input_only() {
        return Err(Error::NonInputEvents);
    }
    let mut out = Vec::new();
    for p in enumerate_prefixes(s) {
        if is_future(h_in, &p.input_projection())? {
            out.push(p);
        }
    }
    Ok(out)
}

/// Union of obs over extensions of `h` whose input projection extends
/// `h_in`. Requires `h` to be admissible for `h_in`.
pub fn poss_relative(
    spec: &Specification,
    h_in: &History,
    h: &History,
    s: &Scenario,
) -> Result<BTreeSet<Outcome>> {
    if !h_in.is_input_only() {
        return Err(Error::NonInputEvents);
    }
    if !is_future(h_in, &h.input_projection())? {
        return Err(Error::NotAdmissible);
    }
    let mut out = BTreeSet::new();
    for ext in enumerate_extensions(h, s)? {
        if is_future(h_in, &ext.input_projection())? {
            out.extend(spec.obs(&ext)?);
        }
    }
    Ok(out)
}

/// Whether `o`, admitted at `h`, keeps a refinement in obs at every
/// extension. On failure returns the least failing extension (fewest
/// events, then id order).
pub fn is_future_consistent(
    spec: &Specification,
    h: &History,
    o: &Outcome,
    s: &Scenario,
) -> Result<(bool, Option<History>)> {
    if !spec.obs(h)?.contains(o) {
        return Err(Error::OutcomeNotAdmitted(o.to_string()));
    }
    let mut exts = enumerate_extensions(h, s)?;
    exts.sort_by_key(|e| (e.len(), e.sorted_ids()));
    for ext in exts {
        let outcomes = spec.obs(&ext)?;
        let mut refined = false;
        for o2 in &outcomes {
            if spec.domain().leq(o, o2)? {
                refined = true;
                break;
            }
        }
        if !refined {
            return Ok((false, Some(ext)));
        }
    }
    Ok((true, None))
}

/// A certified failure of future-monotonicity: `outcome` is admitted at
/// `h1`, `h2` is a future of `h1`, and no outcome at `h2` refines it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub h1: History,
    pub h2: History,
    pub outcome: Outcome,
}

impl Witness {
    fn sort_key(&self) -> (usize, usize, Outcome, Vec<String>, Vec<String>) {
        (
            self.h2.len(),
            self.h1.len(),
            self.outcome.clone(),
            self.h2.sorted_ids(),
            self.h1.sorted_ids(),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "h1": self.h1.sorted_ids(),
            "h2": self.h2.sorted_ids(),
            "outcome": self.outcome,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Scenario,
    Exhaustive,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Scenario => f.write_str("scenario"),
            Mode::Exhaustive => f.write_str("exhaustive"),
        }
    }
}

/// Outcome of a monotonicity check over a finite history universe.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub monotone: bool,
    /// All witnesses, sorted by (|h2|, |h1|, outcome, ids); the first is the
    /// flagged minimal witness.
    pub witnesses: Vec<Witness>,
    pub pairs_checked: u64,
    pub mode: Mode,
    pub universe_bound: usize,
}

impl Verdict {
    pub fn minimal_witness(&self) -> Option<&Witness> {
        self.witnesses.first()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "monotone": self.monotone,
            "witnesses": self.witnesses.iter().map(|w| w.to_json()).collect::<Vec<_>>(),
            "minimal_witness": self.minimal_witness().map(|w| w.to_json()),
            "pairs_checked": self.pairs_checked,
            "universe_bound": self.universe_bound,
            "mode": self.mode.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub jobs: usize,
    /// Iterate prefix pairs in reversed order; the verdict must not depend
    /// on enumeration order.
    pub reversed: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            jobs: 1,
            reversed: false,
        }
    }
}

/// Decides future-monotonicity over the scenario's prefixes and collects
/// every witness.
pub fn check_future_monotonicity(spec: &Specification, s: &Scenario) -> Result<Verdict> {
    check_future_monotonicity_opts(spec, s, CheckOptions::default())
}

pub fn check_future_monotonicity_opts(
    spec: &Specification,
    s: &Scenario,
    opts: CheckOptions,
) -> Result<Verdict> {
    let histories = enumerate_prefixes(s);
    check_over_histories(spec, &histories, Mode::Scenario, opts)
}

/// Exhaustive-mode check: every well-formed history over the universe.
pub fn check_future_monotonicity_exhaustive(
    spec: &Specification,
    max_events: usize,
) -> Result<Verdict> {
    let histories = enumerate_all_histories(spec.universe(), max_events)?;
    check_over_histories(spec, &histories, Mode::Exhaustive, CheckOptions::default())
}

fn check_over_histories(
    spec: &Specification,
    histories: &[History],
    mode: Mode,
    opts: CheckOptions,
) -> Result<Verdict> {
    let mut order: Vec<usize> = (0..histories.len()).collect();
    if opts.reversed {
        order.reverse();
    }
    let obs_sets: Vec<BTreeSet<Outcome>> = histories
        .iter()
        .map(|h| spec.obs(h))
        .collect::<Result<_>>()?;

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &i in &order {
        for &j in &order {
            if is_future(&histories[i], &histories[j])? {
                pairs.push((i, j));
            }
        }
    }

    let scan = |chunk: &[(usize, usize)]| -> Result<Vec<Witness>> {
        let mut found = Vec::new();
        for &(i, j) in chunk {
            for o in &obs_sets[i] {
                let mut refined = false;
                for o2 in &obs_sets[j] {
                    if spec.domain().leq(o, o2)? {
                        refined = true;
                        break;
                    }
                }
                if !refined {
                    found.push(Witness {
                        h1: histories[i].clone(),
                        h2: histories[j].clone(),
                        outcome: o.clone(),
                    });
                }
            }
        }
        Ok(found)
    };

    let jobs = opts.jobs.max(1).min(pairs.len().max(1));
    let mut witnesses = if jobs == 1 {
        scan(&pairs)?
    } else {
        let chunk_len = pairs.len().div_ceil(jobs);
        let chunks: Vec<&[(usize, usize)]> = pairs.chunks(chunk_len).collect();
        let results: Vec<Result<Vec<Witness>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|c| scope.spawn(move || scan(c)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut all = Vec::new();
        for r in results {
            all.extend(r?);
        }
        all
    };

    witnesses.sort_by_key(|w| w.sort_key());
    Ok(Verdict {
        monotone: witnesses.is_empty(),
        witnesses,
        pairs_checked: pairs.len() as u64,
        mode,
        universe_bound: spec.universe().len(),
    })
}
