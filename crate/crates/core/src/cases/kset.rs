//! k-set agreement: decision maps bounded to at most k distinct values.
//!
//! obs of a history is the map of decisions recorded so far when it meets
//! the bound, and empty otherwise; a decision by one more process with a
//! fresh value strands every earlier map.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Deserialize;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsetParams {
    #[serde(default = "default_k")]
    pub k: usize,
    /// Number of deciding processes; process i decides value v{i}.
    #[serde(default = "default_processes")]
    pub processes: usize,
}

fn default_k() -> usize {
    1
}

fn default_processes() -> usize {
    2
}

impl Default for KsetParams {
    fn default() -> Self {
        KsetParams {
            k: default_k(),
            processes: default_processes(),
        }
    }
}

struct KsetRule {
    k: usize,
}

impl ObsEval for KsetRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let u = h.universe();
        let mut decided = BTreeMap::new();
        for i in h.indices() {
            if u.event(i).label == "decide" {
                if let Some(v) = &u.event(i).payload {
                    decided.insert(u.event(i).proc.clone(), v.clone());
                }
            }
        }
        let distinct: BTreeSet<&String> = decided.values().collect();
        if distinct.len() > self.k {
            return Ok(BTreeSet::new());
        }
        Ok([Outcome::Map(decided)].into_iter().collect())
    }
}

pub fn kset_spec(params: &KsetParams) -> Result<(Specification, Scenario)> {
    if params.k == 0 || params.processes < params.k + 1 || params.processes > 4 {
        return Err(Error::InvalidParams(
            "k-set scenarios need k >= 1 and k+1 <= processes <= 4".to_string(),
        ));
    }
    let procs: Vec<String> = (1..=params.processes).map(|i| format!("p{i}")).collect();
    let values: Vec<String> = (1..=params.processes).map(|i| format!("v{i}")).collect();
    let events: Vec<Event> = procs
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (p, v))| {
            let mut e = Event::new(&format!("d{}", i + 1), EventKind::Internal, p, "decide");
            e.payload = Some(v.clone());
            e
        })
        .collect();
    let universe = EventUniverse::from_parts(events, Vec::new(), Vec::new())?;
    let scenario = Scenario::from_universe("kset", Arc::clone(&universe))?;
    let domain = make_domain(DomainKind::Map {
        keys: procs,
        values,
    })?;
    Ok((
        Specification::new(
            "kset",
            universe,
            domain,
            Arc::new(KsetRule { k: params.k }),
        ),
        scenario,
    ))
}

pub fn kset_case(params: &serde_json::Value) -> Result<CaseBundle> {
    let params: KsetParams = if params.is_null() || params == &serde_json::json!({}) {
        KsetParams::default()
    } else {
        serde_json::from_value(params.clone()).map_err(|e| Error::InvalidParams(e.to_string()))?
    };
    let (spec, scenario) = kset_spec(&params)?;
    Ok(CaseBundle {
        name: "kset".to_string(),
        spec,
        scenario,
        expected_monotone: Some(false),
        claimed_monotone: Some(false),
        reference: "k-set agreement",
        extras: serde_json::json!({ "k": params.k, "processes": params.processes }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::map;
    use crate::spec::check_future_monotonicity;

    #[test]
    fn one_set_agreement_strands_the_first_decision() {
        let (spec, s) = kset_spec(&KsetParams::default()).unwrap();
        let h1 = s.prefix(&["d1"]).unwrap();
        assert!(spec.obs(&h1).unwrap().contains(&map(&[("p1", "v1")])));
        assert!(spec.obs(&s.ground).unwrap().is_empty());
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(!verdict.monotone);
        assert!(verdict
            .witnesses
            .iter()
            .any(|w| w.outcome == map(&[("p1", "v1")])));
    }

    #[test]
    fn two_set_agreement_with_two_deciders_is_monotone() {
        let (spec, s) = kset_spec(&KsetParams { k: 2, processes: 3 }).unwrap();
        // Restrict attention to two decisions: both fit under k = 2.
        let h = s.prefix(&["d1", "d2"]).unwrap();
        assert!(!spec.obs(&h).unwrap().is_empty());
        // Three distinct decided values break the bound.
        assert!(spec.obs(&s.ground).unwrap().is_empty());
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(!verdict.monotone);
        let w = verdict
            .witnesses
            .iter()
            .find(|w| w.h2 == s.ground)
            .unwrap();
        // The stranded map carries exactly k distinct values.
        if let Outcome::Map(m) = &w.outcome {
            let distinct: BTreeSet<&String> = m.values().collect();
            assert!(distinct.len() <= 2);
        } else {
            panic!("expected a decision map");
        }
    }

    #[test]
    fn two_set_agreement_two_values_monotone_scenario() {
        // With two processes and k = 2, every reachable decision map fits.
        let (spec, s) = kset_spec(&KsetParams { k: 2, processes: 3 }).unwrap();
        let sub = s.prefix(&["d1", "d2"]).unwrap();
        // All prefixes of the two-decision sub-history stay within bound.
        for ids in [vec![], vec!["d1"], vec!["d2"], vec!["d1", "d2"]] {
            let h = s.prefix(&ids).unwrap();
            assert!(!spec.obs(&h).unwrap().is_empty());
        }
        drop(sub);
    }

    #[test]
    fn parameter_bounds() {
        assert!(kset_spec(&KsetParams { k: 1, processes: 1 }).is_err());
        assert!(kset_spec(&KsetParams { k: 0, processes: 2 }).is_err());
    }
}
