//! Agreement as authority closure followed by value exposure.
//!
//! Outcomes pair a sequence of publicly established authorities with slot
//! decisions made under the last of them. At a history, the admissible
//! authority sequences are the established ones extended by any ordering of
//! the authorities that remain causally possible (not yet invalidated or
//! consumed); decisions attach to the era they were made in. Changing the
//! admissible authority set strands earlier speculative commitments, while
//! decisions under a fixed authority only accumulate.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Deserialize;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConsensusParams {
    /// Authority names beyond the defaults, capped at two.
    #[serde(default)]
    pub authorities: Option<Vec<String>>,
    #[serde(default)]
    pub slots: Option<Vec<String>>,
    #[serde(default)]
    pub values: Option<Vec<String>>,
}

struct ConsensusRule {
    authorities: Vec<String>,
    initial_established: Vec<String>,
}

impl ConsensusRule {
    /// Establish events of `h` in causal order (the scenario chains them).
    fn established(&self, h: &History) -> Vec<String> {
        let u = h.universe();
        let mut est: Vec<usize> = h
            .indices()
            .filter(|&i| u.event(i).label == "establish")
            .collect();
        est.sort_by(|&a, &b| {
            if h.precedes(a, b) {
                std::cmp::Ordering::Less
            } else if h.precedes(b, a) {
                std::cmp::Ordering::Greater
            } else {
                u.event(a).id.cmp(&u.event(b).id)
            }
        });
        let mut out = self.initial_established.clone();
        out.extend(
            est.into_iter()
                .filter_map(|i| u.event(i).payload.clone()),
        );
        out
    }

    fn invalidated(&self, h: &History) -> BTreeSet<String> {
        let u = h.universe();
        h.indices()
            .filter(|&i| u.event(i).label == "invalidate")
            .filter_map(|i| u.event(i).payload.clone())
            .collect()
    }

    /// Era of a decide event: how many authorities were established in its
    /// causal past (plus the pre-established ones).
    fn era_of(&self, h: &History, decide: usize) -> usize {
        let u = h.universe();
        self.initial_established.len()
            + h.indices()
                .filter(|&i| u.event(i).label == "establish" && h.precedes(i, decide))
                .count()
    }

    /// Sequences of distinct still-possible authorities, all lengths.
    fn continuations(pool: &[String]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        let mut frontier = vec![Vec::<String>::new()];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for seq in &frontier {
                for a in pool {
                    if !seq.contains(a) {
                        let mut grown = seq.clone();
                        grown.push(a.clone());
                        out.push(grown.clone());
                        next.push(grown);
                    }
                }
            }
            frontier = next;
        }
        out
    }
}

impl ObsEval for ConsensusRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let u = h.universe();
        let established = self.established(h);
        let invalidated = self.invalidated(h);
        let pool: Vec<String> = self
            .authorities
            .iter()
            .filter(|a| !invalidated.contains(*a) && !established.contains(*a))
            .cloned()
            .collect();

        // Decisions grouped by era.
        let mut decided_by_era: BTreeMap<usize, BTreeMap<String, String>> = BTreeMap::new();
        for i in h.indices() {
            if u.event(i).label != "decide" {
                continue;
            }
            if let Some(payload) = &u.event(i).payload {
                if let Some((slot, value)) = payload.split_once('=') {
                    decided_by_era
                        .entry(self.era_of(h, i))
                        .or_default()
                        .insert(slot.to_string(), value.to_string());
                }
            }
        }

        let mut out = BTreeSet::new();
        for cont in Self::continuations(&pool) {
            let mut full = established.clone();
            full.extend(cont);
            for cut in 0..=full.len() {
                let auth: Vec<String> = full[..cut].to_vec();
                let decided = decided_by_era.get(&auth.len()).cloned().unwrap_or_default();
                // A sequence ending in an unestablished authority carries no
                // decisions; eras never reach past the established count, so
                // the empty sub-map is the only one it gets.
                for sub in submaps(&decided) {
                    if auth.is_empty() && !sub.is_empty() {
                        continue;
                    }
                    out.insert(Outcome::Phase {
                        auth: auth.clone(),
                        slots: sub,
                    });
                }
            }
        }
        Ok(out)
    }
}

fn submaps(m: &BTreeMap<String, String>) -> Vec<BTreeMap<String, String>> {
    let mut out = vec![BTreeMap::new()];
    for (k, v) in m {
        let cur = out.clone();
        for mut sub in cur {
            sub.insert(k.clone(), v.clone());
            out.push(sub);
        }
    }
    out
}

/// Full variant: authority `a` is invalidated, `a'` established, then one
/// decision lands. Fixed variant: `a'` holds from the start and only the
/// decision event occurs.
pub fn consensus_spec(fixed_authority: bool) -> Result<(Specification, Scenario)> {
    let authorities = vec!["a".to_string(), "a'".to_string()];
    let (events, edges, initial_established): (Vec<Event>, Vec<(String, String)>, Vec<String>) =
        if fixed_authority {
            let mut dec = Event::new("dec", EventKind::Internal, "n1", "decide");
            dec.payload = Some("1=v".to_string());
            (vec![dec], vec![], vec!["a'".to_string()])
        } else {
            let mut iv = Event::new("iv", EventKind::Internal, "n1", "invalidate");
            iv.payload = Some("a".to_string());
            let mut ea = Event::new("ea", EventKind::Internal, "n1", "establish");
            ea.payload = Some("a'".to_string());
            let mut dec = Event::new("dec", EventKind::Internal, "n1", "decide");
            dec.payload = Some("1=v".to_string());
            (
                vec![iv, ea, dec],
                vec![
                    ("iv".to_string(), "ea".to_string()),
                    ("ea".to_string(), "dec".to_string()),
                ],
                Vec::new(),
            )
        };
    let universe = EventUniverse::from_parts(events, edges, Vec::new())?;
    let name = if fixed_authority {
        "consensus-fixed"
    } else {
        "consensus"
    };
    let scenario = Scenario::from_universe(name, Arc::clone(&universe))?;
    let domain = make_domain(DomainKind::Consensus {
        authorities: authorities.clone(),
        max_auth_len: 2,
        slots: vec!["1".to_string()],
        values: vec!["v".to_string()],
    })?;
    let rule = ConsensusRule {
        authorities,
        initial_established,
    };
    Ok((
        Specification::new(name, universe, domain, Arc::new(rule)),
        scenario,
    ))
}

pub fn consensus_case(fixed_authority: bool, params: &serde_json::Value) -> Result<CaseBundle> {
    if !params.is_null() && params != &serde_json::json!({}) {
        let parsed: ConsensusParams =
            serde_json::from_value(params.clone()).map_err(|e| Error::InvalidParams(e.to_string()))?;
        if parsed.authorities.map_or(false, |a| a.len() > 2)
            || parsed.slots.map_or(false, |s| s.len() > 2)
            || parsed.values.map_or(false, |v| v.len() > 2)
        {
            return Err(Error::InvalidParams(
                "agreement scenarios support at most 2 authorities, 2 slots, 2 values".to_string(),
            ));
        }
    }
    let (spec, scenario) = consensus_spec(fixed_authority)?;
    let expected = fixed_authority;
    Ok(CaseBundle {
        name: spec.name.clone(),
        spec,
        scenario,
        expected_monotone: Some(expected),
        claimed_monotone: Some(expected),
        reference: "consensus / authority change",
        extras: serde_json::json!({}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::phase;
    use crate::spec::check_future_monotonicity;

    #[test]
    fn speculative_authority_is_admitted_before_invalidation() {
        let (spec, s) = consensus_spec(false).unwrap();
        let empty = History::empty(Arc::clone(s.universe()));
        let obs = spec.obs(&empty).unwrap();
        assert!(obs.contains(&phase(&["a"], &[])));
        assert!(obs.contains(&phase(&["a'"], &[])));
        assert!(obs.contains(&phase(&[], &[])));
    }

    #[test]
    fn invalidation_strands_the_speculative_commitment() {
        let (spec, s) = consensus_spec(false).unwrap();
        let h = s.prefix(&["iv"]).unwrap();
        let obs = spec.obs(&h).unwrap();
        assert!(!obs.contains(&phase(&["a"], &[])));
        assert!(obs.contains(&phase(&["a'"], &[])));
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(!verdict.monotone);
        let w = verdict.minimal_witness().unwrap();
        assert_eq!(w.outcome, phase(&["a"], &[]));
        assert_eq!(w.h2.sorted_ids(), vec!["iv"]);
    }

    #[test]
    fn decisions_accumulate_under_the_established_authority() {
        let (spec, s) = consensus_spec(false).unwrap();
        let obs = spec.obs(&s.ground).unwrap();
        assert!(obs.contains(&phase(&["a'"], &[("1", "v")])));
        assert!(obs.contains(&phase(&["a'"], &[])));
        assert!(!obs.contains(&phase(&["a"], &[])));
    }

    #[test]
    fn fixed_authority_variant_is_monotone() {
        let (spec, s) = consensus_spec(true).unwrap();
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(verdict.monotone);
        let obs = spec.obs(&s.ground).unwrap();
        assert!(obs.contains(&phase(&["a'"], &[("1", "v")])));
    }
}
