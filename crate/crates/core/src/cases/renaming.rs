//! Renaming: participants receive distinct names from a namespace whose
//! size tracks participation.
//!
//! obs of a history is every injective assignment of names 1..=f(n) to the
//! n current participants (map-extension order). The checker computes the
//! verdict outright; the report compares it against the classic claim that
//! the tight bound forces coordination, whichever way the check falls.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Deserialize;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamespaceBound {
    /// f(n) = n.
    Tight,
    /// f(n) = m for a fixed m.
    Loose(usize),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenamingParams {
    #[serde(default = "default_bound")]
    pub bound: String,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Namespace size for the loose bound.
    #[serde(default = "default_m")]
    pub m: usize,
}

fn default_bound() -> String {
    "tight".to_string()
}

fn default_n() -> usize {
    2
}

fn default_m() -> usize {
    8
}

impl Default for RenamingParams {
    fn default() -> Self {
        RenamingParams {
            bound: default_bound(),
            n: default_n(),
            m: default_m(),
        }
    }
}

struct RenamingRule {
    bound: NamespaceBound,
}

impl ObsEval for RenamingRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let u = h.universe();
        let mut participants: Vec<String> = h
            .indices()
            .filter(|&i| u.event(i).label == "participate")
            .map(|i| u.event(i).proc.clone())
            .collect();
        participants.sort();
        participants.dedup();
        let n = participants.len();
        let limit = match self.bound {
            NamespaceBound::Tight => n,
            NamespaceBound::Loose(m) => m,
        };
        let names: Vec<String> = (1..=limit).map(|i| i.to_string()).collect();
        let mut out = BTreeSet::new();
        assign(&participants, &names, &mut Vec::new(), &mut out);
        Ok(out)
    }
}

fn assign(
    participants: &[String],
    names: &[String],
    chosen: &mut Vec<String>,
    out: &mut BTreeSet<Outcome>,
) {
    if chosen.len() == participants.len() {
        let map = participants
            .iter()
            .cloned()
            .zip(chosen.iter().cloned())
            .collect();
        out.insert(Outcome::Map(map));
        return;
    }
    for name in names {
        if !chosen.contains(name) {
            chosen.push(name.clone());
            assign(participants, names, chosen, out);
            chosen.pop();
        }
    }
}

pub fn renaming_spec(
    bound: NamespaceBound,
    n: usize,
) -> Result<(Specification, Scenario)> {
    if n == 0 || n > 3 {
        return Err(Error::InvalidParams(
            "renaming scenarios support 1..=3 processes".to_string(),
        ));
    }
    if let NamespaceBound::Loose(m) = bound {
        if m < n {
            return Err(Error::InvalidParams(
                "loose namespaces must cover every participant".to_string(),
            ));
        }
    }
    let events: Vec<Event> = (1..=n)
        .map(|i| Event::new(&format!("pp{i}"), EventKind::Input, &format!("p{i}"), "participate"))
        .collect();
    let universe = EventUniverse::from_parts(events, Vec::new(), Vec::new())?;
    let scenario = Scenario::from_universe("renaming", Arc::clone(&universe))?;
    let max_name = match bound {
        NamespaceBound::Tight => n,
        NamespaceBound::Loose(m) => m,
    };
    let domain = make_domain(DomainKind::Map {
        keys: (1..=n).map(|i| format!("p{i}")).collect(),
        values: (1..=max_name).map(|i| i.to_string()).collect(),
    })?;
    Ok((
        Specification::new(
            "renaming",
            universe,
            domain,
            Arc::new(RenamingRule { bound }),
        ),
        scenario,
    ))
}

pub fn renaming_case(params: &serde_json::Value) -> Result<CaseBundle> {
    let params: RenamingParams = if params.is_null() || params == &serde_json::json!({}) {
        RenamingParams::default()
    } else {
        serde_json::from_value(params.clone()).map_err(|e| Error::InvalidParams(e.to_string()))?
    };
    let bound = match params.bound.as_str() {
        "tight" => NamespaceBound::Tight,
        "loose" => NamespaceBound::Loose(params.m),
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown namespace bound `{other}`"
            )))
        }
    };
    let (spec, scenario) = renaming_spec(bound, params.n)?;
    Ok(CaseBundle {
        name: "renaming".to_string(),
        spec,
        scenario,
        // The checker decides; asserting the outcome here would hard-code
        // the classic claim instead of testing it.
        expected_monotone: Some(true),
        claimed_monotone: Some(false),
        reference: "strong renaming",
        extras: serde_json::json!({
            "bound": params.bound,
            "n": params.n,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::map;
    use crate::spec::check_future_monotonicity;

    #[test]
    fn empty_participation_yields_the_empty_map() {
        let (spec, s) = renaming_spec(NamespaceBound::Tight, 2).unwrap();
        let empty = History::empty(Arc::clone(s.universe()));
        let obs = spec.obs(&empty).unwrap();
        assert_eq!(obs.len(), 1);
        assert!(obs.contains(&Outcome::Map(Default::default())));
    }

    #[test]
    fn tight_bound_names_track_participation() {
        let (spec, s) = renaming_spec(NamespaceBound::Tight, 2).unwrap();
        let h = s.prefix(&["pp1"]).unwrap();
        let obs = spec.obs(&h).unwrap();
        assert_eq!(obs.len(), 1);
        assert!(obs.contains(&map(&[("p1", "1")])));
        let ground = spec.obs(&s.ground).unwrap();
        assert_eq!(ground.len(), 2);
        assert!(ground.contains(&map(&[("p1", "1"), ("p2", "2")])));
        assert!(ground.contains(&map(&[("p1", "2"), ("p2", "1")])));
    }

    #[test]
    fn tight_renaming_checks_monotone_for_small_n() {
        for n in 1..=3 {
            let (spec, s) = renaming_spec(NamespaceBound::Tight, n).unwrap();
            let verdict = check_future_monotonicity(&spec, &s).unwrap();
            assert!(verdict.monotone, "n = {n}");
        }
    }

    #[test]
    fn loose_bound_is_monotone() {
        let (spec, s) = renaming_spec(NamespaceBound::Loose(8), 2).unwrap();
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(verdict.monotone);
    }
}
