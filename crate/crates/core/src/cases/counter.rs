//! A monotonically increasing counter: obs reports exactly the number of
//! increments present, ordered numerically.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Deserialize;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterParams {
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_n() -> usize {
    4
}

struct CounterRule;

impl ObsEval for CounterRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let count = h
            .indices()
            .filter(|&i| h.universe().event(i).label == "inc")
            .count() as u64;
        Ok([Outcome::Num(count)].into_iter().collect())
    }
}

/// Increments are internal steps of the counter process, chained in order.
pub fn counter_spec(n: usize) -> Result<(Specification, Scenario)> {
    if n == 0 || n > 16 {
        return Err(Error::InvalidParams(
            "counter scenarios support 1..=16 increments".to_string(),
        ));
    }
    let events: Vec<Event> = (1..=n)
        .map(|k| Event::new(&format!("inc{k}"), EventKind::Internal, "ctr", "inc"))
        .collect();
    let edges: Vec<(String, String)> = (1..n)
        .map(|k| (format!("inc{k}"), format!("inc{}", k + 1)))
        .collect();
    let universe = EventUniverse::from_parts(events, edges, Vec::new())?;
    let scenario = Scenario::from_universe("counter", Arc::clone(&universe))?;
    let domain = make_domain(DomainKind::Numeric { max: n as u64 })?;
    Ok((
        Specification::new("counter", universe, domain, Arc::new(CounterRule)),
        scenario,
    ))
}

pub fn counter_case(params: &serde_json::Value) -> Result<CaseBundle> {
    let params: CounterParams = if params.is_null() || params == &serde_json::json!({}) {
        CounterParams { n: default_n() }
    } else {
        serde_json::from_value(params.clone()).map_err(|e| Error::InvalidParams(e.to_string()))?
    };
    let (spec, scenario) = counter_spec(params.n)?;
    Ok(CaseBundle {
        name: "counter".to_string(),
        spec,
        scenario,
        expected_monotone: Some(true),
        claimed_monotone: Some(true),
        reference: "grow-only counter",
        extras: serde_json::json!({}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::enumerate_prefixes;
    use crate::spec::{check_future_monotonicity, poss};

    #[test]
    fn obs_counts_increments() {
        let (spec, s) = counter_spec(2).unwrap();
        assert_eq!(
            spec.obs(&s.ground).unwrap(),
            [Outcome::Num(2)].into_iter().collect()
        );
        let empty = History::empty(Arc::clone(s.universe()));
        assert_eq!(
            spec.obs(&empty).unwrap(),
            [Outcome::Num(0)].into_iter().collect()
        );
    }

    #[test]
    fn possibility_at_two_of_four() {
        let (spec, s) = counter_spec(4).unwrap();
        let h = s.prefix(&["inc1", "inc2"]).unwrap();
        assert_eq!(
            spec.obs(&h).unwrap(),
            [Outcome::Num(2)].into_iter().collect()
        );
        let expected: BTreeSet<Outcome> = [2, 3, 4].into_iter().map(Outcome::Num).collect();
        assert_eq!(poss(&spec, &h, &s).unwrap(), expected);
    }

    #[test]
    fn counter_is_monotone() {
        let (spec, s) = counter_spec(4).unwrap();
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(verdict.monotone);
        assert_eq!(enumerate_prefixes(&s).len(), 5);
    }

    #[test]
    fn counter_has_empty_input_projection() {
        let (_, s) = counter_spec(3).unwrap();
        assert!(s.ground.input_projection().is_empty());
    }
}
