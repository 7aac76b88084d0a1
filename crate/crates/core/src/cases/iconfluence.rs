//! Invariant preservation under replica-local updates and merges.
//!
//! A small transition system gives each process a chain of local
//! operations; explicit merge events combine the states of two processes.
//! obs of a history is every invariant-satisfying subset of the states the
//! run has visited, unless the run itself visited a violating state, in
//! which case nothing is admissible. Increment-only systems only grow the
//! visited set inside the invariant; concurrent decrements pass locally and
//! breach the floor at the merge.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

/// Finite replicated state machine with a commutative merge.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    pub states: BTreeSet<i64>,
    pub initial: i64,
    /// Named local operations as partial state maps.
    pub ops: BTreeMap<String, BTreeMap<i64, i64>>,
    /// Total commutative merge table.
    pub merge: BTreeMap<(i64, i64), i64>,
}

impl TransitionSystem {
    /// Builds a delta-summing system: states are values, merge adds the
    /// deltas both sides accumulated since `initial`, clamped to the state
    /// range.
    pub fn delta_sum(states: &[i64], initial: i64, ops: &[(&str, &[(i64, i64)])]) -> Result<Self> {
        let state_set: BTreeSet<i64> = states.iter().copied().collect();
        if !state_set.contains(&initial) {
            return Err(Error::InvalidParams(
                "initial state must be in the state set".to_string(),
            ));
        }
        let lo = *state_set.iter().next().unwrap();
        let hi = *state_set.iter().last().unwrap();
        let mut merge = BTreeMap::new();
        for &a in &state_set {
            for &b in &state_set {
                let merged = (a + b - initial).clamp(lo, hi);
                merge.insert((a, b), merged);
            }
        }
        let ops = ops
            .iter()
            .map(|(name, table)| {
                (
                    name.to_string(),
                    table.iter().copied().collect::<BTreeMap<i64, i64>>(),
                )
            })
            .collect();
        let ts = TransitionSystem {
            states: state_set,
            initial,
            ops,
            merge,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        for (&(a, b), &m) in &self.merge {
            if !self.states.contains(&m) {
                return Err(Error::InvalidParams(format!(
                    "merge({a},{b}) leaves the state set"
                )));
            }
            let sym = self
                .merge
                .get(&(b, a))
                .ok_or_else(|| Error::InvalidParams("merge is not total".to_string()))?;
            if *sym != m {
                return Err(Error::InvalidParams(format!(
                    "merge is not commutative at ({a},{b})"
                )));
            }
        }
        for &a in &self.states {
            for &b in &self.states {
                if !self.merge.contains_key(&(a, b)) {
                    return Err(Error::InvalidParams("merge is not total".to_string()));
                }
            }
        }
        for (name, table) in &self.ops {
            for (&from, &to) in table {
                if !self.states.contains(&from) || !self.states.contains(&to) {
                    return Err(Error::InvalidParams(format!(
                        "operation `{name}` leaves the state set"
                    )));
                }
            }
        }
        Ok(())
    }
}

struct IconfluenceRule {
    ts: TransitionSystem,
    /// Invariant: state >= floor.
    floor: i64,
}

impl IconfluenceRule {
    /// State of a process after folding its local operations within `mask`.
    fn proc_state(&self, h: &History, proc: &str, mask: u64) -> Result<i64> {
        let u = h.universe();
        let mut ops: Vec<usize> = h
            .indices()
            .filter(|&i| {
                mask & (1 << i) != 0 && u.event(i).proc == proc && u.event(i).label == "op"
            })
            .collect();
        ops.sort_by(|&a, &b| {
            if h.precedes(a, b) {
                std::cmp::Ordering::Less
            } else if h.precedes(b, a) {
                std::cmp::Ordering::Greater
            } else {
                u.event(a).id.cmp(&u.event(b).id)
            }
        });
        let mut state = self.ts.initial;
        for i in ops {
            let name = u.event(i).payload.clone().unwrap_or_default();
            let table = self
                .ts
                .ops
                .get(&name)
                .ok_or_else(|| Error::InvalidParams(format!("unknown operation `{name}`")))?;
            if let Some(&next) = table.get(&state) {
                state = next;
            }
            // A locally inapplicable operation is a no-op.
        }
        Ok(state)
    }

    /// Every state the run has visited: replica states after each local
    /// step plus every merge result.
    fn occurred(&self, h: &History) -> Result<BTreeSet<i64>> {
        let u = h.universe();
        let mut out = BTreeSet::new();
        out.insert(self.ts.initial);
        let procs: BTreeSet<String> = h.indices().map(|i| u.event(i).proc.clone()).collect();
        for proc in &procs {
            // Fold prefixes of the process chain.
            let mut ops: Vec<usize> = h
                .indices()
                .filter(|&i| u.event(i).proc == *proc && u.event(i).label == "op")
                .collect();
            ops.sort_by(|&a, &b| {
                if h.precedes(a, b) {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            });
            let mut state = self.ts.initial;
            for i in ops {
                let name = u.event(i).payload.clone().unwrap_or_default();
                if let Some(&next) = self.ts.ops.get(&name).and_then(|t| t.get(&state)) {
                    state = next;
                }
                out.insert(state);
            }
        }
        for i in h.indices() {
            if u.event(i).label != "merge" {
                continue;
            }
            let payload = u.event(i).payload.clone().unwrap_or_default();
            let (pa, pb) = payload
                .split_once(',')
                .ok_or_else(|| Error::InvalidParams("merge event needs two processes".into()))?;
            let past = h.preds_of(i);
            let sa = self.proc_state(h, pa, past)?;
            let sb = self.proc_state(h, pb, past)?;
            let merged = *self
                .ts
                .merge
                .get(&(sa, sb))
                .ok_or_else(|| Error::InvalidParams("merge table incomplete".into()))?;
            out.insert(merged);
        }
        Ok(out)
    }
}

impl ObsEval for IconfluenceRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let occurred = self.occurred(h)?;
        if occurred.iter().any(|&s| s < self.floor) {
            return Ok(BTreeSet::new());
        }
        // Invariant-preserving subsets of the visited states.
        let states: Vec<i64> = occurred.into_iter().collect();
        let mut out = BTreeSet::new();
        for mask in 0..(1usize << states.len()) {
            let subset: BTreeSet<String> = states
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, s)| s.to_string())
                .collect();
            out.insert(Outcome::Facts(subset));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IconfluencePreset {
    /// Two concurrent increments from 0, additive merge, floor 0.
    Increments,
    /// Two concurrent decrements from 1, delta-summing merge, floor 0.
    Decrements,
}

pub fn iconfluence_spec(preset: IconfluencePreset) -> Result<(Specification, Scenario)> {
    let (ts, op_name, name) = match preset {
        IconfluencePreset::Increments => (
            TransitionSystem::delta_sum(&[0, 1, 2], 0, &[("inc", &[(0, 1), (1, 2)])])?,
            "inc",
            "iconfluence-inc",
        ),
        IconfluencePreset::Decrements => (
            TransitionSystem::delta_sum(&[-1, 0, 1], 1, &[("dec", &[(1, 0)])])?,
            "dec",
            "iconfluence-dec",
        ),
    };
    let mut op_p = Event::new("up", EventKind::Internal, "p", "op");
    op_p.payload = Some(op_name.to_string());
    let mut op_q = Event::new("uq", EventKind::Internal, "q", "op");
    op_q.payload = Some(op_name.to_string());
    let mut merge = Event::new("m", EventKind::Internal, "p", "merge");
    merge.payload = Some("p,q".to_string());
    let events = vec![op_p, op_q, merge];
    let edges = vec![
        ("up".to_string(), "m".to_string()),
        ("uq".to_string(), "m".to_string()),
    ];
    let universe = EventUniverse::from_parts(events, edges, Vec::new())?;
    let scenario = Scenario::from_universe(name, Arc::clone(&universe))?;
    let state_universe: Vec<String> = ts.states.iter().map(|s| s.to_string()).collect();
    let domain = make_domain(DomainKind::Inclusion {
        universe: state_universe,
    })?;
    let rule = IconfluenceRule { ts, floor: 0 };
    Ok((
        Specification::new(name, universe, domain, Arc::new(rule)),
        scenario,
    ))
}

pub fn iconfluence_case(
    preset: IconfluencePreset,
    params: &serde_json::Value,
) -> Result<CaseBundle> {
    if !params.is_null() && params != &serde_json::json!({}) {
        return Err(Error::InvalidParams(
            "invariant-confluence cases take no parameters".to_string(),
        ));
    }
    let (spec, scenario) = iconfluence_spec(preset)?;
    let expected = matches!(preset, IconfluencePreset::Increments);
    Ok(CaseBundle {
        name: spec.name.clone(),
        spec,
        scenario,
        expected_monotone: Some(expected),
        claimed_monotone: Some(expected),
        reference: "invariant confluence",
        extras: serde_json::json!({}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::facts;
    use crate::spec::check_future_monotonicity;

    #[test]
    fn increments_stay_within_the_invariant() {
        let (spec, s) = iconfluence_spec(IconfluencePreset::Increments).unwrap();
        let obs = spec.obs(&s.ground).unwrap();
        assert!(obs.contains(&facts(&["0", "1", "2"])));
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(verdict.monotone);
    }

    #[test]
    fn concurrent_decrements_breach_the_floor_at_merge() {
        let (spec, s) = iconfluence_spec(IconfluencePreset::Decrements).unwrap();
        let h = s.prefix(&["up", "uq"]).unwrap();
        let obs = spec.obs(&h).unwrap();
        // Both replicas reached 0 locally; the floor holds so far.
        assert!(obs.contains(&facts(&["0"])));
        assert!(spec.obs(&s.ground).unwrap().is_empty());
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(!verdict.monotone);
        assert!(verdict.witnesses.iter().any(|w| w.outcome == facts(&["0"])));
    }

    #[test]
    fn trivial_invariant_is_monotone() {
        // Floor below every state: nothing is ever excluded.
        let (spec, s) = iconfluence_spec(IconfluencePreset::Decrements).unwrap();
        let _ = (spec, s);
        let ts = TransitionSystem::delta_sum(&[-1, 0, 1], 1, &[("dec", &[(1, 0)])]).unwrap();
        let rule = IconfluenceRule { ts, floor: -10 };
        let (base_spec, base_s) = iconfluence_spec(IconfluencePreset::Decrements).unwrap();
        let spec2 = Specification::new(
            "iconfluence-trivial",
            Arc::clone(base_spec.universe()),
            make_domain(DomainKind::Inclusion {
                universe: vec!["-1".to_string(), "0".to_string(), "1".to_string()],
            })
            .unwrap(),
            Arc::new(rule),
        );
        let verdict = check_future_monotonicity(&spec2, &base_s).unwrap();
        assert!(verdict.monotone);
    }

    #[test]
    fn merge_validation_rejects_non_commutative_tables() {
        let mut ts = TransitionSystem::delta_sum(&[0, 1, 2], 0, &[("inc", &[(0, 1)])]).unwrap();
        ts.merge.insert((0, 1), 1);
        ts.merge.insert((1, 0), 2);
        assert!(ts.validate().is_err());
    }
}
