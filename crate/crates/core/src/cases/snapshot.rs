//! Snapshot specifications over a write racing a multi-variable snapshot.
//!
//! The global variant exposes the valuation of some downward-closed cut
//! containing the snapshot invocation's past; cuts stay valid as history
//! grows, so the specification is monotone. The atomic variant commits to a
//! single linearization point by reporting the snapshot inside an operation
//! sequence, and a completion that causally orders the write before the
//! snapshot response strands the early commitment.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Deserialize;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotVariant {
    Global,
    Atomic,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SnapshotParams {
    /// When set, the snapshot is invoked only after the write is delivered.
    #[serde(default)]
    pub sequential: bool,
}

struct SnapshotRule {
    variant: SnapshotVariant,
    vars: Vec<String>,
    write_var: String,
    write_value: u64,
    wi: usize,
    wr: usize,
    si: usize,
    sr: usize,
}

impl SnapshotRule {
    fn valuation_token(&self, written: bool) -> String {
        let body: Vec<String> = self
            .vars
            .iter()
            .map(|v| {
                let val = if written && *v == self.write_var {
                    self.write_value
                } else {
                    0
                };
                format!("{v}={val}")
            })
            .collect();
        format!("snap{{{}}}", body.join(","))
    }

    fn write_token(&self) -> String {
        format!("write({}:={})", self.write_var, self.write_value)
    }

    fn eval_global(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        if !h.contains(self.sr) {
            return Ok([Outcome::Map(Default::default())].into_iter().collect());
        }
        // Cuts: downward-closed subsets of h containing the snapshot
        // invocation's past (and the invocation itself).
        let mut required = h.preds_of(self.si) | (1 << self.si);
        required &= h.mask();
        let mut out = BTreeSet::new();
        for cut_mask in ideal_masks(h) {
            if cut_mask & required != required {
                continue;
            }
            let written = cut_mask & (1 << self.wr) != 0;
            let map: std::collections::BTreeMap<String, String> = self
                .vars
                .iter()
                .map(|v| {
                    let val = if written && *v == self.write_var {
                        self.write_value
                    } else {
                        0
                    };
                    (v.clone(), val.to_string())
                })
                .collect();
            out.insert(Outcome::Map(map));
        }
        Ok(out)
    }

    fn eval_atomic(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let write_present = h.contains(self.wi);
        let write_done = h.contains(self.wr);
        let snap_present = h.contains(self.si);
        let snap_done = h.contains(self.sr);

        let mut out = BTreeSet::new();
        // Operation subsets: completed mandatory, pending optional.
        let mut choices: Vec<(bool, bool)> = Vec::new();
        for include_w in [false, true] {
            for include_s in [false, true] {
                if write_done && !include_w {
                    continue;
                }
                if snap_done && !include_s {
                    continue;
                }
                if include_w && !write_present {
                    continue;
                }
                if include_s && !snap_present {
                    continue;
                }
                choices.push((include_w, include_s));
            }
        }
        for (include_w, include_s) in choices {
            let orders: Vec<Vec<&str>> = match (include_w, include_s) {
                (false, false) => vec![vec![]],
                (true, false) => vec![vec!["w"]],
                (false, true) => vec![vec!["s"]],
                (true, true) => vec![vec!["w", "s"], vec!["s", "w"]],
            };
            for order in orders {
                // Precedence: an operation whose response causally precedes
                // the other's invocation or response linearizes first.
                if order == ["s", "w"] && write_done {
                    let forced = h.precedes(self.wr, self.si)
                        || (snap_done && h.precedes(self.wr, self.sr));
                    if forced {
                        continue;
                    }
                }
                if order == ["w", "s"] && snap_done {
                    let forced = h.precedes(self.sr, self.wi)
                        || (write_done && h.precedes(self.sr, self.wr));
                    if forced {
                        continue;
                    }
                }
                let mut tokens = Vec::new();
                let mut written = false;
                let mut ok = true;
                for op in order {
                    match op {
                        "w" => {
                            written = true;
                            tokens.push(self.write_token());
                        }
                        _ => {
                            // A completed snapshot reporting the written
                            // value must causally see the write.
                            if written && snap_done && !h.precedes(self.wi, self.sr) {
                                ok = false;
                                break;
                            }
                            tokens.push(self.valuation_token(written));
                        }
                    }
                }
                if ok {
                    out.insert(Outcome::Seq(tokens));
                }
            }
        }
        Ok(out)
    }
}

/// Masks of downward-closed subsets of `h`.
fn ideal_masks(h: &History) -> Vec<u64> {
    let mut seen = BTreeSet::new();
    seen.insert(0u64);
    let mut stack = vec![0u64];
    while let Some(mask) = stack.pop() {
        for i in h.indices() {
            let bit = 1u64 << i;
            if mask & bit != 0 {
                continue;
            }
            if h.preds_of(i) & !mask == 0 {
                let next = mask | bit;
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
    }
    seen.into_iter().collect()
}

impl ObsEval for SnapshotRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        match self.variant {
            SnapshotVariant::Global => self.eval_global(h),
            SnapshotVariant::Atomic => self.eval_atomic(h),
        }
    }
}

pub fn snapshot_spec(
    variant: SnapshotVariant,
    params: &SnapshotParams,
) -> Result<(Specification, Scenario)> {
    let vars = vec!["x".to_string(), "y".to_string()];
    let mut wi = Event::new("wi", EventKind::Input, "p", "write-invoke");
    wi.payload = Some("x:=1".to_string());
    let events = vec![
        wi,
        Event::new("wr", EventKind::Internal, "p", "write-resp"),
        Event::new("ws", EventKind::Send, "p", "write-send"),
        Event::new("d", EventKind::Recv, "q", "write-deliver"),
        Event::new("si", EventKind::Input, "q", "snap-invoke"),
        Event::new("sr", EventKind::Internal, "q", "snap-resp"),
    ];
    let mut edges = vec![
        ("wi".to_string(), "wr".to_string()),
        ("wr".to_string(), "ws".to_string()),
        ("d".to_string(), "sr".to_string()),
        ("si".to_string(), "sr".to_string()),
    ];
    if params.sequential {
        // Snapshot starts only after the write has arrived.
        edges.push(("d".to_string(), "si".to_string()));
    }
    let msg = vec![("ws".to_string(), "d".to_string())];
    let universe = EventUniverse::from_parts(events, edges, msg)?;
    let name = match variant {
        SnapshotVariant::Global => "snapshot-global",
        SnapshotVariant::Atomic => "snapshot-atomic",
    };
    let scenario = Scenario::from_universe(name, Arc::clone(&universe))?;
    let rule = SnapshotRule {
        variant,
        vars: vars.clone(),
        write_var: "x".to_string(),
        write_value: 1,
        wi: universe.index_of("wi")?,
        wr: universe.index_of("wr")?,
        si: universe.index_of("si")?,
        sr: universe.index_of("sr")?,
    };
    let domain = match variant {
        SnapshotVariant::Global => make_domain(DomainKind::Map {
            keys: vars,
            values: vec!["0".to_string(), "1".to_string()],
        })?,
        SnapshotVariant::Atomic => make_domain(DomainKind::Prefix {
            symbols: vec![
                rule.write_token(),
                rule.valuation_token(false),
                rule.valuation_token(true),
            ],
            max_len: 2,
        })?,
    };
    Ok((
        Specification::new(name, universe, domain, Arc::new(rule)),
        scenario,
    ))
}

pub fn snapshot_case(variant: SnapshotVariant, params: &serde_json::Value) -> Result<CaseBundle> {
    let params: SnapshotParams = if params.is_null() || params == &serde_json::json!({}) {
        SnapshotParams::default()
    } else {
        serde_json::from_value(params.clone()).map_err(|e| Error::InvalidParams(e.to_string()))?
    };
    let (spec, scenario) = snapshot_spec(variant, &params)?;
    let expected = match variant {
        SnapshotVariant::Global => true,
        SnapshotVariant::Atomic => params.sequential,
    };
    Ok(CaseBundle {
        name: spec.name.clone(),
        spec,
        scenario,
        expected_monotone: Some(expected),
        claimed_monotone: Some(expected),
        reference: "snapshots",
        extras: serde_json::json!({}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::{map, seq};
    use crate::spec::check_future_monotonicity;

    #[test]
    fn global_snapshot_is_monotone() {
        let (spec, s) = snapshot_spec(SnapshotVariant::Global, &SnapshotParams::default()).unwrap();
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(verdict.monotone);
        // The completed run still admits the pre-write cut valuation.
        let obs = spec.obs(&s.ground).unwrap();
        assert!(obs.contains(&map(&[("x", "0"), ("y", "0")])));
        assert!(obs.contains(&map(&[("x", "1"), ("y", "0")])));
    }

    #[test]
    fn atomic_snapshot_has_a_witness() {
        let (spec, s) = snapshot_spec(SnapshotVariant::Atomic, &SnapshotParams::default()).unwrap();
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        assert!(!verdict.monotone);
        let w = verdict.minimal_witness().unwrap();
        assert_eq!(w.outcome, seq(&["snap{x=0,y=0}"]));
        assert_eq!(w.h2, s.ground);
        // The completion pins the write before the snapshot.
        let obs = spec.obs(&s.ground).unwrap();
        assert_eq!(obs.len(), 1);
        assert!(obs.contains(&seq(&["write(x:=1)", "snap{x=1,y=0}"])));
    }

    #[test]
    fn sequential_scenario_is_monotone_in_both_variants() {
        let params = SnapshotParams { sequential: true };
        for variant in [SnapshotVariant::Global, SnapshotVariant::Atomic] {
            let (spec, s) = snapshot_spec(variant, &params).unwrap();
            let verdict = check_future_monotonicity(&spec, &s).unwrap();
            assert!(verdict.monotone, "variant {variant:?}");
        }
    }

    #[test]
    fn global_pending_snapshot_exposes_empty_valuation() {
        let (spec, s) = snapshot_spec(SnapshotVariant::Global, &SnapshotParams::default()).unwrap();
        let h = s.prefix(&["si"]).unwrap();
        let obs = spec.obs(&h).unwrap();
        assert_eq!(obs.len(), 1);
        assert!(obs.contains(&Outcome::Map(Default::default())));
    }

    #[test]
    fn extensions_include_write_before_snapshot_completion() {
        let (_, s) = snapshot_spec(SnapshotVariant::Atomic, &SnapshotParams::default()).unwrap();
        let h = s.prefix(&["wi", "si"]).unwrap();
        let exts = crate::history::enumerate_extensions(&h, &s).unwrap();
        assert!(exts.iter().any(|e| {
            e.contains_id("sr")
                && e.precedes(
                    s.universe().index_of("wr").unwrap(),
                    s.universe().index_of("sr").unwrap(),
                )
        }));
    }
}
