//! Read/write register specifications over invocation/response event
//! histories, in a linearizable and a highly available variant.
//!
//! Outcomes are annotated operation sequences under prefix order. The
//! linearizable variant admits exactly the sequences that contain every
//! completed operation (pending ones may be included or dropped), respect
//! causal operation precedence, and annotate each completed read with a
//! value it could actually have returned: the latest write preceding it in
//! the sequence, provided that write is causally visible at the read's
//! response. The available variant drops the precedence constraint and lets
//! any subset of operations appear, so earlier stories always extend.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Deserialize;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegisterVariant {
    Linearizable,
    Available,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterParams {
    #[serde(default = "one")]
    pub writes: usize,
    #[serde(default = "one")]
    pub reads: usize,
    #[serde(default)]
    pub initial: u64,
}

fn one() -> usize {
    1
}

impl Default for RegisterParams {
    fn default() -> Self {
        RegisterParams {
            writes: 1,
            reads: 1,
            initial: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpKind {
    Write(u64),
    Read,
}

#[derive(Debug, Clone)]
struct RegOp {
    kind: OpKind,
    /// Rendered token for writes; prefix for reads (value appended).
    token: String,
    inv: usize,
    resp: usize,
}

pub(crate) struct RegisterRule {
    variant: RegisterVariant,
    ops: Vec<RegOp>,
    initial: u64,
}

impl RegisterRule {
    fn op_token(&self, op: &RegOp, value: u64) -> String {
        match op.kind {
            OpKind::Write(v) => format!("{}({v})", op.token),
            OpKind::Read => format!("{}({value})", op.token),
        }
    }
}

impl ObsEval for RegisterRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let present: Vec<usize> = (0..self.ops.len())
            .filter(|&i| h.contains(self.ops[i].inv))
            .collect();
        let completed: Vec<usize> = present
            .iter()
            .copied()
            .filter(|&i| h.contains(self.ops[i].resp))
            .collect();
        let mut out = BTreeSet::new();
        for subset in subsets(&present) {
            if self.variant == RegisterVariant::Linearizable
                && !completed.iter().all(|c| subset.contains(c))
            {
                continue;
            }
            for perm in permutations(&subset) {
                if self.variant == RegisterVariant::Linearizable
                    && !self.respects_precedence(h, &perm)
                {
                    continue;
                }
                if let Some(tokens) = self.annotate(h, &perm) {
                    out.insert(Outcome::Seq(tokens));
                }
            }
        }
        Ok(out)
    }
}

impl RegisterRule {
    /// Operation a precedes b when a's response happens before b's
    /// invocation, or before b's response when both completed.
    fn respects_precedence(&self, h: &History, perm: &[usize]) -> bool {
        for (pos_b, &b) in perm.iter().enumerate() {
            for &a in &perm[pos_b + 1..] {
                let ra = self.ops[a].resp;
                if !h.contains(ra) {
                    continue;
                }
                let forced = h.precedes(ra, self.ops[b].inv)
                    || (h.contains(self.ops[b].resp) && h.precedes(ra, self.ops[b].resp));
                if forced {
                    // a is forced before b but appears after it.
                    return false;
                }
            }
        }
        true
    }

    /// Sequence semantics fix each read's value; a read reporting a written
    /// value must be able to see that write. Completed reads are gated at
    /// their response. In the available variant pending reads are gated at
    /// their invocation as well; in the linearizable variant a pending
    /// read's eventual value is still open, so it is not gated.
    fn annotate(&self, h: &History, perm: &[usize]) -> Option<Vec<String>> {
        let mut value = self.initial;
        let mut last_write_inv: Option<usize> = None;
        let mut tokens = Vec::with_capacity(perm.len());
        for &i in perm {
            let op = &self.ops[i];
            match op.kind {
                OpKind::Write(v) => {
                    value = v;
                    last_write_inv = Some(op.inv);
                    tokens.push(self.op_token(op, v));
                }
                OpKind::Read => {
                    let gate = if h.contains(op.resp) {
                        Some(op.resp)
                    } else if self.variant == RegisterVariant::Available {
                        Some(op.inv)
                    } else {
                        None
                    };
                    if value != self.initial {
                        if let Some(g) = gate {
                            let w = last_write_inv.expect("non-initial value implies a write");
                            if !h.precedes(w, g) {
                                return None;
                            }
                        }
                    }
                    tokens.push(self.op_token(op, value));
                }
            }
        }
        Some(tokens)
    }
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &i in items {
        let cur = out.clone();
        for mut s in cur {
            s.push(i);
            out.push(s);
        }
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (k, &i) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, i);
            out.push(p);
        }
    }
    out
}

/// Builds the register specification and its default scenario.
///
/// The scenario issues `writes` writes at process `p` (values 1, 2, ...)
/// and `reads` reads at process `q`. Each write propagates by message to
/// `q`; a read's response causally follows every delivery, so completing
/// the run orders writes before read responses, while prefixes leave the
/// operations in flight and concurrent.
pub fn register_spec(
    variant: RegisterVariant,
    params: &RegisterParams,
) -> Result<(Specification, Scenario)> {
    if params.writes == 0 || params.writes > 2 || params.reads == 0 || params.reads > 2 {
        return Err(Error::InvalidParams(
            "register scenarios support 1..=2 writes and 1..=2 reads".to_string(),
        ));
    }
    let mut events = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut msg: Vec<(String, String)> = Vec::new();
    let multi_w = params.writes > 1;
    let multi_r = params.reads > 1;

    for k in 0..params.writes {
        let tag = if multi_w { format!("{}", k + 1) } else { String::new() };
        let value = (k + 1) as u64;
        let mut wi = Event::new(
            &format!("wi{tag}"),
            EventKind::Input,
            "p",
            "write-invoke",
        );
        wi.payload = Some(value.to_string());
        events.push(wi);
        events.push(Event::new(
            &format!("wr{tag}"),
            EventKind::Internal,
            "p",
            "write-resp",
        ));
        events.push(Event::new(
            &format!("ws{tag}"),
            EventKind::Send,
            "p",
            "write-send",
        ));
        events.push(Event::new(
            &format!("d{tag}"),
            EventKind::Recv,
            "q",
            "write-deliver",
        ));
        edges.push((format!("wi{tag}"), format!("wr{tag}")));
        edges.push((format!("wr{tag}"), format!("ws{tag}")));
        msg.push((format!("ws{tag}"), format!("d{tag}")));
        if k > 0 {
            let prev = format!("{k}");
            edges.push((format!("wr{prev}"), format!("wi{tag}")));
            edges.push((format!("d{prev}"), format!("d{tag}")));
        }
    }
    for j in 0..params.reads {
        let tag = if multi_r { format!("{}", j + 1) } else { String::new() };
        events.push(Event::new(
            &format!("ri{tag}"),
            EventKind::Input,
            "q",
            "read-invoke",
        ));
        events.push(Event::new(
            &format!("rr{tag}"),
            EventKind::Internal,
            "q",
            "read-resp",
        ));
        edges.push((format!("ri{tag}"), format!("rr{tag}")));
        for k in 0..params.writes {
            let wtag = if multi_w { format!("{}", k + 1) } else { String::new() };
            edges.push((format!("d{wtag}"), format!("rr{tag}")));
        }
        if j > 0 {
            let prev = format!("{j}");
            edges.push((format!("rr{prev}"), format!("ri{tag}")));
        }
    }

    let edge_refs: Vec<(String, String)> = edges;
    let msg_refs: Vec<(String, String)> = msg;
    let universe = EventUniverse::from_parts(events, edge_refs, msg_refs)?;
    let scenario = Scenario::from_universe(
        &format!(
            "register-{}",
            match variant {
                RegisterVariant::Linearizable => "lin",
                RegisterVariant::Available => "avail",
            }
        ),
        Arc::clone(&universe),
    )?;

    let mut ops = Vec::new();
    let mut symbols = Vec::new();
    for k in 0..params.writes {
        let tag = if multi_w { format!("{}", k + 1) } else { String::new() };
        let value = (k + 1) as u64;
        let token = if multi_w {
            format!("write{}", k + 1)
        } else {
            "write".to_string()
        };
        symbols.push(format!("{token}({value})"));
        ops.push(RegOp {
            kind: OpKind::Write(value),
            token,
            inv: universe.index_of(&format!("wi{tag}"))?,
            resp: universe.index_of(&format!("wr{tag}"))?,
        });
    }
    let mut read_values: Vec<u64> = vec![params.initial];
    read_values.extend((1..=params.writes as u64).collect::<Vec<_>>());
    for j in 0..params.reads {
        let tag = if multi_r { format!("{}", j + 1) } else { String::new() };
        let token = if multi_r {
            format!("read{}", j + 1)
        } else {
            "read".to_string()
        };
        for v in &read_values {
            symbols.push(format!("{token}({v})"));
        }
        ops.push(RegOp {
            kind: OpKind::Read,
            token,
            inv: universe.index_of(&format!("ri{tag}"))?,
            resp: universe.index_of(&format!("rr{tag}"))?,
        });
    }

    let domain = make_domain(DomainKind::Prefix {
        symbols,
        max_len: ops.len(),
    })?;
    let rule = RegisterRule {
        variant,
        ops,
        initial: params.initial,
    };
    let name = match variant {
        RegisterVariant::Linearizable => "register-lin",
        RegisterVariant::Available => "register-avail",
    };
    Ok((
        Specification::new(name, universe, domain, Arc::new(rule)),
        scenario,
    ))
}

pub fn register_case(variant: RegisterVariant, params: &serde_json::Value) -> Result<CaseBundle> {
    let params: RegisterParams = if params.is_null() {
        RegisterParams::default()
    } else {
        serde_json::from_value(params.clone())
            .map_err(|e| Error::InvalidParams(e.to_string()))?
    };
    let (spec, scenario) = register_spec(variant, &params)?;
    let expected = match variant {
        RegisterVariant::Linearizable => false,
        RegisterVariant::Available => true,
    };
    Ok(CaseBundle {
        name: spec.name.clone(),
        spec,
        scenario,
        expected_monotone: Some(expected),
        claimed_monotone: Some(expected),
        reference: "replicated register",
        extras: serde_json::json!({}),
    })
}
