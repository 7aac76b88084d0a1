//! Logic programs over arriving facts: naive bottom-up evaluation with
//! stratified negation, a whole-program syntactic monotonicity check, and
//! the specifications induced by a program's least-fixpoint semantics.
//!
//! obs of a history is the singleton fixpoint of the program over the facts
//! carried by the history's input events, projected to the output
//! predicates and ordered by set inclusion.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::history::{Event, EventKind, EventUniverse, History, Scenario};
use crate::outcome::{make_domain, DomainKind, Outcome};
use crate::spec::{ObsEval, Specification};
use crate::{Error, Result};

use super::CaseBundle;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Atom {
    pub pred: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, terms: &[Term]) -> Self {
        Atom {
            pred: pred.to_string(),
            terms: terms.to_vec(),
        }
    }
}

pub fn var(name: &str) -> Term {
    Term::Var(name.to_string())
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub head: Atom,
    pub body_pos: Vec<Atom>,
    pub body_neg: Vec<Atom>,
}

/// A ground fact, rendered as `pred(c1,c2)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fact {
    pub pred: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        Fact {
            pred: pred.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn render(&self) -> String {
        format!("{}({})", self.pred, self.args.join(","))
    }

    pub fn parse(text: &str) -> Result<Fact> {
        let (pred, rest) = text
            .split_once('(')
            .ok_or_else(|| Error::InvalidParams(format!("malformed fact `{text}`")))?;
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::InvalidParams(format!("malformed fact `{text}`")))?;
        let args: Vec<String> = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(|s| s.trim().to_string()).collect()
        };
        Ok(Fact {
            pred: pred.trim().to_string(),
            args,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DatalogProgram {
    pub rules: Vec<Rule>,
    pub output_preds: BTreeSet<String>,
    /// Facts present regardless of history.
    pub base_facts: BTreeSet<Fact>,
}

impl DatalogProgram {
    /// Safety: every head and negated-body variable occurs in a positive
    /// body atom.
    pub fn check_safety(&self) -> Result<()> {
        for rule in &self.rules {
            let mut positive_vars = BTreeSet::new();
            for atom in &rule.body_pos {
                for t in &atom.terms {
                    if let Term::Var(v) = t {
                        positive_vars.insert(v.clone());
                    }
                }
            }
            let check = |atom: &Atom| -> Result<()> {
                for t in &atom.terms {
                    if let Term::Var(v) = t {
                        if !positive_vars.contains(v) {
                            return Err(Error::UnsafeRule(v.clone()));
                        }
                    }
                }
                Ok(())
            };
            check(&rule.head)?;
            for atom in &rule.body_neg {
                check(atom)?;
            }
        }
        Ok(())
    }

    /// Strata assignment; negative dependencies must not sit on a cycle.
    pub fn stratify(&self) -> Result<BTreeMap<String, usize>> {
        let mut preds = BTreeSet::new();
        for rule in &self.rules {
            preds.insert(rule.head.pred.clone());
            for a in rule.body_pos.iter().chain(rule.body_neg.iter()) {
                preds.insert(a.pred.clone());
            }
        }
        for f in &self.base_facts {
            preds.insert(f.pred.clone());
        }
        let mut stratum: BTreeMap<String, usize> =
            preds.iter().map(|p| (p.clone(), 0usize)).collect();
        let bound = preds.len() + 1;
        for _ in 0..bound * bound {
            let mut changed = false;
            for rule in &self.rules {
                let head = stratum[&rule.head.pred];
                for a in &rule.body_pos {
                    if stratum[&a.pred] > head {
                        stratum.insert(rule.head.pred.clone(), stratum[&a.pred]);
                        changed = true;
                    }
                }
                for a in &rule.body_neg {
                    if stratum[&a.pred] + 1 > stratum[&rule.head.pred] {
                        stratum.insert(rule.head.pred.clone(), stratum[&a.pred] + 1);
                        changed = true;
                    }
                }
            }
            if !changed {
                return Ok(stratum);
            }
            if stratum.values().any(|&s| s > preds.len()) {
                break;
            }
        }
        // Some predicate keeps climbing: a negative cycle.
        let worst = stratum
            .iter()
            .max_by_key(|(_, s)| **s)
            .map(|(p, _)| p.clone())
            .unwrap_or_default();
        Err(Error::Unstratifiable(worst))
    }

    /// Naive bottom-up evaluation to fixpoint, stratum by stratum.
    pub fn fixpoint(&self, input_facts: &BTreeSet<Fact>) -> Result<BTreeSet<Fact>> {
        self.check_safety()?;
        let strata = self.stratify()?;
        let max_stratum = strata.values().copied().max().unwrap_or(0);

        let mut facts: BTreeSet<Fact> = self.base_facts.clone();
        facts.extend(input_facts.iter().cloned());

        // Active domain: constants from facts and rule constants.
        let mut constants: BTreeSet<String> = BTreeSet::new();
        for f in &facts {
            constants.extend(f.args.iter().cloned());
        }
        for rule in &self.rules {
            for a in std::iter::once(&rule.head)
                .chain(rule.body_pos.iter())
                .chain(rule.body_neg.iter())
            {
                for t in &a.terms {
                    if let Term::Const(c) = t {
                        constants.insert(c.clone());
                    }
                }
            }
        }
        let constants: Vec<String> = constants.into_iter().collect();

        for level in 0..=max_stratum {
            loop {
                let mut new_facts: Vec<Fact> = Vec::new();
                for rule in &self.rules {
                    if strata[&rule.head.pred] != level {
                        continue;
                    }
                    let mut vars = BTreeSet::new();
                    for a in rule.body_pos.iter() {
                        for t in &a.terms {
                            if let Term::Var(v) = t {
                                vars.insert(v.clone());
                            }
                        }
                    }
                    let vars: Vec<String> = vars.into_iter().collect();
                    let mut assignment: BTreeMap<String, String> = BTreeMap::new();
                    enumerate_assignments(
                        &vars,
                        0,
                        &constants,
                        &mut assignment,
                        &mut |asg| {
                            let grounded_pos: Vec<Fact> =
                                rule.body_pos.iter().map(|a| ground(a, asg)).collect();
                            if !grounded_pos.iter().all(|f| facts.contains(f)) {
                                return;
                            }
                            let grounded_neg: Vec<Fact> =
                                rule.body_neg.iter().map(|a| ground(a, asg)).collect();
                            if grounded_neg.iter().any(|f| facts.contains(f)) {
                                return;
                            }
                            new_facts.push(ground(&rule.head, asg));
                        },
                    );
                }
                let before = facts.len();
                facts.extend(new_facts);
                if facts.len() == before {
                    break;
                }
            }
        }
        Ok(facts)
    }

    pub fn output_slice(&self, facts: &BTreeSet<Fact>) -> BTreeSet<Fact> {
        facts
            .iter()
            .filter(|f| self.output_preds.contains(&f.pred))
            .cloned()
            .collect()
    }

    /// Predicates that (transitively) feed an output predicate.
    fn feeding_output(&self) -> BTreeSet<String> {
        let mut relevant = self.output_preds.clone();
        loop {
            let mut changed = false;
            for rule in &self.rules {
                if relevant.contains(&rule.head.pred) {
                    for a in rule.body_pos.iter().chain(rule.body_neg.iter()) {
                        if relevant.insert(a.pred.clone()) {
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return relevant;
            }
        }
    }
}

fn ground(atom: &Atom, assignment: &BTreeMap<String, String>) -> Fact {
    Fact {
        pred: atom.pred.clone(),
        args: atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => assignment[v].clone(),
            })
            .collect(),
    }
}

fn enumerate_assignments(
    vars: &[String],
    k: usize,
    constants: &[String],
    assignment: &mut BTreeMap<String, String>,
    f: &mut impl FnMut(&BTreeMap<String, String>),
) {
    if k == vars.len() {
        f(assignment);
        return;
    }
    for c in constants {
        assignment.insert(vars[k].clone(), c.clone());
        enumerate_assignments(vars, k + 1, constants, assignment, f);
    }
    assignment.remove(&vars[k]);
}

/// Whole-program syntactic monotonicity: no rule anywhere uses negation.
pub fn syntactic_monotonicity(program: &DatalogProgram) -> bool {
    program.rules.iter().all(|r| r.body_neg.is_empty())
}

/// Monotonicity of the slice that actually feeds the output predicates.
pub fn output_slice_syntactic_monotonicity(program: &DatalogProgram) -> bool {
    let relevant = program.feeding_output();
    program
        .rules
        .iter()
        .filter(|r| relevant.contains(&r.head.pred))
        .all(|r| r.body_neg.is_empty())
}

struct CalmRule {
    program: DatalogProgram,
}

impl ObsEval for CalmRule {
    fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
        let u = h.universe();
        let mut input_facts = BTreeSet::new();
        for i in h.indices() {
            if u.event(i).kind == EventKind::Input && u.event(i).label == "fact" {
                if let Some(p) = &u.event(i).payload {
                    input_facts.insert(Fact::parse(p)?);
                }
            }
        }
        let model = self.program.fixpoint(&input_facts)?;
        let rendered: BTreeSet<String> = self
            .program
            .output_slice(&model)
            .iter()
            .map(|f| f.render())
            .collect();
        Ok([Outcome::Facts(rendered)].into_iter().collect())
    }
}

/// Builds the specification for a program over concurrently arriving facts.
pub fn calm_spec(
    name: &str,
    program: DatalogProgram,
    event_facts: &[Fact],
) -> Result<(Specification, Scenario)> {
    program.check_safety()?;
    program.stratify()?;
    let events: Vec<Event> = event_facts
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut e = Event::new(&format!("f{}", i + 1), EventKind::Input, "src", "fact");
            e.payload = Some(f.render());
            e
        })
        .collect();
    let universe = EventUniverse::from_parts(events, Vec::new(), Vec::new())?;
    let scenario = Scenario::from_universe(name, Arc::clone(&universe))?;

    // Output-fact universe: ground atoms of the output predicates over the
    // program's active domain with every event fact present.
    let all_inputs: BTreeSet<Fact> = event_facts.iter().cloned().collect();
    let mut constants: BTreeSet<String> = BTreeSet::new();
    for f in all_inputs.iter().chain(program.base_facts.iter()) {
        constants.extend(f.args.iter().cloned());
    }
    for rule in &program.rules {
        for a in std::iter::once(&rule.head)
            .chain(rule.body_pos.iter())
            .chain(rule.body_neg.iter())
        {
            for t in &a.terms {
                if let Term::Const(c) = t {
                    constants.insert(c.clone());
                }
            }
        }
    }
    let constants: Vec<String> = constants.into_iter().collect();
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    for rule in &program.rules {
        if program.output_preds.contains(&rule.head.pred) {
            arities.insert(rule.head.pred.clone(), rule.head.terms.len());
        }
    }
    let mut fact_universe = BTreeSet::new();
    for (pred, arity) in &arities {
        let mut tuples: Vec<Vec<String>> = vec![Vec::new()];
        for _ in 0..*arity {
            let mut next = Vec::new();
            for t in &tuples {
                for c in &constants {
                    let mut grown = t.clone();
                    grown.push(c.clone());
                    next.push(grown);
                }
            }
            tuples = next;
        }
        for t in tuples {
            fact_universe.insert(
                Fact {
                    pred: pred.clone(),
                    args: t,
                }
                .render(),
            );
        }
    }
    let domain = make_domain(DomainKind::Inclusion {
        universe: fact_universe.into_iter().collect(),
    })?;
    let rule = CalmRule { program };
    Ok((
        Specification::new(name, universe, domain, Arc::new(rule)),
        scenario,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalmPreset {
    /// Positive transitive closure over edge facts.
    Positive,
    /// Complement facts derived through negation feed the output.
    NegationToOutput,
    /// Positive observable part plus an independent negated internal part.
    Mixed,
}

fn tc_rules() -> Vec<Rule> {
    vec![
        Rule {
            head: Atom::new("reach", &[var("X"), var("Y")]),
            body_pos: vec![Atom::new("edge", &[var("X"), var("Y")])],
            body_neg: vec![],
        },
        Rule {
            head: Atom::new("reach", &[var("X"), var("Z")]),
            body_pos: vec![
                Atom::new("reach", &[var("X"), var("Y")]),
                Atom::new("edge", &[var("Y"), var("Z")]),
            ],
            body_neg: vec![],
        },
    ]
}

pub fn preset_program(preset: CalmPreset) -> (DatalogProgram, Vec<Fact>) {
    match preset {
        CalmPreset::Positive => {
            let program = DatalogProgram {
                rules: tc_rules(),
                output_preds: ["reach".to_string()].into_iter().collect(),
                base_facts: BTreeSet::new(),
            };
            (program, vec![Fact::new("edge", &["1", "2"]), Fact::new("edge", &["2", "3"])])
        }
        CalmPreset::NegationToOutput => {
            let mut rules = tc_rules();
            rules.push(Rule {
                head: Atom::new("unreachable", &[var("X"), var("Y")]),
                body_pos: vec![
                    Atom::new("node", &[var("X")]),
                    Atom::new("node", &[var("Y")]),
                ],
                body_neg: vec![Atom::new("reach", &[var("X"), var("Y")])],
            });
            let program = DatalogProgram {
                rules,
                output_preds: ["unreachable".to_string()].into_iter().collect(),
                base_facts: [Fact::new("node", &["1"]), Fact::new("node", &["2"])]
                    .into_iter()
                    .collect(),
            };
            (program, vec![Fact::new("edge", &["1", "2"])])
        }
        CalmPreset::Mixed => {
            let mut rules = tc_rules();
            rules.push(Rule {
                head: Atom::new("suspect", &[var("X")]),
                body_pos: vec![Atom::new("node", &[var("X")])],
                body_neg: vec![Atom::new("trusted", &[var("X")])],
            });
            let program = DatalogProgram {
                rules,
                output_preds: ["reach".to_string()].into_iter().collect(),
                base_facts: [
                    Fact::new("node", &["1"]),
                    Fact::new("node", &["2"]),
                    Fact::new("trusted", &["1"]),
                ]
                .into_iter()
                .collect(),
            };
            (program, vec![Fact::new("edge", &["1", "2"]), Fact::new("edge", &["2", "3"])])
        }
    }
}

pub fn calm_case(preset: CalmPreset, _params: &serde_json::Value) -> Result<CaseBundle> {
    let (program, event_facts) = preset_program(preset);
    let syntactic = syntactic_monotonicity(&program);
    let slice = output_slice_syntactic_monotonicity(&program);
    let name = match preset {
        CalmPreset::Positive => "calm-positive",
        CalmPreset::NegationToOutput => "calm-negation",
        CalmPreset::Mixed => "calm-mixed",
    };
    let (spec, scenario) = calm_spec(name, program, &event_facts)?;
    let expected = match preset {
        CalmPreset::Positive | CalmPreset::Mixed => true,
        CalmPreset::NegationToOutput => false,
    };
    Ok(CaseBundle {
        name: name.to_string(),
        spec,
        scenario,
        expected_monotone: Some(expected),
        claimed_monotone: Some(syntactic),
        reference: "CALM",
        extras: serde_json::json!({
            "syntactic_monotone": syntactic,
            "output_slice_syntactic_monotone": slice,
        }),
    })
}
