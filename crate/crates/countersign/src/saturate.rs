//! Forward-chaining derivation of assent facts from a signature ledger.
//!
//! The engine is a bounded, deliberately incomplete saturation: its
//! rules transcribe exactly the derivation patterns that signed-term
//! reasoning supports — assent to entailments of what one signed,
//! publicity of signing records and entailment facts, self-entailment
//! and self-reference unfolding for signed formulas, and modus ponens
//! plus conjunction splitting/joining inside `says`. There is no
//! general modal proof search.
//!
//! Rounds are barriers: every rule fires against the fact set as it
//! stood at the start of the round, candidate facts are merged in a
//! fixed enumeration order, and the result is independent of whether
//! firings were computed in parallel. Every derived fact carries its
//! rule and premises, so a derivation chain can be replayed as a
//! Hilbert proof from the ledger's facts and machine-checked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::hilbert::{self, AxiomId, ProofBuilder, ProofScript};
use crate::limits::Limits;
use crate::syntax::{
    check_formula, check_term, is_closed, norm_eq, AgentName, AgentSet, Formula, OpTable, Term,
    TermError,
};

/// A signature ledger: who signed which terms, plus declared
/// entailment facts for application-specific terms.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ledger {
    agents: AgentSet,
    ops: OpTable,
    signs: Vec<(AgentName, Term)>,
    entails: Vec<(Term, Formula)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("signer {0} is not a ledger agent")]
    UnknownAgent(AgentName),
    #[error("ledger term is not closed: {0}")]
    OpenTerm(Term),
    #[error("declared entailment formula has free variables: {0}")]
    OpenFormula(Formula),
    #[error("{0}")]
    BadTerm(#[from] TermError),
}

impl Ledger {
    pub fn new(
        agents: AgentSet,
        ops: OpTable,
        signs: Vec<(AgentName, Term)>,
        entails: Vec<(Term, Formula)>,
    ) -> Result<Self, LedgerError> {
        for (agent, term) in &signs {
            if !agents.contains(agent) {
                return Err(LedgerError::UnknownAgent(agent.clone()));
            }
            check_term(term, &ops)?;
            if !is_closed(term) {
                return Err(LedgerError::OpenTerm(term.clone()));
            }
        }
        for (term, f) in &entails {
            check_term(term, &ops)?;
            check_formula(f, &ops)?;
            if !is_closed(term) {
                return Err(LedgerError::OpenTerm(term.clone()));
            }
            if !f.is_sentence() {
                return Err(LedgerError::OpenFormula(f.clone()));
            }
        }
        Ok(Ledger {
            agents,
            ops,
            signs,
            entails,
        })
    }

    pub fn agents(&self) -> &AgentSet {
        &self.agents
    }

    pub fn ops(&self) -> &OpTable {
        &self.ops
    }

    pub fn signs(&self) -> &[(AgentName, Term)] {
        &self.signs
    }

    pub fn entails(&self) -> &[(Term, Formula)] {
        &self.entails
    }

    /// `(ledger (agents …) (ops …)? (sign …)… (entails …)…)`.
    pub fn render(&self) -> String {
        let mut out = String::from("(ledger (agents");
        for a in self.agents.iter() {
            out.push(' ');
            out.push_str(a.as_str());
        }
        out.push(')');
        if !self.ops.is_empty() {
            out.push_str(" (ops");
            for (name, arity) in self.ops.iter() {
                out.push_str(&format!(" ({name} {arity})"));
            }
            out.push(')');
        }
        for (agent, term) in &self.signs {
            out.push_str(&format!(" (sign {agent} {term})"));
        }
        for (term, f) in &self.entails {
            out.push_str(&format!(" (entails {term} {f})"));
        }
        out.push(')');
        out
    }
}

/// Which rule produced a fact.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RuleTag {
    /// A sign record taken from the ledger.
    LedgerSign,
    /// A declared entailment taken from the ledger.
    LedgerEntails,
    /// A signed formula entails itself.
    SelfEntail,
    /// A signed self-referential term entails its unfolding.
    UnfoldEntail,
    /// Signed plus entailing yields saying.
    Assent,
    /// Signing records are public.
    RecordSign,
    /// Declared entailment facts are public.
    RecordEntails,
    /// Modus ponens inside says.
    SaysMp,
    /// Conjunction split inside says.
    SaysSplit,
    /// Conjunction join inside says.
    SaysJoin,
}

impl RuleTag {
    pub fn token(self) -> &'static str {
        match self {
            RuleTag::LedgerSign => "ledger-sign",
            RuleTag::LedgerEntails => "ledger-entails",
            RuleTag::SelfEntail => "self-entail",
            RuleTag::UnfoldEntail => "unfold-entail",
            RuleTag::Assent => "assent",
            RuleTag::RecordSign => "record-sign",
            RuleTag::RecordEntails => "record-entails",
            RuleTag::SaysMp => "says-mp",
            RuleTag::SaysSplit => "says-split",
            RuleTag::SaysJoin => "says-join",
        }
    }
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// What a fact states.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FactKind {
    Sign(AgentName, Term),
    Entails(Term, Formula),
    Says(AgentName, Formula),
}

impl FactKind {
    fn render(&self) -> String {
        match self {
            FactKind::Sign(a, t) => format!("(sign {a} {t})"),
            FactKind::Entails(t, f) => format!("(entails {t} {f})"),
            FactKind::Says(a, f) => format!("(says {a} {f})"),
        }
    }
}

/// One fact in the saturation arena. Parents always have smaller ids,
/// so ascending id order is a valid derivation order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fact {
    pub id: usize,
    pub kind: FactKind,
    pub rule: RuleTag,
    pub parents: Vec<usize>,
    /// All facts this one depends on, itself included.
    ancestors: BTreeSet<usize>,
}

/// Deduplication key: statements are identified modulo normalization
/// of their formula part; record terms stay as written.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum FactKey {
    Sign(AgentName, Term),
    Entails(Term, Formula),
    Says(AgentName, Formula),
}

impl FactKind {
    fn key(&self) -> FactKey {
        match self {
            FactKind::Sign(a, t) => FactKey::Sign(a.clone(), t.clone()),
            FactKind::Entails(t, f) => FactKey::Entails(t.clone(), f.normalize()),
            FactKind::Says(a, f) => FactKey::Says(a.clone(), f.normalize()),
        }
    }
}

/// Result of saturating a ledger: the fact arena plus run metadata.
#[derive(Clone, Debug)]
pub struct Saturation {
    ledger: Ledger,
    facts: Vec<Fact>,
    rounds: u32,
    bound_exceeded: bool,
}

/// A derived `A says φ` together with its replayable chain.
#[derive(Clone, Debug)]
pub struct AssentFact<'s> {
    pub agent: &'s AgentName,
    pub formula: &'s Formula,
    pub fact: &'s Fact,
}

impl Saturation {
    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    /// True when the round limit cut saturation off before a fixed
    /// point was reached.
    pub fn bound_exceeded(&self) -> bool {
        self.bound_exceeded
    }

    /// All derived assent facts, in derivation order.
    pub fn assents(&self) -> Vec<AssentFact<'_>> {
        self.facts
            .iter()
            .filter_map(|fact| match &fact.kind {
                FactKind::Says(agent, formula) => Some(AssentFact {
                    agent,
                    formula,
                    fact,
                }),
                _ => None,
            })
            .collect()
    }

    /// Looks up `agent says φ` modulo normalization.
    pub fn find_says(&self, agent: &AgentName, f: &Formula) -> Option<&Fact> {
        self.facts.iter().find(|fact| match &fact.kind {
            FactKind::Says(a, g) => a == agent && norm_eq(g, f),
            _ => false,
        })
    }

    /// The derivation chain of a fact: its ancestors in id order.
    pub fn chain(&self, id: usize) -> Vec<&Fact> {
        let fact = &self.facts[id];
        fact.ancestors.iter().map(|&i| &self.facts[i]).collect()
    }

    /// Replays a fact's chain as a Hilbert proof whose hypotheses are
    /// the ledger facts in the chain. The resulting script is intended
    /// to be run through the proof checker.
    pub fn replay(&self, id: usize) -> ProofScript {
        let mut b = ProofBuilder::new();
        for (name, arity) in self.ledger.ops.iter() {
            b.declare_op(name.clone(), arity);
        }
        let mut line_of: BTreeMap<usize, usize> = BTreeMap::new();
        for fact in self.chain(id) {
            let line = match (&fact.rule, &fact.kind) {
                (RuleTag::LedgerSign, FactKind::Sign(a, t)) => {
                    b.assume(Formula::signs(a.clone(), t.clone()))
                }
                (RuleTag::LedgerEntails, FactKind::Entails(t, f)) => {
                    b.assume(Formula::Entails(Box::new(t.clone()), Box::new(f.clone())))
                }
                (RuleTag::SelfEntail, FactKind::Entails(t, f)) => {
                    b.axiom(
                        AxiomId::Ax2,
                        Formula::Entails(Box::new(t.clone()), Box::new(f.clone())),
                    )
                }
                (RuleTag::UnfoldEntail, FactKind::Entails(t, unfolded)) => {
                    let Term::Formula(c) = t else {
                        panic!("unfold facts carry a formula term");
                    };
                    // `c ↔ u` by the unfolding axiom, weakened to
                    // `c → u`, then lifted into the entailment by
                    // necessitation, distribution, and self-entailment.
                    let u = unfolded.clone();
                    let ax8 = b.axiom(AxiomId::Ax8, c.clone().iff(u.clone()));
                    let weaken =
                        b.taut(c.clone().iff(u.clone()).imp(c.clone().imp(u.clone())));
                    let c_imp_u = b.apply(weaken, ax8);
                    let nec = b.nec_entails(c_imp_u, t.clone());
                    let dist = b.axiom(
                        AxiomId::Ax3,
                        Formula::Entails(Box::new(t.clone()), Box::new(c.clone().imp(u.clone())))
                            .imp(
                                Formula::Entails(Box::new(t.clone()), Box::new(c.clone())).imp(
                                    Formula::Entails(Box::new(t.clone()), Box::new(u.clone())),
                                ),
                            ),
                    );
                    let self_ent = b.axiom(
                        AxiomId::Ax2,
                        Formula::Entails(Box::new(t.clone()), Box::new(c.clone())),
                    );
                    let step = b.apply(dist, nec);
                    b.apply(step, self_ent)
                }
                (RuleTag::Assent, FactKind::Says(a, f)) => {
                    let sign_line = line_of[&fact.parents[0]];
                    let ent_line = line_of[&fact.parents[1]];
                    let FactKind::Sign(_, t) = &self.facts[fact.parents[0]].kind else {
                        panic!("assent's first premise is a sign fact");
                    };
                    let both = b.and_intro(sign_line, ent_line);
                    let inst = b.axiom(
                        AxiomId::Ax4,
                        Formula::signs(a.clone(), t.clone())
                            .and(Formula::Entails(Box::new(t.clone()), Box::new(f.clone())))
                            .imp(Formula::says(a.clone(), f.clone())),
                    );
                    b.apply(inst, both)
                }
                (RuleTag::RecordSign, FactKind::Says(a, f)) => {
                    // f is Signs(B, t); the instance antecedent is the
                    // parent's statement.
                    let sign_line = line_of[&fact.parents[0]];
                    let inst = b.axiom(
                        AxiomId::Ax6,
                        f.clone().imp(Formula::says(a.clone(), f.clone())),
                    );
                    b.apply(inst, sign_line)
                }
                (RuleTag::RecordEntails, FactKind::Says(a, f)) => {
                    let ent_line = line_of[&fact.parents[0]];
                    let inst = b.axiom(
                        AxiomId::Ax7,
                        f.clone().imp(Formula::says(a.clone(), f.clone())),
                    );
                    b.apply(inst, ent_line)
                }
                (RuleTag::SaysMp, FactKind::Says(a, f)) => {
                    let imp_line = line_of[&fact.parents[0]];
                    let arg_line = line_of[&fact.parents[1]];
                    let (FactKind::Says(_, imp_f), FactKind::Says(_, arg_f)) = (
                        &self.facts[fact.parents[0]].kind,
                        &self.facts[fact.parents[1]].kind,
                    ) else {
                        panic!("says-mp premises are says facts");
                    };
                    let inst = b.axiom(
                        AxiomId::Ax5,
                        Formula::says(a.clone(), imp_f.clone()).imp(
                            Formula::says(a.clone(), arg_f.clone())
                                .imp(Formula::says(a.clone(), f.clone())),
                        ),
                    );
                    let step = b.apply(inst, imp_line);
                    b.apply(step, arg_line)
                }
                (RuleTag::SaysSplit, FactKind::Says(a, f)) => {
                    let parent_line = line_of[&fact.parents[0]];
                    let FactKind::Says(_, whole) = &self.facts[fact.parents[0]].kind else {
                        panic!("says-split premise is a says fact");
                    };
                    let t = b.taut(whole.clone().imp(f.clone()));
                    b.says_apply(a.clone(), t, parent_line)
                }
                (RuleTag::SaysJoin, FactKind::Says(..)) => {
                    let left = line_of[&fact.parents[0]];
                    let right = line_of[&fact.parents[1]];
                    b.says_collect(left, right)
                }
                (rule, kind) => panic!("rule {rule:?} cannot produce {kind:?}"),
            };
            line_of.insert(fact.id, line);
        }
        let FactKind::Says(agent, formula) = &self.facts[id].kind else {
            panic!("replay targets a says fact");
        };
        b.finish(Formula::says(agent.clone(), formula.clone()))
    }

    /// `(assents (A <formula> (chain …)) …)` over every derived assent.
    pub fn render_assents(&self) -> String {
        let mut out = String::from("(assents");
        for assent in self.assents() {
            out.push_str(&format!(" ({} {} (chain", assent.agent, assent.formula));
            for step in self.chain(assent.fact.id) {
                out.push_str(&format!(
                    " (step {} {} {}",
                    step.id,
                    step.rule,
                    step.kind.render()
                ));
                if !step.parents.is_empty() {
                    out.push_str(" (from");
                    for p in &step.parents {
                        out.push_str(&format!(" {p}"));
                    }
                    out.push(')');
                }
                out.push(')');
            }
            out.push_str("))");
        }
        out.push(')');
        out
    }
}

/// Internal engine state shared by the parallel and sequential runs.
struct Engine<'l> {
    ledger: &'l Ledger,
    limits: Limits,
    facts: Vec<Fact>,
    index: BTreeMap<FactKey, usize>,
}

impl<'l> Engine<'l> {
    fn new(ledger: &'l Ledger, limits: Limits) -> Self {
        Engine {
            ledger,
            limits,
            facts: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    /// Adds a fact unless its statement is already known. Facts whose
    /// chain would exceed the configured cap are dropped.
    fn add(&mut self, kind: FactKind, rule: RuleTag, parents: Vec<usize>) -> bool {
        let key = kind.key();
        if self.index.contains_key(&key) {
            return false;
        }
        let mut ancestors: BTreeSet<usize> = BTreeSet::new();
        for &p in &parents {
            ancestors.extend(self.facts[p].ancestors.iter().copied());
        }
        let id = self.facts.len();
        ancestors.insert(id);
        if ancestors.len() > self.limits.chain_cap as usize {
            return false;
        }
        self.facts.push(Fact {
            id,
            kind,
            rule,
            parents,
            ancestors,
        });
        self.index.insert(key, id);
        true
    }

    fn seed(&mut self) {
        for (agent, term) in &self.ledger.signs {
            self.add(
                FactKind::Sign(agent.clone(), term.clone()),
                RuleTag::LedgerSign,
                vec![],
            );
        }
        for (term, f) in &self.ledger.entails {
            self.add(
                FactKind::Entails(term.clone(), f.clone()),
                RuleTag::LedgerEntails,
                vec![],
            );
        }
    }

    /// Fires every rule against the current fact set and returns the
    /// candidates in deterministic order. Matching work runs through
    /// the supplied mapper so rounds can be computed in parallel.
    fn round_candidates(&self, par: bool) -> Vec<(FactKind, RuleTag, Vec<usize>)> {
        type Candidate = (FactKind, RuleTag, Vec<usize>);
        let signs: Vec<(usize, &AgentName, &Term)> = self
            .facts
            .iter()
            .filter_map(|f| match &f.kind {
                FactKind::Sign(a, t) => Some((f.id, a, t)),
                _ => None,
            })
            .collect();
        let entails: Vec<(usize, &Term, &Formula)> = self
            .facts
            .iter()
            .filter_map(|f| match &f.kind {
                FactKind::Entails(t, g) => Some((f.id, t, g)),
                _ => None,
            })
            .collect();
        let says: Vec<(usize, &AgentName, &Formula)> = self
            .facts
            .iter()
            .filter_map(|f| match &f.kind {
                FactKind::Says(a, g) => Some((f.id, a, g)),
                _ => None,
            })
            .collect();
        let declared: BTreeSet<usize> = self
            .facts
            .iter()
            .filter(|f| f.rule == RuleTag::LedgerEntails)
            .map(|f| f.id)
            .collect();

        // One task per potential firing; matching happens inside the
        // mapped closure.
        #[derive(Clone, Copy)]
        enum Task<'a> {
            SelfEntail(usize, &'a Term),
            Unfold(usize, &'a Term),
            Assent(usize, &'a AgentName, &'a Term, usize, &'a Term, &'a Formula),
            RecordSign(&'a AgentName, usize, &'a AgentName, &'a Term),
            RecordEntails(&'a AgentName, usize, &'a Term, &'a Formula),
            SaysMp(usize, &'a AgentName, &'a Formula, usize, &'a Formula),
            SaysSplit(usize, &'a AgentName, &'a Formula),
            SaysJoin(&'a AgentName, &'a Formula),
        }

        let mut tasks: Vec<Task> = Vec::new();
        for &(id, _, t) in &signs {
            tasks.push(Task::SelfEntail(id, t));
            tasks.push(Task::Unfold(id, t));
        }
        for &(sid, a, st) in &signs {
            for &(eid, et, g) in &entails {
                tasks.push(Task::Assent(sid, a, st, eid, et, g));
            }
        }
        for speaker in self.ledger.agents.iter() {
            for &(sid, signer, t) in &signs {
                tasks.push(Task::RecordSign(speaker, sid, signer, t));
            }
            for &(eid, t, g) in &entails {
                if declared.contains(&eid) {
                    tasks.push(Task::RecordEntails(speaker, eid, t, g));
                }
            }
        }
        for &(iid, a, imp) in &says {
            for &(jid, a2, arg) in &says {
                if a == a2 {
                    tasks.push(Task::SaysMp(iid, a, imp, jid, arg));
                }
            }
            tasks.push(Task::SaysSplit(iid, a, imp));
            tasks.push(Task::SaysJoin(a, imp));
        }

        let says_norms: Vec<(usize, &AgentName, Formula)> = says
            .iter()
            .map(|&(id, a, g)| (id, a, g.normalize()))
            .collect();
        // Looks up `agent says target` (target normalized) and returns
        // the fact id plus the surface spelling of the formula.
        let find_says = |agent: &AgentName, target: &Formula| -> Option<(usize, Formula)> {
            says_norms
                .iter()
                .position(|(_, a, n)| *a == agent && n == target)
                .map(|k| (says[k].0, says[k].2.clone()))
        };

        let run_one = |task: &Task| -> Vec<Candidate> {
            match *task {
                Task::SelfEntail(id, t) => match t {
                    Term::Formula(f) => vec![(
                        FactKind::Entails(t.clone(), f.clone()),
                        RuleTag::SelfEntail,
                        vec![id],
                    )],
                    _ => vec![],
                },
                Task::Unfold(id, t) => match t {
                    Term::Formula(f @ Formula::This(..)) => match f.unfold_this() {
                        Some(Ok(unfolded)) => vec![(
                            FactKind::Entails(t.clone(), unfolded),
                            RuleTag::UnfoldEntail,
                            vec![id],
                        )],
                        _ => vec![],
                    },
                    _ => vec![],
                },
                Task::Assent(sid, a, st, eid, et, g) => {
                    if st == et {
                        vec![(
                            FactKind::Says(a.clone(), g.clone()),
                            RuleTag::Assent,
                            vec![sid, eid],
                        )]
                    } else {
                        vec![]
                    }
                }
                Task::RecordSign(speaker, sid, signer, t) => vec![(
                    FactKind::Says(
                        speaker.clone(),
                        Formula::signs(signer.clone(), t.clone()),
                    ),
                    RuleTag::RecordSign,
                    vec![sid],
                )],
                Task::RecordEntails(speaker, eid, t, g) => vec![(
                    FactKind::Says(
                        speaker.clone(),
                        Formula::Entails(Box::new(t.clone()), Box::new(g.clone())),
                    ),
                    RuleTag::RecordEntails,
                    vec![eid],
                )],
                Task::SaysMp(iid, a, imp, jid, arg) => {
                    let (ante, con) = match split_imp(imp) {
                        Some(pair) => pair,
                        None => return vec![],
                    };
                    if norm_eq(&ante, arg) {
                        vec![(
                            FactKind::Says(a.clone(), con),
                            RuleTag::SaysMp,
                            vec![iid, jid],
                        )]
                    } else {
                        vec![]
                    }
                }
                Task::SaysSplit(id, a, f) => match split_and(f) {
                    Some((l, r)) => vec![
                        (FactKind::Says(a.clone(), l), RuleTag::SaysSplit, vec![id]),
                        (FactKind::Says(a.clone(), r), RuleTag::SaysSplit, vec![id]),
                    ],
                    None => vec![],
                },
                Task::SaysJoin(a, imp) => {
                    // Goal-directed: assemble the antecedent of a known
                    // says-implication from known says facts. Every
                    // conjunction subtree of the antecedent is a target,
                    // so nested antecedents build up bottom-up, one
                    // level per round.
                    let Some((ante, _)) = split_imp(imp) else {
                        return vec![];
                    };
                    let norm = ante.normalize();
                    let mut targets: Vec<&Formula> = Vec::new();
                    let mut stack = vec![&norm];
                    while let Some(f) = stack.pop() {
                        if let Formula::And(l, r) = f {
                            targets.push(f);
                            stack.push(l);
                            stack.push(r);
                        }
                    }
                    let mut out = Vec::new();
                    for target in targets {
                        if find_says(a, target).is_some() {
                            continue;
                        }
                        let Formula::And(l, r) = target else {
                            continue;
                        };
                        if let (Some((lid, lf)), Some((rid, rf))) =
                            (find_says(a, l), find_says(a, r))
                        {
                            out.push((
                                FactKind::Says(a.clone(), lf.and(rf)),
                                RuleTag::SaysJoin,
                                vec![lid, rid],
                            ));
                        }
                    }
                    out
                }
            }
        };

        let produced: Vec<Vec<Candidate>> = if par {
            // Tasks borrow from `self`; map by index to keep the items
            // Send without cloning fact contents.
            crate::exec::map((0..tasks.len()).collect(), |i| run_one(&tasks[i]))
        } else {
            crate::exec::map_seq((0..tasks.len()).collect(), |i| run_one(&tasks[i]))
        };
        produced.into_iter().flatten().collect()
    }

    fn run(&mut self, bound: u32, par: bool) -> (u32, bool) {
        self.seed();
        let mut rounds = 0;
        let mut exceeded = false;
        for _ in 0..bound {
            let candidates = self.round_candidates(par);
            rounds += 1;
            let mut added = false;
            for (kind, rule, parents) in candidates {
                // Candidates reference start-of-round fact ids only;
                // merging in enumeration order fixes which duplicate's
                // provenance wins, independent of parallelism.
                added |= self.add(kind, rule, parents);
            }
            if !added {
                rounds -= 1; // the final quiet round discovered nothing
                break;
            }
            if rounds == bound {
                exceeded = true;
            }
        }
        (rounds, exceeded)
    }
}

/// Splits a says-implication body into antecedent and consequent,
/// preferring the surface spelling and falling back to the normalized
/// one.
fn split_imp(f: &Formula) -> Option<(Formula, Formula)> {
    if let Formula::Imp(a, b) = f {
        return Some((a.as_ref().clone(), b.as_ref().clone()));
    }
    let n = f.normalize();
    if let Formula::Not(x) = &n {
        if let Formula::And(a, nb) = x.as_ref() {
            if let Formula::Not(b) = nb.as_ref() {
                return Some((a.as_ref().clone(), b.as_ref().clone()));
            }
        }
    }
    None
}

/// Splits a conjunction, preferring the surface spelling.
fn split_and(f: &Formula) -> Option<(Formula, Formula)> {
    if let Formula::And(a, b) = f {
        return Some((a.as_ref().clone(), b.as_ref().clone()));
    }
    match f.normalize() {
        Formula::And(a, b) => Some((*a, *b)),
        _ => None,
    }
}

/// Saturates a ledger for up to `bound` rounds, computing rule
/// firings in parallel when the `parallel` feature is enabled.
pub fn saturate(ledger: &Ledger, bound: u32, limits: &Limits) -> Saturation {
    saturate_impl(ledger, bound, limits, true)
}

/// Sequential variant of [`saturate`].
pub fn saturate_seq(ledger: &Ledger, bound: u32, limits: &Limits) -> Saturation {
    saturate_impl(ledger, bound, limits, false)
}

fn saturate_impl(ledger: &Ledger, bound: u32, limits: &Limits, par: bool) -> Saturation {
    let mut engine = Engine::new(ledger, limits.clone());
    let (rounds, bound_exceeded) = engine.run(bound, par);
    Saturation {
        ledger: ledger.clone(),
        facts: engine.facts,
        rounds,
        bound_exceeded,
    }
}

/// Outcome of a meeting-of-minds query: does every party assent?
#[derive(Clone, Debug)]
pub struct MeetingReport {
    pub goal: Formula,
    pub holds: bool,
    /// Parties with no derived assent to the goal.
    pub missing: Vec<AgentName>,
    /// Fact ids of each party's assent, when found.
    pub found: Vec<(AgentName, usize)>,
    pub saturation: Saturation,
}

impl MeetingReport {
    /// `(meeting (goal <f>) (holds <bool>) (missing …)? (assents …)?)`.
    pub fn render_sexpr(&self) -> String {
        let mut out = format!("(meeting (goal {}) (holds {})", self.goal, self.holds);
        if !self.missing.is_empty() {
            out.push_str(" (missing");
            for a in &self.missing {
                out.push_str(&format!(" {a}"));
            }
            out.push(')');
        }
        if !self.found.is_empty() {
            out.push_str(" (assents");
            for (a, id) in &self.found {
                out.push_str(&format!(" ({a} {})", self.saturation.facts()[*id].id));
            }
            out.push(')');
        }
        out.push(')');
        out
    }
}

impl fmt::Display for MeetingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.holds {
            write!(f, "meeting of minds on {}: all parties assent", self.goal)
        } else {
            let names: Vec<&str> = self.missing.iter().map(|a| a.as_str()).collect();
            write!(
                f,
                "no meeting of minds on {}: missing {}",
                self.goal,
                names.join(", ")
            )
        }
    }
}

/// Saturates and then checks that every party assents to `goal`.
pub fn meeting_of_minds(
    ledger: &Ledger,
    parties: &AgentSet,
    goal: &Formula,
    bound: u32,
    limits: &Limits,
) -> MeetingReport {
    let saturation = saturate(ledger, bound, limits);
    let mut missing = Vec::new();
    let mut found = Vec::new();
    for party in parties.iter() {
        match saturation.find_says(party, goal) {
            Some(fact) => found.push((party.clone(), fact.id)),
            None => missing.push(party.clone()),
        }
    }
    MeetingReport {
        goal: goal.clone(),
        holds: missing.is_empty(),
        missing,
        found,
        saturation,
    }
}

/// Convenience: replay a chain and check it.
pub fn replay_and_check(sat: &Saturation, id: usize, limits: &Limits) -> hilbert::Verdict {
    hilbert::check_proof(&sat.replay(id), limits)
}
