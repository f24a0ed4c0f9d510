//! Finite Kripke models and their coherence constraints.
//!
//! A model carries a finite world set, a signing record relation, a
//! says-accessibility relation, a valuation, and an entailment relation
//! that comes in two modes. In `explicit` mode the entailment relation
//! is exactly the declared pair list. In `fixedpoint` mode the declared
//! pairs (non-formula terms only) form a base relation which is closed
//! so that every formula ends up entailing precisely its own truth set;
//! the closure is computed lazily, stratified on entailment depth, and
//! only ever materialized for the formulas a query actually reaches.
//!
//! Three constraints tie the relations together:
//!
//! * SC1 — a formula in the entailment relation is true at that world;
//! * SC2 — whatever an agent signed entails-holds at every world the
//!   agent considers said;
//! * SC3 — signing records persist across says-edges taken by anyone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::limits::Limits;
use crate::sat::{EvalError, Evaluator};
use crate::syntax::{
    check_term, free_vars, AgentName, AtomName, Formula, OpTable, Term, TermError,
};

/// Index of a world within its model's declaration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct WorldId(pub(crate) u32);

impl WorldId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// How the entailment relation of a model is determined.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum EntailsMode {
    /// The relation is exactly the declared pair list.
    #[default]
    Explicit,
    /// Declared pairs (non-formula terms) are a base; formulas are
    /// closed over by the stratified fixed-point construction.
    Fixedpoint,
}

impl fmt::Display for EntailsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntailsMode::Explicit => f.write_str("explicit"),
            EntailsMode::Fixedpoint => f.write_str("fixedpoint"),
        }
    }
}

/// A finite model. Immutable once built; construct via [`ModelBuilder`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Model {
    worlds: Vec<String>,
    agents: Vec<AgentName>,
    atoms: Vec<AtomName>,
    ops: OpTable,
    valuation: Vec<BTreeSet<AtomName>>,
    says: BTreeMap<WorldId, BTreeMap<AgentName, BTreeSet<WorldId>>>,
    signs: BTreeMap<WorldId, BTreeMap<AgentName, BTreeSet<Term>>>,
    mode: EntailsMode,
    base_all: bool,
    entails_pairs: BTreeSet<(Term, WorldId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate world {0}")]
    DuplicateWorld(String),
    #[error("duplicate agent {0}")]
    DuplicateAgent(AgentName),
    #[error("duplicate atom {0}")]
    DuplicateAtom(AtomName),
    #[error("unknown world {0}")]
    UnknownWorld(String),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentName),
    #[error("unknown atom {0}")]
    UnknownAtom(AtomName),
    #[error("{0}")]
    BadTerm(#[from] TermError),
    #[error("term is not closed: {0}")]
    OpenTerm(Term),
    #[error("model declares {got} worlds, cap is {cap}")]
    TooManyWorlds { got: usize, cap: usize },
    #[error("model declares {got} agents, cap is {cap}")]
    TooManyAgents { got: usize, cap: usize },
    #[error("fixedpoint base may not contain formula terms: {0}")]
    FormulaInBase(Term),
    #[error("entails-base all is only meaningful in fixedpoint mode")]
    BaseAllInExplicitMode,
}

/// Accumulates declarations by name and validates them into a [`Model`].
#[derive(Default, Clone, Debug)]
pub struct ModelBuilder {
    worlds: Vec<String>,
    agents: Vec<AgentName>,
    atoms: Vec<AtomName>,
    ops: OpTable,
    true_at: Vec<(String, AtomName)>,
    says_edges: Vec<(String, AgentName, String)>,
    signs: Vec<(String, AgentName, Term)>,
    mode: EntailsMode,
    base_all: bool,
    entails: Vec<(Term, String)>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        ModelBuilder {
            mode: EntailsMode::Explicit,
            ..Default::default()
        }
    }

    pub fn world(&mut self, name: impl Into<String>) -> &mut Self {
        self.worlds.push(name.into());
        self
    }

    pub fn agent(&mut self, name: impl Into<AgentName>) -> &mut Self {
        self.agents.push(name.into());
        self
    }

    pub fn atom(&mut self, name: impl Into<AtomName>) -> &mut Self {
        self.atoms.push(name.into());
        self
    }

    pub fn op(&mut self, name: impl Into<crate::syntax::OpName>, arity: usize) -> &mut Self {
        // Arity conflicts surface in build(); last declaration wins here.
        let _ = self.ops.declare(name, arity);
        self
    }

    pub fn true_at(&mut self, world: impl Into<String>, atom: impl Into<AtomName>) -> &mut Self {
        self.true_at.push((world.into(), atom.into()));
        self
    }

    pub fn says_edge(
        &mut self,
        from: impl Into<String>,
        agent: impl Into<AgentName>,
        to: impl Into<String>,
    ) -> &mut Self {
        self.says_edges.push((from.into(), agent.into(), to.into()));
        self
    }

    pub fn sign(
        &mut self,
        world: impl Into<String>,
        agent: impl Into<AgentName>,
        term: impl Into<Term>,
    ) -> &mut Self {
        self.signs.push((world.into(), agent.into(), term.into()));
        self
    }

    pub fn mode(&mut self, mode: EntailsMode) -> &mut Self {
        self.mode = mode;
        self
    }

    /// Declares the base relation to contain every (non-formula, world)
    /// pair; only meaningful in fixedpoint mode.
    pub fn entails_base_all(&mut self) -> &mut Self {
        self.base_all = true;
        self
    }

    pub fn entails(&mut self, term: impl Into<Term>, world: impl Into<String>) -> &mut Self {
        self.entails.push((term.into(), world.into()));
        self
    }

    pub fn build(&self, limits: &Limits) -> Result<Model, ModelError> {
        if self.worlds.len() > limits.max_worlds {
            return Err(ModelError::TooManyWorlds {
                got: self.worlds.len(),
                cap: limits.max_worlds,
            });
        }
        if self.agents.len() > limits.max_agents {
            return Err(ModelError::TooManyAgents {
                got: self.agents.len(),
                cap: limits.max_agents,
            });
        }
        for (i, w) in self.worlds.iter().enumerate() {
            if self.worlds[..i].contains(w) {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].contains(a) {
                return Err(ModelError::DuplicateAgent(a.clone()));
            }
        }
        for (i, p) in self.atoms.iter().enumerate() {
            if self.atoms[..i].contains(p) {
                return Err(ModelError::DuplicateAtom(p.clone()));
            }
        }

        let mut model = Model {
            worlds: self.worlds.clone(),
            agents: self.agents.clone(),
            atoms: self.atoms.clone(),
            ops: self.ops.clone(),
            valuation: vec![BTreeSet::new(); self.worlds.len()],
            says: BTreeMap::new(),
            signs: BTreeMap::new(),
            mode: self.mode,
            base_all: self.base_all,
            entails_pairs: BTreeSet::new(),
        };
        let wid = |name: &String| {
            model
                .worlds
                .iter()
                .position(|w| w == name)
                .map(|i| WorldId(i as u32))
                .ok_or_else(|| ModelError::UnknownWorld(name.clone()))
        };
        for (w, p) in &self.true_at {
            let w = wid(w)?;
            if !model.atoms.contains(p) {
                return Err(ModelError::UnknownAtom(p.clone()));
            }
            model.valuation[w.index()].insert(p.clone());
        }
        for (from, a, to) in &self.says_edges {
            let (from, to) = (wid(from)?, wid(to)?);
            if !model.agents.contains(a) {
                return Err(ModelError::UnknownAgent(a.clone()));
            }
            model
                .says
                .entry(from)
                .or_default()
                .entry(a.clone())
                .or_default()
                .insert(to);
        }
        for (w, a, t) in &self.signs {
            let w = wid(w)?;
            if !model.agents.contains(a) {
                return Err(ModelError::UnknownAgent(a.clone()));
            }
            model.check_term_refs(t)?;
            model
                .signs
                .entry(w)
                .or_default()
                .entry(a.clone())
                .or_default()
                .insert(t.clone());
        }
        if self.base_all && self.mode == EntailsMode::Explicit {
            return Err(ModelError::BaseAllInExplicitMode);
        }
        for (t, w) in &self.entails {
            let w = wid(w)?;
            if self.mode == EntailsMode::Fixedpoint && t.is_formula() {
                return Err(ModelError::FormulaInBase(t.clone()));
            }
            model.check_term_refs(t)?;
            model.entails_pairs.insert((t.clone(), w));
        }
        Ok(model)
    }
}

impl Model {
    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn worlds(&self) -> impl Iterator<Item = WorldId> {
        (0..self.worlds.len() as u32).map(WorldId)
    }

    pub fn world_name(&self, w: WorldId) -> &str {
        &self.worlds[w.index()]
    }

    pub fn world_id(&self, name: &str) -> Option<WorldId> {
        self.worlds
            .iter()
            .position(|w| w == name)
            .map(|i| WorldId(i as u32))
    }

    pub fn agents(&self) -> &[AgentName] {
        &self.agents
    }

    pub fn atoms(&self) -> &[AtomName] {
        &self.atoms
    }

    pub fn ops(&self) -> &OpTable {
        &self.ops
    }

    pub fn mode(&self) -> EntailsMode {
        self.mode
    }

    pub fn base_all(&self) -> bool {
        self.base_all
    }

    pub fn entails_pairs(&self) -> impl Iterator<Item = &(Term, WorldId)> {
        self.entails_pairs.iter()
    }

    pub fn contains_world(&self, w: WorldId) -> bool {
        w.index() < self.worlds.len()
    }

    pub fn atom_true_at(&self, w: WorldId, p: &AtomName) -> bool {
        self.valuation[w.index()].contains(p)
    }

    pub fn atoms_true_at(&self, w: WorldId) -> impl Iterator<Item = &AtomName> {
        self.valuation[w.index()].iter()
    }

    /// Worlds `agent` says-accesses from `w` (empty if none).
    pub fn says_successors(&self, w: WorldId, agent: &AgentName) -> BTreeSet<WorldId> {
        self.says
            .get(&w)
            .and_then(|m| m.get(agent))
            .cloned()
            .unwrap_or_default()
    }

    pub fn says_edges(&self) -> impl Iterator<Item = (WorldId, &AgentName, WorldId)> {
        self.says.iter().flat_map(|(&w, m)| {
            m.iter()
                .flat_map(move |(a, tos)| tos.iter().map(move |&to| (w, a, to)))
        })
    }

    pub fn has_sign(&self, w: WorldId, agent: &AgentName, term: &Term) -> bool {
        self.signs
            .get(&w)
            .and_then(|m| m.get(agent))
            .map_or(false, |ts| ts.contains(term))
    }

    pub fn sign_records(&self) -> impl Iterator<Item = (WorldId, &AgentName, &Term)> {
        self.signs.iter().flat_map(|(&w, m)| {
            m.iter()
                .flat_map(move |(a, ts)| ts.iter().map(move |t| (w, a, t)))
        })
    }

    /// Membership of a non-formula term in the declared base relation.
    pub fn base_holds(&self, t: &Term, w: WorldId) -> bool {
        debug_assert!(!t.is_formula());
        if self.base_all {
            return true;
        }
        self.entails_pairs.contains(&(t.clone(), w))
    }

    /// Membership of any term in the declared pair list (explicit mode's
    /// whole relation).
    pub fn declared_pair(&self, t: &Term, w: WorldId) -> bool {
        self.entails_pairs.contains(&(t.clone(), w))
    }

    /// Checks that a term only mentions declared agents, atoms, and
    /// operators, and is closed.
    pub fn check_term_refs(&self, t: &Term) -> Result<(), ModelError> {
        check_term(t, &self.ops)?;
        if !free_vars(t).is_empty() {
            return Err(ModelError::OpenTerm(t.clone()));
        }
        self.check_refs_inner(t)
    }

    /// As [`check_term_refs`](Self::check_term_refs) but for a formula
    /// that additionally must be a sentence.
    pub fn check_formula_refs(&self, f: &Formula) -> Result<(), ModelError> {
        self.check_term_refs(&Term::Formula(f.clone()))
    }

    fn check_refs_inner(&self, t: &Term) -> Result<(), ModelError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::Agent(a) => {
                if self.agents.contains(a) {
                    Ok(())
                } else {
                    Err(ModelError::UnknownAgent(a.clone()))
                }
            }
            Term::OpApp(_, args) => args.iter().try_for_each(|a| self.check_refs_inner(a)),
            Term::Formula(f) => self.check_formula_refs_inner(f),
        }
    }

    fn check_formula_refs_inner(&self, f: &Formula) -> Result<(), ModelError> {
        match f {
            Formula::Atom(p) => {
                if self.atoms.contains(p) {
                    Ok(())
                } else {
                    Err(ModelError::UnknownAtom(p.clone()))
                }
            }
            Formula::Not(a) | Formula::This(_, a) => self.check_formula_refs_inner(a),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                self.check_formula_refs_inner(a)?;
                self.check_formula_refs_inner(b)
            }
            Formula::Entails(t, a) => {
                self.check_refs_inner(t)?;
                self.check_formula_refs_inner(a)
            }
            Formula::Signs(agent, t) => {
                if !self.agents.contains(agent) {
                    return Err(ModelError::UnknownAgent(agent.clone()));
                }
                self.check_refs_inner(t)
            }
            Formula::Says(agent, a) => {
                if !self.agents.contains(agent) {
                    return Err(ModelError::UnknownAgent(agent.clone()));
                }
                self.check_formula_refs_inner(a)
            }
            Formula::SaysK(g, _, a) | Formula::Mutual(g, a) => {
                for agent in g.iter() {
                    if !self.agents.contains(agent) {
                        return Err(ModelError::UnknownAgent(agent.clone()));
                    }
                }
                self.check_formula_refs_inner(a)
            }
        }
    }
}

/// One constraint violation with its witness tuple.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Violation {
    /// `(term, world)` is in the entailment relation but the formula is
    /// false there.
    Sc1 { term: Term, world: WorldId },
    /// `agent` signed `term` at `world`, says-accesses `target`, but the
    /// term does not entail-hold at `target`.
    Sc2 {
        world: WorldId,
        agent: AgentName,
        term: Term,
        target: WorldId,
    },
    /// `signer` signed `term` at `world`, `speaker` says-accesses
    /// `target`, but the record is missing at `target`.
    Sc3 {
        world: WorldId,
        speaker: AgentName,
        signer: AgentName,
        term: Term,
        target: WorldId,
    },
}

/// Outcome of [`validate_model`]: empty iff all constraints hold.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ConstraintReport {
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render_text(&self, m: &Model) -> String {
        if self.is_clean() {
            return "all constraints satisfied".to_string();
        }
        let mut out = String::new();
        for v in &self.violations {
            let line = match v {
                Violation::Sc1 { term, world } => format!(
                    "SC1: {} is in the entailment relation at {} but false there",
                    term,
                    m.world_name(*world)
                ),
                Violation::Sc2 {
                    world,
                    agent,
                    term,
                    target,
                } => format!(
                    "SC2: {agent} signed {term} at {} but it does not entail-hold at {}",
                    m.world_name(*world),
                    m.world_name(*target)
                ),
                Violation::Sc3 {
                    world,
                    speaker,
                    signer,
                    term,
                    target,
                } => format!(
                    "SC3: {signer} signed {term} at {}, {speaker} says-accesses {}, where the record is missing",
                    m.world_name(*world),
                    m.world_name(*target)
                ),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn render_sexpr(&self, m: &Model) -> String {
        let mut out = String::from("(violations");
        for v in &self.violations {
            let item = match v {
                Violation::Sc1 { term, world } => {
                    format!(" (sc1 {} {})", term, m.world_name(*world))
                }
                Violation::Sc2 {
                    world,
                    agent,
                    term,
                    target,
                } => format!(
                    " (sc2 {} {} {} {})",
                    m.world_name(*world),
                    agent,
                    term,
                    m.world_name(*target)
                ),
                Violation::Sc3 {
                    world,
                    speaker,
                    signer,
                    term,
                    target,
                } => format!(
                    " (sc3 {} {} {} {} {})",
                    m.world_name(*world),
                    speaker,
                    signer,
                    term,
                    m.world_name(*target)
                ),
            };
            out.push_str(&item);
        }
        out.push(')');
        out
    }
}

/// Membership of `t` in the model's entailment relation at `w`.
///
/// Explicit mode is a lookup in the declared pairs. Fixedpoint mode is
/// a base lookup for non-formula terms and the stratified closure value
/// for formulas (which equals evaluation there).
pub fn entails_holds(m: &Model, t: &Term, w: WorldId, limits: &Limits) -> Result<bool, EvalError> {
    if !m.contains_world(w) {
        return Err(EvalError::UnknownWorld(format!("world #{}", w.0)));
    }
    if !free_vars(t).is_empty() {
        return Err(EvalError::OpenTerm(t.clone()));
    }
    match (m.mode(), t) {
        (EntailsMode::Explicit, _) => Ok(m.declared_pair(t, w)),
        (EntailsMode::Fixedpoint, Term::Formula(f)) => {
            let mut ev = Evaluator::new(m, limits.clone());
            ev.prepare(std::slice::from_ref(f), false)?;
            Ok(ev
                .member_value(f, w)
                .expect("prepared formula has a membership value"))
        }
        (EntailsMode::Fixedpoint, _) => Ok(m.base_holds(t, w)),
    }
}

/// Checks SC1–SC3, batched in parallel when the `parallel` feature is on.
pub fn validate_model(m: &Model, limits: &Limits) -> Result<ConstraintReport, EvalError> {
    validate_impl(m, limits, true)
}

/// Sequential variant of [`validate_model`].
pub fn validate_model_seq(m: &Model, limits: &Limits) -> Result<ConstraintReport, EvalError> {
    validate_impl(m, limits, false)
}

fn validate_impl(m: &Model, limits: &Limits, par: bool) -> Result<ConstraintReport, EvalError> {
    let mut ev = Evaluator::new(m, limits.clone());
    // Prepare memberships for everything the checks will query: signed
    // formula terms and (explicit mode) declared formula pairs.
    let mut seed: Vec<Formula> = Vec::new();
    for (_, _, t) in m.sign_records() {
        if let Term::Formula(f) = t {
            seed.push(f.clone());
        }
    }
    for (t, _) in m.entails_pairs.iter() {
        if let Term::Formula(f) = t {
            seed.push(f.clone());
        }
    }
    ev.prepare(&seed, par)?;

    let mut violations: Vec<Violation> = Vec::new();

    // SC1. Explicit mode: every declared formula pair must evaluate true.
    // Fixedpoint mode: spot-check the signed-term closure — membership
    // must imply truth (the construction makes them coincide for the
    // stratified formulas, so any mismatch is reported).
    match m.mode() {
        EntailsMode::Explicit => {
            let items: Vec<(Formula, WorldId)> = m
                .entails_pairs
                .iter()
                .filter_map(|(t, w)| t.as_formula().map(|f| (f.clone(), *w)))
                .collect();
            let checked = run(par, items, |(f, w)| {
                ev.eval(w, &f).map(|ok| (f, w, ok))
            });
            for r in checked {
                let (f, w, ok) = r?;
                if !ok {
                    violations.push(Violation::Sc1 {
                        term: Term::Formula(f),
                        world: w,
                    });
                }
            }
        }
        EntailsMode::Fixedpoint => {
            let closure = ev.prepared_formulas();
            let items: Vec<(Formula, WorldId)> = closure
                .into_iter()
                .flat_map(|f| m.worlds().map(move |w| (f.clone(), w)))
                .collect();
            let checked = run(par, items, |(f, w)| {
                let member = ev.member_value(&f, w).unwrap_or(false);
                if !member {
                    return Ok(None);
                }
                ev.eval(w, &f).map(|ok| (!ok).then_some((f, w)))
            });
            for r in checked {
                if let Some((f, w)) = r? {
                    violations.push(Violation::Sc1 {
                        term: Term::Formula(f),
                        world: w,
                    });
                }
            }
        }
    }

    // SC2: signed terms entail-hold wherever the signer says-accesses.
    let mut sc2_items: Vec<(WorldId, AgentName, Term, WorldId)> = Vec::new();
    for (w, a, t) in m.sign_records() {
        for target in m.says_successors(w, a) {
            sc2_items.push((w, a.clone(), t.clone(), target));
        }
    }
    let checked = run(par, sc2_items, |(w, a, t, target)| {
        let holds = match (m.mode(), &t) {
            (EntailsMode::Explicit, _) => m.declared_pair(&t, target),
            (EntailsMode::Fixedpoint, Term::Formula(f)) => {
                ev.member_value(f, target).unwrap_or(false)
            }
            (EntailsMode::Fixedpoint, _) => m.base_holds(&t, target),
        };
        if holds {
            None
        } else {
            Some(Violation::Sc2 {
                world: w,
                agent: a,
                term: t,
                target,
            })
        }
    });
    violations.extend(checked.into_iter().flatten());

    // SC3: signing records persist across says-edges taken by anyone.
    let mut sc3_items: Vec<(WorldId, AgentName, AgentName, Term, WorldId)> = Vec::new();
    for (w, signer, t) in m.sign_records() {
        for (edge_w, speaker, target) in m.says_edges() {
            if edge_w == w {
                sc3_items.push((w, speaker.clone(), signer.clone(), t.clone(), target));
            }
        }
    }
    let checked = run(par, sc3_items, |(w, speaker, signer, t, target)| {
        if m.has_sign(target, &signer, &t) {
            None
        } else {
            Some(Violation::Sc3 {
                world: w,
                speaker,
                signer,
                term: t,
                target,
            })
        }
    });
    violations.extend(checked.into_iter().flatten());

    violations.sort();
    violations.dedup();
    Ok(ConstraintReport { violations })
}

fn run<T, U, F>(par: bool, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    if par {
        crate::exec::map(items, f)
    } else {
        crate::exec::map_seq(items, f)
    }
}

/// The stratified entailment closure restricted to the reach of a query
/// set: for every formula in the closure, the worlds where it is a
/// member of the closed relation.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct EntailmentClosure {
    rows: BTreeMap<Formula, BTreeSet<WorldId>>,
}

impl EntailmentClosure {
    pub fn contains(&self, f: &Formula, w: WorldId) -> bool {
        self.rows.get(f).map_or(false, |ws| ws.contains(&w))
    }

    /// All formulas in the computed closure (even those that are
    /// members at no world).
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.rows.keys()
    }

    pub fn worlds_of(&self, f: &Formula) -> BTreeSet<WorldId> {
        self.rows.get(f).cloned().unwrap_or_default()
    }

    /// Member pairs, sorted by formula then world.
    pub fn pairs(&self) -> Vec<(&Formula, WorldId)> {
        self.rows
            .iter()
            .flat_map(|(f, ws)| ws.iter().map(move |&w| (f, w)))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.values().all(|ws| ws.is_empty())
    }
}

/// Computes the closed entailment relation over the query closure —
/// every query formula plus every formula reachable from one through
/// entailment left-hand sides, signed subterms, and `this` unfoldings.
pub fn extend_fixpoint(
    m: &Model,
    queries: &[Formula],
    limits: &Limits,
) -> Result<EntailmentClosure, EvalError> {
    extend_impl(m, queries, limits, true)
}

/// Sequential variant of [`extend_fixpoint`].
pub fn extend_fixpoint_seq(
    m: &Model,
    queries: &[Formula],
    limits: &Limits,
) -> Result<EntailmentClosure, EvalError> {
    extend_impl(m, queries, limits, false)
}

fn extend_impl(
    m: &Model,
    queries: &[Formula],
    limits: &Limits,
    par: bool,
) -> Result<EntailmentClosure, EvalError> {
    if m.mode() != EntailsMode::Fixedpoint {
        return Err(EvalError::WrongMode);
    }
    for q in queries {
        if !q.is_sentence() {
            return Err(EvalError::OpenTerm(Term::Formula(q.clone())));
        }
    }
    let mut ev = Evaluator::new(m, limits.clone());
    ev.prepare_with_signed(queries, par)?;
    let mut rows: BTreeMap<Formula, BTreeSet<WorldId>> = BTreeMap::new();
    for f in ev.prepared_formulas() {
        let mut ws = BTreeSet::new();
        for w in m.worlds() {
            if ev.member_value(&f, w) == Some(true) {
                ws.insert(w);
            }
        }
        rows.insert(f, ws);
    }
    Ok(EntailmentClosure { rows })
}

/// The per-round relations of the iterative construction, restricted to
/// the query closure; round `i` holds the members of depth at most `i`.
/// Exposed for tests of monotonicity and stabilization.
pub fn extend_fixpoint_rounds(
    m: &Model,
    queries: &[Formula],
    limits: &Limits,
) -> Result<Vec<BTreeSet<(Formula, WorldId)>>, EvalError> {
    let closure = extend_fixpoint(m, queries, limits)?;
    let max_d = closure
        .formulas()
        .map(|f| f.entailment_depth())
        .max()
        .unwrap_or(0);
    let mut rounds = Vec::new();
    let mut acc: BTreeSet<(Formula, WorldId)> = BTreeSet::new();
    for d in 1..=max_d {
        for f in closure.formulas() {
            if f.entailment_depth() == d {
                for w in closure.worlds_of(f) {
                    acc.insert((f.clone(), w));
                }
            }
        }
        rounds.push(acc.clone());
    }
    Ok(rounds)
}

/// Do two entailment relations agree on every pair whose term comes
/// from `universe` and has depth at most `k`?
pub fn rel_equiv_k(
    r: &BTreeSet<(Term, WorldId)>,
    r_prime: &BTreeSet<(Term, WorldId)>,
    k: u32,
    universe: &BTreeSet<Term>,
) -> bool {
    for t in universe {
        if t.entailment_depth() > k {
            continue;
        }
        for (u, w) in r.iter() {
            if u == t && !r_prime.contains(&(u.clone(), *w)) {
                return false;
            }
        }
        for (u, w) in r_prime.iter() {
            if u == t && !r.contains(&(u.clone(), *w)) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Formula;

    fn p() -> Formula {
        Formula::atom("p")
    }

    /// The two-world countermodel: both agents sign the conditional
    /// "if the other says p then p", all says-edges present, p true
    /// only at w1, entailment base = all non-formula pairs.
    pub(crate) fn countermodel(limits: &Limits) -> Model {
        let mut b = ModelBuilder::new();
        b.world("w0").world("w1").agent("A").agent("B").atom("p");
        b.mode(EntailsMode::Fixedpoint).entails_base_all();
        b.true_at("w1", "p");
        for w in ["w0", "w1"] {
            for a in ["A", "B"] {
                for to in ["w0", "w1"] {
                    b.says_edge(w, a, to);
                }
            }
            b.sign(w, "A", Formula::says("B", p()).imp(p()));
            b.sign(w, "B", Formula::says("A", p()).imp(p()));
        }
        b.build(limits).unwrap()
    }

    #[test]
    fn countermodel_is_clean() {
        let limits = Limits::default();
        let m = countermodel(&limits);
        let report = validate_model(&m, &limits).unwrap();
        assert!(report.is_clean(), "{:?}", report.violations);
        let seq = validate_model_seq(&m, &limits).unwrap();
        assert_eq!(report, seq);
    }

    #[test]
    fn sc2_violation_reported_and_removable() {
        let limits = Limits::default();
        let mut b = ModelBuilder::new();
        b.world("w").agent("A").atom("p");
        b.sign("w", "A", p());
        b.says_edge("w", "A", "w");
        // Explicit mode with no entails pair for (p, w).
        let m = b.build(&limits).unwrap();
        let report = validate_model(&m, &limits).unwrap();
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::Sc2 {
                world,
                agent,
                term,
                target,
            } => {
                assert_eq!(m.world_name(*world), "w");
                assert_eq!(agent, &AgentName::new("A"));
                assert_eq!(term, &Term::Formula(p()));
                assert_eq!(m.world_name(*target), "w");
            }
            v => panic!("expected SC2, got {v:?}"),
        }
        assert_eq!(report.render_sexpr(&m), "(violations (sc2 w A p w))");
        // Removing the witness edge clears the report.
        let mut b2 = ModelBuilder::new();
        b2.world("w").agent("A").atom("p");
        b2.sign("w", "A", p());
        let m2 = b2.build(&limits).unwrap();
        assert!(validate_model(&m2, &limits).unwrap().is_clean());
    }

    #[test]
    fn sc3_violation_reported() {
        let limits = Limits::default();
        let mut b = ModelBuilder::new();
        b.world("w0").world("w1").agent("A").agent("B").atom("p");
        b.mode(EntailsMode::Fixedpoint).entails_base_all();
        b.sign("w0", "B", Term::agent("A"));
        b.says_edge("w0", "A", "w1");
        let m = b.build(&limits).unwrap();
        let report = validate_model(&m, &limits).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(&report.violations[0], Violation::Sc3 { .. }));
        assert_eq!(report.render_sexpr(&m), "(violations (sc3 w0 A B A w1))");
    }

    #[test]
    fn sc1_violation_in_explicit_mode() {
        let limits = Limits::default();
        let mut b = ModelBuilder::new();
        b.world("w").agent("A").atom("p");
        b.entails(p(), "w"); // p declared a member but false at w
        let m = b.build(&limits).unwrap();
        let report = validate_model(&m, &limits).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(&report.violations[0], Violation::Sc1 { .. }));
    }

    #[test]
    fn entails_holds_modes() {
        let limits = Limits::default();
        let m = countermodel(&limits);
        // Fixedpoint: non-formula terms via the base (= all here).
        assert!(entails_holds(&m, &Term::agent("A"), WorldId(0), &limits).unwrap());
        // Formulas via the closure: p is a member exactly where true.
        let w0 = m.world_id("w0").unwrap();
        let w1 = m.world_id("w1").unwrap();
        assert!(!entails_holds(&m, &Term::Formula(p()), w0, &limits).unwrap());
        assert!(entails_holds(&m, &Term::Formula(p()), w1, &limits).unwrap());
        // A tautology is a member everywhere.
        let taut = Term::Formula(p().imp(p()));
        assert!(entails_holds(&m, &taut, w0, &limits).unwrap());
        assert!(entails_holds(&m, &taut, w1, &limits).unwrap());

        let mut b = ModelBuilder::new();
        b.world("w0").world("w1").agent("A").atom("p");
        b.entails(Term::op("c", vec![]), "w0").op("c", 0);
        let m = b.build(&limits).unwrap();
        let c = Term::op("c", vec![]);
        assert!(entails_holds(&m, &c, m.world_id("w0").unwrap(), &limits).unwrap());
        assert!(!entails_holds(&m, &c, m.world_id("w1").unwrap(), &limits).unwrap());
    }

    #[test]
    fn open_terms_rejected() {
        let limits = Limits::default();
        let m = countermodel(&limits);
        let open = Term::var("x");
        assert!(matches!(
            entails_holds(&m, &open, WorldId(0), &limits),
            Err(EvalError::OpenTerm(_))
        ));
    }

    #[test]
    fn extend_fixpoint_on_countermodel() {
        let limits = Limits::default();
        let m = countermodel(&limits);
        let w0 = m.world_id("w0").unwrap();
        let w1 = m.world_id("w1").unwrap();
        let closure = extend_fixpoint(&m, &[p()], &limits).unwrap();
        assert!(!closure.contains(&p(), w0));
        assert!(closure.contains(&p(), w1));
        let closure = extend_fixpoint(&m, &[p().imp(p())], &limits).unwrap();
        assert!(closure.contains(&p().imp(p()), w0));
        assert!(closure.contains(&p().imp(p()), w1));
        // Explicit-mode models refuse the construction.
        let mut b = ModelBuilder::new();
        b.world("w").agent("A").atom("p");
        let m = b.build(&limits).unwrap();
        assert!(matches!(
            extend_fixpoint(&m, &[p()], &limits),
            Err(EvalError::WrongMode)
        ));
    }

    #[test]
    fn fixpoint_rounds_grow_monotonically() {
        let limits = Limits::default();
        let m = countermodel(&limits);
        let q = Formula::entails(Formula::entails(p(), p()), p());
        let rounds = extend_fixpoint_rounds(&m, &[q], &limits).unwrap();
        assert!(rounds.len() >= 2);
        for pair in rounds.windows(2) {
            assert!(pair[0].is_subset(&pair[1]));
        }
    }

    #[test]
    fn builder_validation() {
        let limits = Limits::default();
        let mut b = ModelBuilder::new();
        b.world("w").world("w");
        assert!(matches!(
            b.build(&limits),
            Err(ModelError::DuplicateWorld(_))
        ));

        let mut b = ModelBuilder::new();
        b.world("w").agent("A").true_at("w", "p");
        assert!(matches!(b.build(&limits), Err(ModelError::UnknownAtom(_))));

        let mut b = ModelBuilder::new();
        b.world("w").atom("p").sign("w", "A", Formula::atom("p"));
        assert!(matches!(b.build(&limits), Err(ModelError::UnknownAgent(_))));

        let mut b = ModelBuilder::new();
        b.world("w").agent("A").atom("p");
        b.mode(EntailsMode::Fixedpoint).entails(p(), "w");
        assert!(matches!(
            b.build(&limits),
            Err(ModelError::FormulaInBase(_))
        ));

        let mut b = ModelBuilder::new();
        b.world("w").agent("A").entails_base_all();
        assert!(matches!(
            b.build(&limits),
            Err(ModelError::BaseAllInExplicitMode)
        ));

        let mut b = ModelBuilder::new();
        b.world("w").agent("A").sign("w", "A", Term::var("x"));
        assert!(matches!(b.build(&limits), Err(ModelError::OpenTerm(_))));

        let tight = Limits {
            max_worlds: 1,
            ..Limits::default()
        };
        let mut b = ModelBuilder::new();
        b.world("w0").world("w1").agent("A");
        assert!(matches!(
            b.build(&tight),
            Err(ModelError::TooManyWorlds { .. })
        ));
    }

    #[test]
    fn rel_equiv_k_examples() {
        let w = WorldId(0);
        let shallow = Term::Formula(p());
        let deep = Term::Formula(Formula::entails(Formula::entails(p(), p()), p()));
        assert_eq!(deep.entailment_depth(), 3);
        let universe: BTreeSet<Term> = [shallow.clone(), deep.clone()].into_iter().collect();
        let r: BTreeSet<(Term, WorldId)> =
            [(shallow.clone(), w), (deep.clone(), w)].into_iter().collect();
        let mut r_prime = r.clone();
        assert!(rel_equiv_k(&r, &r_prime, 3, &universe));
        r_prime.remove(&(deep.clone(), w));
        assert!(rel_equiv_k(&r, &r_prime, 2, &universe));
        assert!(!rel_equiv_k(&r, &r_prime, 3, &universe));
        // Depth 0 sees only non-formula terms.
        let mut r2 = r.clone();
        r2.remove(&(shallow.clone(), w));
        assert!(rel_equiv_k(&r, &r2, 0, &universe));
        assert!(!rel_equiv_k(&r, &r2, 1, &universe));
    }
}
