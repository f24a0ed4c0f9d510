//! The satisfaction relation.
//!
//! Evaluation is standard Kripke model checking plus three twists:
//!
//! * `entails` quantifies over the worlds where the term is a member of
//!   the entailment relation — in fixedpoint mode that membership is
//!   itself computed here, stratified on entailment depth so that a
//!   formula's membership only ever consults memberships of strictly
//!   shallower terms;
//! * `this` evaluates by unfolding: the bound variable is replaced by
//!   the whole formula and evaluation recurses (the recursion tree
//!   still has finite height — see [`formula_height`]);
//! * `mutual` uses reachability: truth at every world reachable by one
//!   or more says-edges labeled by group members, which on a finite
//!   model coincides with the infinite tower of iterated `saysk`.
//!
//! An [`Evaluator`] session holds the memberships and a memo table; the
//! free functions build one per call for one-shot use.

use std::collections::{BTreeMap, BTreeSet};

use dashmap::DashMap;
use thiserror::Error;

use crate::kripke::{EntailsMode, Model, WorldId};
use crate::limits::Limits;
use crate::syntax::{AgentSet, Formula, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("term is not closed: {0}")]
    OpenTerm(Term),
    #[error("unknown world {0}")]
    UnknownWorld(String),
    #[error("recursion limit {0} exceeded")]
    RecursionLimit(u32),
    #[error("operation requires a fixedpoint-mode model")]
    WrongMode,
    #[error("{0}")]
    Malformed(#[from] TermError),
    #[error("internal evaluator invariant broken: {0}")]
    Internal(&'static str),
}

/// An evaluation session against one model: computed entailment
/// memberships plus a judgment memo. Prepare the formulas you plan to
/// query, then evaluate; evaluation itself takes `&self` and may run
/// from several threads at once.
pub struct Evaluator<'m> {
    model: &'m Model,
    limits: Limits,
    /// Membership of each closure formula per world index (fixedpoint mode).
    member: BTreeMap<Formula, Vec<bool>>,
    /// Judgment memo, one map per world; insert-if-absent semantics.
    memo: Vec<DashMap<Formula, bool>>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m Model, limits: Limits) -> Self {
        Evaluator {
            model,
            limits,
            member: BTreeMap::new(),
            memo: (0..model.world_count()).map(|_| DashMap::new()).collect(),
        }
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    /// Computes entailment memberships for the closure of `queries`:
    /// the queries themselves plus every closed formula reachable as an
    /// entailment left-hand side, through `this` unfoldings,
    /// transitively. No-op in explicit mode.
    pub fn prepare(&mut self, queries: &[Formula], par: bool) -> Result<(), EvalError> {
        self.prepare_inner(queries, false, par)
    }

    /// As [`prepare`](Self::prepare), additionally pulling signed
    /// formula terms into the closure (used by the fixed-point
    /// extension, whose callers want those memberships reported too).
    pub fn prepare_with_signed(&mut self, queries: &[Formula], par: bool) -> Result<(), EvalError> {
        self.prepare_inner(queries, true, par)
    }

    fn prepare_inner(
        &mut self,
        queries: &[Formula],
        include_signed: bool,
        par: bool,
    ) -> Result<(), EvalError> {
        if self.model.mode() == EntailsMode::Explicit {
            return Ok(());
        }
        for q in queries {
            if !q.is_sentence() {
                return Err(EvalError::OpenTerm(Term::Formula(q.clone())));
            }
        }
        let closure = self.collect_closure(queries, include_signed)?;
        let fresh: Vec<Formula> = closure
            .into_iter()
            .filter(|f| !self.member.contains_key(f))
            .collect();
        if fresh.is_empty() {
            return Ok(());
        }
        let mut strata: BTreeMap<u32, Vec<Formula>> = BTreeMap::new();
        for f in fresh {
            strata.entry(f.entailment_depth()).or_default().push(f);
        }
        let worlds: Vec<WorldId> = self.model.worlds().collect();
        for (depth, formulas) in strata {
            let bound = depth - 1; // depth >= 1 for formulas
            let items: Vec<(Formula, WorldId)> = formulas
                .iter()
                .flat_map(|f| worlds.iter().map(move |&w| (f.clone(), w)))
                .collect();
            let results = {
                let this = &*self;
                let scratch: DashMap<(u32, Formula), bool> = DashMap::new();
                let runner = |(f, w): (Formula, WorldId)| {
                    this.eval_bounded(&f, w, bound, &scratch, this.limits.recursion_limit)
                };
                if par {
                    crate::exec::map(items, runner)
                } else {
                    crate::exec::map_seq(items, runner)
                }
            };
            let mut it = results.into_iter();
            for f in formulas {
                let mut vals = Vec::with_capacity(worlds.len());
                for _ in &worlds {
                    vals.push(it.next().expect("one result per (formula, world)")?);
                }
                self.member.insert(f, vals);
            }
        }
        Ok(())
    }

    /// The formulas whose memberships this session has computed.
    pub fn prepared_formulas(&self) -> Vec<Formula> {
        self.member.keys().cloned().collect()
    }

    /// Membership value for a prepared formula, if prepared.
    pub fn member_value(&self, f: &Formula, w: WorldId) -> Option<bool> {
        self.member.get(f).map(|vals| vals[w.index()])
    }

    fn collect_closure(
        &self,
        roots: &[Formula],
        include_signed: bool,
    ) -> Result<BTreeSet<Formula>, EvalError> {
        let mut seen: BTreeSet<Formula> = BTreeSet::new();
        let mut stack: Vec<Formula> = roots.to_vec();
        if include_signed {
            for (_, _, t) in self.model.sign_records() {
                if let Term::Formula(f) = t {
                    stack.push(f.clone());
                }
            }
        }
        while let Some(f) = stack.pop() {
            if seen.contains(&f) {
                continue;
            }
            seen.insert(f.clone());
            self.closure_walk(&f, include_signed, &mut stack)?;
        }
        Ok(seen)
    }

    fn closure_walk(
        &self,
        f: &Formula,
        include_signed: bool,
        out: &mut Vec<Formula>,
    ) -> Result<(), EvalError> {
        match f {
            Formula::Atom(_) => Ok(()),
            Formula::Not(a)
            | Formula::Says(_, a)
            | Formula::SaysK(_, _, a)
            | Formula::Mutual(_, a) => self.closure_walk(a, include_signed, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                self.closure_walk(a, include_signed, out)?;
                self.closure_walk(b, include_signed, out)
            }
            Formula::Entails(t, a) => {
                if let Term::Formula(inner) = t.as_ref() {
                    out.push(inner.clone());
                }
                self.closure_walk(a, include_signed, out)
            }
            Formula::Signs(_, t) => {
                if include_signed {
                    if let Term::Formula(inner) = t.as_ref() {
                        out.push(inner.clone());
                    }
                }
                Ok(())
            }
            Formula::This(..) => {
                let unfolded = f
                    .unfold_this()
                    .expect("This node unfolds")
                    .map_err(|_| EvalError::Internal("capture while unfolding a sentence"))?;
                out.push(unfolded);
                Ok(())
            }
        }
    }

    /// Entailment membership during stage evaluation: only terms of
    /// depth at most `bound` can be members.
    fn member_bounded(&self, t: &Term, w: WorldId, bound: u32) -> bool {
        match t {
            Term::Formula(f) => {
                f.entailment_depth() <= bound
                    && self.member.get(f).map_or(false, |vals| vals[w.index()])
            }
            _ => self.model.base_holds(t, w),
        }
    }

    /// Entailment membership for full evaluation.
    fn member_full(&self, t: &Term, w: WorldId) -> Result<bool, EvalError> {
        match (self.model.mode(), t) {
            (EntailsMode::Explicit, _) => Ok(self.model.declared_pair(t, w)),
            (EntailsMode::Fixedpoint, Term::Formula(f)) => self
                .member
                .get(f)
                .map(|vals| vals[w.index()])
                .ok_or(EvalError::Internal("membership queried before prepare")),
            (EntailsMode::Fixedpoint, _) => Ok(self.model.base_holds(t, w)),
        }
    }

    /// Stage evaluation: like full evaluation, except entailment
    /// membership is cut off at `bound`.
    fn eval_bounded(
        &self,
        f: &Formula,
        w: WorldId,
        bound: u32,
        scratch: &DashMap<(u32, Formula), bool>,
        depth: u32,
    ) -> Result<bool, EvalError> {
        if depth == 0 {
            return Err(EvalError::RecursionLimit(self.limits.recursion_limit));
        }
        let key = (w.0, f.clone());
        if let Some(v) = scratch.get(&key) {
            return Ok(*v);
        }
        let value = match f {
            Formula::Atom(p) => self.model.atom_true_at(w, p),
            Formula::Not(a) => !self.eval_bounded(a, w, bound, scratch, depth - 1)?,
            Formula::And(a, b) => {
                self.eval_bounded(a, w, bound, scratch, depth - 1)?
                    && self.eval_bounded(b, w, bound, scratch, depth - 1)?
            }
            Formula::Or(a, b) => {
                self.eval_bounded(a, w, bound, scratch, depth - 1)?
                    || self.eval_bounded(b, w, bound, scratch, depth - 1)?
            }
            Formula::Imp(a, b) => {
                !self.eval_bounded(a, w, bound, scratch, depth - 1)?
                    || self.eval_bounded(b, w, bound, scratch, depth - 1)?
            }
            Formula::Iff(a, b) => {
                self.eval_bounded(a, w, bound, scratch, depth - 1)?
                    == self.eval_bounded(b, w, bound, scratch, depth - 1)?
            }
            Formula::Signs(agent, t) => self.model.has_sign(w, agent, t),
            Formula::Entails(t, body) => {
                let mut ok = true;
                for w2 in self.model.worlds() {
                    if self.member_bounded(t, w2, bound)
                        && !self.eval_bounded(body, w2, bound, scratch, depth - 1)?
                    {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::Says(agent, body) => {
                let mut ok = true;
                for w2 in self.model.says_successors(w, agent) {
                    if !self.eval_bounded(body, w2, bound, scratch, depth - 1)? {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::SaysK(group, k, body) => {
                let frontier = self.frontier_k(w, group, *k)?;
                let mut ok = true;
                for w2 in frontier {
                    if !self.eval_bounded(body, w2, bound, scratch, depth - 1)? {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::Mutual(group, body) => {
                let mut ok = true;
                for w2 in reach_plus(self.model, group, w) {
                    if !self.eval_bounded(body, w2, bound, scratch, depth - 1)? {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::This(..) => {
                let unfolded = f
                    .unfold_this()
                    .expect("This node unfolds")
                    .map_err(|_| EvalError::Internal("capture while unfolding a sentence"))?;
                self.eval_bounded(&unfolded, w, bound, scratch, depth - 1)?
            }
        };
        scratch.insert(key, value);
        Ok(value)
    }

    /// Full evaluation of a prepared sentence. `&self`: safe to call
    /// concurrently.
    pub fn eval(&self, w: WorldId, f: &Formula) -> Result<bool, EvalError> {
        if !self.model.contains_world(w) {
            return Err(EvalError::UnknownWorld(format!("world #{}", w.0)));
        }
        if !f.is_sentence() {
            return Err(EvalError::OpenTerm(Term::Formula(f.clone())));
        }
        self.eval_inner(f, w, self.limits.recursion_limit)
    }

    fn eval_inner(&self, f: &Formula, w: WorldId, depth: u32) -> Result<bool, EvalError> {
        if depth == 0 {
            return Err(EvalError::RecursionLimit(self.limits.recursion_limit));
        }
        if let Some(v) = self.memo[w.index()].get(f) {
            return Ok(*v);
        }
        let value = match f {
            Formula::Atom(p) => self.model.atom_true_at(w, p),
            Formula::Not(a) => !self.eval_inner(a, w, depth - 1)?,
            Formula::And(a, b) => {
                self.eval_inner(a, w, depth - 1)? && self.eval_inner(b, w, depth - 1)?
            }
            Formula::Or(a, b) => {
                self.eval_inner(a, w, depth - 1)? || self.eval_inner(b, w, depth - 1)?
            }
            Formula::Imp(a, b) => {
                !self.eval_inner(a, w, depth - 1)? || self.eval_inner(b, w, depth - 1)?
            }
            Formula::Iff(a, b) => {
                self.eval_inner(a, w, depth - 1)? == self.eval_inner(b, w, depth - 1)?
            }
            Formula::Signs(agent, t) => self.model.has_sign(w, agent, t),
            Formula::Entails(t, body) => {
                let mut ok = true;
                for w2 in self.model.worlds() {
                    if self.member_full(t, w2)? && !self.eval_inner(body, w2, depth - 1)? {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::Says(agent, body) => {
                let mut ok = true;
                for w2 in self.model.says_successors(w, agent) {
                    if !self.eval_inner(body, w2, depth - 1)? {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::SaysK(group, k, body) => {
                let frontier = self.frontier_k(w, group, *k)?;
                let mut ok = true;
                for w2 in frontier {
                    if !self.eval_inner(body, w2, depth - 1)? {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::Mutual(group, body) => {
                let mut ok = true;
                for w2 in reach_plus(self.model, group, w) {
                    if !self.eval_inner(body, w2, depth - 1)? {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            Formula::This(..) => {
                let unfolded = f
                    .unfold_this()
                    .expect("This node unfolds")
                    .map_err(|_| EvalError::Internal("capture while unfolding a sentence"))?;
                self.eval_inner(&unfolded, w, depth - 1)?
            }
        };
        self.memo[w.index()].insert(f.clone(), value);
        Ok(value)
    }

    /// The set of worlds at the far end of exactly-`k`-step paths from
    /// `w` along edges labeled by members of `group`. Detects frontier
    /// cycles so large `k` stays cheap.
    fn frontier_k(&self, w: WorldId, group: &AgentSet, k: u32) -> Result<BTreeSet<WorldId>, EvalError> {
        if k == 0 {
            return Err(EvalError::Malformed(TermError::ZeroIteration));
        }
        let step = |frontier: &BTreeSet<WorldId>| {
            let mut next = BTreeSet::new();
            for &u in frontier {
                for agent in group.iter() {
                    next.extend(self.model.says_successors(u, agent));
                }
            }
            next
        };
        let mut frontier: BTreeSet<WorldId> = BTreeSet::from([w]);
        let mut seen: BTreeMap<BTreeSet<WorldId>, u32> = BTreeMap::new();
        let mut i: u32 = 0;
        while i < k {
            if let Some(&j) = seen.get(&frontier) {
                let period = i - j;
                let remaining = (k - i) % period;
                for _ in 0..remaining {
                    frontier = step(&frontier);
                }
                return Ok(frontier);
            }
            if i > self.limits.recursion_limit {
                return Err(EvalError::RecursionLimit(self.limits.recursion_limit));
            }
            seen.insert(frontier.clone(), i);
            frontier = step(&frontier);
            i += 1;
        }
        Ok(frontier)
    }

    /// Evaluation with a full trace and no memoization (unless
    /// `use_memo`, in which case memo hits become childless nodes
    /// flagged `cache_hit`).
    pub fn eval_traced(
        &self,
        w: WorldId,
        f: &Formula,
        use_memo: bool,
    ) -> Result<EvalTrace, EvalError> {
        if !self.model.contains_world(w) {
            return Err(EvalError::UnknownWorld(format!("world #{}", w.0)));
        }
        if !f.is_sentence() {
            return Err(EvalError::OpenTerm(Term::Formula(f.clone())));
        }
        self.trace_inner(f, w, use_memo, self.limits.recursion_limit)
    }

    fn trace_inner(
        &self,
        f: &Formula,
        w: WorldId,
        use_memo: bool,
        depth: u32,
    ) -> Result<EvalTrace, EvalError> {
        if depth == 0 {
            return Err(EvalError::RecursionLimit(self.limits.recursion_limit));
        }
        if use_memo {
            if let Some(v) = self.memo[w.index()].get(f) {
                return Ok(EvalTrace {
                    world: w,
                    formula: f.clone(),
                    value: *v,
                    cache_hit: true,
                    children: Vec::new(),
                    height: formula_height(f),
                });
            }
        }
        let mut children: Vec<EvalTrace> = Vec::new();
        let rec = |this: &Self, sub: &Formula, at: WorldId, children: &mut Vec<EvalTrace>| {
            let t = this.trace_inner(sub, at, use_memo, depth - 1)?;
            let v = t.value;
            children.push(t);
            Ok::<bool, EvalError>(v)
        };
        let value = match f {
            Formula::Atom(p) => self.model.atom_true_at(w, p),
            Formula::Not(a) => !rec(self, a, w, &mut children)?,
            Formula::And(a, b) => {
                let va = rec(self, a, w, &mut children)?;
                let vb = rec(self, b, w, &mut children)?;
                va && vb
            }
            Formula::Or(a, b) => {
                let va = rec(self, a, w, &mut children)?;
                let vb = rec(self, b, w, &mut children)?;
                va || vb
            }
            Formula::Imp(a, b) => {
                let va = rec(self, a, w, &mut children)?;
                let vb = rec(self, b, w, &mut children)?;
                !va || vb
            }
            Formula::Iff(a, b) => {
                let va = rec(self, a, w, &mut children)?;
                let vb = rec(self, b, w, &mut children)?;
                va == vb
            }
            Formula::Signs(agent, t) => self.model.has_sign(w, agent, t),
            Formula::Entails(t, body) => {
                let mut ok = true;
                for w2 in self.model.worlds() {
                    if self.member_full(t, w2)? {
                        ok &= rec(self, body, w2, &mut children)?;
                    }
                }
                ok
            }
            Formula::Says(agent, body) => {
                let mut ok = true;
                for w2 in self.model.says_successors(w, agent) {
                    ok &= rec(self, body, w2, &mut children)?;
                }
                ok
            }
            Formula::SaysK(group, k, body) => {
                let mut ok = true;
                for w2 in self.frontier_k(w, group, *k)? {
                    ok &= rec(self, body, w2, &mut children)?;
                }
                ok
            }
            Formula::Mutual(group, body) => {
                let mut ok = true;
                for w2 in reach_plus(self.model, group, w) {
                    ok &= rec(self, body, w2, &mut children)?;
                }
                ok
            }
            Formula::This(..) => {
                let unfolded = f
                    .unfold_this()
                    .expect("This node unfolds")
                    .map_err(|_| EvalError::Internal("capture while unfolding a sentence"))?;
                rec(self, &unfolded, w, &mut children)?
            }
        };
        Ok(EvalTrace {
            world: w,
            formula: f.clone(),
            value,
            cache_hit: false,
            children,
            height: formula_height(f),
        })
    }
}

/// One judgment of a trace: the formula's value at a world, the
/// sub-judgments actually evaluated, and the recursion-tree height.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EvalTrace {
    pub world: WorldId,
    pub formula: Formula,
    pub value: bool,
    pub cache_hit: bool,
    pub children: Vec<EvalTrace>,
    pub height: u32,
}

impl EvalTrace {
    /// `(judgment w <formula> <bool> (children …))`, nested.
    pub fn render_sexpr(&self, m: &Model) -> String {
        let mut out = String::new();
        self.render_into(m, &mut out);
        out
    }

    fn render_into(&self, m: &Model, out: &mut String) {
        out.push_str(&format!(
            "(judgment {} {} {} (children",
            m.world_name(self.world),
            self.formula,
            self.value
        ));
        for c in &self.children {
            out.push(' ');
            c.render_into(m, out);
        }
        out.push_str("))");
    }
}

/// Height of the evaluation recursion tree for a formula. The height
/// depends only on the formula — quantifier nodes (`entails`, `says`,
/// `saysk`, `mutual`) count one step over their body whether or not any
/// successor world exists, and `this` counts one step over its
/// unfolding, whose skeleton is its body's.
pub fn formula_height(f: &Formula) -> u32 {
    match f {
        Formula::Atom(_) | Formula::Signs(..) => 0,
        Formula::Not(a)
        | Formula::Entails(_, a)
        | Formula::Says(_, a)
        | Formula::SaysK(_, _, a)
        | Formula::Mutual(_, a)
        | Formula::This(_, a) => 1 + formula_height(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
            1 + formula_height(a).max(formula_height(b))
        }
    }
}

/// Worlds reachable from `w` by one or more says-edges labeled by
/// members of `group`.
pub fn reach_plus(m: &Model, group: &AgentSet, w: WorldId) -> BTreeSet<WorldId> {
    // The start world is not reachable by zero steps; it joins the set
    // only if some edge loops back to it.
    let mut reached: BTreeSet<WorldId> = BTreeSet::new();
    let mut frontier: Vec<WorldId> = group
        .iter()
        .flat_map(|agent| m.says_successors(w, agent))
        .collect();
    while let Some(u) = frontier.pop() {
        if reached.insert(u) {
            for agent in group.iter() {
                frontier.extend(m.says_successors(u, agent));
            }
        }
    }
    reached
}

/// One-shot evaluation of a sentence.
pub fn eval(m: &Model, w: WorldId, f: &Formula, limits: &Limits) -> Result<bool, EvalError> {
    let mut ev = Evaluator::new(m, limits.clone());
    ev.prepare(std::slice::from_ref(f), false)?;
    ev.eval(w, f)
}

/// Batch evaluation sharing one session; parallel when the `parallel`
/// feature is on.
pub fn eval_batch(
    m: &Model,
    queries: &[(WorldId, Formula)],
    limits: &Limits,
) -> Vec<Result<bool, EvalError>> {
    eval_batch_impl(m, queries, limits, true)
}

/// Sequential variant of [`eval_batch`].
pub fn eval_batch_seq(
    m: &Model,
    queries: &[(WorldId, Formula)],
    limits: &Limits,
) -> Vec<Result<bool, EvalError>> {
    eval_batch_impl(m, queries, limits, false)
}

fn eval_batch_impl(
    m: &Model,
    queries: &[(WorldId, Formula)],
    limits: &Limits,
    par: bool,
) -> Vec<Result<bool, EvalError>> {
    let mut ev = Evaluator::new(m, limits.clone());
    let sentences: Vec<Formula> = queries
        .iter()
        .filter(|(_, f)| f.is_sentence())
        .map(|(_, f)| f.clone())
        .collect();
    if let Err(e) = ev.prepare_inner(&sentences, false, par) {
        return queries.iter().map(|_| Err(e.clone())).collect();
    }
    let items: Vec<(WorldId, Formula)> = queries.to_vec();
    let runner = |(w, f): (WorldId, Formula)| ev.eval(w, &f);
    if par {
        crate::exec::map(items, runner)
    } else {
        crate::exec::map_seq(items, runner)
    }
}

/// `k`-fold iterated group assertion at `w` (exactly-`k` paths).
pub fn eval_says_k(
    m: &Model,
    w: WorldId,
    group: &AgentSet,
    k: u32,
    f: &Formula,
    limits: &Limits,
) -> Result<bool, EvalError> {
    eval(m, w, &Formula::says_k(group.clone(), k, f.clone()), limits)
}

/// Common assent of `group` to `f` at `w` (reachability semantics).
pub fn eval_mutual(
    m: &Model,
    w: WorldId,
    group: &AgentSet,
    f: &Formula,
    limits: &Limits,
) -> Result<bool, EvalError> {
    eval(m, w, &Formula::mutual(group.clone(), f.clone()), limits)
}

/// Height of the evaluation recursion tree, via an untraced-memo run;
/// equals [`formula_height`] for every model and world.
pub fn tree_height(m: &Model, w: WorldId, f: &Formula, limits: &Limits) -> Result<u32, EvalError> {
    let mut ev = Evaluator::new(m, limits.clone());
    ev.prepare(std::slice::from_ref(f), false)?;
    Ok(ev.eval_traced(w, f, false)?.height)
}
