//! Seeded random generation of models, terms, formulas, and axiom
//! instances for property tests and soundness sweeps.
//!
//! Everything is driven by a [`Gen`] wrapping a ChaCha8 stream, so a
//! seed pins the entire output: the same seed always yields the same
//! models and formulas, which keeps failures reproducible and lets
//! sweeps fan out across threads (one derived lane per work item).
//!
//! Generated models are repaired until constraint-clean: signing
//! records are propagated along says-edges, base entailment pairs are
//! added where a signed non-formula term must hold, and signed formula
//! terms that cannot be made to hold are dropped. The result always
//! passes validation, which the soundness sweep re-checks anyway.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::AxiomId;
use crate::kripke::{validate_model_seq, EntailsMode, Model, ModelBuilder, Violation};
use crate::limits::Limits;
use crate::syntax::{AgentName, AgentSet, AtomName, Formula, OpName, Term};

const AGENT_POOL: [&str; 4] = ["A", "B", "C", "D"];
const ATOM_POOL: [&str; 4] = ["p", "q", "r", "s"];
const OP_POOL: [(&str, usize); 3] = [("nonce", 0), ("call", 1), ("pair", 2)];

/// Shape knobs for random models.
#[derive(Clone, Debug)]
pub struct GenOptions {
    /// World count is drawn from `1..=max_worlds`.
    pub max_worlds: usize,
    /// Agent count is drawn from `1..=max_agents` (pool capped at 4).
    pub max_agents: usize,
    /// Atoms available to the model and its formulas (pool capped at 4).
    pub atom_count: usize,
    /// Operators declared (pool capped at 3: arities 0, 1, 2).
    pub op_count: usize,
    /// Probability of each possible says-edge.
    pub edge_prob: f64,
    /// Probability of each atom being true at each world.
    pub true_prob: f64,
    /// Signing records attempted before repair.
    pub sign_attempts: usize,
    /// Non-formula base entailment pairs attempted.
    pub base_attempts: usize,
    pub mode: EntailsMode,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_worlds: 4,
            max_agents: 3,
            atom_count: 3,
            op_count: 2,
            edge_prob: 0.35,
            true_prob: 0.5,
            sign_attempts: 3,
            base_attempts: 2,
            mode: EntailsMode::Fixedpoint,
        }
    }
}

/// A deterministic source of random artifacts.
pub struct Gen {
    rng: ChaCha8Rng,
    fresh: u32,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fresh: 0,
        }
    }

    /// An independent stream for work item `lane` of a sweep rooted at
    /// `seed`; lanes can run in parallel without sharing state.
    pub fn lane(seed: u64, lane: u64) -> Self {
        Gen::new(seed ^ lane.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn fresh_var(&mut self) -> String {
        let n = self.fresh;
        self.fresh += 1;
        format!("x{n}")
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    /// A random model satisfying every model constraint, repaired by
    /// construction and re-validated before being returned.
    pub fn model(&mut self, opts: &GenOptions, limits: &Limits) -> Model {
        assert!(opts.atom_count >= 1, "models need at least one atom");
        let nw = self.rng.gen_range(1..=opts.max_worlds.max(1));
        let na = self.rng.gen_range(1..=opts.max_agents.clamp(1, AGENT_POOL.len()));
        let worlds: Vec<String> = (0..nw).map(|i| format!("w{i}")).collect();
        let agents: Vec<AgentName> = AGENT_POOL[..na].iter().copied().map(AgentName::new).collect();
        let atoms: Vec<AtomName> = ATOM_POOL[..opts.atom_count.min(ATOM_POOL.len())]
            .iter()
            .copied()
            .map(AtomName::new)
            .collect();
        let ops: Vec<(OpName, usize)> = OP_POOL[..opts.op_count.min(OP_POOL.len())]
            .iter()
            .map(|(n, a)| (OpName::new(*n), *a))
            .collect();

        let mut trues: Vec<(usize, usize)> = Vec::new();
        for w in 0..nw {
            for a in 0..atoms.len() {
                if self.rng.gen_bool(opts.true_prob) {
                    trues.push((w, a));
                }
            }
        }
        let mut edges: Vec<(usize, usize, usize)> = Vec::new();
        for from in 0..nw {
            for a in 0..na {
                for to in 0..nw {
                    if self.rng.gen_bool(opts.edge_prob) {
                        edges.push((from, a, to));
                    }
                }
            }
        }

        // Provisional scaffold so sign terms and formulas can draw on the
        // model's vocabulary before repair.
        let scaffold = build_model(
            &worlds, &agents, &atoms, &ops, &trues, &edges, &[], &[], opts.mode, limits,
        );
        let mut signs: Vec<(usize, AgentName, Term)> = Vec::new();
        for _ in 0..opts.sign_attempts {
            let w = self.rng.gen_range(0..nw);
            let a = self.pick(&agents).clone();
            let t = self.ground_term(&scaffold, 2, 2);
            if !signs.iter().any(|(sw, sa, st)| (*sw, sa, st) == (w, &a, &t)) {
                signs.push((w, a, t));
            }
        }
        let mut base: Vec<(Term, usize)> = Vec::new();
        for _ in 0..opts.base_attempts {
            let t = self.ground_record_term(&scaffold, 1);
            let w = self.rng.gen_range(0..nw);
            if !base.contains(&(t.clone(), w)) {
                base.push((t, w));
            }
        }

        // Repair loop: propagate records (SC3), ground non-formula signed
        // terms (SC2), and drop signed formulas that fail to hold (SC2).
        // A dropped (signer, term) pair is banned outright — otherwise a
        // propagated copy on a cycle could re-seed it and the loop would
        // ping-pong. Bans and base pairs grow monotonically, so this
        // terminates.
        let mut banned: Vec<(AgentName, Term)> = Vec::new();
        loop {
            let m = build_model(
                &worlds, &agents, &atoms, &ops, &trues, &edges, &signs, &base, opts.mode, limits,
            );
            let report = validate_model_seq(&m, limits).expect("generated model evaluates");
            if report.is_clean() {
                return m;
            }
            for v in report.violations {
                match v {
                    Violation::Sc3 {
                        signer,
                        term,
                        target,
                        ..
                    } => {
                        let t = target.index();
                        let is_banned = banned.iter().any(|(a, s)| (a, s) == (&signer, &term));
                        if !is_banned
                            && !signs.iter().any(|(w, a, s)| (*w, a, s) == (t, &signer, &term))
                        {
                            signs.push((t, signer, term));
                        }
                    }
                    Violation::Sc2 {
                        agent,
                        term,
                        target,
                        ..
                    } => {
                        if term.is_formula() {
                            signs.retain(|(_, a, s)| (a, s) != (&agent, &term));
                            if !banned.contains(&(agent.clone(), term.clone())) {
                                banned.push((agent, term));
                            }
                        } else if !base.contains(&(term.clone(), target.index())) {
                            base.push((term, target.index()));
                        }
                    }
                    Violation::Sc1 { term, world } => {
                        base.retain(|(t, w)| (t, *w) != (&term, world.index()));
                        signs.retain(|(_, _, s)| s != &term);
                        for a in &agents {
                            if !banned.contains(&(a.clone(), term.clone())) {
                                banned.push((a.clone(), term.clone()));
                            }
                        }
                    }
                }
            }
        }
    }

    fn agent_of(&mut self, m: &Model) -> AgentName {
        self.pick(m.agents()).clone()
    }

    fn group_of(&mut self, m: &Model) -> AgentSet {
        let n = self.rng.gen_range(1..=m.agents().len());
        AgentSet::new(m.agents()[..n].to_vec()).expect("prefix of a duplicate-free list")
    }

    fn atom_of(&mut self, m: &Model) -> Formula {
        Formula::atom(self.pick(m.atoms()).as_str())
    }

    /// A closed term over the model's vocabulary. Formulas inside it
    /// stay within entailment depth `max_d`.
    pub fn ground_term(&mut self, m: &Model, size: usize, max_d: u32) -> Term {
        let roll = self.rng.gen_range(0..10);
        if size == 0 || roll < 3 {
            return Term::agent(self.pick(m.agents()).as_str());
        }
        if roll < 6 && !m.ops().is_empty() {
            return self.ground_op(m, size, max_d);
        }
        Term::Formula(self.sentence_for(m, size - 1, max_d))
    }

    /// A closed non-formula term (an agent or operator application with
    /// non-formula leaves), usable as a base entailment record.
    pub fn ground_record_term(&mut self, m: &Model, size: usize) -> Term {
        if size == 0 || m.ops().is_empty() || self.rng.gen_bool(0.4) {
            return Term::agent(self.pick(m.agents()).as_str());
        }
        let decls: Vec<(OpName, usize)> = m
            .ops()
            .iter()
            .map(|(n, a)| (n.clone(), a))
            .collect();
        let (name, arity) = self.pick(&decls).clone();
        let args = (0..arity)
            .map(|_| self.ground_record_term(m, size - 1))
            .collect();
        Term::op(name.as_str(), args)
    }

    fn ground_op(&mut self, m: &Model, size: usize, max_d: u32) -> Term {
        let decls: Vec<(OpName, usize)> = m
            .ops()
            .iter()
            .map(|(n, a)| (n.clone(), a))
            .collect();
        let (name, arity) = self.pick(&decls).clone();
        let args = (0..arity)
            .map(|_| self.ground_term(m, size.saturating_sub(1), max_d))
            .collect();
        Term::op(name.as_str(), args)
    }

    /// A closed formula over the model's vocabulary with entailment
    /// depth at most `max_d` (at least 1). Self-reference binders only
    /// place their variable in signing slots, which keeps the depth
    /// budget exact under unfolding.
    pub fn sentence_for(&mut self, m: &Model, size: usize, max_d: u32) -> Formula {
        assert!(max_d >= 1);
        if size == 0 {
            return self.atom_of(m);
        }
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=24 => self.atom_of(m),
            25..=34 => self.sentence_for(m, size - 1, max_d).not(),
            35..=44 => {
                let a = self.sentence_for(m, size - 1, max_d);
                a.and(self.sentence_for(m, size - 1, max_d))
            }
            45..=49 => {
                let a = self.sentence_for(m, size - 1, max_d);
                a.or(self.sentence_for(m, size - 1, max_d))
            }
            50..=54 => {
                let a = self.sentence_for(m, size - 1, max_d);
                a.imp(self.sentence_for(m, size - 1, max_d))
            }
            55..=59 => {
                let a = self.sentence_for(m, size - 1, max_d);
                a.iff(self.sentence_for(m, size - 1, max_d))
            }
            60..=69 => {
                let a = self.agent_of(m);
                Formula::says(a, self.sentence_for(m, size - 1, max_d))
            }
            70..=74 => {
                let g = self.group_of(m);
                let k = self.rng.gen_range(1..=3);
                Formula::says_k(g, k, self.sentence_for(m, size - 1, max_d))
            }
            75..=79 => {
                let g = self.group_of(m);
                Formula::mutual(g, self.sentence_for(m, size - 1, max_d))
            }
            80..=87 => {
                let a = self.agent_of(m);
                Formula::signs(a, self.ground_term(m, size - 1, max_d))
            }
            88..=93 if max_d >= 2 => {
                let t = self.ground_term(m, size - 1, max_d - 1);
                Formula::entails(t, self.sentence_for(m, size - 1, max_d - 1))
            }
            _ => self.contract(m, size, max_d),
        }
    }

    /// `this ?x (imp (and (sign A ?x) …) φ)` — a self-referential
    /// contract whose bound variable appears only in signing slots.
    pub fn contract(&mut self, m: &Model, size: usize, max_d: u32) -> Formula {
        let x = self.fresh_var();
        let signers = self.rng.gen_range(1..=m.agents().len().min(2));
        let mut premise = Formula::signs(self.agent_of(m), Term::var(x.as_str()));
        for _ in 1..signers {
            premise = premise.and(Formula::signs(self.agent_of(m), Term::var(x.as_str())));
        }
        let body = premise.imp(self.sentence_for(m, size.saturating_sub(1), max_d));
        Formula::this(x, body)
    }

    /// A sentence whose `this`-binders nest exactly `levels` deep.
    pub fn deep_this(&mut self, m: &Model, levels: u32) -> Formula {
        let mut f = self.atom_of(m);
        for _ in 0..levels {
            let x = self.fresh_var();
            f = Formula::this(
                x.as_str(),
                Formula::signs(self.agent_of(m), Term::var(x.as_str())).imp(f),
            );
        }
        f
    }

    /// A random instance of the given axiom schema over the model's
    /// vocabulary.
    pub fn axiom_instance(&mut self, ax: AxiomId, m: &Model) -> Formula {
        match ax {
            AxiomId::Ax1 => {
                let a = self.sentence_for(m, 1, 2);
                let b = self.sentence_for(m, 1, 2);
                let c = self.sentence_for(m, 1, 2);
                match self.rng.gen_range(0..7) {
                    0 => a.clone().imp(a),
                    1 => a.clone().imp(b.imp(a)),
                    2 => a.clone().and(b).imp(a),
                    3 => a.clone().not().not().imp(a),
                    4 => a.clone().or(a.not()),
                    5 => a.clone().iff(a),
                    _ => a
                        .clone()
                        .imp(b.clone())
                        .imp(b.imp(c.clone()).imp(a.imp(c))),
                }
            }
            AxiomId::Ax2 => {
                let f = self.sentence_for(m, 2, 2);
                Formula::entails(f.clone(), f)
            }
            AxiomId::Ax3 => {
                let t = self.ground_term(m, 2, 2);
                let a = self.sentence_for(m, 1, 2);
                let b = self.sentence_for(m, 1, 2);
                Formula::entails(t.clone(), a.clone().imp(b.clone()))
                    .imp(Formula::entails(t.clone(), a).imp(Formula::entails(t, b)))
            }
            AxiomId::Ax4 => {
                let agent = self.agent_of(m);
                let t = self.ground_term(m, 2, 2);
                let f = self.sentence_for(m, 1, 2);
                Formula::signs(agent.clone(), t.clone())
                    .and(Formula::entails(t, f.clone()))
                    .imp(Formula::says(agent, f))
            }
            AxiomId::Ax5 => {
                let agent = self.agent_of(m);
                let a = self.sentence_for(m, 1, 2);
                let b = self.sentence_for(m, 1, 2);
                Formula::says(agent.clone(), a.clone().imp(b.clone()))
                    .imp(Formula::says(agent.clone(), a).imp(Formula::says(agent, b)))
            }
            AxiomId::Ax6 => {
                let speaker = self.agent_of(m);
                let signer = self.agent_of(m);
                let t = self.ground_term(m, 2, 2);
                let record = Formula::signs(signer, t);
                record.clone().imp(Formula::says(speaker, record))
            }
            AxiomId::Ax7 => {
                let speaker = self.agent_of(m);
                let t = self.ground_term(m, 2, 2);
                let f = self.sentence_for(m, 1, 2);
                let ent = Formula::entails(t, f);
                ent.clone().imp(Formula::says(speaker, ent))
            }
            AxiomId::Ax8 => {
                let c = self.contract(m, 2, 2);
                let unfolded = c
                    .unfold_this()
                    .expect("contract is a this-formula")
                    .expect("sign-slot substitution cannot capture");
                c.iff(unfolded)
            }
            AxiomId::Ax9 => {
                let g = self.group_of(m);
                let f = self.sentence_for(m, 1, 2);
                let mutual = Formula::mutual(g.clone(), f.clone());
                mutual
                    .clone()
                    .iff(Formula::group_says(&g, f.and(mutual)))
            }
        }
    }

    /// A term that may contain free variables in term slots, drawn from
    /// fixed pools; exercised by print/parse round-trips.
    pub fn raw_term(&mut self, size: usize) -> Term {
        let roll = self.rng.gen_range(0..10);
        if size == 0 {
            return if roll < 5 {
                Term::agent(*self.pick(&AGENT_POOL))
            } else {
                Term::var(format!("v{}", self.rng.gen_range(0..4)))
            };
        }
        match roll {
            0..=2 => Term::agent(*self.pick(&AGENT_POOL)),
            3..=4 => Term::var(format!("v{}", self.rng.gen_range(0..4))),
            5..=7 => {
                let (name, arity) = *self.pick(&OP_POOL);
                let args = (0..arity).map(|_| self.raw_term(size - 1)).collect();
                Term::op(name, args)
            }
            _ => Term::Formula(self.raw_formula(size - 1)),
        }
    }

    /// A formula over the fixed pools; variables appear only in term
    /// slots, so the result is always parseable.
    pub fn raw_formula(&mut self, size: usize) -> Formula {
        if size == 0 {
            return Formula::atom(*self.pick(&ATOM_POOL));
        }
        match self.rng.gen_range(0..12) {
            0..=2 => Formula::atom(*self.pick(&ATOM_POOL)),
            3 => self.raw_formula(size - 1).not(),
            4 => {
                let a = self.raw_formula(size - 1);
                a.and(self.raw_formula(size - 1))
            }
            5 => {
                let a = self.raw_formula(size - 1);
                a.imp(self.raw_formula(size - 1))
            }
            6 => {
                let a = self.raw_formula(size - 1);
                a.iff(self.raw_formula(size - 1))
            }
            7 => Formula::entails(self.raw_term(size - 1), self.raw_formula(size - 1)),
            8 => Formula::signs(*self.pick(&AGENT_POOL), self.raw_term(size - 1)),
            9 => Formula::says(*self.pick(&AGENT_POOL), self.raw_formula(size - 1)),
            10 => {
                let n = self.rng.gen_range(1..=2);
                let g = AgentSet::new(AGENT_POOL[..n].iter().copied().map(AgentName::new).collect())
                    .expect("pool prefix");
                if self.rng.gen_bool(0.5) {
                    Formula::says_k(g, self.rng.gen_range(1..=3), self.raw_formula(size - 1))
                } else {
                    Formula::mutual(g, self.raw_formula(size - 1))
                }
            }
            _ => {
                let x = format!("v{}", self.rng.gen_range(0..4));
                Formula::this(
                    x.as_str(),
                    Formula::signs(*self.pick(&AGENT_POOL), Term::var(x.as_str()))
                        .imp(self.raw_formula(size - 1)),
                )
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_model(
    worlds: &[String],
    agents: &[AgentName],
    atoms: &[AtomName],
    ops: &[(OpName, usize)],
    trues: &[(usize, usize)],
    edges: &[(usize, usize, usize)],
    signs: &[(usize, AgentName, Term)],
    base: &[(Term, usize)],
    mode: EntailsMode,
    limits: &Limits,
) -> Model {
    let mut b = ModelBuilder::new();
    for w in worlds {
        b.world(w.as_str());
    }
    for a in agents {
        b.agent(a.clone());
    }
    for a in atoms {
        b.atom(a.clone());
    }
    for (name, arity) in ops {
        b.op(name.as_str(), *arity);
    }
    for (w, a) in trues {
        b.true_at(worlds[*w].as_str(), atoms[*a].clone());
    }
    for (from, a, to) in edges {
        b.says_edge(worlds[*from].as_str(), agents[*a].clone(), worlds[*to].as_str());
    }
    for (w, a, t) in signs {
        b.sign(worlds[*w].as_str(), a.clone(), t.clone());
    }
    for (t, w) in base {
        b.entails(t.clone(), worlds[*w].as_str());
    }
    b.mode(mode);
    b.build(limits).expect("generated pieces fit the limits")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{eval, tree_height};
    use crate::surface::{parse_formula, parse_term, print_formula, print_term};

    #[test]
    fn generation_is_deterministic() {
        let limits = Limits::default();
        let opts = GenOptions::default();
        let m1 = Gen::new(7).model(&opts, &limits);
        let m2 = Gen::new(7).model(&opts, &limits);
        assert_eq!(m1, m2);
        let mut g1 = Gen::new(9);
        let mut g2 = Gen::new(9);
        for _ in 0..20 {
            assert_eq!(g1.sentence_for(&m1, 3, 3), g2.sentence_for(&m1, 3, 3));
        }
    }

    #[test]
    fn generated_models_are_clean() {
        let limits = Limits::default();
        let opts = GenOptions::default();
        for seed in 0..40 {
            let m = Gen::new(seed).model(&opts, &limits);
            assert!(m.world_count() >= 1 && m.world_count() <= 4);
            assert!(!m.agents().is_empty() && m.agents().len() <= 3);
            let report = validate_model_seq(&m, &limits).unwrap();
            assert!(report.is_clean(), "seed {seed}: {}", report.render_text(&m));
        }
    }

    #[test]
    fn sentences_are_closed_bounded_and_evaluable() {
        let limits = Limits::default();
        let mut g = Gen::new(11);
        let m = g.model(&GenOptions::default(), &limits);
        for i in 0..100 {
            let f = g.sentence_for(&m, 3, 3);
            assert!(f.is_sentence(), "iteration {i}: {f}");
            assert!(f.entailment_depth() <= 3, "iteration {i}: {f}");
            for w in m.worlds() {
                eval(&m, w, &f, &limits).expect("generated sentence evaluates");
            }
        }
    }

    #[test]
    fn axiom_instances_hold_on_clean_models() {
        let limits = Limits::default();
        let opts = GenOptions::default();
        for seed in 0..8 {
            let mut g = Gen::new(100 + seed);
            let m = g.model(&opts, &limits);
            for ax in AxiomId::ALL {
                for _ in 0..3 {
                    let inst = g.axiom_instance(ax, &m);
                    for w in m.worlds() {
                        let ok = eval(&m, w, &inst, &limits).unwrap_or_else(|e| {
                            panic!("seed {seed} {ax} at {}: {e}\n{inst}", m.world_name(w))
                        });
                        assert!(ok, "seed {seed}: {ax} instance false at {}: {inst}", m.world_name(w));
                    }
                }
            }
        }
    }

    #[test]
    fn deep_contracts_have_requested_depth() {
        let limits = Limits::default();
        let mut g = Gen::new(5);
        let m = g.model(&GenOptions::default(), &limits);
        let f = g.deep_this(&m, 8);
        assert_eq!(f.this_depth(), 8);
        let w = m.worlds().next().unwrap();
        eval(&m, w, &f, &limits).expect("deep contract evaluates");
        let h = tree_height(&m, w, &f, &limits).expect("trace builds");
        assert!(h >= 8);
        assert_eq!(parse_formula(&print_formula(&f)).unwrap(), f);
    }

    #[test]
    fn raw_artifacts_round_trip() {
        let mut g = Gen::new(23);
        for _ in 0..500 {
            let t = g.raw_term(3);
            assert_eq!(parse_term(&print_term(&t)).unwrap(), t, "{t}");
        }
        for _ in 0..200 {
            let f = g.raw_formula(3);
            assert_eq!(parse_formula(&print_formula(&f)).unwrap(), f, "{f}");
        }
    }
}
