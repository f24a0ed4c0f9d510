//! Hilbert-style proof checking.
//!
//! A proof is a goal, optional hypotheses, and numbered lines, each
//! carrying a formula and a justification: an axiom-schema citation, a
//! rule application referencing earlier lines, or a hypothesis
//! reference. The checker validates every line and reports either
//! acceptance or the first offending line with a reason.
//!
//! Matching discipline: formulas are compared after [`normalize`]
//! rewrites derived connectives away, so a proof may spell an
//! implication as `(imp a b)` or as `(not (and a (not b)))`
//! interchangeably. The contents of `sign` and the term side of
//! `entails` are records and always compare as written. The one
//! exception is the self-reference axiom, which is matched on the
//! unnormalized formula: its two sides share copies of the `this` term
//! inside record positions, and those copies must stay aligned with
//! the formula being unfolded.
//!
//! Necessitation-style rules only apply to theorems, so each line
//! tracks purity: a line is pure when no hypothesis flows into it.
//!
//! [`normalize`]: crate::syntax::Formula::normalize

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::limits::Limits;
use crate::syntax::{
    check_formula, check_term, is_closed, norm_eq, substitute_formula, AgentName, AgentSet,
    Formula, OpTable, Term,
};

/// The nine axiom schemas.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AxiomId {
    /// Instances of propositional tautologies.
    Ax1,
    /// Self-entailment: `φ ⊨ φ`.
    Ax2,
    /// Distribution of entailment over implication.
    Ax3,
    /// Signed and entailing yields saying: `(A signs t ∧ t ⊨ φ) → A says φ`.
    Ax4,
    /// Distribution of saying over implication.
    Ax5,
    /// Signing records are public: `(B signs t) → A says (B signs t)`.
    Ax6,
    /// Entailment facts are public: `(t ⊨ φ) → A says (t ⊨ φ)`.
    Ax7,
    /// Self-reference unfolding: `(this x. φ) ↔ φ[x ↦ this x. φ]`.
    Ax8,
    /// Fixed-point of common assent:
    /// `(mutual G φ) ↔ G says (φ ∧ mutual G φ)`.
    Ax9,
}

impl AxiomId {
    pub const ALL: [AxiomId; 9] = [
        AxiomId::Ax1,
        AxiomId::Ax2,
        AxiomId::Ax3,
        AxiomId::Ax4,
        AxiomId::Ax5,
        AxiomId::Ax6,
        AxiomId::Ax7,
        AxiomId::Ax8,
        AxiomId::Ax9,
    ];

    pub fn token(self) -> &'static str {
        match self {
            AxiomId::Ax1 => "ax1",
            AxiomId::Ax2 => "ax2",
            AxiomId::Ax3 => "ax3",
            AxiomId::Ax4 => "ax4",
            AxiomId::Ax5 => "ax5",
            AxiomId::Ax6 => "ax6",
            AxiomId::Ax7 => "ax7",
            AxiomId::Ax8 => "ax8",
            AxiomId::Ax9 => "ax9",
        }
    }

    pub fn from_token(s: &str) -> Option<AxiomId> {
        AxiomId::ALL.iter().copied().find(|ax| ax.token() == s)
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Why a line is claimed to hold.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Justification {
    /// Instance of an axiom schema.
    Axiom(AxiomId),
    /// Modus ponens: line `.1` proves the implication whose antecedent
    /// is line `.0`.
    Mp(usize, usize),
    /// From theorem `φ` at the line, conclude `t ⊨ φ`.
    NecEntails(usize, Term),
    /// From theorem `φ` at the line, conclude `A says φ`.
    NecSays(usize, AgentName),
    /// From theorem `φ` at the line, conclude `mutual G φ`.
    NecOmega(usize, AgentSet),
    /// From theorem `α → G says (α ∧ β)` at the line, conclude
    /// `α → mutual G β`.
    IndOmega(usize),
    /// The formula is one of the stated hypotheses.
    HypRef,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProofLine {
    pub index: usize,
    pub formula: Formula,
    pub just: Justification,
}

/// A parsed proof: goal, operator declarations for terms appearing in
/// the proof, hypotheses, and the numbered derivation.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ProofScript {
    pub goal: Option<Formula>,
    pub ops: OpTable,
    pub hyps: Vec<(usize, Formula)>,
    pub lines: Vec<ProofLine>,
}

impl ProofScript {
    pub fn goal(&self) -> &Formula {
        self.goal.as_ref().expect("proof script has a goal")
    }
}

/// Checker outcome: accepted, or rejected at a specific line.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    Accept,
    Reject { line: usize, reason: RejectReason },
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    /// `(verdict accept)` or `(verdict reject <line> <reason>)`.
    pub fn render_sexpr(&self) -> String {
        match self {
            Verdict::Accept => "(verdict accept)".to_string(),
            Verdict::Reject { line, reason } => {
                format!("(verdict reject {} {})", line, reason.token())
            }
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accept => f.write_str("accepted"),
            Verdict::Reject { line, reason } => {
                write!(f, "rejected at line {line}: {reason}")
            }
        }
    }
}

/// First failure the checker found. Line 0 stands for the preamble
/// (goal or an empty derivation).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RejectReason {
    /// A justification references a missing or not-yet-proved line.
    BadIndex,
    /// A formula has free variables.
    NotSentence,
    /// A term is ill-formed (unknown operator, arity, zero iteration).
    Malformed,
    /// The formula is not an instance of the cited schema.
    SchemaMismatch(AxiomId),
    /// The formula is not a tautology instance.
    NotTautology,
    /// Tautology checking would need more letters than the limit.
    LetterCap,
    /// The cited lines do not form a modus-ponens step.
    MpShape,
    /// A necessitation-style rule was applied to an impure line.
    NecNotPure,
    /// The conclusion does not match the necessitation pattern.
    NecShape,
    /// The premise/conclusion pair does not match the induction rule.
    IndShape,
    /// The formula is not among the hypotheses.
    HypMismatch,
    /// The final line does not prove the goal.
    GoalMismatch,
}

impl RejectReason {
    pub fn token(self) -> &'static str {
        match self {
            RejectReason::BadIndex => "bad-index",
            RejectReason::NotSentence => "not-sentence",
            RejectReason::Malformed => "malformed",
            RejectReason::SchemaMismatch(ax) => match ax {
                AxiomId::Ax1 => "schema-ax1",
                AxiomId::Ax2 => "schema-ax2",
                AxiomId::Ax3 => "schema-ax3",
                AxiomId::Ax4 => "schema-ax4",
                AxiomId::Ax5 => "schema-ax5",
                AxiomId::Ax6 => "schema-ax6",
                AxiomId::Ax7 => "schema-ax7",
                AxiomId::Ax8 => "schema-ax8",
                AxiomId::Ax9 => "schema-ax9",
            },
            RejectReason::NotTautology => "not-tautology",
            RejectReason::LetterCap => "letter-cap",
            RejectReason::MpShape => "mp-shape",
            RejectReason::NecNotPure => "nec-not-pure",
            RejectReason::NecShape => "nec-shape",
            RejectReason::IndShape => "ind-shape",
            RejectReason::HypMismatch => "hyp-mismatch",
            RejectReason::GoalMismatch => "goal-mismatch",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The normalized spelling of implication: `not (and a (not b))`.
fn imp_n(a: Formula, b: Formula) -> Formula {
    a.and(b.not()).not()
}

/// Destructures a normalized implication.
fn as_imp_n(f: &Formula) -> Option<(&Formula, &Formula)> {
    if let Formula::Not(x) = f {
        if let Formula::And(a, nb) = x.as_ref() {
            if let Formula::Not(b) = nb.as_ref() {
                return Some((a, b));
            }
        }
    }
    None
}

/// Destructures a normalized biconditional (two implications with
/// swapped sides) into `(left, right)`.
fn as_iff_n(f: &Formula) -> Option<(&Formula, &Formula)> {
    if let Formula::And(x, y) = f {
        let (a, b) = as_imp_n(x)?;
        let (b2, a2) = as_imp_n(y)?;
        if a == a2 && b == b2 {
            return Some((a, b));
        }
    }
    None
}

/// Raised when tautology checking hits the letter limit.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LetterCapExceeded {
    pub letters: usize,
    pub cap: u32,
}

/// Decides whether `f` is a substitution instance of a propositional
/// tautology: normalize, treat every maximal non-`not`/`and` subformula
/// as a propositional letter, and check the truth table. Distinct
/// letters beyond the configured cap abort with an error rather than
/// enumerating an oversized table.
pub fn is_tautology_instance(f: &Formula, limits: &Limits) -> Result<bool, LetterCapExceeded> {
    enum Skel {
        Letter(usize),
        Not(Box<Skel>),
        And(Box<Skel>, Box<Skel>),
    }
    fn build(
        f: &Formula,
        letters: &mut BTreeMap<Formula, usize>,
        cap: u32,
    ) -> Result<Skel, LetterCapExceeded> {
        match f {
            Formula::Not(a) => Ok(Skel::Not(Box::new(build(a, letters, cap)?))),
            Formula::And(a, b) => Ok(Skel::And(
                Box::new(build(a, letters, cap)?),
                Box::new(build(b, letters, cap)?),
            )),
            leaf => {
                let next = letters.len();
                let id = *letters.entry(leaf.clone()).or_insert(next);
                if letters.len() > cap as usize {
                    return Err(LetterCapExceeded {
                        letters: letters.len(),
                        cap,
                    });
                }
                Ok(Skel::Letter(id))
            }
        }
    }
    fn value(s: &Skel, bits: u64) -> bool {
        match s {
            Skel::Letter(i) => bits >> i & 1 == 1,
            Skel::Not(a) => !value(a, bits),
            Skel::And(a, b) => value(a, bits) && value(b, bits),
        }
    }
    let n = f.normalize();
    let mut letters = BTreeMap::new();
    let skel = build(&n, &mut letters, limits.taut_letters)?;
    let k = letters.len() as u32;
    Ok((0..1u64 << k).all(|bits| value(&skel, bits)))
}

/// Checks that `f` is an instance of the schema `ax`.
pub fn match_axiom(ax: AxiomId, f: &Formula, limits: &Limits) -> Result<(), RejectReason> {
    let mismatch = Err(RejectReason::SchemaMismatch(ax));
    match ax {
        AxiomId::Ax1 => match is_tautology_instance(f, limits) {
            Ok(true) => Ok(()),
            Ok(false) => Err(RejectReason::NotTautology),
            Err(_) => Err(RejectReason::LetterCap),
        },
        AxiomId::Ax2 => {
            let n = f.normalize();
            if let Formula::Entails(t, body) = &n {
                if let Term::Formula(inner) = t.as_ref() {
                    if norm_eq(inner, body) {
                        return Ok(());
                    }
                }
            }
            mismatch
        }
        AxiomId::Ax3 => {
            let n = f.normalize();
            let hit = (|| {
                let (a, rest) = as_imp_n(&n)?;
                let (b, c) = as_imp_n(rest)?;
                let Formula::Entails(t, pq) = a else {
                    return None;
                };
                let (p, q) = as_imp_n(pq)?;
                let Formula::Entails(t2, p2) = b else {
                    return None;
                };
                let Formula::Entails(t3, q2) = c else {
                    return None;
                };
                (t == t2 && t == t3 && p2.as_ref() == p && q2.as_ref() == q).then_some(())
            })();
            hit.map_or(mismatch, Ok)
        }
        AxiomId::Ax4 => {
            let n = f.normalize();
            let hit = (|| {
                let (ante, says) = as_imp_n(&n)?;
                let Formula::And(sig, ent) = ante else {
                    return None;
                };
                let Formula::Signs(agent, t) = sig.as_ref() else {
                    return None;
                };
                let Formula::Entails(t2, body) = ent.as_ref() else {
                    return None;
                };
                let Formula::Says(agent2, body2) = says else {
                    return None;
                };
                (t == t2 && agent == agent2 && body == body2).then_some(())
            })();
            hit.map_or(mismatch, Ok)
        }
        AxiomId::Ax5 => {
            let n = f.normalize();
            let hit = (|| {
                let (a, rest) = as_imp_n(&n)?;
                let (b, c) = as_imp_n(rest)?;
                let Formula::Says(ag, pq) = a else {
                    return None;
                };
                let (p, q) = as_imp_n(pq)?;
                let Formula::Says(ag2, p2) = b else {
                    return None;
                };
                let Formula::Says(ag3, q2) = c else {
                    return None;
                };
                (ag == ag2 && ag == ag3 && p2.as_ref() == p && q2.as_ref() == q).then_some(())
            })();
            hit.map_or(mismatch, Ok)
        }
        AxiomId::Ax6 => {
            let n = f.normalize();
            let hit = (|| {
                let (sig, says) = as_imp_n(&n)?;
                let Formula::Signs(signer, t) = sig else {
                    return None;
                };
                let Formula::Says(_, inner) = says else {
                    return None;
                };
                let Formula::Signs(signer2, t2) = inner.as_ref() else {
                    return None;
                };
                (signer == signer2 && t == t2).then_some(())
            })();
            hit.map_or(mismatch, Ok)
        }
        AxiomId::Ax7 => {
            let n = f.normalize();
            let hit = (|| {
                let (ent, says) = as_imp_n(&n)?;
                let Formula::Entails(t, body) = ent else {
                    return None;
                };
                let Formula::Says(_, inner) = says else {
                    return None;
                };
                let Formula::Entails(t2, body2) = inner.as_ref() else {
                    return None;
                };
                (t == t2 && body == body2).then_some(())
            })();
            hit.map_or(mismatch, Ok)
        }
        AxiomId::Ax8 => {
            // Matched without normalizing: the right side must be the
            // left side's unfolding, and the unfolding plants copies of
            // the `this` term into record positions exactly as written.
            if let Formula::Iff(l, r) = f {
                if let Formula::This(x, body) = l.as_ref() {
                    let this_term = Term::Formula((**l).clone());
                    if let Ok(unfolded) = substitute_formula(body, x, &this_term) {
                        if norm_eq(r, &unfolded) {
                            return Ok(());
                        }
                    }
                }
            }
            mismatch
        }
        AxiomId::Ax9 => {
            let n = f.normalize();
            let hit = (|| {
                let (l, r) = as_iff_n(&n)?;
                let Formula::Mutual(g, body) = l else {
                    return None;
                };
                let expect = Formula::group_says(g, body.as_ref().clone().and(l.clone()));
                (r == &expect).then_some(())
            })();
            hit.map_or(mismatch, Ok)
        }
    }
}

/// Validates a proof line by line. Returns the first failure, or
/// acceptance once the last line proves the goal.
pub fn check_proof(script: &ProofScript, limits: &Limits) -> Verdict {
    fn reject(line: usize, reason: RejectReason) -> Verdict {
        Verdict::Reject { line, reason }
    }
    struct Entry {
        norm: Formula,
        pure: bool,
    }

    let Some(goal) = script.goal.as_ref() else {
        return reject(0, RejectReason::GoalMismatch);
    };
    if check_formula(goal, &script.ops).is_err() {
        return reject(0, RejectReason::Malformed);
    }
    if !goal.is_sentence() {
        return reject(0, RejectReason::NotSentence);
    }

    let mut used_indices: BTreeSet<usize> = BTreeSet::new();
    let mut hyp_norms: Vec<Formula> = Vec::new();
    for (idx, f) in &script.hyps {
        if !used_indices.insert(*idx) {
            return reject(*idx, RejectReason::BadIndex);
        }
        if check_formula(f, &script.ops).is_err() {
            return reject(*idx, RejectReason::Malformed);
        }
        if !f.is_sentence() {
            return reject(*idx, RejectReason::NotSentence);
        }
        hyp_norms.push(f.normalize());
    }

    let mut entries: BTreeMap<usize, Entry> = BTreeMap::new();
    for line in &script.lines {
        let idx = line.index;
        if idx == 0 || !used_indices.insert(idx) {
            return reject(idx, RejectReason::BadIndex);
        }
        if check_formula(&line.formula, &script.ops).is_err() {
            return reject(idx, RejectReason::Malformed);
        }
        if !line.formula.is_sentence() {
            return reject(idx, RejectReason::NotSentence);
        }
        let norm = line.formula.normalize();
        // Justification references may only point at already-checked
        // lines, which are exactly the map's current entries.
        let pure = match &line.just {
            Justification::Axiom(ax) => {
                if let Err(reason) = match_axiom(*ax, &line.formula, limits) {
                    return reject(idx, reason);
                }
                true
            }
            Justification::HypRef => {
                if !hyp_norms.contains(&norm) {
                    return reject(idx, RejectReason::HypMismatch);
                }
                false
            }
            Justification::Mp(i, j) => {
                let (Some(ei), Some(ej)) = (entries.get(i), entries.get(j)) else {
                    return reject(idx, RejectReason::BadIndex);
                };
                let Some((ante, con)) = as_imp_n(&ej.norm) else {
                    return reject(idx, RejectReason::MpShape);
                };
                if ante != &ei.norm || con != &norm {
                    return reject(idx, RejectReason::MpShape);
                }
                ei.pure && ej.pure
            }
            Justification::NecEntails(i, t) => {
                let Some(ei) = entries.get(i) else {
                    return reject(idx, RejectReason::BadIndex);
                };
                if !ei.pure {
                    return reject(idx, RejectReason::NecNotPure);
                }
                if check_term(t, &script.ops).is_err() {
                    return reject(idx, RejectReason::Malformed);
                }
                if !is_closed(t) {
                    return reject(idx, RejectReason::NotSentence);
                }
                let expect = Formula::Entails(Box::new(t.clone()), Box::new(ei.norm.clone()));
                if norm != expect {
                    return reject(idx, RejectReason::NecShape);
                }
                true
            }
            Justification::NecSays(i, agent) => {
                let Some(ei) = entries.get(i) else {
                    return reject(idx, RejectReason::BadIndex);
                };
                if !ei.pure {
                    return reject(idx, RejectReason::NecNotPure);
                }
                let expect = Formula::says(agent.clone(), ei.norm.clone());
                if norm != expect {
                    return reject(idx, RejectReason::NecShape);
                }
                true
            }
            Justification::NecOmega(i, group) => {
                let Some(ei) = entries.get(i) else {
                    return reject(idx, RejectReason::BadIndex);
                };
                if !ei.pure {
                    return reject(idx, RejectReason::NecNotPure);
                }
                let expect = Formula::mutual(group.clone(), ei.norm.clone());
                if norm != expect {
                    return reject(idx, RejectReason::NecShape);
                }
                true
            }
            Justification::IndOmega(i) => {
                let Some(ei) = entries.get(i) else {
                    return reject(idx, RejectReason::BadIndex);
                };
                if !ei.pure {
                    return reject(idx, RejectReason::NecNotPure);
                }
                let Some((alpha, mu)) = as_imp_n(&norm) else {
                    return reject(idx, RejectReason::IndShape);
                };
                let Formula::Mutual(group, beta) = mu else {
                    return reject(idx, RejectReason::IndShape);
                };
                let says_both =
                    Formula::group_says(group, alpha.clone().and(beta.as_ref().clone()));
                let expect = imp_n(alpha.clone(), says_both);
                if ei.norm != expect {
                    return reject(idx, RejectReason::IndShape);
                }
                true
            }
        };
        entries.insert(idx, Entry { norm, pure });
    }

    match script.lines.last() {
        None => reject(0, RejectReason::GoalMismatch),
        Some(last) if norm_eq(&last.formula, goal) => Verdict::Accept,
        Some(last) => reject(last.index, RejectReason::GoalMismatch),
    }
}

/// Incremental construction of proof scripts. Raw methods append a
/// line with an explicit justification; derived helpers expand common
/// multi-step patterns (conjunction handling, implication chaining,
/// distribution under `says`) into primitive lines. Helpers panic on
/// shape misuse — they are proof-producing infrastructure, and
/// [`check_proof`] revalidates everything they emit.
#[derive(Default, Debug)]
pub struct ProofBuilder {
    ops: OpTable,
    hyps: Vec<(usize, Formula)>,
    lines: Vec<ProofLine>,
    next: usize,
}

impl ProofBuilder {
    pub fn new() -> Self {
        ProofBuilder {
            ops: OpTable::new(),
            hyps: Vec::new(),
            lines: Vec::new(),
            next: 1,
        }
    }

    pub fn declare_op(&mut self, name: impl Into<crate::syntax::OpName>, arity: usize) {
        self.ops
            .declare(name, arity)
            .expect("operator declarations are consistent");
    }

    /// The formula proved at `index`.
    pub fn formula_of(&self, index: usize) -> &Formula {
        &self
            .lines
            .iter()
            .find(|l| l.index == index)
            .expect("line exists")
            .formula
    }

    fn alloc(&mut self) -> usize {
        let n = self.next;
        self.next += 1;
        n
    }

    /// States a hypothesis (does not add a derivation line).
    pub fn hyp(&mut self, f: Formula) -> usize {
        let n = self.alloc();
        self.hyps.push((n, f));
        n
    }

    pub fn line(&mut self, f: Formula, just: Justification) -> usize {
        let n = self.alloc();
        self.lines.push(ProofLine {
            index: n,
            formula: f,
            just,
        });
        n
    }

    /// States a hypothesis and immediately cites it as a line.
    pub fn assume(&mut self, f: Formula) -> usize {
        self.hyp(f.clone());
        self.line(f, Justification::HypRef)
    }

    pub fn axiom(&mut self, ax: AxiomId, f: Formula) -> usize {
        self.line(f, Justification::Axiom(ax))
    }

    /// Cites a propositional tautology instance.
    pub fn taut(&mut self, f: Formula) -> usize {
        self.axiom(AxiomId::Ax1, f)
    }

    pub fn mp(&mut self, ant: usize, imp: usize, f: Formula) -> usize {
        self.line(f, Justification::Mp(ant, imp))
    }

    pub fn nec_entails(&mut self, premise: usize, t: Term) -> usize {
        let f = Formula::Entails(
            Box::new(t.clone()),
            Box::new(self.formula_of(premise).clone()),
        );
        self.line(f, Justification::NecEntails(premise, t))
    }

    pub fn nec_says(&mut self, premise: usize, agent: impl Into<AgentName>) -> usize {
        let agent = agent.into();
        let f = Formula::says(agent.clone(), self.formula_of(premise).clone());
        self.line(f, Justification::NecSays(premise, agent))
    }

    pub fn nec_omega(&mut self, premise: usize, group: AgentSet) -> usize {
        let f = Formula::mutual(group.clone(), self.formula_of(premise).clone());
        self.line(f, Justification::NecOmega(premise, group))
    }

    /// From a line proving `α → G says (α ∧ β)`, concludes
    /// `α → mutual G β`.
    pub fn ind_omega(&mut self, premise: usize, group: &AgentSet) -> usize {
        let prem = self.formula_of(premise).clone();
        let Formula::Imp(alpha, says_and) = prem else {
            panic!("induction premise must be an implication: {prem}");
        };
        let body = peel_group_says(&says_and, group)
            .unwrap_or_else(|| panic!("premise consequent must be `G says …`: {says_and}"));
        let Formula::And(a2, beta) = body else {
            panic!("said formula must be a conjunction: {body}");
        };
        assert!(
            norm_eq(&alpha, a2),
            "said conjunction must start with the antecedent"
        );
        let f = Formula::Imp(
            alpha,
            Box::new(Formula::mutual(group.clone(), beta.as_ref().clone())),
        );
        self.line(f, Justification::IndOmega(premise))
    }

    /// Modus ponens with the conclusion read off the implication line.
    pub fn apply(&mut self, imp: usize, ant: usize) -> usize {
        let Formula::Imp(a, b) = self.formula_of(imp) else {
            panic!("apply needs an implication line, got {}", self.formula_of(imp));
        };
        assert!(
            norm_eq(a, self.formula_of(ant)),
            "antecedent line does not match the implication"
        );
        let conclusion = b.as_ref().clone();
        self.mp(ant, imp, conclusion)
    }

    /// `φ ∧ ψ` from lines proving `φ` and `ψ`.
    pub fn and_intro(&mut self, i: usize, j: usize) -> usize {
        let (a, b) = (self.formula_of(i).clone(), self.formula_of(j).clone());
        let pair = a.clone().and(b.clone());
        let t = self.taut(a.imp(b.imp(pair)));
        let step = self.apply(t, i);
        self.apply(step, j)
    }

    /// `φ` from a line proving `φ ∧ ψ`.
    pub fn and_left(&mut self, i: usize) -> usize {
        let Formula::And(a, _) = self.formula_of(i) else {
            panic!("and_left needs a conjunction line");
        };
        let a = a.as_ref().clone();
        let t = self.taut(self.formula_of(i).clone().imp(a));
        self.apply(t, i)
    }

    /// `ψ` from a line proving `φ ∧ ψ`.
    pub fn and_right(&mut self, i: usize) -> usize {
        let Formula::And(_, b) = self.formula_of(i) else {
            panic!("and_right needs a conjunction line");
        };
        let b = b.as_ref().clone();
        let t = self.taut(self.formula_of(i).clone().imp(b));
        self.apply(t, i)
    }

    /// `φ → χ` from lines proving `φ → ψ` and `ψ → χ`.
    pub fn imp_trans(&mut self, i: usize, j: usize) -> usize {
        let (fi, fj) = (self.formula_of(i).clone(), self.formula_of(j).clone());
        let (Formula::Imp(a, b), Formula::Imp(b2, c)) = (&fi, &fj) else {
            panic!("imp_trans needs two implication lines");
        };
        assert!(norm_eq(b, b2), "implications do not chain");
        let chained = a.as_ref().clone().imp(c.as_ref().clone());
        let t = self.taut(fi.clone().imp(fj.clone().imp(chained)));
        let step = self.apply(t, i);
        self.apply(step, j)
    }

    /// `(A says φ) → (A says ψ)` from a line proving `φ → ψ`, by
    /// necessitation and distribution.
    pub fn says_mono(&mut self, agent: impl Into<AgentName>, imp: usize) -> usize {
        let agent = agent.into();
        let Formula::Imp(a, b) = self.formula_of(imp).clone() else {
            panic!("says_mono needs an implication line");
        };
        let said = self.nec_says(imp, agent.clone());
        let dist = Formula::says(agent.clone(), (*a).clone().imp((*b).clone()))
            .imp(Formula::says(agent.clone(), (*a).clone()).imp(Formula::says(agent, (*b).clone())));
        let k = self.axiom(AxiomId::Ax5, dist);
        self.apply(k, said)
    }

    /// `A says ψ` from lines proving `φ → ψ` and `A says φ`.
    pub fn says_apply(&mut self, agent: impl Into<AgentName>, imp: usize, said: usize) -> usize {
        let mono = self.says_mono(agent, imp);
        self.apply(mono, said)
    }

    /// `A says (φ ∧ ψ)` from lines proving `A says φ` and `A says ψ`.
    pub fn says_collect(&mut self, i: usize, j: usize) -> usize {
        let (Formula::Says(a1, phi), Formula::Says(a2, psi)) =
            (self.formula_of(i).clone(), self.formula_of(j).clone())
        else {
            panic!("says_collect needs two says lines");
        };
        assert_eq!(a1, a2, "says_collect needs one speaker");
        let pair = phi.as_ref().clone().and(psi.as_ref().clone());
        let t = self.taut(phi.as_ref().clone().imp(psi.as_ref().clone().imp(pair.clone())));
        let partial = self.says_apply(a1.clone(), t, i);
        let dist = Formula::says(a1.clone(), psi.as_ref().clone().imp(pair.clone()))
            .imp(Formula::says(a1.clone(), (*psi).clone()).imp(Formula::says(a1, pair)));
        let k = self.axiom(AxiomId::Ax5, dist);
        let step = self.apply(k, partial);
        self.apply(step, j)
    }

    pub fn finish(self, goal: Formula) -> ProofScript {
        ProofScript {
            goal: Some(goal),
            ops: self.ops,
            hyps: self.hyps,
            lines: self.lines,
        }
    }
}

/// If `f` is the `group`-indexed conjunction of `says` formulas over
/// one shared body (the shape [`Formula::group_says`] builds), returns
/// that body.
fn peel_group_says<'f>(f: &'f Formula, group: &AgentSet) -> Option<&'f Formula> {
    let mut agents = group.iter().peekable();
    let mut cur = f;
    let mut body: Option<&Formula> = None;
    loop {
        let agent = agents.next()?;
        let (said, rest) = match cur {
            Formula::And(l, r) if agents.peek().is_some() => {
                let Formula::Says(a, inner) = l.as_ref() else {
                    return None;
                };
                ((a, inner.as_ref()), Some(r.as_ref()))
            }
            Formula::Says(a, inner) if agents.peek().is_none() => ((a, inner.as_ref()), None),
            _ => return None,
        };
        if said.0 != agent {
            return None;
        }
        match body {
            None => body = Some(said.1),
            Some(b) if b == said.1 => {}
            Some(_) => return None,
        }
        match rest {
            Some(r) => cur = r,
            None => return body,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom("p")
    }

    fn q() -> Formula {
        Formula::atom("q")
    }

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn tautology_instances() {
        let l = limits();
        assert_eq!(is_tautology_instance(&p().imp(p()), &l), Ok(true));
        // Peirce's law.
        let peirce = p().imp(q()).imp(p()).imp(p());
        assert_eq!(is_tautology_instance(&peirce, &l), Ok(true));
        assert_eq!(is_tautology_instance(&p().imp(q()), &l), Ok(false));
        // Modal subformulas abstract to letters.
        let says = Formula::says("A", p());
        assert_eq!(
            is_tautology_instance(&says.clone().or(says.clone().not()), &l),
            Ok(true)
        );
        assert_eq!(
            is_tautology_instance(&says.or(Formula::says("B", p()).not()), &l),
            Ok(false)
        );
    }

    #[test]
    fn tautology_letter_cap() {
        let mut f = Formula::atom("a0");
        for i in 1..=20 {
            f = f.or(Formula::atom(format!("a{i}")));
        }
        assert_eq!(
            is_tautology_instance(&f, &limits()),
            Err(LetterCapExceeded {
                letters: 21,
                cap: 20
            })
        );
        let loose = Limits {
            taut_letters: 21,
            ..limits()
        };
        assert_eq!(is_tautology_instance(&f, &loose), Ok(false));
    }

    #[test]
    fn self_entailment_matches_up_to_normalization() {
        let l = limits();
        let phi = p().imp(q());
        // Body spelled primitively, record slot spelled with sugar.
        let inst = Formula::entails(phi.clone(), p().and(q().not()).not());
        assert_eq!(match_axiom(AxiomId::Ax2, &inst, &l), Ok(()));
        let bad = Formula::entails(phi, q());
        assert_eq!(
            match_axiom(AxiomId::Ax2, &bad, &l),
            Err(RejectReason::SchemaMismatch(AxiomId::Ax2))
        );
    }

    #[test]
    fn entailment_distribution() {
        let l = limits();
        let t = Term::Formula(p());
        let inst = Formula::entails(t.clone(), p().imp(q()))
            .imp(Formula::entails(t.clone(), p()).imp(Formula::entails(t.clone(), q())));
        assert_eq!(match_axiom(AxiomId::Ax3, &inst, &l), Ok(()));
        // Record copies must match as written.
        let other = Term::Formula(p().and(p()));
        let bad = Formula::entails(t.clone(), p().imp(q()))
            .imp(Formula::entails(other, p()).imp(Formula::entails(t, q())));
        assert_eq!(
            match_axiom(AxiomId::Ax3, &bad, &l),
            Err(RejectReason::SchemaMismatch(AxiomId::Ax3))
        );
    }

    #[test]
    fn signed_entailment_yields_saying() {
        let l = limits();
        let t = Term::op("nonce", vec![]);
        let inst = Formula::signs("A", t.clone())
            .and(Formula::entails(t.clone(), p()))
            .imp(Formula::says("A", p()));
        assert_eq!(match_axiom(AxiomId::Ax4, &inst, &l), Ok(()));
        let cross = Formula::signs("A", t.clone())
            .and(Formula::entails(t, p()))
            .imp(Formula::says("B", p()));
        assert_eq!(
            match_axiom(AxiomId::Ax4, &cross, &l),
            Err(RejectReason::SchemaMismatch(AxiomId::Ax4))
        );
    }

    #[test]
    fn says_distribution() {
        let l = limits();
        let inst = Formula::says("A", p().imp(q()))
            .imp(Formula::says("A", p()).imp(Formula::says("A", q())));
        assert_eq!(match_axiom(AxiomId::Ax5, &inst, &l), Ok(()));
    }

    #[test]
    fn records_are_public() {
        let l = limits();
        let t: Term = Formula::says("B", p()).into();
        let inst6 =
            Formula::signs("B", t.clone()).imp(Formula::says("A", Formula::signs("B", t.clone())));
        assert_eq!(match_axiom(AxiomId::Ax6, &inst6, &l), Ok(()));
        let inst7 = Formula::entails(t.clone(), p())
            .imp(Formula::says("C", Formula::entails(t.clone(), p())));
        assert_eq!(match_axiom(AxiomId::Ax7, &inst7, &l), Ok(()));
        // The signer must be stable even though the speaker is free.
        let bad = Formula::signs("B", t.clone()).imp(Formula::says("A", Formula::signs("C", t)));
        assert_eq!(
            match_axiom(AxiomId::Ax6, &bad, &l),
            Err(RejectReason::SchemaMismatch(AxiomId::Ax6))
        );
    }

    #[test]
    fn self_reference_unfolding() {
        let l = limits();
        let c = Formula::this(
            "x",
            Formula::signs("A", Term::var("x"))
                .and(Formula::signs("B", Term::var("x")))
                .imp(p()),
        );
        let unfolded = c.unfold_this().unwrap().unwrap();
        let inst = c.clone().iff(unfolded);
        assert_eq!(match_axiom(AxiomId::Ax8, &inst, &l), Ok(()));
        // Unfolding with the wrong term is rejected.
        let bad = c.clone().iff(
            Formula::signs("A", Term::Formula(p()))
                .and(Formula::signs("B", Term::Formula(p())))
                .imp(p()),
        );
        assert_eq!(
            match_axiom(AxiomId::Ax8, &bad, &l),
            Err(RejectReason::SchemaMismatch(AxiomId::Ax8))
        );
        // A normalized copy desynchronizes the record slots.
        assert_eq!(
            match_axiom(AxiomId::Ax8, &inst.normalize(), &l),
            Err(RejectReason::SchemaMismatch(AxiomId::Ax8))
        );
    }

    #[test]
    fn common_assent_fixed_point() {
        let l = limits();
        let g = AgentSet::of(["A", "B"]);
        let mutual = Formula::mutual(g.clone(), p());
        let inst = mutual
            .clone()
            .iff(Formula::group_says(&g, p().and(mutual.clone())));
        assert_eq!(match_axiom(AxiomId::Ax9, &inst, &l), Ok(()));
        let bad = mutual
            .clone()
            .iff(Formula::group_says(&g, p().and(Formula::mutual(g.clone(), q()))));
        assert_eq!(
            match_axiom(AxiomId::Ax9, &bad, &l),
            Err(RejectReason::SchemaMismatch(AxiomId::Ax9))
        );
    }

    #[test]
    fn modus_ponens_from_hypotheses() {
        let mut b = ProofBuilder::new();
        let imp = b.assume(p().imp(q()));
        let ant = b.assume(p());
        b.mp(ant, imp, q());
        let script = b.finish(q());
        assert_eq!(check_proof(&script, &limits()), Verdict::Accept);
    }

    #[test]
    fn modus_ponens_across_spellings() {
        // The implication line is spelled primitively; MP still fires.
        let mut b = ProofBuilder::new();
        let imp = b.assume(p().and(q().not()).not());
        let ant = b.assume(p());
        b.mp(ant, imp, q());
        assert_eq!(check_proof(&b.finish(q()), &limits()), Verdict::Accept);
    }

    #[test]
    fn rejection_pinpoints_the_line() {
        let mut b = ProofBuilder::new();
        let imp = b.assume(p().imp(q()));
        let ant = b.assume(p());
        let last = b.mp(ant, imp, q().not());
        let script = b.finish(q().not());
        assert_eq!(
            check_proof(&script, &limits()),
            Verdict::Reject {
                line: last,
                reason: RejectReason::MpShape
            }
        );
    }

    #[test]
    fn goal_must_be_proved() {
        let mut b = ProofBuilder::new();
        let last = b.taut(p().imp(p()));
        let script = b.finish(q().imp(q()));
        assert_eq!(
            check_proof(&script, &limits()),
            Verdict::Reject {
                line: last,
                reason: RejectReason::GoalMismatch
            }
        );
    }

    #[test]
    fn hypothesis_reference_must_match() {
        let mut b = ProofBuilder::new();
        b.hyp(p());
        let bad = b.line(q(), Justification::HypRef);
        let script = b.finish(q());
        assert_eq!(
            check_proof(&script, &limits()),
            Verdict::Reject {
                line: bad,
                reason: RejectReason::HypMismatch
            }
        );
    }

    #[test]
    fn forward_references_are_rejected() {
        let script = ProofScript {
            goal: Some(p()),
            ops: OpTable::new(),
            hyps: vec![],
            lines: vec![
                ProofLine {
                    index: 1,
                    formula: p(),
                    just: Justification::Mp(2, 3),
                },
                ProofLine {
                    index: 2,
                    formula: p().imp(p()),
                    just: Justification::Axiom(AxiomId::Ax1),
                },
                ProofLine {
                    index: 3,
                    formula: p(),
                    just: Justification::HypRef,
                },
            ],
        };
        assert_eq!(
            check_proof(&script, &limits()),
            Verdict::Reject {
                line: 1,
                reason: RejectReason::BadIndex
            }
        );
    }

    #[test]
    fn necessitation_requires_purity() {
        let mut b = ProofBuilder::new();
        let impure = b.assume(p());
        let bad = b.nec_says(impure, "A");
        let script = b.finish(Formula::says("A", p()));
        assert_eq!(
            check_proof(&script, &limits()),
            Verdict::Reject {
                line: bad,
                reason: RejectReason::NecNotPure
            }
        );
    }

    #[test]
    fn necessitation_of_theorems() {
        let mut b = ProofBuilder::new();
        let t = b.taut(p().imp(p()));
        let said = b.nec_says(t, "A");
        let goal = b.formula_of(said).clone();
        assert_eq!(check_proof(&b.finish(goal), &limits()), Verdict::Accept);

        let mut b = ProofBuilder::new();
        b.declare_op("nonce", 0);
        let t = b.taut(p().imp(p()));
        let ent = b.nec_entails(t, Term::op("nonce", vec![]));
        let goal = b.formula_of(ent).clone();
        assert_eq!(check_proof(&b.finish(goal), &limits()), Verdict::Accept);

        let mut b = ProofBuilder::new();
        let t = b.taut(p().imp(p()));
        let ent = b.nec_entails(t, Term::op("nonce", vec![]));
        // Without the declaration the record term is malformed; keep
        // the goal clean so the line itself is blamed.
        assert_eq!(
            check_proof(&b.finish(p().imp(p())), &limits()),
            Verdict::Reject {
                line: ent,
                reason: RejectReason::Malformed
            }
        );
    }

    #[test]
    fn common_assent_by_necessitation_and_induction() {
        // From nothing: both agents say a tautology conjunction,
        // weaken into an implication, and induct to common assent.
        let g = AgentSet::of(["A", "B"]);
        let alpha = p().or(p().not());
        let both = alpha.clone().and(alpha.clone());

        let mut b = ProofBuilder::new();
        let t = b.taut(both.clone());
        let sa = b.nec_says(t, "A");
        let sb = b.nec_says(t, "B");
        let said = b.and_intro(sa, sb);
        let weaken = b.taut(
            b.formula_of(said)
                .clone()
                .imp(alpha.clone().imp(b.formula_of(said).clone())),
        );
        let premise = b.apply(weaken, said);
        let conc = b.ind_omega(premise, &g);
        let goal = b.formula_of(conc).clone();
        assert_eq!(
            goal,
            alpha.clone().imp(Formula::mutual(g.clone(), alpha.clone()))
        );
        assert_eq!(check_proof(&b.finish(goal), &limits()), Verdict::Accept);

        // Direct necessitation of a theorem into common assent.
        let mut b = ProofBuilder::new();
        let t = b.taut(alpha.clone());
        let m = b.nec_omega(t, g.clone());
        let goal = b.formula_of(m).clone();
        assert_eq!(goal, Formula::mutual(g, alpha));
        assert_eq!(check_proof(&b.finish(goal), &limits()), Verdict::Accept);
    }

    #[test]
    fn derived_helpers_check_out() {
        let mut b = ProofBuilder::new();
        let i = b.assume(p());
        let j = b.assume(q());
        let both = b.and_intro(i, j);
        let left = b.and_left(both);
        assert_eq!(b.formula_of(left), &p());
        let imp1 = b.assume(p().imp(q()));
        let imp2 = b.assume(q().imp(p()));
        let chain = b.imp_trans(imp1, imp2);
        assert_eq!(b.formula_of(chain), &p().imp(p()));
        // Distribution under says needs a theorem implication.
        let weaken = b.taut(p().imp(q().imp(p())));
        let said_p = b.assume(Formula::says("A", p()));
        let said_imp = b.says_apply("A", weaken, said_p);
        let goal = b.formula_of(said_imp).clone();
        assert_eq!(goal, Formula::says("A", q().imp(p())));
        assert_eq!(check_proof(&b.finish(goal), &limits()), Verdict::Accept);
    }

    #[test]
    fn verdict_rendering() {
        assert_eq!(Verdict::Accept.render_sexpr(), "(verdict accept)");
        let rej = Verdict::Reject {
            line: 4,
            reason: RejectReason::SchemaMismatch(AxiomId::Ax8),
        };
        assert_eq!(rej.render_sexpr(), "(verdict reject 4 schema-ax8)");
        assert_eq!(rej.to_string(), "rejected at line 4: schema-ax8");
    }
}
