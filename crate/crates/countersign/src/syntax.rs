//! Terms and formulas.
//!
//! Terms are agents, variables, operator applications, or quoted
//! formulas — every formula is also a term, which is what lets a record
//! like `(sign A (imp (says B p) p))` carry a formula as its content.
//! Variables only ever stand in term position; there is no way to write
//! a variable where a formula is expected, which keeps the
//! self-reference binder `this` from expressing a liar sentence.
//!
//! Alongside the two ASTs this module defines the operations everything
//! else leans on: free variables, capture-checked substitution,
//! sentence-hood, the entailment-depth and self-reference-depth
//! measures, canonical printing, and normalization of the derived
//! connectives (`imp`, `or`, `iff`, `saysk`) into the primitive core.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

macro_rules! name_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
        pub struct $name(String);

        impl $name {
            pub fn new(name: impl Into<String>) -> Self {
                Self(name.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl<T: Into<String>> From<T> for $name {
            fn from(name: T) -> Self {
                Self::new(name)
            }
        }
    };
}

name_type! {
    /// An agent identifier (uppercase-initial in the surface syntax).
    AgentName
}
name_type! {
    /// A propositional atom identifier (lowercase-initial).
    AtomName
}
name_type! {
    /// A variable identifier (written `?name` in the surface syntax;
    /// the name is stored without the marker).
    VarName
}
name_type! {
    /// An operator identifier (lowercase-initial).
    OpName
}

/// A non-empty, duplicate-free group of agents, in declaration order.
///
/// Equality is order-sensitive — `(A B)` and `(B A)` are different
/// syntax — but the group semantics only consult membership.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AgentSet(Vec<AgentName>);

impl AgentSet {
    pub fn new(agents: Vec<AgentName>) -> Result<Self, AgentSetError> {
        if agents.is_empty() {
            return Err(AgentSetError::Empty);
        }
        for (i, a) in agents.iter().enumerate() {
            if agents[..i].contains(a) {
                return Err(AgentSetError::Duplicate(a.clone()));
            }
        }
        Ok(Self(agents))
    }

    /// Convenience constructor from string-likes; panics on an invalid
    /// group, so it is meant for statically known agent lists.
    pub fn of<T: Into<AgentName>>(agents: impl IntoIterator<Item = T>) -> Self {
        Self::new(agents.into_iter().map(Into::into).collect()).expect("invalid agent group")
    }

    pub fn agents(&self) -> &[AgentName] {
        &self.0
    }

    pub fn contains(&self, agent: &AgentName) -> bool {
        self.0.contains(agent)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &AgentName> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentSetError {
    #[error("agent group must not be empty")]
    Empty,
    #[error("agent {0} listed twice in a group")]
    Duplicate(AgentName),
}

/// Declared operator signatures: operator name to arity.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct OpTable(std::collections::BTreeMap<OpName, usize>);

impl OpTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares an operator; redeclaration at a different arity is an error.
    pub fn declare(&mut self, name: impl Into<OpName>, arity: usize) -> Result<(), TermError> {
        let name = name.into();
        match self.0.get(&name) {
            Some(&prev) if prev != arity => Err(TermError::ArityMismatch {
                op: name,
                expected: prev,
                got: arity,
            }),
            _ => {
                self.0.insert(name, arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, name: &OpName) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OpName, usize)> {
        self.0.iter().map(|(n, &a)| (n, a))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A term: an agent, a variable, an operator application, or a formula.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Agent(AgentName),
    Var(VarName),
    OpApp(OpName, Vec<Term>),
    Formula(Formula),
}

/// A formula; every variant is also usable as a [`Term`].
///
/// `Imp`, `Or`, `Iff`, and `SaysK` are derived connectives: they are
/// kept in the AST as written (printing round-trips them) and expanded
/// by [`Formula::normalize`] when identity up to definition matters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Atom(AtomName),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// `(entails t f)`: term `t` commits its signer to `f`.
    Entails(Box<Term>, Box<Formula>),
    /// `(sign A t)`: agent `A` has signed the record `t`.
    Signs(AgentName, Box<Term>),
    /// `(says A f)`: agent `A` asserts `f`.
    Says(AgentName, Box<Formula>),
    /// `(saysk (A ...) k f)`: `k`-fold iterated group assertion, `k >= 1`.
    SaysK(AgentSet, u32, Box<Formula>),
    /// `(mutual (A ...) f)`: common assent of the group to `f`.
    Mutual(AgentSet, Box<Formula>),
    /// `(this ?x f)`: `f` with `?x` bound to the whole `this`-term.
    This(VarName, Box<Formula>),
}

impl Term {
    pub fn agent(name: impl Into<AgentName>) -> Self {
        Term::Agent(name.into())
    }

    pub fn var(name: impl Into<VarName>) -> Self {
        Term::Var(name.into())
    }

    pub fn op(name: impl Into<OpName>, args: Vec<Term>) -> Self {
        Term::OpApp(name.into(), args)
    }

    /// Depth of entailment nesting; `0` exactly on non-formula terms.
    pub fn entailment_depth(&self) -> u32 {
        match self {
            Term::Agent(_) | Term::Var(_) | Term::OpApp(..) => 0,
            Term::Formula(f) => f.entailment_depth(),
        }
    }

    pub fn is_formula(&self) -> bool {
        matches!(self, Term::Formula(_))
    }

    pub fn as_formula(&self) -> Option<&Formula> {
        match self {
            Term::Formula(f) => Some(f),
            _ => None,
        }
    }

    /// Canonical printed form as bytes; two terms are structurally equal
    /// iff their canonical bytes are equal.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.to_string().into_bytes()
    }
}

impl From<Formula> for Term {
    fn from(f: Formula) -> Self {
        Term::Formula(f)
    }
}

impl Formula {
    pub fn atom(name: impl Into<AtomName>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn imp(self, other: Formula) -> Self {
        Formula::Imp(Box::new(self), Box::new(other))
    }

    pub fn iff(self, other: Formula) -> Self {
        Formula::Iff(Box::new(self), Box::new(other))
    }

    pub fn entails(term: impl Into<Term>, f: Formula) -> Self {
        Formula::Entails(Box::new(term.into()), Box::new(f))
    }

    pub fn signs(agent: impl Into<AgentName>, term: impl Into<Term>) -> Self {
        Formula::Signs(agent.into(), Box::new(term.into()))
    }

    pub fn says(agent: impl Into<AgentName>, f: Formula) -> Self {
        Formula::Says(agent.into(), Box::new(f))
    }

    pub fn says_k(group: AgentSet, k: u32, f: Formula) -> Self {
        Formula::SaysK(group, k, Box::new(f))
    }

    pub fn mutual(group: AgentSet, f: Formula) -> Self {
        Formula::Mutual(group, Box::new(f))
    }

    pub fn this(var: impl Into<VarName>, f: Formula) -> Self {
        Formula::This(var.into(), Box::new(f))
    }

    /// The conjunction `A1 says f and (A2 says f and ...)` over the group,
    /// i.e. the single-step reading of group assertion.
    pub fn group_says(group: &AgentSet, f: Formula) -> Self {
        let mut agents = group.agents().iter().rev();
        let last = agents.next().expect("agent groups are non-empty");
        let mut acc = Formula::says(last.clone(), f.clone());
        for a in agents {
            acc = Formula::says(a.clone(), f.clone()).and(acc);
        }
        acc
    }

    /// Free variables; a sentence has none.
    pub fn free_vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        formula_free_vars(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Depth of entailment nesting. Formulas free of `entails` have
    /// depth `1`; each `entails` adds one over the deeper of its sides.
    pub fn entailment_depth(&self) -> u32 {
        match self {
            Formula::Atom(_) | Formula::Signs(..) => 1,
            Formula::Not(f) | Formula::This(_, f) => f.entailment_depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                a.entailment_depth().max(b.entailment_depth())
            }
            Formula::Entails(t, f) => t.entailment_depth().max(f.entailment_depth()) + 1,
            Formula::Says(_, f) | Formula::SaysK(_, _, f) | Formula::Mutual(_, f) => {
                f.entailment_depth()
            }
        }
    }

    /// Nesting depth of `this` binders, counted through formula
    /// positions only; the term side of `entails` and the contents of
    /// `sign` records do not contribute.
    pub fn this_depth(&self) -> u32 {
        match self {
            Formula::Atom(_) | Formula::Signs(..) => 0,
            Formula::Not(f)
            | Formula::Entails(_, f)
            | Formula::Says(_, f)
            | Formula::SaysK(_, _, f)
            | Formula::Mutual(_, f) => f.this_depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                a.this_depth().max(b.this_depth())
            }
            Formula::This(_, f) => f.this_depth() + 1,
        }
    }

    /// Unfolds a `this` binder one step: `this ?x. f` becomes
    /// `f[?x := this ?x. f]`. Capture is impossible when `self` is a
    /// sentence, so the substitution error cannot occur there.
    pub fn unfold_this(&self) -> Option<Result<Formula, CaptureError>> {
        match self {
            Formula::This(x, body) => {
                Some(substitute_formula(body, x, &Term::Formula(self.clone())))
            }
            _ => None,
        }
    }

    /// Rewrites derived connectives into the primitive core:
    /// `imp`/`or`/`iff` into `not`/`and`, and `saysk` into nested
    /// single-agent `says` conjunctions. Only formula positions are
    /// rewritten — the contents of `sign` and the term side of
    /// `entails` are records and stay byte-for-byte as written.
    pub fn normalize(&self) -> Formula {
        fn imp_n(a: Formula, b: Formula) -> Formula {
            a.and(b.not()).not()
        }
        match self {
            Formula::Atom(_) | Formula::Signs(..) => self.clone(),
            Formula::Not(f) => f.normalize().not(),
            Formula::And(a, b) => a.normalize().and(b.normalize()),
            Formula::Imp(a, b) => imp_n(a.normalize(), b.normalize()),
            Formula::Or(a, b) => a.normalize().not().and(b.normalize().not()).not(),
            Formula::Iff(a, b) => {
                let (na, nb) = (a.normalize(), b.normalize());
                imp_n(na.clone(), nb.clone()).and(imp_n(nb, na))
            }
            Formula::Entails(t, f) => Formula::Entails(t.clone(), Box::new(f.normalize())),
            Formula::Says(a, f) => Formula::says(a.clone(), f.normalize()),
            Formula::SaysK(g, k, f) => {
                let inner = if *k <= 1 {
                    f.normalize()
                } else {
                    Formula::SaysK(g.clone(), k - 1, f.clone()).normalize()
                };
                Formula::group_says(g, inner)
            }
            Formula::Mutual(g, f) => Formula::Mutual(g.clone(), Box::new(f.normalize())),
            Formula::This(x, f) => Formula::this(x.clone(), f.normalize()),
        }
    }

    /// Canonical printed form as bytes; structural equality iff byte
    /// equality (derived spellings are preserved, not expanded).
    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.to_string().into_bytes()
    }
}

/// Equality up to expansion of the derived connectives.
pub fn norm_eq(a: &Formula, b: &Formula) -> bool {
    a == b || a.normalize() == b.normalize()
}

/// Free variables of a term.
pub fn free_vars(term: &Term) -> BTreeSet<VarName> {
    let mut out = BTreeSet::new();
    term_free_vars(term, &mut Vec::new(), &mut out);
    out
}

/// A term is closed when it has no free variables; only closed terms
/// can be signed, entail, or be evaluated.
pub fn is_closed(term: &Term) -> bool {
    free_vars(term).is_empty()
}

fn term_free_vars(term: &Term, bound: &mut Vec<VarName>, out: &mut BTreeSet<VarName>) {
    match term {
        Term::Agent(_) => {}
        Term::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Term::OpApp(_, args) => {
            for a in args {
                term_free_vars(a, bound, out);
            }
        }
        Term::Formula(f) => formula_free_vars(f, bound, out),
    }
}

fn formula_free_vars(f: &Formula, bound: &mut Vec<VarName>, out: &mut BTreeSet<VarName>) {
    match f {
        Formula::Atom(_) => {}
        Formula::Not(a) => formula_free_vars(a, bound, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
            formula_free_vars(a, bound, out);
            formula_free_vars(b, bound, out);
        }
        Formula::Entails(t, a) => {
            term_free_vars(t, bound, out);
            formula_free_vars(a, bound, out);
        }
        Formula::Signs(_, t) => term_free_vars(t, bound, out),
        Formula::Says(_, a) | Formula::SaysK(_, _, a) | Formula::Mutual(_, a) => {
            formula_free_vars(a, bound, out)
        }
        Formula::This(x, a) => {
            bound.push(x.clone());
            formula_free_vars(a, bound, out);
            bound.pop();
        }
    }
}

/// Substituting under a binder would capture a free variable of the
/// replacement term.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("substitution would capture variable ?{} under its binder", variable)]
pub struct CaptureError {
    pub variable: VarName,
}

/// `u[x := t]`: replaces free occurrences of `?x` in `u` by `t`.
/// Fails if an occurrence sits under a `this` binder that binds a free
/// variable of `t`.
pub fn substitute(u: &Term, x: &VarName, t: &Term) -> Result<Term, CaptureError> {
    let fv_t = free_vars(t);
    subst_term(u, x, t, &fv_t, &mut Vec::new())
}

/// `f[x := t]` on a formula; see [`substitute`].
pub fn substitute_formula(f: &Formula, x: &VarName, t: &Term) -> Result<Formula, CaptureError> {
    let fv_t = free_vars(t);
    subst_formula(f, x, t, &fv_t, &mut Vec::new())
}

fn subst_term(
    u: &Term,
    x: &VarName,
    t: &Term,
    fv_t: &BTreeSet<VarName>,
    binders: &mut Vec<VarName>,
) -> Result<Term, CaptureError> {
    match u {
        Term::Agent(_) => Ok(u.clone()),
        Term::Var(y) => {
            if y == x {
                if let Some(captured) = binders.iter().find(|b| fv_t.contains(*b)) {
                    return Err(CaptureError {
                        variable: captured.clone(),
                    });
                }
                Ok(t.clone())
            } else {
                Ok(u.clone())
            }
        }
        Term::OpApp(op, args) => {
            let args = args
                .iter()
                .map(|a| subst_term(a, x, t, fv_t, binders))
                .collect::<Result<_, _>>()?;
            Ok(Term::OpApp(op.clone(), args))
        }
        Term::Formula(f) => Ok(Term::Formula(subst_formula(f, x, t, fv_t, binders)?)),
    }
}

fn subst_formula(
    f: &Formula,
    x: &VarName,
    t: &Term,
    fv_t: &BTreeSet<VarName>,
    binders: &mut Vec<VarName>,
) -> Result<Formula, CaptureError> {
    let bin = |a: &Formula, b: &Formula, binders: &mut Vec<VarName>| {
        Ok((
            Box::new(subst_formula(a, x, t, fv_t, binders)?),
            Box::new(subst_formula(b, x, t, fv_t, binders)?),
        ))
    };
    Ok(match f {
        Formula::Atom(_) => f.clone(),
        Formula::Not(a) => Formula::Not(Box::new(subst_formula(a, x, t, fv_t, binders)?)),
        Formula::And(a, b) => {
            let (a, b) = bin(a, b, binders)?;
            Formula::And(a, b)
        }
        Formula::Or(a, b) => {
            let (a, b) = bin(a, b, binders)?;
            Formula::Or(a, b)
        }
        Formula::Imp(a, b) => {
            let (a, b) = bin(a, b, binders)?;
            Formula::Imp(a, b)
        }
        Formula::Iff(a, b) => {
            let (a, b) = bin(a, b, binders)?;
            Formula::Iff(a, b)
        }
        Formula::Entails(u, a) => Formula::Entails(
            Box::new(subst_term(u, x, t, fv_t, binders)?),
            Box::new(subst_formula(a, x, t, fv_t, binders)?),
        ),
        Formula::Signs(agent, u) => Formula::Signs(
            agent.clone(),
            Box::new(subst_term(u, x, t, fv_t, binders)?),
        ),
        Formula::Says(agent, a) => Formula::Says(
            agent.clone(),
            Box::new(subst_formula(a, x, t, fv_t, binders)?),
        ),
        Formula::SaysK(g, k, a) => Formula::SaysK(
            g.clone(),
            *k,
            Box::new(subst_formula(a, x, t, fv_t, binders)?),
        ),
        Formula::Mutual(g, a) => Formula::Mutual(
            g.clone(),
            Box::new(subst_formula(a, x, t, fv_t, binders)?),
        ),
        Formula::This(y, a) => {
            if y == x {
                f.clone()
            } else {
                binders.push(y.clone());
                let a = subst_formula(a, x, t, fv_t, binders);
                binders.pop();
                Formula::This(y.clone(), Box::new(a?))
            }
        }
    })
}

/// Structural well-formedness beyond what the types enforce: declared
/// operators at declared arities, and `saysk` indices `>= 1`.
pub fn check_term(term: &Term, ops: &OpTable) -> Result<(), TermError> {
    match term {
        Term::Agent(_) | Term::Var(_) => Ok(()),
        Term::OpApp(name, args) => {
            match ops.arity(name) {
                None => return Err(TermError::UnknownOperator(name.clone())),
                Some(a) if a != args.len() => {
                    return Err(TermError::ArityMismatch {
                        op: name.clone(),
                        expected: a,
                        got: args.len(),
                    })
                }
                Some(_) => {}
            }
            args.iter().try_for_each(|a| check_term(a, ops))
        }
        Term::Formula(f) => check_formula(f, ops),
    }
}

/// See [`check_term`].
pub fn check_formula(f: &Formula, ops: &OpTable) -> Result<(), TermError> {
    match f {
        Formula::Atom(_) => Ok(()),
        Formula::Not(a) | Formula::This(_, a) => check_formula(a, ops),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
            check_formula(a, ops)?;
            check_formula(b, ops)
        }
        Formula::Entails(t, a) => {
            check_term(t, ops)?;
            check_formula(a, ops)
        }
        Formula::Signs(_, t) => check_term(t, ops),
        Formula::Says(_, a) | Formula::Mutual(_, a) => check_formula(a, ops),
        Formula::SaysK(_, k, a) => {
            if *k == 0 {
                return Err(TermError::ZeroIteration);
            }
            check_formula(a, ops)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unknown operator {0}")]
    UnknownOperator(OpName),
    #[error("operator {op} expects {expected} arguments, got {got}")]
    ArityMismatch {
        op: OpName,
        expected: usize,
        got: usize,
    },
    #[error("saysk index must be at least 1")]
    ZeroIteration,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Agent(a) => write!(f, "{a}"),
            Term::Var(x) => write!(f, "?{x}"),
            Term::OpApp(op, args) => {
                write!(f, "(op {op}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Term::Formula(inner) => write!(f, "{inner}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn group(f: &mut fmt::Formatter<'_>, g: &AgentSet) -> fmt::Result {
            write!(f, "(")?;
            for (i, a) in g.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")
        }
        match self {
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::And(a, b) => write!(f, "(and {a} {b})"),
            Formula::Or(a, b) => write!(f, "(or {a} {b})"),
            Formula::Imp(a, b) => write!(f, "(imp {a} {b})"),
            Formula::Iff(a, b) => write!(f, "(iff {a} {b})"),
            Formula::Entails(t, a) => write!(f, "(entails {t} {a})"),
            Formula::Signs(agent, t) => write!(f, "(sign {agent} {t})"),
            Formula::Says(agent, a) => write!(f, "(says {agent} {a})"),
            Formula::SaysK(g, k, a) => {
                write!(f, "(saysk ")?;
                group(f, g)?;
                write!(f, " {k} {a})")
            }
            Formula::Mutual(g, a) => {
                write!(f, "(mutual ")?;
                group(f, g)?;
                write!(f, " {a})")
            }
            Formula::This(x, a) => write!(f, "(this ?{x} {a})"),
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

    #[test]
    fn free_vars_closed_under_this() {
        // this ?x. (sign A ?x -> p) binds its only variable.
        let f = Formula::this("x", Formula::signs("A", Term::var("x")).imp(p()));
        assert!(f.free_vars().is_empty());
        assert!(f.is_sentence());
    }

    #[test]
    fn free_vars_reports_unbound() {
        let f = Formula::signs("A", Term::var("x")).and(Formula::entails(Term::var("y"), p()));
        let fv = f.free_vars();
        assert_eq!(
            fv.into_iter().collect::<Vec<_>>(),
            vec![VarName::new("x"), VarName::new("y")]
        );
    }

    #[test]
    fn free_vars_shadowing() {
        // Outer ?x occurrence is free, the one under the binder is not.
        let f = Formula::signs("A", Term::var("x"))
            .and(Formula::this("x", Formula::signs("B", Term::var("x"))));
        assert_eq!(f.free_vars().len(), 1);
    }

    #[test]
    fn substitute_replaces_free_occurrences() {
        let body = Formula::signs("A", Term::var("x")).imp(p());
        let c = Formula::this("x", body.clone());
        let unfolded = substitute_formula(&body, &VarName::new("x"), &Term::Formula(c.clone()))
            .unwrap();
        assert_eq!(unfolded, Formula::signs("A", c.clone()).imp(p()));
        // unfold_this computes the same thing.
        assert_eq!(c.unfold_this().unwrap().unwrap(), unfolded);
    }

    #[test]
    fn substitute_stops_at_shadowing_binder() {
        let inner = Formula::this("x", Formula::signs("A", Term::var("x")));
        let f = Formula::signs("B", Term::var("x")).and(inner.clone());
        let r = substitute_formula(&f, &VarName::new("x"), &Term::agent("C")).unwrap();
        assert_eq!(r, Formula::signs("B", Term::agent("C")).and(inner));
    }

    #[test]
    fn substitute_capture_detected() {
        // Substituting a term with free ?y under a binder for ?y is refused.
        let f = Formula::this("y", Formula::signs("A", Term::var("x")));
        let err = substitute_formula(&f, &VarName::new("x"), &Term::var("y")).unwrap_err();
        assert_eq!(err.variable, VarName::new("y"));
    }

    #[test]
    fn substitute_closed_term_never_captures() {
        let f = Formula::this("y", Formula::signs("A", Term::var("x")));
        let t = Term::Formula(Formula::this("y", Formula::signs("B", Term::var("y"))));
        assert!(substitute_formula(&f, &VarName::new("x"), &t).is_ok());
    }

    #[test]
    fn entailment_depth_examples() {
        assert_eq!(Term::agent("A").entailment_depth(), 0);
        assert_eq!(Term::op("f", vec![Term::agent("A")]).entailment_depth(), 0);
        assert_eq!(p().entailment_depth(), 1);
        assert_eq!(p().not().entailment_depth(), 1);
        assert_eq!(p().and(q()).entailment_depth(), 1);
        assert_eq!(Formula::signs("A", Term::agent("B")).entailment_depth(), 1);
        let e1 = Formula::entails(p(), p());
        assert_eq!(e1.entailment_depth(), 2);
        let e2 = Formula::entails(e1.clone(), p());
        assert_eq!(e2.entailment_depth(), 3);
        // says and this pass the depth through unchanged.
        assert_eq!(Formula::says("A", e2.clone()).entailment_depth(), 3);
        assert_eq!(Formula::this("x", e1.clone()).entailment_depth(), 2);
        let g = AgentSet::of(["A", "B"]);
        assert_eq!(Formula::says_k(g.clone(), 3, e1.clone()).entailment_depth(), 2);
        assert_eq!(Formula::mutual(g, p()).entailment_depth(), 1);
        // Depth of a signed record does not leak out of the record.
        assert_eq!(Formula::signs("A", e2).entailment_depth(), 1);
    }

    #[test]
    fn entails_free_formulas_have_depth_one() {
        let g = AgentSet::of(["A", "B"]);
        let f = Formula::this(
            "x",
            Formula::says("A", Formula::mutual(g, Formula::signs("B", Term::var("x")).or(p()))),
        );
        assert_eq!(f.entailment_depth(), 1);
    }

    #[test]
    fn this_depth_examples() {
        assert_eq!(p().this_depth(), 0);
        let one = Formula::this("x", Formula::signs("A", Term::var("x")).imp(p()));
        assert_eq!(one.this_depth(), 1);
        let two = Formula::this("x", Formula::says("A", one.clone()));
        assert_eq!(two.this_depth(), 2);
        // Records do not contribute: signing a this-term is depth 0.
        assert_eq!(Formula::signs("A", one.clone()).this_depth(), 0);
        // Neither does the term side of entails.
        assert_eq!(Formula::entails(one, p()).this_depth(), 0);
    }

    #[test]
    fn substitution_preserves_this_depth() {
        // Replacement lands in term position, so depth cannot change.
        let body = Formula::signs("A", Term::var("x")).imp(Formula::this("y", p().not()));
        let c = Formula::this("x", body.clone());
        let unfolded = c.unfold_this().unwrap().unwrap();
        assert_eq!(unfolded.this_depth(), body.this_depth());
        assert_eq!(c.this_depth(), body.this_depth() + 1);
    }

    #[test]
    fn canonical_printing() {
        assert_eq!(p().and(q()).to_string(), "(and p q)");
        let f = Formula::this("x", p().not());
        assert_eq!(f.to_string(), "(this ?x (not p))");
        assert_eq!(
            Formula::signs("A", Term::op("call", vec![Term::op("c0", vec![])])).to_string(),
            "(sign A (op call (op c0)))"
        );
        let g = AgentSet::of(["A", "B"]);
        assert_eq!(
            Formula::says_k(g.clone(), 2, p()).to_string(),
            "(saysk (A B) 2 p)"
        );
        assert_eq!(Formula::mutual(g, p()).to_string(), "(mutual (A B) p)");
        assert_eq!(
            Formula::entails(Term::var("x"), p().imp(q())).to_string(),
            "(entails ?x (imp p q))"
        );
    }

    #[test]
    fn canonical_bytes_track_structural_equality() {
        let a = p().imp(q());
        let b = p().imp(q());
        let c = p().not().or(q());
        assert_eq!(a.canonical_bytes(), b.canonical_bytes());
        assert_ne!(a.canonical_bytes(), c.canonical_bytes());
        assert_ne!(a, c);
    }

    #[test]
    fn normalize_expands_derived_connectives() {
        let imp = p().imp(q());
        assert_eq!(imp.normalize(), p().and(q().not()).not());
        let or = p().or(q());
        assert_eq!(or.normalize(), p().not().and(q().not()).not());
        let iff = p().iff(q());
        assert_eq!(
            iff.normalize(),
            p().and(q().not()).not().and(q().and(p().not()).not())
        );
        assert!(norm_eq(&p().imp(q()), &p().and(q().not()).not()));
        assert!(!norm_eq(&p().imp(q()), &q().imp(p())));
    }

    #[test]
    fn normalize_keeps_records_as_written() {
        // The record inside sign keeps its imp spelling after normalization.
        let rec = Formula::signs("A", p().imp(q()));
        assert_eq!(rec.normalize(), rec);
        let ent = Formula::entails(p().imp(q()), p().imp(q()));
        assert_eq!(
            ent.normalize(),
            Formula::entails(p().imp(q()), p().and(q().not()).not())
        );
    }

    #[test]
    fn normalize_expands_saysk() {
        let g = AgentSet::of(["A", "B"]);
        let one = Formula::says_k(g.clone(), 1, p());
        assert_eq!(
            one.normalize(),
            Formula::says("A", p()).and(Formula::says("B", p()))
        );
        let two = Formula::says_k(g.clone(), 2, p());
        assert_eq!(two.normalize(), Formula::group_says(&g, one.normalize()));
    }

    #[test]
    fn agent_set_rejects_bad_groups() {
        assert_eq!(AgentSet::new(vec![]).unwrap_err(), AgentSetError::Empty);
        assert_eq!(
            AgentSet::new(vec!["A".into(), "A".into()]).unwrap_err(),
            AgentSetError::Duplicate(AgentName::new("A"))
        );
    }

    #[test]
    fn op_table_checks() {
        let mut ops = OpTable::new();
        ops.declare("call", 2).unwrap();
        let t = Term::op("call", vec![Term::agent("A")]);
        assert!(matches!(
            check_term(&t, &ops),
            Err(TermError::ArityMismatch { .. })
        ));
        let t = Term::op("make", vec![]);
        assert!(matches!(
            check_term(&t, &ops),
            Err(TermError::UnknownOperator(_))
        ));
        let t = Term::op("call", vec![Term::agent("A"), Term::agent("B")]);
        assert!(check_term(&t, &ops).is_ok());
        assert!(matches!(
            check_formula(&Formula::SaysK(AgentSet::of(["A"]), 0, Box::new(p())), &ops),
            Err(TermError::ZeroIteration)
        ));
    }
}
