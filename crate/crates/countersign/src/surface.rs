//! Concrete text syntax: parsing and canonical printing for terms,
//! formulas, model files, proof files, and ledger files.
//!
//! Everything is s-expressions. Lexical classes keep the grammar
//! unambiguous without type declarations: atoms, worlds, and operator
//! names are lowercase-initial identifiers, agents are
//! uppercase-initial, variables are `?ident`, and `;` starts a comment
//! running to end of line. Parsing and printing are inverse on every
//! well-formed artifact, and every error carries a source span.

use std::fmt;

use thiserror::Error;

use crate::hilbert::{AxiomId, Justification, ProofLine, ProofScript};
use crate::kripke::{EntailsMode, Model, ModelBuilder};
use crate::limits::Limits;
use crate::saturate::Ledger;
use crate::syntax::{
    check_formula, check_term, is_closed, AgentName, AgentSet, Formula, OpTable, Term,
};

/// A half-open byte range in the input plus the 1-based line/column of
/// its start.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

fn err<T>(span: SourceSpan, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        span,
        message: message.into(),
    })
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    L,
    R,
    Word(String),
    Var(String),
    Nat(u32),
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut toks = Vec::new();
    let mut line: u32 = 1;
    let mut column: u32 = 1;
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        let span_here = move |len: usize| SourceSpan {
            start,
            end: start + len,
            line,
            column,
        };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            ';' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            '(' => {
                chars.next();
                toks.push((Tok::L, span_here(1)));
                column += 1;
            }
            ')' => {
                chars.next();
                toks.push((Tok::R, span_here(1)));
                column += 1;
            }
            '?' => {
                chars.next();
                column += 1;
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    name.push(c);
                    chars.next();
                    column += 1;
                }
                if name.is_empty() {
                    return err(span_here(1), "expected a variable name after `?`");
                }
                let end = start + 1 + name.len();
                toks.push((
                    Tok::Var(name),
                    SourceSpan {
                        start,
                        end,
                        line,
                        column: column - (end - start) as u32,
                    },
                ));
            }
            c if is_ident_char(c) => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    column += 1;
                }
                let end = start + word.len();
                let span = SourceSpan {
                    start,
                    end,
                    line,
                    column: column - word.len() as u32,
                };
                if word.chars().all(|c| c.is_ascii_digit()) {
                    match word.parse::<u32>() {
                        Ok(n) => toks.push((Tok::Nat(n), span)),
                        Err(_) => return err(span, "number out of range"),
                    }
                } else {
                    toks.push((Tok::Word(word), span));
                }
            }
            other => {
                return err(span_here(other.len_utf8()), format!("unexpected character `{other}`"));
            }
        }
    }
    Ok(toks)
}

fn is_agent_word(w: &str) -> bool {
    w.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

struct Parser<'t> {
    toks: &'t [(Tok, SourceSpan)],
    pos: usize,
    eof: SourceSpan,
}

impl<'t> Parser<'t> {
    fn new(toks: &'t [(Tok, SourceSpan)], input_len: usize) -> Self {
        let eof = SourceSpan {
            start: input_len,
            end: input_len,
            line: toks.last().map_or(1, |(_, s)| s.line),
            column: toks.last().map_or(1, |(_, s)| s.column + 1),
        };
        Parser { toks, pos: 0, eof }
    }

    fn peek(&self) -> Option<&'t (Tok, SourceSpan)> {
        self.toks.get(self.pos)
    }

    fn peek2(&self) -> Option<&'t (Tok, SourceSpan)> {
        self.toks.get(self.pos + 1)
    }

    fn next(&mut self, what: &str) -> Result<&'t (Tok, SourceSpan), ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => err(self.eof, format!("unexpected end of input, expected {what}")),
        }
    }

    fn expect_l(&mut self, what: &str) -> Result<SourceSpan, ParseError> {
        match self.next(what)? {
            (Tok::L, s) => Ok(*s),
            (_, s) => err(*s, format!("expected {what}")),
        }
    }

    fn expect_r(&mut self, what: &str) -> Result<(), ParseError> {
        match self.next(&format!("`)` closing {what}"))? {
            (Tok::R, _) => Ok(()),
            (_, s) => err(*s, format!("expected `)` closing {what}")),
        }
    }

    fn at_r(&self) -> bool {
        matches!(self.peek(), Some((Tok::R, _)))
    }

    fn word(&mut self, what: &str) -> Result<(&'t str, SourceSpan), ParseError> {
        match self.next(what)? {
            (Tok::Word(w), s) => Ok((w, *s)),
            (_, s) => err(*s, format!("expected {what}")),
        }
    }

    fn nat(&mut self, what: &str) -> Result<(u32, SourceSpan), ParseError> {
        match self.next(what)? {
            (Tok::Nat(n), s) => Ok((*n, *s)),
            (_, s) => err(*s, format!("expected {what}")),
        }
    }

    fn agent(&mut self) -> Result<(AgentName, SourceSpan), ParseError> {
        let (w, s) = self.word("an agent name")?;
        if !is_agent_word(w) {
            return err(s, "expected an agent name (uppercase-initial)");
        }
        Ok((AgentName::new(w), s))
    }

    fn lower_word(&mut self, what: &str) -> Result<(&'t str, SourceSpan), ParseError> {
        let (w, s) = self.word(what)?;
        if is_agent_word(w) {
            return err(s, format!("expected {what} (lowercase-initial)"));
        }
        Ok((w, s))
    }

    /// `(A B …)` — an agent group.
    fn group(&mut self) -> Result<(AgentSet, SourceSpan), ParseError> {
        let open = self.expect_l("`(` opening an agent group")?;
        let mut agents = Vec::new();
        while !self.at_r() {
            agents.push(self.agent()?.0);
        }
        self.expect_r("the agent group")?;
        match AgentSet::new(agents) {
            Ok(g) => Ok((g, open)),
            Err(e) => err(open, e.to_string()),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.next("a formula")? {
            (Tok::Word(w), s) => {
                if is_agent_word(w) {
                    err(*s, "agent name in formula position")
                } else {
                    Ok(Formula::atom(w.clone()))
                }
            }
            (Tok::Var(_), s) => err(*s, "variable in formula position"),
            (Tok::Nat(_), s) => err(*s, "number in formula position"),
            (Tok::R, s) => err(*s, "unexpected `)`"),
            (Tok::L, _) => {
                let (kw, ksp) = self.word("a connective")?;
                let f = match kw {
                    "not" => self.formula()?.not(),
                    "and" => self.formula()?.and(self.formula_arg()?),
                    "or" => self.formula()?.or(self.formula_arg()?),
                    "imp" => self.formula()?.imp(self.formula_arg()?),
                    "iff" => self.formula()?.iff(self.formula_arg()?),
                    "entails" => {
                        let t = self.term()?;
                        Formula::entails(t, self.formula()?)
                    }
                    "sign" => {
                        let (a, _) = self.agent()?;
                        Formula::signs(a, self.term()?)
                    }
                    "says" => {
                        let (a, _) = self.agent()?;
                        Formula::says(a, self.formula()?)
                    }
                    "saysk" => {
                        let (g, _) = self.group()?;
                        let (k, _) = self.nat("an iteration count")?;
                        Formula::says_k(g, k, self.formula()?)
                    }
                    "mutual" => {
                        let (g, _) = self.group()?;
                        Formula::mutual(g, self.formula()?)
                    }
                    "this" => {
                        let x = match self.next("a variable")? {
                            (Tok::Var(x), _) => x.clone(),
                            (_, s) => return err(*s, "expected a variable"),
                        };
                        Formula::this(x, self.formula()?)
                    }
                    "op" => return err(ksp, "operator application is a term, not a formula"),
                    other => return err(ksp, format!("unknown form `{other}`")),
                };
                self.expect_r(&format!("`{kw}`"))?;
                Ok(f)
            }
        }
    }

    // Borrow-friendly second argument: `formula()` already advanced.
    fn formula_arg(&mut self) -> Result<Formula, ParseError> {
        self.formula()
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some((Tok::Word(w), _)) if is_agent_word(w) => {
                self.pos += 1;
                Ok(Term::agent(w.clone()))
            }
            Some((Tok::Var(x), _)) => {
                self.pos += 1;
                Ok(Term::var(x.clone()))
            }
            Some((Tok::L, _)) => {
                if let Some((Tok::Word(kw), _)) = self.peek2() {
                    if kw == "op" {
                        self.pos += 2;
                        let (name, _) = self.lower_word("an operator name")?;
                        let mut args = Vec::new();
                        while !self.at_r() {
                            args.push(self.term()?);
                        }
                        self.expect_r("the operator application")?;
                        return Ok(Term::op(name, args));
                    }
                }
                Ok(Term::Formula(self.formula()?))
            }
            _ => Ok(Term::Formula(self.formula()?)),
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some((_, s)) => err(*s, "trailing input after the form"),
        }
    }
}

/// Parses a single formula.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses a whitespace-separated sequence of formulas, e.g. a query file.
pub fn parse_formulas(text: &str) -> Result<Vec<Formula>, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.formula()?);
    }
    Ok(out)
}

/// Parses a single term.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Canonical form of a term.
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

/// Canonical form of a formula.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

/// Parses a model file:
/// `(model (worlds w…) (agents A…) (atoms p…) (ops (name arity)…)
///  (entails-mode explicit|fixedpoint) (entails-base all)
///  (true-at w p)… (says-edge w A w')… (sign w A <term>)…
///  (entails <term> w)…)`.
///
/// Declaration clauses must precede the clauses that use them. In
/// fixedpoint mode, `entails` clauses are only legal for non-formula
/// terms (they seed the base relation).
pub fn parse_model(text: &str, limits: &Limits) -> Result<Model, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    let whole = p.expect_l("`(model …)`")?;
    let (kw, ksp) = p.word("`model`")?;
    if kw != "model" {
        return err(ksp, format!("expected `model`, found `{kw}`"));
    }
    let mut b = ModelBuilder::new();
    let mut worlds: Vec<String> = Vec::new();
    let mut agents: Vec<String> = Vec::new();
    let mut atoms: Vec<String> = Vec::new();
    let mut ops = OpTable::new();
    let mut mode = EntailsMode::Explicit;
    let mut saw_mode = false;
    let mut saw_base = false;
    while !p.at_r() {
        p.expect_l("a model clause")?;
        let (clause, csp) = p.word("a clause keyword")?;
        match clause {
            "worlds" => {
                while !p.at_r() {
                    let (w, s) = p.lower_word("a world name")?;
                    if worlds.iter().any(|x| x == w) {
                        return err(s, format!("duplicate world `{w}`"));
                    }
                    worlds.push(w.to_string());
                    b.world(w);
                }
            }
            "agents" => {
                while !p.at_r() {
                    let (a, s) = p.agent()?;
                    if agents.iter().any(|x| x == a.as_str()) {
                        return err(s, format!("duplicate agent `{a}`"));
                    }
                    agents.push(a.as_str().to_string());
                    b.agent(a);
                }
            }
            "atoms" => {
                while !p.at_r() {
                    let (a, s) = p.lower_word("an atom name")?;
                    if atoms.iter().any(|x| x == a) {
                        return err(s, format!("duplicate atom `{a}`"));
                    }
                    atoms.push(a.to_string());
                    b.atom(a);
                }
            }
            "ops" => {
                while !p.at_r() {
                    p.expect_l("an operator declaration")?;
                    let (name, s) = p.lower_word("an operator name")?;
                    let (arity, _) = p.nat("an arity")?;
                    if ops.declare(name, arity as usize).is_err() {
                        return err(s, format!("duplicate operator `{name}`"));
                    }
                    b.op(name, arity as usize);
                    p.expect_r("the operator declaration")?;
                }
            }
            "entails-mode" => {
                if saw_mode {
                    return err(csp, "duplicate entails-mode clause");
                }
                saw_mode = true;
                let (m, s) = p.lower_word("`explicit` or `fixedpoint`")?;
                mode = match m {
                    "explicit" => EntailsMode::Explicit,
                    "fixedpoint" => EntailsMode::Fixedpoint,
                    other => return err(s, format!("unknown entails mode `{other}`")),
                };
                b.mode(mode);
            }
            "entails-base" => {
                if saw_base {
                    return err(csp, "duplicate entails-base clause");
                }
                saw_base = true;
                let (m, s) = p.lower_word("`all`")?;
                if m != "all" {
                    return err(s, format!("unknown entails-base form `{other}`", other = m));
                }
                b.entails_base_all();
            }
            "true-at" => {
                let (w, ws) = p.lower_word("a world name")?;
                if !worlds.iter().any(|x| x == w) {
                    return err(ws, format!("unknown world `{w}`"));
                }
                let (a, as_) = p.lower_word("an atom name")?;
                if !atoms.iter().any(|x| x == a) {
                    return err(as_, format!("unknown atom `{a}`"));
                }
                b.true_at(w, a);
            }
            "says-edge" => {
                let (from, fs) = p.lower_word("a world name")?;
                if !worlds.iter().any(|x| x == from) {
                    return err(fs, format!("unknown world `{from}`"));
                }
                let (a, asp) = p.agent()?;
                if !agents.iter().any(|x| x == a.as_str()) {
                    return err(asp, format!("unknown agent `{a}`"));
                }
                let (to, ts) = p.lower_word("a world name")?;
                if !worlds.iter().any(|x| x == to) {
                    return err(ts, format!("unknown world `{to}`"));
                }
                b.says_edge(from, a, to);
            }
            "sign" => {
                let (w, ws) = p.lower_word("a world name")?;
                if !worlds.iter().any(|x| x == w) {
                    return err(ws, format!("unknown world `{w}`"));
                }
                let (a, asp) = p.agent()?;
                if !agents.iter().any(|x| x == a.as_str()) {
                    return err(asp, format!("unknown agent `{a}`"));
                }
                let t = p.term()?;
                if let Err(e) = check_term(&t, &ops) {
                    return err(csp, e.to_string());
                }
                if !is_closed(&t) {
                    return err(csp, format!("signed term is not closed: {t}"));
                }
                b.sign(w, a, t);
            }
            "entails" => {
                let t = p.term()?;
                if let Err(e) = check_term(&t, &ops) {
                    return err(csp, e.to_string());
                }
                if !is_closed(&t) {
                    return err(csp, format!("entails term is not closed: {t}"));
                }
                if mode == EntailsMode::Fixedpoint && matches!(t, Term::Formula(_)) {
                    return err(
                        csp,
                        "in fixedpoint mode, entails clauses may only list non-formula terms",
                    );
                }
                let (w, ws) = p.lower_word("a world name")?;
                if !worlds.iter().any(|x| x == w) {
                    return err(ws, format!("unknown world `{w}`"));
                }
                b.entails(t, w);
            }
            other => return err(csp, format!("unknown model clause `{other}`")),
        }
        p.expect_r(&format!("the `{clause}` clause"))?;
    }
    p.expect_r("the model")?;
    p.expect_eof()?;
    match b.build(limits) {
        Ok(m) => Ok(m),
        Err(e) => err(whole, e.to_string()),
    }
}

/// Canonical form of a model, one clause per line.
pub fn print_model(m: &Model) -> String {
    let mut clauses: Vec<String> = Vec::new();
    let worlds: Vec<&str> = m.worlds().map(|w| m.world_name(w)).collect();
    clauses.push(format!("(worlds {})", worlds.join(" ")));
    let agents: Vec<&str> = m.agents().iter().map(|a| a.as_str()).collect();
    clauses.push(format!("(agents {})", agents.join(" ")));
    let atoms: Vec<&str> = m.atoms().iter().map(|a| a.as_str()).collect();
    if atoms.is_empty() {
        clauses.push("(atoms)".to_string());
    } else {
        clauses.push(format!("(atoms {})", atoms.join(" ")));
    }
    if !m.ops().is_empty() {
        let decls: Vec<String> = m
            .ops()
            .iter()
            .map(|(name, arity)| format!("({name} {arity})"))
            .collect();
        clauses.push(format!("(ops {})", decls.join(" ")));
    }
    clauses.push(format!("(entails-mode {})", m.mode()));
    if m.base_all() {
        clauses.push("(entails-base all)".to_string());
    }
    for w in m.worlds() {
        for a in m.atoms_true_at(w) {
            clauses.push(format!("(true-at {} {})", m.world_name(w), a));
        }
    }
    for (from, agent, to) in m.says_edges() {
        clauses.push(format!(
            "(says-edge {} {} {})",
            m.world_name(from),
            agent,
            m.world_name(to)
        ));
    }
    for (w, agent, t) in m.sign_records() {
        clauses.push(format!("(sign {} {} {})", m.world_name(w), agent, t));
    }
    for (t, w) in m.entails_pairs() {
        clauses.push(format!("(entails {} {})", t, m.world_name(*w)));
    }
    format!("(model\n  {})", clauses.join("\n  "))
}

fn render_just(j: &Justification) -> String {
    match j {
        Justification::Axiom(ax) => format!("({ax})"),
        Justification::Mp(i, k) => format!("(mp {i} {k})"),
        Justification::NecEntails(i, t) => format!("(nec-entails {i} {t})"),
        Justification::NecSays(i, a) => format!("(nec-says {i} {a})"),
        Justification::NecOmega(i, g) => {
            let names: Vec<&str> = g.iter().map(|a| a.as_str()).collect();
            format!("(nec-omega {i} ({}))", names.join(" "))
        }
        Justification::IndOmega(i) => format!("(ind-omega {i})"),
        Justification::HypRef => "(hyp-ref)".to_string(),
    }
}

/// Parses a proof file:
/// `(proof (goal <f>) (ops (name arity)…) (hyp N <f>)… (line N <f> (JUST))…)`
/// with JUST one of `ax1`…`ax9`, `mp i j`, `nec-entails i <term>`,
/// `nec-says i AGENT`, `nec-omega i (AGENT…)`, `ind-omega i`, or
/// `hyp-ref`. Indices must increase, and justification references must
/// name lines already defined.
pub fn parse_proof(text: &str) -> Result<ProofScript, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    p.expect_l("`(proof …)`")?;
    let (kw, ksp) = p.word("`proof`")?;
    if kw != "proof" {
        return err(ksp, format!("expected `proof`, found `{kw}`"));
    }
    p.expect_l("the `(goal …)` clause")?;
    let (gkw, gsp) = p.word("`goal`")?;
    if gkw != "goal" {
        return err(gsp, "the first proof clause must be `(goal …)`");
    }
    let goal = p.formula()?;
    p.expect_r("the `goal` clause")?;

    let mut script = ProofScript {
        goal: Some(goal),
        ops: OpTable::new(),
        hyps: Vec::new(),
        lines: Vec::new(),
    };
    let mut last_hyp: usize = 0;
    let mut last_line: usize = 0;
    let mut used: Vec<usize> = Vec::new();
    let mut line_indices: Vec<usize> = Vec::new();
    let mut seen_line = false;
    while !p.at_r() {
        p.expect_l("a proof clause")?;
        let (clause, csp) = p.word("a clause keyword")?;
        match clause {
            "ops" => {
                while !p.at_r() {
                    p.expect_l("an operator declaration")?;
                    let (name, s) = p.lower_word("an operator name")?;
                    let (arity, _) = p.nat("an arity")?;
                    if script.ops.declare(name, arity as usize).is_err() {
                        return err(s, format!("duplicate operator `{name}`"));
                    }
                    p.expect_r("the operator declaration")?;
                }
            }
            "hyp" => {
                if seen_line {
                    return err(csp, "hypotheses must precede lines");
                }
                let (n, nsp) = p.nat("a hypothesis number")?;
                let n = n as usize;
                if n <= last_hyp {
                    return err(nsp, "hypothesis indices must increase");
                }
                if used.contains(&n) {
                    return err(nsp, format!("index {n} is used twice"));
                }
                last_hyp = n;
                used.push(n);
                let f = p.formula()?;
                script.hyps.push((n, f));
            }
            "line" => {
                seen_line = true;
                let (n, nsp) = p.nat("a line number")?;
                let n = n as usize;
                if n <= last_line {
                    return err(nsp, "line indices must increase");
                }
                if used.contains(&n) {
                    return err(nsp, format!("index {n} is used twice"));
                }
                last_line = n;
                used.push(n);
                let f = p.formula()?;
                p.expect_l("a justification")?;
                let (jkw, jsp) = p.word("a justification keyword")?;
                let line_ref = |p: &mut Parser| -> Result<usize, ParseError> {
                    let (i, isp) = p.nat("a line reference")?;
                    let i = i as usize;
                    if !line_indices.contains(&i) {
                        return err(isp, format!("reference to undefined line {i}"));
                    }
                    Ok(i)
                };
                let just = match jkw {
                    "mp" => {
                        let i = line_ref(&mut p)?;
                        let j = line_ref(&mut p)?;
                        Justification::Mp(i, j)
                    }
                    "nec-entails" => {
                        let i = line_ref(&mut p)?;
                        Justification::NecEntails(i, p.term()?)
                    }
                    "nec-says" => {
                        let i = line_ref(&mut p)?;
                        Justification::NecSays(i, p.agent()?.0)
                    }
                    "nec-omega" => {
                        let i = line_ref(&mut p)?;
                        Justification::NecOmega(i, p.group()?.0)
                    }
                    "ind-omega" => Justification::IndOmega(line_ref(&mut p)?),
                    "hyp-ref" => Justification::HypRef,
                    ax => match AxiomId::from_token(ax) {
                        Some(ax) => Justification::Axiom(ax),
                        None => return err(jsp, format!("unknown justification `{ax}`")),
                    },
                };
                p.expect_r("the justification")?;
                line_indices.push(n);
                script.lines.push(ProofLine {
                    index: n,
                    formula: f,
                    just,
                });
            }
            other => return err(csp, format!("unknown proof clause `{other}`")),
        }
        p.expect_r(&format!("the `{clause}` clause"))?;
    }
    p.expect_r("the proof")?;
    p.expect_eof()?;
    Ok(script)
}

/// Canonical form of a proof, one clause per line.
pub fn print_proof(s: &ProofScript) -> String {
    let mut clauses: Vec<String> = Vec::new();
    clauses.push(format!("(goal {})", s.goal()));
    if !s.ops.is_empty() {
        let decls: Vec<String> = s
            .ops
            .iter()
            .map(|(name, arity)| format!("({name} {arity})"))
            .collect();
        clauses.push(format!("(ops {})", decls.join(" ")));
    }
    for (n, f) in &s.hyps {
        clauses.push(format!("(hyp {n} {f})"));
    }
    for line in &s.lines {
        clauses.push(format!(
            "(line {} {} {})",
            line.index,
            line.formula,
            render_just(&line.just)
        ));
    }
    format!("(proof\n  {})", clauses.join("\n  "))
}

/// Parses a ledger file:
/// `(ledger (agents A…) (ops (name arity)…) (sign A <term>)…
///  (entails <term> <f>)…)`.
pub fn parse_ledger(text: &str) -> Result<Ledger, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    let whole = p.expect_l("`(ledger …)`")?;
    let (kw, ksp) = p.word("`ledger`")?;
    if kw != "ledger" {
        return err(ksp, format!("expected `ledger`, found `{kw}`"));
    }
    p.expect_l("the `(agents …)` clause")?;
    let (akw, asp) = p.word("`agents`")?;
    if akw != "agents" {
        return err(asp, "the first ledger clause must be `(agents …)`");
    }
    let mut agent_names = Vec::new();
    while !p.at_r() {
        agent_names.push(p.agent()?.0);
    }
    p.expect_r("the `agents` clause")?;
    let agents = match AgentSet::new(agent_names) {
        Ok(a) => a,
        Err(e) => return err(asp, e.to_string()),
    };

    let mut ops = OpTable::new();
    let mut signs: Vec<(AgentName, Term)> = Vec::new();
    let mut entails: Vec<(Term, Formula)> = Vec::new();
    while !p.at_r() {
        p.expect_l("a ledger clause")?;
        let (clause, csp) = p.word("a clause keyword")?;
        match clause {
            "ops" => {
                while !p.at_r() {
                    p.expect_l("an operator declaration")?;
                    let (name, s) = p.lower_word("an operator name")?;
                    let (arity, _) = p.nat("an arity")?;
                    if ops.declare(name, arity as usize).is_err() {
                        return err(s, format!("duplicate operator `{name}`"));
                    }
                    p.expect_r("the operator declaration")?;
                }
            }
            "sign" => {
                let (a, asp) = p.agent()?;
                if !agents.contains(&a) {
                    return err(asp, format!("unknown agent `{a}`"));
                }
                let t = p.term()?;
                if let Err(e) = check_term(&t, &ops) {
                    return err(csp, e.to_string());
                }
                if !is_closed(&t) {
                    return err(csp, format!("signed term is not closed: {t}"));
                }
                signs.push((a, t));
            }
            "entails" => {
                let t = p.term()?;
                let f = p.formula()?;
                if let Err(e) = check_term(&t, &ops).and_then(|()| check_formula(&f, &ops)) {
                    return err(csp, e.to_string());
                }
                if !is_closed(&t) {
                    return err(csp, format!("entails term is not closed: {t}"));
                }
                if !f.is_sentence() {
                    return err(csp, format!("entails formula has free variables: {f}"));
                }
                entails.push((t, f));
            }
            other => return err(csp, format!("unknown ledger clause `{other}`")),
        }
        p.expect_r(&format!("the `{clause}` clause"))?;
    }
    p.expect_r("the ledger")?;
    p.expect_eof()?;
    match Ledger::new(agents, ops, signs, entails) {
        Ok(l) => Ok(l),
        Err(e) => err(whole, e.to_string()),
    }
}

/// Canonical form of a ledger, one clause per line.
pub fn print_ledger(l: &Ledger) -> String {
    let mut clauses: Vec<String> = Vec::new();
    let agents: Vec<&str> = l.agents().iter().map(|a| a.as_str()).collect();
    clauses.push(format!("(agents {})", agents.join(" ")));
    if !l.ops().is_empty() {
        let decls: Vec<String> = l
            .ops()
            .iter()
            .map(|(name, arity)| format!("({name} {arity})"))
            .collect();
        clauses.push(format!("(ops {})", decls.join(" ")));
    }
    for (a, t) in l.signs() {
        clauses.push(format!("(sign {a} {t})"));
    }
    for (t, f) in l.entails() {
        clauses.push(format!("(entails {t} {f})"));
    }
    format!("(ledger\n  {})", clauses.join("\n  "))
}

/// What kind of artifact a file contains, judged by its head symbol.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FileKind {
    Model,
    Proof,
    Ledger,
    Formula,
    Term,
}

/// Guesses the artifact kind from the head symbol; bare content falls
/// back to formula/term.
pub fn detect_kind(text: &str) -> FileKind {
    let toks = match lex(text) {
        Ok(t) => t,
        Err(_) => return FileKind::Formula,
    };
    match (toks.first(), toks.get(1)) {
        (Some((Tok::L, _)), Some((Tok::Word(w), _))) => match w.as_str() {
            "model" => FileKind::Model,
            "proof" => FileKind::Proof,
            "ledger" => FileKind::Ledger,
            "op" => FileKind::Term,
            _ => FileKind::Formula,
        },
        (Some((Tok::Word(w), _)), _) if is_agent_word(w) => FileKind::Term,
        (Some((Tok::Var(_), _)), _) => FileKind::Term,
        _ => FileKind::Formula,
    }
}
