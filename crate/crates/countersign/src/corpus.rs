//! Shipped artifact corpus and named end-to-end scenarios.
//!
//! Every file under `data/` is generated from a constructor in this module
//! and embedded back into the binary with `include_str!`, so the shipped
//! text, the in-code builders, and the surface parsers can all be checked
//! against each other.  The scenarios wire the artifacts together: each one
//! runs a handful of labelled checks (proof verdicts, model evaluations,
//! ledger saturations) and reports pass/fail per check.

use crate::hilbert::{check_proof, AxiomId, ProofBuilder, ProofScript, Verdict};
use crate::kripke::{validate_model, EntailsMode, Model, ModelBuilder};
use crate::limits::Limits;
use crate::sat::{eval, eval_mutual, eval_says_k};
use crate::saturate::{meeting_of_minds, replay_and_check, Ledger, MeetingReport};
use crate::surface::{print_ledger, print_model, print_proof};
use crate::syntax::{AgentName, AgentSet, Formula, OpTable, Term};
use thiserror::Error;

// ---------------------------------------------------------------------------
// Embedded artifact text
// ---------------------------------------------------------------------------

pub const EXAMPLE1_MODEL: &str = include_str!("../data/example1.model");
pub const ONEWORLD_MODEL: &str = include_str!("../data/oneworld.model");

pub const OFFER_LEDGER: &str = include_str!("../data/offer.ledger");
pub const NAIVE_LEDGER: &str = include_str!("../data/naive.ledger");
pub const CHAIN3_LEDGER: &str = include_str!("../data/chain3.ledger");
pub const CHAIN4_LEDGER: &str = include_str!("../data/chain4.ledger");
pub const ABSTRACT_LEDGER: &str = include_str!("../data/abstract.ledger");
pub const COUNTERPART_LEDGER: &str = include_str!("../data/counterpart.ledger");
pub const NPARTY3_LEDGER: &str = include_str!("../data/nparty3.ledger");
pub const ACME_LEDGER: &str = include_str!("../data/acme.ledger");

pub const OFFER_SIGN_CONDITION_PROOF: &str = include_str!("../data/offer-sign-condition.proof");
pub const OFFER_SAYS_CONDITION_PROOF: &str = include_str!("../data/offer-says-condition.proof");
pub const CHAIN3_PROOF: &str = include_str!("../data/chain3.proof");
pub const CHAIN4_PROOF: &str = include_str!("../data/chain4.proof");
pub const ABSTRACT_COUNTERPARTS_PROOF: &str = include_str!("../data/abstract-counterparts.proof");
pub const CONTRACT_SELF_ENTAILS_PROOF: &str = include_str!("../data/contract-self-entails.proof");
pub const COUNTERPARTS_CLOSE_PROOF: &str = include_str!("../data/counterparts-close.proof");
pub const NPARTY_COUNTERPARTS_PROOF: &str = include_str!("../data/nparty-counterparts.proof");
pub const MUTUAL_ASSENT_PROOF: &str = include_str!("../data/mutual-assent.proof");
pub const MEETING_OF_MINDS_PROOF: &str = include_str!("../data/meeting-of-minds.proof");

// ---------------------------------------------------------------------------
// Shared shapes
// ---------------------------------------------------------------------------

/// Right-nested conjunction of one or more parts.
fn conj(mut parts: Vec<Formula>) -> Formula {
    let last = parts.pop().expect("conjunction needs at least one part");
    parts.into_iter().rev().fold(last, |acc, f| f.and(acc))
}

fn p() -> Formula {
    Formula::atom("p")
}

/// The self-referential counterpart contract for `parties`:
/// `this x. ((P1 signs x ∧ … ∧ Pn signs x) → p)`.
fn contract_formula(parties: &[&str]) -> Formula {
    let signs: Vec<Formula> = parties
        .iter()
        .map(|a| Formula::signs(*a, Term::var("x")))
        .collect();
    Formula::this("x", conj(signs).imp(p()))
}

/// Chained delegation: party `k` signs "if everyone after me has signed
/// their clause, then p", and the last party signs `p` outright.  Returns
/// the parties, the signed formulas, and the signature facts.
fn chain_parts(n: usize) -> (Vec<AgentName>, Vec<Formula>, Vec<Formula>) {
    assert!((2..=4).contains(&n), "chain length out of range");
    let names = ["A", "B", "C", "D"];
    let parties: Vec<AgentName> = names[..n].iter().map(|s| AgentName::new(*s)).collect();
    let mut contents: Vec<Formula> = vec![p(); n];
    let mut sigmas: Vec<Formula> = vec![p(); n];
    sigmas[n - 1] = Formula::signs(parties[n - 1].clone(), p());
    for k in (0..n - 1).rev() {
        contents[k] = conj(sigmas[k + 1..].to_vec()).imp(p());
        sigmas[k] = Formula::signs(parties[k].clone(), contents[k].clone());
    }
    (parties, contents, sigmas)
}

// ---------------------------------------------------------------------------
// Reference models
// ---------------------------------------------------------------------------

/// Two-world countermodel for the naive exchange of conditional
/// acceptances.  Both agents sign "if the other says p then p" at every
/// world, both accessibility relations are total, and `p` holds only at
/// `w1` — so neither `A says p` nor `B says p` holds anywhere.
pub fn example1_model(limits: &Limits) -> Model {
    let mut b = ModelBuilder::new();
    for w in ["w0", "w1"] {
        b.world(w);
    }
    for a in ["A", "B"] {
        b.agent(a);
    }
    b.atom("p");
    b.mode(EntailsMode::Fixedpoint);
    b.entails_base_all();
    b.true_at("w1", "p");
    for w in ["w0", "w1"] {
        for a in ["A", "B"] {
            for to in ["w0", "w1"] {
                b.says_edge(w, a, to);
            }
        }
    }
    let a_accepts = Formula::says("B", p()).imp(p());
    let b_accepts = Formula::says("A", p()).imp(p());
    for w in ["w0", "w1"] {
        b.sign(w, "A", a_accepts.clone());
        b.sign(w, "B", b_accepts.clone());
    }
    b.build(limits).expect("reference model is well-formed")
}

/// One reflexive world where `A` and `B` have both signed the two-party
/// counterpart contract and `p` holds; `H` is a bystander who can observe
/// the signatures.  Common assent to `p` holds here at every depth.
pub fn oneworld_model(limits: &Limits) -> Model {
    let mut b = ModelBuilder::new();
    b.world("u");
    for a in ["A", "B", "H"] {
        b.agent(a);
        b.says_edge("u", a, "u");
    }
    b.atom("p");
    b.mode(EntailsMode::Fixedpoint);
    b.entails_base_all();
    b.true_at("u", "p");
    let m = contract_formula(&["A", "B"]);
    b.sign("u", "A", m.clone());
    b.sign("u", "B", m);
    b.build(limits).expect("reference model is well-formed")
}

// ---------------------------------------------------------------------------
// Reference ledgers
// ---------------------------------------------------------------------------

fn ledger(
    agents: &[&str],
    ops: OpTable,
    signs: Vec<(&str, Term)>,
    entails: Vec<(Term, Formula)>,
) -> Ledger {
    Ledger::new(
        AgentSet::of(agents.iter().copied()),
        ops,
        signs
            .into_iter()
            .map(|(a, t)| (AgentName::new(a), t))
            .collect(),
        entails,
    )
    .expect("reference ledger is well-formed")
}

/// `A` signs "if B signs p then p"; `B` signs `p`.  Saturation closes the
/// net on both sides.
pub fn offer_ledger() -> Ledger {
    let cond = Formula::signs("B", p()).imp(p());
    ledger(
        &["A", "B"],
        OpTable::new(),
        vec![("A", Term::from(cond)), ("B", Term::from(p()))],
        vec![],
    )
}

/// The naive exchange: each side signs "if the other *says* p then p".
/// Nothing in the record lets either conditional fire, so no meeting of
/// the minds is reached.
pub fn naive_ledger() -> Ledger {
    let a_accepts = Formula::says("B", p()).imp(p());
    let b_accepts = Formula::says("A", p()).imp(p());
    ledger(
        &["A", "B"],
        OpTable::new(),
        vec![("A", Term::from(a_accepts)), ("B", Term::from(b_accepts))],
        vec![],
    )
}

/// The delegation chain of [`chain_parts`] as a ledger.
pub fn chain_ledger(n: usize) -> Ledger {
    let (parties, contents, _) = chain_parts(n);
    let names: Vec<&str> = parties.iter().map(|a| a.as_str()).collect();
    let signs = names
        .iter()
        .zip(&contents)
        .map(|(a, f)| (*a, Term::from(f.clone())))
        .collect();
    ledger(&names, OpTable::new(), signs, vec![])
}

/// Both parties sign one abstract instrument `(csic)` whose meaning is
/// fixed by a declared entailment: the instrument entails "if both have
/// signed it then p".
pub fn abstract_ledger() -> Ledger {
    let mut ops = OpTable::new();
    ops.declare("csic", 0).expect("fresh operator");
    let c = Term::op("csic", vec![]);
    let meaning = Formula::signs("A", c.clone())
        .and(Formula::signs("B", c.clone()))
        .imp(p());
    ledger(
        &["A", "B"],
        ops,
        vec![("A", c.clone()), ("B", c.clone())],
        vec![(c, meaning)],
    )
}

/// Both parties sign the two-party self-referential counterpart contract.
pub fn counterpart_ledger() -> Ledger {
    party_contract_ledger(&["A", "B"])
}

/// Three parties sign the three-party counterpart contract.
pub fn nparty3_ledger() -> Ledger {
    party_contract_ledger(&["A", "B", "C"])
}

fn party_contract_ledger(names: &[&str]) -> Ledger {
    let c = Term::from(contract_formula(names));
    let signs = names.iter().map(|a| (*a, c.clone())).collect();
    ledger(names, OpTable::new(), signs, vec![])
}

/// A share-purchase recorded on a ledger: `A` deploys a contract and signs
/// its terms; `B` calls it.  The declared entailment interprets the call
/// as accepting the terms, so both end up asserting them.
pub fn acme_ledger() -> Ledger {
    let mut ops = OpTable::new();
    for (name, arity) in [("create", 1), ("call", 2), ("c0", 0), ("f0", 0)] {
        ops.declare(name, arity).expect("fresh operator");
    }
    let c0 = Term::op("c0", vec![]);
    let f0 = Term::op("f0", vec![]);
    let create = Term::op("create", vec![c0.clone()]);
    let call = Term::op("call", vec![c0, f0]);
    let terms_f = Formula::atom("shares-recorded").imp(Formula::atom("owns-shares"));
    let accept = Formula::signs("A", create.clone())
        .and(Formula::signs("A", terms_f.clone()))
        .imp(terms_f.clone());
    ledger(
        &["A", "B"],
        ops,
        vec![
            ("A", create),
            ("A", Term::from(terms_f)),
            ("B", call.clone()),
        ],
        vec![(call, accept)],
    )
}

// ---------------------------------------------------------------------------
// Reference proofs
// ---------------------------------------------------------------------------

/// From `A signs ((B signs p) → p)` and `B signs p`, both parties say `p`.
pub fn offer_sign_condition_proof() -> ProofScript {
    let sb = Formula::signs("B", p());
    let cond = sb.clone().imp(p());
    let mut b = ProofBuilder::new();
    let h1 = b.assume(Formula::signs("A", cond.clone()));
    let h2 = b.assume(sb.clone());

    let e1 = b.axiom(AxiomId::Ax2, Formula::entails(cond.clone(), cond.clone()));
    let c1 = b.and_intro(h1, e1);
    let c1f = b.formula_of(c1).clone();
    let says_cond = Formula::says("A", cond.clone());
    let k1 = b.axiom(AxiomId::Ax4, c1f.imp(says_cond.clone()));
    let a_cond = b.apply(k1, c1);

    let r = b.axiom(AxiomId::Ax6, sb.clone().imp(Formula::says("A", sb.clone())));
    let a_sb = b.apply(r, h2);

    let d = b.axiom(
        AxiomId::Ax5,
        says_cond.imp(Formula::says("A", sb).imp(Formula::says("A", p()))),
    );
    let s = b.apply(d, a_cond);
    let a_p = b.apply(s, a_sb);

    let e2 = b.axiom(AxiomId::Ax2, Formula::entails(p(), p()));
    let c2 = b.and_intro(h2, e2);
    let c2f = b.formula_of(c2).clone();
    let k2 = b.axiom(AxiomId::Ax4, c2f.imp(Formula::says("B", p())));
    let b_p = b.apply(k2, c2);

    b.and_intro(a_p, b_p);
    b.finish(Formula::says("A", p()).and(Formula::says("B", p())))
}

/// From `A signs ((B says p) → p)` and `B signs p`, both parties say `p`.
/// The bridge is the hypothesis-free theorem `(B signs p) → (B says p)`,
/// which necessitation may push under `A says`.
pub fn offer_says_condition_proof() -> ProofScript {
    let said_b = Formula::says("B", p());
    let cond = said_b.clone().imp(p());
    let sb = Formula::signs("B", p());
    let mut b = ProofBuilder::new();
    let h1 = b.assume(Formula::signs("A", cond.clone()));
    let h2 = b.assume(sb.clone());

    // Pure theorem: (B signs p) → (B says p).
    let ef = Formula::entails(p(), p());
    let e = b.axiom(AxiomId::Ax2, ef.clone());
    let kf = sb.clone().and(ef.clone()).imp(said_b.clone());
    let k = b.axiom(AxiomId::Ax4, kf.clone());
    let g = b.taut(ef.imp(kf.imp(sb.clone().imp(said_b.clone()))));
    let s = b.apply(g, e);
    let theorem = b.apply(s, k);

    let b_p = b.apply(theorem, h2);

    let r = b.axiom(AxiomId::Ax6, sb.clone().imp(Formula::says("A", sb.clone())));
    let a_sb = b.apply(r, h2);
    let under_a = b.nec_says(theorem, "A");
    let d1 = b.axiom(
        AxiomId::Ax5,
        Formula::says("A", sb.clone().imp(said_b.clone())).imp(
            Formula::says("A", sb).imp(Formula::says("A", said_b.clone())),
        ),
    );
    let s1 = b.apply(d1, under_a);
    let a_said_b = b.apply(s1, a_sb);

    let e1 = b.axiom(AxiomId::Ax2, Formula::entails(cond.clone(), cond.clone()));
    let c1 = b.and_intro(h1, e1);
    let c1f = b.formula_of(c1).clone();
    let k1 = b.axiom(AxiomId::Ax4, c1f.imp(Formula::says("A", cond.clone())));
    let a_cond = b.apply(k1, c1);
    let d2 = b.axiom(
        AxiomId::Ax5,
        Formula::says("A", cond)
            .imp(Formula::says("A", said_b).imp(Formula::says("A", p()))),
    );
    let s2 = b.apply(d2, a_cond);
    let a_p = b.apply(s2, a_said_b);

    b.and_intro(a_p, b_p);
    b.finish(Formula::says("A", p()).and(Formula::says("B", p())))
}

/// From the `n`-party delegation chain, every party says `p`.
pub fn chain_proof(n: usize) -> ProofScript {
    let (parties, contents, sigmas) = chain_parts(n);
    let mut b = ProofBuilder::new();
    let hyps: Vec<usize> = sigmas.iter().map(|s| b.assume(s.clone())).collect();
    let mut said_p: Vec<usize> = Vec::new();
    for k in 0..n {
        let me = parties[k].clone();
        let says_me = |f: Formula| Formula::says(me.clone(), f);
        let e = b.axiom(
            AxiomId::Ax2,
            Formula::entails(contents[k].clone(), contents[k].clone()),
        );
        let pair = b.and_intro(hyps[k], e);
        let pf = b.formula_of(pair).clone();
        let k4 = b.axiom(AxiomId::Ax4, pf.imp(says_me(contents[k].clone())));
        let said = b.apply(k4, pair);
        if k == n - 1 {
            said_p.push(said);
            continue;
        }
        // The record of every later signature, pushed under my assertions.
        let lifted: Vec<usize> = (k + 1..n)
            .map(|i| {
                let r = b.axiom(
                    AxiomId::Ax6,
                    sigmas[i].clone().imp(says_me(sigmas[i].clone())),
                );
                b.apply(r, hyps[i])
            })
            .collect();
        let mut acc = *lifted.last().expect("later parties exist");
        for &line in lifted[..lifted.len() - 1].iter().rev() {
            acc = b.says_collect(line, acc);
        }
        let ante = conj(sigmas[k + 1..].to_vec());
        let d = b.axiom(
            AxiomId::Ax5,
            says_me(contents[k].clone()).imp(says_me(ante).imp(says_me(p()))),
        );
        let s = b.apply(d, said);
        said_p.push(b.apply(s, acc));
    }
    let mut acc = *said_p.last().expect("chain is nonempty");
    for &line in said_p[..n - 1].iter().rev() {
        acc = b.and_intro(line, acc);
    }
    let _ = acc;
    let goal = conj(
        parties
            .iter()
            .map(|a| Formula::says(a.clone(), p()))
            .collect(),
    );
    b.finish(goal)
}

/// Counterpart signatures on one abstract instrument: with
/// `H = (csic) ⊨ ((A signs (csic) ∧ B signs (csic)) → p)`, the pure theorem
/// `(H ∧ (A signs (csic) ∧ B signs (csic))) → ((A says p) ∧ (B says p))`.
pub fn abstract_counterparts_proof() -> ProofScript {
    let mut b = ProofBuilder::new();
    b.declare_op("csic", 0);
    let c = Term::op("csic", vec![]);
    let sa = Formula::signs("A", c.clone());
    let sb = Formula::signs("B", c.clone());
    let both = sa.clone().and(sb.clone());
    let x = both.clone().imp(p());
    let h = Formula::entails(c, x.clone());
    let alpha = h.clone().and(both.clone());

    let mut sides = Vec::new();
    for (speaker, mine) in [("A", sa.clone()), ("B", sb.clone())] {
        let says = |f: Formula| Formula::says(speaker, f);
        let l1 = b.axiom(AxiomId::Ax4, mine.clone().and(h.clone()).imp(says(x.clone())));
        let l2 = b.axiom(AxiomId::Ax6, sa.clone().imp(says(sa.clone())));
        let l3 = b.axiom(AxiomId::Ax6, sb.clone().imp(says(sb.clone())));
        let t4 = b.taut(sa.clone().imp(sb.clone().imp(both.clone())));
        let l5 = b.nec_says(t4, speaker);
        let step = sb.clone().imp(both.clone());
        let d6 = b.axiom(
            AxiomId::Ax5,
            says(sa.clone().imp(step.clone()))
                .imp(says(sa.clone()).imp(says(step.clone()))),
        );
        let l7 = b.apply(d6, l5);
        let l9 = b.imp_trans(l2, l7);
        let d8 = b.axiom(
            AxiomId::Ax5,
            says(step.clone()).imp(says(sb.clone()).imp(says(both.clone()))),
        );
        let q = says(step);
        let said_sb = says(sb.clone());
        let w = says(both.clone());
        let g1 = b.taut(
            sa.clone().imp(q.clone()).imp(
                sb.clone().imp(said_sb.clone()).imp(
                    q.imp(said_sb.imp(w.clone()))
                        .imp(both.clone().imp(w.clone())),
                ),
            ),
        );
        let s = b.apply(g1, l9);
        let s = b.apply(s, l3);
        let l10 = b.apply(s, d8);
        let sx = says(x.clone());
        let sp = says(p());
        let d11 = b.axiom(AxiomId::Ax5, sx.clone().imp(w.clone().imp(sp.clone())));
        let g2 = b.taut(
            mine.clone().and(h.clone()).imp(sx.clone()).imp(
                both.clone().imp(w.clone()).imp(
                    sx.imp(w.imp(sp.clone()))
                        .imp(alpha.clone().imp(sp.clone())),
                ),
            ),
        );
        let s = b.apply(g2, l1);
        let s = b.apply(s, l10);
        sides.push(b.apply(s, d11));
    }
    let spa = Formula::says("A", p());
    let spb = Formula::says("B", p());
    let gf = b.taut(
        alpha.clone().imp(spa.clone()).imp(
            alpha
                .clone()
                .imp(spb.clone())
                .imp(alpha.clone().imp(spa.clone().and(spb.clone()))),
        ),
    );
    let s = b.apply(gf, sides[0]);
    b.apply(s, sides[1]);
    b.finish(alpha.imp(spa.and(spb)))
}

/// Lines deriving `⊢ c ⊨ u` for a self-referential contract `c`, where `u`
/// is its one-step unfolding.  Returns the line index and `u`.
fn self_entail_block(b: &mut ProofBuilder, c: &Formula) -> (usize, Formula) {
    let u = c
        .unfold_this()
        .expect("contract binds a variable")
        .expect("unfolding is capture-free");
    let ct = Term::from(c.clone());
    let fix = b.axiom(AxiomId::Ax8, c.clone().iff(u.clone()));
    let t = b.taut(c.clone().iff(u.clone()).imp(c.clone().imp(u.clone())));
    let forward = b.apply(t, fix);
    let inside = b.nec_entails(forward, ct.clone());
    let k = b.axiom(
        AxiomId::Ax3,
        Formula::entails(ct.clone(), c.clone().imp(u.clone())).imp(
            Formula::entails(ct.clone(), c.clone())
                .imp(Formula::entails(ct.clone(), u.clone())),
        ),
    );
    let refl = b.axiom(AxiomId::Ax2, Formula::entails(ct, c.clone()));
    let s = b.apply(k, inside);
    (b.apply(s, refl), u)
}

/// `⊢ c ⊨ ((A signs c ∧ B signs c) → p)` for the two-party contract `c`.
pub fn contract_self_entails_proof() -> ProofScript {
    let c = contract_formula(&["A", "B"]);
    let mut b = ProofBuilder::new();
    let (_, u) = self_entail_block(&mut b, &c);
    b.finish(Formula::entails(c, u))
}

/// Per-party closing lines for the `n`-party counterpart contract.
/// Returns the signature conjunction `α` and, for each party, lines for
/// `α → (P says p)` and `α → (P says α)`.
fn counterpart_core(
    b: &mut ProofBuilder,
    names: &[&str],
) -> (Formula, Vec<usize>, Vec<usize>) {
    let n = names.len();
    let c = contract_formula(names);
    let ct = Term::from(c.clone());
    let s_list: Vec<Formula> = names
        .iter()
        .map(|a| Formula::signs(*a, ct.clone()))
        .collect();
    let alpha = conj(s_list.clone());
    let (h_line, u) = self_entail_block(b, &c);
    debug_assert_eq!(u, alpha.clone().imp(p()));
    let hf = Formula::entails(ct, u.clone());

    let mut to_p = Vec::new();
    let mut to_alpha = Vec::new();
    for (idx, speaker) in names.iter().enumerate() {
        let says = |f: Formula| Formula::says(*speaker, f);
        let s_me = s_list[idx].clone();

        // My own signature puts the unfolded terms in my mouth.
        let l1f = s_me.clone().and(hf.clone()).imp(says(u.clone()));
        let l1 = b.axiom(AxiomId::Ax4, l1f.clone());
        let t = b.taut(hf.clone().imp(l1f.imp(s_me.clone().imp(says(u.clone())))));
        let s = b.apply(t, h_line);
        let sme_su = b.apply(s, l1);

        // α → (conjunction of my records of every signature).
        let lifts: Vec<usize> = s_list
            .iter()
            .map(|si| b.axiom(AxiomId::Ax6, si.clone().imp(says(si.clone()))))
            .collect();
        let ps: Vec<Formula> = s_list.iter().map(|si| says(si.clone())).collect();
        let conj_ps = conj(ps.clone());
        let mut gt = alpha.clone().imp(conj_ps.clone());
        for (si, psi) in s_list.iter().zip(&ps).rev() {
            gt = si.clone().imp(psi.clone()).imp(gt);
        }
        let g = b.taut(gt);
        let mut a_to_ps = g;
        for &line in &lifts {
            a_to_ps = b.apply(a_to_ps, line);
        }

        // (conjunction of records) → (me says α), by currying the
        // introduction tautology under my assertions one step at a time.
        let mut intro = alpha.clone();
        for si in s_list.iter().rev() {
            intro = si.clone().imp(intro);
        }
        let ti = b.taut(intro.clone());
        let said_intro = b.nec_says(ti, *speaker);
        let mut ds: Vec<Formula> = Vec::with_capacity(n + 1);
        ds.push(intro.clone());
        let mut cur = intro;
        for _ in 0..n {
            match cur {
                Formula::Imp(_, rest) => {
                    cur = *rest;
                    ds.push(cur.clone());
                }
                _ => unreachable!("introduction chain is right-nested"),
            }
        }
        let k1 = b.axiom(
            AxiomId::Ax5,
            says(ds[0].clone()).imp(says(s_list[0].clone()).imp(says(ds[1].clone()))),
        );
        let m1 = b.apply(k1, said_intro);
        let mut chain_lines = vec![m1];
        for j in 1..n {
            let kj = b.axiom(
                AxiomId::Ax5,
                says(ds[j].clone())
                    .imp(says(s_list[j].clone()).imp(says(ds[j + 1].clone()))),
            );
            chain_lines.push(kj);
        }
        let says_alpha = says(alpha.clone());
        let mut glue = conj_ps.clone().imp(says_alpha.clone());
        for j in (1..n).rev() {
            glue = says(ds[j].clone())
                .imp(ps[j].clone().imp(says(ds[j + 1].clone())))
                .imp(glue);
        }
        glue = ps[0].clone().imp(says(ds[1].clone())).imp(glue);
        let gl = b.taut(glue);
        let mut ps_to_sa = gl;
        for &line in &chain_lines {
            ps_to_sa = b.apply(ps_to_sa, line);
        }
        let a_to_salpha = b.imp_trans(a_to_ps, ps_to_sa);

        // Close: me says u, me says α, so me says p.
        let su = says(u.clone());
        let sp = says(p());
        let d = b.axiom(
            AxiomId::Ax5,
            su.clone().imp(says_alpha.clone().imp(sp.clone())),
        );
        let g2 = b.taut(
            s_me.imp(su.clone()).imp(
                alpha.clone().imp(says_alpha.clone()).imp(
                    su.imp(says_alpha.imp(sp.clone()))
                        .imp(alpha.clone().imp(sp.clone())),
                ),
            ),
        );
        let s = b.apply(g2, sme_su);
        let s = b.apply(s, a_to_salpha);
        to_p.push(b.apply(s, d));
        to_alpha.push(a_to_salpha);
    }
    (alpha, to_p, to_alpha)
}

/// `⊢ α → ((P1 says p) ∧ … ∧ (Pn says p))` where `α` conjoins the parties'
/// signatures on the `n`-party counterpart contract.
pub fn counterpart_close_proof(n: usize) -> ProofScript {
    assert!((2..=3).contains(&n), "counterpart proof arity out of range");
    let names: Vec<&str> = ["A", "B", "C"][..n].to_vec();
    let mut b = ProofBuilder::new();
    let (alpha, to_p, _) = counterpart_core(&mut b, &names);
    let sps: Vec<Formula> = names.iter().map(|a| Formula::says(*a, p())).collect();
    let goal = alpha.clone().imp(conj(sps.clone()));
    let mut gt = goal.clone();
    for spf in sps.iter().rev() {
        gt = alpha.clone().imp(spf.clone()).imp(gt);
    }
    let g = b.taut(gt);
    let mut acc = g;
    for &line in &to_p {
        acc = b.apply(acc, line);
    }
    let _ = acc;
    b.finish(goal)
}

/// `⊢ α → (common assent of {A,B} to p)` for the two-party contract: each
/// party repeats the whole situation, so induction closes the ω-tower.
pub fn mutual_assent_proof() -> ProofScript {
    let names = ["A", "B"];
    let group = AgentSet::of(names);
    let mut b = ProofBuilder::new();

    // Necessitation alone commonly asserts any theorem.
    let tt = b.taut(p().imp(p()));
    b.nec_omega(tt, group.clone());

    let (alpha, to_p, to_alpha) = counterpart_core(&mut b, &names);
    let ap = alpha.clone().and(p());
    let mut lifted = Vec::new();
    for (idx, speaker) in names.iter().enumerate() {
        let says = |f: Formula| Formula::says(*speaker, f);
        let t = b.taut(alpha.clone().imp(p().imp(ap.clone())));
        let said_t = b.nec_says(t, *speaker);
        let k1 = b.axiom(
            AxiomId::Ax5,
            says(alpha.clone().imp(p().imp(ap.clone())))
                .imp(says(alpha.clone()).imp(says(p().imp(ap.clone())))),
        );
        let m1 = b.apply(k1, said_t);
        let k2 = b.axiom(
            AxiomId::Ax5,
            says(p().imp(ap.clone())).imp(says(p()).imp(says(ap.clone()))),
        );
        let sa_f = says(alpha.clone());
        let d_f = says(p().imp(ap.clone()));
        let sp_f = says(p());
        let sap_f = says(ap.clone());
        let g = b.taut(
            alpha.clone().imp(sa_f.clone()).imp(
                sa_f.imp(d_f.clone()).imp(
                    d_f.imp(sp_f.clone().imp(sap_f.clone())).imp(
                        alpha
                            .clone()
                            .imp(sp_f)
                            .imp(alpha.clone().imp(sap_f.clone())),
                    ),
                ),
            ),
        );
        let s = b.apply(g, to_alpha[idx]);
        let s = b.apply(s, m1);
        let s = b.apply(s, k2);
        lifted.push(b.apply(s, to_p[idx]));
    }
    let sa_ap = Formula::says("A", ap.clone());
    let sb_ap = Formula::says("B", ap);
    let gc = b.taut(
        alpha.clone().imp(sa_ap.clone()).imp(
            alpha
                .clone()
                .imp(sb_ap.clone())
                .imp(alpha.clone().imp(sa_ap.and(sb_ap))),
        ),
    );
    let s = b.apply(gc, lifted[0]);
    let pre = b.apply(s, lifted[1]);
    b.ind_omega(pre, &group);
    b.finish(alpha.imp(Formula::mutual(group, p())))
}

/// The recorded share purchase: from the deployment, the signed terms, the
/// call, and its declared interpretation, both parties say the terms.
pub fn meeting_of_minds_proof() -> ProofScript {
    let mut b = ProofBuilder::new();
    for (name, arity) in [("create", 1), ("call", 2), ("c0", 0), ("f0", 0)] {
        b.declare_op(name, arity);
    }
    let c0 = Term::op("c0", vec![]);
    let f0 = Term::op("f0", vec![]);
    let create = Term::op("create", vec![c0.clone()]);
    let call = Term::op("call", vec![c0, f0]);
    let terms_f = Formula::atom("shares-recorded").imp(Formula::atom("owns-shares"));
    let sa_create = Formula::signs("A", create);
    let sa_terms = Formula::signs("A", terms_f.clone());
    let accept = sa_create.clone().and(sa_terms.clone()).imp(terms_f.clone());

    let h1 = b.assume(sa_create.clone());
    let h2 = b.assume(sa_terms.clone());
    let h3 = b.assume(Formula::signs("B", call.clone()));
    let h4 = b.assume(Formula::entails(call, accept.clone()));

    let e = b.axiom(AxiomId::Ax2, Formula::entails(terms_f.clone(), terms_f.clone()));
    let c1 = b.and_intro(h2, e);
    let c1f = b.formula_of(c1).clone();
    let k1 = b.axiom(AxiomId::Ax4, c1f.imp(Formula::says("A", terms_f.clone())));
    let a_terms = b.apply(k1, c1);

    let c2 = b.and_intro(h3, h4);
    let c2f = b.formula_of(c2).clone();
    let k2 = b.axiom(AxiomId::Ax4, c2f.imp(Formula::says("B", accept.clone())));
    let b_accept = b.apply(k2, c2);

    let r1 = b.axiom(
        AxiomId::Ax6,
        sa_create.clone().imp(Formula::says("B", sa_create.clone())),
    );
    let b_r1 = b.apply(r1, h1);
    let r2 = b.axiom(
        AxiomId::Ax6,
        sa_terms.clone().imp(Formula::says("B", sa_terms.clone())),
    );
    let b_r2 = b.apply(r2, h2);
    let b_both = b.says_collect(b_r1, b_r2);

    let d = b.axiom(
        AxiomId::Ax5,
        Formula::says("B", accept).imp(
            Formula::says("B", sa_create.and(sa_terms))
                .imp(Formula::says("B", terms_f.clone())),
        ),
    );
    let s = b.apply(d, b_accept);
    let b_terms = b.apply(s, b_both);

    b.and_intro(a_terms, b_terms);
    b.finish(Formula::says("A", terms_f.clone()).and(Formula::says("B", terms_f)))
}

/// Every shipped proof, by artifact stem.
pub fn corpus_proofs() -> Vec<(&'static str, ProofScript)> {
    vec![
        ("offer-sign-condition", offer_sign_condition_proof()),
        ("offer-says-condition", offer_says_condition_proof()),
        ("chain3", chain_proof(3)),
        ("chain4", chain_proof(4)),
        ("abstract-counterparts", abstract_counterparts_proof()),
        ("contract-self-entails", contract_self_entails_proof()),
        ("counterparts-close", counterpart_close_proof(2)),
        ("nparty-counterparts", counterpart_close_proof(3)),
        ("mutual-assent", mutual_assent_proof()),
        ("meeting-of-minds", meeting_of_minds_proof()),
    ]
}

// ---------------------------------------------------------------------------
// Artifact manifest
// ---------------------------------------------------------------------------

/// File name and shipped text of every artifact under `data/`.
pub fn artifact_files() -> Vec<(&'static str, &'static str)> {
    vec![
        ("example1.model", EXAMPLE1_MODEL),
        ("oneworld.model", ONEWORLD_MODEL),
        ("offer.ledger", OFFER_LEDGER),
        ("naive.ledger", NAIVE_LEDGER),
        ("chain3.ledger", CHAIN3_LEDGER),
        ("chain4.ledger", CHAIN4_LEDGER),
        ("abstract.ledger", ABSTRACT_LEDGER),
        ("counterpart.ledger", COUNTERPART_LEDGER),
        ("nparty3.ledger", NPARTY3_LEDGER),
        ("acme.ledger", ACME_LEDGER),
        ("offer-sign-condition.proof", OFFER_SIGN_CONDITION_PROOF),
        ("offer-says-condition.proof", OFFER_SAYS_CONDITION_PROOF),
        ("chain3.proof", CHAIN3_PROOF),
        ("chain4.proof", CHAIN4_PROOF),
        ("abstract-counterparts.proof", ABSTRACT_COUNTERPARTS_PROOF),
        ("contract-self-entails.proof", CONTRACT_SELF_ENTAILS_PROOF),
        ("counterparts-close.proof", COUNTERPARTS_CLOSE_PROOF),
        ("nparty-counterparts.proof", NPARTY_COUNTERPARTS_PROOF),
        ("mutual-assent.proof", MUTUAL_ASSENT_PROOF),
        ("meeting-of-minds.proof", MEETING_OF_MINDS_PROOF),
    ]
}

/// The same artifacts, rendered fresh from their in-code constructors.
pub fn artifact_sources(limits: &Limits) -> Vec<(&'static str, String)> {
    let nl = |s: String| s + "\n";
    let mut out: Vec<(&'static str, String)> = vec![
        ("example1.model", nl(print_model(&example1_model(limits)))),
        ("oneworld.model", nl(print_model(&oneworld_model(limits)))),
        ("offer.ledger", nl(print_ledger(&offer_ledger()))),
        ("naive.ledger", nl(print_ledger(&naive_ledger()))),
        ("chain3.ledger", nl(print_ledger(&chain_ledger(3)))),
        ("chain4.ledger", nl(print_ledger(&chain_ledger(4)))),
        ("abstract.ledger", nl(print_ledger(&abstract_ledger()))),
        ("counterpart.ledger", nl(print_ledger(&counterpart_ledger()))),
        ("nparty3.ledger", nl(print_ledger(&nparty3_ledger()))),
        ("acme.ledger", nl(print_ledger(&acme_ledger()))),
    ];
    for (stem, script) in corpus_proofs() {
        let name: &'static str = match stem {
            "offer-sign-condition" => "offer-sign-condition.proof",
            "offer-says-condition" => "offer-says-condition.proof",
            "chain3" => "chain3.proof",
            "chain4" => "chain4.proof",
            "abstract-counterparts" => "abstract-counterparts.proof",
            "contract-self-entails" => "contract-self-entails.proof",
            "counterparts-close" => "counterparts-close.proof",
            "nparty-counterparts" => "nparty-counterparts.proof",
            "mutual-assent" => "mutual-assent.proof",
            "meeting-of-minds" => "meeting-of-minds.proof",
            other => unreachable!("unmapped proof stem {other}"),
        };
        out.push((name, nl(print_proof(&script))));
    }
    out
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl ScenarioReport {
    fn new(name: &'static str) -> Self {
        ScenarioReport {
            name,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, label: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            label: label.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render_text(&self) -> String {
        let verdict = if self.all_pass() { "pass" } else { "FAIL" };
        let mut out = format!("scenario {}: {verdict}\n", self.name);
        for c in &self.checks {
            let mark = if c.pass { "pass" } else { "FAIL" };
            out.push_str(&format!("  [{mark}] {}", c.label));
            if !c.detail.is_empty() {
                out.push_str(&format!(": {}", c.detail));
            }
            out.push('\n');
        }
        out
    }

    pub fn render_sexpr(&self) -> String {
        let verdict = if self.all_pass() { "pass" } else { "fail" };
        let mut out = format!("(scenario {}\n  (result {verdict})", self.name);
        for c in &self.checks {
            let mark = if c.pass { "pass" } else { "fail" };
            out.push_str(&format!("\n  (check {} {mark})", c.label));
        }
        out.push(')');
        out
    }
}

fn check_accepts(r: &mut ScenarioReport, label: &str, script: &ProofScript, limits: &Limits) {
    let v = check_proof(script, limits);
    let pass = matches!(v, Verdict::Accept);
    r.push(label, pass, v.render_sexpr());
}

fn check_meeting(r: &mut ScenarioReport, label: &str, m: &MeetingReport, want: bool) {
    let missing: Vec<&str> = m.missing.iter().map(|a| a.as_str()).collect();
    r.push(
        label,
        m.holds == want,
        format!(
            "holds {} after {} rounds; missing ({})",
            m.holds,
            m.saturation.rounds(),
            missing.join(" ")
        ),
    );
}

fn check_replays(r: &mut ScenarioReport, label: &str, m: &MeetingReport, limits: &Limits) {
    let mut bad = None;
    for (agent, id) in &m.found {
        let v = replay_and_check(&m.saturation, *id, limits);
        if !matches!(v, Verdict::Accept) {
            bad = Some(format!("replay for {agent}: {}", v.render_sexpr()));
            break;
        }
    }
    match bad {
        Some(detail) => r.push(label, false, detail),
        None => r.push(
            label,
            !m.found.is_empty(),
            format!("{} replayed assents accepted", m.found.len()),
        ),
    }
}

fn check_eval(
    r: &mut ScenarioReport,
    label: &str,
    m: &Model,
    world: &str,
    f: &Formula,
    want: bool,
    limits: &Limits,
) {
    let Some(w) = m.world_id(world) else {
        r.push(label, false, format!("no world named {world}"));
        return;
    };
    match eval(m, w, f, limits) {
        Ok(v) => r.push(label, v == want, format!("value {v} at {world}, want {want}")),
        Err(e) => r.push(label, false, e.to_string()),
    }
}

fn check_clean(r: &mut ScenarioReport, label: &str, m: &Model, limits: &Limits) {
    match validate_model(m, limits) {
        Ok(rep) => r.push(
            label,
            rep.is_clean(),
            format!("{} constraint violations", rep.violations.len()),
        ),
        Err(e) => r.push(label, false, e.to_string()),
    }
}

fn scenario_offer_acceptance(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("offer-acceptance");
    check_accepts(&mut r, "sign-condition-proof", &offer_sign_condition_proof(), limits);
    check_accepts(&mut r, "says-condition-proof", &offer_says_condition_proof(), limits);
    let group = AgentSet::of(["A", "B"]);
    let m = meeting_of_minds(&offer_ledger(), &group, &p(), limits.saturation_bound, limits);
    check_meeting(&mut r, "offer-ledger-meeting", &m, true);
    check_replays(&mut r, "offer-ledger-replays", &m, limits);
    r
}

fn scenario_nparty_chain(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("nparty-chain");
    check_accepts(&mut r, "chain3-proof", &chain_proof(3), limits);
    check_accepts(&mut r, "chain4-proof", &chain_proof(4), limits);
    let g3 = AgentSet::of(["A", "B", "C"]);
    let m3 = meeting_of_minds(&chain_ledger(3), &g3, &p(), limits.saturation_bound, limits);
    check_meeting(&mut r, "chain3-ledger-meeting", &m3, true);
    let g4 = AgentSet::of(["A", "B", "C", "D"]);
    let m4 = meeting_of_minds(&chain_ledger(4), &g4, &p(), limits.saturation_bound, limits);
    check_meeting(&mut r, "chain4-ledger-meeting", &m4, true);
    r.push(
        "chain4-rounds",
        m4.saturation.rounds() == 5,
        format!("{} rounds", m4.saturation.rounds()),
    );
    check_replays(&mut r, "chain4-ledger-replays", &m4, limits);
    r
}

fn scenario_naive_counterparts(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("naive-counterparts");
    let m = example1_model(limits);
    check_clean(&mut r, "countermodel-valid", &m, limits);
    let a_accepts = Formula::says("B", p()).imp(p());
    let b_accepts = Formula::says("A", p()).imp(p());
    for w in ["w0", "w1"] {
        check_eval(&mut r, &format!("a-conditional-{w}"), &m, w, &a_accepts, true, limits);
        check_eval(&mut r, &format!("b-conditional-{w}"), &m, w, &b_accepts, true, limits);
        check_eval(
            &mut r,
            &format!("a-says-p-{w}"),
            &m,
            w,
            &Formula::says("A", p()),
            false,
            limits,
        );
        check_eval(
            &mut r,
            &format!("b-says-p-{w}"),
            &m,
            w,
            &Formula::says("B", p()),
            false,
            limits,
        );
    }
    check_eval(&mut r, "p-at-w0", &m, "w0", &p(), false, limits);
    check_eval(&mut r, "p-at-w1", &m, "w1", &p(), true, limits);
    let group = AgentSet::of(["A", "B"]);
    let meet = meeting_of_minds(&naive_ledger(), &group, &p(), limits.saturation_bound, limits);
    check_meeting(&mut r, "naive-ledger-meeting", &meet, false);
    r.push(
        "naive-both-missing",
        meet.missing.len() == 2,
        format!("{} parties missing", meet.missing.len()),
    );
    r
}

fn scenario_counterparts_abstract(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("counterparts-abstract");
    check_accepts(&mut r, "closing-proof", &abstract_counterparts_proof(), limits);
    let group = AgentSet::of(["A", "B"]);
    let m = meeting_of_minds(&abstract_ledger(), &group, &p(), limits.saturation_bound, limits);
    check_meeting(&mut r, "abstract-ledger-meeting", &m, true);
    check_replays(&mut r, "abstract-ledger-replays", &m, limits);
    r
}

fn scenario_counterparts_self_ref(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("counterparts-self-ref");
    check_accepts(&mut r, "self-entailment-proof", &contract_self_entails_proof(), limits);
    check_accepts(&mut r, "closing-proof", &counterpart_close_proof(2), limits);
    let group = AgentSet::of(["A", "B"]);
    let meet = meeting_of_minds(
        &counterpart_ledger(),
        &group,
        &p(),
        limits.saturation_bound,
        limits,
    );
    check_meeting(&mut r, "counterpart-ledger-meeting", &meet, true);
    check_replays(&mut r, "counterpart-ledger-replays", &meet, limits);
    let m = oneworld_model(limits);
    check_clean(&mut r, "signing-model-valid", &m, limits);
    check_eval(&mut r, "contract-holds", &m, "u", &contract_formula(&["A", "B"]), true, limits);
    check_eval(&mut r, "a-says-p", &m, "u", &Formula::says("A", p()), true, limits);
    check_eval(&mut r, "b-says-p", &m, "u", &Formula::says("B", p()), true, limits);
    r
}

fn scenario_counterparts_nparty(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("counterparts-nparty");
    check_accepts(&mut r, "closing-proof", &counterpart_close_proof(3), limits);
    let group = AgentSet::of(["A", "B", "C"]);
    let meet = meeting_of_minds(
        &nparty3_ledger(),
        &group,
        &p(),
        limits.saturation_bound,
        limits,
    );
    check_meeting(&mut r, "nparty3-ledger-meeting", &meet, true);
    check_replays(&mut r, "nparty3-ledger-replays", &meet, limits);
    r
}

fn scenario_common_assent(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("common-assent");
    check_accepts(&mut r, "induction-proof", &mutual_assent_proof(), limits);
    let m = oneworld_model(limits);
    let group = AgentSet::of(["A", "B"]);
    let w = m.world_id("u").expect("world u exists");
    for k in 1..=3u32 {
        let pass = eval_says_k(&m, w, &group, k, &p(), limits).unwrap_or(false);
        r.push(format!("group-says-{k}"), pass, format!("depth {k} assertion of p"));
    }
    let pass = eval_mutual(&m, w, &group, &p(), limits).unwrap_or(false);
    r.push("common-assent-p", pass, "assent at every depth");
    let ct = Term::from(contract_formula(&["A", "B"]));
    let both_signed = Formula::signs("A", ct.clone()).and(Formula::signs("B", ct));
    let pass = eval_mutual(&m, w, &AgentSet::of(["H"]), &both_signed, limits).unwrap_or(false);
    r.push("observer-sees-signatures", pass, "bystander reaches only signing worlds");
    let inner = Formula::mutual(group.clone(), p());
    let pass = eval_mutual(&m, w, &AgentSet::of(["A", "B", "H"]), &inner, limits).unwrap_or(false);
    r.push("assent-is-public", pass, "everyone commonly asserts the parties' assent");
    check_eval(
        &mut r,
        "depth-two-formula",
        &m,
        "u",
        &Formula::says_k(group, 2, p()),
        true,
        limits,
    );
    r
}

fn scenario_smart_contract(limits: &Limits) -> ScenarioReport {
    let mut r = ScenarioReport::new("smart-contract");
    check_accepts(&mut r, "interpretation-proof", &meeting_of_minds_proof(), limits);
    let group = AgentSet::of(["A", "B"]);
    let terms_f = Formula::atom("shares-recorded").imp(Formula::atom("owns-shares"));
    let meet = meeting_of_minds(&acme_ledger(), &group, &terms_f, limits.saturation_bound, limits);
    check_meeting(&mut r, "acme-ledger-meeting", &meet, true);
    check_replays(&mut r, "acme-ledger-replays", &meet, limits);
    r
}

/// A named scenario plus the user stories its checks exercise.
pub struct ScenarioDef {
    pub name: &'static str,
    pub covers: &'static [&'static str],
    runner: fn(&Limits) -> ScenarioReport,
}

impl ScenarioDef {
    pub fn run(&self, limits: &Limits) -> ScenarioReport {
        (self.runner)(limits)
    }
}

static SCENARIOS: &[ScenarioDef] = &[
    ScenarioDef {
        name: "offer-acceptance",
        covers: &["offer-and-acceptance"],
        runner: scenario_offer_acceptance,
    },
    ScenarioDef {
        name: "nparty-chain",
        covers: &["offer-and-acceptance", "multi-party-contracts"],
        runner: scenario_nparty_chain,
    },
    ScenarioDef {
        name: "naive-counterparts",
        covers: &["naive-counterparts-countermodel"],
        runner: scenario_naive_counterparts,
    },
    ScenarioDef {
        name: "counterparts-abstract",
        covers: &["abstract-counterpart-signatures"],
        runner: scenario_counterparts_abstract,
    },
    ScenarioDef {
        name: "counterparts-self-ref",
        covers: &["self-referential-contracts"],
        runner: scenario_counterparts_self_ref,
    },
    ScenarioDef {
        name: "counterparts-nparty",
        covers: &["multi-party-contracts", "self-referential-contracts"],
        runner: scenario_counterparts_nparty,
    },
    ScenarioDef {
        name: "common-assent",
        covers: &["mutual-assent"],
        runner: scenario_common_assent,
    },
    ScenarioDef {
        name: "smart-contract",
        covers: &["smart-contract-interpretation"],
        runner: scenario_smart_contract,
    },
];

pub fn scenarios() -> &'static [ScenarioDef] {
    SCENARIOS
}

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.name).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scenario `{0}`")]
pub struct UnknownScenario(pub String);

pub fn run_scenario(name: &str, limits: &Limits) -> Result<ScenarioReport, UnknownScenario> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .map(|s| s.run(limits))
        .ok_or_else(|| UnknownScenario(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_ledger, parse_model, parse_proof};

    fn limits() -> Limits {
        Limits::default()
    }

    /// Rewrites `data/` from the in-code constructors.  Gated so the repo
    /// only changes when explicitly requested:
    /// `COUNTERSIGN_REGEN_CORPUS=1 cargo test -p countersign regenerate`.
    #[test]
    fn regenerate_data_files() {
        if std::env::var("COUNTERSIGN_REGEN_CORPUS").is_err() {
            return;
        }
        for (name, text) in artifact_sources(&limits()) {
            let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
            std::fs::write(&path, text).expect("write artifact file");
        }
    }

    #[test]
    fn shipped_files_match_builders() {
        let shipped = artifact_files();
        let built = artifact_sources(&limits());
        assert_eq!(shipped.len(), built.len());
        for ((name, text), (bname, want)) in shipped.iter().zip(&built) {
            assert_eq!(name, bname);
            assert_eq!(
                *text, want,
                "data/{name} is stale; rerun with COUNTERSIGN_REGEN_CORPUS=1"
            );
        }
    }

    #[test]
    fn shipped_files_parse_back() {
        let l = limits();
        assert_eq!(parse_model(EXAMPLE1_MODEL, &l).unwrap(), example1_model(&l));
        assert_eq!(parse_model(ONEWORLD_MODEL, &l).unwrap(), oneworld_model(&l));
        for (name, text) in artifact_files() {
            if name.ends_with(".ledger") {
                let parsed = parse_ledger(text).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert!(artifact_sources(&l)
                    .iter()
                    .any(|(n, s)| *n == name && *s == print_ledger(&parsed) + "\n"));
            } else if name.ends_with(".proof") {
                let parsed = parse_proof(text).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert!(artifact_sources(&l)
                    .iter()
                    .any(|(n, s)| *n == name && *s == print_proof(&parsed) + "\n"));
            }
        }
    }

    #[test]
    fn corpus_proofs_accept() {
        let l = limits();
        for (name, script) in corpus_proofs() {
            let v = check_proof(&script, &l);
            assert!(
                matches!(v, Verdict::Accept),
                "proof {name}: {}",
                v.render_sexpr()
            );
        }
    }

    #[test]
    fn negated_conclusions_are_rejected_at_that_line() {
        let l = limits();
        for (name, mut script) in corpus_proofs() {
            let last = script.lines.last_mut().expect("proof has lines");
            let target = last.index;
            last.formula = last.formula.clone().not();
            match check_proof(&script, &l) {
                Verdict::Reject { line, .. } => {
                    assert_eq!(line, target, "proof {name} rejected at wrong line")
                }
                Verdict::Accept => panic!("mutated proof {name} was accepted"),
            }
        }
    }

    #[test]
    fn scenarios_all_pass() {
        let l = limits();
        for def in scenarios() {
            let rep = def.run(&l);
            assert!(rep.all_pass(), "{}", rep.render_text());
        }
    }

    #[test]
    fn chain4_saturates_in_five_rounds() {
        let l = limits();
        let group = AgentSet::of(["A", "B", "C", "D"]);
        let meet = meeting_of_minds(&chain_ledger(4), &group, &p(), l.saturation_bound, &l);
        assert!(meet.holds);
        assert_eq!(meet.saturation.rounds(), 5);
        assert!(!meet.saturation.bound_exceeded());
    }

    #[test]
    fn every_story_is_covered() {
        let stories = [
            "offer-and-acceptance",
            "naive-counterparts-countermodel",
            "abstract-counterpart-signatures",
            "self-referential-contracts",
            "multi-party-contracts",
            "mutual-assent",
            "smart-contract-interpretation",
        ];
        let covered: Vec<&str> = scenarios()
            .iter()
            .flat_map(|s| s.covers.iter().copied())
            .collect();
        for story in stories {
            assert!(covered.contains(&story), "no scenario covers {story}");
        }
        assert_eq!(
            scenario_names(),
            vec![
                "offer-acceptance",
                "nparty-chain",
                "naive-counterparts",
                "counterparts-abstract",
                "counterparts-self-ref",
                "counterparts-nparty",
                "common-assent",
                "smart-contract",
            ]
        );
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        let err = run_scenario("no-such-scenario", &limits()).unwrap_err();
        assert_eq!(err.to_string(), "unknown scenario `no-such-scenario`");
    }
}
