//! Acceptance gate: ten end-to-end criteria, printed one line each.
//!
//! The binary exits nonzero if any criterion fails, so `cargo test`
//! treats the whole gate as a single pass/fail unit while the output
//! stays readable per criterion.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use countersign::corpus;
use countersign::exec;
use countersign::gen::{Gen, GenOptions};
use countersign::hilbert::{check_proof, AxiomId, Verdict};
use countersign::kripke::{
    extend_fixpoint, rel_equiv_k, validate_model, EntailsMode, Model, ModelBuilder, WorldId,
};
use countersign::limits::Limits;
use countersign::sat::{eval, eval_mutual, eval_says_k, tree_height};
use countersign::saturate::{meeting_of_minds, replay_and_check, Ledger};
use countersign::surface::{parse_model, parse_proof, parse_term, print_term};
use countersign::syntax::{AgentSet, Formula, Term};

fn main() {
    let criteria: &[(&str, fn() -> Result<String, String>)] = &[
        ("two-world countermodel reproduced exactly", c01_countermodel),
        ("proof corpus accepted; mutations rejected at the altered line", c02_proof_corpus),
        ("axiom schemas sound on random clean models", c03_soundness),
        ("fixed-point membership agrees with evaluation", c04_fixedpoint_agreement),
        ("depth-bounded relation agreement bounds evaluation agreement", c05_rel_equiv),
        ("group assertion towers stabilize by world count", c06_says_omega),
        ("evaluation height is model-independent and finite", c07_heights),
        ("ledger saturation verdicts exact and replayable", c08_saturation),
        ("entailment depth constants", c09_depths),
        ("parse-print identity on random terms", c10_roundtrip),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2}: pass  {name} [{detail}]", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn p() -> Formula {
    Formula::atom("p")
}

fn first_failure(failures: Vec<String>) -> Result<(), String> {
    match failures.into_iter().next() {
        None => Ok(()),
        Some(f) => Err(f),
    }
}

/// Criterion 1: the shipped two-world model validates cleanly, both
/// signed conditionals hold at both worlds, and neither party says p
/// anywhere.
fn c01_countermodel() -> Result<String, String> {
    let limits = Limits::default();
    let m = parse_model(corpus::EXAMPLE1_MODEL, &limits).map_err(|e| e.to_string())?;
    let report = validate_model(&m, &limits).map_err(|e| e.to_string())?;
    ensure(
        report.is_clean(),
        format!("{} constraint violations", report.violations.len()),
    )?;
    let a_accepts = Formula::says("B", p()).imp(p());
    let b_accepts = Formula::says("A", p()).imp(p());
    let mut checked = 0;
    for wname in ["w0", "w1"] {
        let w = m.world_id(wname).ok_or_else(|| format!("missing world {wname}"))?;
        for (f, want) in [
            (a_accepts.clone(), true),
            (b_accepts.clone(), true),
            (Formula::says("A", p()), false),
            (Formula::says("B", p()), false),
        ] {
            let got = eval(&m, w, &f, &limits).map_err(|e| e.to_string())?;
            ensure(got == want, format!("{f} at {wname}: got {got}, want {want}"))?;
            checked += 1;
        }
    }
    Ok(format!("0 violations, {checked}/8 evaluations exact"))
}

/// Criterion 2: every shipped proof is accepted; negating each proof's
/// final conclusion is rejected at exactly that line.
fn c02_proof_corpus() -> Result<String, String> {
    let limits = Limits::default();
    let proofs: Vec<(&str, &str)> = corpus::artifact_files()
        .into_iter()
        .filter(|(n, _)| n.ends_with(".proof"))
        .collect();
    ensure(
        proofs.len() == 10,
        format!("expected 10 proof artifacts, found {}", proofs.len()),
    )?;
    for (name, text) in &proofs {
        let script = parse_proof(text).map_err(|e| format!("{name}: {e}"))?;
        match check_proof(&script, &limits) {
            Verdict::Accept => {}
            v => return Err(format!("{name}: {}", v.render_sexpr())),
        }
        let mut mutated = script;
        let last = mutated.lines.last_mut().ok_or("proof without lines")?;
        let target = last.index;
        last.formula = last.formula.clone().not();
        match check_proof(&mutated, &limits) {
            Verdict::Reject { line, .. } if line == target => {}
            Verdict::Reject { line, .. } => {
                return Err(format!(
                    "{name}: mutation rejected at line {line}, altered line {target}"
                ))
            }
            Verdict::Accept => return Err(format!("{name}: mutated proof accepted")),
        }
    }
    Ok("10/10 accept; 10/10 mutations rejected at the altered line".into())
}

/// Criterion 3: 1000 generated models (revalidated clean) x 50 instances
/// of each axiom schema evaluate true at every world.
fn c03_soundness() -> Result<String, String> {
    let limits = Limits::default();
    let opts = GenOptions::default();
    let lanes: Vec<u64> = (0..1000).collect();
    let failures: Vec<String> = exec::map(lanes, |lane| -> Option<String> {
        let mut g = Gen::lane(0x5011_d000, lane);
        let m = g.model(&opts, &limits);
        match validate_model(&m, &limits) {
            Ok(r) if r.is_clean() => {}
            Ok(r) => return Some(format!("model {lane}: {} violations", r.violations.len())),
            Err(e) => return Some(format!("model {lane}: {e}")),
        }
        for ax in AxiomId::ALL {
            for _ in 0..50 {
                let inst = g.axiom_instance(ax, &m);
                for w in m.worlds() {
                    match eval(&m, w, &inst, &limits) {
                        Ok(true) => {}
                        Ok(false) => {
                            return Some(format!("model {lane}: {ax} instance false: {inst}"))
                        }
                        Err(e) => return Some(format!("model {lane}: {ax}: {e}")),
                    }
                }
            }
        }
        None
    })
    .into_iter()
    .flatten()
    .collect();
    first_failure(failures)?;
    Ok("1000 models x 9 schemas x 50 instances, all true everywhere".into())
}

/// Criterion 4: fixed-point membership of a query formula coincides with
/// its evaluation, pointwise over 200 models.
fn c04_fixedpoint_agreement() -> Result<String, String> {
    let limits = Limits::default();
    let opts = GenOptions::default();
    let lanes: Vec<u64> = (0..200).collect();
    let failures: Vec<String> = exec::map(lanes, |lane| -> Option<String> {
        let mut g = Gen::lane(0xf1d0_0000, lane);
        let m = g.model(&opts, &limits);
        let mut queries = Vec::new();
        for _ in 0..10 {
            let f = g.sentence_for(&m, 3, 3);
            if f.entailment_depth() <= 3 {
                queries.push(f);
            }
        }
        if queries.is_empty() {
            queries.push(p());
        }
        let closure = match extend_fixpoint(&m, &queries, &limits) {
            Ok(c) => c,
            Err(e) => return Some(format!("model {lane}: {e}")),
        };
        for f in &queries {
            for w in m.worlds() {
                let member = closure.contains(f, w);
                let truth = match eval(&m, w, f, &limits) {
                    Ok(v) => v,
                    Err(e) => return Some(format!("model {lane}: {e}")),
                };
                if member != truth {
                    return Some(format!(
                        "model {lane}: membership {member} but evaluation {truth} for {f}"
                    ));
                }
            }
        }
        None
    })
    .into_iter()
    .flatten()
    .collect();
    first_failure(failures)?;
    Ok("200 models, up to 10 queries each, pointwise agreement".into())
}

/// Criterion 5: model pairs whose entailment relations agree up to term
/// depth k (and provably differ above it) evaluate all depth <= k+1
/// formulas identically.
fn c05_rel_equiv() -> Result<String, String> {
    let limits = Limits::default();
    let q = Formula::atom("q");
    let mut checked = 0;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xec00_0000 + i);
        let k = 1 + (i % 2) as u32;
        let nonce = Term::op("nonce", vec![]);
        let wrapped = Term::op("call", vec![nonce.clone()]);
        let universe: BTreeSet<Term> = [
            nonce.clone(),
            wrapped.clone(),
            Term::from(p()),
            Term::from(p().imp(q.clone())),
            Term::from(Formula::entails(p(), p())),
            Term::from(Formula::entails(Formula::entails(p(), p()), p())),
        ]
        .into_iter()
        .collect();
        let shallow: Vec<Term> = universe
            .iter()
            .filter(|t| t.entailment_depth() <= k)
            .cloned()
            .collect();
        let deep: Vec<Term> = universe
            .iter()
            .filter(|t| t.entailment_depth() > k)
            .cloned()
            .collect();
        let world_count = rng.gen_range(2..=3usize);
        let worlds: Vec<String> = (0..world_count).map(|j| format!("w{j}")).collect();
        let mut truths: Vec<(String, &str)> = Vec::new();
        for w in &worlds {
            for a in ["p", "q"] {
                if rng.gen_bool(0.5) {
                    truths.push((w.clone(), a));
                }
            }
        }
        let mut edges: Vec<(String, &str, String)> = Vec::new();
        for from in &worlds {
            for ag in ["A", "B"] {
                for to in &worlds {
                    if rng.gen_bool(0.4) {
                        edges.push((from.clone(), ag, to.clone()));
                    }
                }
            }
        }
        let mut shared: Vec<(Term, String)> = Vec::new();
        for t in &shallow {
            for w in &worlds {
                if rng.gen_bool(0.5) {
                    shared.push((t.clone(), w.clone()));
                }
            }
        }
        let mut deep_a: Vec<(Term, String)> = Vec::new();
        let mut deep_b: Vec<(Term, String)> = Vec::new();
        for t in &deep {
            for w in &worlds {
                if rng.gen_bool(0.5) {
                    deep_a.push((t.clone(), w.clone()));
                }
                if rng.gen_bool(0.5) {
                    deep_b.push((t.clone(), w.clone()));
                }
            }
        }
        // Force a genuine difference above depth k.
        let flip = (deep[0].clone(), worlds[0].clone());
        deep_b.retain(|x| *x != flip);
        if !deep_a.contains(&flip) {
            deep_a.push(flip);
        }
        let build = |extra: &[(Term, String)]| -> Model {
            let mut b = ModelBuilder::new();
            for w in &worlds {
                b.world(w.clone());
            }
            b.agent("A").agent("B");
            b.atom("p").atom("q");
            b.op("nonce", 0).op("call", 1);
            b.mode(EntailsMode::Explicit);
            for (w, a) in &truths {
                b.true_at(w.clone(), *a);
            }
            for (from, ag, to) in &edges {
                b.says_edge(from.clone(), *ag, to.clone());
            }
            for (t, w) in &shared {
                b.entails(t.clone(), w.clone());
            }
            for (t, w) in extra {
                b.entails(t.clone(), w.clone());
            }
            b.build(&limits).expect("constructed model is well-formed")
        };
        let ma = build(&deep_a);
        let mb = build(&deep_b);
        let ra: BTreeSet<(Term, WorldId)> = ma.entails_pairs().cloned().collect();
        let rb: BTreeSet<(Term, WorldId)> = mb.entails_pairs().cloned().collect();
        ensure(
            rel_equiv_k(&ra, &rb, k, &universe),
            format!("pair {i}: relations differ at depth <= {k}"),
        )?;
        ensure(
            !rel_equiv_k(&ra, &rb, k + 1, &universe),
            format!("pair {i}: relations fail to differ above depth {k}"),
        )?;
        let mut formulas: Vec<Formula> = vec![
            p(),
            q.clone(),
            p().and(q.clone()),
            p().imp(q.clone()),
            p().not(),
            Formula::says("A", p()),
            Formula::says("B", p().imp(q.clone())),
        ];
        for t in &shallow {
            for body in [p(), q.clone(), p().imp(q.clone())] {
                formulas.push(Formula::entails(t.clone(), body));
            }
        }
        for f in &formulas {
            if f.entailment_depth() > k + 1 {
                continue;
            }
            for wname in &worlds {
                let wa = ma.world_id(wname).expect("world exists");
                let wb = mb.world_id(wname).expect("world exists");
                let va = eval(&ma, wa, f, &limits).map_err(|e| e.to_string())?;
                let vb = eval(&mb, wb, f, &limits).map_err(|e| e.to_string())?;
                ensure(va == vb, format!("pair {i}: {f} differs at {wname}"))?;
            }
        }
        checked += 1;
    }
    Ok(format!("{checked}/100 pairs agree on every bounded formula"))
}

/// Criterion 6: common assent equals the finite assertion tower up to
/// the world count, and the omega operator is normal with the expected
/// fixpoint identity.
fn c06_says_omega() -> Result<String, String> {
    let limits = Limits::default();
    let opts = GenOptions {
        max_worlds: 5,
        ..GenOptions::default()
    };
    let lanes: Vec<u64> = (0..200).collect();
    let failures: Vec<String> = exec::map(lanes, |lane| -> Option<String> {
        let mut g = Gen::lane(0x0e6a_0000, lane);
        let m = g.model(&opts, &limits);
        let group = AgentSet::new(m.agents().to_vec()).expect("models declare agents");
        let pool = vec![
            p().imp(p()),
            Formula::atom(m.atoms()[0].as_str()),
            g.sentence_for(&m, 2, 1),
            g.sentence_for(&m, 3, 2),
        ];
        let wc = m.world_count() as u32;
        for f in &pool {
            for w in m.worlds() {
                let mu = match eval_mutual(&m, w, &group, f, &limits) {
                    Ok(v) => v,
                    Err(e) => return Some(format!("lane {lane}: {e}")),
                };
                let mut tower = true;
                for k in 1..=wc {
                    match eval_says_k(&m, w, &group, k, f, &limits) {
                        Ok(v) => tower &= v,
                        Err(e) => return Some(format!("lane {lane}: {e}")),
                    }
                }
                if mu != tower {
                    return Some(format!("lane {lane}: tower mismatch for {f}"));
                }
            }
        }
        for f in &pool {
            let valid = m.worlds().all(|w| eval(&m, w, f, &limits).unwrap_or(false));
            if valid {
                let lifted = m
                    .worlds()
                    .all(|w| eval_mutual(&m, w, &group, f, &limits).unwrap_or(false));
                if !lifted {
                    return Some(format!("lane {lane}: valid {f} not commonly asserted"));
                }
            }
        }
        for (phi, psi) in [(&pool[0], &pool[1]), (&pool[1], &pool[3])] {
            let k_form = Formula::mutual(group.clone(), phi.clone())
                .and(Formula::mutual(group.clone(), phi.clone().imp(psi.clone())))
                .imp(Formula::mutual(group.clone(), psi.clone()));
            for w in m.worlds() {
                match eval(&m, w, &k_form, &limits) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Some(format!("lane {lane}: distribution fails for {phi} / {psi}"))
                    }
                    Err(e) => return Some(format!("lane {lane}: {e}")),
                }
            }
        }
        for f in &pool {
            let fix = Formula::mutual(group.clone(), f.clone()).iff(Formula::group_says(
                &group,
                f.clone().and(Formula::mutual(group.clone(), f.clone())),
            ));
            for w in m.worlds() {
                match eval(&m, w, &fix, &limits) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Some(format!("lane {lane}: fixpoint identity fails for {f}"))
                    }
                    Err(e) => return Some(format!("lane {lane}: {e}")),
                }
            }
        }
        None
    })
    .into_iter()
    .flatten()
    .collect();
    first_failure(failures)?;
    Ok("200 models: tower = assent; normality and fixpoint identities hold".into())
}

/// Criterion 7: evaluation terminates on deeply self-referential
/// formulas and its recursion height depends only on the formula.
fn c07_heights() -> Result<String, String> {
    let limits = Limits::default();
    let mut formulas = Vec::new();
    let mut contract = Formula::this("x", Formula::signs("A", Term::var("x")).imp(p()));
    formulas.push(contract.clone());
    for _ in 2..=8 {
        contract = Formula::this(
            "x",
            Formula::signs("A", Term::var("x"))
                .imp(contract.clone().and(Formula::says("A", p()))),
        );
        formulas.push(contract.clone());
    }
    let base = formulas.clone();
    for f in base.iter().take(6) {
        formulas.push(Formula::says("A", f.clone()));
        formulas.push(Formula::entails(f.clone(), p().imp(f.clone())));
    }
    ensure(formulas.len() == 20, format!("built {} formulas", formulas.len()))?;
    for f in &formulas {
        ensure(f.this_depth() <= 8, format!("{f} exceeds nesting bound"))?;
        ensure(f.is_sentence(), format!("{f} is open"))?;
    }
    let opts = GenOptions::default();
    let mut max_height = 0;
    for (fi, f) in formulas.iter().enumerate() {
        let mut seen: BTreeSet<u32> = BTreeSet::new();
        for lane in 0..20u64 {
            let mut g = Gen::lane(0x4e16_4750 + fi as u64 * 1000, lane);
            let m = g.model(&opts, &limits);
            for w in m.worlds() {
                match tree_height(&m, w, f, &limits) {
                    Ok(h) => {
                        seen.insert(h);
                    }
                    Err(e) => return Err(format!("formula {fi}: {e}")),
                }
            }
        }
        ensure(
            seen.len() == 1,
            format!("formula {fi}: heights vary across models: {seen:?}"),
        )?;
        max_height = max_height.max(seen.into_iter().next().unwrap_or(0));
    }
    Ok(format!(
        "20 formulas x 20 models: heights constant (max {max_height})"
    ))
}

/// Criterion 8: meeting-of-minds verdicts at bound 6 match expectation
/// for every shipped ledger, and every derived assent replays through
/// the proof kernel.
fn c08_saturation() -> Result<String, String> {
    let limits = Limits::default();
    let terms_f = Formula::atom("shares-recorded").imp(Formula::atom("owns-shares"));
    let cases: Vec<(&str, Ledger, Vec<&str>, Formula, bool)> = vec![
        ("counterpart", corpus::counterpart_ledger(), vec!["A", "B"], p(), true),
        ("offer", corpus::offer_ledger(), vec!["A", "B"], p(), true),
        ("chain3", corpus::chain_ledger(3), vec!["A", "B", "C"], p(), true),
        ("chain4", corpus::chain_ledger(4), vec!["A", "B", "C", "D"], p(), true),
        ("nparty3", corpus::nparty3_ledger(), vec!["A", "B", "C"], p(), true),
        ("acme", corpus::acme_ledger(), vec!["A", "B"], terms_f, true),
        ("naive", corpus::naive_ledger(), vec!["A", "B"], p(), false),
    ];
    let total = cases.len();
    let mut replayed = 0;
    for (name, ledger, parties, goal, want) in cases {
        let group = AgentSet::of(parties);
        let report = meeting_of_minds(&ledger, &group, &goal, 6, &limits);
        ensure(
            report.holds == want,
            format!("{name}: holds {}, want {want}", report.holds),
        )?;
        for assent in report.saturation.assents() {
            let id = assent.fact.id;
            match replay_and_check(&report.saturation, id, &limits) {
                Verdict::Accept => replayed += 1,
                v => return Err(format!("{name}: replay of fact {id}: {}", v.render_sexpr())),
            }
        }
    }
    Ok(format!(
        "{total} ledgers decided at bound 6; {replayed} derivation replays accepted"
    ))
}

/// Criterion 9: the entailment depth measure takes its documented values
/// on the two reference formulas.
fn c09_depths() -> Result<String, String> {
    let flat = Formula::entails(p(), p());
    let d1 = flat.entailment_depth();
    ensure(d1 == 2, format!("depth of (|= p p) is {d1}, want 2"))?;
    let nested = Formula::entails(flat, p());
    let d2 = nested.entailment_depth();
    ensure(d2 == 3, format!("depth of (|= (|= p p) p) is {d2}, want 3"))?;
    Ok("flat entailment depth 2, nested depth 3".into())
}

/// Criterion 10: printing and reparsing is the identity on 10000
/// generator-random terms.
fn c10_roundtrip() -> Result<String, String> {
    let lanes: Vec<u64> = (0..100).collect();
    let failures: Vec<String> = exec::map(lanes, |lane| -> Option<String> {
        let mut g = Gen::lane(0x7e57_0000, lane);
        for i in 0..100 {
            let t = g.raw_term(5);
            let printed = print_term(&t);
            match parse_term(&printed) {
                Ok(back) if back == t => {}
                Ok(_) => return Some(format!("lane {lane} item {i}: reparse differs: {printed}")),
                Err(e) => return Some(format!("lane {lane} item {i}: {e}")),
            }
        }
        None
    })
    .into_iter()
    .flatten()
    .collect();
    first_failure(failures)?;
    Ok("10000 terms round-trip exactly".into())
}
