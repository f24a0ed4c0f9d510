//! A workbench for a modal logic of signed statements.
//!
//! The language couples an objective judgment `t entails f` ("term `t`
//! commits its signer to formula `f`") with agent attitudes `A signs t`
//! (a record-level act) and `A says f` (the induced assertion), plus a
//! self-reference binder `this` for contracts that quote themselves and
//! group modalities `saysk`/`mutual` for iterated and common assent.
//!
//! The crate provides, layer by layer:
//!
//! * [`syntax`] — terms and formulas, substitution, depth measures,
//!   canonical printing, and normalization of derived connectives;
//! * [`surface`] — an s-expression reader/printer for formulas, models,
//!   proofs, and signature ledgers, with source spans on errors;
//! * [`kripke`] — models, the three coherence constraints on signing and
//!   saying, and the stratified closure of the entailment relation;
//! * [`sat`] — the satisfaction relation, bounded-recursion evaluation
//!   with tracing, and the reachability semantics for group assent;
//! * [`hilbert`] — a proof-checking kernel for the axiom system plus a
//!   script builder used to assemble derivations programmatically;
//! * [`saturate`] — forward closure of a signature ledger under the
//!   assent rules, with replayable derivation chains;
//! * [`corpus`] — bundled scenarios (models, ledgers, proof scripts)
//!   with expected verdicts;
//! * [`gen`] — seeded random generators for terms, formulas, models,
//!   and axiom instances, shared by tests and benches;
//! * [`cli`] — the command-line interface.
//!
//! Batch entry points (`eval_batch`, `validate_model`, `extend_fixpoint`,
//! `saturate`) run data-parallel when the default `parallel` feature is
//! enabled and have `_seq` variants that always run sequentially.

pub mod cli;
pub mod corpus;
pub mod exec;
pub mod gen;
pub mod hilbert;
pub mod kripke;
pub mod limits;
pub mod sat;
pub mod saturate;
pub mod surface;
pub mod syntax;
