//! Command-line interface: one subcommand per pipeline stage.
//!
//! Results go to standard output, diagnostics to standard error.  Exit
//! codes: 0 for success (true / accept / all checks pass), 1 for a failed
//! check (false / reject / constraint violations / no meeting of minds),
//! 2 for usage, file, or parse errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser as CliParser, Subcommand};

use crate::corpus::{run_scenario, scenarios, ScenarioReport};
use crate::hilbert::{check_proof, Verdict};
use crate::kripke::{extend_fixpoint, validate_model, Model};
use crate::limits::Limits;
use crate::sat::{eval, Evaluator};
use crate::saturate::saturate;
use crate::surface::{
    detect_kind, parse_formula, parse_formulas, parse_ledger, parse_model, parse_proof,
    parse_term, print_ledger, print_model, print_proof, FileKind, ParseError,
};
use crate::syntax::{AgentName, AgentSet};

/// Everything a command run produces, so callers (and tests) can decide
/// what to do with the streams.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn with_code(code: i32, stdout: String) -> Self {
        Outcome {
            code,
            stdout,
            stderr: String::new(),
        }
    }
}

#[derive(CliParser, Debug)]
#[command(
    name = "countersign",
    version,
    about = "Check models, proofs, and ledgers of the signing calculus"
)]
struct Cli {
    /// Machine-readable s-expression output.
    #[arg(long, global = true)]
    sexpr: bool,

    /// Cap on worlds per model.
    #[arg(long, global = true, value_name = "N")]
    max_worlds: Option<usize>,

    /// Cap on agents per model.
    #[arg(long, global = true, value_name = "N")]
    max_agents: Option<usize>,

    /// Cap on evaluation and parser recursion depth.
    #[arg(long, global = true, value_name = "N")]
    recursion_limit: Option<u32>,

    /// Cap on distinct letters in a tautology check.
    #[arg(long, global = true, value_name = "N")]
    taut_letters: Option<u32>,

    /// Default saturation round bound.
    #[arg(long, global = true, value_name = "N")]
    saturation_bound: Option<u32>,

    /// Cap on reported derivation chain length.
    #[arg(long, global = true, value_name = "N")]
    chain_cap: Option<u32>,

    #[command(subcommand)]
    command: Cmd,
}

impl Cli {
    /// Flags override the `COUNTERSIGN_*` environment, which overrides
    /// the defaults.
    fn limits(&self) -> Limits {
        let mut l = Limits::from_env();
        if let Some(v) = self.max_worlds {
            l.max_worlds = v;
        }
        if let Some(v) = self.max_agents {
            l.max_agents = v;
        }
        if let Some(v) = self.recursion_limit {
            l.recursion_limit = v;
        }
        if let Some(v) = self.taut_letters {
            l.taut_letters = v;
        }
        if let Some(v) = self.saturation_bound {
            l.saturation_bound = v;
        }
        if let Some(v) = self.chain_cap {
            l.chain_cap = v;
        }
        l
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Reprint a model, proof, ledger, formula, or term file canonically.
    Fmt { file: PathBuf },

    /// Validate a model against the semantic constraints.
    CheckModel { file: PathBuf },

    /// Evaluate a formula at a world of a model.
    Eval {
        file: PathBuf,
        /// World name, as declared in the model.
        #[arg(long)]
        world: String,
        /// Formula to evaluate, inline.
        #[arg(long)]
        formula: String,
        /// Print the full judgment tree and its height.
        #[arg(long)]
        trace: bool,
    },

    /// Extend the entailment relation over a file of query formulas.
    ExtendEntails {
        file: PathBuf,
        /// File holding the query formulas.
        #[arg(long)]
        queries: PathBuf,
    },

    /// Check a proof script against the kernel.
    CheckProof { file: PathBuf },

    /// Saturate a ledger; with a goal, decide a meeting of the minds.
    Saturate {
        file: PathBuf,
        /// Round bound (defaults to the saturation-bound limit).
        #[arg(long, value_name = "N")]
        bound: Option<u32>,
        /// Goal formula, inline.
        #[arg(long, requires = "parties")]
        goal: Option<String>,
        /// Comma-separated parties whose assent decides the goal.
        #[arg(long, value_delimiter = ',', requires = "goal")]
        parties: Vec<String>,
    },

    /// Run one shipped scenario, or all of them.
    Scenario {
        name: Option<String>,
        /// Run every scenario in the registry.
        #[arg(long)]
        all: bool,
    },

    /// List the shipped scenarios and the stories they cover.
    ListScenarios,
}

/// Parses `argv` and runs the selected command, capturing the streams.
pub fn execute<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.exit_code() == 0 {
                Outcome::ok(rendered)
            } else {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: rendered,
                }
            };
        }
    };
    let limits = cli.limits();
    let sexpr = cli.sexpr;
    let result = match cli.command {
        Cmd::Fmt { file } => cmd_fmt(&file, &limits),
        Cmd::CheckModel { file } => cmd_check_model(&file, sexpr, &limits),
        Cmd::Eval {
            file,
            world,
            formula,
            trace,
        } => cmd_eval(&file, &world, &formula, trace, sexpr, &limits),
        Cmd::ExtendEntails { file, queries } => {
            cmd_extend_entails(&file, &queries, sexpr, &limits)
        }
        Cmd::CheckProof { file } => cmd_check_proof(&file, sexpr, &limits),
        Cmd::Saturate {
            file,
            bound,
            goal,
            parties,
        } => cmd_saturate(&file, bound, goal.as_deref(), &parties, sexpr, &limits),
        Cmd::Scenario { name, all } => cmd_scenario(name.as_deref(), all, sexpr, &limits),
        Cmd::ListScenarios => cmd_list_scenarios(sexpr),
    };
    result.unwrap_or_else(|message| Outcome {
        code: 2,
        stdout: String::new(),
        stderr: message + "\n",
    })
}

/// Entry point for the binary: prints the captured streams and returns
/// the exit code.
pub fn main_entry() -> i32 {
    let out = execute(std::env::args_os());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn at(path: &Path, e: ParseError) -> String {
    format!("{}: {e}", path.display())
}

fn load_model(path: &Path, limits: &Limits) -> Result<Model, String> {
    parse_model(&read(path)?, limits).map_err(|e| at(path, e))
}

fn cmd_fmt(path: &Path, limits: &Limits) -> Result<Outcome, String> {
    let text = read(path)?;
    let out = match detect_kind(&text) {
        FileKind::Model => print_model(&parse_model(&text, limits).map_err(|e| at(path, e))?),
        FileKind::Proof => print_proof(&parse_proof(&text).map_err(|e| at(path, e))?),
        FileKind::Ledger => print_ledger(&parse_ledger(&text).map_err(|e| at(path, e))?),
        FileKind::Formula => parse_formula(&text).map_err(|e| at(path, e))?.to_string(),
        FileKind::Term => parse_term(&text).map_err(|e| at(path, e))?.to_string(),
    };
    Ok(Outcome::ok(out + "\n"))
}

fn cmd_check_model(path: &Path, sexpr: bool, limits: &Limits) -> Result<Outcome, String> {
    let m = load_model(path, limits)?;
    let report = validate_model(&m, limits).map_err(|e| e.to_string())?;
    let mut out = if sexpr {
        report.render_sexpr(&m)
    } else {
        report.render_text(&m)
    };
    if !out.ends_with('\n') {
        out.push('\n');
    }
    let code = if report.is_clean() { 0 } else { 1 };
    Ok(Outcome::with_code(code, out))
}

fn cmd_eval(
    path: &Path,
    world: &str,
    formula: &str,
    trace: bool,
    sexpr: bool,
    limits: &Limits,
) -> Result<Outcome, String> {
    let m = load_model(path, limits)?;
    let f = parse_formula(formula).map_err(|e| format!("--formula: {e}"))?;
    let w = m
        .world_id(world)
        .ok_or_else(|| format!("unknown world `{world}`"))?;
    if trace {
        let mut ev = Evaluator::new(&m, limits.clone());
        ev.prepare(std::slice::from_ref(&f), true)
            .map_err(|e| e.to_string())?;
        let tr = ev.eval_traced(w, &f, false).map_err(|e| e.to_string())?;
        let out = if sexpr {
            format!(
                "(eval {} (height {}) {})\n",
                tr.value,
                tr.height,
                tr.render_sexpr(&m)
            )
        } else {
            format!("{}\n{}\nheight {}\n", tr.value, tr.render_sexpr(&m), tr.height)
        };
        let code = if tr.value { 0 } else { 1 };
        return Ok(Outcome::with_code(code, out));
    }
    let value = eval(&m, w, &f, limits).map_err(|e| e.to_string())?;
    let out = if sexpr {
        format!("(eval {value})\n")
    } else {
        format!("{value}\n")
    };
    Ok(Outcome::with_code(if value { 0 } else { 1 }, out))
}

fn cmd_extend_entails(
    path: &Path,
    queries_path: &Path,
    sexpr: bool,
    limits: &Limits,
) -> Result<Outcome, String> {
    let m = load_model(path, limits)?;
    let queries =
        parse_formulas(&read(queries_path)?).map_err(|e| at(queries_path, e))?;
    if queries.is_empty() {
        return Err(format!("{}: no query formulas", queries_path.display()));
    }
    let closure = extend_fixpoint(&m, &queries, limits).map_err(|e| e.to_string())?;
    let mut out = String::new();
    if sexpr {
        out.push_str("(entails-closure");
        for q in &queries {
            let worlds: Vec<&str> = closure
                .worlds_of(q)
                .iter()
                .map(|&w| m.world_name(w))
                .collect();
            out.push_str(&format!("\n  (row {q} (worlds {}))", worlds.join(" ")));
        }
        out.push_str(")\n");
    } else {
        for q in &queries {
            let worlds: Vec<&str> = closure
                .worlds_of(q)
                .iter()
                .map(|&w| m.world_name(w))
                .collect();
            if worlds.is_empty() {
                out.push_str(&format!("{q}: (no worlds)\n"));
            } else {
                out.push_str(&format!("{q}: {}\n", worlds.join(" ")));
            }
        }
    }
    Ok(Outcome::ok(out))
}

fn cmd_check_proof(path: &Path, sexpr: bool, limits: &Limits) -> Result<Outcome, String> {
    let script = parse_proof(&read(path)?).map_err(|e| at(path, e))?;
    let verdict = check_proof(&script, limits);
    let (code, text) = match &verdict {
        Verdict::Accept => (0, "accept".to_string()),
        Verdict::Reject { line, reason } => (1, format!("reject line {line} ({reason})")),
    };
    let out = if sexpr {
        verdict.render_sexpr() + "\n"
    } else {
        text + "\n"
    };
    Ok(Outcome::with_code(code, out))
}

fn cmd_saturate(
    path: &Path,
    bound: Option<u32>,
    goal: Option<&str>,
    parties: &[String],
    sexpr: bool,
    limits: &Limits,
) -> Result<Outcome, String> {
    let ledger = parse_ledger(&read(path)?).map_err(|e| at(path, e))?;
    let bound = bound.unwrap_or(limits.saturation_bound);
    if let Some(goal_text) = goal {
        let goal = parse_formula(goal_text).map_err(|e| format!("--goal: {e}"))?;
        let group = AgentSet::new(parties.iter().map(AgentName::new).collect())
            .map_err(|e| format!("--parties: {e}"))?;
        let report = crate::saturate::meeting_of_minds(&ledger, &group, &goal, bound, limits);
        let out = if sexpr {
            report.render_sexpr() + "\n"
        } else {
            let mut t = format!(
                "meeting of minds on {}: {}\n",
                report.goal,
                if report.holds { "reached" } else { "not reached" }
            );
            for (agent, id) in &report.found {
                t.push_str(&format!("  {agent} assents (fact {id})\n"));
            }
            if !report.missing.is_empty() {
                let names: Vec<&str> = report.missing.iter().map(|a| a.as_str()).collect();
                t.push_str(&format!("  missing: {}\n", names.join(" ")));
            }
            t.push_str(&format!("rounds {}\n", report.saturation.rounds()));
            t
        };
        return Ok(Outcome::with_code(if report.holds { 0 } else { 1 }, out));
    }
    let sat = saturate(&ledger, bound, limits);
    let out = if sexpr {
        sat.render_assents() + "\n"
    } else {
        let mut t = String::new();
        for assent in sat.assents() {
            t.push_str(&format!("{} says {}\n", assent.agent, assent.formula));
        }
        t.push_str(&format!("rounds {}\n", sat.rounds()));
        if sat.bound_exceeded() {
            t.push_str("round bound exceeded before saturation\n");
        }
        t
    };
    Ok(Outcome::ok(out))
}

fn cmd_scenario(
    name: Option<&str>,
    all: bool,
    sexpr: bool,
    limits: &Limits,
) -> Result<Outcome, String> {
    let reports: Vec<ScenarioReport> = match (name, all) {
        (Some(_), true) => return Err("pass a scenario name or --all, not both".to_string()),
        (None, false) => return Err("pass a scenario name or --all".to_string()),
        (Some(n), false) => vec![run_scenario(n, limits).map_err(|e| e.to_string())?],
        (None, true) => scenarios().iter().map(|s| s.run(limits)).collect(),
    };
    let mut out = String::new();
    for r in &reports {
        if sexpr {
            out.push_str(&r.render_sexpr());
            out.push('\n');
        } else {
            out.push_str(&r.render_text());
        }
    }
    let code = if reports.iter().all(|r| r.all_pass()) {
        0
    } else {
        1
    };
    Ok(Outcome::with_code(code, out))
}

fn cmd_list_scenarios(sexpr: bool) -> Result<Outcome, String> {
    let mut out = String::new();
    if sexpr {
        out.push_str("(scenarios");
        for def in scenarios() {
            out.push_str(&format!(
                "\n  (scenario {} (covers {}))",
                def.name,
                def.covers.join(" ")
            ));
        }
        out.push_str(")\n");
    } else {
        for def in scenarios() {
            out.push_str(&format!("{}: {}\n", def.name, def.covers.join(" ")));
        }
    }
    Ok(Outcome::ok(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::artifact_files;

    fn run(args: &[&str]) -> Outcome {
        execute(args.iter().map(|s| s.to_string()))
    }

    fn data(name: &str) -> String {
        format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn fmt_reprints_shipped_files_byte_identically() {
        for (name, text) in artifact_files() {
            let out = run(&["countersign", "fmt", &data(name)]);
            assert_eq!(out.code, 0, "{name}: {}", out.stderr);
            assert_eq!(out.stdout, text, "fmt is not canonical on {name}");
        }
    }

    #[test]
    fn eval_reports_value_and_exit_code() {
        let model = data("example1.model");
        let out = run(&[
            "countersign",
            "eval",
            &model,
            "--world",
            "w0",
            "--formula",
            "(says A p)",
        ]);
        assert_eq!(out.stdout, "false\n");
        assert_eq!(out.code, 1);
        let out = run(&[
            "countersign",
            "eval",
            &model,
            "--world",
            "w1",
            "--formula",
            "p",
        ]);
        assert_eq!(out.stdout, "true\n");
        assert_eq!(out.code, 0);
    }

    #[test]
    fn eval_trace_prints_judgments_and_height() {
        let out = run(&[
            "countersign",
            "eval",
            &data("example1.model"),
            "--world",
            "w1",
            "--formula",
            "(and p (says A p))",
            "--trace",
        ]);
        assert_eq!(out.code, 1);
        assert!(out.stdout.starts_with("false\n"), "{}", out.stdout);
        assert!(out.stdout.contains("(judgment w1"));
        assert!(out.stdout.contains("\nheight "));
    }

    #[test]
    fn check_model_passes_shipped_models() {
        for name in ["example1.model", "oneworld.model"] {
            let out = run(&["countersign", "check-model", &data(name)]);
            assert_eq!(out.code, 0, "{name}: {}", out.stderr);
        }
    }

    #[test]
    fn check_proof_accepts_and_renders_both_formats() {
        let path = data("counterparts-close.proof");
        let out = run(&["countersign", "check-proof", &path]);
        assert_eq!(out.code, 0);
        assert_eq!(out.stdout, "accept\n");
        let out = run(&["countersign", "check-proof", &path, "--sexpr"]);
        assert_eq!(out.stdout, "(verdict accept)\n");
    }

    #[test]
    fn check_proof_rejects_with_line_number() {
        let path = std::env::temp_dir().join(format!(
            "countersign-cli-bad-{}.proof",
            std::process::id()
        ));
        std::fs::write(&path, "(proof (goal p)\n  (line 1 p (ax2)))\n").unwrap();
        let out = run(&["countersign", "check-proof", path.to_str().unwrap()]);
        std::fs::remove_file(&path).ok();
        assert_eq!(out.code, 1);
        assert!(out.stdout.starts_with("reject line 1"), "{}", out.stdout);
    }

    #[test]
    fn saturate_decides_meetings() {
        let out = run(&[
            "countersign",
            "saturate",
            &data("offer.ledger"),
            "--goal",
            "p",
            "--parties",
            "A,B",
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert!(out.stdout.contains("reached"));
        let out = run(&[
            "countersign",
            "saturate",
            &data("naive.ledger"),
            "--goal",
            "p",
            "--parties",
            "A,B",
        ]);
        assert_eq!(out.code, 1);
        assert!(out.stdout.contains("not reached"));
    }

    #[test]
    fn saturate_lists_assents_without_goal() {
        let out = run(&["countersign", "saturate", &data("offer.ledger")]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("A says"));
        assert!(out.stdout.contains("rounds"));
    }

    #[test]
    fn extend_entails_prints_the_restriction() {
        let path = std::env::temp_dir().join(format!(
            "countersign-cli-queries-{}.sx",
            std::process::id()
        ));
        std::fs::write(&path, "p\n(says A p)\n").unwrap();
        let out = run(&[
            "countersign",
            "extend-entails",
            &data("example1.model"),
            "--queries",
            path.to_str().unwrap(),
        ]);
        std::fs::remove_file(&path).ok();
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert!(out.stdout.contains("p: w1"), "{}", out.stdout);
        assert!(out.stdout.contains("(says A p): (no worlds)"), "{}", out.stdout);
    }

    #[test]
    fn scenario_commands_run_and_list() {
        let out = run(&["countersign", "list-scenarios"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("offer-acceptance"));
        let out = run(&["countersign", "scenario", "naive-counterparts"]);
        assert_eq!(out.code, 0, "{}", out.stdout);
        let out = run(&["countersign", "scenario", "--all", "--sexpr"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("(scenario smart-contract"));
    }

    #[test]
    fn usage_and_parse_errors_exit_two() {
        assert_eq!(run(&["countersign", "frobnicate"]).code, 2);
        assert_eq!(run(&["countersign", "scenario"]).code, 2);
        assert_eq!(run(&["countersign", "scenario", "no-such"]).code, 2);
        assert_eq!(
            run(&["countersign", "eval", &data("example1.model"), "--world", "w0"]).code,
            2
        );
        let path = std::env::temp_dir().join(format!(
            "countersign-cli-garble-{}.model",
            std::process::id()
        ));
        std::fs::write(&path, "(model (worlds w w))\n").unwrap();
        let out = run(&["countersign", "check-model", path.to_str().unwrap()]);
        std::fs::remove_file(&path).ok();
        assert_eq!(out.code, 2);
        assert!(out.stderr.contains("parse error"), "{}", out.stderr);
    }

    #[test]
    fn limit_flags_override_defaults() {
        let out = run(&[
            "countersign",
            "saturate",
            &data("chain4.ledger"),
            "--goal",
            "p",
            "--parties",
            "A,B,C,D",
            "--saturation-bound",
            "2",
        ]);
        assert_eq!(out.code, 1, "a two-round bound cannot close the chain");
    }
}
