//! Command-line front end: load structures and subobjects, run commutator
//! computations and verification suites, emit JSON-lines reports on stdout
//! and a human summary on stderr.
//!
//! Exit codes: 0 when nothing failed, 1 when any verification reported fail,
//! 2 on malformed input (the diagnostic names the file and the first
//! violated invariant).

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use higgins_core::commutators::{
    higgins, huq, lower_central_series, normal_closure_via_commutator, HigginsOptions, SeriesMode,
};
use higgins_core::nhsolver::{solve_lambda, VarietyPresentation};
use higgins_core::structures::{
    parse_structure, parse_subobject, CheckedStructure, Subobject,
};
use higgins_core::verify::{
    run_all, run_check, search_loop_divergence, tally, CheckName, RunOptions, Status,
    VerificationReport,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "higgins",
    about = "Exact Higgins commutator workbench for finite groups, loops and algebras",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Structure file (JSON)
    #[arg(long)]
    structure: PathBuf,
    /// Subobject files, in commutator argument order (repeatable)
    #[arg(long = "sub")]
    subs: Vec<PathBuf>,
    /// Syllable bound for group kernel-word enumeration
    #[arg(long, default_value_t = 8)]
    bound: usize,
    /// Tree-depth bound for loop term catalogs
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Write the JSON-lines report stream to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// n-ary Higgins commutator of the given subobjects
    Commutator(CommonArgs),
    /// Huq commutator of two subobjects
    Huq(CommonArgs),
    /// Normal closure, computed directly and as K v [K, X]
    Closure(CommonArgs),
    /// Lower central series
    Lcs {
        #[command(flatten)]
        common: CommonArgs,
        /// nested | unbiased | both
        #[arg(long, default_value = "both")]
        mode: String,
        /// Series length
        #[arg(long = "max-n", default_value_t = 6)]
        max_n: usize,
    },
    /// Run a named verification check (or `all`) over the bundled corpus
    Verify {
        /// Check name, or `all`
        check: String,
        #[arg(long, default_value_t = 8)]
        bound: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long = "max-n", default_value_t = 6)]
        max_n: usize,
        /// Seed for the randomized stability sampling
        #[arg(long, default_value_t = 0xC0FFEE)]
        seed: u64,
        /// Sample count per structure for the stability suite
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the sixteen-coefficient identities for a variety presentation
    NhSolve {
        /// Presentation file (JSON)
        #[arg(long)]
        presentation: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Loop-specific searches
    Loops {
        #[command(subcommand)]
        cmd: LoopsCmd,
    },
}

#[derive(Subcommand)]
enum LoopsCmd {
    /// Divergence search between the ternary Higgins lower bound and the
    /// iterated Huq chain, over given loop files or the bundled loops
    Search {
        /// Loop structure files; bundled loops when omitted
        #[arg(long = "structure")]
        structures: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalize a loop term given in prefix syntax, e.g.
    /// `(mul (var 1 0) (ldiv (var 2 0) e))`, and report deletion-triviality
    Term {
        /// File holding one term in prefix syntax
        #[arg(long)]
        file: PathBuf,
        /// Number of blocks the deletion-triviality test ranges over
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Errors that should exit with code 2: malformed input.
struct InputError(String);

fn load_structure(path: &Path) -> Result<Arc<CheckedStructure>, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("{}: cannot read: {e}", path.display())))?;
    let s = parse_structure(&text)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok(Arc::new(s))
}

fn load_subobject(
    path: &Path,
    ambient: &Arc<CheckedStructure>,
) -> Result<Subobject, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("{}: cannot read: {e}", path.display())))?;
    let gens = parse_subobject(&text, ambient)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Subobject::generate(ambient, &gens)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))
}

struct Output {
    sink: Box<dyn Write>,
}

impl Output {
    fn new(out: &Option<PathBuf>) -> anyhow::Result<Output> {
        let sink: Box<dyn Write> = match out {
            Some(path) => Box::new(
                std::fs::File::create(path)
                    .with_context(|| format!("cannot create {}", path.display()))?,
            ),
            None => Box::new(std::io::stdout()),
        };
        Ok(Output { sink })
    }

    fn line(&mut self, value: &serde_json::Value) -> anyhow::Result<()> {
        writeln!(self.sink, "{value}")?;
        Ok(())
    }
}

fn subobject_json(s: &Subobject) -> serde_json::Value {
    match s.carrier() {
        higgins_core::structures::Carrier::Elements(b) => serde_json::json!({
            "elements": b.iter().collect::<Vec<_>>(),
            "size": s.size(),
        }),
        higgins_core::structures::Carrier::Space(sp) => serde_json::json!({
            "basis": sp
                .basis()
                .iter()
                .map(|row| row.iter().map(|x| x.to_json()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "dim": s.size(),
        }),
    }
}

fn result_json(label: &str, r: &higgins_core::commutators::CommutatorResult) -> serde_json::Value {
    serde_json::json!({
        "result": label,
        "value": subobject_json(&r.value),
        "certainty": r.certainty,
        "method": r.method,
        "bound_used": r.bound_used,
    })
}

fn emit_reports(
    reports: &[VerificationReport],
    out: &Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let mut output = Output::new(out)?;
    for r in reports {
        output.line(&serde_json::from_str(&r.to_json_line())?)?;
    }
    let counts = tally(reports);
    eprintln!(
        "checks: {} pass, {} consistent, {} inconclusive, {} fail",
        counts["pass"], counts["consistent"], counts["inconclusive"], counts["fail"]
    );
    for r in reports.iter().filter(|r| r.status == Status::Fail) {
        eprintln!("FAIL {} on {}", r.check, r.instance);
    }
    Ok(if counts["fail"] > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Commutator(args) => {
            let x = match load_structure(&args.structure) {
                Ok(x) => x,
                Err(e) => return input_error(e),
            };
            let mut subs = Vec::new();
            for p in &args.subs {
                match load_subobject(p, &x) {
                    Ok(s) => subs.push(s),
                    Err(e) => return input_error(e),
                }
            }
            let opts = HigginsOptions {
                bound: args.bound,
                depth: args.depth,
            };
            let r = higgins(&x, &subs, &opts)?;
            let mut output = Output::new(&args.out)?;
            output.line(&result_json("commutator", &r))?;
            eprintln!(
                "commutator: size {} ({:?}, {})",
                r.value.size(),
                r.certainty,
                r.method
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Huq(args) => {
            let x = match load_structure(&args.structure) {
                Ok(x) => x,
                Err(e) => return input_error(e),
            };
            if args.subs.len() != 2 {
                return input_error(InputError("huq needs exactly two --sub files".into()));
            }
            let (k, l) = match (
                load_subobject(&args.subs[0], &x),
                load_subobject(&args.subs[1], &x),
            ) {
                (Ok(k), Ok(l)) => (k, l),
                (Err(e), _) | (_, Err(e)) => return input_error(e),
            };
            let opts = HigginsOptions {
                bound: args.bound,
                depth: args.depth,
            };
            let r = huq(&x, &k, &l, &opts)?;
            let mut output = Output::new(&args.out)?;
            output.line(&result_json("huq", &r))?;
            eprintln!("huq: size {} ({:?})", r.value.size(), r.certainty);
            Ok(ExitCode::SUCCESS)
        }
        Command::Closure(args) => {
            let x = match load_structure(&args.structure) {
                Ok(x) => x,
                Err(e) => return input_error(e),
            };
            if args.subs.len() != 1 {
                return input_error(InputError("closure needs exactly one --sub file".into()));
            }
            let k = match load_subobject(&args.subs[0], &x) {
                Ok(k) => k,
                Err(e) => return input_error(e),
            };
            let opts = HigginsOptions {
                bound: args.bound,
                depth: args.depth,
            };
            let direct = k.normal_closure();
            let via = normal_closure_via_commutator(&x, &k, &opts)?;
            let agree = direct == via.value;
            let mut output = Output::new(&args.out)?;
            output.line(&serde_json::json!({
                "result": "closure",
                "direct": subobject_json(&direct),
                "via_commutator": subobject_json(&via.value),
                "certainty": via.certainty,
                "agree": agree,
            }))?;
            eprintln!(
                "closure: size {} (formula agrees: {agree})",
                direct.size()
            );
            Ok(if agree || !via.certainty.is_exact() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Lcs { common, mode, max_n } => {
            let x = match load_structure(&common.structure) {
                Ok(x) => x,
                Err(e) => return input_error(e),
            };
            let opts = HigginsOptions {
                bound: common.bound,
                depth: common.depth,
            };
            let modes: Vec<(&str, SeriesMode)> = match mode.as_str() {
                "nested" => vec![("nested", SeriesMode::NestedBinary)],
                "unbiased" => vec![("unbiased", SeriesMode::UnbiasedHiggins)],
                "both" => vec![
                    ("nested", SeriesMode::NestedBinary),
                    ("unbiased", SeriesMode::UnbiasedHiggins),
                ],
                other => {
                    return input_error(InputError(format!(
                        "unknown mode {other}: expected nested|unbiased|both"
                    )))
                }
            };
            let mut output = Output::new(&common.out)?;
            for (label, m) in modes {
                let chain = lower_central_series(&x, m, max_n, &opts)?;
                let terms: Vec<serde_json::Value> = chain
                    .iter()
                    .map(|t| {
                        serde_json::json!({
                            "size": t.value.size(),
                            "certainty": t.certainty,
                        })
                    })
                    .collect();
                output.line(&serde_json::json!({
                    "result": "lcs",
                    "mode": label,
                    "terms": terms,
                }))?;
                eprintln!(
                    "lcs {label}: {}",
                    chain.iter().map(|t| t.value.size().to_string()).collect::<Vec<_>>().join(" > ")
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            check,
            bound,
            depth,
            max_n,
            seed,
            samples,
            out,
        } => {
            let run_opts = RunOptions {
                higgins: HigginsOptions { bound, depth },
                seed,
                stability_samples: samples,
                max_n,
            };
            let reports = if check == "all" {
                run_all(&run_opts)?
            } else {
                match CheckName::parse(&check) {
                    Some(c) => run_check(c, &run_opts)?,
                    None => {
                        return input_error(InputError(format!(
                            "unknown check \"{check}\"; expected one of: all, normality-criterion, \
                             normal-closure-formula, inequality, three-subobjects, n-subobjects, \
                             binary-decomposition, nilpotency-agreement, sh-nh, stability, \
                             loop-divergence"
                        )))
                    }
                }
            };
            emit_reports(&reports, &out)
        }
        Command::NhSolve { presentation, out } => {
            let text = match std::fs::read_to_string(&presentation) {
                Ok(t) => t,
                Err(e) => {
                    return input_error(InputError(format!(
                        "{}: cannot read: {e}",
                        presentation.display()
                    )))
                }
            };
            let p = match VarietyPresentation::parse(&text) {
                Ok(p) => p,
                Err(e) => {
                    return input_error(InputError(format!("{}: {e}", presentation.display())))
                }
            };
            let mut output = Output::new(&out)?;
            // over a finite field the rewriting statement is syntactic only;
            // the normality equivalence is stated for infinite fields
            let field_caveat = matches!(
                p.field,
                higgins_core::FieldSpec::Prime { .. }
            );
            if field_caveat {
                eprintln!("note: prime field; treat the outcome as a syntactic check");
            }
            match solve_lambda(&p)? {
                Some(w) => {
                    let named: serde_json::Map<String, serde_json::Value> = w
                        .named()
                        .into_iter()
                        .map(|(k, v)| (k, v.to_json()))
                        .collect();
                    output.line(&serde_json::json!({
                        "result": "nh-solve",
                        "solution": true,
                        "lambdas": named,
                        "field_caveat": field_caveat,
                    }))?;
                    eprintln!(
                        "solution found: {}",
                        w.named()
                            .iter()
                            .filter(|(_, v)| !v.is_zero())
                            .map(|(k, v)| format!("{k}={v}"))
                            .collect::<Vec<_>>()
                            .join(", ")
                    );
                }
                None => {
                    output.line(&serde_json::json!({
                        "result": "nh-solve",
                        "solution": false,
                        "field_caveat": field_caveat,
                    }))?;
                    eprintln!("no solution: the products do not rewrite into the target span");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Loops { cmd } => match cmd {
            LoopsCmd::Search {
                structures,
                depth,
                out,
            } => {
                let mut loops: Vec<(String, Arc<CheckedStructure>)> = Vec::new();
                if structures.is_empty() {
                    for name in higgins_core::corpus::loop_names() {
                        loops.push((name.to_string(), higgins_core::corpus::loop_(name)));
                    }
                } else {
                    for p in &structures {
                        let x = match load_structure(p) {
                            Ok(x) => x,
                            Err(e) => return input_error(e),
                        };
                        if x.kind() != "loop" {
                            return input_error(InputError(format!(
                                "{}: loops search needs kind=loop",
                                p.display()
                            )));
                        }
                        loops.push((p.display().to_string(), x));
                    }
                }
                let opts = HigginsOptions {
                    bound: 8,
                    depth,
                };
                let reports = search_loop_divergence(&loops, &opts)?;
                emit_reports(&reports, &out)
            }
            LoopsCmd::Term { file, blocks, out } => {
                let text = match std::fs::read_to_string(&file) {
                    Ok(t) => t,
                    Err(e) => {
                        return input_error(InputError(format!(
                            "{}: cannot read: {e}",
                            file.display()
                        )))
                    }
                };
                let term = match higgins_core::freewords::parse_loop_term(text.trim()) {
                    Ok(t) => t,
                    Err(e) => {
                        return input_error(InputError(format!("{}: {e}", file.display())))
                    }
                };
                let normal = term.normalize();
                let trivial = normal.deletion_trivial(blocks);
                let mut output = Output::new(&out)?;
                output.line(&serde_json::json!({
                    "result": "loop-term",
                    "input": term.to_string(),
                    "normal_form": normal.to_string(),
                    "deletion_trivial": trivial,
                    "blocks": blocks,
                }))?;
                eprintln!("normal form: {normal} (deletion-trivial over {blocks} blocks: {trivial})");
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}

fn input_error(e: InputError) -> anyhow::Result<ExitCode> {
    eprintln!("error: {}", e.0);
    Ok(ExitCode::from(2))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
