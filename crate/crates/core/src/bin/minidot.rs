use std::io::Read;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use minidot::bridge::encode_tm;
use minidot::eval::{eval_program, EvalConfig, Outcome};
use minidot::harness::gallery::gallery;
use minidot::harness::{soundness_fuzz, GenConfig, GenMode};
use minidot::judgment::{CheckConfig, Verdict};
use minidot::runtime::value_type;
use minidot::smallstep::{run_traced, Halt, RunOutcome};
use minidot::statics::typecheck_program;
use minidot::syntax::{parse_program, CalculusLevel, Program};

#[derive(Parser)]
#[command(name = "minidot", version, about = "Checkers and interpreters for F<:, D<: and DOT")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Calculus level, e.g. FSub, DSub, DSubBot, DOT.
    #[arg(long, global = true, default_value = "DOT", value_parser = parse_level)]
    calculus: CalculusLevel,
    /// Evaluation fuel, or checker fuel for `check`.
    #[arg(long, global = true)]
    fuel: Option<u64>,
    /// Maximum term size for `soundcheck`.
    #[arg(long, global = true, default_value_t = 5)]
    size: usize,
    /// Seed for random generation; `soundcheck` enumerates when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print derivations or machine states.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck a program.
    Check { file: String },
    /// Run a program.
    Eval { file: String },
    /// Run a program and check the result against its static type.
    Rtcheck { file: String },
    /// Encode an F<: program into D<:.
    Translate { file: String },
    /// Run a program on the small-step machine.
    Step { file: String },
    /// Soundness fuzzing.
    Soundcheck {
        /// Random terms to draw when a seed is given.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// The bad-bounds counterexamples.
    Gallery,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_level(s: &str) -> Result<CalculusLevel, String> {
    CalculusLevel::parse(s).ok_or_else(|| format!("unknown calculus `{s}`"))
}

const PASS: u8 = 0;
const FAIL: u8 = 1;
const UNKNOWN: u8 = 2;
const USAGE: u8 = 3;

fn code_of(v: Verdict) -> u8 {
    match v {
        Verdict::Proved => PASS,
        Verdict::Refuted => FAIL,
        Verdict::Unknown => UNKNOWN,
    }
}

struct Report {
    code: u8,
    verdict: String,
    fuel_used: u64,
    violations: Vec<serde_json::Value>,
    text: String,
    extra: serde_json::Value,
}

impl Report {
    fn new(code: u8, verdict: impl Into<String>, fuel_used: u64, text: String) -> Report {
        Report { code, verdict: verdict.into(), fuel_used, violations: Vec::new(), text, extra: json!({}) }
    }
}

fn read_input(file: &str) -> Result<String, String> {
    if file == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
        Ok(s)
    } else {
        std::fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))
    }
}

fn load(level: CalculusLevel, file: &str) -> Result<Program, String> {
    let src = read_input(file)?;
    parse_program(level, &src).map_err(|e| e.to_string())
}

fn check_cfg(cli: &Cli) -> CheckConfig {
    let mut cfg = CheckConfig { trace: cli.trace, ..CheckConfig::default() };
    if let (Cmd::Check { .. }, Some(f)) = (&cli.cmd, cli.fuel) {
        cfg.fuel = f;
    }
    cfg
}

fn eval_fuel(cli: &Cli) -> u64 {
    cli.fuel.unwrap_or(1000)
}

fn run(cli: &Cli) -> Result<Report, String> {
    let level = cli.calculus;
    let cfg = check_cfg(cli);
    match &cli.cmd {
        Cmd::Check { file } => {
            let p = load(level, file)?;
            let typing = typecheck_program(&p, &cfg).map_err(|e| e.to_string())?;
            let j = &typing.judgment;
            let names = p.names();
            let mut text = match (&typing.ty, j.verdict) {
                (Some(t), Verdict::Proved) => format!("{}\n", t.show(&names)),
                _ => format!("{:?}: {}\n", j.verdict, j.reason.clone().unwrap_or_else(|| "checker fuel exhausted".into())),
            };
            let mut r = Report::new(code_of(j.verdict), format!("{:?}", j.verdict), j.fuel_used, String::new());
            if let Some(d) = &j.trace {
                text.push_str(&d.render(&names));
                r.extra = json!({ "trace": d.to_json(&names) });
            }
            r.text = text;
            Ok(r)
        }
        Cmd::Eval { file } => {
            let p = load(level, file)?;
            let run = eval_program(&p, None, eval_fuel(cli), EvalConfig::default());
            let (code, verdict, text) = match &run.outcome {
                Outcome::Val(v) => (PASS, "Value", v.show()),
                Outcome::Error(e) => (FAIL, "Stuck", format!("stuck: {e}")),
                Outcome::Timeout => (UNKNOWN, "Timeout", "timeout".to_string()),
            };
            Ok(Report::new(code, verdict, run.steps, format!("{text}\n")))
        }
        Cmd::Rtcheck { file } => {
            let p = load(level, file)?;
            let typing = typecheck_program(&p, &cfg).map_err(|e| e.to_string())?;
            let (Some(prog), Some(ty)) = (&typing.program, &typing.ty) else {
                let j = &typing.judgment;
                return Ok(Report::new(code_of(j.verdict), format!("{:?}", j.verdict), j.fuel_used, "program does not typecheck\n".into()));
            };
            let run = eval_program(prog, Some(&typing.def_types), eval_fuel(cli), EvalConfig { audit: level.has_refs(), ..EvalConfig::default() });
            match &run.outcome {
                Outcome::Val(v) => {
                    let j = value_type(level, run.store.typing(), &run.env, v, ty, &cfg).map_err(|e| e.to_string())?;
                    let mut r = Report::new(code_of(j.verdict), format!("{:?}", j.verdict), run.steps, format!("{} : {}  {:?}\n", v.show(), ty.show(&prog.names()), j.verdict));
                    if j.verdict == Verdict::Refuted {
                        r.violations.push(json!({ "check": "value does not have the static type", "value": v.show() }));
                    }
                    Ok(r)
                }
                Outcome::Error(e) => {
                    let mut r = Report::new(FAIL, "Stuck", run.steps, format!("well-typed program got stuck: {e}\n"));
                    r.violations.push(json!({ "check": "finished run is stuck", "error": e.to_string() }));
                    Ok(r)
                }
                Outcome::Timeout => Ok(Report::new(UNKNOWN, "Timeout", run.steps, "timeout\n".into())),
            }
        }
        Cmd::Translate { file } => {
            if level != CalculusLevel::FSub {
                return Err("translate reads F<: programs; pass --calculus FSub".into());
            }
            let p = load(level, file)?;
            let names = p.names();
            let mut text = String::new();
            for (n, t) in &p.defs {
                text.push_str(&format!("{n} = {}\n", encode_tm(t).show(&names)));
            }
            text.push_str(&format!("{}\n", encode_tm(&p.body).show(&names)));
            Ok(Report::new(PASS, "Translated", 0, text))
        }
        Cmd::Step { file } => {
            let p = load(level, file)?;
            if !p.defs.is_empty() {
                return Err("the small-step machine runs single terms, not definitions".into());
            }
            let mut text = String::new();
            let out = run_traced(&p.body, eval_fuel(cli) as usize, |n, s| {
                if cli.trace {
                    text.push_str(&format!("-- {n}\n{}\n", s.show()));
                }
            });
            let r = match out {
                RunOutcome::Halted { halt: Halt::Value(_), state, steps } => Report::new(PASS, "Value", steps as u64, format!("{}\n", state.show())),
                RunOutcome::Halted { halt: Halt::Stuck(_), state, steps } => Report::new(FAIL, "Stuck", steps as u64, format!("stuck:\n{}\n", state.show())),
                RunOutcome::StepLimit { state } => Report::new(UNKNOWN, "StepLimit", eval_fuel(cli), format!("step limit:\n{}\n", state.show())),
            };
            Ok(Report { text: text + &r.text, ..r })
        }
        Cmd::Soundcheck { samples } => {
            let gen = GenConfig {
                level,
                max_ast_size: cli.size,
                max_fuel: cli.fuel.unwrap_or(30),
                seed: cli.seed.unwrap_or(0),
                mode: if cli.seed.is_some() { GenMode::Random } else { GenMode::Exhaustive },
                samples: *samples,
            };
            let rep = soundness_fuzz(&gen, &cfg);
            let code = if !rep.passed() { FAIL } else if rep.unknown > 0 { UNKNOWN } else { PASS };
            let text = format!(
                "{} terms, {} values checked, {} timeouts, {} unknown, {} violations\n",
                rep.terms_tested,
                rep.values_ok,
                rep.timeouts,
                rep.unknown,
                rep.violations.len()
            ) + &rep.violations.iter().map(|v| format!("  {} at fuel {}: {} ({})\n", v.term, v.fuel, v.check, v.result)).collect::<String>();
            let mut r = Report::new(code, if rep.passed() { "Pass" } else { "Violation" }, gen.max_fuel, text);
            r.violations = rep.violations.iter().map(|v| serde_json::to_value(v).expect("serializable")).collect();
            r.extra = json!({ "terms_tested": rep.terms_tested, "values_ok": rep.values_ok, "timeouts": rep.timeouts, "unknown": rep.unknown });
            Ok(r)
        }
        Cmd::Gallery => {
            let cases = gallery(&cfg);
            let mut text = String::new();
            let mut r = Report::new(PASS, "Pass", 0, String::new());
            for c in &cases {
                text.push_str(&format!("{} {}: {:?}\n", if c.passed() { "ok  " } else { "FAIL" }, c.name, c.observed));
                if !c.passed() {
                    r.code = FAIL;
                    r.verdict = "Violation".into();
                    r.violations.push(serde_json::to_value(c).expect("serializable"));
                }
            }
            r.text = text;
            Ok(r)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    match run(&cli) {
        Ok(r) => {
            match cli.format {
                Format::Text => print!("{}", r.text),
                Format::Json => {
                    let mut out = json!({ "verdict": r.verdict, "fuel_used": r.fuel_used, "violations": r.violations });
                    if let (Some(o), Some(extra)) = (out.as_object_mut(), r.extra.as_object()) {
                        o.extend(extra.clone());
                    }
                    println!("{out}");
                }
            }
            ExitCode::from(r.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}
