//! Generation, the soundness fuzzer, the counterexample gallery and the
//! property suites.

pub mod gallery;
pub mod gen;
pub mod suites;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{eval_closed, EvalConfig, Outcome, StoreEvent, Value};
use crate::judgment::{CheckConfig, Verdict};
use crate::runtime::value_type;
use crate::syntax::{CalculusLevel, Names, Tm, Ty};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenMode {
    Exhaustive,
    Random,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub level: CalculusLevel,
    pub max_ast_size: usize,
    pub max_fuel: u64,
    pub seed: u64,
    pub mode: GenMode,
    /// Terms drawn in random mode.
    pub samples: usize,
}

impl GenConfig {
    pub fn exhaustive(level: CalculusLevel, max_ast_size: usize, max_fuel: u64) -> GenConfig {
        GenConfig { level, max_ast_size, max_fuel, seed: 0, mode: GenMode::Exhaustive, samples: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub term: String,
    pub fuel: u64,
    pub result: String,
    pub check: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SoundnessReport {
    pub terms_tested: usize,
    pub timeouts: usize,
    pub values_ok: usize,
    /// Value typings the checker could not decide within its fuel.
    pub unknown: usize,
    pub violations: Vec<Violation>,
}

impl SoundnessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Well-typed closed terms per the configuration, with their types.
pub fn generate(cfg: &GenConfig, check: &CheckConfig) -> Vec<(Tm, Ty)> {
    match cfg.mode {
        GenMode::Exhaustive => gen::well_typed(cfg.level, cfg.max_ast_size, check),
        GenMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let g = crate::syntax::TypingCtx::new();
            let mut out = Vec::new();
            for _ in 0..cfg.samples {
                let t = gen::random_term(cfg.level, &mut rng, cfg.max_ast_size);
                if let Ok(r) = crate::statics::typecheck(cfg.level, &g, &t, check) {
                    if let (Verdict::Proved, Some(ty)) = (r.judgment.verdict, r.ty) {
                        out.push((r.term.unwrap_or(t), ty));
                    }
                }
            }
            out
        }
    }
}

fn show_outcome(o: &Outcome) -> String {
    match o {
        Outcome::Timeout => "timeout".into(),
        Outcome::Error(e) => format!("error: {e}"),
        Outcome::Val(v) => format!("value {}", v.show()),
    }
}

/// Runs every term at every fuel up to the limit: a finished run must be a
/// value of the inferred type, and must not change when fuel grows.
pub fn check_terms(level: CalculusLevel, terms: &[(Tm, Ty)], max_fuel: u64, check: &CheckConfig) -> SoundnessReport {
    let mut rep = SoundnessReport::default();
    let eval_cfg = EvalConfig { audit: level.has_refs(), ..EvalConfig::default() };
    let names = Names::default();
    for (t, ty) in terms {
        rep.terms_tested += 1;
        let mut prev: Option<Outcome> = None;
        let mut checked: Option<Value> = None;
        for n in 1..=max_fuel {
            let run = eval_closed(level, n, t, eval_cfg);
            let fail = |check: &str, rep: &mut SoundnessReport| {
                rep.violations.push(Violation {
                    term: t.show(&names),
                    fuel: n,
                    result: show_outcome(&run.outcome),
                    check: check.to_string(),
                })
            };
            if let Some(p) = &prev {
                if !p.is_timeout() && *p != run.outcome {
                    fail("result changed under more fuel", &mut rep);
                }
            }
            match &run.outcome {
                Outcome::Timeout => rep.timeouts += 1,
                Outcome::Error(_) => fail("finished run is stuck", &mut rep),
                Outcome::Val(v) => {
                    if checked.as_ref() != Some(v) {
                        match value_type(level, run.store.typing(), &crate::eval::RtEnv::new(), v, ty, check) {
                            Ok(j) if j.verdict == Verdict::Proved => {
                                rep.values_ok += 1;
                                checked = Some(v.clone());
                            }
                            Ok(j) if j.verdict == Verdict::Unknown => rep.unknown += 1,
                            _ => fail("value does not have the static type", &mut rep),
                        }
                    }
                    if let Some(why) = audit_store(level, &run, check) {
                        fail(&why, &mut rep);
                    }
                }
            }
            prev = Some(run.outcome);
        }
    }
    rep.violations.sort();
    rep.violations.dedup();
    rep
}

/// Store typing only grows, and every cell and every written value has
/// its cell's type.
fn audit_store(level: CalculusLevel, run: &crate::eval::RunResult, check: &CheckConfig) -> Option<String> {
    let typing = run.store.typing();
    let mut last = 0;
    for ev in &run.events {
        let (loc, len) = match ev {
            StoreEvent::Alloc { loc, typing_len } => {
                if *typing_len != loc + 1 {
                    return Some(format!("allocation of {loc} did not append to the store typing"));
                }
                (*loc, *typing_len)
            }
            StoreEvent::Read { loc, typing_len } => (*loc, *typing_len),
            StoreEvent::Write { loc, value, typing_len } => {
                let (env, ty) = &typing[*loc];
                let ok = value_type(level, typing, env, value, ty, check).map(|j| j.verdict != Verdict::Refuted);
                if ok != Ok(true) {
                    return Some(format!("value written to {loc} does not have the cell type"));
                }
                (*loc, *typing_len)
            }
        };
        if len < last || loc >= len {
            return Some("store typing shrank".into());
        }
        last = len;
    }
    for (i, v) in run.store.cells().iter().enumerate() {
        let (env, ty) = &typing[i];
        if value_type(level, typing, env, v, ty, check).map(|j| j.verdict) == Ok(Verdict::Refuted) {
            return Some(format!("cell {i} does not have its store type"));
        }
    }
    None
}

/// The soundness fuzzer.
pub fn soundness_fuzz(cfg: &GenConfig, check: &CheckConfig) -> SoundnessReport {
    check_terms(cfg.level, &generate(cfg, check), cfg.max_fuel, check)
}
