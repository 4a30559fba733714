//! Property suites. Each returns a report whose `failures` must be empty.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bridge::{encode_tm, encode_ty, CORPUS};
use crate::eval::{eval_closed, BindKind, EvalConfig, Outcome, RtEnv, Value};
use crate::judgment::{on_big_stack, CheckConfig, Mutations, Verdict};
use crate::runtime::check::RtChecker;
use crate::runtime::{consistent, AbsEnv, Precision};
use crate::smallstep::{agrees, run_smallstep, Halt, RunOutcome};
use crate::statics::{replay, subtype, typecheck, Checker};
use crate::syntax::{parse_term, parse_type, parse_type_in, CalculusLevel as L, CtxEntry, Name, Names, Tm, Ty, TypingCtx, VarRef};

use super::gallery::BAD_BOUNDS_PROGRAMS;
use super::gen::{random_term, types_in, well_typed, Kind};
use super::{check_terms, GenConfig};

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    /// Cases where a checker ran out of fuel; not failures.
    pub unknown: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> SuiteReport {
        SuiteReport { name: name.to_string(), ..SuiteReport::default() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, what: String) {
        self.failures.push(what);
    }
}

fn tyval(env: &RtEnv, t: Ty) -> Value {
    Value::TyClosure { env: env.clone(), ty: t }
}

fn identity() -> Value {
    Value::Closure { env: RtEnv::new(), annot: Ty::Top, body: Arc::new(Tm::Var(VarRef::Bound(0))) }
}

/// Runtime environments of at most two bindings: type values (the second
/// may select from the first) and a closure.
fn small_envs(level: L) -> Vec<RtEnv> {
    let e = RtEnv::new();
    let mut firsts = vec![tyval(&e, Ty::Top), identity()];
    if level.has_bot() {
        firsts.push(tyval(&e, Ty::Bot));
    }
    let mut out = vec![e.clone()];
    for v in &firsts {
        let h1 = e.extend(v.clone(), BindKind::Unknown);
        out.push(h1.clone());
        let mut seconds = firsts.clone();
        seconds.push(tyval(&h1, Ty::sel(VarRef::term(0), crate::syntax::Label::type_label())));
        for w in seconds {
            out.push(h1.extend(w, BindKind::Unknown));
        }
    }
    out
}

fn verdict(r: Result<Option<crate::judgment::Deriv>, crate::judgment::Stop>, c: &RtChecker<'_>) -> Verdict {
    c.st.finish(r).verdict
}

/// The three runtime subtyping relations prove the same pairs.
pub fn pushback_equivalence(level: L, max_ty: usize, cfg: &CheckConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("pushback equivalence");
    let envs = small_envs(level);
    let names = Names::default();
    on_big_stack(|| {
        for h1 in &envs {
            let t1s = types_in(level, &vec![Kind::Term; h1.len()], &[], max_ty);
            for h2 in &envs {
                let t2s = types_in(level, &vec![Kind::Term; h2.len()], &[], max_ty);
                for a in &t1s {
                    for b in &t2s {
                        rep.cases += 1;
                        let mut vs = Vec::new();
                        for mode in [Precision::Imprecise, Precision::PreciseLookup, Precision::Invertible] {
                            let mut c = RtChecker::new(Checker::new(level, cfg), &[]);
                            let r = c.dyn_sub(&AbsEnv::new(), h1, a, h2, b, mode);
                            vs.push(verdict(r, &c));
                        }
                        if vs.contains(&Verdict::Unknown) {
                            rep.unknown += 1;
                        } else if vs.iter().any(|v| *v != vs[0]) {
                            rep.fail(format!("H{} {} <: H{} {}: {vs:?}", h1.len(), a.show(&names), h2.len(), b.show(&names)));
                        }
                    }
                }
            }
        }
    });
    rep
}

/// Static typing contexts paired with runtime environments and abstract
/// environments; only consistent triples are kept.
fn consistent_triples(level: L, max_bind_ty: usize, cfg: &CheckConfig) -> Vec<(TypingCtx, RtEnv, AbsEnv)> {
    let mut out = Vec::new();
    let mut frontier = vec![(TypingCtx::new(), RtEnv::new())];
    for _depth in 0..3 {
        let mut next = Vec::new();
        for (g, h) in &frontier {
            let k = h.len();
            let tys = types_in(level, &vec![Kind::Term; k], &[], max_bind_ty);
            let mut vals = vec![tyval(h, Ty::Top), identity()];
            if level.has_bot() {
                vals.push(tyval(h, Ty::Bot));
            }
            if k > 0 {
                vals.push(tyval(h, Ty::sel(VarRef::term(k - 1), crate::syntax::Label::type_label())));
            }
            for v in &vals {
                for t in &tys {
                    let mut g2 = g.clone();
                    g2.push_term(CtxEntry::term(t.clone()));
                    let h2 = h.extend(v.clone(), BindKind::Annot(t.clone()));
                    next.push((g2, h2));
                }
            }
        }
        // keep the consistent ones, and a bounded number to extend further
        let kept: Vec<_> = on_big_stack(|| {
            next.into_iter()
                .filter(|(g, h)| {
                    let mut c = RtChecker::new(Checker::new(level, cfg), &[]);
                    let r = consistent(&mut c, g, h, &AbsEnv::new());
                    verdict(r, &c) == Verdict::Proved
                })
                .collect()
        });
        out.extend(kept.iter().cloned());
        frontier = kept.into_iter().step_by(7).collect();
    }
    let mut with_j = Vec::new();
    for (g, h) in out.iter().take(12) {
        // one hypothetical binding z <: ⟨H, {Type <: Top}⟩
        let bound = Ty::tag(Ty::Bot, Ty::Top);
        let mut g2 = g.clone();
        let z = g2.fresh_cmp();
        g2.push_cmp_as(z, CtxEntry::term(bound.clone()));
        let mut j = AbsEnv::new();
        let zj = j.fresh();
        debug_assert_eq!(z, zj);
        j.bind(zj, h.clone(), bound);
        with_j.push((g2, h.clone(), j));
    }
    let mut all: Vec<_> = vec![(TypingCtx::new(), RtEnv::new(), AbsEnv::new())];
    all.extend(out.into_iter().map(|(g, h)| (g, h, AbsEnv::new())));
    all.extend(with_j);
    all
}

/// Every statically proved subtyping holds at runtime in a consistent
/// environment.
pub fn static_implies_dynamic(level: L, max_ty: usize, cfg: &CheckConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("static implies dynamic");
    let names = Names::default();
    let triples = consistent_triples(level, max_ty, cfg);
    on_big_stack(|| {
        for (g, h, j) in &triples {
            let mut tys = types_in(level, &vec![Kind::Term; h.len()], &[], max_ty);
            if !j.is_empty() {
                let z = Ty::sel(VarRef::Free(Name::Cmp(0)), crate::syntax::Label::type_label());
                tys.push(z.clone());
                tys.push(Ty::tag(Ty::Bot, z));
            }
            for s in &tys {
                for u in &tys {
                    let mut st = Checker::new(level, cfg);
                    let r = st.sub(g, s, u);
                    let sv = st.finish(r).verdict;
                    if sv != Verdict::Proved {
                        continue;
                    }
                    rep.cases += 1;
                    let mut c = RtChecker::new(Checker::new(level, cfg), &[]);
                    let r = c.dyn_sub(j, h, s, h, u, Precision::Imprecise);
                    match verdict(r, &c) {
                        Verdict::Proved => {}
                        Verdict::Unknown => rep.unknown += 1,
                        Verdict::Refuted => rep.fail(format!(
                            "|H|={} |J|={}: {} <: {} static only",
                            h.len(),
                            j.len(),
                            s.show(&names),
                            u.show(&names)
                        )),
                    }
                }
            }
        }
    });
    rep
}

/// Replacing a hypothetical type variable by an actual type value keeps
/// proved comparisons proved.
pub fn substitution_probe(instances: usize, seed: u64, cfg: &CheckConfig) -> SuiteReport {
    let level = L::FSub;
    let mut rep = SuiteReport::new("substitution probe");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arrow = parse_type(level, "Top -> Top").expect("type");
    let e = RtEnv::new();
    let envs = [
        e.clone(),
        e.extend(tyval(&e, Ty::Top), BindKind::TypeVar(Ty::Top)),
        e.extend(tyval(&e, arrow.clone()), BindKind::TypeVar(Ty::Top)),
    ];
    let names = Names::default();
    let pools: Vec<(Vec<Ty>, Vec<Ty>)> = envs
        .iter()
        .map(|h| {
            let free = vec![Kind::TyVar; h.len()];
            (types_in(level, &free, &[], 3), types_in(level, &free, &[Kind::TyVar], 4))
        })
        .collect();
    on_big_stack(|| {
        for _ in 0..instances {
            let i = rng.gen_range(0..envs.len());
            let h = &envs[i];
            let (closed, open) = &pools[i];
            let t = &closed[rng.gen_range(0..closed.len())];
            let t1 = &open[rng.gen_range(0..open.len())];
            let t2 = &open[rng.gen_range(0..open.len())];
            rep.cases += 1;
            let mut jz = AbsEnv::new();
            let z = jz.fresh();
            jz.bind(z, h.clone(), t.clone());
            let mut c = RtChecker::new(Checker::new(level, cfg), &[]);
            let r = c.dyn_sub(&jz, h, &t1.open(z.into()), h, &t2.open(z.into()), Precision::Imprecise);
            if verdict(r, &c) != Verdict::Proved {
                continue;
            }
            let hy = h.extend(tyval(h, t.clone()), BindKind::TypeVar(t.clone()));
            let y = h.next_name();
            let mut c = RtChecker::new(Checker::new(level, cfg), &[]);
            let r = c.dyn_sub(&AbsEnv::new(), &hy, &t1.open(y.into()), &hy, &t2.open(y.into()), Precision::Imprecise);
            match verdict(r, &c) {
                Verdict::Proved => {}
                Verdict::Unknown => rep.unknown += 1,
                Verdict::Refuted => rep.fail(format!(
                    "Z <: {}: {} <: {} lost after substitution",
                    t.show(&names),
                    t1.show(&names),
                    t2.show(&names)
                )),
            }
        }
    });
    rep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Value,
    Stuck,
    Divergent,
}

fn big_step_class(level: L, t: &Tm, max_fuel: u64) -> (Class, Outcome) {
    let mut last = Outcome::Timeout;
    for n in 1..=max_fuel {
        last = eval_closed(level, n, t, EvalConfig::default()).outcome;
        match last {
            Outcome::Val(_) => return (Class::Value, last),
            Outcome::Error(_) => return (Class::Stuck, last),
            Outcome::Timeout => {}
        }
    }
    (Class::Divergent, last)
}

/// The small-step machine and the interpreter agree on well-typed D<:
/// terms.
pub fn smallstep_equivalence(max_size: usize, max_fuel: u64, step_limit: usize, cfg: &CheckConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("small-step agreement");
    let names = Names::default();
    for (t, _) in well_typed(L::DSub, max_size, cfg) {
        rep.cases += 1;
        let (big, outcome) = big_step_class(L::DSub, &t, max_fuel);
        let small = run_smallstep(&t, step_limit);
        let small_class = match &small {
            RunOutcome::Halted { halt: Halt::Value(_), .. } => Class::Value,
            RunOutcome::Halted { halt: Halt::Stuck(_), .. } => Class::Stuck,
            RunOutcome::StepLimit { .. } => Class::Divergent,
        };
        if big != small_class || (big != Class::Divergent && !agrees(&outcome, &small)) {
            rep.fail(format!("{}: big-step {big:?}, small-step {small_class:?}", t.show(&names)));
        }
    }
    rep
}

fn outcome_class(level: L, t: &Tm) -> Class {
    big_step_class(level, t, 30).0
}

/// Encoding F<: into D<: preserves typing and outcomes.
pub fn bridge(max_size: usize, cfg: &CheckConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("F<: bridge");
    let g = TypingCtx::new();
    let mut programs: Vec<(Tm, Ty)> = Vec::new();
    for src in CORPUS {
        let t = match parse_term(L::FSub, src) {
            Ok(t) => t,
            Err(e) => {
                rep.fail(format!("{src}: {e}"));
                continue;
            }
        };
        match typecheck(L::FSub, &g, &t, cfg) {
            Ok(r) if r.judgment.verdict == Verdict::Proved => programs.push((t, r.ty.expect("type"))),
            _ => rep.fail(format!("{src}: corpus program does not typecheck")),
        }
    }
    programs.extend(well_typed(L::FSub, max_size, cfg));
    let names = Names::default();
    for (t, ty) in programs {
        rep.cases += 1;
        let enc = encode_tm(&t);
        let r = typecheck(L::DSubBot, &g, &enc, cfg);
        let Ok(r) = r else {
            rep.fail(format!("{}: encoding outside D<:", t.show(&names)));
            continue;
        };
        match (r.judgment.verdict, r.ty) {
            (Verdict::Proved, Some(et)) => {
                let s = subtype(L::DSubBot, &g, &et, &encode_ty(&ty), cfg).map(|j| j.verdict);
                if s != Ok(Verdict::Proved) {
                    rep.fail(format!("{}: encoded type {} not below {}", t.show(&names), et.show(&names), encode_ty(&ty).show(&names)));
                }
            }
            (Verdict::Unknown, _) => rep.unknown += 1,
            _ => rep.fail(format!("{}: encoding does not typecheck", t.show(&names))),
        }
        let a = outcome_class(L::FSub, &t);
        let b = outcome_class(L::DSubBot, &enc);
        if a != b {
            rep.fail(format!("{}: F<: {a:?}, D<: {b:?}", t.show(&names)));
        }
    }
    rep
}

/// Interpreter laws on random (possibly ill-typed) terms: no fuel means
/// timeout, and finished results do not change with more fuel.
pub fn evaluator_laws(level: L, samples: usize, max_fuel: u64, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("evaluator fuel laws");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = Names::default();
    for _ in 0..samples {
        let size = rng.gen_range(1..=10);
        let t = random_term(level, &mut rng, size);
        rep.cases += 1;
        let mut done: Option<Outcome> = None;
        for n in 0..=max_fuel {
            let o = eval_closed(level, n, &t, EvalConfig::default()).outcome;
            if n == 0 && o != Outcome::Timeout {
                rep.fail(format!("{}: finished with no fuel", t.show(&names)));
            }
            match (&done, &o) {
                (Some(d), o) if d != o => {
                    rep.fail(format!("{}: result changed at fuel {n}", t.show(&names)));
                    break;
                }
                (None, Outcome::Val(_) | Outcome::Error(_)) => done = Some(o),
                _ => {}
            }
        }
    }
    rep
}

/// A closure stored in the cell it reads through.
pub const CYCLIC_STORE: &str =
    "(fun(r: Ref (all(x: Top) Top)) (fun(u: Top) !r) (r := (fun(y: Top) (!r) y))) (ref (fun(x: Top) x))";

/// The cyclic-store program and the exhaustive soundness suite at the
/// level with references, with the store audited at every access.
pub fn mutable_references(max_size: usize, max_fuel: u64, cfg: &CheckConfig) -> SuiteReport {
    let level = L::DSubBotAndOrRecFixMut;
    let mut rep = SuiteReport::new("mutable references");
    let t = parse_term(level, CYCLIC_STORE).expect("cyclic store program");
    let typed = typecheck(level, &TypingCtx::new(), &t, cfg).expect("gated");
    let (Verdict::Proved, Some(term), Some(ty)) = (typed.judgment.verdict, typed.term, typed.ty) else {
        rep.fail("cyclic store program does not typecheck".into());
        return rep;
    };
    let run = eval_closed(level, 100, &term, EvalConfig { audit: true, ..EvalConfig::default() });
    if !matches!(run.outcome, Outcome::Val(_)) || run.store.is_empty() {
        rep.fail("cyclic store program did not produce a value through the store".into());
    }
    let mut terms = vec![(term, ty)];
    terms.extend(well_typed(level, max_size, cfg));
    let s = check_terms(level, &terms, max_fuel, cfg);
    rep.cases = s.terms_tested;
    rep.unknown = s.unknown;
    for v in s.violations {
        rep.fail(format!("{} at fuel {}: {} ({})", v.term, v.fuel, v.check, v.result));
    }
    rep
}

/// Subtyping queries whose traces exercise unpacking, checked with the
/// independent replay validator.
fn replay_failures(cfg: &CheckConfig) -> Vec<String> {
    let mut out = Vec::new();
    let traced = CheckConfig { trace: true, ..*cfg };
    // static: x : rec(s) {A : Bot..Top} & {B : s.A..s.A}, plus one comparison binding
    let xt = parse_type(L::Dot, "rec(s) { A : Bot .. Top } & { B : s.A .. s.A }").expect("type");
    let mut g = TypingCtx::from_terms(vec![CtxEntry::term(xt)]);
    g.push_cmp(CtxEntry::term(Ty::Top));
    let xs = ["x".to_string()];
    let xb = parse_type_in(L::Dot, "x.B", &xs).expect("type");
    let xa = parse_type_in(L::Dot, "x.A", &xs).expect("type");
    if let Ok(j) = subtype(L::Dot, &g, &xb, &xa, &traced) {
        if let Some(d) = &j.trace {
            if let Err(e) = replay(d) {
                out.push(format!("static unpacking trace: {e}"));
            }
        }
    }
    // runtime: x = new { A = {l : Top} };  m(y:Top): x.A <: m(y:Top): {l : Top}
    let obj = Value::Obj {
        env: RtEnv::new(),
        decls: Arc::new(vec![crate::syntax::Decl::type_eq(
            crate::syntax::Label::ty("A"),
            parse_type(L::Dot, "{ l : Top }").expect("type"),
        )]),
        is_record: false,
        fields: None,
    };
    let h = RtEnv::new().extend(obj, BindKind::Unknown);
    let s = parse_type_in(L::Dot, "m(y: Top): x.A", &xs).expect("type");
    let u = parse_type_in(L::Dot, "m(y: Top): { l : Top }", &xs).expect("type");
    if let Ok(j) = crate::runtime::dyn_subtype(L::Dot, &[], &AbsEnv::new(), (&h, &s), (&h, &u), Precision::Imprecise, &traced) {
        if let Some(d) = &j.trace {
            if let Err(e) = replay(d) {
                out.push(format!("runtime unpacking trace: {e}"));
            }
        }
    }
    // typing traces of the bridge corpus
    for src in CORPUS.iter().take(5) {
        let t = parse_term(L::FSub, src).expect("corpus");
        if let Ok(r) = typecheck(L::FSub, &TypingCtx::new(), &t, &traced) {
            if let Some(d) = &r.judgment.trace {
                if let Err(e) = replay(d) {
                    out.push(format!("{src}: {e}"));
                }
            }
        }
    }
    out
}

/// Replay of random proved subtyping traces.
pub fn replay_fuzz(samples: usize, seed: u64, cfg: &CheckConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("trace replay");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traced = CheckConfig { trace: true, ..*cfg };
    let xt = parse_type(L::Dot, "rec(s) { A : Bot .. Top } & { B : s.A .. s.A } & { l : { A : Bot .. Top } }").expect("type");
    let g = TypingCtx::from_terms(vec![CtxEntry::term(xt)]);
    let tys = types_in(L::Dot, &[Kind::Term], &[], 3);
    let names = Names::default();
    for f in replay_failures(cfg) {
        rep.fail(f);
    }
    on_big_stack(|| {
        let mut proved = 0;
        let mut tries = 0;
        while proved < samples && tries < samples * 50 {
            tries += 1;
            let s = &tys[rng.gen_range(0..tys.len())];
            let u = &tys[rng.gen_range(0..tys.len())];
            let mut c = Checker::new(L::Dot, &traced);
            let r = c.sub(&g, s, u);
            let j = c.finish(r);
            if let (Verdict::Proved, Some(d)) = (j.verdict, &j.trace) {
                proved += 1;
                rep.cases += 1;
                if let Err(e) = replay(d) {
                    rep.fail(format!("{} <: {}: {e}", s.show(&names), u.show(&names)));
                }
            }
        }
    });
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct MutationReport {
    pub mutation: &'static str,
    /// Failures the suites reported with the rule weakened.
    pub failures: usize,
}

/// Each weakening must be noticed by at least one suite.
pub fn mutations(cfg: &CheckConfig) -> Vec<MutationReport> {
    let cases: [(&'static str, Mutations); 3] = [
        ("no_good_bounds", Mutations { no_good_bounds: true, ..Mutations::default() }),
        ("no_unpack_guard", Mutations { no_unpack_guard: true, ..Mutations::default() }),
        ("no_ctx_restrict", Mutations { no_ctx_restrict: true, ..Mutations::default() }),
    ];
    cases
        .into_iter()
        .map(|(name, m)| {
            let mcfg = CheckConfig { mutations: m, ..*cfg };
            let mut failures = replay_failures(&mcfg).len();
            let g = TypingCtx::new();
            let programs: Vec<(Tm, Ty)> = BAD_BOUNDS_PROGRAMS
                .iter()
                .filter_map(|src| {
                    let t = parse_term(L::Dot, src).ok()?;
                    let r = typecheck(L::Dot, &g, &t, &mcfg).ok()?;
                    match (r.judgment.verdict, r.term, r.ty) {
                        (Verdict::Proved, Some(t), Some(ty)) => Some((t, ty)),
                        _ => None,
                    }
                })
                .collect();
            failures += check_terms(L::Dot, &programs, 30, &mcfg).violations.len();
            MutationReport { mutation: name, failures }
        })
        .collect()
}

/// Exhaustive soundness at one level.
pub fn soundness(level: L, max_size: usize, max_fuel: u64, cfg: &CheckConfig) -> SuiteReport {
    let r = super::soundness_fuzz(&GenConfig::exhaustive(level, max_size, max_fuel), cfg);
    let mut rep = SuiteReport::new(&format!("soundness {level}"));
    rep.cases = r.terms_tested;
    rep.unknown = r.unknown;
    for v in r.violations {
        rep.fail(format!("{} at fuel {}: {} ({})", v.term, v.fuel, v.check, v.result));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let cfg = CheckConfig::default();
        for r in [
            pushback_equivalence(L::DSubBot, 3, &cfg),
            static_implies_dynamic(L::DSubBot, 1, &cfg),
            substitution_probe(50, 1, &cfg),
            smallstep_equivalence(4, 20, 100, &cfg),
            evaluator_laws(L::DSub, 50, 10, 3),
        ] {
            assert!(r.passed(), "{}: {:?}", r.name, r.failures);
            assert!(r.cases > 0, "{}", r.name);
        }
    }

    #[test]
    fn replay_needs_no_mutation() {
        assert!(replay_failures(&CheckConfig::default()).is_empty());
    }
}
