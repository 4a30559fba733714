use std::sync::Arc;

use super::*;
use crate::judgment::{Concl, Mutations};
use crate::statics::replay;
use crate::syntax::{parse_type_in, CtxEntry, Tm, VarRef};

use CalculusLevel as L;

fn ty(level: L, globals: &[&str], src: &str) -> Ty {
    let g: Vec<String> = globals.iter().map(|s| s.to_string()).collect();
    parse_type_in(level, src, &g).unwrap()
}

fn traced() -> CheckConfig {
    CheckConfig { trace: true, ..CheckConfig::default() }
}

fn tyval(t: Ty) -> Value {
    Value::TyClosure { env: RtEnv::new(), ty: t }
}

fn dsub(level: L, h1: &RtEnv, t1: &Ty, h2: &RtEnv, t2: &Ty, cfg: &CheckConfig) -> Judgment {
    dyn_subtype(level, &[], &AbsEnv::new(), (h1, t1), (h2, t2), Precision::Imprecise, cfg).unwrap()
}

fn replays(j: &Judgment) {
    assert_eq!(j.verdict, Verdict::Proved);
    replay(j.trace.as_ref().expect("trace")).unwrap();
}

#[test]
fn top_on_the_right() {
    let h = RtEnv::new();
    let t = ty(L::Dot, &[], "{ A : Bot .. Top }");
    let j = dsub(L::Dot, &h, &t, &h, &Ty::Top, &traced());
    replays(&j);
    assert_eq!(j.trace.unwrap().rule, "Top");
}

#[test]
fn same_type_pair() {
    let arrow = ty(L::FSub, &[], "Top -> Top");
    let h = RtEnv::new().extend(tyval(arrow), BindKind::TypeVar(Ty::Top));
    let y = Ty::FVarSub(VarRef::term(0));
    let j = dsub(L::FSub, &h, &y, &h, &y, &traced());
    replays(&j);
    assert_eq!(j.trace.unwrap().rule, "TVarSame");
}

#[test]
fn concrete_type_variables_on_both_sides() {
    let arrow = ty(L::FSub, &[], "Top -> Top");
    let h = RtEnv::new().extend(tyval(arrow.clone()), BindKind::TypeVar(Ty::Top));
    let y = Ty::FVarSub(VarRef::term(0));
    replays(&dsub(L::FSub, &h, &y, &h, &arrow, &traced()));
    replays(&dsub(L::FSub, &h, &arrow, &h, &y, &traced()));
    assert_eq!(dsub(L::FSub, &h, &Ty::Top, &h, &y, &traced()).verdict, Verdict::Refuted);
}

#[test]
fn type_value_selection_both_directions() {
    let h = RtEnv::new().extend(tyval(Ty::Top), BindKind::Annot(Ty::tag_eq(Ty::Top)));
    let sel = ty(L::DSub, &["x"], "x.Type");
    replays(&dsub(L::DSub, &h, &sel, &h, &Ty::Top, &traced()));
    let j = dsub(L::DSub, &h, &Ty::Top, &h, &sel, &traced());
    replays(&j);
    assert_eq!(j.trace.unwrap().rule, "Unpack2");
    let bot = Ty::Bot;
    let h2 = RtEnv::new().extend(tyval(bot.clone()), BindKind::Annot(Ty::tag_eq(bot)));
    assert_eq!(dsub(L::DSub, &h2, &Ty::Top, &h2, &sel, &traced()).verdict, Verdict::Refuted);
}

#[test]
fn forall_narrowing() {
    let h = RtEnv::new();
    let s = ty(L::FSub, &[], "all(Z <: Top) Z -> Z");
    let u = ty(L::FSub, &[], "all(Z <: Top -> Top) Z -> Z");
    let j = dsub(L::FSub, &h, &s, &h, &u, &traced());
    replays(&j);
    let d = j.trace.unwrap();
    assert_eq!(d.rule, "All");
    match &d.premises[1].concl {
        Concl::DynSub(c) => {
            assert_eq!(c.j.len(), 1);
            assert_eq!(c.j.entries()[0].2, ty(L::FSub, &[], "Top -> Top"));
        }
        _ => panic!("body premise"),
    }
    assert_eq!(dsub(L::FSub, &h, &u, &h, &s, &traced()).verdict, Verdict::Refuted);
}

#[test]
fn closures_and_type_values() {
    let h = RtEnv::new();
    let id = Value::Closure { env: h.clone(), annot: Ty::Top, body: Arc::new(Tm::Var(VarRef::Bound(0))) };
    let arrow = ty(L::FSub, &[], "Top -> Top");
    let j = value_type(L::FSub, &[], &h, &id, &arrow, &traced()).unwrap();
    replays(&j);
    let j = value_type(L::FSub, &[], &h, &id, &Ty::Top, &traced()).unwrap();
    replays(&j);
    let tag = Ty::tag_eq(Ty::Top);
    replays(&value_type(L::DSub, &[], &h, &tyval(Ty::Top), &tag, &traced()).unwrap());
}

#[test]
fn locations_use_type_equality() {
    let h = RtEnv::new();
    let store = vec![(RtEnv::new(), Ty::Top)];
    let lv = L::DSubBotAndOrRecFixMut;
    let ok = value_type(lv, &store, &h, &Value::Loc(0), &Ty::reference(Ty::Top), &traced()).unwrap();
    replays(&ok);
    let bad = value_type(lv, &store, &h, &Value::Loc(0), &Ty::reference(Ty::Bot), &traced()).unwrap();
    assert_eq!(bad.verdict, Verdict::Refuted);
}

#[test]
fn consistent_environments() {
    let cfg = CheckConfig::default();
    let empty = TypingCtx::new();
    let j = consistent_env(L::FSub, &empty, &RtEnv::new(), &AbsEnv::new(), &[], &cfg).unwrap();
    assert_eq!(j.verdict, Verdict::Proved);

    let id = Value::Closure { env: RtEnv::new(), annot: Ty::Top, body: Arc::new(Tm::Var(VarRef::Bound(0))) };
    let h = RtEnv::new().extend(id, BindKind::Annot(Ty::Top));
    let top = TypingCtx::from_terms(vec![CtxEntry::term(Ty::Top)]);
    assert_eq!(consistent_env(L::FSub, &top, &h, &AbsEnv::new(), &[], &cfg).unwrap().verdict, Verdict::Proved);
    let bot = TypingCtx::from_terms(vec![CtxEntry::term(Ty::Bot)]);
    assert_eq!(consistent_env(L::DSubBot, &bot, &h, &AbsEnv::new(), &[], &cfg).unwrap().verdict, Verdict::Refuted);
    assert!(matches!(
        consistent_env(L::FSub, &empty, &h, &AbsEnv::new(), &[], &cfg),
        Err(RuntimeError::Shape { .. })
    ));
}

#[test]
fn static_facts_hold_at_runtime() {
    let cfg = CheckConfig::default();
    let empty = TypingCtx::new();
    let h = RtEnv::new();
    let p = static_implies_dynamic_probe(L::DSubBot, &empty, &Ty::Bot, &Ty::Top, &h, &AbsEnv::new(), &[], &cfg).unwrap();
    assert!(matches!(p, Probe::Checked(ref j) if j.verdict == Verdict::Proved));

    let bound = ty(L::DSub, &[], "{ Type <: Top }");
    let g = TypingCtx::from_terms(vec![CtxEntry::term(bound.clone())]);
    let h = RtEnv::new().extend(tyval(Ty::Top), BindKind::Annot(bound));
    let sel = ty(L::DSub, &["x"], "x.Type");
    let p = static_implies_dynamic_probe(L::DSub, &g, &sel, &Ty::Top, &h, &AbsEnv::new(), &[], &cfg).unwrap();
    assert!(matches!(p, Probe::Checked(ref j) if j.verdict == Verdict::Proved));

    // statically false: nothing to transfer
    let p = static_implies_dynamic_probe(L::DSubBot, &empty, &Ty::Top, &Ty::Bot, &RtEnv::new(), &AbsEnv::new(), &[], &cfg).unwrap();
    assert!(matches!(p, Probe::Vacuous));
}

#[test]
fn hypothetical_replaced_by_a_value() {
    let cfg = CheckConfig::default();
    let h = RtEnv::new();
    let arrow = ty(L::FSub, &[], "Top -> Top");
    // Z <: Top -> Top  ⊢  Z <: Top -> Top
    let z = Ty::FVarSub(VarRef::Bound(0));
    let (before, after) = subst_hypothetical(L::FSub, &[], &AbsEnv::new(), (&h, &arrow), (&h, &z), (&h, &arrow), &cfg).unwrap();
    assert_eq!(before.verdict, Verdict::Proved);
    assert_eq!(after.verdict, Verdict::Proved);
}

#[test]
fn unpacking_under_hypotheses_is_caught_by_replay() {
    // x = new (s) { A = { l : Top } }; all(y:Top) x.A <: all(y:Top) { l : Top }
    let lv = L::Dot;
    let member = ty(lv, &[], "{ A = { l : Top } }");
    let obj = Value::Obj {
        env: RtEnv::new(),
        decls: Arc::new(vec![crate::syntax::Decl::TypeInit {
            label: crate::syntax::Label::ty("A"),
            lo: ty(lv, &[], "{ l : Top }"),
            hi: ty(lv, &[], "{ l : Top }"),
        }]),
        is_record: false,
        fields: None,
    };
    let h = RtEnv::new().extend(obj, BindKind::Annot(member));
    let s = ty(lv, &["x"], "m(y: Top): x.A");
    let u = ty(lv, &["x"], "m(y: Top): { l : Top }");
    let good = dsub(lv, &h, &s, &h, &u, &traced());
    replays(&good);
    let mutated = CheckConfig {
        trace: true,
        mutations: Mutations { no_unpack_guard: true, ..Mutations::default() },
        ..CheckConfig::default()
    };
    let bad = dsub(lv, &h, &s, &h, &u, &mutated);
    assert_eq!(bad.verdict, Verdict::Proved);
    assert!(replay(bad.trace.as_ref().unwrap()).is_err());
}
