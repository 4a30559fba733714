use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use minidot::eval::{eval_closed, EvalConfig, Outcome};
use minidot::harness::gen::{random_term, types_in, well_typed, Kind};
use minidot::judgment::{CheckConfig, Verdict};
use minidot::statics::{replay, subtype, typecheck};
use minidot::syntax::{parse_type, CalculusLevel as L, Name, Names, Ty, TypingCtx, VarRef};

fn level() -> impl Strategy<Value = L> {
    prop::sample::select(L::ALL.to_vec())
}

fn closed_types(l: L) -> Vec<Ty> {
    types_in(l, &[], &[], 4)
}

fn lattice_types() -> impl Strategy<Value = Ty> {
    prop::sample::select(closed_types(L::DSubBotAndOr))
}

fn sub(l: L, s: &Ty, u: &Ty) -> Verdict {
    subtype(l, &TypingCtx::new(), s, u, &CheckConfig::default()).expect("gated").verdict
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn finished_runs_are_stable_under_more_fuel(l in level(), seed in any::<u64>(), extra in 1u64..20) {
        let t = random_term(l, &mut ChaCha8Rng::seed_from_u64(seed), 8);
        for n in 0..15 {
            let a = eval_closed(l, n, &t, EvalConfig::default()).outcome;
            if a != Outcome::Timeout {
                prop_assert_eq!(a, eval_closed(l, n + extra, &t, EvalConfig::default()).outcome);
                break;
            }
        }
    }

    #[test]
    fn no_fuel_is_a_timeout(l in level(), seed in any::<u64>()) {
        let t = random_term(l, &mut ChaCha8Rng::seed_from_u64(seed), 8);
        prop_assert_eq!(eval_closed(l, 0, &t, EvalConfig::default()).outcome, Outcome::Timeout);
    }

    #[test]
    fn random_terms_are_deterministic(l in level(), seed in any::<u64>()) {
        let a = random_term(l, &mut ChaCha8Rng::seed_from_u64(seed), 10);
        let b = random_term(l, &mut ChaCha8Rng::seed_from_u64(seed), 10);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn subtyping_is_reflexive(t in lattice_types()) {
        prop_assert_eq!(sub(L::DSubBotAndOr, &t, &t), Verdict::Proved);
    }

    #[test]
    fn top_and_bot_bound_everything(t in lattice_types()) {
        prop_assert_eq!(sub(L::DSubBotAndOr, &t, &Ty::Top), Verdict::Proved);
        prop_assert_eq!(sub(L::DSubBotAndOr, &Ty::Bot, &t), Verdict::Proved);
    }

    #[test]
    fn meets_and_joins_bound_their_parts(s in lattice_types(), u in lattice_types()) {
        let l = L::DSubBotAndOr;
        let meet = Ty::and(s.clone(), u.clone());
        let join = Ty::or(s.clone(), u.clone());
        prop_assert_eq!(sub(l, &meet, &s), Verdict::Proved);
        prop_assert_eq!(sub(l, &meet, &u), Verdict::Proved);
        prop_assert_eq!(sub(l, &s, &join), Verdict::Proved);
        prop_assert_eq!(sub(l, &u, &join), Verdict::Proved);
        prop_assert_eq!(sub(l, &meet, &Ty::and(u.clone(), s.clone())), Verdict::Proved);
        prop_assert_eq!(sub(l, &join, &Ty::or(u, s)), Verdict::Proved);
    }

    #[test]
    fn meets_are_greatest(s in lattice_types(), u in lattice_types(), w in lattice_types()) {
        let l = L::DSubBotAndOr;
        if sub(l, &w, &s) == Verdict::Proved && sub(l, &w, &u) == Verdict::Proved {
            prop_assert_eq!(sub(l, &w, &Ty::and(s, u)), Verdict::Proved);
        }
    }

    #[test]
    fn open_then_close_is_identity(i in 0usize..1000) {
        let open = types_in(L::Dot, &[], &[Kind::Term], 4);
        let t = &open[i % open.len()];
        let z = Name::Cmp(7);
        prop_assert_eq!(&t.open(VarRef::Free(z)).close(z), t);
    }

    #[test]
    fn types_print_and_parse_back(t in prop::sample::select(closed_types(L::Dot))) {
        let src = t.show(&Names::default());
        prop_assert_eq!(parse_type(L::Dot, &src).map_err(|e| e.to_string()), Ok(t));
    }

    #[test]
    fn typing_traces_replay(l in level(), seed in any::<u64>()) {
        let t = random_term(l, &mut ChaCha8Rng::seed_from_u64(seed), 10);
        let cfg = CheckConfig { trace: true, ..CheckConfig::default() };
        if let Ok(r) = typecheck(l, &TypingCtx::new(), &t, &cfg) {
            if let (Verdict::Proved, Some(d)) = (r.judgment.verdict, &r.judgment.trace) {
                prop_assert!(replay(d).is_ok(), "{:?}", replay(d));
            }
        }
    }
}

#[test]
fn corrupted_trace_is_rejected() {
    let t = minidot::syntax::parse_term(L::DSub, "(fun(x: Top) x) (typeval Top)").unwrap();
    let cfg = CheckConfig { trace: true, ..CheckConfig::default() };
    let r = typecheck(L::DSub, &TypingCtx::new(), &t, &cfg).unwrap();
    let mut d = r.judgment.trace.unwrap();
    assert!(replay(&d).is_ok());
    let app = d.premises.iter_mut().find(|p| p.premises.len() == 2).expect("application node");
    app.premises.swap(0, 1);
    assert!(replay(&d).is_err());
}

/// Frozen enumeration counts; a change means the generator or the checker
/// changed what it accepts.
#[test]
fn golden_generator_counts() {
    let cfg = CheckConfig::default();
    for (l, size, n) in [
        (L::FSub, 5, 9),
        (L::DSub, 5, 14),
        (L::DSub, 6, 49),
        (L::DSubBotAndOrRec, 5, 149),
        (L::DSubBotAndOrRecFixMut, 5, 764),
        (L::Dot, 5, 128),
        (L::Dot, 6, 885),
    ] {
        assert_eq!(well_typed(l, size, &cfg).len(), n, "{l} size {size}");
    }
}
