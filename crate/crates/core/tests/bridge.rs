use minidot::bridge::{encode_ctx, encode_tm, encode_ty, CORPUS, NO_PREIMAGE};
use minidot::eval::{eval_closed, EvalConfig, Outcome, Value};
use minidot::judgment::{CheckConfig, Verdict};
use minidot::statics::{subtype, typecheck};
use minidot::syntax::{parse_term, CalculusLevel as L, TypingCtx};

#[test]
fn encoding_preserves_typing() {
    let cfg = CheckConfig::default();
    let g = TypingCtx::new();
    for src in CORPUS {
        let t = parse_term(L::FSub, src).unwrap();
        let src_ty = typecheck(L::FSub, &g, &t, &cfg).unwrap();
        assert_eq!(src_ty.judgment.verdict, Verdict::Proved, "{src} in F<:");
        let enc = encode_tm(&t);
        let enc_ty = typecheck(L::DSubBot, &encode_ctx(&g), &enc, &cfg).unwrap();
        assert_eq!(enc_ty.judgment.verdict, Verdict::Proved, "{src} encoded");
        let want = encode_ty(src_ty.ty.as_ref().unwrap());
        let j = subtype(L::DSubBot, &g, enc_ty.ty.as_ref().unwrap(), &want, &cfg).unwrap();
        assert_eq!(j.verdict, Verdict::Proved, "{src}: encoded type below encoded source type");
    }
}

fn class(o: &Outcome) -> &'static str {
    match o {
        Outcome::Timeout => "timeout",
        Outcome::Error(_) => "error",
        Outcome::Val(Value::TyAbsClosure { .. }) | Outcome::Val(Value::Closure { .. }) => "function",
        Outcome::Val(_) => "other value",
    }
}

#[test]
fn encoding_preserves_evaluation() {
    for src in CORPUS {
        let t = parse_term(L::FSub, src).unwrap();
        let a = eval_closed(L::FSub, 10_000, &t, EvalConfig::default());
        let b = eval_closed(L::DSubBot, 10_000, &encode_tm(&t), EvalConfig::default());
        assert_eq!(class(&a.outcome), class(&b.outcome), "{src}");
        assert_eq!(class(&a.outcome), "function", "{src}");
    }
}

#[test]
fn dsub_function_without_fsub_counterpart_is_well_typed() {
    let t = parse_term(L::DSubBot, NO_PREIMAGE).unwrap();
    let j = typecheck(L::DSubBot, &TypingCtx::new(), &t, &CheckConfig::default()).unwrap();
    assert_eq!(j.judgment.verdict, Verdict::Proved);
}
