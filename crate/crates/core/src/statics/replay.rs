//! Independent validation of derivation traces: every node must be an
//! instance of a declarative rule whose premises are exactly its children.
//! Shares no search code with the checkers.

use crate::judgment::{Concl, Deriv};
use crate::syntax::{BindingKind, CtxEntry, Decl, Name, Tm, Ty, TypingCtx, VarRef};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid `{rule}` step: {reason}")]
pub struct ReplayError {
    pub rule: String,
    pub reason: String,
}

type Check = Result<(), String>;

fn ensure(ok: bool, why: &str) -> Check {
    if ok {
        Ok(())
    } else {
        Err(why.to_string())
    }
}

/// Re-validates a derivation rule by rule.
pub fn replay(d: &Deriv) -> Result<(), ReplayError> {
    check_node(d).map_err(|reason| ReplayError {
        rule: d.rule.to_string(),
        reason,
    })?;
    for p in &d.premises {
        replay(p)?;
    }
    Ok(())
}

fn premise(d: &Deriv, i: usize) -> Result<&Deriv, String> {
    d.premises
        .get(i)
        .ok_or_else(|| format!("missing premise {i}"))
}

fn arity(d: &Deriv, n: usize) -> Check {
    ensure(
        d.premises.len() == n,
        &format!("expected {n} premises, found {}", d.premises.len()),
    )
}

fn as_sub(d: &Deriv) -> Result<(&TypingCtx, &Ty, &Ty), String> {
    match &d.concl {
        Concl::Sub { ctx, lhs, rhs } => Ok((ctx, lhs, rhs)),
        _ => Err("premise is not a subtyping judgment".into()),
    }
}

fn as_typed(d: &Deriv) -> Result<(&TypingCtx, &Tm, &Ty), String> {
    match &d.concl {
        Concl::Typed { ctx, tm, ty } => Ok((ctx, tm, ty)),
        _ => Err("premise is not a typing judgment".into()),
    }
}

/// Premise `i` is `ctx ⊢ lhs <: rhs`.
fn sub_premise(d: &Deriv, i: usize, ctx: &TypingCtx, lhs: &Ty, rhs: &Ty) -> Check {
    let (c, l, r) = as_sub(premise(d, i)?)?;
    ensure(
        c == ctx && l == lhs && r == rhs,
        &format!("premise {i} has the wrong conclusion"),
    )
}

fn typed_premise(d: &Deriv, i: usize, ctx: &TypingCtx, tm: &Tm, ty: &Ty) -> Check {
    let (c, t, u) = as_typed(premise(d, i)?)?;
    ensure(
        c == ctx && t == tm && u == ty,
        &format!("premise {i} has the wrong conclusion"),
    )
}

/// Premise `i` lives in `ctx` extended by one fresh comparison binding of
/// `bound`; returns the new name.
fn extended_by_cmp(
    d: &Deriv,
    i: usize,
    ctx: &TypingCtx,
    bound: &Ty,
    kind: BindingKind,
) -> Result<Name, String> {
    let c = match &premise(d, i)?.concl {
        Concl::Sub { ctx, .. } | Concl::Typed { ctx, .. } => ctx,
        _ => return Err("premise has no context".into()),
    };
    ensure(c.terms() == ctx.terms(), "term bindings changed")?;
    let n = ctx.cmp_len();
    ensure(
        c.cmp_len() == n + 1 && c.cmps()[..n] == ctx.cmps()[..],
        "not a one-binding extension",
    )?;
    let (id, entry) = &c.cmps()[n];
    let z = Name::Cmp(*id);
    ensure(!ctx.binds(z), "comparison variable is not fresh")?;
    ensure(
        entry.ty == *bound && entry.kind == kind,
        "comparison binding has the wrong type",
    )?;
    Ok(z)
}

fn extended_by_term(d: &Deriv, i: usize, ctx: &TypingCtx, entry: CtxEntry) -> Result<Name, String> {
    let c = match &premise(d, i)?.concl {
        Concl::Typed { ctx, .. } | Concl::DeclTyped { ctx, .. } => ctx,
        _ => return Err("premise has no context".into()),
    };
    let (expect, x) = ctx.with_term(entry);
    ensure(*c == expect, "premise context is not the extended context")?;
    Ok(x)
}

fn check_node(d: &Deriv) -> Check {
    match &d.concl {
        Concl::Sub { ctx, lhs, rhs } => check_sub(d, ctx, lhs, rhs),
        Concl::Typed { ctx, tm, ty } => check_typed(d, ctx, tm, ty),
        Concl::DeclTyped { ctx, decl, ty } => check_decl(d, ctx, decl, ty),
        Concl::GoodBounds { ctx, ty } => {
            ensure(d.rule == "GoodBounds", "unknown rule")?;
            for p in &d.premises {
                let (c, ..) = as_sub(p)?;
                ensure(
                    c.terms() == ctx.terms(),
                    "good-bounds premise in a different context",
                )?;
            }
            let _ = ty;
            Ok(())
        }
        Concl::DynSub(_) | Concl::ValueTyped(_) => crate::runtime::check_rule(d),
    }
}

fn check_sub(d: &Deriv, ctx: &TypingCtx, lhs: &Ty, rhs: &Ty) -> Check {
    match (d.rule, lhs, rhs) {
        ("Top", _, Ty::Top) => arity(d, 0),
        ("Bot", Ty::Bot, _) => arity(d, 0),
        ("SelX", Ty::Sel(..), _) | ("TVarRefl", Ty::FVarSub(_), _) => {
            arity(d, 0)?;
            ensure(lhs == rhs, "sides differ")
        }
        ("And2", _, Ty::And(a, b)) => {
            arity(d, 2)?;
            sub_premise(d, 0, ctx, lhs, a)?;
            sub_premise(d, 1, ctx, lhs, b)
        }
        ("Or1", Ty::Or(a, b), _) => {
            arity(d, 2)?;
            sub_premise(d, 0, ctx, a, rhs)?;
            sub_premise(d, 1, ctx, b, rhs)
        }
        ("And11", Ty::And(a, _), _) | ("And12", Ty::And(_, a), _) => {
            arity(d, 1)?;
            sub_premise(d, 0, ctx, a, rhs)
        }
        ("Or21", _, Ty::Or(a, _)) | ("Or22", _, Ty::Or(_, a)) => {
            arity(d, 1)?;
            sub_premise(d, 0, ctx, lhs, a)
        }
        ("Fld", Ty::Fld(l1, a), Ty::Fld(l2, b)) => {
            arity(d, 1)?;
            ensure(l1 == l2, "labels differ")?;
            sub_premise(d, 0, ctx, a, b)
        }
        ("Mem", _, _) => {
            let (Some((l1, s1, u1)), Some((l2, s2, u2))) =
                (lhs.as_type_member(), rhs.as_type_member())
            else {
                return Err("not type members".into());
            };
            arity(d, 2)?;
            ensure(l1 == l2, "labels differ")?;
            sub_premise(d, 0, ctx, s2, s1)?;
            sub_premise(d, 1, ctx, u1, u2)
        }
        ("Fun", Ty::Method(m1, s1, u1), Ty::Method(m2, s2, u2)) => {
            ensure(m1 == m2, "labels differ")?;
            binder_rule(d, ctx, (s1, u1), (s2, u2), BindingKind::Term)
        }
        ("DepFun", Ty::DepFun(s1, u1), Ty::DepFun(s2, u2)) => {
            binder_rule(d, ctx, (s1, u1), (s2, u2), BindingKind::Term)
        }
        ("All", Ty::AllSub(s1, u1), Ty::AllSub(s2, u2)) => {
            binder_rule(d, ctx, (s1, u1), (s2, u2), BindingKind::TypeVar)
        }
        ("Arrow", Ty::ArrowSub(s1, u1), Ty::ArrowSub(s2, u2)) => {
            arity(d, 2)?;
            sub_premise(d, 0, ctx, s2, s1)?;
            sub_premise(d, 1, ctx, u1, u2)
        }
        ("Ref", Ty::RefTy(a), Ty::RefTy(b)) => {
            arity(d, 2)?;
            sub_premise(d, 0, ctx, a, b)?;
            sub_premise(d, 1, ctx, b, a)
        }
        ("BindX", Ty::BindSelf(a), Ty::BindSelf(b)) => {
            arity(d, 1)?;
            let (c, ..) = as_sub(premise(d, 0)?)?;
            let z = fresh_cmp_of(c, ctx)?;
            let az = a.open(z.into());
            extended_by_cmp(d, 0, ctx, &az, BindingKind::Term)?;
            sub_premise(d, 0, c, &az, &b.open(z.into()))
        }
        ("Bind1", Ty::BindSelf(b), _) => {
            arity(d, 1)?;
            let (c, ..) = as_sub(premise(d, 0)?)?;
            let z = fresh_cmp_of(c, ctx)?;
            let bz = b.open(z.into());
            extended_by_cmp(d, 0, ctx, &bz, BindingKind::Term)?;
            ensure(!rhs.mentions(z), "right side mentions the self variable")?;
            sub_premise(d, 0, c, &bz, rhs)
        }
        ("Sel1", Ty::Sel(VarRef::Free(x), l), _) => {
            arity(d, 1)?;
            let (c, t, m) = as_typed(premise(d, 0)?)?;
            ensure(
                c == ctx && *t == Tm::Var((*x).into()),
                "premise is not about the selected variable",
            )?;
            match m.as_type_member() {
                Some((l2, lo, hi)) if l2 == *l && *lo == Ty::Bot && hi == rhs => Ok(()),
                _ => Err("premise does not bound the selection from above".into()),
            }
        }
        ("Sel2", _, Ty::Sel(VarRef::Free(x), l)) => {
            arity(d, 1)?;
            let (c, t, m) = as_typed(premise(d, 0)?)?;
            ensure(
                c == ctx && *t == Tm::Var((*x).into()),
                "premise is not about the selected variable",
            )?;
            match m.as_type_member() {
                Some((l2, lo, hi)) if l2 == *l && lo == lhs && *hi == Ty::Top => Ok(()),
                _ => Err("premise does not bound the selection from below".into()),
            }
        }
        ("TVarBound", Ty::FVarSub(VarRef::Free(x)), _) => {
            arity(d, 1)?;
            match ctx.lookup(*x) {
                Some(CtxEntry {
                    ty,
                    kind: BindingKind::TypeVar,
                }) => sub_premise(d, 0, ctx, ty, rhs),
                _ => Err("not a type variable".into()),
            }
        }
        ("Trans", _, _) => {
            arity(d, 2)?;
            let (_, _, mid) = as_sub(premise(d, 0)?)?;
            sub_premise(d, 0, ctx, lhs, mid)?;
            sub_premise(d, 1, ctx, mid, rhs)
        }
        (rule, _, _) => Err(format!("`{rule}` does not conclude this subtyping")),
    }
}

fn fresh_cmp_of(c: &TypingCtx, ctx: &TypingCtx) -> Result<Name, String> {
    match c.cmps().get(ctx.cmp_len()) {
        Some((id, _)) => Ok(Name::Cmp(*id)),
        None => Err("premise context is not extended".into()),
    }
}

fn binder_rule(
    d: &Deriv,
    ctx: &TypingCtx,
    (s1, u1): (&Ty, &Ty),
    (s2, u2): (&Ty, &Ty),
    kind: BindingKind,
) -> Check {
    arity(d, 2)?;
    sub_premise(d, 0, ctx, s2, s1)?;
    let z = extended_by_cmp(d, 1, ctx, s2, kind)?;
    let (c, ..) = as_sub(premise(d, 1)?)?;
    sub_premise(d, 1, c, &u1.open(z.into()), &u2.open(z.into()))
}

fn check_typed(d: &Deriv, ctx: &TypingCtx, tm: &Tm, ty: &Ty) -> Check {
    match (d.rule, tm) {
        ("Var", Tm::Var(VarRef::Free(x))) => {
            arity(d, 0)?;
            match ctx.lookup(*x) {
                Some(CtxEntry {
                    ty: t,
                    kind: BindingKind::Term,
                }) => ensure(t == ty, "type differs from the binding"),
                _ => Err("unbound variable".into()),
            }
        }
        ("Sub", _) => {
            arity(d, 2)?;
            let (c, t, s) = as_typed(premise(d, 0)?)?;
            ensure(c == ctx && t == tm, "premise types a different term")?;
            sub_premise(d, 1, ctx, s, ty)
        }
        ("VarUnpack", Tm::Var(VarRef::Free(x))) => {
            arity(d, 1)?;
            let (c, t, rec) = as_typed(premise(d, 0)?)?;
            let restricted = ctx.restrict(*x).map_err(|e| e.to_string())?;
            ensure(
                *c == restricted,
                "premise context is not restricted at the variable",
            )?;
            ensure(t == tm, "premise types a different term")?;
            match rec {
                Ty::BindSelf(b) => ensure(b.open((*x).into()) == *ty, "not the unpacked self type"),
                _ => Err("premise is not a self type".into()),
            }
        }
        ("VarPack", Tm::Var(VarRef::Free(x))) => {
            arity(d, 1)?;
            let Ty::BindSelf(b) = ty else {
                return Err("conclusion is not a self type".into());
            };
            typed_premise(d, 0, ctx, tm, &b.open((*x).into()))
        }
        ("TAbs", Tm::Lam(annot, body)) => {
            arity(d, 1)?;
            let x = extended_by_term(d, 0, ctx, CtxEntry::term(annot.clone()))?;
            let (c, ..) = as_typed(premise(d, 0)?)?;
            let r = match ty {
                Ty::DepFun(p, r) if **p == *annot => r.open(x.into()),
                Ty::ArrowSub(p, r) if **p == *annot => (**r).clone(),
                _ => return Err("not a function type over the annotation".into()),
            };
            typed_premise(d, 0, c, &body.open(x.into()), &r)
        }
        ("TApp" | "TAppVar", Tm::App(f, a)) => {
            arity(d, 2)?;
            let (c, t, fty) = as_typed(premise(d, 0)?)?;
            ensure(
                c == ctx && *t == **f,
                "function premise types a different term",
            )?;
            let (p, result) = match fty {
                Ty::DepFun(p, r) => (p, dependent_result(d.rule, r, a)?),
                Ty::ArrowSub(p, r) if d.rule == "TApp" => (p, (**r).clone()),
                _ => return Err("function premise is not a function type".into()),
            };
            typed_premise(d, 1, ctx, a, p)?;
            ensure(result == *ty, "result type differs")
        }
        ("TInvoke" | "TInvokeVar", Tm::InvokeMethod(e, m, a)) => {
            arity(d, 2)?;
            let (c, t, mty) = as_typed(premise(d, 0)?)?;
            ensure(
                c == ctx && *t == **e,
                "receiver premise types a different term",
            )?;
            let Ty::Method(m2, p, r) = mty else {
                return Err("receiver premise is not a method type".into());
            };
            ensure(m2 == m, "method labels differ")?;
            let rule = if d.rule == "TInvoke" {
                "TApp"
            } else {
                "TAppVar"
            };
            let result = dependent_result(rule, r, a)?;
            typed_premise(d, 1, ctx, a, p)?;
            ensure(result == *ty, "result type differs")
        }
        ("TTAbs", Tm::TyLamSub(bound, body)) => {
            arity(d, 1)?;
            let x = extended_by_term(d, 0, ctx, CtxEntry::type_var(bound.clone()))?;
            let (c, ..) = as_typed(premise(d, 0)?)?;
            match ty {
                Ty::AllSub(b, r) if **b == *bound => {
                    typed_premise(d, 0, c, &body.open(x.into()), &r.open(x.into()))
                }
                _ => Err("not a quantified type over the bound".into()),
            }
        }
        ("TTApp", Tm::TyAppSub(f, arg)) => {
            arity(d, 2)?;
            let (c, t, fty) = as_typed(premise(d, 0)?)?;
            ensure(c == ctx && *t == **f, "premise types a different term")?;
            let Ty::AllSub(b, r) = fty else {
                return Err("premise is not a quantified type".into());
            };
            sub_premise(d, 1, ctx, arg, b)?;
            ensure(r.instantiate(arg) == *ty, "result type differs")
        }
        ("TTyp", Tm::TypeVal(t)) => {
            arity(d, 0)?;
            ensure(*ty == Ty::tag_eq(t.clone()), "not the exact type tag")
        }
        ("TRec", Tm::Rec(decls)) => {
            arity(d, decls.len())?;
            let mut tys = Vec::new();
            for (i, decl) in decls.iter().enumerate() {
                let Decl::FieldInit { label, body, .. } = decl else {
                    return Err("record member is not a field".into());
                };
                let (c, t, fty) = as_typed(premise(d, i)?)?;
                ensure(
                    c == ctx && t == body,
                    "field premise types a different term",
                )?;
                tys.push(Ty::fld(label.clone(), fty.clone()));
            }
            ensure(Ty::and_all(tys) == *ty, "record type differs")
        }
        ("TFld", Tm::SelField(e, l)) => {
            arity(d, 1)?;
            typed_premise(d, 0, ctx, e, &Ty::fld(l.clone(), ty.clone()))
        }
        ("TNew", Tm::Obj(decls)) => {
            let Ty::BindSelf(body) = ty else {
                return Err("object type is not a self type".into());
            };
            let n = decls.len();
            ensure(
                d.premises.len() == n || d.premises.len() == n + 1,
                "wrong number of premises",
            )?;
            let x = Name::Term(ctx.term_len());
            let self_ty = body.open(x.into());
            let mut members = Vec::new();
            for (i, decl) in decls.iter().enumerate() {
                extended_by_term(d, i, ctx, CtxEntry::term(self_ty.clone()))?;
                match &premise(d, i)?.concl {
                    Concl::DeclTyped {
                        decl: dd, ty: mty, ..
                    } if *dd == decl.open(x.into()) => members.push(mty.clone()),
                    _ => return Err("member premise does not match the declaration".into()),
                }
            }
            ensure(
                Ty::and_all(members) == self_ty,
                "self type is not the intersection of the member types",
            )?;
            if d.premises.len() == n + 1 {
                match &d.premises[n].concl {
                    Concl::GoodBounds { ctx: c, ty: t } => {
                        ensure(c == ctx && t == ty, "good-bounds premise differs")
                    }
                    _ => Err("last premise is not a good-bounds check".into()),
                }
            } else {
                Ok(())
            }
        }
        ("TFix", Tm::Fix(annot, body)) => {
            arity(d, 1)?;
            ensure(*ty == Ty::bind(annot.clone()), "fixpoint type differs")?;
            let x = Name::Term(ctx.term_len());
            let self_ty = annot.open(x.into());
            extended_by_term(d, 0, ctx, CtxEntry::term(self_ty.clone()))?;
            let (c, ..) = as_typed(premise(d, 0)?)?;
            typed_premise(d, 0, c, &body.open(x.into()), &self_ty)
        }
        ("TRef", Tm::RefNew(e, annot)) => {
            arity(d, 1)?;
            let Ty::RefTy(cell) = ty else {
                return Err("not a reference type".into());
            };
            ensure(
                annot.as_ref().map_or(true, |a| a == &**cell),
                "annotation differs",
            )?;
            typed_premise(d, 0, ctx, e, cell)
        }
        ("TDeref", Tm::Deref(e)) => {
            arity(d, 1)?;
            typed_premise(d, 0, ctx, e, &Ty::reference(ty.clone()))
        }
        ("TAssign", Tm::Assign(l, r)) => {
            arity(d, 2)?;
            typed_premise(d, 0, ctx, l, &Ty::reference(ty.clone()))?;
            typed_premise(d, 1, ctx, r, ty)
        }
        ("Program", _) => {
            ensure(!d.premises.is_empty(), "program without a body")?;
            let (_, t, u) = as_typed(d.premises.last().unwrap())?;
            ensure(t == tm && u == ty, "body premise differs")
        }
        (rule, _) => Err(format!("`{rule}` does not conclude this typing")),
    }
}

fn dependent_result(rule: &str, r: &Ty, arg: &Tm) -> Result<Ty, String> {
    match (rule, arg) {
        ("TAppVar", Tm::Var(VarRef::Free(y))) => Ok(r.open((*y).into())),
        ("TApp", _) if !r.uses_hole() => Ok(r.open(VarRef::Bound(0))),
        _ => Err("dependent result needs a variable argument".into()),
    }
}

fn check_decl(d: &Deriv, ctx: &TypingCtx, decl: &Decl, ty: &Ty) -> Check {
    match (d.rule, decl, ty) {
        ("DMem", Decl::TypeInit { label, lo, hi }, Ty::TypeMem(l2, lo2, hi2)) => {
            arity(d, 1)?;
            ensure(
                label == l2 && lo == &**lo2 && hi == &**hi2,
                "member type differs",
            )?;
            let (c, a, b) = as_sub(premise(d, 0)?)?;
            ensure(
                c == ctx && b == hi && (a == lo || a == hi),
                "premise is not a bound check",
            )
        }
        ("DFld", Decl::FieldInit { label, body, .. }, Ty::Fld(l2, t)) => {
            arity(d, 1)?;
            ensure(label == l2, "labels differ")?;
            typed_premise(d, 0, ctx, body, t)
        }
        (
            "DFun",
            Decl::MethodInit {
                label, param, body, ..
            },
            Ty::Method(m2, p, r),
        ) => {
            arity(d, 1)?;
            ensure(label == m2 && param == &**p, "method signature differs")?;
            let y = extended_by_term(d, 0, ctx, CtxEntry::term(param.clone()))?;
            let (c, ..) = as_typed(premise(d, 0)?)?;
            typed_premise(d, 0, c, &body.open(y.into()), &r.open(y.into()))
        }
        (rule, ..) => Err(format!("`{rule}` does not conclude this member typing")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::{CheckConfig, Mutations};
    use crate::statics::{subtype, typecheck};
    use crate::syntax::{parse_term, parse_type, CalculusLevel as L, Label};

    fn traced() -> CheckConfig {
        CheckConfig::default().traced()
    }

    #[test]
    fn subtyping_traces_replay() {
        let g = TypingCtx::new();
        let s = parse_type(L::Dot, "rec(z) { A : Bot .. Top } & { B : Bot .. z.A }").unwrap();
        let u = parse_type(L::Dot, "rec(z) { A : Bot .. Top }").unwrap();
        let j = subtype(L::Dot, &g, &s, &u, &traced()).unwrap();
        replay(&j.trace.unwrap()).unwrap();
    }

    #[test]
    fn typing_traces_replay() {
        for (level, src) in [
            (
                L::DSub,
                "(fun(x:{ Type <: Top }) fun(z:x.Type) z) (typeval Top)",
            ),
            (L::FSub, "(tfun(X<:Top) fun(y:X) y) [Top -> Top]"),
            (
                L::Dot,
                "(new (o) { A = Top; id(y: o.A) : o.A = y; f : Top = o }).id(new (u) { })",
            ),
            (
                L::DSubBotAndOrRecFix,
                "fix(x: { l : Top }) { l = typeval Top }",
            ),
        ] {
            let t = parse_term(level, src).unwrap();
            let r = typecheck(level, &TypingCtx::new(), &t, &traced()).unwrap();
            assert!(r.judgment.is_proved(), "{src}: {:?}", r.judgment.reason);
            replay(&r.judgment.trace.unwrap()).unwrap_or_else(|e| panic!("{src}: {e}"));
        }
    }

    #[test]
    fn unrestricted_unpacking_fails_replay() {
        // comparing x.B with x.A needs x unpacked at its own name
        let level = L::Dot;
        let rec = parse_type(level, "rec(s) { A : Bot .. Top } & { B : s.A .. s.A }").unwrap();
        let mut g = TypingCtx::from_terms(vec![CtxEntry::term(rec)]);
        g.push_cmp(CtxEntry::term(Ty::Top));
        let xb = Ty::sel(VarRef::term(0), Label::ty("B"));
        let xa = Ty::sel(VarRef::term(0), Label::ty("A"));
        let good = subtype(level, &g, &xb, &xa, &traced()).unwrap();
        replay(&good.trace.unwrap()).unwrap();
        let cfg = CheckConfig {
            mutations: Mutations {
                no_ctx_restrict: true,
                ..Mutations::default()
            },
            ..traced()
        };
        let bad = subtype(level, &g, &xb, &xa, &cfg).unwrap();
        assert!(bad.is_proved());
        assert!(replay(&bad.trace.unwrap()).is_err());
    }
}
