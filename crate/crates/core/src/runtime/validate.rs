//! Rule schemas for the runtime nodes of a trace.

use crate::judgment::{Concl, Deriv};
use crate::syntax::Ty;

use super::{DynSubConcl, ValueTypedConcl};

type Check = Result<(), String>;

fn ensure(ok: bool, why: &str) -> Check {
    if ok {
        Ok(())
    } else {
        Err(why.to_string())
    }
}

fn arity(d: &Deriv, n: usize) -> Check {
    ensure(d.premises.len() == n, &format!("expected {n} premises, found {}", d.premises.len()))
}

fn dyn_sub(d: &Deriv) -> Result<&DynSubConcl, String> {
    match &d.concl {
        Concl::DynSub(c) => Ok(c),
        _ => Err("premise is not a runtime subtyping judgment".into()),
    }
}

fn value_typed(d: &Deriv) -> Result<&ValueTypedConcl, String> {
    match &d.concl {
        Concl::ValueTyped(c) => Ok(c),
        _ => Err("premise is not a value typing judgment".into()),
    }
}

fn same_j(c: &DynSubConcl, p: &DynSubConcl) -> Check {
    ensure(c.j == p.j, "abstract environment changed")
}

/// Binder premises run under `J` extended by exactly one entry.
fn extended_j(c: &DynSubConcl, p: &DynSubConcl) -> Check {
    let (a, b) = (c.j.entries(), p.j.entries());
    ensure(b.len() == a.len() + 1 && b[..a.len()] == *a, "abstract environment not extended by one binding")
}

pub(crate) fn check_rule(d: &Deriv) -> Check {
    match &d.concl {
        Concl::DynSub(c) => check_dyn_sub(d, c),
        Concl::ValueTyped(c) => check_value_typed(d, c),
        _ => Err("not a runtime judgment".into()),
    }
}

fn check_dyn_sub(d: &Deriv, c: &DynSubConcl) -> Check {
    match d.rule {
        "Top" => {
            arity(d, 0)?;
            ensure(c.t2 == Ty::Top, "right side is not Top")
        }
        "Bot" => {
            arity(d, 0)?;
            ensure(c.t1 == Ty::Bot, "left side is not Bot")
        }
        "TVarSame" | "AbsRefl" | "SelSame" => arity(d, 0),
        "And2" | "Or1" | "Mem" | "Ref" | "Arrow" => {
            arity(d, 2)?;
            for p in &d.premises {
                same_j(c, dyn_sub(p)?)?;
            }
            Ok(())
        }
        "All" | "DepFun" | "Fun" => {
            arity(d, 2)?;
            same_j(c, dyn_sub(&d.premises[0])?)?;
            extended_j(c, dyn_sub(&d.premises[1])?)
        }
        "BindX" | "Bind1" => {
            arity(d, 1)?;
            extended_j(c, dyn_sub(&d.premises[0])?)
        }
        "Fld" | "And11" | "And12" | "Or21" | "Or22" | "TVarLeft" | "TVarRight" | "AbsLeft" | "AbsSel1" | "AbsSel2"
        | "AbsSub1" | "AbsSub2" => {
            arity(d, 1)?;
            same_j(c, dyn_sub(&d.premises[0])?)
        }
        "Unpack1" | "Unpack2" => {
            arity(d, 2)?;
            value_typed(&d.premises[0])?;
            let p = dyn_sub(&d.premises[1])?;
            ensure(p.j.is_empty(), "unpacking premise must run under an empty abstract environment")
        }
        "SelLookup1" | "SelLookup2" => {
            arity(d, 2)?;
            value_typed(&d.premises[0])?;
            same_j(c, dyn_sub(&d.premises[1])?)
        }
        other => Err(format!("unknown runtime subtyping rule `{other}`")),
    }
}

fn check_value_typed(d: &Deriv, c: &ValueTypedConcl) -> Check {
    match d.rule {
        "VType" => {
            arity(d, 0)?;
            ensure(matches!(c.ty, Ty::TypeTag(ref lo, ref hi) if lo == hi), "type value not tagged exactly")
        }
        "VLoc" => {
            arity(d, 0)?;
            ensure(matches!(c.ty, Ty::RefTy(_)), "location not typed as a reference")
        }
        "VClosure" => {
            arity(d, 1)?;
            match &d.premises[0].concl {
                Concl::Typed { ty, .. } => ensure(*ty == c.ty, "closure type differs from its body typing"),
                _ => Err("closure premise is not a typing judgment".into()),
            }
        }
        "VSub" => {
            arity(d, 2)?;
            value_typed(&d.premises[0])?;
            let p = dyn_sub(&d.premises[1])?;
            ensure(p.j.is_empty() && p.t2 == c.ty && p.h2 == c.h, "subsumption premise does not end at the conclusion")
        }
        "VRec" => {
            arity(d, 1)?;
            let p = value_typed(&d.premises[0])?;
            let Ty::BindSelf(body) = &c.ty else {
                return Err("conclusion is not a self type".into());
            };
            let y = c.h.next_name();
            ensure(
                p.v == c.v && p.h.len() == c.h.len() + 1 && p.h.lookup(y) == Some(&c.v) && p.ty == body.open(y.into()),
                "self type not opened at the value itself",
            )
        }
        other => Err(format!("unknown value typing rule `{other}`")),
    }
}
