//! Grammar gating: which constructors each calculus admits.

use super::{CalculusLevel as L, Decl, LabelKind, Tm, Ty};

/// The first constructor outside the level's grammar.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("constructor `{constructor}` is not part of the {level} grammar")]
pub struct GateViolation {
    pub level: L,
    pub constructor: &'static str,
}

fn deny(level: L, constructor: &'static str) -> Result<(), GateViolation> {
    Err(GateViolation { level, constructor })
}

fn ty_name(t: &Ty) -> &'static str {
    match t {
        Ty::Top => "Top",
        Ty::Bot => "Bot",
        Ty::And(..) => "And",
        Ty::Or(..) => "Or",
        Ty::TypeMem(..) => "TypeMem",
        Ty::Fld(..) => "Fld",
        Ty::Method(..) => "Method",
        Ty::Sel(..) => "Sel",
        Ty::BindSelf(_) => "BindSelf",
        Ty::DepFun(..) => "DepFun",
        Ty::TypeTag(..) => "TypeTag",
        Ty::RefTy(_) => "RefTy",
        Ty::FVarSub(_) => "FVarSub",
        Ty::AllSub(..) => "AllSub",
        Ty::ArrowSub(..) => "ArrowSub",
    }
}

fn admits_ty_head(level: L, t: &Ty) -> bool {
    match t {
        Ty::Top => true,
        Ty::Bot => level.has_bot(),
        Ty::And(..) | Ty::Or(..) => level.has_lattice(),
        Ty::TypeMem(l, ..) => level == L::Dot && l.kind == LabelKind::Type,
        Ty::Fld(l, _) => level.has_records() && l.kind == LabelKind::Value,
        Ty::Method(m, ..) => level == L::Dot && m.kind == LabelKind::Method,
        Ty::Sel(_, l) => match level {
            L::FSub => false,
            L::Dot => l.kind == LabelKind::Type,
            _ => l.is_type_label(),
        },
        Ty::BindSelf(_) => level.has_self_types(),
        Ty::DepFun(..) | Ty::TypeTag(..) => level.is_dsub_family(),
        Ty::RefTy(_) => level.has_refs(),
        Ty::FVarSub(_) | Ty::AllSub(..) | Ty::ArrowSub(..) => level == L::FSub,
    }
}

/// Every constructor of `t` belongs to the grammar of `level`.
pub fn gate_type(level: L, t: &Ty) -> Result<(), GateViolation> {
    if !admits_ty_head(level, t) {
        return deny(level, ty_name(t));
    }
    match t {
        Ty::Top | Ty::Bot | Ty::Sel(..) | Ty::FVarSub(_) => Ok(()),
        Ty::TypeTag(lo, hi) => {
            // D<: only has {Type = T} and {Type <: T}
            if level == L::DSub && !(**lo == Ty::Bot || lo == hi) {
                return deny(level, "TypeTag with general lower bound");
            }
            if level == L::DSub && **lo == Ty::Bot {
                gate_type(level, hi)
            } else {
                gate_type(level, lo)?;
                gate_type(level, hi)
            }
        }
        Ty::And(a, b)
        | Ty::Or(a, b)
        | Ty::TypeMem(_, a, b)
        | Ty::Method(_, a, b)
        | Ty::DepFun(a, b)
        | Ty::AllSub(a, b)
        | Ty::ArrowSub(a, b) => {
            gate_type(level, a)?;
            gate_type(level, b)
        }
        Ty::Fld(_, a) | Ty::BindSelf(a) | Ty::RefTy(a) => gate_type(level, a),
    }
}

pub fn gate_decl(level: L, d: &Decl, in_object: bool) -> Result<(), GateViolation> {
    match d {
        Decl::FieldInit { label, annot, body } => {
            if label.kind != LabelKind::Value {
                return deny(level, "FieldInit with non-value label");
            }
            if let Some(a) = annot {
                gate_type(level, a)?;
            }
            gate_term(level, body)
        }
        Decl::TypeInit { label, lo, hi } => {
            if !in_object || label.kind != LabelKind::Type {
                return deny(level, "TypeInit");
            }
            gate_type(level, lo)?;
            gate_type(level, hi)
        }
        Decl::MethodInit {
            label,
            param,
            result,
            body,
        } => {
            if !in_object || label.kind != LabelKind::Method {
                return deny(level, "MethodInit");
            }
            gate_type(level, param)?;
            if let Some(r) = result {
                gate_type(level, r)?;
            }
            gate_term(level, body)
        }
    }
}

fn tm_head(level: L, t: &Tm) -> Result<(), GateViolation> {
    let ok = match t {
        Tm::Var(_) => true,
        Tm::Lam(..) | Tm::App(..) => level != L::Dot,
        Tm::TyLamSub(..) | Tm::TyAppSub(..) => level == L::FSub,
        Tm::TypeVal(_) => level.is_dsub_family(),
        Tm::Rec(_) => level.has_records() && level != L::Dot,
        Tm::SelField(..) => level.has_records(),
        Tm::InvokeMethod(..) | Tm::Obj(_) => level == L::Dot,
        Tm::Fix(..) => level.has_self_types() && level != L::Dot,
        Tm::RefNew(..) | Tm::Deref(_) | Tm::Assign(..) => level.has_refs(),
        Tm::Loc(_) => false,
    };
    if ok {
        Ok(())
    } else {
        deny(
            level,
            match t {
                Tm::Var(_) => "Var",
                Tm::Lam(..) => "Lam",
                Tm::App(..) => "App",
                Tm::TyLamSub(..) => "TyLamSub",
                Tm::TyAppSub(..) => "TyAppSub",
                Tm::TypeVal(_) => "TypeVal",
                Tm::Rec(_) => "Rec",
                Tm::SelField(..) => "SelField",
                Tm::InvokeMethod(..) => "InvokeMethod",
                Tm::Obj(_) => "Obj",
                Tm::Fix(..) => "Fix",
                Tm::RefNew(..) => "RefNew",
                Tm::Deref(_) => "Deref",
                Tm::Assign(..) => "Assign",
                Tm::Loc(_) => "Loc",
            },
        )
    }
}

/// Every constructor of `t` belongs to the grammar of `level`. Store
/// locations are never admitted in source terms.
pub fn gate_term(level: L, t: &Tm) -> Result<(), GateViolation> {
    tm_head(level, t)?;
    match t {
        Tm::Var(_) | Tm::Loc(_) => Ok(()),
        Tm::Lam(a, b) | Tm::TyLamSub(a, b) | Tm::Fix(a, b) => {
            gate_type(level, a)?;
            gate_term(level, b)
        }
        Tm::App(a, b) | Tm::Assign(a, b) | Tm::InvokeMethod(a, _, b) => {
            gate_term(level, a)?;
            gate_term(level, b)
        }
        Tm::TyAppSub(t, a) => {
            gate_term(level, t)?;
            gate_type(level, a)
        }
        Tm::TypeVal(a) => {
            gate_type(level, a)?;
            // the value form carries a type admissible as {Type = T}
            gate_type(level, &Ty::tag_eq(a.clone()))
        }
        Tm::Rec(ds) => ds.iter().try_for_each(|d| gate_decl(level, d, false)),
        Tm::Obj(ds) => ds.iter().try_for_each(|d| gate_decl(level, d, true)),
        Tm::SelField(t, _) | Tm::Deref(t) => gate_term(level, t),
        Tm::RefNew(t, a) => {
            gate_term(level, t)?;
            a.as_ref().map_or(Ok(()), |a| gate_type(level, a))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Label, VarRef};

    #[test]
    fn type_gate_examples() {
        assert!(gate_type(L::DSub, &Ty::and(Ty::Top, Ty::Top)).is_err());
        assert!(gate_type(L::Dot, &Ty::Bot).is_ok());
        assert!(gate_type(L::FSub, &Ty::sel(VarRef::term(0), Label::type_label())).is_err());
        assert!(gate_type(L::DSub, &Ty::tag(Ty::Bot, Ty::Top)).is_ok());
        assert!(gate_type(L::DSub, &Ty::tag(Ty::Top, Ty::Top)).is_ok());
        assert!(gate_type(L::DSub, &Ty::tag(Ty::tag_eq(Ty::Top), Ty::Top)).is_err());
        assert!(gate_type(L::DSub, &Ty::Bot).is_err());
    }

    #[test]
    fn term_gate_examples() {
        assert!(gate_term(L::Dot, &Tm::lam(Ty::Top, Tm::Var(VarRef::Bound(0)))).is_err());
        assert!(gate_term(L::DSubBotAndOrRecFixMut, &Tm::ref_new(Tm::TypeVal(Ty::Top))).is_ok());
        assert!(gate_term(L::FSub, &Tm::ty_app(Tm::Var(VarRef::term(0)), Ty::Top)).is_ok());
        assert!(gate_term(L::Dot, &Tm::Loc(0)).is_err());
    }

    #[test]
    fn violation_names_constructor() {
        let e = gate_term(L::Dot, &Tm::lam(Ty::Top, Tm::Var(VarRef::Bound(0)))).unwrap_err();
        assert_eq!(e.constructor, "Lam");
    }
}
