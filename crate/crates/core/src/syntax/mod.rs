//! Unified abstract syntax for every calculus on the F<: .. DOT ladder.
//!
//! Binders are locally nameless: a bound occurrence is a de Bruijn index
//! counted from the innermost enclosing binder, a free occurrence is an
//! absolute [`Name`]. Term variables (`Name::Term`) are levels into the
//! runtime environment / the term segment of a typing context; comparison
//! variables (`Name::Cmp`) are introduced while comparing binders and live
//! in the abstract environment.

mod ctx;
mod gate;
mod ops;
pub mod parse;
mod pretty;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use ctx::{BindingKind, CtxEntry, TypingCtx};
pub use gate::{gate_decl, gate_term, gate_type, GateViolation};
pub use ops::{fresh_is_free, NameSet};
pub use parse::{parse_program, parse_term, parse_term_in, parse_type, parse_type_in, ParseError, Program};
pub use pretty::Names;

/// The calculi of the ladder, ordered by feature inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CalculusLevel {
    FSub,
    DSub,
    DSubBot,
    DSubBotAndOr,
    DSubBotAndOrRec,
    DSubBotAndOrRecFix,
    DSubBotAndOrRecFixMut,
    #[serde(rename = "DOT")]
    Dot,
}

impl CalculusLevel {
    pub const ALL: [CalculusLevel; 8] = [
        CalculusLevel::FSub,
        CalculusLevel::DSub,
        CalculusLevel::DSubBot,
        CalculusLevel::DSubBotAndOr,
        CalculusLevel::DSubBotAndOrRec,
        CalculusLevel::DSubBotAndOrRecFix,
        CalculusLevel::DSubBotAndOrRecFixMut,
        CalculusLevel::Dot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalculusLevel::FSub => "FSub",
            CalculusLevel::DSub => "DSub",
            CalculusLevel::DSubBot => "DSubBot",
            CalculusLevel::DSubBotAndOr => "DSubBotAndOr",
            CalculusLevel::DSubBotAndOrRec => "DSubBotAndOrRec",
            CalculusLevel::DSubBotAndOrRecFix => "DSubBotAndOrRecFix",
            CalculusLevel::DSubBotAndOrRecFixMut => "DSubBotAndOrRecFixMut",
            CalculusLevel::Dot => "DOT",
        }
    }

    pub fn parse(s: &str) -> Option<CalculusLevel> {
        let lower = s.to_ascii_lowercase();
        CalculusLevel::ALL
            .into_iter()
            .find(|l| l.name().to_ascii_lowercase() == lower)
            .or(match lower.as_str() {
                "fsub" | "f<:" => Some(CalculusLevel::FSub),
                "dsub" | "d<:" => Some(CalculusLevel::DSub),
                "mut" => Some(CalculusLevel::DSubBotAndOrRecFixMut),
                _ => None,
            })
    }

    /// Levels of the D<: family (everything between F<: and DOT).
    pub fn is_dsub_family(self) -> bool {
        !matches!(self, CalculusLevel::FSub | CalculusLevel::Dot)
    }

    pub fn has_bot(self) -> bool {
        self >= CalculusLevel::DSubBot
    }

    pub fn has_lattice(self) -> bool {
        self >= CalculusLevel::DSubBotAndOr
    }

    pub fn has_records(self) -> bool {
        self >= CalculusLevel::DSubBotAndOrRec
    }

    pub fn has_self_types(self) -> bool {
        self >= CalculusLevel::DSubBotAndOrRecFix
    }

    pub fn has_refs(self) -> bool {
        self == CalculusLevel::DSubBotAndOrRecFixMut
    }
}

impl fmt::Display for CalculusLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelKind {
    Type,
    Value,
    Method,
}

/// A member label. Labels of different kinds never compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    pub kind: LabelKind,
    pub name: Arc<str>,
}

impl Label {
    pub fn ty(name: &str) -> Label {
        Label {
            kind: LabelKind::Type,
            name: name.into(),
        }
    }

    pub fn val(name: &str) -> Label {
        Label {
            kind: LabelKind::Value,
            name: name.into(),
        }
    }

    pub fn method(name: &str) -> Label {
        Label {
            kind: LabelKind::Method,
            name: name.into(),
        }
    }

    /// The single global type label of the D<: family.
    pub fn type_label() -> Label {
        Label::ty(TYPE_LABEL)
    }

    pub fn is_type_label(&self) -> bool {
        self.kind == LabelKind::Type && &*self.name == TYPE_LABEL
    }
}

pub const TYPE_LABEL: &str = "Type";

/// Absolute name of a free variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Name {
    /// Term variable: a level in the runtime environment / term segment.
    Term(usize),
    /// Comparison variable: introduced by subtype comparisons under binders.
    Cmp(usize),
    /// Store location name, used only by the small-step machine.
    Loc(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarRef {
    Bound(usize),
    Free(Name),
}

impl VarRef {
    pub fn term(level: usize) -> VarRef {
        VarRef::Free(Name::Term(level))
    }

    pub fn cmp(id: usize) -> VarRef {
        VarRef::Free(Name::Cmp(id))
    }

    pub fn free(self) -> Option<Name> {
        match self {
            VarRef::Free(n) => Some(n),
            VarRef::Bound(_) => None,
        }
    }
}

impl From<Name> for VarRef {
    fn from(n: Name) -> VarRef {
        VarRef::Free(n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ty {
    Top,
    Bot,
    And(Box<Ty>, Box<Ty>),
    Or(Box<Ty>, Box<Ty>),
    /// `{ L : lo .. hi }`
    TypeMem(Label, Box<Ty>, Box<Ty>),
    /// `{ l : T }`
    Fld(Label, Box<Ty>),
    /// `m(x:S):U`, the result binds the parameter.
    Method(Label, Box<Ty>, Box<Ty>),
    /// `x.L`
    Sel(VarRef, Label),
    /// `rec(z) T`, the body binds the self variable.
    BindSelf(Box<Ty>),
    /// `all(x:S) U`, the result binds the parameter.
    DepFun(Box<Ty>, Box<Ty>),
    /// `{ Type : lo .. hi }` of the D<: family.
    TypeTag(Box<Ty>, Box<Ty>),
    RefTy(Box<Ty>),
    /// F<: type variable.
    FVarSub(VarRef),
    /// `all(X<:S) U` of F<:, the body binds the type variable.
    AllSub(Box<Ty>, Box<Ty>),
    /// `S -> U` of F<:.
    ArrowSub(Box<Ty>, Box<Ty>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tm {
    Var(VarRef),
    /// `fun(x:T) t`, the body binds `x`.
    Lam(Ty, Box<Tm>),
    App(Box<Tm>, Box<Tm>),
    /// `tfun(X<:T) t`, the body binds `X`.
    TyLamSub(Ty, Box<Tm>),
    TyAppSub(Box<Tm>, Ty),
    /// `typeval T`, i.e. `{Type = T}`.
    TypeVal(Ty),
    /// Record `{ l = t; ... }` without a self binder.
    Rec(Vec<Decl>),
    SelField(Box<Tm>, Label),
    InvokeMethod(Box<Tm>, Label, Box<Tm>),
    /// `new (x) { d... }`, every declaration binds the self variable.
    Obj(Vec<Decl>),
    /// `fix(x:T) t`, both the annotation and the body bind `x`.
    Fix(Ty, Box<Tm>),
    /// `ref t`, optionally annotated with the cell type.
    RefNew(Box<Tm>, Option<Ty>),
    Deref(Box<Tm>),
    Assign(Box<Tm>, Box<Tm>),
    /// Store location; produced only by evaluation.
    Loc(usize),
}

/// Member initialization. Inside an object every declaration sits under the
/// self binder; a method body and its result type additionally bind the
/// parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decl {
    TypeInit {
        label: Label,
        lo: Ty,
        hi: Ty,
    },
    FieldInit {
        label: Label,
        annot: Option<Ty>,
        body: Tm,
    },
    MethodInit {
        label: Label,
        param: Ty,
        result: Option<Ty>,
        body: Tm,
    },
}

impl Decl {
    pub fn label(&self) -> &Label {
        match self {
            Decl::TypeInit { label, .. }
            | Decl::FieldInit { label, .. }
            | Decl::MethodInit { label, .. } => label,
        }
    }

    pub fn type_eq(label: Label, ty: Ty) -> Decl {
        Decl::TypeInit {
            label,
            lo: ty.clone(),
            hi: ty,
        }
    }

    pub fn field(label: Label, body: Tm) -> Decl {
        Decl::FieldInit {
            label,
            annot: None,
            body,
        }
    }
}

/// Labels of a declaration list are pairwise disjoint.
pub fn labels_disjoint(decls: &[Decl]) -> bool {
    let mut seen: Vec<&Label> = Vec::with_capacity(decls.len());
    for d in decls {
        if seen.contains(&d.label()) {
            return false;
        }
        seen.push(d.label());
    }
    true
}

// Smart constructors, used heavily by tests and the generators.
impl Ty {
    pub fn and(a: Ty, b: Ty) -> Ty {
        Ty::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ty, b: Ty) -> Ty {
        Ty::Or(Box::new(a), Box::new(b))
    }

    pub fn mem(label: Label, lo: Ty, hi: Ty) -> Ty {
        Ty::TypeMem(label, Box::new(lo), Box::new(hi))
    }

    pub fn fld(label: Label, ty: Ty) -> Ty {
        Ty::Fld(label, Box::new(ty))
    }

    pub fn method(label: Label, param: Ty, result: Ty) -> Ty {
        Ty::Method(label, Box::new(param), Box::new(result))
    }

    pub fn sel(v: VarRef, label: Label) -> Ty {
        Ty::Sel(v, label)
    }

    pub fn bind(body: Ty) -> Ty {
        Ty::BindSelf(Box::new(body))
    }

    pub fn dep_fun(param: Ty, result: Ty) -> Ty {
        Ty::DepFun(Box::new(param), Box::new(result))
    }

    pub fn tag(lo: Ty, hi: Ty) -> Ty {
        Ty::TypeTag(Box::new(lo), Box::new(hi))
    }

    pub fn tag_eq(ty: Ty) -> Ty {
        Ty::tag(ty.clone(), ty)
    }

    pub fn reference(ty: Ty) -> Ty {
        Ty::RefTy(Box::new(ty))
    }

    pub fn all_sub(bound: Ty, body: Ty) -> Ty {
        Ty::AllSub(Box::new(bound), Box::new(body))
    }

    pub fn arrow(a: Ty, b: Ty) -> Ty {
        Ty::ArrowSub(Box::new(a), Box::new(b))
    }

    /// A type member view: `TypeTag` is the member `Type` of the D<: family.
    pub fn as_type_member(&self) -> Option<(Label, &Ty, &Ty)> {
        match self {
            Ty::TypeMem(l, lo, hi) => Some((l.clone(), lo, hi)),
            Ty::TypeTag(lo, hi) => Some((Label::type_label(), lo, hi)),
            _ => None,
        }
    }

    /// Intersection of a list; `Top` for the empty list.
    pub fn and_all(mut tys: Vec<Ty>) -> Ty {
        match tys.len() {
            0 => Ty::Top,
            _ => {
                let mut acc = tys.pop().unwrap();
                while let Some(t) = tys.pop() {
                    acc = Ty::and(t, acc);
                }
                acc
            }
        }
    }
}

impl Tm {
    pub fn var(v: VarRef) -> Tm {
        Tm::Var(v)
    }

    pub fn lam(annot: Ty, body: Tm) -> Tm {
        Tm::Lam(annot, Box::new(body))
    }

    pub fn app(f: Tm, a: Tm) -> Tm {
        Tm::App(Box::new(f), Box::new(a))
    }

    pub fn ty_lam(bound: Ty, body: Tm) -> Tm {
        Tm::TyLamSub(bound, Box::new(body))
    }

    pub fn ty_app(f: Tm, arg: Ty) -> Tm {
        Tm::TyAppSub(Box::new(f), arg)
    }

    pub fn sel(t: Tm, label: Label) -> Tm {
        Tm::SelField(Box::new(t), label)
    }

    pub fn invoke(t: Tm, m: Label, arg: Tm) -> Tm {
        Tm::InvokeMethod(Box::new(t), m, Box::new(arg))
    }

    pub fn fix(annot: Ty, body: Tm) -> Tm {
        Tm::Fix(annot, Box::new(body))
    }

    pub fn ref_new(t: Tm) -> Tm {
        Tm::RefNew(Box::new(t), None)
    }

    pub fn deref(t: Tm) -> Tm {
        Tm::Deref(Box::new(t))
    }

    pub fn assign(r: Tm, t: Tm) -> Tm {
        Tm::Assign(Box::new(r), Box::new(t))
    }

    pub fn is_var(&self) -> Option<VarRef> {
        match self {
            Tm::Var(v) => Some(*v),
            _ => None,
        }
    }
}

/// Errors on structurally malformed syntax (dangling indices or names).
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("bound index {0} escapes its binders")]
    DanglingIndex(usize),
    #[error("name {0:?} is not bound in the environment")]
    UnboundName(Name),
}
