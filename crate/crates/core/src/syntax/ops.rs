//! Locally nameless kit: opening, closing, renaming, free variables, sizes.

use std::collections::BTreeSet;

use super::{Decl, Name, SyntaxError, Tm, Ty, VarRef};

pub type NameSet = BTreeSet<Name>;

type VarFn<'a> = &'a mut dyn FnMut(usize, VarRef) -> VarRef;
type VarPred<'a> = &'a mut dyn FnMut(usize, VarRef) -> bool;

impl Ty {
    /// Rebuilds the type, mapping every variable occurrence. The callback
    /// receives the number of binders crossed so far.
    pub fn map_vars(&self, depth: usize, f: VarFn<'_>) -> Ty {
        let b = |t: &Ty, d: usize, f: VarFn<'_>| Box::new(t.map_vars(d, f));
        match self {
            Ty::Top => Ty::Top,
            Ty::Bot => Ty::Bot,
            Ty::And(a, c) => Ty::And(b(a, depth, f), b(c, depth, f)),
            Ty::Or(a, c) => Ty::Or(b(a, depth, f), b(c, depth, f)),
            Ty::TypeMem(l, lo, hi) => Ty::TypeMem(l.clone(), b(lo, depth, f), b(hi, depth, f)),
            Ty::Fld(l, t) => Ty::Fld(l.clone(), b(t, depth, f)),
            Ty::Method(m, p, r) => Ty::Method(m.clone(), b(p, depth, f), b(r, depth + 1, f)),
            Ty::Sel(v, l) => Ty::Sel(f(depth, *v), l.clone()),
            Ty::BindSelf(t) => Ty::BindSelf(b(t, depth + 1, f)),
            Ty::DepFun(p, r) => Ty::DepFun(b(p, depth, f), b(r, depth + 1, f)),
            Ty::TypeTag(lo, hi) => Ty::TypeTag(b(lo, depth, f), b(hi, depth, f)),
            Ty::RefTy(t) => Ty::RefTy(b(t, depth, f)),
            Ty::FVarSub(v) => Ty::FVarSub(f(depth, *v)),
            Ty::AllSub(bd, t) => Ty::AllSub(b(bd, depth, f), b(t, depth + 1, f)),
            Ty::ArrowSub(a, c) => Ty::ArrowSub(b(a, depth, f), b(c, depth, f)),
        }
    }

    /// True if the predicate holds for some variable occurrence.
    pub fn any_var(&self, depth: usize, f: VarPred<'_>) -> bool {
        match self {
            Ty::Top | Ty::Bot => false,
            Ty::And(a, c) | Ty::Or(a, c) | Ty::TypeTag(a, c) | Ty::ArrowSub(a, c) => {
                a.any_var(depth, f) || c.any_var(depth, f)
            }
            Ty::TypeMem(_, lo, hi) => lo.any_var(depth, f) || hi.any_var(depth, f),
            Ty::Fld(_, t) | Ty::RefTy(t) => t.any_var(depth, f),
            Ty::Method(_, p, r) | Ty::DepFun(p, r) | Ty::AllSub(p, r) => {
                p.any_var(depth, f) || r.any_var(depth + 1, f)
            }
            Ty::Sel(v, _) | Ty::FVarSub(v) => f(depth, *v),
            Ty::BindSelf(t) => t.any_var(depth + 1, f),
        }
    }

    /// Fills the outermost bound hole with `v` (written `T^x`).
    pub fn open(&self, v: VarRef) -> Ty {
        self.open_at(0, v)
    }

    pub fn open_at(&self, k: usize, v: VarRef) -> Ty {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Bound(i) if i == d + k => v,
            other => other,
        })
    }

    /// Abstracts the free name `n` into the outermost hole; inverse of `open`.
    pub fn close(&self, n: Name) -> Ty {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Free(m) if m == n => VarRef::Bound(d),
            other => other,
        })
    }

    /// Renames a free variable.
    pub fn rename(&self, from: Name, to: VarRef) -> Ty {
        self.map_vars(0, &mut |_, x| match x {
            VarRef::Free(m) if m == from => to,
            other => other,
        })
    }

    /// Shifts bound indices at or above `cutoff` by one, making room for a
    /// new binder.
    pub fn shift(&self, cutoff: usize) -> Ty {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Bound(i) if i >= d + cutoff => VarRef::Bound(i + 1),
            other => other,
        })
    }

    /// True if the outermost hole is used.
    pub fn uses_hole(&self) -> bool {
        self.any_var(0, &mut |d, x| x == VarRef::Bound(d))
    }

    pub fn mentions(&self, n: Name) -> bool {
        self.any_var(0, &mut |_, x| x == VarRef::Free(n))
    }

    pub fn mentions_any(&self, pred: &dyn Fn(Name) -> bool) -> bool {
        self.any_var(0, &mut |_, x| matches!(x, VarRef::Free(n) if pred(n)))
    }

    pub fn fv(&self) -> NameSet {
        let mut out = NameSet::new();
        self.any_var(0, &mut |_, x| {
            if let VarRef::Free(n) = x {
                out.insert(n);
            }
            false
        });
        out
    }

    /// No bound index escapes its binders.
    pub fn locally_closed(&self) -> Result<(), SyntaxError> {
        self.locally_closed_under(0)
    }

    pub fn locally_closed_under(&self, holes: usize) -> Result<(), SyntaxError> {
        let mut bad = None;
        self.any_var(0, &mut |d, x| match x {
            VarRef::Bound(i) if i >= d + holes => {
                bad = Some(i);
                true
            }
            _ => false,
        });
        match bad {
            Some(i) => Err(SyntaxError::DanglingIndex(i)),
            None => Ok(()),
        }
    }

    /// Replaces the outermost F<: type-variable hole by a type.
    pub fn instantiate(&self, with: &Ty) -> Ty {
        self.instantiate_at(0, with)
    }

    fn instantiate_at(&self, depth: usize, with: &Ty) -> Ty {
        let go = |t: &Ty, d: usize| Box::new(t.instantiate_at(d, with));
        match self {
            Ty::FVarSub(VarRef::Bound(i)) if *i == depth => with.clone(),
            Ty::Sel(VarRef::Bound(i), _) if *i == depth => {
                // a type cannot stand for a path; leave the hole as Top
                Ty::Top
            }
            Ty::Top | Ty::Bot | Ty::Sel(..) | Ty::FVarSub(_) => self.clone(),
            Ty::And(a, c) => Ty::And(go(a, depth), go(c, depth)),
            Ty::Or(a, c) => Ty::Or(go(a, depth), go(c, depth)),
            Ty::TypeMem(l, lo, hi) => Ty::TypeMem(l.clone(), go(lo, depth), go(hi, depth)),
            Ty::Fld(l, t) => Ty::Fld(l.clone(), go(t, depth)),
            Ty::Method(m, p, r) => Ty::Method(m.clone(), go(p, depth), go(r, depth + 1)),
            Ty::BindSelf(t) => Ty::BindSelf(go(t, depth + 1)),
            Ty::DepFun(p, r) => Ty::DepFun(go(p, depth), go(r, depth + 1)),
            Ty::TypeTag(lo, hi) => Ty::TypeTag(go(lo, depth), go(hi, depth)),
            Ty::RefTy(t) => Ty::RefTy(go(t, depth)),
            Ty::AllSub(b, t) => Ty::AllSub(go(b, depth), go(t, depth + 1)),
            Ty::ArrowSub(a, c) => Ty::ArrowSub(go(a, depth), go(c, depth)),
        }
    }

    /// Number of constructors.
    pub fn size(&self) -> usize {
        match self {
            Ty::Top | Ty::Bot | Ty::Sel(..) | Ty::FVarSub(_) => 1,
            Ty::And(a, c)
            | Ty::Or(a, c)
            | Ty::TypeTag(a, c)
            | Ty::ArrowSub(a, c)
            | Ty::TypeMem(_, a, c)
            | Ty::Method(_, a, c)
            | Ty::DepFun(a, c)
            | Ty::AllSub(a, c) => 1 + a.size() + c.size(),
            Ty::Fld(_, t) | Ty::RefTy(t) | Ty::BindSelf(t) => 1 + t.size(),
        }
    }
}

impl Decl {
    fn map_vars(&self, depth: usize, f: VarFn<'_>) -> Decl {
        match self {
            Decl::TypeInit { label, lo, hi } => Decl::TypeInit {
                label: label.clone(),
                lo: lo.map_vars(depth, f),
                hi: hi.map_vars(depth, f),
            },
            Decl::FieldInit { label, annot, body } => Decl::FieldInit {
                label: label.clone(),
                annot: annot.as_ref().map(|t| t.map_vars(depth, f)),
                body: body.map_vars(depth, f),
            },
            Decl::MethodInit {
                label,
                param,
                result,
                body,
            } => Decl::MethodInit {
                label: label.clone(),
                param: param.map_vars(depth, f),
                result: result.as_ref().map(|t| t.map_vars(depth + 1, f)),
                body: body.map_vars(depth + 1, f),
            },
        }
    }

    fn any_var(&self, depth: usize, f: VarPred<'_>) -> bool {
        match self {
            Decl::TypeInit { lo, hi, .. } => lo.any_var(depth, f) || hi.any_var(depth, f),
            Decl::FieldInit { annot, body, .. } => {
                annot.as_ref().is_some_and(|t| t.any_var(depth, f)) || body.any_var(depth, f)
            }
            Decl::MethodInit {
                param,
                result,
                body,
                ..
            } => {
                param.any_var(depth, f)
                    || result.as_ref().is_some_and(|t| t.any_var(depth + 1, f))
                    || body.any_var(depth + 1, f)
            }
        }
    }

    /// Opens the self hole of a member declaration.
    pub fn open(&self, v: VarRef) -> Decl {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Bound(i) if i == d => v,
            other => other,
        })
    }

    /// Abstracts `n` as the self hole; inverse of [`Decl::open`].
    pub fn close(&self, n: Name) -> Decl {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Free(m) if m == n => VarRef::Bound(d),
            other => other,
        })
    }

    pub fn size(&self) -> usize {
        1 + match self {
            Decl::TypeInit { lo, hi, .. } => {
                if lo == hi {
                    lo.size()
                } else {
                    lo.size() + hi.size()
                }
            }
            Decl::FieldInit { annot, body, .. } => annot.as_ref().map_or(0, Ty::size) + body.size(),
            Decl::MethodInit {
                param,
                result,
                body,
                ..
            } => param.size() + result.as_ref().map_or(0, Ty::size) + body.size(),
        }
    }
}

impl Tm {
    /// Maps every variable occurrence, in terms and in embedded types.
    pub fn map_vars(&self, depth: usize, f: VarFn<'_>) -> Tm {
        match self {
            Tm::Var(v) => Tm::Var(f(depth, *v)),
            Tm::Lam(a, b) => Tm::Lam(a.map_vars(depth, f), Box::new(b.map_vars(depth + 1, f))),
            Tm::App(a, b) => Tm::App(
                Box::new(a.map_vars(depth, f)),
                Box::new(b.map_vars(depth, f)),
            ),
            Tm::TyLamSub(a, b) => {
                Tm::TyLamSub(a.map_vars(depth, f), Box::new(b.map_vars(depth + 1, f)))
            }
            Tm::TyAppSub(t, a) => {
                Tm::TyAppSub(Box::new(t.map_vars(depth, f)), a.map_vars(depth, f))
            }
            Tm::TypeVal(t) => Tm::TypeVal(t.map_vars(depth, f)),
            Tm::Rec(ds) => Tm::Rec(ds.iter().map(|d| d.map_vars(depth, f)).collect()),
            Tm::SelField(t, l) => Tm::SelField(Box::new(t.map_vars(depth, f)), l.clone()),
            Tm::InvokeMethod(t, m, a) => Tm::InvokeMethod(
                Box::new(t.map_vars(depth, f)),
                m.clone(),
                Box::new(a.map_vars(depth, f)),
            ),
            Tm::Obj(ds) => Tm::Obj(ds.iter().map(|d| d.map_vars(depth + 1, f)).collect()),
            Tm::Fix(a, b) => Tm::Fix(a.map_vars(depth + 1, f), Box::new(b.map_vars(depth + 1, f))),
            Tm::RefNew(t, a) => Tm::RefNew(
                Box::new(t.map_vars(depth, f)),
                a.as_ref().map(|a| a.map_vars(depth, f)),
            ),
            Tm::Deref(t) => Tm::Deref(Box::new(t.map_vars(depth, f))),
            Tm::Assign(a, b) => Tm::Assign(
                Box::new(a.map_vars(depth, f)),
                Box::new(b.map_vars(depth, f)),
            ),
            Tm::Loc(l) => Tm::Loc(*l),
        }
    }

    pub fn any_var(&self, depth: usize, f: VarPred<'_>) -> bool {
        match self {
            Tm::Var(v) => f(depth, *v),
            Tm::Lam(a, b) | Tm::TyLamSub(a, b) => a.any_var(depth, f) || b.any_var(depth + 1, f),
            Tm::App(a, b) | Tm::Assign(a, b) => a.any_var(depth, f) || b.any_var(depth, f),
            Tm::TyAppSub(t, a) => t.any_var(depth, f) || a.any_var(depth, f),
            Tm::TypeVal(t) => t.any_var(depth, f),
            Tm::Rec(ds) => ds.iter().any(|d| d.any_var(depth, f)),
            Tm::SelField(t, _) | Tm::Deref(t) => t.any_var(depth, f),
            Tm::InvokeMethod(t, _, a) => t.any_var(depth, f) || a.any_var(depth, f),
            Tm::Obj(ds) => ds.iter().any(|d| d.any_var(depth + 1, f)),
            Tm::Fix(a, b) => a.any_var(depth + 1, f) || b.any_var(depth + 1, f),
            Tm::RefNew(t, a) => {
                t.any_var(depth, f) || a.as_ref().is_some_and(|a| a.any_var(depth, f))
            }
            Tm::Loc(_) => false,
        }
    }

    pub fn open(&self, v: VarRef) -> Tm {
        self.open_at(0, v)
    }

    pub fn open_at(&self, k: usize, v: VarRef) -> Tm {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Bound(i) if i == d + k => v,
            other => other,
        })
    }

    pub fn close(&self, n: Name) -> Tm {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Free(m) if m == n => VarRef::Bound(d),
            other => other,
        })
    }

    pub fn rename(&self, from: Name, to: VarRef) -> Tm {
        self.map_vars(0, &mut |_, x| match x {
            VarRef::Free(m) if m == from => to,
            other => other,
        })
    }

    pub fn shift(&self, cutoff: usize) -> Tm {
        self.map_vars(0, &mut |d, x| match x {
            VarRef::Bound(i) if i >= d + cutoff => VarRef::Bound(i + 1),
            other => other,
        })
    }

    pub fn uses_hole(&self) -> bool {
        self.any_var(0, &mut |d, x| x == VarRef::Bound(d))
    }

    pub fn fv(&self) -> NameSet {
        let mut out = NameSet::new();
        self.any_var(0, &mut |_, x| {
            if let VarRef::Free(n) = x {
                out.insert(n);
            }
            false
        });
        out
    }

    pub fn locally_closed(&self) -> Result<(), SyntaxError> {
        let mut bad = None;
        self.any_var(0, &mut |d, x| match x {
            VarRef::Bound(i) if i >= d => {
                bad = Some(i);
                true
            }
            _ => false,
        });
        match bad {
            Some(i) => Err(SyntaxError::DanglingIndex(i)),
            None => Ok(()),
        }
    }

    /// Number of constructors, counting embedded types and declarations.
    pub fn size(&self) -> usize {
        match self {
            Tm::Var(_) | Tm::Loc(_) => 1,
            Tm::Lam(a, b) | Tm::TyLamSub(a, b) | Tm::Fix(a, b) => 1 + a.size() + b.size(),
            Tm::App(a, b) | Tm::Assign(a, b) => 1 + a.size() + b.size(),
            Tm::TyAppSub(t, a) => 1 + t.size() + a.size(),
            Tm::TypeVal(t) => 1 + t.size(),
            Tm::Rec(ds) | Tm::Obj(ds) => 1 + ds.iter().map(Decl::size).sum::<usize>(),
            Tm::SelField(t, _) | Tm::Deref(t) => 1 + t.size(),
            Tm::InvokeMethod(t, _, a) => 1 + t.size() + a.size(),
            Tm::RefNew(t, a) => 1 + t.size() + a.as_ref().map_or(0, Ty::size),
        }
    }
}

/// True if `n` occurs in neither set.
pub fn fresh_is_free(n: Name, sets: &[&NameSet]) -> bool {
    sets.iter().all(|s| !s.contains(&n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Label;

    fn a() -> Label {
        Label::ty("A")
    }

    #[test]
    fn open_self_selection() {
        let t = Ty::bind(Ty::sel(VarRef::Bound(0), a()));
        let z = Name::Cmp(3);
        match &t {
            Ty::BindSelf(body) => assert_eq!(body.open(z.into()), Ty::sel(z.into(), a())),
            _ => unreachable!(),
        }
        assert_eq!(Ty::Top.open(z.into()), Ty::Top);
    }

    #[test]
    fn close_inverts_open_under_binders() {
        // rec(s) { A : Bot .. hole.A } with the hole one level up
        let body = Ty::bind(Ty::mem(a(), Ty::Bot, Ty::sel(VarRef::Bound(1), a())));
        let z = Name::Term(7);
        let opened = body.open(z.into());
        assert_eq!(
            opened,
            Ty::bind(Ty::mem(a(), Ty::Bot, Ty::sel(z.into(), a())))
        );
        assert_eq!(opened.close(z), body);
    }

    #[test]
    fn fv_and_rename() {
        let x = Name::Term(0);
        let y = Name::Term(1);
        let t = Ty::sel(x.into(), Label::ty("L"));
        assert_eq!(t.fv(), [x].into_iter().collect());
        assert_eq!(t.rename(x, y.into()), Ty::sel(y.into(), Label::ty("L")));
    }

    #[test]
    fn shift_skips_locally_bound() {
        // all(x:Top) hole1.A  -- index 1 refers outside, index 0 would be x
        let t = Ty::dep_fun(Ty::Top, Ty::sel(VarRef::Bound(1), a()));
        assert_eq!(
            t.shift(0),
            Ty::dep_fun(Ty::Top, Ty::sel(VarRef::Bound(2), a()))
        );
        let u = Ty::dep_fun(Ty::Top, Ty::sel(VarRef::Bound(0), a()));
        assert_eq!(u.shift(0), u);
    }

    #[test]
    fn method_body_sees_self_one_level_up() {
        let body = Tm::Var(VarRef::Bound(1));
        let d = Decl::MethodInit {
            label: Label::method("m"),
            param: Ty::Top,
            result: None,
            body,
        };
        let s = Name::Term(4);
        match d.open(s.into()) {
            Decl::MethodInit { body, .. } => assert_eq!(body, Tm::Var(s.into())),
            _ => unreachable!(),
        }
    }

    #[test]
    fn instantiate_replaces_type_variable() {
        let t = Ty::arrow(Ty::FVarSub(VarRef::Bound(0)), Ty::FVarSub(VarRef::Bound(0)));
        assert_eq!(t.instantiate(&Ty::Top), Ty::arrow(Ty::Top, Ty::Top));
    }
}
