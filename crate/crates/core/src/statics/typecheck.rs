//! Bidirectional type assignment. Inference synthesizes a type together
//! with an elaborated term in which every annotation the evaluator relies
//! on is filled in; subsumption is applied at arguments, member
//! initializations and eliminations only.

use crate::judgment::{on_big_stack, CheckConfig, Concl, Deriv, Judgment, Stop};
use crate::syntax::{
    gate_term, labels_disjoint, BindingKind, CalculusLevel, CtxEntry, Decl, Name, Program, Tm, Ty,
    TypingCtx, VarRef,
};

use super::subtype::{collect_members, MAX_CHASE};
use super::{wf_ty, Checker, StaticError};

type Inf = Result<(Ty, Tm, Option<Deriv>), Stop>;
type Chk = Result<(Tm, Option<Deriv>), Stop>;

/// Result of typing one term.
#[derive(Clone, Debug)]
pub struct Typing {
    pub judgment: Judgment,
    pub ty: Option<Ty>,
    /// The input with inferred annotations filled in.
    pub term: Option<Tm>,
}

/// Result of typing a program: definitions are typed in order, each seeing
/// the earlier ones.
#[derive(Clone, Debug)]
pub struct ProgramTyping {
    pub judgment: Judgment,
    pub def_types: Vec<Ty>,
    pub ty: Option<Ty>,
    pub program: Option<Program>,
}

/// An argument checked against a dependent function or method type.
struct Applied {
    ty: Ty,
    arg: Tm,
    d_arg: Option<Deriv>,
    rule: &'static str,
    /// The function type widened to a non-dependent one, with its proof.
    widened: Option<(Ty, Option<Deriv>)>,
}

fn fail(why: &'static str) -> Stop {
    Stop::Refuted(why)
}

fn join(acc: &mut Option<Stop>, e: Stop) {
    *acc = Some(acc.map_or(e, |a| a.join(e)));
}

impl Checker {
    fn typed(
        &self,
        rule: &'static str,
        g: &TypingCtx,
        t: &Tm,
        ty: &Ty,
        premises: Vec<Option<Deriv>>,
    ) -> Option<Deriv> {
        self.node(
            rule,
            || Concl::Typed {
                ctx: g.clone(),
                tm: t.clone(),
                ty: ty.clone(),
            },
            premises,
        )
    }

    fn wf(&self, g: &TypingCtx, t: &Ty) -> Result<(), Stop> {
        wf_ty(g, t).map_err(|_| fail("ill-formed type annotation"))
    }

    pub(crate) fn infer(&mut self, g: &TypingCtx, t: &Tm) -> Inf {
        self.nested(|c| c.infer_step(g, t))
    }

    fn infer_step(&mut self, g: &TypingCtx, t: &Tm) -> Inf {
        self.fuel.tick()?;
        match t {
            Tm::Var(VarRef::Free(x)) => match g.lookup(*x) {
                Some(CtxEntry {
                    ty,
                    kind: BindingKind::Term,
                }) => {
                    let ty = ty.clone();
                    let d = self.typed("Var", g, t, &ty, vec![]);
                    Ok((ty, t.clone(), d))
                }
                _ => Err(fail("unbound variable")),
            },
            Tm::Var(VarRef::Bound(_)) | Tm::Loc(_) => Err(fail("not a source term")),
            Tm::Lam(annot, body) => {
                self.wf(g, annot)?;
                let (g2, x) = g.with_term(CtxEntry::term(annot.clone()));
                let (r, b, d) = self.infer(&g2, &body.open(x.into()))?;
                let ty = if self.level == CalculusLevel::FSub {
                    if r.mentions(x) {
                        return Err(fail("result mentions the parameter"));
                    }
                    Ty::arrow(annot.clone(), r)
                } else {
                    Ty::dep_fun(annot.clone(), r.close(x))
                };
                let d = self.typed("TAbs", g, t, &ty, vec![d]);
                Ok((ty, Tm::Lam(annot.clone(), Box::new(b.close(x))), d))
            }
            Tm::App(f, a) => {
                let (ft, f2, df) = self.infer(g, f)?;
                let mut err = None;
                let fsub = self.level == CalculusLevel::FSub;
                for shape in self.shapes(g, &ft, None) {
                    let (p, r, dependent) = match &shape {
                        Ty::DepFun(p, r) => ((**p).clone(), (**r).clone(), true),
                        Ty::ArrowSub(p, r) => ((**p).clone(), (**r).clone(), false),
                        Ty::Bot => (Ty::Top, Ty::Bot, !fsub),
                        _ => continue,
                    };
                    let target = if dependent {
                        Ty::dep_fun(p.clone(), r.clone())
                    } else {
                        Ty::arrow(p.clone(), r.clone())
                    };
                    let attempt = (|| {
                        let mut dfun = self.widen(g, f, &ft, df.clone(), &target)?;
                        let (ty, a2, da, rule) = if dependent {
                            let ap = self.apply_dependent(g, &p, &r, a, &Ty::dep_fun)?;
                            if let Some((to, ds)) = ap.widened {
                                dfun = self.typed("Sub", g, f, &to, vec![dfun, ds]);
                            }
                            (ap.ty, ap.arg, ap.d_arg, ap.rule)
                        } else {
                            let (a2, da) = self.check(g, a, &p)?;
                            (r.clone(), a2, da, "TApp")
                        };
                        let d = self.typed(rule, g, t, &ty, vec![dfun, da]);
                        Ok((ty, Tm::App(Box::new(f2.clone()), Box::new(a2)), d))
                    })();
                    match attempt {
                        Ok(ok) => return Ok(ok),
                        Err(e) => join(&mut err, e),
                    }
                }
                Err(err.unwrap_or(fail("applying a non-function")))
            }
            Tm::TyLamSub(bound, body) => {
                self.wf(g, bound)?;
                let (g2, x) = g.with_term(CtxEntry::type_var(bound.clone()));
                let (r, b, d) = self.infer(&g2, &body.open(x.into()))?;
                let ty = Ty::all_sub(bound.clone(), r.close(x));
                let d = self.typed("TTAbs", g, t, &ty, vec![d]);
                Ok((ty, Tm::TyLamSub(bound.clone(), Box::new(b.close(x))), d))
            }
            Tm::TyAppSub(f, arg) => {
                self.wf(g, arg)?;
                let (ft, f2, df) = self.infer(g, f)?;
                let mut err = None;
                for shape in self.shapes(g, &ft, None) {
                    let (bound, body) = match &shape {
                        Ty::AllSub(b, r) => ((**b).clone(), (**r).clone()),
                        Ty::Bot => (Ty::Top, Ty::Bot),
                        _ => continue,
                    };
                    let target = Ty::all_sub(bound.clone(), body.clone());
                    let attempt = (|| {
                        let dfun = self.widen(g, f, &ft, df.clone(), &target)?;
                        let db = self.sub(g, arg, &bound)?;
                        let ty = body.instantiate(arg);
                        let d = self.typed("TTApp", g, t, &ty, vec![dfun, db]);
                        Ok((ty, Tm::TyAppSub(Box::new(f2.clone()), arg.clone()), d))
                    })();
                    match attempt {
                        Ok(ok) => return Ok(ok),
                        Err(e) => join(&mut err, e),
                    }
                }
                Err(err.unwrap_or(fail("type application of a non-polymorphic term")))
            }
            Tm::TypeVal(ty) => {
                self.wf(g, ty)?;
                let out = Ty::tag_eq(ty.clone());
                let d = self.typed("TTyp", g, t, &out, vec![]);
                Ok((out, t.clone(), d))
            }
            Tm::Rec(decls) => {
                if !labels_disjoint(decls) {
                    return Err(fail("duplicate labels"));
                }
                let mut tys = Vec::new();
                let mut out = Vec::new();
                let mut ds = Vec::new();
                for decl in decls {
                    let Decl::FieldInit { label, annot, body } = decl else {
                        return Err(fail("records hold fields only"));
                    };
                    let (fty, b, d) = match annot {
                        Some(a) => {
                            self.wf(g, a)?;
                            let (b, d) = self.check(g, body, a)?;
                            (a.clone(), b, d)
                        }
                        None => self.infer(g, body)?,
                    };
                    tys.push(Ty::fld(label.clone(), fty.clone()));
                    out.push(Decl::FieldInit {
                        label: label.clone(),
                        annot: Some(fty),
                        body: b,
                    });
                    ds.push(d);
                }
                let ty = Ty::and_all(tys);
                let d = self.typed("TRec", g, t, &ty, ds);
                Ok((ty, Tm::Rec(out), d))
            }
            Tm::SelField(e, l) => {
                let (et, e2, de) = self.infer(g, e)?;
                let (target, dt) = self.eliminate(g, e, &et, de, &|shape| match shape {
                    Ty::Fld(l2, _) if l2 == l => Some(shape.clone()),
                    Ty::Bot => Some(Ty::fld(l.clone(), Ty::Bot)),
                    _ => None,
                })?;
                let Ty::Fld(_, u) = target else {
                    unreachable!()
                };
                let d = self.typed("TFld", g, t, &u, vec![dt]);
                Ok((*u, Tm::SelField(Box::new(e2), l.clone()), d))
            }
            Tm::InvokeMethod(e, m, a) => {
                let (et, e2, de) = self.infer(g, e)?;
                let (target, dt) = self.eliminate(g, e, &et, de, &|shape| match shape {
                    Ty::Method(m2, ..) if m2 == m => Some(shape.clone()),
                    Ty::Bot => Some(Ty::method(m.clone(), Ty::Top, Ty::Bot)),
                    _ => None,
                })?;
                let Ty::Method(_, p, r) = target else {
                    unreachable!()
                };
                let mc = m.clone();
                let ap =
                    self.apply_dependent(g, &p, &r, a, &|p, r| Ty::method(mc.clone(), p, r))?;
                let (ty, a2, da, rule) = (ap.ty, ap.arg, ap.d_arg, ap.rule);
                let mut dt = dt;
                if let Some((to, ds)) = ap.widened {
                    dt = self.typed("Sub", g, e, &to, vec![dt, ds]);
                }
                let rule = if rule == "TAppVar" {
                    "TInvokeVar"
                } else {
                    "TInvoke"
                };
                let d = self.typed(rule, g, t, &ty, vec![dt, da]);
                Ok((
                    ty,
                    Tm::InvokeMethod(Box::new(e2), m.clone(), Box::new(a2)),
                    d,
                ))
            }
            Tm::Obj(decls) => self.infer_new(g, t, decls),
            Tm::Fix(annot, body) => {
                let x = Name::Term(g.term_len());
                let self_ty = annot.open(x.into());
                let (g2, x2) = g.with_term(CtxEntry::term(self_ty.clone()));
                debug_assert_eq!(x, x2);
                self.wf(&g2, &self_ty)?;
                let (b, d) = self.check(&g2, &body.open(x.into()), &self_ty)?;
                let ty = Ty::bind(annot.clone());
                let d = self.typed("TFix", g, t, &ty, vec![d]);
                Ok((ty, Tm::Fix(annot.clone(), Box::new(b.close(x))), d))
            }
            Tm::RefNew(e, annot) => {
                let (cell, e2, d) = match annot {
                    Some(a) => {
                        self.wf(g, a)?;
                        let (e2, d) = self.check(g, e, a)?;
                        (a.clone(), e2, d)
                    }
                    None => self.infer(g, e)?,
                };
                let ty = Ty::reference(cell.clone());
                let d = self.typed("TRef", g, t, &ty, vec![d]);
                Ok((ty, Tm::RefNew(Box::new(e2), Some(cell)), d))
            }
            Tm::Deref(e) => {
                let (et, e2, de) = self.infer(g, e)?;
                let (target, dt) = self.eliminate(g, e, &et, de, &|shape| match shape {
                    Ty::RefTy(_) => Some(shape.clone()),
                    _ => None,
                })?;
                let Ty::RefTy(cell) = target else {
                    unreachable!()
                };
                let d = self.typed("TDeref", g, t, &cell, vec![dt]);
                Ok((*cell, Tm::Deref(Box::new(e2)), d))
            }
            Tm::Assign(lhs, rhs) => {
                let (lt, l2, dl) = self.infer(g, lhs)?;
                let (target, dt) = self.eliminate(g, lhs, &lt, dl, &|shape| match shape {
                    Ty::RefTy(_) => Some(shape.clone()),
                    _ => None,
                })?;
                let Ty::RefTy(cell) = target else {
                    unreachable!()
                };
                let (r2, dr) = self.check(g, rhs, &cell)?;
                let d = self.typed("TAssign", g, t, &cell, vec![dt, dr]);
                Ok((*cell, Tm::Assign(Box::new(l2), Box::new(r2)), d))
            }
        }
    }

    /// `Γ ⊢ t : T`: variables go through variable typing (so they may be
    /// unpacked or packed), anything else is inferred and subsumed.
    pub(crate) fn check(&mut self, g: &TypingCtx, t: &Tm, want: &Ty) -> Chk {
        if let Tm::Var(VarRef::Free(x)) = t {
            self.fuel.tick()?;
            let d = self.var_has(g, *x, want)?;
            return Ok((t.clone(), d));
        }
        let (ty, t2, d) = self.infer(g, t)?;
        if ty == *want {
            return Ok((t2, d));
        }
        let ds = self.sub(g, &ty, want)?;
        Ok((t2, self.typed("Sub", g, t, want, vec![d, ds])))
    }

    /// Derivation of `t : target` from `t : ty`.
    fn widen(
        &mut self,
        g: &TypingCtx,
        t: &Tm,
        ty: &Ty,
        d: Option<Deriv>,
        target: &Ty,
    ) -> Result<Option<Deriv>, Stop> {
        if let Tm::Var(VarRef::Free(x)) = t {
            return self.var_has(g, *x, target);
        }
        if ty == target {
            return Ok(d);
        }
        let ds = self.sub(g, ty, target)?;
        Ok(self.typed("Sub", g, t, target, vec![d, ds]))
    }

    /// Applies `(x:P) → R` to `arg`. A variable argument is substituted
    /// into the result; otherwise the result must be made independent of
    /// the parameter, by widening through the argument's bounds if needed.
    fn apply_dependent(
        &mut self,
        g: &TypingCtx,
        p: &Ty,
        r: &Ty,
        arg: &Tm,
        fun_ty: &dyn Fn(Ty, Ty) -> Ty,
    ) -> Result<Applied, Stop> {
        if let Tm::Var(VarRef::Free(y)) = arg {
            let (a2, da) = self.check(g, arg, p)?;
            return Ok(Applied {
                ty: r.open((*y).into()),
                arg: a2,
                d_arg: da,
                rule: "TAppVar",
                widened: None,
            });
        }
        if !r.uses_hole() {
            let (a2, da) = self.check(g, arg, p)?;
            return Ok(Applied {
                ty: r.open(VarRef::Bound(0)),
                arg: a2,
                d_arg: da,
                rule: "TApp",
                widened: None,
            });
        }
        let (at, a2, da) = self.infer(g, arg)?;
        let z = g.clone().fresh_cmp();
        let Some(avoided) = avoid(&r.open(z.into()), z, &at, true, 0) else {
            return Err(fail("result type depends on a non-variable argument"));
        };
        // (x:P) → R  <:  (x:A) → R', which also subsumes the argument
        let from = fun_ty(p.clone(), r.clone());
        let to = fun_ty(at, avoided.clone());
        let ds = self.sub(g, &from, &to)?;
        Ok(Applied {
            ty: avoided,
            arg: a2,
            d_arg: da,
            rule: "TApp",
            widened: Some((to, ds)),
        })
    }

    /// Shapes `T` may be widened to: components of intersections, upper
    /// bounds of selections, bounds of type variables, and self types
    /// opened at `subj` (a fresh name when the subject is not a variable).
    fn shapes(&self, g: &TypingCtx, t: &Ty, subj: Option<Name>) -> Vec<Ty> {
        let mut out = Vec::new();
        self.shapes_into(g, t, subj, 0, &mut out);
        out
    }

    fn shapes_into(
        &self,
        g: &TypingCtx,
        t: &Ty,
        subj: Option<Name>,
        depth: usize,
        out: &mut Vec<Ty>,
    ) {
        match t {
            Ty::And(a, b) => {
                self.shapes_into(g, a, subj, depth, out);
                self.shapes_into(g, b, subj, depth, out);
            }
            Ty::Sel(VarRef::Free(y), l) if depth < MAX_CHASE => {
                for hi in self.upper_bounds(g, *y, l) {
                    self.shapes_into(g, &hi, subj, depth + 1, out);
                }
            }
            Ty::FVarSub(VarRef::Free(x)) if depth < MAX_CHASE => {
                if let Some(CtxEntry {
                    ty,
                    kind: BindingKind::TypeVar,
                }) = g.lookup(*x)
                {
                    self.shapes_into(g, &ty.clone(), subj, depth + 1, out);
                }
            }
            Ty::BindSelf(b) if depth < MAX_CHASE => {
                if let Some(z) = subj {
                    self.shapes_into(g, &b.open(z.into()), subj, depth + 1, out);
                }
            }
            _ => {
                if !out.contains(t) {
                    out.push(t.clone());
                }
            }
        }
    }

    /// Finds a target type for an elimination form on `e : et` and proves
    /// `e : target`.
    fn eliminate(
        &mut self,
        g: &TypingCtx,
        e: &Tm,
        et: &Ty,
        de: Option<Deriv>,
        pick: &dyn Fn(&Ty) -> Option<Ty>,
    ) -> Result<(Ty, Option<Deriv>), Stop> {
        let (subj, temp) = match e {
            Tm::Var(VarRef::Free(x)) => (*x, false),
            _ => (g.clone().fresh_cmp(), true),
        };
        let mut err = None;
        for shape in self.shapes(g, et, Some(subj)) {
            let Some(mut target) = pick(&shape) else {
                continue;
            };
            if temp && target.mentions(subj) {
                match avoid(&target, subj, et, true, 0) {
                    Some(t) => target = t,
                    None => continue,
                }
            }
            match self.widen(g, e, et, de.clone(), &target) {
                Ok(d) => return Ok((target, d)),
                Err(e) => join(&mut err, e),
            }
        }
        Err(err.unwrap_or(fail("no member of the required shape")))
    }

    /// Object creation: member types are collected under the self
    /// variable, then every member is checked against the full self type.
    fn infer_new(&mut self, g: &TypingCtx, t: &Tm, decls: &[Decl]) -> Inf {
        if !labels_disjoint(decls) {
            return Err(fail("duplicate labels"));
        }
        let x = Name::Term(g.term_len());
        let opened: Vec<Decl> = decls.iter().map(|d| d.open(x.into())).collect();
        // first pass: declared member types, then inferred ones
        let mut member_tys: Vec<Option<Ty>> = opened.iter().map(declared_member).collect();
        let known = Ty::and_all(member_tys.iter().flatten().cloned().collect());
        let (g1, _) = g.with_term(CtxEntry::term(known));
        for (i, d) in opened.iter().enumerate() {
            if member_tys[i].is_some() {
                continue;
            }
            member_tys[i] = Some(match d {
                Decl::FieldInit { label, body, .. } => {
                    Ty::fld(label.clone(), self.infer(&g1, body)?.0)
                }
                Decl::MethodInit {
                    label, param, body, ..
                } => {
                    self.wf(&g1, param)?;
                    let (g2, y) = g1.with_term(CtxEntry::term(param.clone()));
                    let r = self.infer(&g2, &body.open(y.into()))?.0;
                    Ty::method(label.clone(), param.clone(), r.close(y))
                }
                Decl::TypeInit { .. } => unreachable!(),
            });
        }
        let member_tys: Vec<Ty> = member_tys.into_iter().flatten().collect();
        let self_ty = Ty::and_all(member_tys.clone());
        let (g2, _) = g.with_term(CtxEntry::term(self_ty.clone()));
        self.wf(&g2, &self_ty)?;
        // second pass
        let mut out = Vec::new();
        let mut ds = Vec::new();
        for (d, mty) in opened.iter().zip(&member_tys) {
            let (d2, dd) = self.check_decl(&g2, d, mty)?;
            out.push(d2.close(x));
            ds.push(dd);
        }
        let ty = Ty::bind(self_ty.close(x));
        if !self.muts.no_good_bounds {
            ds.push(self.good_bounds_of(g, &ty)?);
        }
        let d = self.typed("TNew", g, t, &ty, ds);
        Ok((ty, Tm::Obj(out), d))
    }

    fn check_decl(
        &mut self,
        g: &TypingCtx,
        d: &Decl,
        mty: &Ty,
    ) -> Result<(Decl, Option<Deriv>), Stop> {
        let concl = || Concl::DeclTyped {
            ctx: g.clone(),
            decl: d.clone(),
            ty: mty.clone(),
        };
        match (d, mty) {
            (Decl::TypeInit { lo, hi, .. }, _) => {
                let prem = if lo == hi || self.muts.no_good_bounds {
                    // the premise `T <: T` only guards well-formedness
                    self.sub(g, hi, hi)?
                } else {
                    self.sub(g, lo, hi)?
                };
                Ok((d.clone(), self.node("DMem", concl, vec![prem])))
            }
            (Decl::FieldInit { label, body, .. }, Ty::Fld(_, fty)) => {
                let (b, db) = self.check(g, body, fty)?;
                let d2 = Decl::FieldInit {
                    label: label.clone(),
                    annot: Some((**fty).clone()),
                    body: b,
                };
                Ok((d2, self.node("DFld", concl, vec![db])))
            }
            (Decl::MethodInit { label, body, .. }, Ty::Method(_, p, r)) => {
                let (g3, y) = g.with_term(CtxEntry::term((**p).clone()));
                let want = r.open(y.into());
                self.wf(&g3, &want)?;
                let (b, db) = self.check(&g3, &body.open(y.into()), &want)?;
                let d2 = Decl::MethodInit {
                    label: label.clone(),
                    param: (**p).clone(),
                    result: Some((**r).clone()),
                    body: b.close(y),
                };
                Ok((d2, self.node("DFun", concl, vec![db])))
            }
            _ => Err(fail("member does not match its type")),
        }
    }
}

/// The type a member declares without looking at its body.
fn declared_member(d: &Decl) -> Option<Ty> {
    match d {
        Decl::TypeInit { label, lo, hi } => Some(Ty::mem(label.clone(), lo.clone(), hi.clone())),
        Decl::FieldInit {
            label,
            annot: Some(a),
            ..
        } => Some(Ty::fld(label.clone(), a.clone())),
        Decl::MethodInit {
            label,
            param,
            result: Some(r),
            ..
        } => Some(Ty::method(label.clone(), param.clone(), r.clone())),
        _ => None,
    }
}

/// A supertype (`positive`) or subtype of `t` not mentioning `z`, where `z`
/// has type `zty`. Selections on `z` are replaced by their bounds. Cells
/// are invariant, so a reference type mentioning `z` has no such bound.
pub(crate) fn avoid(t: &Ty, z: Name, zty: &Ty, positive: bool, depth: usize) -> Option<Ty> {
    if !t.mentions(z) {
        return Some(t.clone());
    }
    let go = |u: &Ty, pos: bool| avoid(u, z, zty, pos, depth).map(Box::new);
    Some(match t {
        Ty::Sel(VarRef::Free(y), l) if *y == z => {
            let mut bounds = Vec::new();
            collect_members(zty, z, l, 0, &mut bounds);
            let fallback = if positive { Ty::Top } else { Ty::Bot };
            match bounds.first() {
                Some((lo, hi)) if depth < MAX_CHASE => {
                    let b = if positive { hi } else { lo };
                    avoid(b, z, zty, positive, depth + 1).unwrap_or(fallback)
                }
                _ => fallback,
            }
        }
        Ty::And(a, b) => Ty::And(go(a, positive)?, go(b, positive)?),
        Ty::Or(a, b) => Ty::Or(go(a, positive)?, go(b, positive)?),
        Ty::TypeMem(l, lo, hi) => Ty::TypeMem(l.clone(), go(lo, !positive)?, go(hi, positive)?),
        Ty::TypeTag(lo, hi) => Ty::TypeTag(go(lo, !positive)?, go(hi, positive)?),
        Ty::Fld(l, u) => Ty::Fld(l.clone(), go(u, positive)?),
        Ty::Method(m, p, r) => Ty::Method(m.clone(), go(p, !positive)?, go(r, positive)?),
        Ty::DepFun(p, r) => Ty::DepFun(go(p, !positive)?, go(r, positive)?),
        Ty::AllSub(b, r) => Ty::AllSub(go(b, !positive)?, go(r, positive)?),
        Ty::ArrowSub(p, r) => Ty::ArrowSub(go(p, !positive)?, go(r, positive)?),
        Ty::BindSelf(b) => Ty::BindSelf(go(b, positive)?),
        Ty::RefTy(_) => return None,
        Ty::Top | Ty::Bot | Ty::Sel(..) | Ty::FVarSub(_) => t.clone(),
    })
}

/// Infers the type of `t` under `g`.
pub fn typecheck(
    level: CalculusLevel,
    g: &TypingCtx,
    t: &Tm,
    cfg: &CheckConfig,
) -> Result<Typing, StaticError> {
    gate_term(level, t)?;
    t.locally_closed()
        .map_err(|e| StaticError::IllFormed(e.to_string()))?;
    if let Some(n) = t.fv().into_iter().find(|n| !g.binds(*n)) {
        return Err(StaticError::IllFormed(format!("unbound name {n:?}")));
    }
    Ok(on_big_stack(|| {
        let mut c = Checker::new(level, cfg);
        let r = c.infer(g, t);
        match r {
            Ok((ty, tm, d)) => Typing {
                judgment: c.finish(Ok(d)),
                ty: Some(ty),
                term: Some(tm),
            },
            Err(e) => Typing {
                judgment: c.finish(Err(e)),
                ty: None,
                term: None,
            },
        }
    }))
}

/// Types the definitions of a program in order and then its body, sharing
/// one fuel budget.
pub fn typecheck_program(p: &Program, cfg: &CheckConfig) -> Result<ProgramTyping, StaticError> {
    for (_, t) in &p.defs {
        gate_term(p.level, t)?;
    }
    gate_term(p.level, &p.body)?;
    Ok(on_big_stack(|| program_typing(p, cfg)))
}

fn program_typing(p: &Program, cfg: &CheckConfig) -> ProgramTyping {
    let mut c = Checker::new(p.level, cfg);
    let mut g = TypingCtx::new();
    let mut def_types = Vec::new();
    let mut defs = Vec::new();
    let mut premises = Vec::new();
    for (name, t) in &p.defs {
        match c.infer(&g, t) {
            Ok((ty, tm, d)) => {
                g.push_term(CtxEntry::term(ty.clone()));
                def_types.push(ty);
                defs.push((name.clone(), tm));
                premises.push(d);
            }
            Err(e) => {
                return ProgramTyping {
                    judgment: c.finish(Err(e)),
                    def_types,
                    ty: None,
                    program: None,
                }
            }
        }
    }
    match c.infer(&g, &p.body) {
        Ok((ty, body, d)) => {
            premises.push(d);
            let root = c.typed("Program", &TypingCtx::new(), &p.body, &ty, premises);
            ProgramTyping {
                judgment: c.finish(Ok(root)),
                def_types,
                ty: Some(ty),
                program: Some(Program {
                    level: p.level,
                    defs,
                    body,
                }),
            }
        }
        Err(e) => ProgramTyping {
            judgment: c.finish(Err(e)),
            def_types,
            ty: None,
            program: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::Verdict;
    use crate::syntax::{parse_program, parse_term, parse_type};
    use CalculusLevel as L;

    fn infer(level: L, src: &str) -> Typing {
        typecheck(
            level,
            &TypingCtx::new(),
            &parse_term(level, src).unwrap(),
            &CheckConfig::default(),
        )
        .unwrap()
    }

    fn ty(level: L, src: &str) -> Ty {
        parse_type(level, src).unwrap()
    }

    #[test]
    fn dependent_functions_over_type_values() {
        let t = infer(L::DSub, "fun(x:{ Type <: Top }) fun(z:x.Type) z");
        assert_eq!(
            t.ty.unwrap(),
            ty(L::DSub, "all(x:{ Type <: Top }) all(z:x.Type) x.Type")
        );
        let t = infer(
            L::DSub,
            "(fun(x:{ Type <: Top }) fun(z:x.Type) z) (typeval Top)",
        );
        assert_eq!(t.ty.unwrap(), ty(L::DSub, "all(z:Top) Top"));
    }

    #[test]
    fn objects_and_polymorphism() {
        assert_eq!(
            infer(L::Dot, "new (x) { A = Top }").ty.unwrap(),
            ty(L::Dot, "rec(x) { A : Top .. Top }")
        );
        assert_eq!(
            infer(L::FSub, "tfun(X<:Top) fun(y:X) y").ty.unwrap(),
            ty(L::FSub, "all(X<:Top) X -> X")
        );
    }

    #[test]
    fn bad_bounds_objects_are_rejected() {
        let t = infer(L::Dot, "new (x) { A : { l1 : Top } .. { l2 : Top } }");
        assert_eq!(t.judgment.verdict, Verdict::Refuted);
    }

    #[test]
    fn methods_and_fields() {
        let t = infer(
            L::Dot,
            "(new (o) { A = Top; id(y: o.A) : o.A = y; f : Top = o }).id(new (u) { })",
        );
        assert_eq!(
            t.judgment.verdict,
            Verdict::Proved,
            "{:?}",
            t.judgment.reason
        );
        assert_eq!(t.ty.unwrap(), Ty::Top);
        let t = infer(L::Dot, "(new (o) { l = new (p) { } }).l");
        assert_eq!(t.judgment.verdict, Verdict::Proved);
        let t = infer(L::Dot, "(new (o) { l = new (p) { } }).k");
        assert_eq!(t.judgment.verdict, Verdict::Refuted);
    }

    #[test]
    fn programs_fold_definitions() {
        let p = parse_program(
            L::DSub,
            "id = fun(x:{ Type <: Top }) fun(z:x.Type) z\nt = typeval Top\nid t",
        )
        .unwrap();
        let r = typecheck_program(&p, &CheckConfig::default()).unwrap();
        assert_eq!(r.judgment.verdict, Verdict::Proved);
        assert_eq!(r.def_types.len(), 2);
        // a variable argument is substituted into the result
        let t_sel = Ty::sel(VarRef::term(1), crate::syntax::Label::type_label());
        assert_eq!(r.ty.unwrap(), Ty::dep_fun(t_sel.clone(), t_sel));
    }

    #[test]
    fn references_elaborate_their_cell_type() {
        let level = L::DSubBotAndOrRecFixMut;
        let t = infer(level, "ref (typeval Top)");
        assert_eq!(t.ty.unwrap(), ty(level, "Ref { Type = Top }"));
        assert!(matches!(t.term.unwrap(), Tm::RefNew(_, Some(_))));
    }
}
