//! Syntax-directed subtyping. Transitivity is only available fused into the
//! selection rules, whose premise `Γ ⊢ x : {L : ⊥..T}` is derived by variable
//! typing (Var, VarUnpack, VarPack) followed by one subsumption step.

use crate::judgment::{Concl, Deriv, Stop};
use crate::syntax::{BindingKind, CtxEntry, Label, Name, Ty, TypingCtx, VarRef};

use super::{Checker, R};

/// Longest chain of nested self-type unpackings explored for one variable.
const MAX_UNPACK: usize = 3;
/// How far upper bounds of selections are chased when looking for shapes.
pub(crate) const MAX_CHASE: usize = 3;

/// One VarUnpack step: from `x : before`, via `before <: rec`, to `x : after`.
struct UnpackStep {
    before: Ty,
    rec: Ty,
    sub_d: Option<Option<Deriv>>,
    after: Ty,
}

fn alt(fail: &mut Option<Stop>, e: Stop) {
    *fail = Some(match *fail {
        None => e,
        Some(f) => f.join(e),
    });
}

impl Checker {
    /// `{ L : lo .. hi }` in the syntax of the current level.
    pub(crate) fn member(&self, l: &Label, lo: Ty, hi: Ty) -> Ty {
        if l.is_type_label() && self.level.is_dsub_family() {
            Ty::tag(lo, hi)
        } else {
            Ty::mem(l.clone(), lo, hi)
        }
    }

    pub(crate) fn sub(&mut self, g: &TypingCtx, s: &Ty, u: &Ty) -> R {
        self.nested(|c| c.sub_step(g, s, u))
    }

    fn sub_step(&mut self, g: &TypingCtx, s: &Ty, u: &Ty) -> R {
        self.fuel.tick()?;
        let concl = || Concl::Sub {
            ctx: g.clone(),
            lhs: s.clone(),
            rhs: u.clone(),
        };
        if *u == Ty::Top {
            return Ok(self.node("Top", concl, vec![]));
        }
        if *s == Ty::Bot {
            return Ok(self.node("Bot", concl, vec![]));
        }
        // invertible rules first
        if let Ty::And(a, b) = u {
            let d1 = self.sub(g, s, a)?;
            let d2 = self.sub(g, s, b)?;
            return Ok(self.node("And2", concl, vec![d1, d2]));
        }
        if let Ty::Or(a, b) = s {
            let d1 = self.sub(g, a, u)?;
            let d2 = self.sub(g, b, u)?;
            return Ok(self.node("Or1", concl, vec![d1, d2]));
        }
        let mut fail = None;
        if let Some(r) = self.structural(g, s, u) {
            match r {
                Ok(d) => return Ok(d),
                Err(e) => alt(&mut fail, e),
            }
        }
        if let Ty::And(a, b) = s {
            match self.sub(g, a, u) {
                Ok(d) => return Ok(self.node("And11", concl, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
            match self.sub(g, b, u) {
                Ok(d) => return Ok(self.node("And12", concl, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
        }
        if let Ty::Or(a, b) = u {
            match self.sub(g, s, a) {
                Ok(d) => return Ok(self.node("Or21", concl, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
            match self.sub(g, s, b) {
                Ok(d) => return Ok(self.node("Or22", concl, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
        }
        if let Ty::Sel(VarRef::Free(x), l) = s {
            let want = self.member(l, Ty::Bot, u.clone());
            match self.var_has(g, *x, &want) {
                Ok(d) => return Ok(self.node("Sel1", concl, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
        }
        if let Ty::Sel(VarRef::Free(x), l) = u {
            let want = self.member(l, s.clone(), Ty::Top);
            match self.var_has(g, *x, &want) {
                Ok(d) => return Ok(self.node("Sel2", concl, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
        }
        if let Ty::FVarSub(VarRef::Free(x)) = s {
            match g.lookup(*x) {
                Some(CtxEntry {
                    ty: bound,
                    kind: BindingKind::TypeVar,
                }) => {
                    let bound = bound.clone();
                    match self.sub(g, &bound, u) {
                        Ok(d) => return Ok(self.node("TVarBound", concl, vec![d])),
                        Err(e) => alt(&mut fail, e),
                    }
                }
                _ => alt(&mut fail, Stop::Refuted("unbound type variable")),
            }
        }
        if let Ty::BindSelf(b) = s {
            let mut g2 = g.clone();
            let z = g2.fresh_cmp();
            let opened = b.open(z.into());
            g2.push_cmp_as(z, CtxEntry::term(opened.clone()));
            match self.sub(&g2, &opened, u) {
                Ok(d) => return Ok(self.node("Bind1", concl, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
        }
        if let Some(r) = self.trans(g, s, u) {
            match r {
                Ok(d) => return Ok(d),
                Err(e) => alt(&mut fail, e),
            }
        }
        Err(fail.unwrap_or(Stop::Refuted("no subtyping rule applies")))
    }

    /// Rules whose two sides share a head constructor.
    fn structural(&mut self, g: &TypingCtx, s: &Ty, u: &Ty) -> Option<R> {
        let concl = || Concl::Sub {
            ctx: g.clone(),
            lhs: s.clone(),
            rhs: u.clone(),
        };
        let r = match (s, u) {
            (Ty::Sel(x, l1), Ty::Sel(y, l2)) if x == y && l1 == l2 => {
                Ok(self.node("SelX", concl, vec![]))
            }
            (Ty::FVarSub(x), Ty::FVarSub(y)) if x == y => Ok(self.node("TVarRefl", concl, vec![])),
            (Ty::Fld(l1, a), Ty::Fld(l2, b)) if l1 == l2 => {
                self.sub(g, a, b).map(|d| self.node("Fld", concl, vec![d]))
            }
            (Ty::TypeMem(..) | Ty::TypeTag(..), Ty::TypeMem(..) | Ty::TypeTag(..)) => {
                let (l1, s1, u1) = s.as_type_member()?;
                let (l2, s2, u2) = u.as_type_member()?;
                if l1 != l2 {
                    return None;
                }
                (|| {
                    let d1 = self.sub(g, s2, s1)?;
                    let d2 = self.sub(g, u1, u2)?;
                    Ok(self.node("Mem", concl, vec![d1, d2]))
                })()
            }
            (Ty::Method(m1, s1, u1), Ty::Method(m2, s2, u2)) if m1 == m2 => {
                self.binder_pair(g, "Fun", s, u, (s1, u1), (s2, u2), BindingKind::Term)
            }
            (Ty::DepFun(s1, u1), Ty::DepFun(s2, u2)) => {
                self.binder_pair(g, "DepFun", s, u, (s1, u1), (s2, u2), BindingKind::Term)
            }
            (Ty::AllSub(s1, u1), Ty::AllSub(s2, u2)) => {
                self.binder_pair(g, "All", s, u, (s1, u1), (s2, u2), BindingKind::TypeVar)
            }
            (Ty::ArrowSub(s1, u1), Ty::ArrowSub(s2, u2)) => (|| {
                let d1 = self.sub(g, s2, s1)?;
                let d2 = self.sub(g, u1, u2)?;
                Ok(self.node("Arrow", concl, vec![d1, d2]))
            })(),
            (Ty::RefTy(a), Ty::RefTy(b)) => (|| {
                let d1 = self.sub(g, a, b)?;
                let d2 = self.sub(g, b, a)?;
                Ok(self.node("Ref", concl, vec![d1, d2]))
            })(),
            (Ty::BindSelf(a), Ty::BindSelf(b)) => {
                let mut g2 = g.clone();
                let z = g2.fresh_cmp();
                let a1 = a.open(z.into());
                g2.push_cmp_as(z, CtxEntry::term(a1.clone()));
                self.sub(&g2, &a1, &b.open(z.into()))
                    .map(|d| self.node("BindX", concl, vec![d]))
            }
            _ => return None,
        };
        Some(r)
    }

    /// Contravariant parameter, covariant result under a comparison binding
    /// of the smaller parameter type.
    #[allow(clippy::too_many_arguments)]
    fn binder_pair(
        &mut self,
        g: &TypingCtx,
        rule: &'static str,
        s: &Ty,
        u: &Ty,
        (s1, u1): (&Ty, &Ty),
        (s2, u2): (&Ty, &Ty),
        kind: BindingKind,
    ) -> R {
        let d1 = self.sub(g, s2, s1)?;
        let mut g2 = g.clone();
        let z = g2.fresh_cmp();
        g2.push_cmp_as(
            z,
            CtxEntry {
                ty: s2.clone(),
                kind,
            },
        );
        let d2 = self.sub(&g2, &u1.open(z.into()), &u2.open(z.into()))?;
        let concl = || Concl::Sub {
            ctx: g.clone(),
            lhs: s.clone(),
            rhs: u.clone(),
        };
        Ok(self.node(rule, concl, vec![d1, d2]))
    }

    /// `Γ ⊢ x : T` for a variable: Var and one subsumption step, a chain of
    /// self-type unpackings, or packing.
    pub(crate) fn var_has(&mut self, g: &TypingCtx, x: Name, target: &Ty) -> R {
        self.nested(|c| c.var_has_step(g, x, target))
    }

    fn var_has_step(&mut self, g: &TypingCtx, x: Name, target: &Ty) -> R {
        self.fuel.tick()?;
        let k0 = match g.lookup(x) {
            Some(CtxEntry {
                ty,
                kind: BindingKind::Term,
            }) => ty.clone(),
            _ => return Err(Stop::Refuted("not a term variable")),
        };
        let mut fail = None;
        let var_node = |c: &Checker| {
            c.node(
                "Var",
                || Concl::Typed {
                    ctx: g.clone(),
                    tm: crate::syntax::Tm::Var(x.into()),
                    ty: k0.clone(),
                },
                vec![],
            )
        };
        if k0 == *target {
            return Ok(var_node(self));
        }
        match self.sub(g, &k0, target) {
            Ok(d) => {
                let v = var_node(self);
                return Ok(self.typed_node("Sub", g, x, target, vec![v, d]));
            }
            Err(e) => alt(&mut fail, e),
        }
        let mut steps = Vec::new();
        match self.unpack_search(g, x, &k0, target, &mut steps) {
            Ok(d) => return Ok(d),
            Err(e) => alt(&mut fail, e),
        }
        if let Ty::BindSelf(b) = target {
            match self.var_has(g, x, &b.open(x.into())) {
                Ok(d) => return Ok(self.typed_node("VarPack", g, x, target, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
        }
        Err(fail.unwrap_or(Stop::Refuted("variable does not have the required type")))
    }

    pub(crate) fn typed_node(
        &self,
        rule: &'static str,
        g: &TypingCtx,
        x: Name,
        ty: &Ty,
        premises: Vec<Option<Deriv>>,
    ) -> Option<Deriv> {
        self.node(
            rule,
            || Concl::Typed {
                ctx: g.clone(),
                tm: crate::syntax::Tm::Var(x.into()),
                ty: ty.clone(),
            },
            premises,
        )
    }

    /// The context of a VarUnpack premise.
    pub(crate) fn restricted(&self, g: &TypingCtx, x: Name) -> TypingCtx {
        if self.muts.no_ctx_restrict {
            g.clone()
        } else {
            g.restrict(x).unwrap_or_else(|_| g.clone())
        }
    }

    fn unpack_search(
        &mut self,
        g: &TypingCtx,
        x: Name,
        known: &Ty,
        target: &Ty,
        steps: &mut Vec<UnpackStep>,
    ) -> R {
        let mut fail = None;
        if !steps.is_empty() {
            if known == target {
                return Ok(self.materialize(g, x, steps));
            }
            match self.sub(g, known, target) {
                Ok(d) => {
                    let inner = self.materialize(g, x, steps);
                    return Ok(self.typed_node("Sub", g, x, target, vec![inner, d]));
                }
                Err(e) => alt(&mut fail, e),
            }
        }
        if steps.len() >= MAX_UNPACK {
            return Err(fail.unwrap_or(Stop::Refuted("unpacking depth")));
        }
        let gr = self.restricted(g, x);
        let mut cands = Vec::new();
        self.rec_candidates(&gr, known, 0, &mut cands);
        for rec in cands {
            self.fuel.tick()?;
            let sub_d = if rec == *known {
                None
            } else {
                match self.sub(&gr, known, &rec) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        alt(&mut fail, e);
                        continue;
                    }
                }
            };
            let Ty::BindSelf(body) = &rec else { continue };
            let after = body.open(x.into());
            steps.push(UnpackStep {
                before: known.clone(),
                rec: rec.clone(),
                sub_d,
                after: after.clone(),
            });
            let r = self.unpack_search(g, x, &after, target, steps);
            steps.pop();
            match r {
                Ok(d) => return Ok(d),
                Err(e) => alt(&mut fail, e),
            }
        }
        Err(fail.unwrap_or(Stop::Refuted("no self type to unpack")))
    }

    /// Derivation of `c ⊢ x : K_n` for the unpacking chain `steps`.
    fn materialize(&self, c: &TypingCtx, x: Name, steps: &[UnpackStep]) -> Option<Deriv> {
        if !self.trace {
            return None;
        }
        let Some((last, init)) = steps.split_last() else {
            let k0 = c.lookup(x).map(|e| e.ty.clone()).unwrap_or(Ty::Top);
            return self.typed_node("Var", c, x, &k0, vec![]);
        };
        let cr = self.restricted(c, x);
        let inner = self.materialize(&cr, x, init);
        let premise = match &last.sub_d {
            None => inner,
            Some(d) => self.typed_node("Sub", &cr, x, &last.rec, vec![inner, d.clone()]),
        };
        debug_assert!(init.last().map_or(true, |s| s.after == last.before));
        self.typed_node("VarUnpack", c, x, &last.after, vec![premise])
    }

    /// Self types `x`'s known type may be widened to: components of
    /// intersections and upper bounds of selections.
    fn rec_candidates(&self, c: &TypingCtx, k: &Ty, depth: usize, out: &mut Vec<Ty>) {
        match k {
            Ty::BindSelf(_) => {
                if !out.contains(k) {
                    out.push(k.clone());
                }
            }
            Ty::And(a, b) => {
                self.rec_candidates(c, a, depth, out);
                self.rec_candidates(c, b, depth, out);
            }
            Ty::Sel(VarRef::Free(y), l) if depth < MAX_CHASE => {
                for hi in self.upper_bounds(c, *y, l) {
                    self.rec_candidates(c, &hi, depth + 1, out);
                }
            }
            _ => {}
        }
    }

    /// Upper bounds of member `L` visible in `y`'s declared type, looking
    /// through intersections and `y`'s own self types.
    pub(crate) fn upper_bounds(&self, c: &TypingCtx, y: Name, l: &Label) -> Vec<Ty> {
        self.member_bounds(c, y, l)
            .into_iter()
            .map(|(_, hi)| hi)
            .collect()
    }

    pub(crate) fn member_bounds(&self, c: &TypingCtx, y: Name, l: &Label) -> Vec<(Ty, Ty)> {
        let Some(CtxEntry {
            ty,
            kind: BindingKind::Term,
        }) = c.lookup(y)
        else {
            return Vec::new();
        };
        let mut out = Vec::new();
        collect_members(ty, y, l, 0, &mut out);
        out
    }
}

pub(crate) fn collect_members(t: &Ty, y: Name, l: &Label, depth: usize, out: &mut Vec<(Ty, Ty)>) {
    match t {
        Ty::And(a, b) => {
            collect_members(a, y, l, depth, out);
            collect_members(b, y, l, depth, out);
        }
        Ty::BindSelf(b) if depth < MAX_UNPACK => {
            collect_members(&b.open(y.into()), y, l, depth + 1, out)
        }
        _ => {
            if let Some((l2, lo, hi)) = t.as_type_member() {
                if l2 == *l {
                    out.push((lo.clone(), hi.clone()));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::judgment::{CheckConfig, Verdict};
    use crate::statics::subtype;
    use crate::syntax::{parse_type, CalculusLevel as L, CtxEntry, Label, Ty, TypingCtx, VarRef};

    fn ok(level: L, g: &TypingCtx, s: &Ty, u: &Ty) -> Verdict {
        subtype(level, g, s, u, &CheckConfig::default())
            .unwrap()
            .verdict
    }

    fn p(src: &str) -> Ty {
        parse_type(L::Dot, src).unwrap()
    }

    #[test]
    fn lattice_examples() {
        let g = TypingCtx::new();
        assert_eq!(ok(L::Dot, &g, &Ty::Bot, &p("{ l : Top }")), Verdict::Proved);
        assert_eq!(
            ok(
                L::Dot,
                &g,
                &p("{ l1 : Top } & { l2 : Top }"),
                &p("{ l2 : Top }")
            ),
            Verdict::Proved
        );
        assert_eq!(
            ok(L::Dot, &g, &p("{ l1 : Top }"), &p("{ l2 : Top }")),
            Verdict::Refuted
        );
    }

    #[test]
    fn bad_bounds_selection() {
        let bad = p("{ A : { l1 : Top } .. { l2 : Top } }");
        let g = TypingCtx::from_terms(vec![CtxEntry::term(bad)]);
        let xa = Ty::sel(VarRef::term(0), Label::ty("A"));
        assert_eq!(ok(L::Dot, &g, &p("{ l1 : Top }"), &xa), Verdict::Proved);
        assert_eq!(ok(L::Dot, &g, &xa, &p("{ l2 : Top }")), Verdict::Proved);
        // no free-standing transitivity
        assert_eq!(
            ok(L::Dot, &g, &p("{ l1 : Top }"), &p("{ l2 : Top }")),
            Verdict::Refuted
        );
    }

    #[test]
    fn self_types_compare_by_bind_x() {
        let g = TypingCtx::new();
        let s = p("rec(z) { A : Bot .. Top } & { B : Bot .. z.A }");
        let u = p("rec(z) { A : Bot .. Top }");
        let j = subtype(L::Dot, &g, &s, &u, &CheckConfig::default().traced()).unwrap();
        assert_eq!(j.verdict, Verdict::Proved);
        let rules = j.trace.unwrap().rules_used();
        assert!(
            rules.contains(&"BindX") && rules.contains(&"And11"),
            "{rules:?}"
        );
    }

    #[test]
    fn unpacking_a_self_typed_variable() {
        let g = TypingCtx::from_terms(vec![CtxEntry::term(p(
            "rec(z) { A : Bot .. { l : Top } } & { B : z.A .. z.A }",
        ))]);
        let xb = Ty::sel(VarRef::term(0), Label::ty("B"));
        assert_eq!(ok(L::Dot, &g, &xb, &p("{ l : Top }")), Verdict::Proved);
    }

    #[test]
    fn cyclic_bounds_run_out_of_fuel() {
        let g = TypingCtx::from_terms(vec![CtxEntry::term(Ty::mem(
            Label::ty("A"),
            Ty::Bot,
            Ty::sel(VarRef::term(0), Label::ty("A")),
        ))]);
        let xa = Ty::sel(VarRef::term(0), Label::ty("A"));
        assert_eq!(ok(L::Dot, &g, &xa, &p("{ l : Top }")), Verdict::Unknown);
    }

    #[test]
    fn fsub_bounded_quantification() {
        let g = TypingCtx::new();
        let s = parse_type(L::FSub, "all(X<:Top) X -> X").unwrap();
        let u = parse_type(L::FSub, "all(X<:Top -> Top) X -> X").unwrap();
        assert_eq!(ok(L::FSub, &g, &s, &u), Verdict::Proved);
        let v = parse_type(L::FSub, "all(X<:Top) X -> Top").unwrap();
        assert_eq!(ok(L::FSub, &g, &s, &v), Verdict::Proved);
        assert_eq!(ok(L::FSub, &g, &v, &s), Verdict::Refuted);
    }

    #[test]
    fn type_tags_are_invariant_when_exact() {
        let g = TypingCtx::new();
        let a = parse_type(L::DSub, "{ Type = Top }").unwrap();
        let b = parse_type(L::DSub, "{ Type = all(x:Top) Top }").unwrap();
        let up = parse_type(L::DSub, "{ Type <: Top }").unwrap();
        assert_eq!(ok(L::DSub, &g, &a, &b), Verdict::Refuted);
        assert_eq!(ok(L::DSub, &g, &a, &up), Verdict::Proved);
        assert_eq!(ok(L::DSub, &g, &b, &up), Verdict::Proved);
    }
}
