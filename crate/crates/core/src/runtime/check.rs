//! The checkers behind the runtime relations. Names in a type resolve in
//! the environment paired with it (term names) or in `J` (comparison
//! names).

use serde::{Deserialize, Serialize};

use crate::eval::{BindKind, RtEnv, Value};
use crate::judgment::{Concl, Deriv, Stop};
use crate::statics::{Checker, R};
use crate::syntax::{CtxEntry, Label, Name, Ty, TypingCtx, VarRef};

use super::{AbsEnv, DynSubConcl, ValueTypedConcl};

/// Which runtime subtyping relation to decide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Precision {
    /// `<:` with bounds reached through subtyping premises.
    Imprecise,
    /// `<<:`: variable bounds are read off precise types directly.
    PreciseLookup,
    /// `<<!`: precise lookups at the top, `<:` inside binder bodies.
    Invertible,
}

const MAX_LOOKUP: usize = 3;

pub(crate) struct RtChecker<'s> {
    pub(crate) st: Checker,
    pub(crate) store: &'s [(RtEnv, Ty)],
    gammas: Vec<(RtEnv, TypingCtx)>,
    depth: usize,
}

fn alt(fail: &mut Option<Stop>, e: Stop) {
    *fail = Some(fail.map_or(e, |f| f.join(e)));
}

type Pair = (RtEnv, Ty);

impl<'s> RtChecker<'s> {
    pub(crate) fn new(st: Checker, store: &'s [(RtEnv, Ty)]) -> RtChecker<'s> {
        RtChecker { st, store, gammas: Vec::new(), depth: 0 }
    }

    fn sub_node(&self, rule: &'static str, j: &AbsEnv, (h1, t1): (&RtEnv, &Ty), (h2, t2): (&RtEnv, &Ty), premises: Vec<Option<Deriv>>) -> Option<Deriv> {
        self.st.node(
            rule,
            || {
                Concl::DynSub(Box::new(DynSubConcl {
                    j: j.clone(),
                    h1: h1.clone(),
                    t1: t1.clone(),
                    h2: h2.clone(),
                    t2: t2.clone(),
                }))
            },
            premises,
        )
    }

    fn val_node(&self, rule: &'static str, h: &RtEnv, v: &Value, ty: &Ty, premises: Vec<Option<Deriv>>) -> Option<Deriv> {
        self.st.node(
            rule,
            || Concl::ValueTyped(Box::new(ValueTypedConcl { h: h.clone(), v: v.clone(), ty: ty.clone() })),
            premises,
        )
    }

    fn member(&self, l: &Label, lo: Ty, hi: Ty) -> Ty {
        self.st.member(l, lo, hi)
    }

    /// `J ⊢ H1 T1 <: H2 T2`
    pub(crate) fn dyn_sub(&mut self, j: &AbsEnv, h1: &RtEnv, t1: &Ty, h2: &RtEnv, t2: &Ty, mode: Precision) -> R {
        if self.depth >= crate::statics::MAX_NESTING {
            return Err(self.st.fuel.exhaust());
        }
        self.depth += 1;
        let r = self.dyn_sub_step(j, h1, t1, h2, t2, mode);
        self.depth -= 1;
        r
    }

    fn dyn_sub_step(&mut self, j: &AbsEnv, h1: &RtEnv, t1: &Ty, h2: &RtEnv, t2: &Ty, mode: Precision) -> R {
        self.st.fuel.tick()?;
        let p1 = (h1, t1);
        let p2 = (h2, t2);
        if *t2 == Ty::Top {
            return Ok(self.sub_node("Top", j, p1, p2, vec![]));
        }
        if *t1 == Ty::Bot {
            return Ok(self.sub_node("Bot", j, p1, p2, vec![]));
        }
        if let Ty::And(a, b) = t2 {
            let d1 = self.dyn_sub(j, h1, t1, h2, a, mode)?;
            let d2 = self.dyn_sub(j, h1, t1, h2, b, mode)?;
            return Ok(self.sub_node("And2", j, p1, p2, vec![d1, d2]));
        }
        if let Ty::Or(a, b) = t1 {
            let d1 = self.dyn_sub(j, h1, a, h2, t2, mode)?;
            let d2 = self.dyn_sub(j, h1, b, h2, t2, mode)?;
            return Ok(self.sub_node("Or1", j, p1, p2, vec![d1, d2]));
        }
        let mut fail = None;
        if let Some(r) = self.structural(j, h1, t1, h2, t2, mode) {
            match r {
                Ok(d) => return Ok(d),
                Err(e) => alt(&mut fail, e),
            }
        }
        if let Ty::And(a, b) = t1 {
            for (rule, c) in [("And11", a), ("And12", b)] {
                match self.dyn_sub(j, h1, c, h2, t2, mode) {
                    Ok(d) => return Ok(self.sub_node(rule, j, p1, p2, vec![d])),
                    Err(e) => alt(&mut fail, e),
                }
            }
        }
        if let Ty::Or(a, b) = t2 {
            for (rule, c) in [("Or21", a), ("Or22", b)] {
                match self.dyn_sub(j, h1, t1, h2, c, mode) {
                    Ok(d) => return Ok(self.sub_node(rule, j, p1, p2, vec![d])),
                    Err(e) => alt(&mut fail, e),
                }
            }
        }
        match self.left_variable(j, h1, t1, h2, t2, mode) {
            Some(Ok(d)) => return Ok(d),
            Some(Err(e)) => alt(&mut fail, e),
            None => {}
        }
        match self.right_variable(j, h1, t1, h2, t2, mode) {
            Some(Ok(d)) => return Ok(d),
            Some(Err(e)) => alt(&mut fail, e),
            None => {}
        }
        if let Ty::BindSelf(b) = t1 {
            let mut j2 = j.clone();
            let z = j2.fresh();
            let bz = b.open(z.into());
            j2.bind(z, h1.clone(), bz.clone());
            match self.dyn_sub(&j2, h1, &bz, h2, t2, mode) {
                Ok(d) => return Ok(self.sub_node("Bind1", j, p1, p2, vec![d])),
                Err(e) => alt(&mut fail, e),
            }
        }
        Err(fail.unwrap_or(Stop::Refuted("no runtime subtyping rule applies")))
    }

    #[allow(clippy::too_many_arguments)]
    fn structural(&mut self, j: &AbsEnv, h1: &RtEnv, t1: &Ty, h2: &RtEnv, t2: &Ty, mode: Precision) -> Option<R> {
        let p1 = (h1, t1);
        let p2 = (h2, t2);
        // bindings in J are imprecise, so binder bodies use the imprecise relation
        let inner = Precision::Imprecise;
        let r = match (t1, t2) {
            (Ty::Fld(l1, a), Ty::Fld(l2, b)) if l1 == l2 => {
                self.dyn_sub(j, h1, a, h2, b, mode).map(|d| self.sub_node("Fld", j, p1, p2, vec![d]))
            }
            (Ty::TypeMem(..) | Ty::TypeTag(..), Ty::TypeMem(..) | Ty::TypeTag(..)) => {
                let (l1, s1, u1) = t1.as_type_member()?;
                let (l2, s2, u2) = t2.as_type_member()?;
                if l1 != l2 {
                    return None;
                }
                (|| {
                    let d1 = self.dyn_sub(j, h2, s2, h1, s1, mode)?;
                    let d2 = self.dyn_sub(j, h1, u1, h2, u2, mode)?;
                    Ok(self.sub_node("Mem", j, p1, p2, vec![d1, d2]))
                })()
            }
            (Ty::RefTy(a), Ty::RefTy(b)) => (|| {
                let d1 = self.dyn_sub(j, h1, a, h2, b, mode)?;
                let d2 = self.dyn_sub(j, h2, b, h1, a, mode)?;
                Ok(self.sub_node("Ref", j, p1, p2, vec![d1, d2]))
            })(),
            (Ty::ArrowSub(s1, u1), Ty::ArrowSub(s2, u2)) => (|| {
                let d1 = self.dyn_sub(j, h2, s2, h1, s1, mode)?;
                let d2 = self.dyn_sub(j, h1, u1, h2, u2, mode)?;
                Ok(self.sub_node("Arrow", j, p1, p2, vec![d1, d2]))
            })(),
            (Ty::AllSub(s1, u1), Ty::AllSub(s2, u2)) => self.binder(j, "All", p1, p2, (s1, u1), (s2, u2), mode, inner),
            (Ty::DepFun(s1, u1), Ty::DepFun(s2, u2)) => self.binder(j, "DepFun", p1, p2, (s1, u1), (s2, u2), mode, inner),
            (Ty::Method(m1, s1, u1), Ty::Method(m2, s2, u2)) if m1 == m2 => {
                self.binder(j, "Fun", p1, p2, (s1, u1), (s2, u2), mode, inner)
            }
            (Ty::BindSelf(a), Ty::BindSelf(b)) => {
                let mut j2 = j.clone();
                let z = j2.fresh();
                let az = a.open(z.into());
                j2.bind(z, h1.clone(), az.clone());
                self.dyn_sub(&j2, h1, &az, h2, &b.open(z.into()), inner)
                    .map(|d| self.sub_node("BindX", j, p1, p2, vec![d]))
            }
            _ => return None,
        };
        Some(r)
    }

    /// Contravariant bounds; the bodies are compared with `J` extended by
    /// `z <: ⟨H2, S2⟩`.
    #[allow(clippy::too_many_arguments)]
    fn binder(
        &mut self,
        j: &AbsEnv,
        rule: &'static str,
        p1: (&RtEnv, &Ty),
        p2: (&RtEnv, &Ty),
        (s1, u1): (&Ty, &Ty),
        (s2, u2): (&Ty, &Ty),
        mode: Precision,
        inner: Precision,
    ) -> R {
        let (h1, h2) = (p1.0, p2.0);
        let d1 = self.dyn_sub(j, h2, s2, h1, s1, mode)?;
        let mut j2 = j.clone();
        let z = j2.fresh();
        j2.bind(z, h2.clone(), s2.clone());
        let d2 = self.dyn_sub(&j2, h1, &u1.open(z.into()), h2, &u2.open(z.into()), inner)?;
        Ok(self.sub_node(rule, j, p1, p2, vec![d1, d2]))
    }

    /// Rules for a variable on the left: concrete type variables, path
    /// selections on values, abstract variables from `J`.
    fn left_variable(&mut self, j: &AbsEnv, h1: &RtEnv, t1: &Ty, h2: &RtEnv, t2: &Ty, mode: Precision) -> Option<R> {
        let p1 = (h1, t1);
        let p2 = (h2, t2);
        let r = match t1 {
            Ty::FVarSub(VarRef::Free(n @ Name::Term(_))) => {
                let (he, te) = type_closure(h1, *n)?;
                if let Ty::FVarSub(VarRef::Free(m @ Name::Term(_))) = t2 {
                    if type_closure(h2, *m) == Some((he.clone(), te.clone())) {
                        return Some(Ok(self.sub_node("TVarSame", j, p1, p2, vec![])));
                    }
                }
                self.dyn_sub(j, &he, &te, h2, t2, mode).map(|d| self.sub_node("TVarLeft", j, p1, p2, vec![d]))
            }
            Ty::FVarSub(VarRef::Free(z @ Name::Cmp(_))) => {
                if t1 == t2 {
                    return Some(Ok(self.sub_node("AbsRefl", j, p1, p2, vec![])));
                }
                let (hz, tz) = j.lookup(*z)?;
                let (hz, tz) = (hz.clone(), tz.clone());
                self.dyn_sub(j, &hz, &tz, h2, t2, mode).map(|d| self.sub_node("AbsLeft", j, p1, p2, vec![d]))
            }
            Ty::Sel(VarRef::Free(x @ Name::Term(_)), l) => {
                let v = h1.lookup(*x)?.clone();
                if let Ty::Sel(VarRef::Free(y @ Name::Term(_)), l2) = t2 {
                    if l == l2 && h2.lookup(*y) == Some(&v) {
                        return Some(Ok(self.sub_node("SelSame", j, p1, p2, vec![])));
                    }
                }
                match mode {
                    Precision::Imprecise => self.unpack(j, h1, t1, h2, t2, &v, l, true),
                    _ => self.lookup_concrete(&v, l).and_then(|(dv, bounds)| {
                        let mut fail = None;
                        for (hm, _, hi) in bounds {
                            match self.dyn_sub(j, &hm, &hi, h2, t2, mode) {
                                Ok(d) => return Ok(self.sub_node("SelLookup1", j, p1, p2, vec![dv, d])),
                                Err(e) => alt(&mut fail, e),
                            }
                        }
                        Err(fail.unwrap_or(Stop::Refuted("no such type member")))
                    }),
                }
            }
            Ty::Sel(VarRef::Free(z @ Name::Cmp(_)), l) => {
                if t1 == t2 {
                    return Some(Ok(self.sub_node("AbsRefl", j, p1, p2, vec![])));
                }
                let (hz, tz) = j.lookup(*z)?;
                let (hz, tz) = (hz.clone(), tz.clone());
                let mut fail = None;
                for (_, hi) in abstract_members(&tz, *z, l) {
                    match self.dyn_sub(j, &hz, &hi, h2, t2, mode) {
                        Ok(d) => return Some(Ok(self.sub_node("AbsSel1", j, p1, p2, vec![d]))),
                        Err(e) => alt(&mut fail, e),
                    }
                }
                if mode == Precision::Imprecise {
                    let want = self.member(l, Ty::Bot, t2.clone());
                    match self.dyn_sub(j, &hz, &tz, h2, &want, mode) {
                        Ok(d) => return Some(Ok(self.sub_node("AbsSub1", j, p1, p2, vec![d]))),
                        Err(e) => alt(&mut fail, e),
                    }
                }
                Err(fail.unwrap_or(Stop::Refuted("no such type member")))
            }
            _ => return None,
        };
        Some(r)
    }

    fn right_variable(&mut self, j: &AbsEnv, h1: &RtEnv, t1: &Ty, h2: &RtEnv, t2: &Ty, mode: Precision) -> Option<R> {
        let p1 = (h1, t1);
        let p2 = (h2, t2);
        let r = match t2 {
            Ty::FVarSub(VarRef::Free(n @ Name::Term(_))) => {
                let (he, te) = type_closure(h2, *n)?;
                self.dyn_sub(j, h1, t1, &he, &te, mode).map(|d| self.sub_node("TVarRight", j, p1, p2, vec![d]))
            }
            Ty::Sel(VarRef::Free(y @ Name::Term(_)), l) => {
                let v = h2.lookup(*y)?.clone();
                match mode {
                    Precision::Imprecise => self.unpack(j, h1, t1, h2, t2, &v, l, false),
                    _ => self.lookup_concrete(&v, l).and_then(|(dv, bounds)| {
                        let mut fail = None;
                        for (hm, lo, _) in bounds {
                            match self.dyn_sub(j, h1, t1, &hm, &lo, mode) {
                                Ok(d) => return Ok(self.sub_node("SelLookup2", j, p1, p2, vec![dv, d])),
                                Err(e) => alt(&mut fail, e),
                            }
                        }
                        Err(fail.unwrap_or(Stop::Refuted("no such type member")))
                    }),
                }
            }
            Ty::Sel(VarRef::Free(z @ Name::Cmp(_)), l) => {
                let (hz, tz) = j.lookup(*z)?;
                let (hz, tz) = (hz.clone(), tz.clone());
                let mut fail = None;
                for (lo, _) in abstract_members(&tz, *z, l) {
                    match self.dyn_sub(j, h1, t1, &hz, &lo, mode) {
                        Ok(d) => return Some(Ok(self.sub_node("AbsSel2", j, p1, p2, vec![d]))),
                        Err(e) => alt(&mut fail, e),
                    }
                }
                if mode == Precision::Imprecise {
                    let want = self.member(l, t1.clone(), Ty::Top);
                    match self.dyn_sub(j, &hz, &tz, h1, &want, mode) {
                        Ok(d) => return Some(Ok(self.sub_node("AbsSub2", j, p1, p2, vec![d]))),
                        Err(e) => alt(&mut fail, e),
                    }
                }
                Err(fail.unwrap_or(Stop::Refuted("no such type member")))
            }
            _ => return None,
        };
        Some(r)
    }

    /// `H1(x) = v, Hc ⊢ v : Tc, ∅ ⊢ Hc Tc <: H2 {L : ⊥..U}` concludes
    /// `J ⊢ H1 x.L <: H2 U`, and symmetrically for a selection on the
    /// right. The premise runs under an empty `J`.
    #[allow(clippy::too_many_arguments)]
    fn unpack(&mut self, j: &AbsEnv, h1: &RtEnv, t1: &Ty, h2: &RtEnv, t2: &Ty, v: &Value, l: &Label, left: bool) -> R {
        let (hc, tc, dv) = self.precise(v)?;
        let premise_j = if self.st.muts.no_unpack_guard { j.clone() } else { j.emptied() };
        let (rule, other_env, want) = if left {
            ("Unpack1", h2, self.member(l, Ty::Bot, t2.clone()))
        } else {
            ("Unpack2", h1, self.member(l, t1.clone(), Ty::Top))
        };
        let d = self.dyn_sub(&premise_j, &hc, &tc, other_env, &want, Precision::Imprecise)?;
        Ok(self.sub_node(rule, j, (h1, t1), (h2, t2), vec![dv, d]))
    }

    /// Bounds of member `L` read off the precise type of `v`; self types
    /// are opened at the value itself.
    fn lookup_concrete(&mut self, v: &Value, l: &Label) -> Result<(Option<Deriv>, Vec<(RtEnv, Ty, Ty)>), Stop> {
        let (hc, tc, dv) = self.precise(v)?;
        let mut out = Vec::new();
        let mut t = tc;
        let mut env = hc;
        for _ in 0..MAX_LOOKUP {
            match t {
                Ty::BindSelf(b) => {
                    let x = env.next_name();
                    env = env.extend(v.clone(), BindKind::SelfOf);
                    t = b.open(x.into());
                }
                _ => break,
            }
        }
        let mut comps = Vec::new();
        flatten_and(&t, &mut comps);
        for c in comps {
            if let Some((l2, lo, hi)) = c.as_type_member() {
                if l2 == *l {
                    out.push((env.clone(), lo.clone(), hi.clone()));
                }
            }
        }
        Ok((dv, out))
    }

    /// The precise type of a value, in the environment it closes over.
    pub(crate) fn precise(&mut self, v: &Value) -> Result<(RtEnv, Ty, Option<Deriv>), Stop> {
        self.st.fuel.tick()?;
        let (env, tm) = match v {
            Value::TyClosure { env, ty } => {
                let t = Ty::tag_eq(ty.clone());
                let d = self.val_node("VType", env, v, &t, vec![]);
                return Ok((env.clone(), t, d));
            }
            Value::Loc(l) => {
                let Some((env, ty)) = self.store.get(*l) else {
                    return Err(Stop::Refuted("location outside the store typing"));
                };
                let t = Ty::reference(ty.clone());
                let d = self.val_node("VLoc", env, v, &t, vec![]);
                return Ok((env.clone(), t, d));
            }
            other => (other.env().expect("closure values carry an environment").clone(), other.as_term()),
        };
        let g = self.gamma(&env)?;
        let (t, _, ds) = self.st.infer(&g, &tm)?;
        let d = self.val_node("VClosure", &env, v, &t, vec![ds]);
        Ok((env, t, d))
    }

    /// `Γ(H)`: the typing context a runtime environment was built under.
    pub(crate) fn gamma(&mut self, h: &RtEnv) -> Result<TypingCtx, Stop> {
        if let Some((_, g)) = self.gammas.iter().find(|(e, _)| e.ptr_eq(h)) {
            return Ok(g.clone());
        }
        let mut g = TypingCtx::new();
        for (i, b) in h.bindings().iter().enumerate() {
            let entry = match &b.kind {
                BindKind::Annot(t) => CtxEntry::term(t.clone()),
                BindKind::TypeVar(bound) => CtxEntry::type_var(bound.clone()),
                BindKind::SelfOf => match b.value.env() {
                    Some(e) if e.len() == i => {
                        let (_, t, _) = self.precise(&b.value)?;
                        CtxEntry::term(t)
                    }
                    _ => CtxEntry::term(Ty::Top),
                },
                BindKind::Unknown => CtxEntry::term(Ty::Top),
            };
            g.push_term(entry);
        }
        self.gammas.push((h.clone(), g.clone()));
        Ok(g)
    }

    /// `H ⊢ v : T`: the precise type, then one subsumption step at `J = ∅`.
    pub(crate) fn value_has(&mut self, h: &RtEnv, v: &Value, t: &Ty) -> R {
        let (hc, tc, dv) = self.precise(v)?;
        if tc == *t && hc == *h {
            return Ok(dv);
        }
        let sub = self.dyn_sub(&AbsEnv::new(), &hc, &tc, h, t, Precision::Imprecise);
        match (sub, t) {
            (Ok(d), _) => Ok(self.val_node("VSub", h, v, t, vec![dv, d])),
            // a value has a self type if it has the body with self bound to it
            (Err(Stop::Refuted(_)), Ty::BindSelf(body)) => {
                let y = h.next_name();
                let hy = h.extend(v.clone(), BindKind::Unknown);
                let d = self.value_has(&hy, v, &body.open(y.into()))?;
                Ok(self.val_node("VRec", h, v, t, vec![d]))
            }
            (Err(e), _) => Err(e),
        }
    }
}

fn type_closure(h: &RtEnv, n: Name) -> Option<Pair> {
    match h.lookup(n)? {
        Value::TyClosure { env, ty } => Some((env.clone(), ty.clone())),
        _ => None,
    }
}

fn flatten_and(t: &Ty, out: &mut Vec<Ty>) {
    match t {
        Ty::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        _ => out.push(t.clone()),
    }
}

/// Bounds of `L` in the declared type of abstract `z`, unpacking self
/// types at `z` itself.
fn abstract_members(tz: &Ty, z: Name, l: &Label) -> Vec<(Ty, Ty)> {
    let mut out = Vec::new();
    crate::statics::collect_members(tz, z, l, 0, &mut out);
    out
}

/// Term names of `t` resolve in `h` and comparison names in `j`.
pub(crate) fn resolves(t: &Ty, h: &RtEnv, j: &AbsEnv) -> Result<(), Name> {
    for n in t.fv() {
        let ok = match n {
            Name::Term(k) => k < h.len(),
            Name::Cmp(_) => j.lookup(n).is_some(),
            Name::Loc(_) => false,
        };
        if !ok {
            return Err(n);
        }
    }
    Ok(())
}
