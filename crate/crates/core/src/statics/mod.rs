//! Fuel-bounded static checking: algorithmic subtyping, bidirectional type
//! assignment with elaboration, good bounds, and a declarative search that
//! may use transitivity.

mod bounds;
mod replay;
mod subtype;
mod typecheck;

pub use replay::{replay, ReplayError};

use crate::judgment::{on_big_stack, CheckConfig, Concl, Deriv, Fuel, Judgment, Mutations, Stop};
use crate::syntax::{
    gate_type, BindingKind, CalculusLevel, CtxEntry, GateViolation, Name, Ty, TypingCtx, VarRef,
};

pub use typecheck::{typecheck, typecheck_program, ProgramTyping, Typing};

pub(crate) type R = Result<Option<Deriv>, Stop>;

/// Input the checkers refuse to judge at all.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StaticError {
    #[error(transparent)]
    Gate(#[from] GateViolation),
    #[error("ill-formed input: {0}")]
    IllFormed(String),
}

/// Transitivity through caller-supplied middle types.
struct TransSearch {
    candidates: Vec<Ty>,
    depth: usize,
    max_depth: usize,
}

pub(crate) struct Checker {
    pub(crate) level: CalculusLevel,
    pub(crate) fuel: Fuel,
    pub(crate) trace: bool,
    pub(crate) muts: Mutations,
    trans: Option<TransSearch>,
    depth: usize,
}

/// Nesting limit for recursive premises; hitting it counts as running out
/// of fuel.
pub(crate) const MAX_NESTING: usize = 2000;

impl Checker {
    pub(crate) fn new(level: CalculusLevel, cfg: &CheckConfig) -> Checker {
        Checker {
            level,
            fuel: Fuel::new(cfg.fuel),
            trace: cfg.trace,
            muts: cfg.mutations,
            trans: None,
            depth: 0,
        }
    }

    pub(crate) fn node(
        &self,
        rule: &'static str,
        concl: impl FnOnce() -> Concl,
        premises: Vec<Option<Deriv>>,
    ) -> Option<Deriv> {
        if !self.trace {
            return None;
        }
        Some(Deriv {
            rule,
            concl: concl(),
            premises: premises.into_iter().flatten().collect(),
        })
    }

    /// Runs `f` one level deeper.
    pub(crate) fn nested<T>(
        &mut self,
        f: impl FnOnce(&mut Checker) -> Result<T, Stop>,
    ) -> Result<T, Stop> {
        if self.depth >= MAX_NESTING {
            return Err(self.fuel.exhaust());
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    pub(crate) fn finish(&self, r: R) -> Judgment {
        Judgment::from_result(r, &self.fuel)
    }

    /// `S <: M` and `M <: U` for some candidate `M`, when enabled.
    fn trans(&mut self, g: &TypingCtx, s: &Ty, u: &Ty) -> Option<R> {
        let ts = self.trans.as_ref()?;
        if ts.depth >= ts.max_depth {
            return None;
        }
        let cands: Vec<Ty> = ts
            .candidates
            .iter()
            .filter(|m| *m != s && *m != u && g.wf(m))
            .cloned()
            .collect();
        let mut fail: Option<Stop> = None;
        for m in cands {
            self.trans.as_mut().unwrap().depth += 1;
            let r = (|| {
                let d1 = self.sub(g, s, &m)?;
                let d2 = self.sub(g, &m, u)?;
                Ok(self.node(
                    "Trans",
                    || Concl::Sub {
                        ctx: g.clone(),
                        lhs: s.clone(),
                        rhs: u.clone(),
                    },
                    vec![d1, d2],
                ))
            })();
            self.trans.as_mut().unwrap().depth -= 1;
            match r {
                Ok(d) => return Some(Ok(d)),
                Err(e) => fail = Some(fail.map_or(e, |f| f.join(e))),
            }
        }
        fail.map(Err)
    }
}

/// Every free name is bound with the right kind: selections need term
/// bindings and F<: type variables need type-variable bindings.
pub(crate) fn wf_ty(g: &TypingCtx, t: &Ty) -> Result<(), StaticError> {
    t.locally_closed()
        .map_err(|e| StaticError::IllFormed(e.to_string()))?;
    let mut bad = None;
    walk_vars(t, &mut |v, want| {
        if let VarRef::Free(n) = v {
            match g.lookup(n) {
                Some(CtxEntry { kind, .. }) if *kind == want => {}
                _ => bad = Some(n),
            }
        }
    });
    match bad {
        Some(n) => Err(StaticError::IllFormed(format!(
            "unbound or misused name {n:?}"
        ))),
        None => Ok(()),
    }
}

fn walk_vars(t: &Ty, f: &mut dyn FnMut(VarRef, BindingKind)) {
    match t {
        Ty::Top | Ty::Bot => {}
        Ty::Sel(v, _) => f(*v, BindingKind::Term),
        Ty::FVarSub(v) => f(*v, BindingKind::TypeVar),
        Ty::And(a, b)
        | Ty::Or(a, b)
        | Ty::TypeTag(a, b)
        | Ty::ArrowSub(a, b)
        | Ty::TypeMem(_, a, b) => {
            walk_vars(a, f);
            walk_vars(b, f);
        }
        Ty::Method(_, a, b) | Ty::DepFun(a, b) | Ty::AllSub(a, b) => {
            walk_vars(a, f);
            walk_vars(b, f);
        }
        Ty::Fld(_, a) | Ty::RefTy(a) | Ty::BindSelf(a) => walk_vars(a, f),
    }
}

pub(crate) fn check_input(
    level: CalculusLevel,
    g: &TypingCtx,
    tys: &[&Ty],
) -> Result<(), StaticError> {
    for t in tys {
        gate_type(level, t)?;
        wf_ty(g, t)?;
    }
    Ok(())
}

/// Algorithmic subtyping `Γ ⊢ S <: U`.
pub fn subtype(
    level: CalculusLevel,
    g: &TypingCtx,
    s: &Ty,
    u: &Ty,
    cfg: &CheckConfig,
) -> Result<Judgment, StaticError> {
    check_input(level, g, &[s, u])?;
    Ok(on_big_stack(|| {
        let mut c = Checker::new(level, cfg);
        let r = c.sub(g, s, u);
        c.finish(r)
    }))
}

/// Proof search that may also use transitivity through any of the
/// `candidates` (nested at most `max_trans` deep). With `allow_trans` off
/// it coincides with [`subtype`].
pub fn subtype_declarative_search(
    level: CalculusLevel,
    g: &TypingCtx,
    s: &Ty,
    u: &Ty,
    cfg: &CheckConfig,
    candidates: &[Ty],
    allow_trans: bool,
) -> Result<Judgment, StaticError> {
    check_input(level, g, &[s, u])?;
    Ok(on_big_stack(|| {
        let mut c = Checker::new(level, cfg);
        if allow_trans {
            c.trans = Some(TransSearch {
                candidates: candidates.to_vec(),
                depth: 0,
                max_depth: 2,
            });
        }
        let r = c.sub(g, s, u);
        c.finish(r)
    }))
}

/// Middle types worth trying for transitivity: every selection `x.L` over
/// the term bindings of `g` and labels of their declared types.
pub fn selection_candidates(g: &TypingCtx) -> Vec<Ty> {
    let mut out = Vec::new();
    for (k, e) in g.terms().iter().enumerate() {
        let mut labels = Vec::new();
        collect_type_labels(&e.ty, &mut labels);
        for l in labels {
            let t = Ty::Sel(VarRef::Free(Name::Term(k)), l);
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

fn collect_type_labels(t: &Ty, out: &mut Vec<crate::syntax::Label>) {
    match t {
        Ty::And(a, b) | Ty::Or(a, b) => {
            collect_type_labels(a, out);
            collect_type_labels(b, out);
        }
        Ty::BindSelf(b) => collect_type_labels(b, out),
        _ => {
            if let Some((l, _, _)) = t.as_type_member() {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
    }
}

pub use bounds::good_bounds;
pub(crate) use subtype::collect_members;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::Verdict;
    use crate::syntax::{parse_type, Label};

    #[test]
    fn bad_bounds_need_transitivity() {
        let lvl = CalculusLevel::Dot;
        let bad = parse_type(lvl, "{ A : { l1 : Top } .. { l2 : Top } }").unwrap();
        let g = TypingCtx::from_terms(vec![CtxEntry::term(bad)]);
        let l1 = parse_type(lvl, "{ l1 : Top }").unwrap();
        let l2 = parse_type(lvl, "{ l2 : Top }").unwrap();
        let cands = vec![Ty::sel(VarRef::term(0), Label::ty("A"))];
        let cfg = CheckConfig::default().traced();
        let j = subtype_declarative_search(lvl, &g, &l1, &l2, &cfg, &cands, true).unwrap();
        assert_eq!(j.verdict, Verdict::Proved);
        assert!(j.trace.unwrap().rules_used().contains(&"Trans"));
        let j = subtype_declarative_search(lvl, &g, &l1, &l2, &cfg, &cands, false).unwrap();
        assert_eq!(j.verdict, Verdict::Refuted);
        assert_eq!(selection_candidates(&g), cands);
    }

    #[test]
    fn bot_top_without_trans() {
        let j = subtype_declarative_search(
            CalculusLevel::Dot,
            &TypingCtx::new(),
            &Ty::Bot,
            &Ty::Top,
            &CheckConfig::default().traced(),
            &[],
            true,
        )
        .unwrap();
        assert_eq!(j.verdict, Verdict::Proved);
        assert!(!j.trace.unwrap().rules_used().contains(&"Trans"));
    }

    #[test]
    fn ill_formed_inputs_are_errors() {
        let dangling = Ty::sel(VarRef::term(3), Label::ty("A"));
        assert!(subtype(
            CalculusLevel::Dot,
            &TypingCtx::new(),
            &dangling,
            &Ty::Top,
            &CheckConfig::default()
        )
        .is_err());
        let gated = Ty::RefTy(Box::new(Ty::Top));
        assert!(matches!(
            subtype(
                CalculusLevel::DSub,
                &TypingCtx::new(),
                &gated,
                &Ty::Top,
                &CheckConfig::default()
            ),
            Err(StaticError::Gate(_))
        ));
    }
}
