//! Runtime typing: subtyping between environment-paired types, value type
//! assignment and consistent environments.

pub(crate) mod check;
mod validate;

pub use check::Precision;

use serde::Serialize;

use crate::eval::{BindKind, RtEnv, Value};
use crate::judgment::{on_big_stack, CheckConfig, Judgment, Stop, Verdict};
use crate::statics::{Checker, R};
use crate::syntax::{gate_type, BindingKind, CalculusLevel, GateViolation, Name, Names, Ty, TypingCtx};

use check::RtChecker;

/// Abstract environment `J`: hypothetical pairs `z <: ⟨H, T⟩` introduced
/// when comparing binders.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AbsEnv {
    entries: Vec<(usize, RtEnv, Ty)>,
    next: usize,
}

impl AbsEnv {
    pub fn new() -> AbsEnv {
        AbsEnv::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Binds a fresh comparison name; names are never reused.
    pub fn push(&mut self, env: RtEnv, ty: Ty) -> Name {
        let id = self.next;
        self.next += 1;
        self.entries.push((id, env, ty));
        Name::Cmp(id)
    }

    /// Binds a name obtained from `fresh`.
    pub fn bind(&mut self, n: Name, env: RtEnv, ty: Ty) {
        if let Name::Cmp(id) = n {
            self.entries.push((id, env, ty));
        }
    }

    /// Reserves a name without binding it.
    pub fn fresh(&mut self) -> Name {
        let id = self.next;
        self.next += 1;
        Name::Cmp(id)
    }

    pub fn lookup(&self, n: Name) -> Option<(&RtEnv, &Ty)> {
        match n {
            Name::Cmp(id) => self
                .entries
                .iter()
                .rev()
                .find(|e| e.0 == id)
                .map(|e| (&e.1, &e.2)),
            _ => None,
        }
    }

    pub fn entries(&self) -> &[(usize, RtEnv, Ty)] {
        &self.entries
    }

    /// Same name counter, no entries: the `J = ∅` of the unpack premise.
    pub fn emptied(&self) -> AbsEnv {
        AbsEnv {
            entries: Vec::new(),
            next: self.next,
        }
    }
}

/// `J ⊢ H1 T1 <: H2 T2`
#[derive(Clone, Debug, Serialize)]
pub struct DynSubConcl {
    pub j: AbsEnv,
    pub h1: RtEnv,
    pub t1: Ty,
    pub h2: RtEnv,
    pub t2: Ty,
}

/// `H ⊢ v : T`
#[derive(Clone, Debug, Serialize)]
pub struct ValueTypedConcl {
    pub h: RtEnv,
    pub v: Value,
    pub ty: Ty,
}

fn env_names(h: &RtEnv) -> Names {
    Names {
        terms: (0..h.len()).map(|k| format!("y{k}")).collect(),
    }
}

impl DynSubConcl {
    pub fn show(&self, _names: &Names) -> String {
        format!(
            "J{} ⊢ H{} {} <: H{} {}",
            self.j.len(),
            self.h1.len(),
            self.t1.show(&env_names(&self.h1)),
            self.h2.len(),
            self.t2.show(&env_names(&self.h2))
        )
    }
}

impl ValueTypedConcl {
    pub fn show(&self, _names: &Names) -> String {
        format!(
            "H{} ⊢ {} : {}",
            self.h.len(),
            self.v.show(),
            self.ty.show(&env_names(&self.h))
        )
    }
}

pub(crate) use validate::check_rule;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Gate(#[from] GateViolation),
    #[error("name {0:?} does not resolve in its environment")]
    Dangling(Name),
    #[error("typing context has {ctx} term bindings but the environment has {env}")]
    Shape { ctx: usize, env: usize },
}

fn gate_all(level: CalculusLevel, tys: &[&Ty]) -> Result<(), RuntimeError> {
    for t in tys {
        gate_type(level, t)?;
    }
    Ok(())
}

fn run<T: Send>(
    level: CalculusLevel,
    store: &[(RtEnv, Ty)],
    cfg: &CheckConfig,
    f: impl FnOnce(&mut RtChecker<'_>) -> T + Send,
) -> T {
    on_big_stack(|| {
        let mut c = RtChecker::new(Checker::new(level, cfg), store);
        f(&mut c)
    })
}

/// `J ⊢ H1 T1 <: H2 T2` in the given mode.
pub fn dyn_subtype(
    level: CalculusLevel,
    store: &[(RtEnv, Ty)],
    j: &AbsEnv,
    (h1, t1): (&RtEnv, &Ty),
    (h2, t2): (&RtEnv, &Ty),
    mode: Precision,
    cfg: &CheckConfig,
) -> Result<Judgment, RuntimeError> {
    gate_all(level, &[t1, t2])?;
    check::resolves(t1, h1, j).map_err(RuntimeError::Dangling)?;
    check::resolves(t2, h2, j).map_err(RuntimeError::Dangling)?;
    Ok(run(level, store, cfg, |c| {
        let r = c.dyn_sub(j, h1, t1, h2, t2, mode);
        c.st.finish(r)
    }))
}

/// `H ⊢ v : T`
pub fn value_type(
    level: CalculusLevel,
    store: &[(RtEnv, Ty)],
    h: &RtEnv,
    v: &Value,
    t: &Ty,
    cfg: &CheckConfig,
) -> Result<Judgment, RuntimeError> {
    gate_all(level, &[t])?;
    check::resolves(t, h, &AbsEnv::new()).map_err(RuntimeError::Dangling)?;
    Ok(run(level, store, cfg, |c| {
        let r = c.value_has(h, v, t);
        c.st.finish(r)
    }))
}

/// `Γ ⊨ H J`: term bindings have their types, type variables and
/// comparison bindings sit below their bounds.
pub fn consistent_env(
    level: CalculusLevel,
    g: &TypingCtx,
    h: &RtEnv,
    j: &AbsEnv,
    store: &[(RtEnv, Ty)],
    cfg: &CheckConfig,
) -> Result<Judgment, RuntimeError> {
    if g.term_len() != h.len() {
        return Err(RuntimeError::Shape { ctx: g.term_len(), env: h.len() });
    }
    for e in g.terms() {
        gate_all(level, &[&e.ty])?;
        check::resolves(&e.ty, h, j).map_err(RuntimeError::Dangling)?;
    }
    Ok(run(level, store, cfg, |c| {
        let r = consistent(c, g, h, j);
        c.st.finish(r)
    }))
}

pub(crate) fn consistent(c: &mut RtChecker<'_>, g: &TypingCtx, h: &RtEnv, j: &AbsEnv) -> R {
    let empty = AbsEnv::new();
    for (e, b) in g.terms().iter().zip(h.bindings()) {
        match (e.kind, &b.value) {
            (BindingKind::TypeVar, Value::TyClosure { env, ty }) => {
                c.dyn_sub(&empty, env, ty, h, &e.ty, Precision::Imprecise)?;
            }
            (BindingKind::TypeVar, _) => return Err(Stop::Refuted("type variable bound to a non-type value")),
            (BindingKind::Term, v) => {
                c.value_has(h, v, &e.ty)?;
            }
        }
    }
    for (id, hz, tz) in j.entries() {
        let Some(e) = g.lookup(Name::Cmp(*id)) else {
            return Err(Stop::Refuted("comparison binding missing from the typing context"));
        };
        c.dyn_sub(j, hz, tz, h, &e.ty, Precision::Imprecise)?;
    }
    Ok(None)
}

/// Outcome of checking that a static fact holds at runtime.
#[derive(Clone, Debug)]
pub enum Probe {
    /// The premises (consistency, static subtyping) did not hold.
    Vacuous,
    /// The runtime judgment for a statically proved subtyping.
    Checked(Judgment),
}

/// If `Γ ⊨ H J` and `Γ ⊢ S <: U`, then `J ⊢ H S <: H U`.
#[allow(clippy::too_many_arguments)]
pub fn static_implies_dynamic_probe(
    level: CalculusLevel,
    g: &TypingCtx,
    s: &Ty,
    u: &Ty,
    h: &RtEnv,
    j: &AbsEnv,
    store: &[(RtEnv, Ty)],
    cfg: &CheckConfig,
) -> Result<Probe, RuntimeError> {
    if consistent_env(level, g, h, j, store, cfg)?.verdict != Verdict::Proved {
        return Ok(Probe::Vacuous);
    }
    let st = crate::statics::subtype(level, g, s, u, cfg).map_err(|e| match e {
        crate::statics::StaticError::Gate(v) => RuntimeError::Gate(v),
        _ => RuntimeError::Dangling(first_dangling(g, &[s, u])),
    })?;
    if st.verdict != Verdict::Proved {
        return Ok(Probe::Vacuous);
    }
    dyn_subtype(level, store, j, (h, s), (h, u), Precision::Imprecise, cfg).map(Probe::Checked)
}

fn first_dangling(g: &TypingCtx, tys: &[&Ty]) -> Name {
    tys.iter()
        .flat_map(|t| t.fv())
        .find(|n| !g.binds(*n))
        .unwrap_or(Name::Term(g.term_len()))
}

/// A hypothetical binding replaced by an actual type value: compares
/// `T1^Z <: T2^Z` under `J, Z <: ⟨H, T⟩`, then `T1^Y1 <: T2^Y2` with each
/// side's environment extended by `Y = ⟨H, T⟩`. Returns both judgments.
#[allow(clippy::too_many_arguments)]
pub fn subst_hypothetical(
    level: CalculusLevel,
    store: &[(RtEnv, Ty)],
    j: &AbsEnv,
    (h, t): (&RtEnv, &Ty),
    (h1, t1): (&RtEnv, &Ty),
    (h2, t2): (&RtEnv, &Ty),
    cfg: &CheckConfig,
) -> Result<(Judgment, Judgment), RuntimeError> {
    let mut jz = j.clone();
    let z = jz.fresh();
    jz.bind(z, h.clone(), t.clone());
    let before = dyn_subtype(level, store, &jz, (h1, &t1.open(z.into())), (h2, &t2.open(z.into())), Precision::Imprecise, cfg)?;
    let tv = Value::TyClosure { env: h.clone(), ty: t.clone() };
    let y1 = h1.next_name();
    let y2 = h2.next_name();
    let h1y = h1.extend(tv.clone(), BindKind::Unknown);
    let h2y = h2.extend(tv, BindKind::Unknown);
    let after = dyn_subtype(level, store, j, (&h1y, &t1.open(y1.into())), (&h2y, &t2.open(y2.into())), Precision::Imprecise, cfg)?;
    Ok((before, after))
}

#[cfg(test)]
mod tests;
