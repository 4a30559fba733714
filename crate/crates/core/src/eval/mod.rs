//! Fuel-indexed definitional interpreter.
//!
//! `eval n H t` recurses structurally on `n`: at zero it times out, and every
//! premise of a case runs with the same decremented fuel. An optional work
//! budget additionally caps the total number of evaluation entries so that
//! large fuel values stay cheap on branching programs; exhausting it also
//! yields a timeout.

mod value;

use std::sync::Arc;

use serde::Serialize;

use crate::syntax::{CalculusLevel, Decl, Label, LabelKind, Program, Tm, Ty, VarRef};

pub use value::{BadLocation, BindKind, Binding, RtEnv, Store, Value};

/// `r ::= Timeout | Done (Error | Val v)`
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Timeout,
    Error(&'static str),
    Val(Value),
}

impl Outcome {
    pub fn is_timeout(&self) -> bool {
        matches!(self, Outcome::Timeout)
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Outcome::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Outcome::Timeout => "timeout",
            Outcome::Error(_) => "error",
            Outcome::Val(_) => "value",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    /// Evaluate object and record fields at construction instead of at
    /// selection.
    pub strict_fields: bool,
    /// Cap on the total number of evaluation entries.
    pub step_budget: Option<u64>,
    /// Record every store access for later auditing.
    pub audit: bool,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            strict_fields: false,
            step_budget: Some(200_000),
            audit: false,
        }
    }
}

/// A store access observed during an audited run, with the length of the
/// store typing right after it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum StoreEvent {
    Alloc {
        loc: usize,
        typing_len: usize,
    },
    Read {
        loc: usize,
        typing_len: usize,
    },
    Write {
        loc: usize,
        value: Value,
        typing_len: usize,
    },
}

pub struct Evaluator {
    pub level: CalculusLevel,
    pub cfg: EvalConfig,
    pub store: Store,
    pub steps: u64,
    pub events: Vec<StoreEvent>,
}

macro_rules! val {
    ($e:expr) => {
        match $e {
            Outcome::Val(v) => v,
            other => return other,
        }
    };
}

impl Evaluator {
    pub fn new(level: CalculusLevel, cfg: EvalConfig) -> Evaluator {
        Evaluator {
            level,
            cfg,
            store: Store::new(),
            steps: 0,
            events: Vec::new(),
        }
    }

    fn record(&mut self, ev: impl FnOnce(usize) -> StoreEvent) {
        if self.cfg.audit {
            let n = self.store.typing().len();
            self.events.push(ev(n));
        }
    }

    pub fn eval(&mut self, n: u64, h: &RtEnv, t: &Tm) -> Outcome {
        if n == 0 {
            return Outcome::Timeout;
        }
        self.steps += 1;
        if self.cfg.step_budget.is_some_and(|b| self.steps > b) {
            return Outcome::Timeout;
        }
        let n1 = n - 1;
        match t {
            Tm::Var(VarRef::Free(x)) => match h.lookup(*x) {
                Some(Value::FixThunk { env, annot, body }) => {
                    let thunk = h.lookup(*x).cloned().unwrap();
                    let (env, annot, body) = (env.clone(), annot.clone(), body.clone());
                    self.force_fix(n1, thunk, &env, &annot, &body)
                }
                Some(v) => Outcome::Val(v.clone()),
                None => Outcome::Error("unbound variable"),
            },
            Tm::Var(VarRef::Bound(_)) => Outcome::Error("dangling bound variable"),
            Tm::Loc(l) => Outcome::Val(Value::Loc(*l)),
            Tm::Lam(annot, body) => Outcome::Val(Value::Closure {
                env: h.clone(),
                annot: annot.clone(),
                body: Arc::new((**body).clone()),
            }),
            Tm::TyLamSub(bound, body) => Outcome::Val(Value::TyAbsClosure {
                env: h.clone(),
                bound: bound.clone(),
                body: Arc::new((**body).clone()),
            }),
            Tm::TypeVal(ty) => Outcome::Val(Value::TyClosure {
                env: h.clone(),
                ty: ty.clone(),
            }),
            Tm::App(f, a) => {
                let vf = val!(self.eval(n1, h, f));
                let va = val!(self.eval(n1, h, a));
                match vf {
                    Value::Closure { env, annot, body } => {
                        let x = env.next_name();
                        let env2 = env.extend(va, BindKind::Annot(annot));
                        self.eval(n1, &env2, &body.open(x.into()))
                    }
                    _ => Outcome::Error("application of a non-function"),
                }
            }
            Tm::TyAppSub(f, arg) => {
                let vf = val!(self.eval(n1, h, f));
                match vf {
                    Value::TyAbsClosure { env, bound, body } => {
                        // pass the caller environment along with the type
                        let y = env.next_name();
                        let tv = Value::TyClosure {
                            env: h.clone(),
                            ty: arg.clone(),
                        };
                        let env2 = env.extend(tv, BindKind::TypeVar(bound));
                        self.eval(n1, &env2, &body.open(y.into()))
                    }
                    _ => Outcome::Error("type application of a non-abstraction"),
                }
            }
            Tm::Rec(ds) | Tm::Obj(ds) => {
                let is_record = matches!(t, Tm::Rec(_));
                let obj = Value::Obj {
                    env: h.clone(),
                    decls: Arc::new(ds.clone()),
                    is_record,
                    fields: None,
                };
                if !self.cfg.strict_fields {
                    return Outcome::Val(obj);
                }
                let mut cache = Vec::with_capacity(ds.len());
                for d in ds.iter() {
                    match d {
                        Decl::FieldInit { body, .. } => {
                            let (env, body) = member_env(&obj, h, body);
                            cache.push(Some(val!(self.eval(n1, &env, &body))));
                        }
                        _ => cache.push(None),
                    }
                }
                Outcome::Val(Value::Obj {
                    env: h.clone(),
                    decls: Arc::new(ds.clone()),
                    is_record,
                    fields: Some(Arc::new(cache)),
                })
            }
            Tm::SelField(r, l) => {
                let v = val!(self.eval(n1, h, r));
                self.select(n1, v, l)
            }
            Tm::InvokeMethod(r, m, a) => {
                let v = val!(self.eval(n1, h, r));
                let va = val!(self.eval(n1, h, a));
                let Value::Obj {
                    env,
                    decls,
                    is_record: false,
                    ..
                } = &v
                else {
                    return Outcome::Error("method call on a non-object");
                };
                let Some(Decl::MethodInit { param, body, .. }) =
                    decls.iter().find(|d| d.label() == m)
                else {
                    return Outcome::Error("missing method");
                };
                // passing the receiver as a silent parameter
                let x = env.next_name();
                let env1 = env.extend(v.clone(), BindKind::SelfOf);
                let y = env1.next_name();
                let param_ty = param.open(x.into());
                let body = body.open_at(1, x.into()).open(y.into());
                let env2 = env1.extend(va, BindKind::Annot(param_ty));
                self.eval(n1, &env2, &body)
            }
            Tm::Fix(annot, body) => {
                let thunk = Value::FixThunk {
                    env: h.clone(),
                    annot: annot.clone(),
                    body: Arc::new((**body).clone()),
                };
                let x = h.next_name();
                let env2 = h.extend(thunk, BindKind::Annot(annot.open(x.into())));
                self.eval(n1, &env2, &body.open(x.into()))
            }
            Tm::RefNew(init, annot) => {
                let v = val!(self.eval(n1, h, init));
                let ty = annot.clone().unwrap_or(Ty::Top);
                let loc = self.store.alloc(h.clone(), ty, v);
                self.record(|typing_len| StoreEvent::Alloc { loc, typing_len });
                Outcome::Val(Value::Loc(loc))
            }
            Tm::Deref(r) => match val!(self.eval(n1, h, r)) {
                Value::Loc(loc) => match self.store.read(loc) {
                    Ok(v) => {
                        let v = v.clone();
                        self.record(|typing_len| StoreEvent::Read { loc, typing_len });
                        Outcome::Val(v)
                    }
                    Err(_) => Outcome::Error("dangling location"),
                },
                _ => Outcome::Error("dereference of a non-location"),
            },
            Tm::Assign(r, a) => {
                let vr = val!(self.eval(n1, h, r));
                let va = val!(self.eval(n1, h, a));
                match vr {
                    Value::Loc(loc) => match self.store.write(loc, va.clone()) {
                        Ok(()) => {
                            let value = va.clone();
                            self.record(|typing_len| StoreEvent::Write {
                                loc,
                                value,
                                typing_len,
                            });
                            Outcome::Val(va)
                        }
                        Err(_) => Outcome::Error("dangling location"),
                    },
                    _ => Outcome::Error("assignment to a non-location"),
                }
            }
        }
    }

    fn force_fix(&mut self, n: u64, thunk: Value, env: &RtEnv, annot: &Ty, body: &Tm) -> Outcome {
        if n == 0 {
            return Outcome::Timeout;
        }
        let x = env.next_name();
        let env2 = env.extend(thunk, BindKind::Annot(annot.open(x.into())));
        self.eval(n - 1, &env2, &body.open(x.into()))
    }

    fn select(&mut self, n: u64, v: Value, l: &Label) -> Outcome {
        let Value::Obj {
            env, decls, fields, ..
        } = &v
        else {
            return Outcome::Error("field selection on a non-record");
        };
        let Some(pos) = decls
            .iter()
            .position(|d| d.label() == l && l.kind == LabelKind::Value)
        else {
            return Outcome::Error("missing field");
        };
        if let Some(Some(cached)) = fields.as_ref().map(|c| c[pos].clone()) {
            return Outcome::Val(cached);
        }
        let Decl::FieldInit { body, .. } = &decls[pos] else {
            return Outcome::Error("missing field");
        };
        let (env2, body) = member_env(&v, env, body);
        self.eval(n, &env2, &body)
    }
}

/// Environment and opened body for evaluating a field initializer: objects
/// bind themselves, records do not.
fn member_env(obj: &Value, env: &RtEnv, body: &Tm) -> (RtEnv, Tm) {
    match obj {
        Value::Obj {
            is_record: false, ..
        } => {
            let x = env.next_name();
            (
                env.extend(obj.clone(), BindKind::SelfOf),
                body.open(x.into()),
            )
        }
        _ => (env.clone(), body.clone()),
    }
}

/// Result of running a whole program.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub env: RtEnv,
    pub store: Store,
    pub steps: u64,
    pub events: Vec<StoreEvent>,
}

/// Evaluates a closed term in the empty environment and store.
pub fn eval_closed(level: CalculusLevel, fuel: u64, t: &Tm, cfg: EvalConfig) -> RunResult {
    let mut ev = Evaluator::new(level, cfg);
    let outcome = ev.eval(fuel, &RtEnv::new(), t);
    RunResult {
        outcome,
        env: RtEnv::new(),
        store: ev.store,
        steps: ev.steps,
        events: ev.events,
    }
}

/// Evaluates the definitions in order, then the body. `def_types` gives the
/// static types recorded for the definitions' bindings.
pub fn eval_program(
    p: &Program,
    def_types: Option<&[Ty]>,
    fuel: u64,
    cfg: EvalConfig,
) -> RunResult {
    let mut ev = Evaluator::new(p.level, cfg);
    let mut env = RtEnv::new();
    for (i, (_, t)) in p.defs.iter().enumerate() {
        let outcome = ev.eval(fuel, &env, t);
        let Outcome::Val(v) = outcome else {
            return RunResult {
                outcome,
                env,
                store: ev.store,
                steps: ev.steps,
                events: ev.events,
            };
        };
        let kind = match def_types.and_then(|ts| ts.get(i)) {
            Some(ty) => BindKind::Annot(ty.clone()),
            None => BindKind::Unknown,
        };
        env = env.extend(v, kind);
    }
    let outcome = ev.eval(fuel, &env, &p.body);
    RunResult {
        outcome,
        env,
        store: ev.store,
        steps: ev.steps,
        events: ev.events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;
    use CalculusLevel as L;

    fn run(level: L, fuel: u64, src: &str) -> RunResult {
        eval_closed(
            level,
            fuel,
            &parse_term(level, src).unwrap(),
            EvalConfig::default(),
        )
    }

    #[test]
    fn zero_fuel_times_out() {
        assert_eq!(run(L::DSub, 0, "typeval Top").outcome, Outcome::Timeout);
    }

    #[test]
    fn beta_on_type_value() {
        let r = run(L::DSub, 10, "(fun(x:{ Type <: Top }) x) (typeval Top)");
        assert_eq!(
            r.outcome,
            Outcome::Val(Value::TyClosure {
                env: RtEnv::new(),
                ty: Ty::Top
            })
        );
    }

    #[test]
    fn diverging_field_times_out_at_every_fuel() {
        for fuel in [1, 5, 10, 50] {
            let r = run(L::Dot, fuel, "new (x) { l = x.l }.l");
            assert_eq!(r.outcome, Outcome::Timeout, "fuel {fuel}");
        }
    }

    #[test]
    fn deref_of_fresh_ref() {
        let r = run(L::DSubBotAndOrRecFixMut, 20, "!(ref typeval Top)");
        assert_eq!(
            r.outcome,
            Outcome::Val(Value::TyClosure {
                env: RtEnv::new(),
                ty: Ty::Top
            })
        );
        assert_eq!(r.store.len(), 1);
    }

    #[test]
    fn stuck_application_is_error() {
        let r = run(L::DSub, 10, "(typeval Top) (typeval Top)");
        assert!(matches!(r.outcome, Outcome::Error(_)));
    }

    #[test]
    fn type_application_passes_caller_env() {
        let r = run(L::FSub, 10, "(tfun(X<:Top) fun(x:X) x) [Top]");
        let Outcome::Val(Value::Closure { env, .. }) = r.outcome else {
            panic!()
        };
        assert!(
            matches!(env.bindings()[0].value, Value::TyClosure { ref ty, .. } if *ty == Ty::Top)
        );
        assert_eq!(env.bindings()[0].kind, BindKind::TypeVar(Ty::Top));
    }

    #[test]
    fn method_call_binds_self_and_argument() {
        let r = run(L::Dot, 10, "new (s) { A = Top; m(y) = s }.m(new (o) {})");
        let Outcome::Val(Value::Obj { decls, .. }) = r.outcome else {
            panic!()
        };
        assert_eq!(decls.len(), 2);
    }

    #[test]
    fn fixpoint_unfolds_on_use() {
        let src = "fix(f:{ l : { Type = Top } }) { l = typeval Top }";
        let r = run(L::DSubBotAndOrRecFix, 10, &format!("({src}).l"));
        assert!(matches!(r.outcome, Outcome::Val(Value::TyClosure { .. })));
    }

    #[test]
    fn strict_fields_evaluate_at_construction() {
        let t = parse_term(L::Dot, "new (x) { l = x.l }").unwrap();
        let lazy = eval_closed(L::Dot, 10, &t, EvalConfig::default());
        assert!(matches!(lazy.outcome, Outcome::Val(_)));
        let strict = eval_closed(
            L::Dot,
            10,
            &t,
            EvalConfig {
                strict_fields: true,
                ..EvalConfig::default()
            },
        );
        assert_eq!(strict.outcome, Outcome::Timeout);
    }
}
