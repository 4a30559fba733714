use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::syntax::{Decl, Name, Names, Tm, Ty};

/// What is statically known about a binding at the point it was made.
/// Value typing of closures rebuilds a typing context from these.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum BindKind {
    /// A binder annotated with this type (already opened at the binding).
    Annot(Ty),
    /// An F<: type variable bound by a type application, with its bound.
    TypeVar(Ty),
    /// The self variable of an object or record; its type is that of the
    /// bound value.
    SelfOf,
    /// Nothing is known; treated as `Top`.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub value: Value,
    pub kind: BindKind,
}

/// Runtime environment `H`: position `k` is the term variable `Name::Term(k)`.
/// Extension copies; captured environments are never mutated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RtEnv(Arc<Vec<Binding>>);

impl RtEnv {
    pub fn new() -> RtEnv {
        RtEnv::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The name the next extension will bind.
    pub fn next_name(&self) -> Name {
        Name::Term(self.0.len())
    }

    pub fn extend(&self, value: Value, kind: BindKind) -> RtEnv {
        let mut v = (*self.0).clone();
        v.push(Binding { value, kind });
        RtEnv(Arc::new(v))
    }

    pub fn lookup(&self, n: Name) -> Option<&Value> {
        self.binding(n).map(|b| &b.value)
    }

    pub fn binding(&self, n: Name) -> Option<&Binding> {
        match n {
            Name::Term(k) => self.0.get(k),
            _ => None,
        }
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.0
    }

    /// The first `k` bindings.
    pub fn prefix(&self, k: usize) -> RtEnv {
        RtEnv(Arc::new(self.0[..k.min(self.0.len())].to_vec()))
    }

    pub fn ptr_eq(&self, other: &RtEnv) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Value {
    /// `⟨H, λx:T.t⟩`; the body binds the parameter.
    Closure {
        env: RtEnv,
        annot: Ty,
        body: Arc<Tm>,
    },
    /// `⟨H, ΛY<:T.t⟩` of F<:.
    TyAbsClosure {
        env: RtEnv,
        bound: Ty,
        body: Arc<Tm>,
    },
    /// First-class type `⟨H, T⟩`.
    TyClosure {
        env: RtEnv,
        ty: Ty,
    },
    /// A record or object. Object declarations bind the self variable;
    /// record declarations do not. Fields are evaluated at selection unless
    /// `fields` caches eagerly computed values.
    Obj {
        env: RtEnv,
        decls: Arc<Vec<Decl>>,
        is_record: bool,
        fields: Option<Arc<Vec<Option<Value>>>>,
    },
    /// A fixpoint `μx.t` that re-evaluates its body each time it is used.
    FixThunk {
        env: RtEnv,
        annot: Ty,
        body: Arc<Tm>,
    },
    Loc(usize),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Closure { .. } => "closure",
            Value::TyAbsClosure { .. } => "type abstraction",
            Value::TyClosure { .. } => "type value",
            Value::Obj {
                is_record: true, ..
            } => "record",
            Value::Obj { .. } => "object",
            Value::FixThunk { .. } => "fixpoint",
            Value::Loc(_) => "location",
        }
    }

    pub fn env(&self) -> Option<&RtEnv> {
        match self {
            Value::Closure { env, .. }
            | Value::TyAbsClosure { env, .. }
            | Value::TyClosure { env, .. }
            | Value::Obj { env, .. }
            | Value::FixThunk { env, .. } => Some(env),
            Value::Loc(_) => None,
        }
    }

    /// The value re-expressed as a source term over its environment's names.
    pub fn as_term(&self) -> Tm {
        match self {
            Value::Closure { annot, body, .. } => {
                Tm::Lam(annot.clone(), Box::new((**body).clone()))
            }
            Value::TyAbsClosure { bound, body, .. } => {
                Tm::TyLamSub(bound.clone(), Box::new((**body).clone()))
            }
            Value::TyClosure { ty, .. } => Tm::TypeVal(ty.clone()),
            Value::Obj {
                decls,
                is_record: true,
                ..
            } => Tm::Rec((**decls).clone()),
            Value::Obj { decls, .. } => Tm::Obj((**decls).clone()),
            Value::FixThunk { annot, body, .. } => {
                Tm::Fix(annot.clone(), Box::new((**body).clone()))
            }
            Value::Loc(l) => Tm::Loc(*l),
        }
    }

    /// Short human-readable rendering for CLI output.
    pub fn show(&self) -> String {
        let names = |env: &RtEnv| Names {
            terms: (0..env.len()).map(|k| format!("y{k}")).collect(),
        };
        match self {
            Value::Closure { env, .. } | Value::TyAbsClosure { env, .. } => {
                format!("<closure of size-{} env>", env.len())
            }
            Value::TyClosure { env, ty } => format!("<type {}>", ty.show(&names(env))),
            Value::Obj { env, is_record, .. } => {
                let what = if *is_record { "record" } else { "object" };
                format!(
                    "<{what} {} of size-{} env>",
                    self.as_term().show(&names(env)),
                    env.len()
                )
            }
            Value::FixThunk { env, .. } => format!("<fixpoint of size-{} env>", env.len()),
            Value::Loc(l) => format!("<loc {l}>"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.show())
    }
}

/// Mutable store and its append-only typing: each location records the
/// environment and type of its creation site.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Store {
    cells: Vec<Value>,
    typing: Vec<(RtEnv, Ty)>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("location {0} is not allocated")]
pub struct BadLocation(pub usize);

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn alloc(&mut self, env: RtEnv, ty: Ty, v: Value) -> usize {
        self.cells.push(v);
        self.typing.push((env, ty));
        debug_assert_eq!(self.cells.len(), self.typing.len());
        self.cells.len() - 1
    }

    pub fn read(&self, loc: usize) -> Result<&Value, BadLocation> {
        self.cells.get(loc).ok_or(BadLocation(loc))
    }

    pub fn write(&mut self, loc: usize, v: Value) -> Result<(), BadLocation> {
        let cell = self.cells.get_mut(loc).ok_or(BadLocation(loc))?;
        *cell = v;
        Ok(())
    }

    pub fn typing(&self) -> &[(RtEnv, Ty)] {
        &self.typing
    }

    pub fn cells(&self) -> &[Value] {
        &self.cells
    }

    /// `other` extends this store's typing without changing old entries.
    pub fn typing_extended_by(&self, other: &Store) -> bool {
        other.typing.len() >= self.typing.len()
            && other.typing[..self.typing.len()] == self.typing[..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn top_val() -> Value {
        Value::TyClosure {
            env: RtEnv::new(),
            ty: Ty::Top,
        }
    }

    #[test]
    fn lookup_positions() {
        let h = RtEnv::new();
        assert!(h.lookup(Name::Term(0)).is_none());
        let h1 = h.extend(top_val(), BindKind::Unknown);
        assert_eq!(h1.lookup(Name::Term(0)), Some(&top_val()));
        // extension leaves the original untouched
        assert!(h.is_empty());
    }

    #[test]
    fn alloc_read_write() {
        let mut s = Store::new();
        let l = s.alloc(RtEnv::new(), Ty::Top, top_val());
        assert_eq!(s.read(l).unwrap(), &top_val());
        let before = s.clone();
        let other = Value::TyClosure {
            env: RtEnv::new(),
            ty: Ty::Bot,
        };
        s.write(l, other.clone()).unwrap();
        assert_eq!(s.read(l).unwrap(), &other);
        assert_eq!(s.typing(), before.typing());
        assert!(before.typing_extended_by(&s));
        assert!(s.read(7).is_err());
        assert!(s.write(7, other).is_err());
    }
}
