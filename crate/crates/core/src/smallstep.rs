//! Substitution-based small-step semantics for D<:, with the store kept
//! syntactically as a sequence of `let-store` bindings. Type values are
//! always moved into the store so that path-dependent types only ever
//! mention store names; a lambda is stored only when a type refers to the
//! parameter it replaces.

use serde::Serialize;

use crate::eval::{Outcome, Value};
use crate::syntax::{Name, Names, Tm, Ty, VarRef};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MachineState {
    /// `let-store xi = form`, in allocation order.
    pub bindings: Vec<Tm>,
    pub body: Tm,
}

/// One evaluation-context layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    /// `[] t`
    AppFun(Tm),
    /// `v []`
    AppArg(Tm),
}

/// `E` as its frames, innermost last.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalCtx(pub Vec<Frame>);

impl EvalCtx {
    pub fn plug(&self, t: Tm) -> Tm {
        self.0.iter().rev().fold(t, |acc, f| match f {
            Frame::AppFun(a) => Tm::app(acc, a.clone()),
            Frame::AppArg(v) => Tm::app(v.clone(), acc),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposed {
    Redex(EvalCtx, Tm),
    AlreadyValue,
    Stuck(Tm),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Halt {
    Value(Tm),
    Stuck(Tm),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Next(MachineState),
    Halt(Halt),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RunOutcome {
    Halted { halt: Halt, state: MachineState, steps: usize },
    StepLimit { state: MachineState },
}

fn loc_of(t: &Tm) -> Option<usize> {
    match t {
        Tm::Loc(i) | Tm::Var(VarRef::Free(Name::Loc(i))) => Some(*i),
        _ => None,
    }
}

pub fn is_value(t: &Tm) -> bool {
    matches!(t, Tm::Lam(..)) || loc_of(t).is_some()
}

/// Call-by-value, left to right.
pub fn decompose(t: &Tm) -> Decomposed {
    if is_value(t) {
        return Decomposed::AlreadyValue;
    }
    let mut frames = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Tm::TypeVal(_) => return Decomposed::Redex(EvalCtx(frames), cur.clone()),
            Tm::App(f, a) if !is_value(f) => {
                frames.push(Frame::AppFun((**a).clone()));
                cur = f;
            }
            Tm::App(f, a) if !is_value(a) => {
                frames.push(Frame::AppArg((**f).clone()));
                cur = a;
            }
            Tm::App(f, _) if matches!(**f, Tm::Lam(..)) => return Decomposed::Redex(EvalCtx(frames), cur.clone()),
            Tm::App(f, _) => match loc_of(f) {
                // a stored lambda is applied through its name
                Some(_) => return Decomposed::Redex(EvalCtx(frames), cur.clone()),
                None => return Decomposed::Stuck(cur.clone()),
            },
            _ => return Decomposed::Stuck(cur.clone()),
        }
    }
}

impl MachineState {
    pub fn new(t: Tm) -> MachineState {
        MachineState { bindings: Vec::new(), body: t }
    }

    fn alloc(&mut self, form: Tm) -> Tm {
        self.bindings.push(form);
        Tm::Loc(self.bindings.len() - 1)
    }

    pub fn step(&self) -> Step {
        let (ctx, redex) = match decompose(&self.body) {
            Decomposed::AlreadyValue => return Step::Halt(Halt::Value(self.body.clone())),
            Decomposed::Stuck(t) => return Step::Halt(Halt::Stuck(t)),
            Decomposed::Redex(c, r) => (c, r),
        };
        let mut next = self.clone();
        let result = match redex {
            Tm::TypeVal(_) => next.alloc(redex),
            Tm::App(f, a) => {
                let fun = match loc_of(&f) {
                    Some(i) => match &self.bindings[i] {
                        l @ Tm::Lam(..) => l.clone(),
                        other => return Step::Halt(Halt::Stuck(Tm::app(other.clone(), *a))),
                    },
                    None => *f,
                };
                let Tm::Lam(_, body) = fun else {
                    return Step::Halt(Halt::Stuck(Tm::app(fun, *a)));
                };
                next.beta(&body, *a)
            }
            _ => unreachable!("decompose yields only allocation and application redexes"),
        };
        next.body = ctx.plug(result);
        Step::Next(next)
    }

    /// Substitutes a value for the parameter. Store names go in directly;
    /// a lambda is named first if the body's types mention the parameter.
    fn beta(&mut self, body: &Tm, arg: Tm) -> Tm {
        if let Some(i) = loc_of(&arg) {
            return body.open(Name::Loc(i).into());
        }
        if types_use_hole(body, 0) {
            let x = self.alloc(arg);
            return self.beta(body, x);
        }
        subst_hole(body, 0, &arg)
    }

    /// The state as nested `let-store` lines, one binding per line.
    pub fn show(&self) -> String {
        let names = Names::default();
        let mut out = String::new();
        for (i, b) in self.bindings.iter().enumerate() {
            out.push_str(&format!("let-store x{i} = {} in\n", b.show(&names)));
        }
        out.push_str(&self.body.show(&names));
        out
    }
}

fn types_use_hole(t: &Tm, k: usize) -> bool {
    let in_ty = |ty: &Ty, k: usize| ty.any_var(0, &mut |d, v| v == VarRef::Bound(d + k));
    match t {
        Tm::Lam(a, b) => in_ty(a, k) || types_use_hole(b, k + 1),
        Tm::App(f, a) => types_use_hole(f, k) || types_use_hole(a, k),
        Tm::TypeVal(ty) => in_ty(ty, k),
        _ => false,
    }
}

/// Replaces term occurrences of hole `k` by a closed term.
fn subst_hole(t: &Tm, k: usize, with: &Tm) -> Tm {
    match t {
        Tm::Var(VarRef::Bound(i)) if *i == k => with.clone(),
        Tm::Lam(a, b) => Tm::Lam(a.clone(), Box::new(subst_hole(b, k + 1, with))),
        Tm::App(f, a) => Tm::app(subst_hole(f, k, with), subst_hole(a, k, with)),
        other => other.clone(),
    }
}

/// Runs until a halt or until `max_steps` steps have been taken.
pub fn run_smallstep(t: &Tm, max_steps: usize) -> RunOutcome {
    run_traced(t, max_steps, |_, _| {})
}

/// As [`run_smallstep`], reporting every state visited (numbered from 0).
pub fn run_traced(t: &Tm, max_steps: usize, mut visit: impl FnMut(usize, &MachineState)) -> RunOutcome {
    let mut s = MachineState::new(t.clone());
    for n in 0..=max_steps {
        visit(n, &s);
        match s.step() {
            Step::Halt(halt) => return RunOutcome::Halted { halt, state: s, steps: n },
            Step::Next(next) if n < max_steps => s = next,
            Step::Next(_) => break,
        }
    }
    RunOutcome::StepLimit { state: s }
}

/// Whether a big-step outcome and a small-step halt describe the same
/// result: both stuck, or values of the same kind. Type values are also
/// compared by their type when that type mentions no names.
pub fn agrees(big: &Outcome, small: &RunOutcome) -> bool {
    let RunOutcome::Halted { halt, state, .. } = small else {
        return big.is_timeout();
    };
    match (big, halt) {
        (Outcome::Error(_), Halt::Stuck(_)) => true,
        (Outcome::Val(v), Halt::Value(t)) => {
            let form = match loc_of(t) {
                Some(i) => &state.bindings[i],
                None => t,
            };
            match (v, form) {
                (Value::Closure { .. }, Tm::Lam(..)) => true,
                (Value::TyClosure { ty, .. }, Tm::TypeVal(t2)) => {
                    !(ty.fv().is_empty() && t2.fv().is_empty()) || ty == t2
                }
                _ => false,
            }
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval_closed, EvalConfig};
    use crate::syntax::{parse_term, CalculusLevel};

    fn tm(src: &str) -> Tm {
        parse_term(CalculusLevel::DSub, src).unwrap()
    }

    #[test]
    fn decomposition() {
        assert!(matches!(decompose(&tm("typeval Top")), Decomposed::Redex(ref c, Tm::TypeVal(_)) if c.0.is_empty()));
        let app = tm("(fun(x: Top) x) (typeval Top)");
        match decompose(&app) {
            Decomposed::Redex(c, Tm::TypeVal(_)) => assert_eq!(c.0.len(), 1),
            other => panic!("{other:?}"),
        }
        assert_eq!(decompose(&Tm::Loc(0)), Decomposed::AlreadyValue);
    }

    #[test]
    fn plug_inverts_decompose() {
        for src in ["(fun(x: Top) x) (typeval Top)", "((fun(x: Top) x) (fun(y: Top) y)) (typeval Top)"] {
            let t = tm(src);
            if let Decomposed::Redex(c, r) = decompose(&t) {
                assert_eq!(c.plug(r), t);
            }
        }
    }

    #[test]
    fn allocation_then_halt() {
        let s = MachineState::new(tm("typeval Top"));
        let Step::Next(s1) = s.step() else { panic!() };
        assert_eq!(s1.bindings, vec![tm("typeval Top")]);
        assert_eq!(s1.body, Tm::Loc(0));
        assert_eq!(s1.step(), Step::Halt(Halt::Value(Tm::Loc(0))));
    }

    #[test]
    fn beta_substitutes_store_names() {
        let r = run_smallstep(&tm("(fun(x: { Type <: Top }) x) (typeval Top)"), 10);
        match r {
            RunOutcome::Halted { halt: Halt::Value(v), state, steps } => {
                assert_eq!(loc_of(&v), Some(0));
                assert_eq!(state.bindings.len(), 1);
                assert_eq!(steps, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn applying_a_type_value_is_stuck() {
        let r = run_smallstep(&tm("(typeval Top) (typeval Top)"), 10);
        assert!(matches!(r, RunOutcome::Halted { halt: Halt::Stuck(_), .. }));
    }

    #[test]
    fn lambdas_named_only_when_a_type_needs_them() {
        let plain = run_smallstep(&tm("(fun(f: Top) f) (fun(y: Top) y)"), 10);
        assert!(matches!(plain, RunOutcome::Halted { ref state, .. } if state.bindings.is_empty()));
        let dep = run_smallstep(&tm("(fun(f: Top) fun(z: f.Type) z) (fun(y: Top) y)"), 10);
        assert!(matches!(dep, RunOutcome::Halted { ref state, .. } if state.bindings.len() == 1));
    }

    #[test]
    fn traces_are_deterministic() {
        let t = tm("((fun(x: { Type <: Top }) fun(y: x.Type) y) (typeval Top)) (typeval Top)");
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_traced(&t, 20, |_, s| a.push(s.clone()));
        run_traced(&t, 20, |_, s| b.push(s.clone()));
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[1].bindings.starts_with(&w[0].bindings));
        }
    }

    #[test]
    fn agrees_with_big_step() {
        for src in [
            "typeval Top",
            "(fun(x: { Type <: Top }) x) (typeval Top)",
            "(typeval Top) (typeval Top)",
            "(fun(f: Top) f) (fun(y: Top) y)",
        ] {
            let t = tm(src);
            let big = eval_closed(CalculusLevel::DSub, 1000, &t, EvalConfig::default());
            assert!(agrees(&big.outcome, &run_smallstep(&t, 100)), "{src}");
        }
    }
}
