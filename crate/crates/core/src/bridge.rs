//! F<: into D<:. A type variable `X <: U` becomes a term variable
//! `x : {Type <: U}` and `X` itself becomes `x.Type`; type abstraction and
//! application become ordinary abstraction over, and application to, type
//! values. Binder structure is kept one to one except for plain arrows,
//! which gain an unused binder.

use crate::syntax::{CtxEntry, BindingKind, Label, Tm, Ty, TypingCtx, VarRef};

fn type_of(v: VarRef) -> Ty {
    Ty::sel(v, Label::type_label())
}

/// Encodes an F<: type.
pub fn encode_ty(t: &Ty) -> Ty {
    match t {
        Ty::Top => Ty::Top,
        Ty::FVarSub(v) => type_of(*v),
        Ty::ArrowSub(a, b) => Ty::dep_fun(encode_ty(a), encode_ty(b).shift(0)),
        Ty::AllSub(u, body) => Ty::dep_fun(Ty::tag(Ty::Bot, encode_ty(u)), encode_ty(body)),
        // outside the F<: grammar; left alone
        other => other.clone(),
    }
}

/// Encodes an F<: term.
pub fn encode_tm(t: &Tm) -> Tm {
    match t {
        Tm::Var(v) => Tm::Var(*v),
        Tm::Lam(a, b) => Tm::lam(encode_ty(a), encode_tm(b)),
        Tm::App(f, a) => Tm::app(encode_tm(f), encode_tm(a)),
        Tm::TyLamSub(u, b) => Tm::lam(Ty::tag(Ty::Bot, encode_ty(u)), encode_tm(b)),
        Tm::TyAppSub(f, a) => Tm::app(encode_tm(f), Tm::TypeVal(encode_ty(a))),
        other => other.clone(),
    }
}

/// Encodes a context: type variable bindings become term bindings of
/// upper-bounded type tags.
pub fn encode_ctx(g: &TypingCtx) -> TypingCtx {
    TypingCtx::from_terms(
        g.terms()
            .iter()
            .map(|e| match e.kind {
                BindingKind::TypeVar => CtxEntry::term(Ty::tag(Ty::Bot, encode_ty(&e.ty))),
                BindingKind::Term => CtxEntry::term(encode_ty(&e.ty)),
            })
            .collect(),
    )
}

/// F<: programs used to check that the encoding preserves typing and
/// evaluation. All are closed and well typed.
pub const CORPUS: &[&str] = &[
    "fun(x: Top) x",
    "tfun(X <: Top) fun(y: X) y",
    "(tfun(X <: Top) fun(y: X) y) [Top]",
    "(tfun(X <: Top) fun(y: X) y) [Top] (fun(z: Top) z)",
    "tfun(X <: Top) tfun(Y <: X) fun(y: Y) y",
    "tfun(X <: Top -> Top) fun(f: X) fun(a: Top) f a",
    "(tfun(X <: Top -> Top) fun(f: X) f) [Top -> Top] (fun(z: Top) z)",
    "fun(f: Top -> Top) fun(x: Top) f (f x)",
    "tfun(X <: Top) fun(f: X -> X) fun(x: X) f (f x)",
    "(tfun(X <: Top) fun(f: X -> X) fun(x: X) f (f x)) [Top] (fun(z: Top) z) (fun(w: Top) w)",
    "tfun(X <: Top) tfun(Y <: Top) fun(x: X) fun(y: Y) x",
    "tfun(X <: Top) fun(s: X -> X) fun(z: X) z",
    "(tfun(X <: Top) fun(s: X -> X) fun(z: X) s z) [Top] (fun(q: Top) q) (fun(r: Top) r)",
    "fun(g: all(X <: Top) X -> X) g [Top] g",
    "(fun(g: all(X <: Top) X -> X) g [Top] g) (tfun(X <: Top) fun(y: X) y)",
    "(tfun(X <: Top -> Top) fun(x: X) x) [Top -> Top]",
    "tfun(X <: Top) fun(x: X) (fun(y: Top) y) x",
    "fun(h: (Top -> Top) -> Top) h (fun(x: Top) x)",
    "tfun(X <: Top) tfun(Y <: X) fun(y: Y) fun(k: X -> Top) k y",
    "(tfun(X <: Top) tfun(Y <: X) fun(y: Y) y) [Top -> Top] [Top -> Top] (fun(q: Top) q)",
    "fun(x: all(X <: Top) X -> X) x [all(X <: Top) X -> X] x",
    "tfun(A <: Top) tfun(B <: Top) fun(a: A) fun(b: B) tfun(R <: Top) fun(k: A -> B -> R) k a b",
    "(tfun(A <: Top) fun(a: A) tfun(R <: Top) fun(k: A -> R) k a) [Top] (fun(u: Top) u) [Top] (fun(v: Top) v)",
];

/// A D<: function with no F<: counterpart: it returns its type argument.
pub const NO_PREIMAGE: &str = "fun(x: { Type <: Top }) x";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_term, parse_type, CalculusLevel as L};

    #[test]
    fn types() {
        assert_eq!(encode_ty(&Ty::Top), Ty::Top);
        let poly = parse_type(L::FSub, "all(Z <: Top) Z -> Z").unwrap();
        let want = parse_type(L::DSubBot, "all(x: { Type <: Top }) all(z: x.Type) x.Type").unwrap();
        assert_eq!(encode_ty(&poly), want);
        let arrow = parse_type(L::FSub, "Top -> Top").unwrap();
        assert_eq!(encode_ty(&arrow), parse_type(L::DSubBot, "all(y: Top) Top").unwrap());
    }

    #[test]
    fn terms() {
        let id = parse_term(L::FSub, "tfun(X <: Top) fun(y: X) y").unwrap();
        let want = parse_term(L::DSubBot, "fun(x: { Type <: Top }) fun(y: x.Type) y").unwrap();
        assert_eq!(encode_tm(&id), want);
        let app = parse_term(L::FSub, "(tfun(X <: Top) fun(y: X) y) [Top]").unwrap();
        let want = parse_term(L::DSubBot, "(fun(x: { Type <: Top }) fun(y: x.Type) y) (typeval Top)").unwrap();
        assert_eq!(encode_tm(&app), want);
        let plain = parse_term(L::FSub, "fun(y: Top) y").unwrap();
        assert_eq!(encode_tm(&plain), plain);
    }

    #[test]
    fn corpus_parses() {
        assert!(CORPUS.len() >= 20);
        for src in CORPUS {
            parse_term(L::FSub, src).unwrap_or_else(|e| panic!("{src}: {e}"));
        }
        parse_term(L::DSubBot, NO_PREIMAGE).unwrap();
    }
}
