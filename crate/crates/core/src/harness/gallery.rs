//! Fixed counterexamples: why bounds must be good, and why good bounds
//! do not survive narrowing. Incompatible base types are played by
//! records with distinct fields.

use serde::Serialize;

use crate::judgment::{CheckConfig, Verdict};
use crate::statics::{good_bounds, selection_candidates, subtype, subtype_declarative_search, typecheck};
use crate::syntax::{parse_term, parse_type, parse_type_in, CalculusLevel as L, CtxEntry, Tm, TypingCtx};

#[derive(Clone, Debug, Serialize)]
pub struct GalleryCase {
    pub name: &'static str,
    pub expected: Vec<Verdict>,
    pub observed: Vec<Verdict>,
}

impl GalleryCase {
    pub fn passed(&self) -> bool {
        self.expected == self.observed
    }
}

/// Typed DOT programs that only typecheck when objects may have bad
/// bounds; each gets stuck when run.
pub const BAD_BOUNDS_PROGRAMS: &[&str] = &[
    "(new (s) { A : { l1 : Top } .. { l2 : Top }; f : s.A = new (u) { l1 = new (w) { } } }).f.l2",
    "(new (s) { A : { l1 : Top } .. { l2 : Top }; m(y: s.A) : { l2 : Top } = y }).m(new (u) { l1 = new (w) { } }).l2",
];

fn ty(src: &str) -> crate::syntax::Ty {
    parse_type(L::Dot, src).expect("gallery type")
}

/// `x : {A : {l1:Top}..{l2:Top}} ⊢ {l1:Top} <: x.A <: {l2:Top}`, while the
/// endpoints are unrelated on their own.
pub fn bad_bounds_transitivity(cfg: &CheckConfig) -> GalleryCase {
    let g = TypingCtx::from_terms(vec![CtxEntry::term(ty("{ A : { l1 : Top } .. { l2 : Top } }"))]);
    let s = ty("{ l1 : Top }");
    let u = ty("{ l2 : Top }");
    let cands = selection_candidates(&g);
    let via = subtype_declarative_search(L::Dot, &g, &s, &u, cfg, &cands, true).map(|j| j.verdict);
    let empty = TypingCtx::new();
    let fwd = subtype(L::Dot, &empty, &s, &u, cfg).map(|j| j.verdict);
    let back = subtype(L::Dot, &empty, &u, &s, cfg).map(|j| j.verdict);
    GalleryCase {
        name: "bad bounds make transitivity unsound",
        expected: vec![Verdict::Proved, Verdict::Refuted, Verdict::Refuted],
        observed: [via, fwd, back].into_iter().map(|r| r.unwrap_or(Verdict::Unknown)).collect(),
    }
}

/// `x.A & {B = {l1:Top}}` has good bounds under `x : {A : Bot..Top}` but
/// not after narrowing `x` to `{A = {B = {l2:Top}}}`.
pub fn narrowing_breaks_good_bounds(cfg: &CheckConfig) -> GalleryCase {
    let t = parse_type_in(L::Dot, "x.A & { B = { l1 : Top } }", &["x".into()]).expect("gallery type");
    let wide = TypingCtx::from_terms(vec![CtxEntry::term(ty("{ A : Bot .. Top }"))]);
    let narrow = TypingCtx::from_terms(vec![CtxEntry::term(ty("{ A = { B = { l2 : Top } } }"))]);
    let narrowing = subtype(L::Dot, &TypingCtx::new(), &narrow.terms()[0].ty, &wide.terms()[0].ty, cfg);
    let before = good_bounds(L::Dot, &wide, &t, cfg);
    let after = good_bounds(L::Dot, &narrow, &t, cfg);
    GalleryCase {
        name: "narrowing destroys good bounds",
        expected: vec![Verdict::Proved, Verdict::Proved, Verdict::Refuted],
        observed: [narrowing, before, after].into_iter().map(|r| r.map(|j| j.verdict).unwrap_or(Verdict::Unknown)).collect(),
    }
}

/// Objects with bad bounds cannot be created.
pub fn no_bad_bounds_objects(cfg: &CheckConfig) -> GalleryCase {
    let mut observed = Vec::new();
    let bare: Tm = parse_term(L::Dot, "new (s) { A : { l1 : Top } .. { l2 : Top } }").expect("gallery term");
    let srcs: Vec<Tm> = BAD_BOUNDS_PROGRAMS.iter().map(|s| parse_term(L::Dot, s).expect("gallery term")).collect();
    for t in std::iter::once(&bare).chain(srcs.iter()) {
        let v = typecheck(L::Dot, &TypingCtx::new(), t, cfg).map(|r| r.judgment.verdict);
        observed.push(v.unwrap_or(Verdict::Unknown));
    }
    GalleryCase {
        name: "objects with bad bounds are rejected",
        expected: vec![Verdict::Refuted; observed.len()],
        observed,
    }
}

pub fn gallery(cfg: &CheckConfig) -> Vec<GalleryCase> {
    vec![bad_bounds_transitivity(cfg), narrowing_breaks_good_bounds(cfg), no_bad_bounds_objects(cfg)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::Mutations;

    #[test]
    fn all_cases_hold() {
        for c in gallery(&CheckConfig::default()) {
            assert!(c.passed(), "{}: {:?}", c.name, c.observed);
        }
    }

    #[test]
    fn bad_bounds_programs_typecheck_without_the_check() {
        let cfg = CheckConfig {
            mutations: Mutations { no_good_bounds: true, ..Mutations::default() },
            ..CheckConfig::default()
        };
        for src in BAD_BOUNDS_PROGRAMS {
            let t = parse_term(L::Dot, src).unwrap();
            let r = typecheck(L::Dot, &TypingCtx::new(), &t, &cfg).unwrap();
            assert_eq!(r.judgment.verdict, Verdict::Proved, "{src}");
        }
    }
}
