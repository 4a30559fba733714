//! Term generation: exhaustive by size, or random from a seeded stream.
//! Annotated (Church-style) terms only; sizes count embedded types.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::judgment::{CheckConfig, Verdict};
use crate::statics::typecheck;
use crate::syntax::{gate_term, gate_type, CalculusLevel as L, Decl, Label, Tm, Ty, TypingCtx, VarRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Term,
    TyVar,
}

type Scope = Vec<Kind>;

fn bound(scope: &Scope, want: Kind) -> impl Iterator<Item = VarRef> + '_ {
    let n = scope.len();
    scope
        .iter()
        .enumerate()
        .filter(move |(_, k)| **k == want)
        .map(move |(pos, _)| VarRef::Bound(n - 1 - pos))
}

fn under(scope: &Scope, k: Kind) -> Scope {
    let mut s = scope.clone();
    s.push(k);
    s
}

fn label_a() -> Label {
    Label::ty("A")
}

fn label_l() -> Label {
    Label::val("l")
}

fn label_m() -> Label {
    Label::method("m")
}

/// Every syntactic type and term of a given exact size, per scope.
pub struct Enumerator {
    level: L,
    tys: HashMap<(Scope, usize), Vec<Ty>>,
    tms: HashMap<(Scope, usize), Vec<Tm>>,
}

/// `(a, b)` with `|a| + |b| = total`, both at least one.
fn splits(total: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..total).map(move |a| (a, total - a))
}

impl Enumerator {
    pub fn new(level: L) -> Enumerator {
        Enumerator { level, tys: HashMap::new(), tms: HashMap::new() }
    }

    fn tys(&mut self, scope: &Scope, size: usize) -> Vec<Ty> {
        if size == 0 {
            return Vec::new();
        }
        let key = (scope.clone(), size);
        if let Some(v) = self.tys.get(&key) {
            return v.clone();
        }
        let lv = self.level;
        let mut out = Vec::new();
        if size == 1 {
            out.push(Ty::Top);
            out.push(Ty::Bot);
            for v in bound(scope, Kind::Term) {
                out.push(Ty::sel(v, if lv == L::Dot { label_a() } else { Label::type_label() }));
            }
            for v in bound(scope, Kind::TyVar) {
                out.push(Ty::FVarSub(v));
            }
        } else {
            let n = size - 1;
            for (a, b) in splits(n) {
                let left = self.tys(scope, a);
                let right = self.tys(scope, b);
                let right_under = self.tys(&under(scope, Kind::Term), b);
                let right_tv = self.tys(&under(scope, Kind::TyVar), b);
                for x in &left {
                    for y in &right {
                        out.push(Ty::and(x.clone(), y.clone()));
                        out.push(Ty::or(x.clone(), y.clone()));
                        out.push(Ty::arrow(x.clone(), y.clone()));
                        out.push(Ty::tag(x.clone(), y.clone()));
                        out.push(Ty::mem(label_a(), x.clone(), y.clone()));
                    }
                    for y in &right_under {
                        out.push(Ty::dep_fun(x.clone(), y.clone()));
                        out.push(Ty::method(label_m(), x.clone(), y.clone()));
                    }
                    for y in &right_tv {
                        out.push(Ty::all_sub(x.clone(), y.clone()));
                    }
                }
            }
            for x in self.tys(scope, n) {
                out.push(Ty::fld(label_l(), x.clone()));
                out.push(Ty::reference(x));
            }
            for x in self.tys(&under(scope, Kind::Term), n) {
                out.push(Ty::bind(x));
            }
        }
        out.retain(|t| gate_type(lv, t).is_ok() && t.size() == size);
        self.tys.insert(key, out.clone());
        out
    }

    fn decls(&mut self, scope: &Scope, size: usize) -> Vec<Vec<Decl>> {
        // one or two declarations with distinct labels, in label order
        let mut singles: Vec<Vec<(Decl, usize)>> = vec![Vec::new(); size + 1];
        for s in 2..=size {
            let inner = s - 1;
            for t in self.tys(scope, inner) {
                singles[s].push((Decl::type_eq(label_a(), t), 0));
            }
            for (a, b) in splits(inner) {
                for lo in self.tys(scope, a) {
                    for hi in self.tys(scope, b) {
                        if lo != hi {
                            singles[s].push((Decl::TypeInit { label: label_a(), lo: lo.clone(), hi }, 0));
                        }
                    }
                }
            }
            for body in self.tms(scope, inner) {
                singles[s].push((Decl::field(label_l(), body), 1));
            }
            for (a, b) in splits(inner) {
                let bodies = self.tms(&under(scope, Kind::Term), b);
                for p in self.tys(scope, a) {
                    for body in &bodies {
                        singles[s].push((
                            Decl::MethodInit { label: label_m(), param: p.clone(), result: None, body: body.clone() },
                            2,
                        ));
                    }
                }
            }
        }
        let mut out = Vec::new();
        for (d, _) in &singles[size] {
            out.push(vec![d.clone()]);
        }
        for (a, b) in splits(size) {
            for (d1, r1) in &singles[a] {
                for (d2, r2) in &singles[b] {
                    if r1 < r2 {
                        out.push(vec![d1.clone(), d2.clone()]);
                    }
                }
            }
        }
        out
    }

    /// Terms of exactly `size`, gated at the level.
    pub fn tms_closed(&mut self, size: usize) -> Vec<Tm> {
        self.tms(&Vec::new(), size)
    }

    fn tms(&mut self, scope: &Scope, size: usize) -> Vec<Tm> {
        if size == 0 {
            return Vec::new();
        }
        let key = (scope.clone(), size);
        if let Some(v) = self.tms.get(&key) {
            return v.clone();
        }
        let lv = self.level;
        let mut out = Vec::new();
        if size == 1 {
            for v in bound(scope, Kind::Term) {
                out.push(Tm::Var(v));
            }
        } else {
            let n = size - 1;
            for (a, b) in splits(n) {
                let fs = self.tms(scope, a);
                let xs = self.tms(scope, b);
                for f in &fs {
                    for x in &xs {
                        out.push(Tm::app(f.clone(), x.clone()));
                        if lv.has_refs() {
                            out.push(Tm::assign(f.clone(), x.clone()));
                        }
                        if lv == L::Dot {
                            out.push(Tm::invoke(f.clone(), label_m(), x.clone()));
                        }
                    }
                }
                let annots = self.tys(scope, a);
                let bodies = self.tms(&under(scope, Kind::Term), b);
                let tv_bodies = self.tms(&under(scope, Kind::TyVar), b);
                for t in &annots {
                    for body in &bodies {
                        out.push(Tm::lam(t.clone(), body.clone()));
                    }
                    for body in &tv_bodies {
                        out.push(Tm::ty_lam(t.clone(), body.clone()));
                    }
                }
                let fix_annots = self.tys(&under(scope, Kind::Term), a);
                if lv.has_self_types() && lv != L::Dot {
                    for t in &fix_annots {
                        for body in &bodies {
                            out.push(Tm::fix(t.clone(), body.clone()));
                        }
                    }
                }
                let args = self.tys(scope, b);
                for f in self.tms(scope, a) {
                    for t in &args {
                        out.push(Tm::ty_app(f.clone(), t.clone()));
                    }
                }
            }
            for t in self.tys(scope, n) {
                out.push(Tm::TypeVal(t));
            }
            for t in self.tms(scope, n) {
                out.push(Tm::sel(t.clone(), label_l()));
                if lv.has_refs() {
                    out.push(Tm::ref_new(t.clone()));
                    out.push(Tm::deref(t));
                }
            }
            if lv.has_records() && lv != L::Dot {
                for t in self.tms(scope, n.saturating_sub(1)) {
                    out.push(Tm::Rec(vec![Decl::field(label_l(), t)]));
                }
            }
            if lv == L::Dot {
                for ds in self.decls(&under(scope, Kind::Term), n) {
                    out.push(Tm::Obj(ds));
                }
            }
        }
        out.retain(|t| gate_term(lv, t).is_ok() && t.size() == size);
        self.tms.insert(key, out.clone());
        out
    }
}

/// Every closed term of size at most `max_size` that typechecks at the
/// level, paired with its elaborated form and type; smallest first.
pub fn well_typed(level: L, max_size: usize, cfg: &CheckConfig) -> Vec<(Tm, Ty)> {
    let mut e = Enumerator::new(level);
    let mut out = Vec::new();
    let g = TypingCtx::new();
    for size in 1..=max_size {
        for t in e.tms_closed(size) {
            if let Ok(r) = typecheck(level, &g, &t, cfg) {
                if r.judgment.verdict == Verdict::Proved {
                    out.push((r.term.unwrap_or(t), r.ty.expect("proved typing has a type")));
                }
            }
        }
    }
    out
}

/// Every gated type of size at most `max_size` whose free variables are
/// `Name::Term(i)` for the entries of `free`, with `holes` further bound
/// holes (innermost last) of the given kinds.
pub fn types_in(level: L, free: &[Kind], holes: &[Kind], max_size: usize) -> Vec<Ty> {
    let mut e = Enumerator::new(level);
    let scope: Scope = free.iter().chain(holes).copied().collect();
    let len = scope.len();
    let h = holes.len();
    (1..=max_size)
        .flat_map(|s| e.tys(&scope, s))
        .map(|t| {
            t.map_vars(0, &mut |d, v| match v {
                VarRef::Bound(i) if i >= d + h => VarRef::term(len - 1 - (i - d)),
                other => other,
            })
        })
        .collect()
}

/// A random gated term of size about `budget`; not necessarily well typed.
pub fn random_term(level: L, rng: &mut ChaCha8Rng, budget: usize) -> Tm {
    let mut scope = Vec::new();
    loop {
        let t = random_tm(level, rng, &mut scope, budget.max(1));
        if gate_term(level, &t).is_ok() {
            return t;
        }
    }
}

fn random_ty(level: L, rng: &mut ChaCha8Rng, scope: &mut Scope, budget: usize) -> Ty {
    let vars: Vec<VarRef> = bound(scope, Kind::Term).collect();
    let tvars: Vec<VarRef> = bound(scope, Kind::TyVar).collect();
    let leaf = |rng: &mut ChaCha8Rng| -> Ty {
        match rng.gen_range(0..4) {
            0 if level.has_bot() => Ty::Bot,
            1 if !vars.is_empty() && level != L::FSub => {
                let l = if level == L::Dot { label_a() } else { Label::type_label() };
                Ty::sel(vars[rng.gen_range(0..vars.len())], l)
            }
            2 if !tvars.is_empty() => Ty::FVarSub(tvars[rng.gen_range(0..tvars.len())]),
            _ => Ty::Top,
        }
    };
    if budget <= 1 {
        return leaf(rng);
    }
    let half = budget / 2;
    let t = match (level, rng.gen_range(0..6)) {
        (L::FSub, 0 | 1) => Ty::arrow(random_ty(level, rng, scope, half), random_ty(level, rng, scope, half)),
        (L::FSub, 2) => {
            let b = random_ty(level, rng, scope, half);
            scope.push(Kind::TyVar);
            let body = random_ty(level, rng, scope, half);
            scope.pop();
            Ty::all_sub(b, body)
        }
        (L::Dot, 0) => Ty::mem(label_a(), random_ty(level, rng, scope, half), random_ty(level, rng, scope, half)),
        (L::Dot, 1) => {
            let p = random_ty(level, rng, scope, half);
            scope.push(Kind::Term);
            let r = random_ty(level, rng, scope, half);
            scope.pop();
            Ty::method(label_m(), p, r)
        }
        (_, 0) => Ty::tag(Ty::Bot, random_ty(level, rng, scope, budget - 1)),
        (_, 1) => {
            let p = random_ty(level, rng, scope, half);
            scope.push(Kind::Term);
            let r = random_ty(level, rng, scope, half);
            scope.pop();
            Ty::dep_fun(p, r)
        }
        (_, 2) if level.has_lattice() => Ty::and(random_ty(level, rng, scope, half), random_ty(level, rng, scope, half)),
        (_, 3) if level.has_records() => Ty::fld(label_l(), random_ty(level, rng, scope, budget - 1)),
        (_, 4) if level.has_refs() => Ty::reference(random_ty(level, rng, scope, budget - 1)),
        _ => leaf(rng),
    };
    if gate_type(level, &t).is_ok() {
        t
    } else {
        leaf(rng)
    }
}

fn random_tm(level: L, rng: &mut ChaCha8Rng, scope: &mut Scope, budget: usize) -> Tm {
    let vars: Vec<VarRef> = bound(scope, Kind::Term).collect();
    let leaf = |rng: &mut ChaCha8Rng, scope: &mut Scope| -> Tm {
        if !vars.is_empty() && rng.gen_bool(0.7) {
            Tm::Var(vars[rng.gen_range(0..vars.len())])
        } else if level == L::Dot {
            Tm::Obj(Vec::new())
        } else {
            let t = random_ty(level, rng, scope, 1);
            match level {
                L::FSub => Tm::lam(t, Tm::Var(VarRef::Bound(0))),
                _ => Tm::TypeVal(t),
            }
        }
    };
    if budget <= 1 {
        return leaf(rng, scope);
    }
    let half = budget / 2;
    let lam = |rng: &mut ChaCha8Rng, scope: &mut Scope, k: Kind| {
        let t = random_ty(level, rng, scope, half.min(3));
        scope.push(k);
        let body = random_tm(level, rng, scope, budget - 1 - t.size().min(budget - 1));
        scope.pop();
        (t, body)
    };
    match rng.gen_range(0..8) {
        0 | 1 if level != L::Dot => {
            let (t, b) = lam(rng, scope, Kind::Term);
            Tm::lam(t, b)
        }
        2 | 3 if level != L::Dot => Tm::app(random_tm(level, rng, scope, half), random_tm(level, rng, scope, half)),
        4 if level == L::FSub => {
            let (t, b) = lam(rng, scope, Kind::TyVar);
            Tm::ty_lam(t, b)
        }
        5 if level == L::FSub => {
            let f = random_tm(level, rng, scope, half);
            Tm::ty_app(f, random_ty(level, rng, scope, half))
        }
        4 if level.has_records() && level != L::Dot => Tm::Rec(vec![Decl::field(label_l(), random_tm(level, rng, scope, budget - 1))]),
        5 if level.has_records() => Tm::sel(random_tm(level, rng, scope, budget - 1), label_l()),
        6 if level.has_self_types() && level != L::Dot => {
            scope.push(Kind::Term);
            let t = random_ty(level, rng, scope, 2);
            let b = random_tm(level, rng, scope, budget - 1);
            scope.pop();
            Tm::fix(t, b)
        }
        7 if level.has_refs() => match rng.gen_range(0..3) {
            0 => Tm::ref_new(random_tm(level, rng, scope, budget - 1)),
            1 => Tm::deref(random_tm(level, rng, scope, budget - 1)),
            _ => Tm::assign(random_tm(level, rng, scope, half), random_tm(level, rng, scope, half)),
        },
        _ if level == L::Dot => {
            if rng.gen_bool(0.5) {
                scope.push(Kind::Term);
                let mut ds = Vec::new();
                if rng.gen_bool(0.5) {
                    ds.push(Decl::type_eq(label_a(), random_ty(level, rng, scope, 2)));
                }
                if rng.gen_bool(0.5) {
                    ds.push(Decl::field(label_l(), random_tm(level, rng, scope, half)));
                }
                if rng.gen_bool(0.5) {
                    let p = random_ty(level, rng, scope, 2);
                    scope.push(Kind::Term);
                    let body = random_tm(level, rng, scope, half);
                    scope.pop();
                    ds.push(Decl::MethodInit { label: label_m(), param: p, result: None, body });
                }
                scope.pop();
                Tm::Obj(ds)
            } else if rng.gen_bool(0.5) {
                Tm::invoke(random_tm(level, rng, scope, half), label_m(), random_tm(level, rng, scope, half))
            } else {
                Tm::sel(random_tm(level, rng, scope, budget - 1), label_l())
            }
        }
        _ if level != L::FSub && rng.gen_bool(0.3) => Tm::TypeVal(random_ty(level, rng, scope, budget - 1)),
        _ => leaf(rng, scope),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn dot_has_no_closed_size_one_terms() {
        assert!(Enumerator::new(L::Dot).tms_closed(1).is_empty());
    }

    #[test]
    fn dsub_small_terms_include_type_values() {
        let ts = well_typed(L::DSub, 3, &CheckConfig::default());
        assert!(ts.iter().any(|(t, _)| *t == Tm::TypeVal(Ty::Top)));
    }

    #[test]
    fn enumeration_is_duplicate_free() {
        let mut e = Enumerator::new(L::DSubBot);
        for s in 1..=5 {
            let ts = e.tms_closed(s);
            let set: std::collections::HashSet<_> = ts.iter().collect();
            assert_eq!(set.len(), ts.len(), "size {s}");
        }
    }

    #[test]
    fn random_terms_are_gated_and_deterministic() {
        for level in L::ALL {
            let mut a = ChaCha8Rng::seed_from_u64(7);
            let mut b = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..50 {
                let t = random_term(level, &mut a, 8);
                assert!(gate_term(level, &t).is_ok());
                assert_eq!(t, random_term(level, &mut b, 8));
            }
        }
    }
}
