use serde::{Deserialize, Serialize};

use super::{Name, SyntaxError, Ty};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BindingKind {
    /// `x : T`
    Term,
    /// F<: type variable `X <: T`.
    TypeVar,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CtxEntry {
    pub ty: Ty,
    pub kind: BindingKind,
}

impl CtxEntry {
    pub fn term(ty: Ty) -> CtxEntry {
        CtxEntry {
            ty,
            kind: BindingKind::Term,
        }
    }

    pub fn type_var(bound: Ty) -> CtxEntry {
        CtxEntry {
            ty: bound,
            kind: BindingKind::TypeVar,
        }
    }
}

/// Typing context `y:T.., z:T..`: term bindings (addressed by level)
/// followed by bindings introduced during subtype comparisons (addressed by
/// a never-reused id).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypingCtx {
    terms: Vec<CtxEntry>,
    cmps: Vec<(usize, CtxEntry)>,
    next_cmp: usize,
}

impl TypingCtx {
    pub fn new() -> TypingCtx {
        TypingCtx::default()
    }

    pub fn from_terms(terms: Vec<CtxEntry>) -> TypingCtx {
        TypingCtx {
            terms,
            cmps: Vec::new(),
            next_cmp: 0,
        }
    }

    pub fn term_len(&self) -> usize {
        self.terms.len()
    }

    pub fn cmp_len(&self) -> usize {
        self.cmps.len()
    }

    pub fn terms(&self) -> &[CtxEntry] {
        &self.terms
    }

    pub fn cmps(&self) -> &[(usize, CtxEntry)] {
        &self.cmps
    }

    /// Appends a term binding; its name is the next level.
    pub fn push_term(&mut self, entry: CtxEntry) -> Name {
        debug_assert!(
            self.cmps.is_empty(),
            "term binding after comparison segment"
        );
        self.terms.push(entry);
        Name::Term(self.terms.len() - 1)
    }

    pub fn with_term(&self, entry: CtxEntry) -> (TypingCtx, Name) {
        let mut g = self.clone();
        let n = g.push_term(entry);
        (g, n)
    }

    /// Reserves a comparison name without binding it.
    pub fn fresh_cmp(&mut self) -> Name {
        let id = self.next_cmp;
        self.next_cmp += 1;
        Name::Cmp(id)
    }

    pub fn push_cmp_as(&mut self, n: Name, entry: CtxEntry) {
        match n {
            Name::Cmp(id) => {
                self.next_cmp = self.next_cmp.max(id + 1);
                self.cmps.push((id, entry));
            }
            _ => panic!("comparison binding under a non-comparison name"),
        }
    }

    pub fn push_cmp(&mut self, entry: CtxEntry) -> Name {
        let n = self.fresh_cmp();
        self.push_cmp_as(n, entry);
        n
    }

    pub fn lookup(&self, n: Name) -> Option<&CtxEntry> {
        match n {
            Name::Term(k) => self.terms.get(k),
            Name::Cmp(id) => self
                .cmps
                .iter()
                .rev()
                .find(|(i, _)| *i == id)
                .map(|(_, e)| e),
            Name::Loc(_) => None,
        }
    }

    pub fn binds(&self, n: Name) -> bool {
        self.lookup(n).is_some()
    }

    /// `Γ_[x]`: drops the comparison bindings to the right of `x`.
    pub fn restrict(&self, x: Name) -> Result<TypingCtx, SyntaxError> {
        match x {
            Name::Term(k) if k < self.terms.len() => Ok(TypingCtx {
                terms: self.terms.clone(),
                cmps: Vec::new(),
                next_cmp: self.next_cmp,
            }),
            Name::Cmp(id) => match self.cmps.iter().position(|(i, _)| *i == id) {
                Some(pos) => Ok(TypingCtx {
                    terms: self.terms.clone(),
                    cmps: self.cmps[..=pos].to_vec(),
                    next_cmp: self.next_cmp,
                }),
                None => Err(SyntaxError::UnboundName(x)),
            },
            _ => Err(SyntaxError::UnboundName(x)),
        }
    }

    /// Every free name of `t` is bound here.
    pub fn wf(&self, t: &Ty) -> bool {
        t.locally_closed().is_ok() && t.fv().into_iter().all(|n| self.binds(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Label, VarRef};

    fn a() -> Label {
        Label::ty("A")
    }

    #[test]
    fn restrict_at_term_drops_comparisons() {
        let mut g = TypingCtx::new();
        let y = g.push_term(CtxEntry::term(Ty::Top));
        let z1 = g.push_cmp(CtxEntry::term(Ty::Bot));
        let r = g.restrict(y).unwrap();
        assert_eq!(r.term_len(), 1);
        assert_eq!(r.cmp_len(), 0);
        let r = g.restrict(z1).unwrap();
        assert_eq!(r, g);
    }

    #[test]
    fn restrict_keeps_prefix_of_comparisons() {
        let mut g = TypingCtx::new();
        g.push_term(CtxEntry::term(Ty::Top));
        let z1 = g.push_cmp(CtxEntry::term(Ty::Top));
        let _z2 = g.push_cmp(CtxEntry::term(Ty::Top));
        let r = g.restrict(z1).unwrap();
        assert_eq!(r.cmp_len(), 1);
        // names are never reused after restriction
        let mut r2 = r.clone();
        assert_ne!(r2.fresh_cmp(), _z2);
    }

    #[test]
    fn restrict_unbound_is_error() {
        let g = TypingCtx::new();
        assert!(g.restrict(Name::Term(0)).is_err());
        assert!(g.restrict(Name::Cmp(2)).is_err());
    }

    #[test]
    fn wf_examples() {
        let x = VarRef::term(0);
        assert!(!TypingCtx::new().wf(&Ty::sel(x, Label::ty("L"))));
        let g = TypingCtx::from_terms(vec![CtxEntry::term(Ty::Top)]);
        assert!(g.wf(&Ty::sel(x, Label::ty("L"))));
        let g = TypingCtx::from_terms(vec![CtxEntry::term(Ty::mem(a(), Ty::Bot, Ty::Top))]);
        assert!(g.wf(&Ty::and(Ty::sel(x, a()), Ty::Top)));
    }
}
