//! Good bounds: every type member reachable in a type has its lower bound
//! below its upper bound. Checked when objects are created.

use crate::judgment::{on_big_stack, CheckConfig, Concl, Judgment, Stop};
use crate::syntax::{CalculusLevel, CtxEntry, Label, Ty, TypingCtx, VarRef};

use super::subtype::MAX_CHASE;
use super::{check_input, Checker, StaticError, R};

impl Checker {
    pub(crate) fn good_bounds_of(&mut self, g: &TypingCtx, t: &Ty) -> R {
        self.fuel.tick()?;
        let mut g2 = g.clone();
        let mut members: Vec<(Label, Ty, Ty)> = Vec::new();
        self.reachable_members(&mut g2, t, 0, &mut members);
        let mut premises = Vec::new();
        for (l, lo, _) in &members {
            for (l2, _, hi) in &members {
                if l != l2 {
                    continue;
                }
                match self.sub(&g2, lo, hi) {
                    Ok(d) => premises.push(d),
                    Err(Stop::Refuted(_)) => {
                        return Err(Stop::Refuted("type member with bad bounds"))
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(self.node(
            "GoodBounds",
            || Concl::GoodBounds {
                ctx: g.clone(),
                ty: t.clone(),
            },
            premises,
        ))
    }

    /// Members of the top-level intersection, looking inside self types
    /// (opened at a fresh comparison variable) and upper bounds of
    /// selections.
    fn reachable_members(
        &self,
        g: &mut TypingCtx,
        t: &Ty,
        depth: usize,
        out: &mut Vec<(Label, Ty, Ty)>,
    ) {
        match t {
            Ty::And(a, b) => {
                self.reachable_members(g, a, depth, out);
                self.reachable_members(g, b, depth, out);
            }
            Ty::BindSelf(b) if depth < MAX_CHASE => {
                let z = g.fresh_cmp();
                let opened = b.open(z.into());
                g.push_cmp_as(z, CtxEntry::term(opened.clone()));
                self.reachable_members(g, &opened, depth + 1, out);
            }
            Ty::Sel(VarRef::Free(y), l) if depth < MAX_CHASE => {
                for hi in self.upper_bounds(g, *y, l) {
                    self.reachable_members(g, &hi, depth + 1, out);
                }
            }
            _ => {
                if let Some((l, lo, hi)) = t.as_type_member() {
                    let m = (l, lo.clone(), hi.clone());
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
            }
        }
    }
}

/// `Γ ⊢ T` has good bounds.
pub fn good_bounds(
    level: CalculusLevel,
    g: &TypingCtx,
    t: &Ty,
    cfg: &CheckConfig,
) -> Result<Judgment, StaticError> {
    check_input(level, g, &[t])?;
    Ok(on_big_stack(|| {
        let mut c = Checker::new(level, cfg);
        let r = c.good_bounds_of(g, t);
        c.finish(r)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::Verdict;
    use crate::syntax::parse_type;

    fn gb(g: &TypingCtx, src: &str) -> Verdict {
        let t = parse_type(CalculusLevel::Dot, src).unwrap();
        good_bounds(CalculusLevel::Dot, g, &t, &CheckConfig::default())
            .unwrap()
            .verdict
    }

    #[test]
    fn simple_members() {
        let g = TypingCtx::new();
        assert_eq!(gb(&g, "{ A : Bot .. Top }"), Verdict::Proved);
        assert_eq!(
            gb(&g, "{ A : { l1 : Top } .. { l2 : Top } }"),
            Verdict::Refuted
        );
        assert_eq!(
            gb(&g, "rec(z) { A : Bot .. Top } & { B : z.A .. z.A }"),
            Verdict::Proved
        );
    }

    #[test]
    fn intersections_compare_across_components() {
        let g = TypingCtx::new();
        assert_eq!(
            gb(&g, "{ B = { l1 : Top } } & { B = { l2 : Top } }"),
            Verdict::Refuted
        );
        assert_eq!(
            gb(&g, "{ B : Bot .. { l1 : Top } } & { B : Bot .. Top }"),
            Verdict::Proved
        );
    }
}
