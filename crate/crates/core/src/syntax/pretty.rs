//! Printing in the ASCII surface syntax accepted by the parser.

use std::fmt::{self, Write};

use super::{Decl, Label, Name, Tm, Ty, VarRef};

/// Display names for free term variables; unnamed levels print as `y<k>`.
#[derive(Clone, Debug, Default)]
pub struct Names {
    pub terms: Vec<String>,
}

impl Names {
    fn free(&self, n: Name) -> String {
        match n {
            Name::Term(k) => self
                .terms
                .get(k)
                .cloned()
                .unwrap_or_else(|| format!("y{k}")),
            Name::Cmp(id) => format!("z{id}"),
            Name::Loc(i) => format!("x{i}"),
        }
    }
}

struct Printer<'a> {
    names: &'a Names,
    bound: Vec<String>,
}

impl Printer<'_> {
    fn var(&self, v: &VarRef) -> String {
        match v {
            VarRef::Bound(i) => match self.bound.len().checked_sub(i + 1) {
                Some(pos) => self.bound[pos].clone(),
                None => format!("?{i}"),
            },
            VarRef::Free(n) => self.names.free(*n),
        }
    }

    fn binder(&mut self, stem: &str) -> String {
        let name = format!("{stem}{}", self.bound.len());
        self.bound.push(name.clone());
        name
    }

    fn ty(&mut self, t: &Ty, prec: u8, out: &mut String) {
        let wrap = |p: u8| p < prec;
        match t {
            Ty::Top => out.push_str("Top"),
            Ty::Bot => out.push_str("Bot"),
            Ty::Or(a, b) => {
                let w = wrap(1);
                if w {
                    out.push('(');
                }
                self.ty(a, 1, out);
                out.push_str(" | ");
                self.ty(b, 2, out);
                if w {
                    out.push(')');
                }
            }
            Ty::And(a, b) => {
                let w = wrap(2);
                if w {
                    out.push('(');
                }
                self.ty(a, 2, out);
                out.push_str(" & ");
                self.ty(b, 3, out);
                if w {
                    out.push(')');
                }
            }
            Ty::TypeMem(l, lo, hi) => self.member(&l.name, lo, hi, out),
            Ty::TypeTag(lo, hi) => self.member("Type", lo, hi, out),
            Ty::Fld(l, t) => {
                let _ = write!(out, "{{ {} : ", l.name);
                self.ty(t, 0, out);
                out.push_str(" }");
            }
            Ty::Method(m, p, r) => {
                let _ = write!(out, "{{ {}(", m.name);
                let depth = self.bound.len();
                let mut param = String::new();
                self.ty(p, 0, &mut param);
                let x = self.binder("x");
                let _ = write!(out, "{x}:{param}):");
                self.ty(r, 0, out);
                self.bound.truncate(depth);
                out.push_str(" }");
            }
            Ty::Sel(v, l) => {
                let _ = write!(out, "{}.{}", self.var(v), l.name);
            }
            Ty::FVarSub(v) => out.push_str(&self.var(v)),
            Ty::BindSelf(b) => {
                let w = wrap(0);
                if w {
                    out.push('(');
                }
                let depth = self.bound.len();
                let z = self.binder("s");
                let _ = write!(out, "rec({z}) ");
                self.ty(b, 0, out);
                self.bound.truncate(depth);
                if w {
                    out.push(')');
                }
            }
            Ty::DepFun(p, r) | Ty::AllSub(p, r) => {
                let w = wrap(0);
                if w {
                    out.push('(');
                }
                let fsub = matches!(t, Ty::AllSub(..));
                let mut param = String::new();
                self.ty(p, 0, &mut param);
                let depth = self.bound.len();
                let x = self.binder(if fsub { "X" } else { "x" });
                let rel = if fsub { "<:" } else { ":" };
                let _ = write!(out, "all({x}{rel}{param}) ");
                self.ty(r, 0, out);
                self.bound.truncate(depth);
                if w {
                    out.push(')');
                }
            }
            Ty::RefTy(t) => {
                let w = wrap(2);
                if w {
                    out.push('(');
                }
                out.push_str("Ref ");
                self.ty(t, 3, out);
                if w {
                    out.push(')');
                }
            }
            Ty::ArrowSub(a, b) => {
                let w = wrap(0);
                if w {
                    out.push('(');
                }
                self.ty(a, 1, out);
                out.push_str(" -> ");
                self.ty(b, 0, out);
                if w {
                    out.push(')');
                }
            }
        }
    }

    fn member(&mut self, name: &str, lo: &Ty, hi: &Ty, out: &mut String) {
        if lo == hi {
            let _ = write!(out, "{{ {name} = ");
            self.ty(hi, 0, out);
        } else {
            let _ = write!(out, "{{ {name} : ");
            self.ty(lo, 1, out);
            out.push_str(" .. ");
            self.ty(hi, 1, out);
        }
        out.push_str(" }");
    }

    fn tm(&mut self, t: &Tm, prec: u8, out: &mut String) {
        let open = |p: u8, out: &mut String| {
            if p < prec {
                out.push('(');
            }
        };
        let close = |p: u8, out: &mut String| {
            if p < prec {
                out.push(')');
            }
        };
        match t {
            Tm::Var(v) => out.push_str(&self.var(v)),
            Tm::Loc(l) => {
                let _ = write!(out, "x{l}");
            }
            Tm::Lam(a, b) | Tm::TyLamSub(a, b) => {
                open(0, out);
                let fsub = matches!(t, Tm::TyLamSub(..));
                let mut ann = String::new();
                self.ty(a, 0, &mut ann);
                let depth = self.bound.len();
                let x = self.binder(if fsub { "X" } else { "x" });
                if fsub {
                    let _ = write!(out, "tfun({x}<:{ann}) ");
                } else {
                    let _ = write!(out, "fun({x}:{ann}) ");
                }
                self.tm(b, 0, out);
                self.bound.truncate(depth);
                close(0, out);
            }
            Tm::Fix(a, b) => {
                open(0, out);
                let depth = self.bound.len();
                let x = self.binder("x");
                let _ = write!(out, "fix({x}:");
                self.ty(a, 0, out);
                out.push_str(") ");
                self.tm(b, 0, out);
                self.bound.truncate(depth);
                close(0, out);
            }
            Tm::Assign(a, b) => {
                open(0, out);
                self.tm(a, 1, out);
                out.push_str(" := ");
                self.tm(b, 0, out);
                close(0, out);
            }
            Tm::App(f, a) => {
                open(1, out);
                self.tm(f, 1, out);
                out.push(' ');
                self.tm(a, 2, out);
                close(1, out);
            }
            Tm::TyAppSub(f, a) => {
                open(1, out);
                self.tm(f, 1, out);
                out.push_str(" [");
                self.ty(a, 0, out);
                out.push(']');
                close(1, out);
            }
            Tm::TypeVal(a) => {
                open(2, out);
                out.push_str("typeval ");
                self.ty(a, 3, out);
                close(2, out);
            }
            Tm::RefNew(a, ann) => {
                open(2, out);
                out.push_str("ref ");
                if let Some(ann) = ann {
                    out.push('[');
                    self.ty(ann, 0, out);
                    out.push_str("] ");
                }
                self.tm(a, 2, out);
                close(2, out);
            }
            Tm::Deref(a) => {
                open(2, out);
                out.push('!');
                self.tm(a, 2, out);
                close(2, out);
            }
            Tm::SelField(a, l) => {
                self.tm(a, 3, out);
                let _ = write!(out, ".{}", l.name);
            }
            Tm::InvokeMethod(a, m, arg) => {
                self.tm(a, 3, out);
                let _ = write!(out, ".{}(", m.name);
                self.tm(arg, 0, out);
                out.push(')');
            }
            Tm::Rec(ds) => {
                out.push('{');
                self.decls(ds, out);
                out.push('}');
            }
            Tm::Obj(ds) => {
                let depth = self.bound.len();
                let x = self.binder("x");
                let _ = write!(out, "new ({x}) {{");
                self.decls(ds, out);
                out.push('}');
                self.bound.truncate(depth);
            }
        }
    }

    fn decls(&mut self, ds: &[Decl], out: &mut String) {
        for (i, d) in ds.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { "; " });
            match d {
                Decl::TypeInit { label, lo, hi } => {
                    if lo == hi {
                        let _ = write!(out, "{} = ", label.name);
                        self.ty(lo, 0, out);
                    } else {
                        let _ = write!(out, "{} : ", label.name);
                        self.ty(lo, 1, out);
                        out.push_str(" .. ");
                        self.ty(hi, 1, out);
                    }
                }
                Decl::FieldInit { label, annot, body } => {
                    let _ = write!(out, "{}", label.name);
                    if let Some(a) = annot {
                        out.push_str(" : ");
                        self.ty(a, 0, out);
                    }
                    out.push_str(" = ");
                    self.tm(body, 0, out);
                }
                Decl::MethodInit {
                    label,
                    param,
                    result,
                    body,
                } => {
                    let mut p = String::new();
                    self.ty(param, 0, &mut p);
                    let depth = self.bound.len();
                    let y = self.binder("y");
                    let _ = write!(out, "{}({y}:{p})", label.name);
                    if let Some(r) = result {
                        out.push_str(" : ");
                        self.ty(r, 0, out);
                    }
                    out.push_str(" = ");
                    self.tm(body, 0, out);
                    self.bound.truncate(depth);
                }
            }
        }
        if !ds.is_empty() {
            out.push(' ');
        }
    }
}

impl Ty {
    pub fn show(&self, names: &Names) -> String {
        let mut out = String::new();
        Printer {
            names,
            bound: Vec::new(),
        }
        .ty(self, 0, &mut out);
        out
    }
}

impl Tm {
    pub fn show(&self, names: &Names) -> String {
        let mut out = String::new();
        Printer {
            names,
            bound: Vec::new(),
        }
        .tm(self, 0, &mut out);
        out
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.show(&Names::default()))
    }
}

impl fmt::Display for Tm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.show(&Names::default()))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
