//! Parser for the ASCII surface syntax.
//!
//! A program is a sequence of lines; `name = term` binds a top-level
//! definition visible to later lines, any other line is the program body.
//! Indented lines and lines inside open brackets continue the previous one.

use super::{
    gate_term, gate_type, CalculusLevel, Decl, GateViolation, Label, Name, Names, Tm, Ty, VarRef,
};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: unexpected character `{ch}`")]
    BadChar { line: usize, ch: char },
    #[error("line {line}: expected {expected}, found {found}")]
    Unexpected {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: unbound variable `{name}`")]
    Unbound { line: usize, name: String },
    #[error("line {line}: {source}")]
    Gate {
        line: usize,
        #[source]
        source: GateViolation,
    },
    #[error("program has no body")]
    Empty,
}

impl ParseError {
    pub fn gate_violation(&self) -> Option<&GateViolation> {
        match self {
            ParseError::Gate { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Top-level definitions followed by the body; definition `i` is the free
/// term variable `Name::Term(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub level: CalculusLevel,
    pub defs: Vec<(String, Tm)>,
    pub body: Tm,
}

impl Program {
    pub fn names(&self) -> Names {
        Names {
            terms: self.defs.iter().map(|(n, _)| n.clone()).collect(),
        }
    }

    /// A program that is just a closed term.
    pub fn term(level: CalculusLevel, body: Tm) -> Program {
        Program {
            level,
            defs: Vec::new(),
            body,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
        }
    }
}

const SYMBOLS: [&str; 18] = [
    ":=", "<:", "->", "..", "(", ")", "{", "}", "[", "]", ":", ";", ".", ",", "=", "&", "|", "!",
];

fn lex(src: &str, line: usize) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let mut rest = src;
    'outer: while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if c == '#' {
            break;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let end = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '\''))
                .unwrap_or(rest.len());
            toks.push(Tok::Ident(rest[..end].to_string()));
            rest = &rest[end..];
            continue;
        }
        for s in SYMBOLS {
            if let Some(r) = rest.strip_prefix(s) {
                toks.push(Tok::Sym(s));
                rest = r;
                continue 'outer;
            }
        }
        return Err(ParseError::BadChar { line, ch: c });
    }
    Ok(toks)
}

const KEYWORDS: [&str; 11] = [
    "Top", "Bot", "Ref", "all", "rec", "fun", "tfun", "fix", "new", "ref", "typeval",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scope {
    Term,
    TypeVar,
}

struct Parser<'a> {
    level: CalculusLevel,
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
    globals: &'a [String],
    bound: Vec<(String, Scope)>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn err<T>(&self, expected: &str) -> PResult<T> {
        Err(ParseError::Unexpected {
            line: self.line,
            expected: expected.to_string(),
            found: self.peek().map_or("end of line".to_string(), Tok::describe),
        })
    }

    fn eat(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s) || self.is_kw(s);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("identifier"),
        }
    }

    fn gate_ty(&self, t: &Ty) -> PResult<()> {
        gate_type(self.level, t).map_err(|source| ParseError::Gate {
            line: self.line,
            source,
        })
    }

    fn resolve(&self, name: &str) -> PResult<(VarRef, Scope)> {
        if let Some(i) = self.bound.iter().rev().position(|(n, _)| n == name) {
            let scope = self.bound[self.bound.len() - 1 - i].1;
            return Ok((VarRef::Bound(i), scope));
        }
        if let Some(k) = self.globals.iter().rposition(|n| n == name) {
            return Ok((VarRef::term(k), Scope::Term));
        }
        Err(ParseError::Unbound {
            line: self.line,
            name: name.to_string(),
        })
    }

    fn under<T>(
        &mut self,
        name: String,
        scope: Scope,
        f: impl FnOnce(&mut Self) -> PResult<T>,
    ) -> PResult<T> {
        self.bound.push((name, scope));
        let r = f(self);
        self.bound.pop();
        r
    }

    fn label(&self, name: &str) -> Label {
        if name.starts_with(|c: char| c.is_ascii_uppercase()) {
            Label::ty(name)
        } else {
            Label::val(name)
        }
    }

    // ----- types -----

    fn ty(&mut self) -> PResult<Ty> {
        if self.is_kw("all") {
            self.pos += 1;
            self.expect("(")?;
            let x = self.ident()?;
            let fsub = if self.eat("<:") {
                true
            } else {
                self.expect(":")?;
                false
            };
            let bound = self.ty()?;
            self.expect(")")?;
            let scope = if fsub { Scope::TypeVar } else { Scope::Term };
            let body = self.under(x, scope, |p| p.ty())?;
            return Ok(if fsub {
                Ty::all_sub(bound, body)
            } else {
                Ty::dep_fun(bound, body)
            });
        }
        if self.is_kw("rec") {
            self.pos += 1;
            self.expect("(")?;
            let z = self.ident()?;
            self.expect(")")?;
            let body = self.under(z, Scope::Term, |p| p.ty())?;
            return Ok(Ty::bind(body));
        }
        let lhs = self.ty_or()?;
        if self.eat("->") {
            let rhs = self.ty()?;
            return Ok(Ty::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_or(&mut self) -> PResult<Ty> {
        let mut t = self.ty_and()?;
        while self.eat("|") {
            t = Ty::or(t, self.ty_and()?);
        }
        Ok(t)
    }

    fn ty_and(&mut self) -> PResult<Ty> {
        let mut t = self.ty_atom()?;
        while self.eat("&") {
            t = Ty::and(t, self.ty_atom()?);
        }
        Ok(t)
    }

    fn ty_atom(&mut self) -> PResult<Ty> {
        if self.eat("Top") {
            return Ok(Ty::Top);
        }
        if self.eat("Bot") {
            return Ok(Ty::Bot);
        }
        if self.eat("Ref") {
            return Ok(Ty::reference(self.ty_atom()?));
        }
        if self.eat("(") {
            let t = self.ty()?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.eat("{") {
            let t = self.member()?;
            self.expect("}")?;
            return Ok(t);
        }
        if matches!(self.peek_at(1), Some(Tok::Sym("("))) {
            return self.method_ty();
        }
        let x = self.ident()?;
        let (v, scope) = self.resolve(&x)?;
        if self.eat(".") {
            let l = self.ident_or_type()?;
            return Ok(Ty::sel(v, Label::ty(&l)));
        }
        match scope {
            Scope::TypeVar => Ok(Ty::FVarSub(v)),
            Scope::Term if self.level == CalculusLevel::FSub => Ok(Ty::FVarSub(v)),
            Scope::Term => self.err("type"),
        }
    }

    fn ident_or_type(&mut self) -> PResult<String> {
        self.ident()
    }

    fn method_ty(&mut self) -> PResult<Ty> {
        let m = self.ident()?;
        self.expect("(")?;
        let x = self.ident()?;
        self.expect(":")?;
        let param = self.ty()?;
        self.expect(")")?;
        self.expect(":")?;
        let result = self.under(x, Scope::Term, |p| p.ty())?;
        Ok(Ty::method(Label::method(&m), param, result))
    }

    fn member(&mut self) -> PResult<Ty> {
        if matches!(self.peek_at(1), Some(Tok::Sym("("))) {
            return self.method_ty();
        }
        let name = self.ident()?;
        let label = self.label(&name);
        if label.kind == super::LabelKind::Value {
            self.expect(":")?;
            return Ok(Ty::fld(label, self.ty()?));
        }
        let (lo, hi) = if self.eat("=") {
            let t = self.ty()?;
            (t.clone(), t)
        } else if self.eat("<:") {
            (Ty::Bot, self.ty()?)
        } else {
            self.expect(":")?;
            let lo = self.ty()?;
            self.expect("..")?;
            (lo, self.ty()?)
        };
        if label.is_type_label() && self.level.is_dsub_family() {
            Ok(Ty::tag(lo, hi))
        } else {
            Ok(Ty::mem(label, lo, hi))
        }
    }

    // ----- terms -----

    fn tm(&mut self) -> PResult<Tm> {
        for kw in ["fun", "tfun", "fix"] {
            if self.is_kw(kw) {
                self.pos += 1;
                self.expect("(")?;
                let x = self.ident()?;
                if kw == "tfun" {
                    self.expect("<:")?;
                } else {
                    self.expect(":")?;
                }
                return match kw {
                    "fun" => {
                        let annot = self.ty()?;
                        self.expect(")")?;
                        let body = self.under(x, Scope::Term, |p| p.tm())?;
                        Ok(Tm::lam(annot, body))
                    }
                    "tfun" => {
                        let bound = self.ty()?;
                        self.expect(")")?;
                        let body = self.under(x, Scope::TypeVar, |p| p.tm())?;
                        Ok(Tm::ty_lam(bound, body))
                    }
                    _ => self.under(x, Scope::Term, |p| {
                        let annot = p.ty()?;
                        p.expect(")")?;
                        Ok(Tm::fix(annot, p.tm()?))
                    }),
                };
            }
        }
        let lhs = self.tm_app()?;
        if self.eat(":=") {
            return Ok(Tm::assign(lhs, self.tm()?));
        }
        Ok(lhs)
    }

    fn starts_prefix(&self) -> bool {
        match self.peek() {
            Some(Tok::Sym(s)) => matches!(*s, "(" | "{" | "!"),
            Some(Tok::Ident(s)) => {
                !KEYWORDS.contains(&s.as_str()) || matches!(s.as_str(), "new" | "ref" | "typeval")
            }
            None => false,
        }
    }

    fn tm_app(&mut self) -> PResult<Tm> {
        let mut t = self.tm_prefix()?;
        loop {
            if self.eat("[") {
                let a = self.ty()?;
                self.expect("]")?;
                t = Tm::ty_app(t, a);
            } else if self.starts_prefix() {
                t = Tm::app(t, self.tm_prefix()?);
            } else {
                return Ok(t);
            }
        }
    }

    fn tm_prefix(&mut self) -> PResult<Tm> {
        if self.eat("!") {
            return Ok(Tm::deref(self.tm_prefix()?));
        }
        if self.eat("ref") {
            let annot = if self.eat("[") {
                let a = self.ty()?;
                self.expect("]")?;
                Some(a)
            } else {
                None
            };
            return Ok(Tm::RefNew(Box::new(self.tm_prefix()?), annot));
        }
        if self.eat("typeval") {
            return Ok(Tm::TypeVal(self.ty_atom()?));
        }
        self.tm_postfix()
    }

    fn tm_postfix(&mut self) -> PResult<Tm> {
        let mut t = self.tm_atom()?;
        while self.eat(".") {
            let name = self.ident()?;
            if self.eat("(") {
                let arg = self.tm()?;
                self.expect(")")?;
                t = Tm::invoke(t, Label::method(&name), arg);
            } else {
                t = Tm::sel(t, Label::val(&name));
            }
        }
        Ok(t)
    }

    fn tm_atom(&mut self) -> PResult<Tm> {
        if self.eat("(") {
            let t = self.tm()?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.eat("new") {
            self.expect("(")?;
            let x = self.ident()?;
            self.expect(")")?;
            self.expect("{")?;
            let ds = self.under(x, Scope::Term, |p| p.decls(true))?;
            self.expect("}")?;
            return Ok(Tm::Obj(ds));
        }
        if self.eat("{") {
            let ds = self.decls(false)?;
            self.expect("}")?;
            return Ok(Tm::Rec(ds));
        }
        let x = self.ident()?;
        Ok(Tm::Var(self.resolve(&x)?.0))
    }

    fn decls(&mut self, in_object: bool) -> PResult<Vec<Decl>> {
        let mut ds = Vec::new();
        while !self.is_sym("}") {
            ds.push(self.decl(in_object)?);
            if !self.eat(";") {
                break;
            }
        }
        Ok(ds)
    }

    fn decl(&mut self, in_object: bool) -> PResult<Decl> {
        let name = self.ident()?;
        if in_object && self.eat("(") {
            let y = self.ident()?;
            let param = if self.eat(":") { self.ty()? } else { Ty::Top };
            self.expect(")")?;
            return self.under(y, Scope::Term, |p| {
                let result = if p.eat(":") { Some(p.ty()?) } else { None };
                p.expect("=")?;
                Ok(Decl::MethodInit {
                    label: Label::method(&name),
                    param,
                    result,
                    body: p.tm()?,
                })
            });
        }
        let label = self.label(&name);
        if label.kind == super::LabelKind::Type {
            let (lo, hi) = if self.eat("=") {
                let t = self.ty()?;
                (t.clone(), t)
            } else if self.eat("<:") {
                (Ty::Bot, self.ty()?)
            } else {
                self.expect(":")?;
                let lo = self.ty()?;
                self.expect("..")?;
                (lo, self.ty()?)
            };
            return Ok(Decl::TypeInit { label, lo, hi });
        }
        let annot = if self.eat(":") {
            Some(self.ty()?)
        } else {
            None
        };
        self.expect("=")?;
        Ok(Decl::FieldInit {
            label,
            annot,
            body: self.tm()?,
        })
    }

    fn finish(&self) -> PResult<()> {
        if self.pos < self.toks.len() {
            return self.err("end of line");
        }
        Ok(())
    }
}

fn parser<'a>(
    level: CalculusLevel,
    src: &str,
    line: usize,
    globals: &'a [String],
) -> PResult<Parser<'a>> {
    Ok(Parser {
        level,
        toks: lex(src, line)?,
        pos: 0,
        line,
        globals,
        bound: Vec::new(),
    })
}

/// Parses a type whose free term variables are the given top-level names.
pub fn parse_type_in(
    level: CalculusLevel,
    src: &str,
    globals: &[String],
) -> Result<Ty, ParseError> {
    let mut p = parser(level, src, 1, globals)?;
    let t = p.ty()?;
    p.finish()?;
    p.gate_ty(&t)?;
    Ok(t)
}

pub fn parse_type(level: CalculusLevel, src: &str) -> Result<Ty, ParseError> {
    parse_type_in(level, src, &[])
}

pub fn parse_term_in(
    level: CalculusLevel,
    src: &str,
    globals: &[String],
    line: usize,
) -> Result<Tm, ParseError> {
    let mut p = parser(level, src, line, globals)?;
    let t = p.tm()?;
    p.finish()?;
    gate_term(level, &t).map_err(|source| ParseError::Gate { line, source })?;
    Ok(t)
}

pub fn parse_term(level: CalculusLevel, src: &str) -> Result<Tm, ParseError> {
    parse_term_in(level, src, &[], 1)
}

fn bracket_depth(s: &str) -> i64 {
    let code = s.split('#').next().unwrap_or("");
    code.chars()
        .map(|c| match c {
            '(' | '{' | '[' => 1,
            ')' | '}' | ']' => -1,
            _ => 0,
        })
        .sum()
}

/// Logical lines with the number of the physical line they start on.
fn logical_lines(src: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    let mut depth = 0i64;
    for (i, raw) in src.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("");
        if code.trim().is_empty() {
            continue;
        }
        let continues = depth > 0 || raw.starts_with(char::is_whitespace);
        match out.last_mut() {
            Some((_, acc)) if continues => {
                acc.push(' ');
                acc.push_str(code);
            }
            _ => out.push((i + 1, code.to_string())),
        }
        depth += bracket_depth(code);
    }
    out
}

fn definition_head(line: &str) -> Option<(&str, &str)> {
    let (lhs, rhs) = line.split_once('=')?;
    let name = lhs.trim();
    let plain = !name.is_empty()
        && name.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        && !KEYWORDS.contains(&name);
    // `x := t` is an assignment, not a definition
    (plain && !lhs.ends_with(':')).then_some((name, rhs))
}

pub fn parse_program(level: CalculusLevel, src: &str) -> Result<Program, ParseError> {
    let mut defs: Vec<(String, Tm)> = Vec::new();
    let mut body = None;
    for (line, text) in logical_lines(src) {
        let globals: Vec<String> = defs.iter().map(|(n, _)| n.clone()).collect();
        match definition_head(&text) {
            Some((name, rhs)) => {
                let t = parse_term_in(level, rhs, &globals, line)?;
                defs.push((name.to_string(), t));
            }
            None => {
                if body.is_some() {
                    return Err(ParseError::Unexpected {
                        line,
                        expected: "a definition (the body was already given)".into(),
                        found: text.trim().to_string(),
                    });
                }
                body = Some(parse_term_in(level, &text, &globals, line)?);
            }
        }
    }
    let body = match body {
        Some(b) => b,
        None => match defs.len() {
            0 => return Err(ParseError::Empty),
            n => Tm::Var(VarRef::Free(Name::Term(n - 1))),
        },
    };
    Ok(Program { level, defs, body })
}

#[cfg(test)]
mod tests {
    use super::*;
    use CalculusLevel as L;

    #[test]
    fn parses_types_at_dot() {
        let t = parse_type(L::Dot, "rec(z) { A : Bot .. Top } & { l : z.A }").unwrap();
        let a = Label::ty("A");
        assert_eq!(
            t,
            Ty::bind(Ty::and(
                Ty::mem(a.clone(), Ty::Bot, Ty::Top),
                Ty::fld(Label::val("l"), Ty::sel(VarRef::Bound(0), a))
            ))
        );
    }

    #[test]
    fn type_member_is_tag_in_dsub() {
        assert_eq!(
            parse_type(L::DSub, "{ Type = Top }").unwrap(),
            Ty::tag_eq(Ty::Top)
        );
        assert_eq!(
            parse_type(L::DSub, "{ Type <: Top }").unwrap(),
            Ty::tag(Ty::Bot, Ty::Top)
        );
    }

    #[test]
    fn dependent_function_binds_parameter() {
        let t = parse_type(L::DSub, "all(x:{ Type <: Top }) x.Type").unwrap();
        assert_eq!(
            t,
            Ty::dep_fun(
                Ty::tag(Ty::Bot, Ty::Top),
                Ty::sel(VarRef::Bound(0), Label::type_label())
            )
        );
    }

    #[test]
    fn fsub_types() {
        let t = parse_type(L::FSub, "all(X<:Top) X -> X").unwrap();
        let x = Ty::FVarSub(VarRef::Bound(0));
        assert_eq!(t, Ty::all_sub(Ty::Top, Ty::arrow(x.clone(), x)));
    }

    #[test]
    fn gate_error_names_constructor() {
        let e = parse_type(L::DSub, "Top & Top").unwrap_err();
        assert_eq!(e.gate_violation().unwrap().constructor, "And");
        let e = parse_term(L::Dot, "fun(x:Top) x").unwrap_err();
        assert_eq!(e.gate_violation().unwrap().constructor, "Lam");
    }

    #[test]
    fn objects_and_methods() {
        let t = parse_term(L::Dot, "new (s) { A = Top; l = s; m(y) = y }.m(new (o) {})").unwrap();
        let Tm::InvokeMethod(obj, m, _) = &t else {
            panic!("{t:?}")
        };
        assert_eq!(&*m.name, "m");
        let Tm::Obj(ds) = &**obj else { panic!() };
        assert_eq!(ds.len(), 3);
        assert_eq!(
            ds[1],
            Decl::field(Label::val("l"), Tm::Var(VarRef::Bound(0)))
        );
        assert!(matches!(
            &ds[2],
            Decl::MethodInit {
                body: Tm::Var(VarRef::Bound(0)),
                ..
            }
        ));
    }

    #[test]
    fn refs_and_application() {
        let t = parse_term(
            L::DSubBotAndOrRecFixMut,
            "(fun(r:Ref { Type = Top }) r := !r) (ref typeval Top)",
        )
        .unwrap();
        assert!(matches!(t, Tm::App(..)));
    }

    #[test]
    fn program_definitions() {
        let src = "# identity\nid = fun(x:{ Type = Top }) x\n\nid (typeval Top)\n";
        let p = parse_program(L::DSub, src).unwrap();
        assert_eq!(p.defs.len(), 1);
        assert_eq!(
            p.body,
            Tm::app(Tm::Var(VarRef::term(0)), Tm::TypeVal(Ty::Top))
        );
    }

    #[test]
    fn continuation_lines() {
        let src = "f = fun(x:{ Type = Top })\n  x\nf (typeval Top)";
        let p = parse_program(L::DSub, src).unwrap();
        assert_eq!(
            p.defs[0].1,
            Tm::lam(Ty::tag_eq(Ty::Top), Tm::Var(VarRef::Bound(0)))
        );
    }

    #[test]
    fn unbound_variable() {
        assert!(matches!(
            parse_term(L::DSub, "y"),
            Err(ParseError::Unbound { .. })
        ));
    }

    #[test]
    fn printing_round_trips() {
        let cases = [
            (L::Dot, "new (s) { A : Bot .. s.A; l : { l : Top } = s; m(y:s.A) : s.A = y }.m(new (o) {}).l"),
            (L::DSubBotAndOrRecFixMut, "fix(f:{ l : Ref { Type = Top } }) { l = ref [{ Type = Top }] typeval Top }"),
            (L::FSub, "tfun(X<:Top) fun(x:X) x"),
            (L::DSubBotAndOrRecFixMut, "(fun(r:Ref Top) !r) (ref (fun(x:Top) x))"),
            (L::DSub, "fun(x:all(y:{ Type <: Top }) y.Type) x"),
        ];
        for (lvl, src) in cases {
            let t = parse_term(lvl, src).unwrap();
            let printed = t.to_string();
            assert_eq!(parse_term(lvl, &printed).unwrap(), t, "{printed}");
        }
    }
}
