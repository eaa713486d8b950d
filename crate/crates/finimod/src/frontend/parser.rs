//! S-expression scripts: reading, checking against declarations, printing.

use std::fmt;

use thiserror::Error;

use crate::kernel::{SortId, Store, TermId, BOOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos, msg: msg.into() })
}

/// A formula or term as written. Positions are ignored by equality so a
/// printed and re-read script compares equal.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Sym(String),
    App(String, Vec<Expr>),
    Quant { forall: bool, vars: Vec<(String, String)>, body: Box<Expr> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    DeclareSort(String),
    DeclareFun { name: String, args: Vec<String>, ret: String },
    DeclareConst { name: String, sort: String },
    Assert(Expr),
    CheckSat,
    GetModel,
    SetOption(String, String),
}

#[derive(Clone, Debug, Default)]
pub struct Script {
    pub commands: Vec<Command>,
    /// Start position of each command.
    pub positions: Vec<Pos>,
}

impl PartialEq for Script {
    fn eq(&self, other: &Script) -> bool {
        self.commands == other.commands
    }
}

// ---- reading ----

#[derive(Debug)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = vec![(Vec::new(), Pos::default())];
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);
    let mut tok = String::new();
    let mut tok_pos = Pos::default();
    let flush = |tok: &mut String, tok_pos: Pos, stack: &mut Vec<(Vec<Sexp>, Pos)>| {
        if !tok.is_empty() {
            stack.last_mut().unwrap().0.push(Sexp::Atom(std::mem::take(tok), tok_pos));
        }
    };
    while let Some(c) = chars.next() {
        let here = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
        match c {
            ';' => {
                flush(&mut tok, tok_pos, &mut stack);
                while let Some(&d) = chars.peek() {
                    if d == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                flush(&mut tok, tok_pos, &mut stack);
                stack.push((Vec::new(), here));
            }
            ')' => {
                flush(&mut tok, tok_pos, &mut stack);
                if stack.len() == 1 {
                    return err(here, "unexpected ')'");
                }
                let (items, p) = stack.pop().unwrap();
                stack.last_mut().unwrap().0.push(Sexp::List(items, p));
            }
            c if c.is_whitespace() => flush(&mut tok, tok_pos, &mut stack),
            c => {
                if tok.is_empty() {
                    tok_pos = here;
                }
                tok.push(c);
            }
        }
    }
    flush(&mut tok, tok_pos, &mut stack);
    if stack.len() > 1 {
        return err(stack.last().unwrap().1, "unclosed '('");
    }
    Ok(stack.pop().unwrap().0)
}

fn symbol(s: &Sexp) -> Result<(&str, Pos), ParseError> {
    match s {
        Sexp::Atom(a, p) => {
            let ok = a.chars().next().is_some_and(|c| !c.is_ascii_digit() && c != ':')
                && a.chars().all(|c| c.is_ascii_alphanumeric() || "~@$%^&*_-+=<>.?/'".contains(c));
            if ok {
                Ok((a, *p))
            } else {
                err(*p, format!("invalid identifier '{a}'"))
            }
        }
        Sexp::List(_, p) => err(*p, "expected a symbol"),
    }
}

fn expr(s: &Sexp) -> Result<Expr, ParseError> {
    match s {
        Sexp::Atom(..) => {
            let (a, pos) = symbol(s)?;
            Ok(Expr { kind: ExprKind::Sym(a.to_string()), pos })
        }
        Sexp::List(items, pos) => {
            let Some(head) = items.first() else {
                return err(*pos, "empty application");
            };
            let (h, _) = symbol(head)?;
            if h == "forall" || h == "exists" {
                let [_, Sexp::List(bs, bpos), body] = &items[..] else {
                    return err(*pos, format!("{h} expects a binder list and a body"));
                };
                if bs.is_empty() {
                    return err(*bpos, "empty binder list");
                }
                let mut vars = Vec::new();
                for b in bs {
                    let Sexp::List(pair, bp) = b else {
                        return err(b.pos(), "expected (variable sort)");
                    };
                    let [x, srt] = &pair[..] else {
                        return err(*bp, "expected (variable sort)");
                    };
                    vars.push((symbol(x)?.0.to_string(), symbol(srt)?.0.to_string()));
                }
                return Ok(Expr {
                    kind: ExprKind::Quant { forall: h == "forall", vars, body: Box::new(expr(body)?) },
                    pos: *pos,
                });
            }
            if items.len() == 1 {
                return err(*pos, format!("application of {h} without arguments"));
            }
            let args = items[1..].iter().map(expr).collect::<Result<Vec<_>, _>>()?;
            Ok(Expr { kind: ExprKind::App(h.to_string(), args), pos: *pos })
        }
    }
}

fn command(s: &Sexp) -> Result<Command, ParseError> {
    let Sexp::List(items, pos) = s else {
        return err(s.pos(), "expected a command");
    };
    let Some(Sexp::Atom(kw, _)) = items.first() else {
        return err(*pos, "expected a command keyword");
    };
    let args = &items[1..];
    let arity = |n: usize| -> Result<(), ParseError> {
        if args.len() == n {
            Ok(())
        } else {
            err(*pos, format!("{kw} expects {n} arguments"))
        }
    };
    match kw.as_str() {
        "declare-sort" => {
            arity(2)?;
            match &args[1] {
                Sexp::Atom(n, _) if n == "0" => {}
                other => return err(other.pos(), "only sorts of arity 0 are supported"),
            }
            Ok(Command::DeclareSort(symbol(&args[0])?.0.to_string()))
        }
        "declare-fun" => {
            arity(3)?;
            let Sexp::List(dom, _) = &args[1] else {
                return err(args[1].pos(), "expected a list of argument sorts");
            };
            let dom = dom.iter().map(|d| symbol(d).map(|x| x.0.to_string())).collect::<Result<Vec<_>, _>>()?;
            Ok(Command::DeclareFun {
                name: symbol(&args[0])?.0.to_string(),
                args: dom,
                ret: symbol(&args[2])?.0.to_string(),
            })
        }
        "declare-const" => {
            arity(2)?;
            Ok(Command::DeclareConst { name: symbol(&args[0])?.0.to_string(), sort: symbol(&args[1])?.0.to_string() })
        }
        "assert" => {
            arity(1)?;
            Ok(Command::Assert(expr(&args[0])?))
        }
        "check-sat" => arity(0).map(|_| Command::CheckSat),
        "get-model" => arity(0).map(|_| Command::GetModel),
        "set-option" => {
            arity(2)?;
            let (Sexp::Atom(k, kp), Sexp::Atom(v, _)) = (&args[0], &args[1]) else {
                return err(*pos, "expected :key value");
            };
            let Some(key) = k.strip_prefix(':') else {
                return err(*kp, "option keys start with ':'");
            };
            Ok(Command::SetOption(key.to_string(), v.clone()))
        }
        other => err(*pos, format!("unknown command {other}")),
    }
}

/// Reads a script and checks it against its own declarations.
pub fn parse(text: &str) -> Result<Script, ParseError> {
    let mut script = Script::default();
    for s in read_sexps(text)? {
        script.positions.push(s.pos());
        script.commands.push(command(&s)?);
    }
    elaborate(&script)?;
    Ok(script)
}

// ---- elaboration ----

/// A checked script turned into terms.
#[derive(Clone, Debug)]
pub struct Problem {
    pub store: Store,
    pub assertions: Vec<TermId>,
    pub options: Vec<(String, String)>,
    pub check_sat: bool,
    pub get_model: bool,
}

struct Elab<'a> {
    store: &'a mut Store,
    scope: Vec<(String, TermId)>,
}

impl Elab<'_> {
    fn sort(&self, name: &str, pos: Pos) -> Result<SortId, ParseError> {
        match self.store.sort_by_name(name) {
            Some(s) => Ok(s),
            None => err(pos, format!("unknown sort {name}")),
        }
    }

    fn formula(&mut self, e: &Expr) -> Result<TermId, ParseError> {
        let t = self.term(e)?;
        if self.store.sort(t) != BOOL {
            return err(e.pos, format!("expected a formula, found a term of sort {}", self.store.sort_name(self.store.sort(t))));
        }
        Ok(t)
    }

    fn term(&mut self, e: &Expr) -> Result<TermId, ParseError> {
        let pos = e.pos;
        let k = |r: Result<TermId, crate::kernel::KernelError>| r.or_else(|x| err(pos, x.to_string()));
        match &e.kind {
            ExprKind::Sym(name) => {
                if let Some(&(_, v)) = self.scope.iter().rev().find(|(n, _)| n == name) {
                    return Ok(v);
                }
                match self.store.func_by_name(name) {
                    Some(f) => k(self.store.mk_app(f, vec![])),
                    None => err(pos, format!("undeclared symbol {name}")),
                }
            }
            ExprKind::App(head, args) => match head.as_str() {
                "not" | "and" | "or" | "=>" => {
                    let xs = args.iter().map(|a| self.formula(a)).collect::<Result<Vec<_>, _>>()?;
                    match (head.as_str(), &xs[..]) {
                        ("not", [a]) => k(self.store.mk_not(*a)),
                        ("=>", [a, b]) => k(self.store.mk_implies(*a, *b)),
                        ("and", _) => k(self.store.mk_and(xs)),
                        ("or", _) => k(self.store.mk_or(xs)),
                        _ => err(pos, format!("wrong number of arguments to {head}")),
                    }
                }
                "=" => {
                    let [a, b] = &args[..] else {
                        return err(pos, "= expects two arguments");
                    };
                    let (a, b) = (self.term(a)?, self.term(b)?);
                    if self.store.sort(a) == BOOL && self.store.sort(b) == BOOL {
                        k(self.store.mk_iff(a, b))
                    } else {
                        k(self.store.mk_eq(a, b))
                    }
                }
                _ => {
                    let Some(f) = self.store.func_by_name(head) else {
                        return err(pos, format!("undeclared symbol {head}"));
                    };
                    let xs = args.iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
                    k(self.store.mk_app(f, xs))
                }
            },
            ExprKind::Quant { forall, vars, body } => {
                let depth = self.scope.len();
                let mut xs = Vec::new();
                for (x, s) in vars {
                    let s = self.sort(s, pos)?;
                    if s == BOOL {
                        return err(pos, format!("variable {x} ranges over Bool, which is not supported"));
                    }
                    if self.scope.iter().any(|(n, _)| n == x) {
                        return err(pos, format!("variable {x} is bound twice"));
                    }
                    let v = self.store.mk_var(x, s);
                    self.scope.push((x.clone(), v));
                    xs.push(v);
                }
                let b = self.formula(body);
                self.scope.truncate(depth);
                let b = b?;
                if *forall {
                    k(self.store.mk_forall(xs, b))
                } else {
                    k(self.store.mk_exists(xs, b))
                }
            }
        }
    }
}

/// Declares the script's symbols in a fresh store and builds its assertions.
pub fn elaborate(script: &Script) -> Result<Problem, ParseError> {
    let mut p = Problem { store: Store::new(), assertions: Vec::new(), options: Vec::new(), check_sat: false, get_model: false };
    for (i, c) in script.commands.iter().enumerate() {
        let pos = script.positions.get(i).copied().unwrap_or_default();
        let mut el = Elab { store: &mut p.store, scope: Vec::new() };
        let redeclared = |e: crate::kernel::KernelError| ParseError { pos, msg: e.to_string() };
        match c {
            Command::DeclareSort(name) => {
                el.store.declare_sort(name).map_err(redeclared)?;
            }
            Command::DeclareFun { name, args, ret } => {
                let dom = args.iter().map(|a| el.sort(a, pos)).collect::<Result<Vec<_>, _>>()?;
                if dom.contains(&BOOL) {
                    return err(pos, format!("{name} takes a Bool argument, which is not supported"));
                }
                let r = el.sort(ret, pos)?;
                el.store.declare_fun(name, dom, r).map_err(redeclared)?;
            }
            Command::DeclareConst { name, sort } => {
                let r = el.sort(sort, pos)?;
                el.store.declare_fun(name, vec![], r).map_err(redeclared)?;
            }
            Command::Assert(e) => {
                let t = el.formula(e)?;
                p.assertions.push(t);
            }
            Command::CheckSat => {
                if p.check_sat {
                    return err(pos, "at most one check-sat is allowed");
                }
                p.check_sat = true;
            }
            Command::GetModel => p.get_model = true,
            Command::SetOption(k, v) => p.options.push((k.clone(), v.clone())),
        }
    }
    Ok(p)
}

// ---- printing ----

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Sym(s) => write!(f, "{s}"),
            ExprKind::App(h, args) => {
                write!(f, "({h}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            ExprKind::Quant { forall, vars, body } => {
                write!(f, "({} (", if *forall { "forall" } else { "exists" })?;
                for (i, (x, s)) in vars.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "({x} {s})")?;
                }
                write!(f, ") {body})")
            }
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::DeclareSort(s) => write!(f, "(declare-sort {s} 0)"),
            Command::DeclareFun { name, args, ret } => write!(f, "(declare-fun {name} ({}) {ret})", args.join(" ")),
            Command::DeclareConst { name, sort } => write!(f, "(declare-const {name} {sort})"),
            Command::Assert(e) => write!(f, "(assert {e})"),
            Command::CheckSat => write!(f, "(check-sat)"),
            Command::GetModel => write!(f, "(get-model)"),
            Command::SetOption(k, v) => write!(f, "(set-option :{k} {v})"),
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.commands {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_commands() {
        let s = parse("(declare-sort S 0)(declare-const a S)(declare-const b S)(assert (not (= a b)))(check-sat)").unwrap();
        assert_eq!(s.commands.len(), 5);
        assert_eq!(s.commands[4], Command::CheckSat);
    }

    #[test]
    fn quantified_assertion() {
        let s = parse("(declare-sort S 0)(declare-fun f (S) S)\n(assert (forall ((x S)) (= (f x) x)))").unwrap();
        let p = elaborate(&s).unwrap();
        assert_eq!(p.assertions.len(), 1);
        assert!(matches!(p.store.node(p.assertions[0]), crate::kernel::Node::Forall { .. }));
    }

    #[test]
    fn undeclared_symbol_is_named() {
        let e = parse("(declare-sort S 0)\n(declare-const a S)\n(assert (= a zz))").unwrap_err();
        assert!(e.msg.contains("zz"), "{e}");
        assert_eq!(e.pos, Pos { line: 3, col: 14 });
    }

    #[test]
    fn rejected_inputs() {
        for bad in [
            "(declare-sort S 1)",
            "(declare-sort S 0)(declare-const a! S)",
            "(declare-sort S 0)(declare-const a S)(assert a)",
            "(check-sat)(check-sat)",
            "(declare-sort S 0)(declare-fun P (S) Bool)(assert (forall ((x S)) (forall ((x S)) (P x))))",
            "(declare-fun p (Bool) Bool)",
            "(assert (forall ((b Bool)) b))",
            "(declare-sort S 0",
            ")",
            "(frobnicate)",
            "(declare-sort S 0)(declare-sort S 0)",
        ] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn bool_equality_is_iff() {
        let s = parse("(declare-const p Bool)(declare-const q Bool)(assert (= p q))").unwrap();
        let p = elaborate(&s).unwrap();
        assert!(matches!(p.store.node(p.assertions[0]), crate::kernel::Node::And(_)));
    }

    #[test]
    fn round_trip() {
        let text = "; comment\n(set-option :mbqi full)(declare-sort S 0)(declare-fun f (S S) S)(declare-fun P (S) Bool)\
                    (declare-const c S)(assert (=> (P c) (exists ((y S) (z S)) (and (P (f y z)) (not (= y c))))))\
                    (assert (or true (P c)))(check-sat)(get-model)";
        let s = parse(text).unwrap();
        let printed = s.to_string();
        assert_eq!(parse(&printed).unwrap(), s);
        assert_eq!(parse(&printed).unwrap().to_string(), printed);
    }
}
