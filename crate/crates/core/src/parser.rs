//! Concrete syntax: lexer, recursive-descent parser and pretty printer.
//!
//! The grammar is documented in `docs/grammar.md`.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ast::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

const SYMBOLS: &[&str] = &[
    "::", "*=", "->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ",", ";", "|", "\\", "+",
    "-", "*", "/", "<", ">", "!", ".",
];

const KEYWORDS: &[&str] = &[
    "decl", "call", "skip", "if", "then", "else", "qcase", "of", "true", "false", "lam", "pi", "CNOT", "SWAP", "TOF",
    "Ph", "RY", "NOT",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let span_at = |b: usize, e: usize, line: u32, ls: usize| Span {
        begin: b,
        end: e,
        line,
        column: (src[ls..b].chars().count() + 1) as u32,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                span: span_at(start, i, line, line_start),
            });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token {
                tok: Tok::Number(src[start..i].to_string()),
                span: span_at(start, i, line, line_start),
            });
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                i += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    span: span_at(start, i, line, line_start),
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap();
                return Err(ParseError {
                    span: span_at(start, start + ch.len_utf8(), line, line_start),
                    message: format!("unexpected character `{ch}`"),
                    expected: vec![],
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span_at(i, i, line, line_start),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.span(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok(name)
            }
            _ => self.error(&[what]),
        }
    }

    fn natural(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Number(text) if text.bytes().all(|b| b.is_ascii_digit()) => match text.parse() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => Err(ParseError {
                    span: self.span(),
                    message: format!("integer literal `{text}` is too large"),
                    expected: vec![],
                }),
            },
            _ => self.error(&["integer literal"]),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut decls = Vec::new();
        while self.is_kw("decl") {
            decls.push(self.decl()?);
            self.eat_sym(",");
        }
        if !self.eat_sym("::") {
            return self.error(&["`decl`", "`::`"]);
        }
        let main = self.stmts(&["end of input"])?;
        if *self.peek() != Tok::Eof {
            return self.error(&["statement", "end of input"]);
        }
        let vars = ordered_vars(&main);
        Ok(Program { decls, main, vars })
    }

    fn decl(&mut self) -> PResult<ProcDecl> {
        let start = self.span();
        self.expect_kw("decl")?;
        let name = self.ident("procedure name")?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            params.push(self.ident("parameter name")?);
            while self.eat_sym(",") {
                params.push(self.ident("parameter name")?);
            }
        }
        self.expect_sym(")")?;
        let body = self.block()?;
        Ok(ProcDecl {
            name,
            params,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn block(&mut self) -> PResult<Stmt> {
        self.expect_sym("{")?;
        let s = self.stmts(&["`}`"])?;
        self.expect_sym("}")?;
        Ok(s)
    }

    fn starts_stmt(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) => true,
            Tok::Sym(s) => *s == "(",
            _ => false,
        }
    }

    /// One or more statements. `follow` names what may come after.
    fn stmts(&mut self, follow: &[&str]) -> PResult<Stmt> {
        let mut items = vec![self.stmt()?];
        while self.starts_stmt() {
            items.push(self.stmt()?);
        }
        let _ = follow;
        Ok(Stmt::seq(items))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(kw) if kw == "skip" => {
                self.bump();
                self.expect_sym(";")?;
                StmtKind::Skip
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let cond = self.bool_expr()?;
                self.expect_kw("then")?;
                let then_branch = self.block()?;
                self.expect_kw("else")?;
                let else_branch = self.block()?;
                StmtKind::If {
                    cond,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                }
            }
            Tok::Ident(kw) if kw == "qcase" => {
                self.bump();
                self.qcase()?
            }
            Tok::Ident(kw) if kw == "call" => {
                self.bump();
                let proc = self.ident("procedure name")?;
                self.expect_sym("(")?;
                let mut args = Vec::new();
                if !self.is_sym(")") {
                    args.push(self.list_expr()?);
                    while self.eat_sym(",") {
                        args.push(self.list_expr()?);
                    }
                }
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                StmtKind::Call { proc, args }
            }
            Tok::Ident(kw) if kw == "CNOT" || kw == "SWAP" || kw == "TOF" => {
                self.bump();
                self.expect_sym("(")?;
                let mut qs = vec![self.qubit_expr()?];
                let arity = if kw == "TOF" { 3 } else { 2 };
                for _ in 1..arity {
                    self.expect_sym(",")?;
                    qs.push(self.qubit_expr()?);
                }
                self.expect_sym(")")?;
                self.eat_sym(";");
                let mut qs = qs.into_iter();
                let a = qs.next().unwrap();
                let b = qs.next().unwrap();
                match kw.as_str() {
                    "CNOT" => StmtKind::Cnot(a, b),
                    "SWAP" => StmtKind::Swap(a, b),
                    _ => StmtKind::Toffoli(a, b, qs.next().unwrap()),
                }
            }
            Tok::Ident(_) | Tok::Sym("(") => {
                let target = self.qubit_expr()?;
                self.expect_sym("*=")?;
                let gate = match self.peek().clone() {
                    Tok::Ident(word) => match GateName::from_keyword(&word) {
                        Some(g) => {
                            self.bump();
                            g
                        }
                        None => return self.error(&["`Ph`", "`RY`", "`NOT`"]),
                    },
                    _ => return self.error(&["`Ph`", "`RY`", "`NOT`"]),
                };
                let angle = if self.eat_sym("[") {
                    let f = self.angle_fn()?;
                    self.expect_sym("]")?;
                    Some(f)
                } else {
                    None
                };
                let arg = if self.eat_sym("(") {
                    let e = self.int_expr()?;
                    self.expect_sym(")")?;
                    Some(e)
                } else {
                    None
                };
                self.expect_sym(";")?;
                StmtKind::Apply {
                    target,
                    gate,
                    angle,
                    arg,
                }
            }
            _ => return self.error(&["statement"]),
        };
        Ok(Stmt::with_span(kind, start.to(self.prev_span())))
    }

    fn qcase(&mut self) -> PResult<StmtKind> {
        let mut controls = vec![self.qubit_expr()?];
        while self.eat_sym(",") {
            controls.push(self.qubit_expr()?);
        }
        self.expect_kw("of")?;
        self.expect_sym("{")?;
        let k = controls.len();
        let mut arms: Vec<Option<Stmt>> = vec![None; 1 << k.min(16)];
        loop {
            let label_span = self.span();
            let label = match self.peek().clone() {
                Tok::Number(text) if text.len() == k && text.bytes().all(|b| b == b'0' || b == b'1') => {
                    self.bump();
                    text
                }
                _ => return self.error(&[&format!("{k}-bit arm label")]),
            };
            self.expect_sym("->")?;
            let body = self.stmts(&["`,`", "`}`"])?;
            let idx = usize::from_str_radix(&label, 2).unwrap();
            if arms[idx].is_some() {
                return Err(ParseError {
                    span: label_span,
                    message: format!("duplicate qcase arm `{label}`"),
                    expected: vec![],
                });
            }
            arms[idx] = Some(body);
            if !self.eat_sym(",") {
                break;
            }
            if self.is_sym("}") {
                break;
            }
        }
        if !self.is_sym("}") {
            return self.error(&["`,`", "`}`"]);
        }
        if let Some(missing) = arms.iter().position(Option::is_none) {
            return Err(ParseError {
                span: self.span(),
                message: format!("qcase is missing arm `{missing:0k$b}`"),
                expected: vec![],
            });
        }
        self.bump();
        Ok(StmtKind::QCase {
            controls,
            arms: arms.into_iter().map(Option::unwrap).collect(),
        })
    }

    fn list_expr(&mut self) -> PResult<ListExpr> {
        let mut l = if self.eat_sym("(") {
            let l = self.list_expr()?;
            self.expect_sym(")")?;
            l
        } else {
            ListExpr::Var(self.ident("qubit list")?)
        };
        loop {
            if self.is_sym("[") && matches!(self.peek_at(2), Tok::Sym("]")) {
                match self.peek_at(1) {
                    Tok::Sym("-") => {
                        self.pos += 3;
                        l = ListExpr::FirstHalf(Box::new(l));
                        continue;
                    }
                    Tok::Sym("+") => {
                        self.pos += 3;
                        l = ListExpr::SecondHalf(Box::new(l));
                        continue;
                    }
                    _ => {}
                }
            }
            if self.eat_sym("\\") {
                self.expect_sym("[")?;
                let mut idx = vec![self.index()?];
                while self.eat_sym(",") {
                    idx.push(self.index()?);
                }
                self.expect_sym("]")?;
                l = ListExpr::Remove(Box::new(l), idx);
                continue;
            }
            return Ok(l);
        }
    }

    fn index(&mut self) -> PResult<Index> {
        if self.eat_sym("-") {
            Ok(Index::FromEnd(self.natural()?))
        } else {
            Ok(Index::At(self.int_expr()?))
        }
    }

    fn qubit_expr(&mut self) -> PResult<QubitExpr> {
        let list = self.list_expr()?;
        self.expect_sym("[")?;
        let index = self.index()?;
        self.expect_sym("]")?;
        Ok(QubitExpr { list, index })
    }

    fn int_expr(&mut self) -> PResult<IntExpr> {
        let mut e = match self.peek().clone() {
            Tok::Number(_) => IntExpr::Const(self.natural()?),
            Tok::Sym("|") => {
                self.bump();
                let l = self.list_expr()?;
                self.expect_sym("|")?;
                IntExpr::Size(Box::new(l))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.int_expr()?;
                self.expect_sym(")")?;
                e
            }
            Tok::Ident(_) => IntExpr::Var(self.ident("integer expression")?),
            _ => return self.error(&["integer expression"]),
        };
        loop {
            if self.is_sym("+") || self.is_sym("-") {
                let sign = if self.eat_sym("+") {
                    Sign::Plus
                } else {
                    self.bump();
                    Sign::Minus
                };
                let k = self.natural()?;
                e = IntExpr::Offset(Box::new(e), sign, k);
            } else if self.eat_sym("/") {
                match self.peek() {
                    Tok::Number(t) if t == "2" => {
                        self.bump();
                    }
                    _ => return self.error(&["`2`"]),
                }
                e = IntExpr::Half(Box::new(e));
            } else {
                return Ok(e);
            }
        }
    }

    fn bool_expr(&mut self) -> PResult<BoolExpr> {
        let mut b = self.bool_and()?;
        while self.eat_sym("||") {
            let r = self.bool_and()?;
            b = BoolExpr::Or(Box::new(b), Box::new(r));
        }
        Ok(b)
    }

    fn bool_and(&mut self) -> PResult<BoolExpr> {
        let mut b = self.bool_not()?;
        while self.eat_sym("&&") {
            let r = self.bool_not()?;
            b = BoolExpr::And(Box::new(b), Box::new(r));
        }
        Ok(b)
    }

    fn bool_not(&mut self) -> PResult<BoolExpr> {
        if self.eat_sym("!") {
            return Ok(BoolExpr::Not(Box::new(self.bool_not()?)));
        }
        if self.is_kw("true") || self.is_kw("false") {
            let v = self.is_kw("true");
            self.bump();
            return Ok(BoolExpr::Lit(v));
        }
        let save = self.pos;
        let cmp_err = match self.comparison() {
            Ok(b) => return Ok(b),
            Err(e) => e,
        };
        if self.toks[save].tok == Tok::Sym("(") {
            let cmp_pos = self.pos;
            self.pos = save + 1;
            let inner = self.bool_expr().and_then(|b| self.expect_sym(")").map(|_| b));
            match inner {
                Ok(b) => return Ok(b),
                Err(e) => {
                    if self.pos <= cmp_pos {
                        self.pos = cmp_pos;
                        return Err(cmp_err);
                    }
                    return Err(e);
                }
            }
        }
        Err(cmp_err)
    }

    fn comparison(&mut self) -> PResult<BoolExpr> {
        let lhs = self.int_expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return self.error(&["comparison operator"]),
        };
        self.bump();
        let rhs = self.int_expr()?;
        Ok(BoolExpr::Cmp(lhs, op, rhs))
    }

    fn angle_fn(&mut self) -> PResult<AngleFn> {
        self.expect_kw("lam")?;
        let param = self.ident("parameter name")?;
        self.expect_sym(".")?;
        let body = self.angle_sum(&param)?;
        Ok(AngleFn { param, body })
    }

    fn angle_sum(&mut self, param: &str) -> PResult<AngleExpr> {
        let mut e = self.angle_product(param)?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(e);
            };
            let r = self.angle_product(param)?;
            e = AngleExpr::Bin(Box::new(e), op, Box::new(r));
        }
    }

    fn angle_product(&mut self, param: &str) -> PResult<AngleExpr> {
        let mut e = self.angle_unary(param)?;
        loop {
            let op = if self.eat_sym("*") {
                ArithOp::Mul
            } else if self.eat_sym("/") {
                ArithOp::Div
            } else {
                return Ok(e);
            };
            let r = self.angle_unary(param)?;
            e = AngleExpr::Bin(Box::new(e), op, Box::new(r));
        }
    }

    fn angle_unary(&mut self, param: &str) -> PResult<AngleExpr> {
        if self.eat_sym("-") {
            return Ok(AngleExpr::Neg(Box::new(self.angle_unary(param)?)));
        }
        match self.peek().clone() {
            Tok::Number(text) => {
                let span = self.span();
                self.bump();
                text.parse::<f64>().map(AngleExpr::Lit).map_err(|_| ParseError {
                    span,
                    message: format!("bad number `{text}`"),
                    expected: vec![],
                })
            }
            Tok::Ident(word) if word == "pi" => {
                self.bump();
                Ok(AngleExpr::Pi)
            }
            Tok::Ident(word) if word == param => {
                self.bump();
                Ok(AngleExpr::Param)
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.angle_sum(param)?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.error(&[&format!("`{param}`"), "`pi`", "number", "`(`"]),
        }
    }
}

/// Parses a complete program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    Parser { toks, pos: 0 }.program()
}

/// Parses a statement sequence on its own, with variables taken in order
/// of first occurrence.
pub fn parse_statement(src: &str) -> Result<Stmt, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let s = p.stmts(&["end of input"])?;
    if *p.peek() != Tok::Eof {
        return p.error(&["statement", "end of input"]);
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Pretty printing

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, d) in p.decls.iter().enumerate() {
        let _ = writeln!(out, "decl {}({}) {{", d.name, d.params.join(", "));
        print_stmt_into(&d.body, 1, &mut out);
        out.push('}');
        if i + 1 < p.decls.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("::\n");
    print_stmt_into(&p.main, 0, &mut out);
    out
}

/// Prints a statement on one line per atomic statement.
pub fn print_stmt(s: &Stmt) -> String {
    let mut out = String::new();
    print_stmt_into(s, 0, &mut out);
    if out.ends_with('\n') {
        out.pop();
    }
    out
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_stmt_into(s: &Stmt, level: usize, out: &mut String) {
    match &s.kind {
        StmtKind::Seq(items) => {
            for item in items {
                print_stmt_into(item, level, out);
            }
            return;
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            indent(level, out);
            let _ = writeln!(out, "if {} then {{", print_bool(cond));
            print_stmt_into(then_branch, level + 1, out);
            indent(level, out);
            out.push_str("} else {\n");
            print_stmt_into(else_branch, level + 1, out);
            indent(level, out);
            out.push_str("}\n");
            return;
        }
        StmtKind::QCase { controls, arms } => {
            indent(level, out);
            let cs: Vec<String> = controls.iter().map(print_qubit).collect();
            let _ = writeln!(out, "qcase {} of {{", cs.join(", "));
            let k = controls.len();
            for (i, arm) in arms.iter().enumerate() {
                indent(level + 1, out);
                let _ = writeln!(out, "{i:0k$b} ->");
                print_stmt_into(arm, level + 2, out);
                if i + 1 < arms.len() {
                    indent(level + 1, out);
                    out.push_str(",\n");
                }
            }
            indent(level, out);
            out.push_str("}\n");
            return;
        }
        _ => {}
    }
    indent(level, out);
    match &s.kind {
        StmtKind::Skip => out.push_str("skip;"),
        StmtKind::Apply {
            target,
            gate,
            angle,
            arg,
        } => {
            let _ = write!(out, "{} *= {}", print_qubit(target), gate.keyword());
            if let Some(f) = angle {
                let _ = write!(out, "[{}]", print_angle_fn(f));
            }
            if let Some(a) = arg {
                let _ = write!(out, "({})", print_int(a));
            }
            out.push(';');
        }
        StmtKind::Call { proc, args } => {
            let a: Vec<String> = args.iter().map(print_list).collect();
            let _ = write!(out, "call {}({});", proc, a.join(", "));
        }
        StmtKind::Cnot(a, b) => {
            let _ = write!(out, "CNOT({}, {});", print_qubit(a), print_qubit(b));
        }
        StmtKind::Swap(a, b) => {
            let _ = write!(out, "SWAP({}, {});", print_qubit(a), print_qubit(b));
        }
        StmtKind::Toffoli(a, b, c) => {
            let _ = write!(out, "TOF({}, {}, {});", print_qubit(a), print_qubit(b), print_qubit(c));
        }
        StmtKind::Seq(_) | StmtKind::If { .. } | StmtKind::QCase { .. } => unreachable!(),
    }
    out.push('\n');
}

pub fn print_int(e: &IntExpr) -> String {
    match e {
        IntExpr::Var(x) => x.clone(),
        IntExpr::Const(k) => k.to_string(),
        IntExpr::Offset(inner, sign, k) => {
            let op = match sign {
                Sign::Plus => '+',
                Sign::Minus => '-',
            };
            format!("{} {} {}", print_int(inner), op, k)
        }
        IntExpr::Half(inner) => match **inner {
            IntExpr::Offset(..) => format!("({})/2", print_int(inner)),
            _ => format!("{}/2", print_int(inner)),
        },
        IntExpr::Size(l) => format!("|{}|", print_list(l)),
    }
}

fn print_index(i: &Index) -> String {
    match i {
        Index::At(e) => print_int(e),
        Index::FromEnd(n) => format!("-{n}"),
    }
}

pub fn print_list(l: &ListExpr) -> String {
    match l {
        ListExpr::Var(q) => q.clone(),
        ListExpr::FirstHalf(inner) => format!("{}[-]", print_list(inner)),
        ListExpr::SecondHalf(inner) => format!("{}[+]", print_list(inner)),
        ListExpr::Remove(inner, idx) => {
            let parts: Vec<String> = idx.iter().map(print_index).collect();
            format!("{} \\ [{}]", print_list(inner), parts.join(", "))
        }
    }
}

pub fn print_qubit(q: &QubitExpr) -> String {
    format!("{}[{}]", print_list(&q.list), print_index(&q.index))
}

pub fn print_bool(b: &BoolExpr) -> String {
    fn go(b: &BoolExpr, prec: u8) -> String {
        match b {
            BoolExpr::Lit(v) => v.to_string(),
            BoolExpr::Cmp(x, op, y) => {
                let s = format!("{} {} {}", print_int(x), op.symbol(), print_int(y));
                if prec > 2 {
                    format!("({s})")
                } else {
                    s
                }
            }
            BoolExpr::Not(x) => format!("!{}", go(x, 3)),
            BoolExpr::And(x, y) => {
                let s = format!("{} && {}", go(x, 1), go(y, 2));
                if prec > 1 {
                    format!("({s})")
                } else {
                    s
                }
            }
            BoolExpr::Or(x, y) => {
                let s = format!("{} || {}", go(x, 0), go(y, 1));
                if prec > 0 {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
    go(b, 0)
}

pub fn print_angle_fn(f: &AngleFn) -> String {
    format!("lam {}. {}", f.param, print_angle(&f.body, &f.param, 0))
}

fn print_angle(e: &AngleExpr, param: &str, prec: u8) -> String {
    match e {
        AngleExpr::Param => param.to_string(),
        AngleExpr::Pi => "pi".to_string(),
        AngleExpr::Lit(v) => {
            let s = format_number(*v);
            if *v < 0.0 {
                format!("({s})")
            } else {
                s
            }
        }
        AngleExpr::Neg(inner) => format!("-{}", print_angle(inner, param, 2)),
        AngleExpr::Bin(l, op, r) => {
            let (p, sym) = match op {
                ArithOp::Add => (0, " + "),
                ArithOp::Sub => (0, " - "),
                ArithOp::Mul => (1, "*"),
                ArithOp::Div => (1, "/"),
            };
            let s = format!("{}{}{}", print_angle(l, param, p), sym, print_angle(r, param, p + 1));
            if prec > p {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

/// Shortest decimal text that parses back to the same value.
fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}
