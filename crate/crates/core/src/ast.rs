//! Abstract syntax of PLP programs.
//!
//! The same types carry both the surface syntax produced by the parser and
//! the core grammar used by every later stage. Surface-only forms are the
//! gate shorthands (`CNOT`, `SWAP`, `TOF`), qcase on several qubits,
//! end-relative indices (`l[-n]`) and removal of several elements at once.
//! [`desugar_program`] rewrites all of them into the core grammar.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Source location of a syntax node.
///
/// Spans never take part in equality: two nodes that differ only in their
/// spans compare equal. This keeps `parse(print(p)) == p` meaningful.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub begin: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            begin: self.begin,
            end: other.end.max(self.begin),
            line: self.line,
            column: self.column,
        }
    }
}

pub type Ident = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Integer expressions: `x | k | i ± k | i/2 | |l|`.
#[derive(Debug, Clone, PartialEq)]
pub enum IntExpr {
    Var(Ident),
    Const(u64),
    /// `i + k` or `i - k`; the right operand is always a literal.
    Offset(Box<IntExpr>, Sign, u64),
    /// `i / 2`, rounded up.
    Half(Box<IntExpr>),
    Size(Box<ListExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Cmp(IntExpr, CmpOp, IntExpr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
    Lit(bool),
}

/// A position inside a qubit list.
#[derive(Debug, Clone, PartialEq)]
pub enum Index {
    At(IntExpr),
    /// `-n`: the n-th element counted from the end (surface only).
    FromEnd(u64),
}

/// Qubit list expressions: `q | l ⊖ [i, ...] | l^⊟ | l^⊞`.
#[derive(Debug, Clone, PartialEq)]
pub enum ListExpr {
    Var(Ident),
    /// Removal of the listed positions. In core form this holds a single
    /// `Index::At`, or several `Index::At` whose relative order cannot be
    /// known statically; those are evaluated simultaneously.
    Remove(Box<ListExpr>, Vec<Index>),
    FirstHalf(Box<ListExpr>),
    SecondHalf(Box<ListExpr>),
}

impl ListExpr {
    pub fn var(name: &str) -> ListExpr {
        ListExpr::Var(name.to_string())
    }

    /// The qubit-list variable this expression is built from.
    pub fn root(&self) -> &str {
        match self {
            ListExpr::Var(name) => name,
            ListExpr::Remove(l, _) | ListExpr::FirstHalf(l) | ListExpr::SecondHalf(l) => l.root(),
        }
    }

    /// True if a first-half or second-half node occurs on the path from
    /// the root to the variable. Halves inside removal positions (as in
    /// `q \ [|q[-]|]`) do not shrink the list and are not counted.
    pub fn contains_halving(&self) -> bool {
        match self {
            ListExpr::Var(_) => false,
            ListExpr::FirstHalf(_) | ListExpr::SecondHalf(_) => true,
            ListExpr::Remove(l, _) => l.contains_halving(),
        }
    }
}

/// `l[i]`: the i-th qubit of a list.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitExpr {
    pub list: ListExpr,
    pub index: Index,
}

impl QubitExpr {
    pub fn new(list: ListExpr, index: IntExpr) -> QubitExpr {
        QubitExpr {
            list,
            index: Index::At(index),
        }
    }

    /// `q[k]` for a variable `q` and a literal `k`.
    pub fn at(var: &str, k: u64) -> QubitExpr {
        QubitExpr::new(ListExpr::var(var), IntExpr::Const(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateName {
    Ph,
    Ry,
    Not,
}

impl GateName {
    pub fn keyword(self) -> &'static str {
        match self {
            GateName::Ph => "Ph",
            GateName::Ry => "RY",
            GateName::Not => "NOT",
        }
    }

    pub fn from_keyword(word: &str) -> Option<GateName> {
        match word {
            "Ph" => Some(GateName::Ph),
            "RY" => Some(GateName::Ry),
            "NOT" => Some(GateName::Not),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Body of an angle function.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleExpr {
    Param,
    Lit(f64),
    Pi,
    Neg(Box<AngleExpr>),
    Bin(Box<AngleExpr>, ArithOp, Box<AngleExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AngleError {
    #[error("division by zero in angle function")]
    DivisionByZero,
    #[error("angle function produced a non-finite value")]
    NonFinite,
}

impl AngleExpr {
    pub fn eval(&self, x: f64) -> Result<f64, AngleError> {
        let v = match self {
            AngleExpr::Param => x,
            AngleExpr::Lit(v) => *v,
            AngleExpr::Pi => PI,
            AngleExpr::Neg(e) => -e.eval(x)?,
            AngleExpr::Bin(l, op, r) => {
                let a = l.eval(x)?;
                let b = r.eval(x)?;
                match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                    ArithOp::Div => {
                        if b == 0.0 {
                            return Err(AngleError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(AngleError::NonFinite)
        }
    }
}

/// `lam x. e`, a map from integers to angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleFn {
    pub param: Ident,
    pub body: AngleExpr,
}

impl AngleFn {
    pub fn new(param: &str, body: AngleExpr) -> AngleFn {
        AngleFn {
            param: param.to_string(),
            body,
        }
    }

    pub fn constant(value: f64) -> AngleFn {
        AngleFn::new("x", AngleExpr::Lit(value))
    }

    /// Evaluates at `n` and reduces modulo 2π.
    pub fn eval(&self, n: i64) -> Result<f64, AngleError> {
        Ok(reduce_angle(self.body.eval(n as f64)?))
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let tau = 2.0 * PI;
    let r = theta.rem_euclid(tau);
    if r >= tau {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Skip,
    Apply {
        target: QubitExpr,
        gate: GateName,
        angle: Option<AngleFn>,
        arg: Option<IntExpr>,
    },
    /// Two or more statements, never directly nested.
    Seq(Vec<Stmt>),
    If {
        cond: BoolExpr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    /// `qcase c1, ..., ck of { b -> S_b }` with `2^k` arms indexed by the
    /// bitstring `b` read with `c1` as the most significant bit. Core form
    /// has exactly one control.
    QCase {
        controls: Vec<QubitExpr>,
        arms: Vec<Stmt>,
    },
    Call {
        proc: Ident,
        args: Vec<ListExpr>,
    },
    Cnot(QubitExpr, QubitExpr),
    Swap(QubitExpr, QubitExpr),
    Toffoli(QubitExpr, QubitExpr, QubitExpr),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("call to `{proc}` passes arguments that share variable `{var}`")]
    OverlappingArguments { proc: String, var: String },
    #[error("qcase on {controls} qubit(s) needs {expected} arms, got {got}")]
    ArmCount {
        controls: usize,
        expected: usize,
        got: usize,
    },
    #[error("procedure `{0}` is declared more than once")]
    DuplicateProcedure(String),
    #[error("procedure `{proc}` has parameter `{param}` twice")]
    DuplicateParameter { proc: String, param: String },
    #[error("variable `{var}` is not in scope in {scope}")]
    UnboundVariable { var: String, scope: String },
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Stmt {
        Stmt {
            kind,
            span: Span::default(),
        }
    }

    pub fn with_span(kind: StmtKind, span: Span) -> Stmt {
        Stmt { kind, span }
    }

    pub fn skip() -> Stmt {
        Stmt::new(StmtKind::Skip)
    }

    pub fn apply(target: QubitExpr, gate: GateName, angle: Option<AngleFn>, arg: Option<IntExpr>) -> Stmt {
        Stmt::new(StmtKind::Apply {
            target,
            gate,
            angle,
            arg,
        })
    }

    pub fn not(target: QubitExpr) -> Stmt {
        Stmt::apply(target, GateName::Not, None, None)
    }

    /// Builds a sequence, flattening nested sequences. A single statement
    /// is returned as is and an empty list becomes `skip`.
    pub fn seq(stmts: Vec<Stmt>) -> Stmt {
        let mut flat = Vec::with_capacity(stmts.len());
        for s in stmts {
            match s.kind {
                StmtKind::Seq(inner) => flat.extend(inner),
                _ => flat.push(s),
            }
        }
        match flat.len() {
            0 => Stmt::skip(),
            1 => flat.pop().unwrap(),
            _ => {
                let span = flat[0].span.to(flat[flat.len() - 1].span);
                Stmt::with_span(StmtKind::Seq(flat), span)
            }
        }
    }

    pub fn if_then_else(cond: BoolExpr, then_branch: Stmt, else_branch: Stmt) -> Stmt {
        Stmt::new(StmtKind::If {
            cond,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        })
    }

    pub fn qcase(control: QubitExpr, zero: Stmt, one: Stmt) -> Stmt {
        Stmt::new(StmtKind::QCase {
            controls: vec![control],
            arms: vec![zero, one],
        })
    }

    pub fn qcase_multi(controls: Vec<QubitExpr>, arms: Vec<Stmt>) -> Result<Stmt, AstError> {
        let expected = 1usize << controls.len();
        if controls.is_empty() || arms.len() != expected {
            return Err(AstError::ArmCount {
                controls: controls.len(),
                expected,
                got: arms.len(),
            });
        }
        Ok(Stmt::new(StmtKind::QCase { controls, arms }))
    }

    /// Builds a call, rejecting arguments that share a variable.
    pub fn call(proc: &str, args: Vec<ListExpr>) -> Result<Stmt, AstError> {
        if let Some(var) = overlapping_argument(&args) {
            return Err(AstError::OverlappingArguments {
                proc: proc.to_string(),
                var,
            });
        }
        Ok(Stmt::new(StmtKind::Call {
            proc: proc.to_string(),
            args,
        }))
    }

    /// Visits this statement and every nested statement, outside-in and
    /// left to right.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Stmt)) {
        visit(self);
        match &self.kind {
            StmtKind::Seq(items) => items.iter().for_each(|s| s.walk(visit)),
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(visit);
                else_branch.walk(visit);
            }
            StmtKind::QCase { arms, .. } => arms.iter().for_each(|s| s.walk(visit)),
            _ => {}
        }
    }
}

/// The first variable shared by two arguments of a call, if any.
pub fn overlapping_argument(args: &[ListExpr]) -> Option<String> {
    let sets: Vec<BTreeSet<Ident>> = args.iter().map(VarsOf::vars).collect();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if let Some(v) = sets[i].intersection(&sets[j]).next() {
                return Some(v.clone());
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcDecl {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub body: Stmt,
    pub span: Span,
}

impl ProcDecl {
    pub fn new(name: &str, params: &[&str], body: Stmt) -> ProcDecl {
        ProcDecl {
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            body,
            span: Span::default(),
        }
    }
}

/// `D :: S` together with the ordered set of free qubit-list variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub decls: Vec<ProcDecl>,
    pub main: Stmt,
    /// Var(P) in its fixed order; this order decides the wire layout.
    pub vars: Vec<Ident>,
}

impl Program {
    /// Builds a program with `vars` inferred from `main` in order of first
    /// occurrence, checking the structural invariants.
    pub fn new(decls: Vec<ProcDecl>, main: Stmt) -> Result<Program, AstError> {
        let vars = ordered_vars(&main);
        Program::with_vars(decls, main, vars)
    }

    pub fn with_vars(decls: Vec<ProcDecl>, main: Stmt, vars: Vec<Ident>) -> Result<Program, AstError> {
        let mut names = BTreeSet::new();
        for d in &decls {
            if !names.insert(d.name.as_str()) {
                return Err(AstError::DuplicateProcedure(d.name.clone()));
            }
            let mut params = BTreeSet::new();
            for p in &d.params {
                if !params.insert(p.as_str()) {
                    return Err(AstError::DuplicateParameter {
                        proc: d.name.clone(),
                        param: p.clone(),
                    });
                }
            }
            if let Some(v) = d.body.vars().into_iter().find(|v| !params.contains(v.as_str())) {
                return Err(AstError::UnboundVariable {
                    var: v,
                    scope: format!("procedure `{}`", d.name),
                });
            }
        }
        if let Some(v) = main.vars().into_iter().find(|v| !vars.contains(v)) {
            return Err(AstError::UnboundVariable {
                var: v,
                scope: "the main statement".to_string(),
            });
        }
        let program = Program { decls, main, vars };
        let mut overlap = None;
        program.for_each_stmt(&mut |s| {
            if let StmtKind::Call { proc, args } = &s.kind {
                if overlap.is_none() {
                    if let Some(var) = overlapping_argument(args) {
                        overlap = Some(AstError::OverlappingArguments {
                            proc: proc.clone(),
                            var,
                        });
                    }
                }
            }
        });
        match overlap {
            Some(e) => Err(e),
            None => Ok(program),
        }
    }

    pub fn decl(&self, name: &str) -> Option<&ProcDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    fn for_each_stmt<'a>(&'a self, visit: &mut dyn FnMut(&'a Stmt)) {
        for d in &self.decls {
            d.body.walk(visit);
        }
        self.main.walk(visit);
    }

    /// True if the program uses only the core grammar.
    pub fn is_core(&self) -> bool {
        let mut core = true;
        self.for_each_stmt(&mut |s| core &= stmt_is_core_shallow(s));
        core
    }
}

/// Var(t): the qubit-list variables occurring syntactically in `t`.
pub trait VarsOf {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>);

    fn vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }
}

impl VarsOf for IntExpr {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            IntExpr::Var(_) | IntExpr::Const(_) => {}
            IntExpr::Offset(e, _, _) | IntExpr::Half(e) => e.collect_vars(out),
            IntExpr::Size(l) => l.collect_vars(out),
        }
    }
}

impl VarsOf for BoolExpr {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            BoolExpr::Cmp(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BoolExpr::Not(a) => a.collect_vars(out),
            BoolExpr::Lit(_) => {}
        }
    }
}

impl VarsOf for Index {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        if let Index::At(e) = self {
            e.collect_vars(out);
        }
    }
}

impl VarsOf for ListExpr {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            ListExpr::Var(name) => {
                out.insert(name.clone());
            }
            ListExpr::Remove(l, idx) => {
                l.collect_vars(out);
                idx.iter().for_each(|i| i.collect_vars(out));
            }
            ListExpr::FirstHalf(l) | ListExpr::SecondHalf(l) => l.collect_vars(out),
        }
    }
}

impl VarsOf for QubitExpr {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        self.list.collect_vars(out);
        self.index.collect_vars(out);
    }
}

impl VarsOf for Stmt {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match &self.kind {
            StmtKind::Skip => {}
            StmtKind::Apply { target, arg, .. } => {
                target.collect_vars(out);
                if let Some(a) = arg {
                    a.collect_vars(out);
                }
            }
            StmtKind::Seq(items) => items.iter().for_each(|s| s.collect_vars(out)),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.collect_vars(out);
                then_branch.collect_vars(out);
                else_branch.collect_vars(out);
            }
            StmtKind::QCase { controls, arms } => {
                controls.iter().for_each(|c| c.collect_vars(out));
                arms.iter().for_each(|s| s.collect_vars(out));
            }
            StmtKind::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
            StmtKind::Cnot(a, b) | StmtKind::Swap(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            StmtKind::Toffoli(a, b, c) => {
                a.collect_vars(out);
                b.collect_vars(out);
                c.collect_vars(out);
            }
        }
    }
}

impl VarsOf for ProcDecl {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        self.body.collect_vars(out);
    }
}

impl VarsOf for Program {
    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        out.extend(self.vars.iter().cloned());
    }
}

/// Variables of `s` in order of first occurrence.
pub fn ordered_vars(s: &Stmt) -> Vec<Ident> {
    fn push_list(l: &ListExpr, out: &mut Vec<Ident>) {
        match l {
            ListExpr::Var(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            ListExpr::Remove(inner, idx) => {
                push_list(inner, out);
                for i in idx {
                    if let Index::At(e) = i {
                        push_int(e, out);
                    }
                }
            }
            ListExpr::FirstHalf(inner) | ListExpr::SecondHalf(inner) => push_list(inner, out),
        }
    }
    fn push_int(e: &IntExpr, out: &mut Vec<Ident>) {
        match e {
            IntExpr::Var(_) | IntExpr::Const(_) => {}
            IntExpr::Offset(e, _, _) | IntExpr::Half(e) => push_int(e, out),
            IntExpr::Size(l) => push_list(l, out),
        }
    }
    fn push_bool(b: &BoolExpr, out: &mut Vec<Ident>) {
        match b {
            BoolExpr::Cmp(x, _, y) => {
                push_int(x, out);
                push_int(y, out);
            }
            BoolExpr::And(x, y) | BoolExpr::Or(x, y) => {
                push_bool(x, out);
                push_bool(y, out);
            }
            BoolExpr::Not(x) => push_bool(x, out),
            BoolExpr::Lit(_) => {}
        }
    }
    fn push_qubit(q: &QubitExpr, out: &mut Vec<Ident>) {
        push_list(&q.list, out);
        if let Index::At(e) = &q.index {
            push_int(e, out);
        }
    }
    let mut out = Vec::new();
    s.walk(&mut |s| match &s.kind {
        StmtKind::Apply { target, arg, .. } => {
            push_qubit(target, &mut out);
            if let Some(a) = arg {
                push_int(a, &mut out);
            }
        }
        StmtKind::If { cond, .. } => push_bool(cond, &mut out),
        StmtKind::QCase { controls, .. } => controls.iter().for_each(|c| push_qubit(c, &mut out)),
        StmtKind::Call { args, .. } => args.iter().for_each(|a| push_list(a, &mut out)),
        StmtKind::Cnot(a, b) | StmtKind::Swap(a, b) => {
            push_qubit(a, &mut out);
            push_qubit(b, &mut out);
        }
        StmtKind::Toffoli(a, b, c) => {
            push_qubit(a, &mut out);
            push_qubit(b, &mut out);
            push_qubit(c, &mut out);
        }
        StmtKind::Skip | StmtKind::Seq(_) => {}
    });
    out
}

fn stmt_is_core_shallow(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Cnot(..) | StmtKind::Swap(..) | StmtKind::Toffoli(..) => false,
        StmtKind::QCase { controls, arms } => {
            controls.len() == 1 && arms.len() == 2 && qubit_is_core(&controls[0])
        }
        StmtKind::Apply { target, arg, .. } => qubit_is_core(target) && arg.as_ref().is_none_or(int_is_core),
        StmtKind::If { cond, .. } => bool_is_core(cond),
        StmtKind::Call { args, .. } => args.iter().all(list_is_core),
        StmtKind::Skip | StmtKind::Seq(_) => true,
    }
}

fn qubit_is_core(q: &QubitExpr) -> bool {
    list_is_core(&q.list)
        && match &q.index {
            Index::At(e) => int_is_core(e),
            Index::FromEnd(_) => false,
        }
}

fn list_is_core(l: &ListExpr) -> bool {
    match l {
        ListExpr::Var(_) => true,
        ListExpr::FirstHalf(inner) | ListExpr::SecondHalf(inner) => list_is_core(inner),
        ListExpr::Remove(inner, idx) => {
            list_is_core(inner)
                && !idx.is_empty()
                && idx.iter().all(|i| matches!(i, Index::At(e) if int_is_core(e)))
                && (idx.len() == 1 || !statically_orderable(idx))
        }
    }
}

fn int_is_core(e: &IntExpr) -> bool {
    match e {
        IntExpr::Var(_) | IntExpr::Const(_) => true,
        IntExpr::Offset(e, _, _) | IntExpr::Half(e) => int_is_core(e),
        IntExpr::Size(l) => list_is_core(l),
    }
}

fn bool_is_core(b: &BoolExpr) -> bool {
    match b {
        BoolExpr::Cmp(x, _, y) => int_is_core(x) && int_is_core(y),
        BoolExpr::And(x, y) | BoolExpr::Or(x, y) => bool_is_core(x) && bool_is_core(y),
        BoolExpr::Not(x) => bool_is_core(x),
        BoolExpr::Lit(_) => true,
    }
}

/// Removal positions whose order is known without evaluating them: all
/// literals or all end-relative.
fn statically_orderable(idx: &[Index]) -> bool {
    idx.iter().all(|i| matches!(i, Index::At(IntExpr::Const(_))))
        || idx.iter().all(|i| matches!(i, Index::FromEnd(_)))
}

// ---------------------------------------------------------------------------
// Desugaring

pub fn desugar_program(p: &Program) -> Program {
    Program {
        decls: p
            .decls
            .iter()
            .map(|d| ProcDecl {
                name: d.name.clone(),
                params: d.params.clone(),
                body: desugar_stmt(&d.body),
                span: d.span,
            })
            .collect(),
        main: desugar_stmt(&p.main),
        vars: p.vars.clone(),
    }
}

pub fn desugar_stmt(s: &Stmt) -> Stmt {
    let span = s.span;
    let kind = match &s.kind {
        StmtKind::Skip => StmtKind::Skip,
        StmtKind::Apply {
            target,
            gate,
            angle,
            arg,
        } => StmtKind::Apply {
            target: desugar_qubit(target),
            gate: *gate,
            angle: angle.clone(),
            arg: arg.as_ref().map(desugar_int),
        },
        StmtKind::Seq(items) => return Stmt::seq(items.iter().map(desugar_stmt).collect()),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => StmtKind::If {
            cond: desugar_bool(cond),
            then_branch: Box::new(desugar_stmt(then_branch)),
            else_branch: Box::new(desugar_stmt(else_branch)),
        },
        StmtKind::QCase { controls, arms } => return desugar_qcase(controls, arms, span),
        StmtKind::Call { proc, args } => StmtKind::Call {
            proc: proc.clone(),
            args: args.iter().map(desugar_list).collect(),
        },
        StmtKind::Cnot(a, b) => return cnot(desugar_qubit(a), desugar_qubit(b), span),
        StmtKind::Swap(a, b) => {
            let (a, b) = (desugar_qubit(a), desugar_qubit(b));
            return Stmt::seq(vec![
                cnot(a.clone(), b.clone(), span),
                cnot(b.clone(), a.clone(), span),
                cnot(a, b, span),
            ]);
        }
        StmtKind::Toffoli(a, b, c) => {
            let inner = cnot(desugar_qubit(b), desugar_qubit(c), span);
            StmtKind::QCase {
                controls: vec![desugar_qubit(a)],
                arms: vec![Stmt::with_span(StmtKind::Skip, span), inner],
            }
        }
    };
    Stmt::with_span(kind, span)
}

fn cnot(control: QubitExpr, target: QubitExpr, span: Span) -> Stmt {
    Stmt::with_span(
        StmtKind::QCase {
            controls: vec![control],
            arms: vec![
                Stmt::with_span(StmtKind::Skip, span),
                Stmt::with_span(
                    StmtKind::Apply {
                        target,
                        gate: GateName::Not,
                        angle: None,
                        arg: None,
                    },
                    span,
                ),
            ],
        },
        span,
    )
}

fn desugar_qcase(controls: &[QubitExpr], arms: &[Stmt], span: Span) -> Stmt {
    if controls.len() <= 1 {
        return Stmt::with_span(
            StmtKind::QCase {
                controls: controls.iter().map(desugar_qubit).collect(),
                arms: arms.iter().map(desugar_stmt).collect(),
            },
            span,
        );
    }
    let half = arms.len() / 2;
    let zero = desugar_qcase(&controls[1..], &arms[..half], span);
    let one = desugar_qcase(&controls[1..], &arms[half..], span);
    Stmt::with_span(
        StmtKind::QCase {
            controls: vec![desugar_qubit(&controls[0])],
            arms: vec![zero, one],
        },
        span,
    )
}

fn desugar_qubit(q: &QubitExpr) -> QubitExpr {
    let list = desugar_list(&q.list);
    let index = Index::At(desugar_index(&q.index, &list));
    QubitExpr { list, index }
}

/// `-n` relative to `base` becomes `|base| - n + 1`.
fn desugar_index(i: &Index, base: &ListExpr) -> IntExpr {
    match i {
        Index::At(e) => desugar_int(e),
        Index::FromEnd(n) => IntExpr::Offset(
            Box::new(IntExpr::Offset(Box::new(IntExpr::Size(Box::new(base.clone()))), Sign::Minus, *n)),
            Sign::Plus,
            1,
        ),
    }
}

fn desugar_list(l: &ListExpr) -> ListExpr {
    match l {
        ListExpr::Var(name) => ListExpr::Var(name.clone()),
        ListExpr::FirstHalf(inner) => ListExpr::FirstHalf(Box::new(desugar_list(inner))),
        ListExpr::SecondHalf(inner) => ListExpr::SecondHalf(Box::new(desugar_list(inner))),
        ListExpr::Remove(inner, idx) => {
            let base = desugar_list(inner);
            if idx.len() == 1 || !statically_orderable(idx) {
                let idx = idx.iter().map(|i| Index::At(desugar_index(i, &base))).collect();
                return ListExpr::Remove(Box::new(base), idx);
            }
            // All positions refer to the original list, so removing them
            // largest first keeps the remaining positions valid.
            let mut keyed: Vec<(i128, &Index)> = idx
                .iter()
                .map(|i| match i {
                    Index::At(IntExpr::Const(k)) => (*k as i128, i),
                    Index::FromEnd(n) => (-(*n as i128), i),
                    Index::At(_) => unreachable!("orderable indices are literals"),
                })
                .collect();
            keyed.sort_by(|a, b| b.0.cmp(&a.0));
            keyed.dedup_by(|a, b| a.0 == b.0);
            let mut out = base.clone();
            for (_, i) in keyed {
                out = ListExpr::Remove(Box::new(out), vec![Index::At(desugar_index(i, &base))]);
            }
            out
        }
    }
}

fn desugar_int(e: &IntExpr) -> IntExpr {
    match e {
        IntExpr::Var(_) | IntExpr::Const(_) => e.clone(),
        IntExpr::Offset(inner, sign, k) => IntExpr::Offset(Box::new(desugar_int(inner)), *sign, *k),
        IntExpr::Half(inner) => IntExpr::Half(Box::new(desugar_int(inner))),
        IntExpr::Size(l) => IntExpr::Size(Box::new(desugar_list(l))),
    }
}

fn desugar_bool(b: &BoolExpr) -> BoolExpr {
    match b {
        BoolExpr::Cmp(x, op, y) => BoolExpr::Cmp(desugar_int(x), *op, desugar_int(y)),
        BoolExpr::And(x, y) => BoolExpr::And(Box::new(desugar_bool(x)), Box::new(desugar_bool(y))),
        BoolExpr::Or(x, y) => BoolExpr::Or(Box::new(desugar_bool(x)), Box::new(desugar_bool(y))),
        BoolExpr::Not(x) => BoolExpr::Not(Box::new(desugar_bool(x))),
        BoolExpr::Lit(v) => BoolExpr::Lit(*v),
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}
