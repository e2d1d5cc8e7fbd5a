//! Well-formedness, the call relation, the halving check, width and the
//! PLP verdict.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub span: Span,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(span: Span, message: String) -> Diagnostic {
        Diagnostic {
            span,
            severity: Severity::Error,
            message,
        }
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {}: {}",
            file, self.span.line, self.span.column, self.severity, self.message
        )
    }
}

/// All call sites of a statement, outside-in, left to right.
fn calls_in(s: &Stmt) -> Vec<&Stmt> {
    let mut out = Vec::new();
    s.walk(&mut |t| {
        if matches!(t.kind, StmtKind::Call { .. }) {
            out.push(t);
        }
    });
    out
}

pub fn check_well_formed(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen = BTreeSet::new();
    for d in &p.decls {
        if !seen.insert(d.name.as_str()) {
            diags.push(Diagnostic::error(d.span, format!("procedure `{}` is declared more than once", d.name)));
        }
        let mut params = BTreeSet::new();
        for q in &d.params {
            if !params.insert(q.as_str()) {
                diags.push(Diagnostic::error(
                    d.span,
                    format!("procedure `{}` has parameter `{}` twice", d.name, q),
                ));
            }
        }
        let scope: Vec<String> = d.params.clone();
        check_stmt(p, &d.body, &scope, &format!("procedure `{}`", d.name), &mut diags);
    }
    check_stmt(p, &p.main, &p.vars, "the main statement", &mut diags);
    diags
}

fn check_stmt(p: &Program, body: &Stmt, scope: &[String], where_: &str, diags: &mut Vec<Diagnostic>) {
    body.walk(&mut |s| {
        let own = shallow_vars(s);
        for v in own {
            if !scope.contains(&v) {
                diags.push(Diagnostic::error(
                    s.span,
                    format!("undeclared qubit variable `{v}` in {where_}"),
                ));
            }
        }
        for x in shallow_int_vars(s) {
            diags.push(Diagnostic::error(s.span, format!("unbound integer variable `{x}` in {where_}")));
        }
        match &s.kind {
            StmtKind::Call { proc, args } => {
                match p.decl(proc) {
                    None => diags.push(Diagnostic::error(s.span, format!("call to undeclared procedure `{proc}`"))),
                    Some(d) if d.params.len() != args.len() => diags.push(Diagnostic::error(
                        s.span,
                        format!(
                            "procedure `{}` expects {} argument(s), got {}",
                            proc,
                            d.params.len(),
                            args.len()
                        ),
                    )),
                    Some(_) => {}
                }
                if let Some(v) = overlapping_argument(args) {
                    diags.push(Diagnostic::error(
                        s.span,
                        format!("overlapping call arguments: `{v}` is passed twice to `{proc}`"),
                    ));
                }
            }
            StmtKind::Apply { gate, angle, .. } => match (gate, angle) {
                (GateName::Not, Some(_)) => diags.push(Diagnostic {
                    span: s.span,
                    severity: Severity::Warning,
                    message: "angle function on NOT is ignored".to_string(),
                }),
                (GateName::Ph | GateName::Ry, None) => diags.push(Diagnostic::error(
                    s.span,
                    format!("gate {} needs an angle function", gate.keyword()),
                )),
                _ => {}
            },
            StmtKind::QCase { controls, arms } if controls.is_empty() || arms.len() != 1 << controls.len() => {
                diags.push(Diagnostic::error(s.span, "malformed qcase".to_string()));
            }
            _ => {}
        }
    });
}

/// Qubit-list variables used directly by `s`, excluding nested statements.
fn shallow_vars(s: &Stmt) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    match &s.kind {
        StmtKind::Apply { target, arg, .. } => {
            target.collect_vars(&mut out);
            if let Some(a) = arg {
                a.collect_vars(&mut out);
            }
        }
        StmtKind::If { cond, .. } => cond.collect_vars(&mut out),
        StmtKind::QCase { controls, .. } => controls.iter().for_each(|c| c.collect_vars(&mut out)),
        StmtKind::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(&mut out)),
        StmtKind::Cnot(a, b) | StmtKind::Swap(a, b) => {
            a.collect_vars(&mut out);
            b.collect_vars(&mut out);
        }
        StmtKind::Toffoli(a, b, c) => {
            a.collect_vars(&mut out);
            b.collect_vars(&mut out);
            c.collect_vars(&mut out);
        }
        StmtKind::Skip | StmtKind::Seq(_) => {}
    }
    out
}

fn shallow_int_vars(s: &Stmt) -> BTreeSet<Ident> {
    fn int(e: &IntExpr, out: &mut BTreeSet<Ident>) {
        match e {
            IntExpr::Var(x) => {
                out.insert(x.clone());
            }
            IntExpr::Const(_) => {}
            IntExpr::Offset(e, _, _) | IntExpr::Half(e) => int(e, out),
            IntExpr::Size(l) => list(l, out),
        }
    }
    fn list(l: &ListExpr, out: &mut BTreeSet<Ident>) {
        match l {
            ListExpr::Var(_) => {}
            ListExpr::FirstHalf(l) | ListExpr::SecondHalf(l) => list(l, out),
            ListExpr::Remove(l, idx) => {
                list(l, out);
                for i in idx {
                    if let Index::At(e) = i {
                        int(e, out);
                    }
                }
            }
        }
    }
    fn qubit(q: &QubitExpr, out: &mut BTreeSet<Ident>) {
        list(&q.list, out);
        if let Index::At(e) = &q.index {
            int(e, out);
        }
    }
    fn boolean(b: &BoolExpr, out: &mut BTreeSet<Ident>) {
        match b {
            BoolExpr::Cmp(x, _, y) => {
                int(x, out);
                int(y, out);
            }
            BoolExpr::And(x, y) | BoolExpr::Or(x, y) => {
                boolean(x, out);
                boolean(y, out);
            }
            BoolExpr::Not(x) => boolean(x, out),
            BoolExpr::Lit(_) => {}
        }
    }
    let mut out = BTreeSet::new();
    match &s.kind {
        StmtKind::Apply { target, arg, .. } => {
            qubit(target, &mut out);
            if let Some(a) = arg {
                int(a, &mut out);
            }
        }
        StmtKind::If { cond, .. } => boolean(cond, &mut out),
        StmtKind::QCase { controls, .. } => controls.iter().for_each(|c| qubit(c, &mut out)),
        StmtKind::Call { args, .. } => args.iter().for_each(|a| list(a, &mut out)),
        StmtKind::Cnot(a, b) | StmtKind::Swap(a, b) => {
            qubit(a, &mut out);
            qubit(b, &mut out);
        }
        StmtKind::Toffoli(a, b, c) => {
            qubit(a, &mut out);
            qubit(b, &mut out);
            qubit(c, &mut out);
        }
        StmtKind::Skip | StmtKind::Seq(_) => {}
    }
    out
}

/// The call relation of a program and the relations derived from it.
#[derive(Debug, Clone)]
pub struct CallGraph {
    pub names: Vec<Ident>,
    index: BTreeMap<Ident, usize>,
    /// `edges[i]` holds the callees of procedure `i`.
    pub edges: Vec<BTreeSet<usize>>,
    /// `reach[i][j]` iff `i ⪰ j` (a non-empty call path from i to j).
    reach: Vec<Vec<bool>>,
    /// Strongly connected components in reverse topological order.
    pub sccs: Vec<Vec<usize>>,
}

impl CallGraph {
    pub fn new(p: &Program) -> CallGraph {
        let mut names = Vec::new();
        let mut index = BTreeMap::new();
        for d in &p.decls {
            if !index.contains_key(&d.name) {
                index.insert(d.name.clone(), names.len());
                names.push(d.name.clone());
            }
        }
        let n = names.len();
        let mut edges = vec![BTreeSet::new(); n];
        for d in &p.decls {
            let from = index[&d.name];
            for c in calls_in(&d.body) {
                if let StmtKind::Call { proc, .. } = &c.kind {
                    if let Some(&to) = index.get(proc) {
                        edges[from].insert(to);
                    }
                }
            }
        }
        let mut reach = vec![vec![false; n]; n];
        for (start, row) in reach.iter_mut().enumerate() {
            let mut queue: VecDeque<usize> = edges[start].iter().copied().collect();
            while let Some(v) = queue.pop_front() {
                if !row[v] {
                    row[v] = true;
                    queue.extend(edges[v].iter().copied());
                }
            }
        }
        let mut g = DiGraph::<usize, ()>::new();
        let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
        for (i, es) in edges.iter().enumerate() {
            for &j in es {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        let sccs = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|x| g[x]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        CallGraph {
            names,
            index,
            edges,
            reach,
            sccs,
        }
    }

    fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// `a → b`
    pub fn calls(&self, a: &str, b: &str) -> bool {
        matches!((self.id(a), self.id(b)), (Some(i), Some(j)) if self.edges[i].contains(&j))
    }

    /// `a ⪰ b`
    pub fn reaches(&self, a: &str, b: &str) -> bool {
        matches!((self.id(a), self.id(b)), (Some(i), Some(j)) if self.reach[i][j])
    }

    /// `a ∼ b`
    pub fn equivalent(&self, a: &str, b: &str) -> bool {
        self.reaches(a, b) && self.reaches(b, a)
    }

    /// `a ≻ b`
    pub fn above(&self, a: &str, b: &str) -> bool {
        self.reaches(a, b) && !self.equivalent(a, b)
    }

    pub fn is_recursive(&self, proc: &str) -> bool {
        self.equivalent(proc, proc)
    }

    pub fn edge_list(&self) -> Vec<(Ident, Ident)> {
        let mut out = Vec::new();
        for (i, es) in self.edges.iter().enumerate() {
            for &j in es {
                out.push((self.names[i].clone(), self.names[j].clone()));
            }
        }
        out
    }
}

/// Checks that every (mutually) recursive call passes a halved argument.
pub fn check_half(p: &Program, cg: &CallGraph) -> (bool, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    for d in &p.decls {
        for c in calls_in(&d.body) {
            if let StmtKind::Call { proc, args } = &c.kind {
                if cg.equivalent(&d.name, proc) && !args.iter().any(ListExpr::contains_halving) {
                    diags.push(Diagnostic::error(
                        c.span,
                        format!(
                            "recursive call from `{}` to `{}` does not halve any argument",
                            d.name, proc
                        ),
                    ));
                }
            }
        }
    }
    (diags.is_empty(), diags)
}

/// Width of `s` relative to procedure `proc`.
pub fn stmt_width(proc: &str, s: &Stmt, cg: &CallGraph) -> u64 {
    match &s.kind {
        StmtKind::Skip | StmtKind::Apply { .. } => 0,
        StmtKind::Cnot(..) | StmtKind::Swap(..) | StmtKind::Toffoli(..) => 0,
        StmtKind::Seq(items) => items.iter().map(|t| stmt_width(proc, t, cg)).sum(),
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => stmt_width(proc, then_branch, cg).max(stmt_width(proc, else_branch, cg)),
        StmtKind::QCase { arms, .. } => arms.iter().map(|t| stmt_width(proc, t, cg)).max().unwrap_or(0),
        StmtKind::Call { proc: callee, .. } => u64::from(cg.equivalent(proc, callee)),
    }
}

/// Program width and the width of every procedure.
pub fn width(p: &Program, cg: &CallGraph) -> (u64, BTreeMap<Ident, u64>) {
    let per: BTreeMap<Ident, u64> = p
        .decls
        .iter()
        .map(|d| (d.name.clone(), stmt_width(&d.name, &d.body, cg)))
        .collect();
    (per.values().copied().max().unwrap_or(0), per)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub well_formed: bool,
    pub is_half: bool,
    pub width: u64,
    pub proc_widths: BTreeMap<Ident, u64>,
    pub is_plp: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl Verdict {
    pub fn summary(&self) -> String {
        if !self.well_formed {
            return "PLP: no (not well-formed)".to_string();
        }
        format!(
            "PLP: {} (HALF {}, width {})",
            if self.is_plp { "yes" } else { "no" },
            if self.is_half { "ok" } else { "fails" },
            self.width
        )
    }
}

/// Runs every check on the desugared form of `p`.
pub fn verdict(p: &Program) -> Verdict {
    let p = desugar_program(p);
    let mut diagnostics = check_well_formed(&p);
    let well_formed = !diagnostics.iter().any(|d| d.severity == Severity::Error);
    let cg = CallGraph::new(&p);
    let (is_half, half_diags) = check_half(&p, &cg);
    diagnostics.extend(half_diags);
    let (w, proc_widths) = width(&p, &cg);
    if w > 1 {
        for (name, pw) in &proc_widths {
            if *pw > 1 {
                let span = p.decl(name).map(|d| d.span).unwrap_or_default();
                diagnostics.push(Diagnostic::error(
                    span,
                    format!("procedure `{name}` has width {pw}; at most one recursive call per branch is allowed"),
                ));
            }
        }
    }
    Verdict {
        well_formed,
        is_half,
        width: w,
        proc_widths,
        is_plp: well_formed && is_half && w <= 1,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn corpus(name: &str) -> Program {
        let src = std::fs::read_to_string(format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
        parse_program(&src).unwrap()
    }

    #[test]
    fn search_is_well_formed_and_plp() {
        let p = desugar_program(&corpus("search.plp"));
        assert!(check_well_formed(&p).is_empty());
        let v = verdict(&p);
        assert!(v.is_plp);
        assert_eq!(v.summary(), "PLP: yes (HALF ok, width 1)");
    }

    #[test]
    fn sqlog_relations() {
        let p = corpus("sqlog.plp");
        let cg = CallGraph::new(&p);
        let mut edges = cg.edge_list();
        edges.sort();
        let expected: Vec<(Ident, Ident)> =
            [("f", "f"), ("f", "g"), ("g", "g")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert_eq!(edges, expected);
        assert!(cg.equivalent("f", "f") && cg.equivalent("g", "g"));
        assert!(cg.above("f", "g") && !cg.above("g", "f"));
        let (w, per) = width(&p, &cg);
        assert_eq!(w, 1);
        assert_eq!(per["f"], 1);
        assert_eq!(per["g"], 1);
        assert!(check_half(&p, &cg).0);
    }

    #[test]
    fn mutual_recursion_forms_one_component() {
        let p = parse_program("decl f(q) { call g(q[-]); }, decl g(q) { call f(q[+]); } :: call f(q);").unwrap();
        let cg = CallGraph::new(&p);
        assert!(cg.equivalent("f", "g"));
        assert!(cg.sccs.iter().any(|c| c.len() == 2));
    }

    #[test]
    fn no_calls_means_no_recursion() {
        let p = parse_program("decl f(q) { q[1] *= NOT; } :: call f(q);").unwrap();
        let cg = CallGraph::new(&p);
        assert!(cg.edge_list().is_empty());
        assert!(!cg.is_recursive("f"));
        assert_eq!(width(&p, &cg).0, 0);
    }

    #[test]
    fn non_halving_mutant_is_reported_once() {
        let p = corpus("search-nonhalving.plp");
        let cg = CallGraph::new(&p);
        let (ok, diags) = check_half(&p, &cg);
        assert!(!ok);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("does not halve"));
    }

    #[test]
    fn width_two_mutant() {
        let v = verdict(&corpus("width2.plp"));
        assert!(!v.is_plp);
        assert_eq!(v.width, 2);
        assert!(v.is_half);
    }

    #[test]
    fn undeclared_variable_in_main() {
        let mut p = parse_program(":: q[1] *= NOT;").unwrap();
        p.vars.clear();
        let d = check_well_formed(&p);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("undeclared qubit variable"));
    }

    #[test]
    fn overlapping_arguments_are_diagnosed() {
        let p = parse_program("decl f(a, b) { skip; } :: call f(q, q);").unwrap();
        let d = check_well_formed(&p);
        assert!(d.iter().any(|d| d.message.contains("overlapping call arguments")));
    }

    #[test]
    fn unknown_procedure_and_integer_variables() {
        let p = parse_program("decl f(q) { call g(q); q[x] *= NOT; } :: call f(q);").unwrap();
        let d = check_well_formed(&p);
        assert!(d.iter().any(|d| d.message.contains("undeclared procedure `g`")));
        assert!(d.iter().any(|d| d.message.contains("unbound integer variable `x`")));
    }

    #[test]
    fn diagnostics_render_with_position() {
        let p = parse_program("decl f(a, b) { skip; } ::\n  call f(q, q);").unwrap();
        let d = check_well_formed(&p);
        assert!(d[0].render("x.plp").starts_with("x.plp:2:3: error: overlapping"));
    }
}
