//! Source-to-source inversion: `⟦invert(P)⟧ = ⟦P⟧†`.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::*;

const SUFFIX: &str = "_inv";

/// Name of the inverse of procedure `name`: `f` ↔ `f_inv`.
fn partner(name: &str) -> String {
    match name.strip_suffix(SUFFIX) {
        Some(base) if !base.is_empty() => base.to_string(),
        _ => format!("{name}{SUFFIX}"),
    }
}

/// Injective renaming of every declared procedure to its inverse.
fn renaming(p: &Program) -> BTreeMap<Ident, Ident> {
    let mut taken = BTreeSet::new();
    let mut map = BTreeMap::new();
    for d in &p.decls {
        let mut name = partner(&d.name);
        let mut k = 1;
        while taken.contains(&name) {
            name = format!("{}_{k}", partner(&d.name));
            k += 1;
        }
        taken.insert(name.clone());
        map.insert(d.name.clone(), name);
    }
    map
}

pub fn invert_program(p: &Program) -> Program {
    let names = renaming(p);
    Program {
        decls: p
            .decls
            .iter()
            .map(|d| ProcDecl {
                name: names[&d.name].clone(),
                params: d.params.clone(),
                body: invert_stmt(&d.body, &names),
                span: d.span,
            })
            .collect(),
        main: invert_stmt(&p.main, &names),
        vars: p.vars.clone(),
    }
}

/// Inverts a statement; calls are renamed through `names`, and calls to
/// procedures missing from it get the `_inv` partner name.
pub fn invert_stmt(s: &Stmt, names: &BTreeMap<Ident, Ident>) -> Stmt {
    let kind = match &s.kind {
        StmtKind::Skip => StmtKind::Skip,
        StmtKind::Apply {
            target,
            gate,
            angle,
            arg,
        } => StmtKind::Apply {
            target: target.clone(),
            gate: *gate,
            angle: angle.as_ref().map(|g| invert_angle(*gate, g)),
            arg: arg.clone(),
        },
        StmtKind::Seq(items) => StmtKind::Seq(items.iter().rev().map(|t| invert_stmt(t, names)).collect()),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => StmtKind::If {
            cond: cond.clone(),
            then_branch: Box::new(invert_stmt(then_branch, names)),
            else_branch: Box::new(invert_stmt(else_branch, names)),
        },
        StmtKind::QCase { controls, arms } => StmtKind::QCase {
            controls: controls.clone(),
            arms: arms.iter().map(|t| invert_stmt(t, names)).collect(),
        },
        StmtKind::Call { proc, args } => StmtKind::Call {
            proc: names.get(proc).cloned().unwrap_or_else(|| partner(proc)),
            args: args.clone(),
        },
        StmtKind::Cnot(..) | StmtKind::Swap(..) | StmtKind::Toffoli(..) => s.kind.clone(),
    };
    Stmt::with_span(kind, s.span)
}

fn two_pi() -> AngleExpr {
    AngleExpr::Bin(Box::new(AngleExpr::Lit(2.0)), ArithOp::Mul, Box::new(AngleExpr::Pi))
}

fn invert_angle(gate: GateName, g: &AngleFn) -> AngleFn {
    let body = match gate {
        GateName::Not => g.body.clone(),
        GateName::Ph => match &g.body {
            AngleExpr::Bin(l, ArithOp::Sub, r) if **l == two_pi() => (**r).clone(),
            e => AngleExpr::Bin(Box::new(two_pi()), ArithOp::Sub, Box::new(e.clone())),
        },
        GateName::Ry => match &g.body {
            AngleExpr::Neg(e) => (**e).clone(),
            e => AngleExpr::Neg(Box::new(e.clone())),
        },
    };
    AngleFn {
        param: g.param.clone(),
        body,
    }
}
