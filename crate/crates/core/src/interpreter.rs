//! Big-step interpreter over a quantum state, with the step meter and
//! error (⊥) reporting.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{check_well_formed, Diagnostic, Severity};
use crate::ast::*;
use crate::state::{mat_ph, mat_ry, mat_x, Control, Mat2, Matrix, NullState, QuantumState, Statevector};

pub const DEFAULT_RECURSION_LIMIT: usize = 256;

/// Largest register for which [`extract_unitary`] builds a matrix.
pub const MAX_UNITARY_WIRES: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("program is not well-formed: {}", .0.first().map(|d| d.message.as_str()).unwrap_or("?"))]
    IllFormed(Vec<Diagnostic>),
    #[error("no size given for qubit list `{0}`")]
    MissingSize(String),
    #[error("size given for `{0}`, which is not a variable of the program")]
    UnknownVariable(String),
    #[error("state has {got} wires but the program needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("recursion deeper than {0} calls")]
    RecursionLimit(usize),
    #[error("angle function of {gate} failed at {arg}: {source}")]
    Angle {
        gate: &'static str,
        arg: i64,
        source: AngleError,
    },
    #[error("{gate} has no angle function")]
    MissingAngle { gate: &'static str },
    #[error("the program errs on basis state {0}")]
    BottomOnBasis(usize),
    #[error("{0} wires is too many to build a unitary (limit {MAX_UNITARY_WIRES})")]
    TooLarge(usize),
}

/// `|q̄|` for every variable, in the program's variable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lengths {
    vars: Vec<Ident>,
    lens: Vec<usize>,
    offsets: Vec<usize>,
}

impl Lengths {
    /// Builds lengths for `vars`, requiring exactly one size per variable.
    pub fn new(vars: &[Ident], sizes: &BTreeMap<String, usize>) -> Result<Lengths, RunError> {
        if let Some(extra) = sizes.keys().find(|k| !vars.contains(k)) {
            return Err(RunError::UnknownVariable(extra.clone()));
        }
        let mut lens = Vec::with_capacity(vars.len());
        for v in vars {
            lens.push(*sizes.get(v).ok_or_else(|| RunError::MissingSize(v.clone()))?);
        }
        let mut offsets = Vec::with_capacity(vars.len());
        let mut acc = 0;
        for l in &lens {
            offsets.push(acc);
            acc += l;
        }
        Ok(Lengths {
            vars: vars.to_vec(),
            lens,
            offsets,
        })
    }

    pub fn of(p: &Program, sizes: &[(&str, usize)]) -> Result<Lengths, RunError> {
        let map = sizes.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Lengths::new(&p.vars, &map)
    }

    pub fn vars(&self) -> &[Ident] {
        &self.vars
    }

    /// `|P|`
    pub fn total(&self) -> usize {
        self.lens.iter().sum()
    }

    pub fn len(&self, var: usize) -> usize {
        self.lens[var]
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// `|P|_{<q̄}`
    pub fn offset(&self, var: usize) -> usize {
        self.offsets[var]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// 0-based wire of pointer `ptr` (1-based) of variable `var`.
    pub fn wire(&self, var: usize, ptr: usize) -> usize {
        self.offsets[var] + ptr - 1
    }

    pub fn sizes(&self) -> BTreeMap<String, usize> {
        self.vars.iter().cloned().zip(self.lens.iter().copied()).collect()
    }
}

/// A list value: pointers into one program variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListVal {
    pub var: usize,
    pub ptrs: Vec<usize>,
}

/// Binding of names to list values (the `f` of a configuration, seen
/// through the parameter names of the current procedure).
#[derive(Debug, Clone)]
pub struct Scope<'a> {
    names: &'a [Ident],
    vals: Vec<ListVal>,
}

impl<'a> Scope<'a> {
    pub fn new(names: &'a [Ident], vals: Vec<ListVal>) -> Scope<'a> {
        assert_eq!(names.len(), vals.len());
        Scope { names, vals }
    }

    /// The initial binding `q̄ ↦ [1, …, |q̄|]`.
    pub fn initial(lengths: &'a Lengths) -> Scope<'a> {
        let vals = (0..lengths.vars.len())
            .map(|v| ListVal {
                var: v,
                ptrs: (1..=lengths.len(v)).collect(),
            })
            .collect();
        Scope {
            names: &lengths.vars,
            vals,
        }
    }

    fn lookup(&self, name: &str) -> Option<&ListVal> {
        self.names.iter().position(|n| n == name).map(|i| &self.vals[i])
    }
}

pub fn eval_int(e: &IntExpr, scope: &Scope) -> i64 {
    match e {
        // Rejected by the well-formedness check before execution.
        IntExpr::Var(_) => 0,
        IntExpr::Const(k) => i64::try_from(*k).unwrap_or(i64::MAX),
        IntExpr::Offset(inner, sign, k) => {
            let v = eval_int(inner, scope);
            let k = i64::try_from(*k).unwrap_or(i64::MAX);
            match sign {
                Sign::Plus => v.saturating_add(k),
                Sign::Minus => v.saturating_sub(k),
            }
        }
        IntExpr::Half(inner) => eval_int(inner, scope).saturating_add(1).div_euclid(2),
        IntExpr::Size(l) => eval_list(l, scope).map_or(0, |v| v.ptrs.len() as i64),
    }
}

/// Evaluates a list expression. `None` only for names missing from the
/// scope; the empty list is the in-band error value.
pub fn eval_list(l: &ListExpr, scope: &Scope) -> Option<ListVal> {
    match l {
        ListExpr::Var(name) => scope.lookup(name).cloned(),
        ListExpr::Remove(inner, idx) => {
            let mut v = eval_list(inner, scope)?;
            let m = v.ptrs.len() as i64;
            let mut ks: Vec<i64> = idx
                .iter()
                .map(|i| match i {
                    Index::At(e) => eval_int(e, scope),
                    Index::FromEnd(n) => m - *n as i64 + 1,
                })
                .collect();
            if ks.iter().any(|k| *k < 1 || *k > m) {
                v.ptrs.clear();
                return Some(v);
            }
            ks.sort_unstable_by(|a, b| b.cmp(a));
            ks.dedup();
            for k in ks {
                v.ptrs.remove((k - 1) as usize);
            }
            Some(v)
        }
        ListExpr::FirstHalf(inner) | ListExpr::SecondHalf(inner) => {
            let mut v = eval_list(inner, scope)?;
            let m = v.ptrs.len();
            if m <= 1 {
                v.ptrs.clear();
            } else if matches!(l, ListExpr::FirstHalf(_)) {
                v.ptrs.truncate(m.div_ceil(2));
            } else {
                v.ptrs.drain(..m.div_ceil(2));
            }
            Some(v)
        }
    }
}

/// Evaluates a qubit expression to `(variable, pointer)`; pointer 0 marks
/// an out-of-range index.
pub fn eval_qubit(q: &QubitExpr, scope: &Scope) -> (usize, usize) {
    let Some(v) = eval_list(&q.list, scope) else {
        return (0, 0);
    };
    let m = v.ptrs.len() as i64;
    let k = match &q.index {
        Index::At(e) => eval_int(e, scope),
        Index::FromEnd(n) => m - *n as i64 + 1,
    };
    if k >= 1 && k <= m {
        (v.var, v.ptrs[(k - 1) as usize])
    } else {
        (v.var, 0)
    }
}

pub fn eval_bool(b: &BoolExpr, scope: &Scope) -> bool {
    match b {
        BoolExpr::Cmp(x, op, y) => op.holds(eval_int(x, scope), eval_int(y, scope)),
        BoolExpr::And(x, y) => eval_bool(x, scope) && eval_bool(y, scope),
        BoolExpr::Or(x, y) => eval_bool(x, scope) || eval_bool(y, scope),
        BoolExpr::Not(x) => !eval_bool(x, scope),
        BoolExpr::Lit(v) => *v,
    }
}

pub fn gate_matrix(gate: GateName, angle: Option<&AngleFn>, arg: i64) -> Result<Mat2, RunError> {
    let theta = |g: Option<&AngleFn>| -> Result<f64, RunError> {
        let g = g.ok_or(RunError::MissingAngle { gate: gate.keyword() })?;
        g.eval(arg).map_err(|source| RunError::Angle {
            gate: gate.keyword(),
            arg,
            source,
        })
    };
    Ok(match gate {
        GateName::Not => mat_x(),
        GateName::Ph => mat_ph(theta(angle)?),
        GateName::Ry => mat_ry(theta(angle)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<S> {
    pub status: Status,
    pub state: S,
    /// The step meter: call-rule applications, summed over sequences and
    /// maxed over qcase branches.
    pub steps: u64,
    /// Where and why the first error occurred.
    pub reason: Option<String>,
}

/// The accessible-pointer sets `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    sets: Vec<Vec<bool>>,
}

impl Access {
    pub fn full(lengths: &Lengths) -> Access {
        Access {
            sets: (0..lengths.vars.len())
                .map(|v| {
                    let mut s = vec![true; lengths.len(v) + 1];
                    s[0] = false;
                    s
                })
                .collect(),
        }
    }

    pub fn contains(&self, var: usize, ptr: usize) -> bool {
        self.sets.get(var).and_then(|s| s.get(ptr)).copied().unwrap_or(false)
    }

    fn set(&mut self, var: usize, ptr: usize, value: bool) {
        self.sets[var][ptr] = value;
    }
}

struct Machine<'a> {
    program: &'a Program,
    lengths: &'a Lengths,
    access: Access,
    controls: Vec<Control>,
    depth: usize,
    limit: usize,
    reason: Option<String>,
}

impl<'a> Machine<'a> {
    fn new(program: &'a Program, lengths: &'a Lengths, limit: usize) -> Machine<'a> {
        Machine {
            program,
            lengths,
            access: Access::full(lengths),
            controls: Vec::new(),
            depth: 0,
            limit,
            reason: None,
        }
    }

    fn bottom(&mut self, s: &Stmt, why: &str) -> Status {
        if self.reason.is_none() {
            self.reason = Some(format!("{}: {}", s.span, why));
        }
        Status::Bottom
    }

    /// `checked` means the statement is already known to end in ⊤.
    fn exec<B: QuantumState>(
        &mut self,
        s: &Stmt,
        scope: &Scope,
        state: &mut B,
        checked: bool,
    ) -> Result<(Status, u64), RunError> {
        match &s.kind {
            StmtKind::Skip => Ok((Status::Top, 0)),
            StmtKind::Apply {
                target,
                gate,
                angle,
                arg,
            } => {
                let (var, ptr) = eval_qubit(target, scope);
                if ptr == 0 {
                    return Ok((self.bottom(s, "qubit index out of range"), 0));
                }
                if !self.access.contains(var, ptr) {
                    return Ok((self.bottom(s, "qubit is not accessible here"), 0));
                }
                let n = arg.as_ref().map_or(0, |a| eval_int(a, scope));
                let m = gate_matrix(*gate, angle.as_ref(), n)?;
                state.apply_1q(self.lengths.wire(var, ptr), &m, &self.controls);
                Ok((Status::Top, 0))
            }
            StmtKind::Seq(items) => {
                let mut total = 0;
                for item in items {
                    let (st, m) = self.exec(item, scope, state, checked)?;
                    total += m;
                    if st == Status::Bottom {
                        return Ok((Status::Bottom, total));
                    }
                }
                Ok((Status::Top, total))
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let branch = if eval_bool(cond, scope) { then_branch } else { else_branch };
                self.exec(branch, scope, state, checked)
            }
            StmtKind::QCase { controls, arms } => {
                let (var, ptr) = eval_qubit(&controls[0], scope);
                if ptr == 0 {
                    return Ok((self.bottom(s, "qcase control index out of range"), 0));
                }
                if !self.access.contains(var, ptr) {
                    return Ok((self.bottom(s, "qcase control is not accessible here"), 0));
                }
                if !B::CLASSICAL && !checked {
                    let mut null = NullState {
                        wires: state.num_wires(),
                    };
                    let (st, m) = self.exec(s, scope, &mut null, false)?;
                    if st == Status::Bottom {
                        return Ok((st, m));
                    }
                }
                let wire = self.lengths.wire(var, ptr);
                self.access.set(var, ptr, false);
                let mut status = Status::Top;
                let mut meter = 0;
                for (k, arm) in arms.iter().enumerate() {
                    self.controls.push(Control { wire, neg: k == 0 });
                    let r = self.exec(arm, scope, state, true);
                    self.controls.pop();
                    let (st, m) = match r {
                        Ok(v) => v,
                        Err(e) => {
                            self.access.set(var, ptr, true);
                            return Err(e);
                        }
                    };
                    meter = meter.max(m);
                    if st == Status::Bottom {
                        status = Status::Bottom;
                    }
                }
                self.access.set(var, ptr, true);
                Ok((status, meter))
            }
            StmtKind::Call { proc, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match eval_list(a, scope) {
                        Some(v) if !v.ptrs.is_empty() => vals.push(v),
                        _ => return Ok((Status::Top, 1)),
                    }
                }
                let decl = self
                    .program
                    .decl(proc)
                    .expect("calls are resolved by the well-formedness check");
                if self.depth >= self.limit {
                    return Err(RunError::RecursionLimit(self.limit));
                }
                self.depth += 1;
                let inner = Scope::new(&decl.params, vals);
                let r = self.exec(&decl.body, &inner, state, checked);
                self.depth -= 1;
                let (st, m) = r?;
                Ok((st, m + 1))
            }
            StmtKind::Cnot(..) | StmtKind::Swap(..) | StmtKind::Toffoli(..) => {
                unreachable!("statements are desugared before execution")
            }
        }
    }
}

/// A program prepared for execution at fixed sizes.
#[derive(Debug, Clone)]
pub struct Interpreter {
    program: Program,
    lengths: Lengths,
    limit: usize,
}

impl Interpreter {
    pub fn new(p: &Program, lengths: &Lengths) -> Result<Interpreter, RunError> {
        let program = desugar_program(p);
        let diags: Vec<Diagnostic> =
            check_well_formed(&program).into_iter().filter(|d| d.severity == Severity::Error).collect();
        if !diags.is_empty() {
            return Err(RunError::IllFormed(diags));
        }
        if lengths.vars() != program.vars.as_slice() {
            let missing = program.vars.iter().find(|v| lengths.index_of(v).is_none());
            return Err(match missing {
                Some(v) => RunError::MissingSize(v.clone()),
                None => RunError::UnknownVariable(
                    lengths.vars().iter().find(|v| !program.vars.contains(v)).cloned().unwrap_or_default(),
                ),
            });
        }
        Ok(Interpreter {
            program,
            lengths: lengths.clone(),
            limit: DEFAULT_RECURSION_LIMIT,
        })
    }

    pub fn with_recursion_limit(mut self, limit: usize) -> Interpreter {
        self.limit = limit;
        self
    }

    pub fn lengths(&self) -> &Lengths {
        &self.lengths
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Runs only the classical part: status and meter, no amplitudes.
    pub fn meter(&self) -> Result<Outcome<()>, RunError> {
        let mut m = Machine::new(&self.program, &self.lengths, self.limit);
        let scope = Scope::initial(&self.lengths);
        let mut null = NullState {
            wires: self.lengths.total(),
        };
        let (status, steps) = m.exec(&self.program.main, &scope, &mut null, false)?;
        Ok(Outcome {
            status,
            state: (),
            steps,
            reason: m.reason,
        })
    }

    pub fn run<S: QuantumState>(&self, mut state: S) -> Result<Outcome<S>, RunError> {
        let expected = self.lengths.total();
        if state.num_wires() != expected {
            return Err(RunError::DimensionMismatch {
                expected,
                got: state.num_wires(),
            });
        }
        let classical = self.meter()?;
        let mut m = Machine::new(&self.program, &self.lengths, self.limit);
        let scope = Scope::initial(&self.lengths);
        let checked = classical.status == Status::Top;
        let (status, steps) = m.exec(&self.program.main, &scope, &mut state, checked)?;
        debug_assert_eq!(status, classical.status);
        Ok(Outcome {
            status,
            state,
            steps,
            reason: classical.reason,
        })
    }
}

/// Runs `p` from the initial configuration on `input`.
pub fn run_program(p: &Program, lengths: &Lengths, input: Statevector) -> Result<Outcome<Statevector>, RunError> {
    Interpreter::new(p, lengths)?.run(input)
}

/// Executes one statement against an explicit scope and access set.
pub fn exec_statement<S: QuantumState>(
    s: &Stmt,
    program: &Program,
    lengths: &Lengths,
    scope: &Scope,
    state: &mut S,
) -> Result<(Status, u64), RunError> {
    let mut m = Machine::new(program, lengths, DEFAULT_RECURSION_LIMIT);
    let s = desugar_stmt(s);
    m.exec(&s, scope, state, false)
}

/// The matrix of `⟦P⟧`, one column per basis state.
pub fn extract_unitary(p: &Program, lengths: &Lengths) -> Result<Matrix, RunError> {
    let interp = Interpreter::new(p, lengths)?;
    interp.unitary()
}

impl Interpreter {
    pub fn unitary(&self) -> Result<Matrix, RunError> {
        let n = self.lengths.total();
        if n > MAX_UNITARY_WIRES {
            return Err(RunError::TooLarge(n));
        }
        if self.meter()?.status == Status::Bottom {
            return Err(RunError::BottomOnBasis(0));
        }
        let cols: Result<Vec<Vec<_>>, RunError> = (0..1usize << n)
            .into_par_iter()
            .map(|k| {
                let out = self.run(Statevector::basis(n, k))?;
                if out.status == Status::Bottom {
                    return Err(RunError::BottomOnBasis(k));
                }
                Ok(out.state.into_amplitudes())
            })
            .collect();
        Ok(Matrix::from_columns(&cols?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_statement};
    use crate::state::{SparseState, C64, ONE};

    fn corpus(name: &str) -> Program {
        let src = std::fs::read_to_string(format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
        parse_program(&src).unwrap()
    }

    fn q145() -> (Vec<Ident>, Vec<ListVal>) {
        (
            vec!["q".to_string()],
            vec![ListVal {
                var: 0,
                ptrs: vec![1, 4, 5],
            }],
        )
    }

    fn list(src: &str) -> ListExpr {
        match parse_statement(&format!("call f({src});")).unwrap().kind {
            StmtKind::Call { mut args, .. } => args.remove(0),
            _ => unreachable!(),
        }
    }

    fn qubit(src: &str) -> QubitExpr {
        match parse_statement(&format!("{src} *= NOT;")).unwrap().kind {
            StmtKind::Apply { target, .. } => target,
            _ => unreachable!(),
        }
    }

    #[test]
    fn expression_goldens() {
        let (names, vals) = q145();
        let scope = Scope::new(&names, vals);
        assert_eq!(eval_qubit(&qubit("q[2]"), &scope).1, 4);
        assert_eq!(eval_qubit(&qubit("q[4]"), &scope).1, 0);
        assert_eq!(eval_list(&list("q \\ [4]"), &scope).unwrap().ptrs, Vec::<usize>::new());
        assert_eq!(eval_list(&list("q \\ [3]"), &scope).unwrap().ptrs, vec![1, 4]);
        assert_eq!(eval_int(&IntExpr::Size(Box::new(list("q"))), &scope), 3);
        assert_eq!(eval_int(&IntExpr::Size(Box::new(list("q \\ [4]"))), &scope), 0);
        assert_eq!(eval_int(&IntExpr::Half(Box::new(IntExpr::Const(5))), &scope), 3);
    }

    #[test]
    fn halves_of_five_and_of_singletons() {
        let names = vec!["q".to_string()];
        let scope = Scope::new(&names, vec![ListVal { var: 0, ptrs: vec![1, 2, 3, 4, 5] }]);
        assert_eq!(eval_list(&list("q[-]"), &scope).unwrap().ptrs, vec![1, 2, 3]);
        assert_eq!(eval_list(&list("q[+]"), &scope).unwrap().ptrs, vec![4, 5]);
        let one = Scope::new(&names, vec![ListVal { var: 0, ptrs: vec![7] }]);
        assert!(eval_list(&list("q[-]"), &one).unwrap().ptrs.is_empty());
        assert!(eval_list(&list("q[+]"), &one).unwrap().ptrs.is_empty());
        let empty = Scope::new(&names, vec![ListVal { var: 0, ptrs: vec![] }]);
        assert_eq!(eval_qubit(&qubit("q[1]"), &empty).1, 0);
    }

    #[test]
    fn simultaneous_multi_removal() {
        let (names, vals) = q145();
        let scope = Scope::new(&names, vals);
        assert_eq!(eval_list(&list("q \\ [1, -1]"), &scope).unwrap().ptrs, vec![4]);
        assert_eq!(eval_list(&list("q \\ [2, 2]"), &scope).unwrap().ptrs, vec![1, 5]);
        assert!(eval_list(&list("q \\ [1, 9]"), &scope).unwrap().ptrs.is_empty());
    }

    #[test]
    fn booleans() {
        let (names, vals) = q145();
        let scope = Scope::new(&names, vals);
        let b = |src: &str| match parse_statement(&format!("if {src} then {{ skip; }} else {{ skip; }}")).unwrap().kind {
            StmtKind::If { cond, .. } => eval_bool(&cond, &scope),
            _ => unreachable!(),
        };
        assert!(b("|q| > 1"));
        assert!(!b("(2 >= 3) && true"));
        let single = Scope::new(&names, vec![ListVal { var: 0, ptrs: vec![7] }]);
        let cond = BoolExpr::Cmp(IntExpr::Size(Box::new(ListExpr::var("q"))), CmpOp::Gt, IntExpr::Const(1));
        assert!(!eval_bool(&cond, &single));
    }

    #[test]
    fn gate_matrices() {
        assert_eq!(gate_matrix(GateName::Not, None, 0).unwrap(), mat_x());
        let g = crate::parser::parse_statement("q[1] *= Ph[lam x. 2*pi/x](4);").unwrap();
        let StmtKind::Apply { angle, .. } = g.kind else { unreachable!() };
        let m = gate_matrix(GateName::Ph, angle.as_ref(), 4).unwrap();
        assert!((m[1][1] - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(m[0][0], ONE);
        let id = gate_matrix(GateName::Ry, Some(&AngleFn::constant(0.0)), 3).unwrap();
        assert_eq!(id, [[ONE, C64::new(-0.0, 0.0)], [C64::new(0.0, 0.0), ONE]]);
        assert!(matches!(gate_matrix(GateName::Ph, angle.as_ref(), 0), Err(RunError::Angle { .. })));
    }

    #[test]
    fn skip_is_identity_with_zero_meter() {
        let p = parse_program(":: skip;").unwrap();
        let l = Lengths::of(&p, &[]).unwrap();
        let out = run_program(&p, &l, Statevector::zero(0)).unwrap();
        assert_eq!(out.status, Status::Top);
        assert_eq!(out.steps, 0);
        assert_eq!(out.state, Statevector::zero(0));
    }

    #[test]
    fn qcase_on_its_own_target_is_bottom() {
        let p = parse_program(":: q[2] *= NOT; qcase q[1] of { 0 -> q[1] *= NOT;, 1 -> skip; }").unwrap();
        let l = Lengths::of(&p, &[("q", 2)]).unwrap();
        let out = run_program(&p, &l, Statevector::zero(2)).unwrap();
        assert_eq!(out.status, Status::Bottom);
        // The first statement ran; the failing qcase left the state alone.
        assert_eq!(out.state, Statevector::basis(2, 0b01));
        assert!(out.reason.unwrap().contains("not accessible"));
    }

    #[test]
    fn search_finds_a_one_at_size_six() {
        let p = corpus("search.plp");
        let l = Lengths::of(&p, &[("q1", 6), ("q2", 1)]).unwrap();
        // x = "012" encoded 00 01 10, q2 = 0.
        let input = SparseState::from_bits(&[false, false, false, true, true, false, false]);
        let out = Interpreter::new(&p, &l).unwrap().run(input).unwrap();
        assert_eq!(out.status, Status::Top);
        assert_eq!(out.state.amplitude(0b0001101), ONE);
    }

    #[test]
    fn search_meter_is_logarithmic() {
        let p = corpus("search.plp");
        let steps: Vec<u64> = [2, 6, 14, 30]
            .iter()
            .map(|&n| {
                let l = Lengths::of(&p, &[("q1", n), ("q2", 1)]).unwrap();
                Interpreter::new(&p, &l).unwrap().meter().unwrap().steps
            })
            .collect();
        assert_eq!(steps, vec![2, 3, 4, 5]);
    }

    #[test]
    fn call_with_empty_argument_costs_one() {
        let p = parse_program("decl f(a) { a[1] *= NOT; } :: call f(q \\ [1]);").unwrap();
        let l = Lengths::of(&p, &[("q", 1)]).unwrap();
        let out = run_program(&p, &l, Statevector::zero(1)).unwrap();
        assert_eq!((out.status, out.steps), (Status::Top, 1));
        assert_eq!(out.state, Statevector::zero(1));
    }

    #[test]
    fn literal_sqlog_errs_and_corrected_one_does_not() {
        let lit = corpus("sqlog-literal.plp");
        let l = Lengths::of(&lit, &[("q1", 4), ("q2", 2)]).unwrap();
        assert_eq!(Interpreter::new(&lit, &l).unwrap().meter().unwrap().status, Status::Bottom);
        let fixed = corpus("sqlog.plp");
        for n in 0..=16 {
            for m in 0..=3 {
                let l = Lengths::of(&fixed, &[("q1", n), ("q2", m)]).unwrap();
                assert_eq!(Interpreter::new(&fixed, &l).unwrap().meter().unwrap().status, Status::Top, "{n} {m}");
            }
        }
    }

    #[test]
    fn unitary_of_not() {
        let p = parse_program(":: q[1] *= NOT;").unwrap();
        let l = Lengths::of(&p, &[("q", 1)]).unwrap();
        let u = extract_unitary(&p, &l).unwrap();
        assert_eq!(u.data, vec![crate::state::ZERO, ONE, ONE, crate::state::ZERO]);
    }

    #[test]
    fn search_unitary_is_a_permutation() {
        let p = corpus("search.plp");
        let l = Lengths::of(&p, &[("q1", 2), ("q2", 1)]).unwrap();
        let u = extract_unitary(&p, &l).unwrap();
        assert_eq!(u.dim, 8);
        assert!(u.unitarity_error() < 1e-9);
        for c in 0..8 {
            let ones = (0..8).filter(|&r| (u.get(r, c) - ONE).norm() < 1e-12).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn wire_order_follows_variable_order() {
        let p = parse_program(":: b[1] *= NOT; a[2] *= NOT;").unwrap();
        assert_eq!(p.vars, vec!["b", "a"]);
        let l = Lengths::of(&p, &[("a", 2), ("b", 1)]).unwrap();
        let out = run_program(&p, &l, Statevector::zero(3)).unwrap();
        assert_eq!(out.state, Statevector::basis(3, 0b101));
    }

    #[test]
    fn runaway_recursion_is_cut_off() {
        let p = parse_program("decl f(q) { call f(q); } :: call f(q);").unwrap();
        let l = Lengths::of(&p, &[("q", 1)]).unwrap();
        assert_eq!(
            Interpreter::new(&p, &l).unwrap().meter().unwrap_err(),
            RunError::RecursionLimit(DEFAULT_RECURSION_LIMIT)
        );
    }

    #[test]
    fn sizes_must_match_variables() {
        let p = corpus("search.plp");
        assert!(matches!(Lengths::of(&p, &[("q1", 2)]), Err(RunError::MissingSize(_))));
        assert!(matches!(
            Lengths::of(&p, &[("q1", 2), ("q2", 1), ("z", 1)]),
            Err(RunError::UnknownVariable(_))
        ));
    }
}
