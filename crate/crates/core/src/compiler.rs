//! Compilation of a program at fixed input sizes into a [`Circuit`].
//!
//! Sizes and booleans are static, so each procedure body is unfolded into
//! a flat list of events: controlled gates and recursive call sites.
//! Non-recursive calls are inlined. Recursive sites with the same
//! `(procedure, argument sizes)` key that sit in orthogonal branches are
//! merged: one anchor ancilla records which site fires, a selector per
//! extra site drives a controlled permutation of its wires onto the first
//! site's wires, and the callee body is compiled once under the anchor.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::analysis::CallGraph;
use crate::ast::*;
use crate::circuit::{build_controlled_permutation, AncillaPool, Circuit, CircuitStats, Gate, GateKind, PermMode, WireLabel};
use crate::interpreter::{eval_bool, eval_int, eval_list, eval_qubit, Interpreter, Lengths, ListVal, RunError, Scope, Status};
use crate::state::Control;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("the program errs at these sizes: {0}")]
    Bottom(String),
}

/// A compiled circuit with the figures that are not visible in the gates.
#[derive(Debug, Clone, PartialEq)]
pub struct Compilation {
    pub circuit: Circuit,
    /// Most distinct merge keys along one chain of nested merged bodies.
    pub keychain: usize,
    /// The interpreter's step meter at the same sizes.
    pub meter: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileStats {
    pub size: usize,
    pub depth: usize,
    pub ancillas: usize,
    pub keychain: usize,
    pub meter: u64,
}

impl CompileStats {
    /// `n size depth ancillas keychain`
    pub fn tsv_row(&self, n: usize) -> String {
        format!("{n}\t{}\t{}\t{}\t{}", self.size, self.depth, self.ancillas, self.keychain)
    }
}

pub fn compile(p: &Program, lengths: &Lengths, mode: PermMode) -> Result<Circuit, CompileError> {
    compile_report(p, lengths, mode).map(|c| c.circuit)
}

pub fn stats(p: &Program, lengths: &Lengths, mode: PermMode) -> Result<CompileStats, CompileError> {
    let c = compile_report(p, lengths, mode)?;
    let CircuitStats { size, depth, ancillas } = c.circuit.stats();
    Ok(CompileStats {
        size,
        depth,
        ancillas,
        keychain: c.keychain,
        meter: c.meter,
    })
}

pub fn compile_report(p: &Program, lengths: &Lengths, mode: PermMode) -> Result<Compilation, CompileError> {
    let interp = Interpreter::new(p, lengths)?;
    let classical = interp.meter()?;
    if classical.status == Status::Bottom {
        return Err(CompileError::Bottom(classical.reason.unwrap_or_default()));
    }
    let program = interp.program();
    let mut labels = Vec::with_capacity(lengths.total());
    for (v, name) in lengths.vars().iter().enumerate() {
        for ptr in 1..=lengths.len(v) {
            labels.push(WireLabel::Input { var: name.clone(), ptr });
        }
    }
    let mut c = Compiler::new(program, lengths, mode);
    let scope = Scope::initial(lengths);
    let keychain = c.body(&program.main, &scope, &[], None, &mut Vec::new())?;
    let mut circuit = Circuit::new(labels);
    circuit.reserve_ancillas(c.pool.high_water());
    circuit.gates = c.gates;
    debug_assert!(circuit.validate().is_ok());
    Ok(Compilation {
        circuit,
        keychain,
        meter: classical.steps,
    })
}

type Key = (Ident, Vec<usize>);

#[derive(Debug, Clone)]
struct Site {
    key: Key,
    args: Vec<ListVal>,
    /// Global wires of the arguments, concatenated.
    wires: Vec<usize>,
    controls: Vec<Control>,
}

#[derive(Debug, Clone)]
enum Event {
    Gate(Gate),
    Site(Site),
}

impl Event {
    fn controls(&self) -> &[Control] {
        match self {
            Event::Gate(g) => &g.controls,
            Event::Site(s) => &s.controls,
        }
    }

    /// Wires possibly changed by the event.
    fn modified(&self) -> &[usize] {
        match self {
            Event::Gate(g) => &g.targets,
            Event::Site(s) => &s.wires,
        }
    }
}

fn orthogonal(a: &[Control], b: &[Control]) -> bool {
    a.iter().any(|c| b.contains(&c.complement()))
}

fn commute(a: &Event, b: &Event) -> bool {
    if orthogonal(a.controls(), b.controls()) {
        return true;
    }
    let touches = |e: &Event, w: usize| e.modified().contains(&w) || e.controls().iter().any(|c| c.wire == w);
    a.modified().iter().all(|w| !touches(b, *w)) && b.modified().iter().all(|w| !touches(a, *w))
}

struct Group {
    /// Event index of the first site; the merged block is emitted there.
    at: usize,
    sites: Vec<usize>,
}

struct Compiler<'a> {
    program: &'a Program,
    lengths: &'a Lengths,
    graph: CallGraph,
    mode: PermMode,
    pool: AncillaPool,
    gates: Vec<Gate>,
}

impl<'a> Compiler<'a> {
    fn new(program: &'a Program, lengths: &'a Lengths, mode: PermMode) -> Compiler<'a> {
        Compiler {
            program,
            lengths,
            graph: CallGraph::new(program),
            mode,
            pool: AncillaPool::new(lengths.total()),
            gates: Vec::new(),
        }
    }

    fn list_wires(&self, v: &ListVal) -> Vec<usize> {
        v.ptrs.iter().map(|p| self.lengths.wire(v.var, *p)).collect()
    }

    /// Unfolds `s` into events. `current` is the procedure whose body is
    /// being unfolded, `None` for the main statement.
    fn collect(
        &self,
        s: &'a Stmt,
        scope: &Scope,
        controls: &mut Vec<Control>,
        current: Option<&str>,
        out: &mut Vec<Event>,
    ) -> Result<(), CompileError> {
        match &s.kind {
            StmtKind::Skip => {}
            StmtKind::Apply {
                target,
                gate,
                angle,
                arg,
            } => {
                let (var, ptr) = eval_qubit(target, scope);
                debug_assert!(ptr != 0, "error-free programs only");
                let n = arg.as_ref().map_or(0, |a| eval_int(a, scope));
                let theta = || -> Result<f64, RunError> {
                    let g = angle.as_ref().ok_or(RunError::MissingAngle { gate: gate.keyword() })?;
                    g.eval(n).map_err(|source| RunError::Angle {
                        gate: gate.keyword(),
                        arg: n,
                        source,
                    })
                };
                let kind = match gate {
                    GateName::Not => GateKind::X,
                    GateName::Ph => GateKind::Ph(theta()?),
                    GateName::Ry => GateKind::Ry(theta()?),
                };
                out.push(Event::Gate(Gate {
                    kind,
                    targets: vec![self.lengths.wire(var, ptr)],
                    controls: controls.clone(),
                }));
            }
            StmtKind::Seq(items) => {
                for item in items {
                    self.collect(item, scope, controls, current, out)?;
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let branch = if eval_bool(cond, scope) { then_branch } else { else_branch };
                self.collect(branch, scope, controls, current, out)?;
            }
            StmtKind::QCase { controls: ctl, arms } => {
                let (var, ptr) = eval_qubit(&ctl[0], scope);
                debug_assert!(ptr != 0, "error-free programs only");
                let wire = self.lengths.wire(var, ptr);
                for (k, arm) in arms.iter().enumerate() {
                    controls.push(Control { wire, neg: k == 0 });
                    let r = self.collect(arm, scope, controls, current, out);
                    controls.pop();
                    r?;
                }
            }
            StmtKind::Call { proc, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match eval_list(a, scope) {
                        Some(v) if !v.ptrs.is_empty() => vals.push(v),
                        _ => return Ok(()),
                    }
                }
                let decl = self.program.decl(proc).expect("calls are resolved");
                let recursive = current.is_some_and(|c| self.graph.equivalent(c, proc));
                if recursive {
                    let wires = vals.iter().flat_map(|v| self.list_wires(v)).collect();
                    out.push(Event::Site(Site {
                        key: (proc.clone(), vals.iter().map(|v| v.ptrs.len()).collect()),
                        args: vals,
                        wires,
                        controls: controls.clone(),
                    }));
                } else {
                    let inner = Scope::new(&decl.params, vals);
                    self.collect(&decl.body, &inner, controls, Some(proc), out)?;
                }
            }
            StmtKind::Cnot(..) | StmtKind::Swap(..) | StmtKind::Toffoli(..) => {
                unreachable!("statements are desugared before compilation")
            }
        }
        Ok(())
    }

    /// Groups sites greedily, first fit. A site joins a group with its key
    /// when it is orthogonal to every member and hoisting it to the group's
    /// position only reorders it past events it commutes with.
    fn group(events: &[Event]) -> Vec<Group> {
        let mut groups: Vec<Group> = Vec::new();
        // Position each event is emitted at.
        let mut placed: Vec<usize> = (0..events.len()).collect();
        for (i, e) in events.iter().enumerate() {
            let Event::Site(s) = e else { continue };
            let fits = |g: &Group| {
                let Event::Site(first) = &events[g.at] else { unreachable!() };
                first.key == s.key
                    && g.sites.iter().all(|&j| orthogonal(&s.controls, events[j].controls()))
                    && (0..i)
                        .filter(|&j| !g.sites.contains(&j))
                        .filter(|&j| placed[j] > g.at)
                        .all(|j| commute(e, &events[j]))
            };
            match groups.iter().position(fits) {
                Some(k) => {
                    groups[k].sites.push(i);
                    placed[i] = groups[k].at;
                }
                None => groups.push(Group { at: i, sites: vec![i] }),
            }
        }
        groups
    }

    /// Compiles one body instance and returns the key-chain length below
    /// it; `path` holds the keys of the enclosing merged bodies.
    fn body(
        &mut self,
        s: &'a Stmt,
        scope: &Scope,
        controls: &[Control],
        current: Option<&str>,
        path: &mut Vec<Key>,
    ) -> Result<usize, CompileError> {
        let mut events = Vec::new();
        self.collect(s, scope, &mut controls.to_vec(), current, &mut events)?;
        let groups = Self::group(&events);
        let mut chain = path.len();
        let mut next = 0;
        for (i, e) in events.iter().enumerate() {
            match e {
                Event::Gate(g) => self.gates.push(g.clone()),
                Event::Site(_) => {
                    if next < groups.len() && groups[next].at == i {
                        let sites: Vec<&Site> = groups[next]
                            .sites
                            .iter()
                            .map(|&j| match &events[j] {
                                Event::Site(s) => s,
                                Event::Gate(_) => unreachable!(),
                            })
                            .collect();
                        chain = chain.max(self.block(&sites, path)?);
                        next += 1;
                    }
                }
            }
        }
        Ok(chain)
    }

    /// Emits one merged call block.
    fn block(&mut self, sites: &[&Site], path: &mut Vec<Key>) -> Result<usize, CompileError> {
        for (a, x) in sites.iter().enumerate() {
            for y in &sites[a + 1..] {
                assert!(orthogonal(&x.controls, &y.controls), "merged sites must be orthogonal");
            }
        }
        let canon = sites[0];
        let decl = self.program.decl(&canon.key.0).expect("calls are resolved");
        let fresh = !path.contains(&canon.key);
        if fresh {
            path.push(canon.key.clone());
        }
        let inner = Scope::new(&decl.params, canon.args.clone());
        let run_body = |c: &mut Self, controls: &[Control], path: &mut Vec<Key>| {
            c.body(&decl.body, &inner, controls, Some(&canon.key.0), path)
        };

        let chain = if sites.len() == 1 && canon.controls.is_empty() {
            run_body(self, &[], path)
        } else {
            let start = self.gates.len();
            let anchor = self.pool.alloc();
            for s in sites {
                self.gates.push(Gate::x(anchor, s.controls.clone()));
            }
            let mut selectors = Vec::new();
            let mut routing = Vec::new();
            for s in &sites[1..] {
                let sel = self.pool.alloc();
                self.gates.push(Gate::x(sel, s.controls.clone()));
                selectors.push(sel);
            }
            let prologue_end = self.gates.len();
            for (s, sel) in sites[1..].iter().zip(&selectors) {
                let (wires, perm) = routing_permutation(&s.wires, &canon.wires);
                let g = build_controlled_permutation(&wires, &perm, Control::pos(*sel), self.mode, &mut self.pool);
                self.gates.extend(g.iter().cloned());
                routing.push(g);
            }
            let r = run_body(self, &[Control::pos(anchor)], path);
            for g in routing.into_iter().rev() {
                self.gates.extend(g.into_iter().rev());
            }
            let prologue: Vec<Gate> = self.gates[start..prologue_end].to_vec();
            self.gates.extend(prologue.into_iter().rev());
            for sel in selectors.into_iter().rev() {
                self.pool.release(sel);
            }
            self.pool.release(anchor);
            r
        };
        if fresh {
            path.pop();
        }
        chain
    }
}

/// Permutation of `from ∪ to` (sorted) sending the content of `from[i]`
/// to `to[i]`; the remaining wires of `to` fill the vacated wires of
/// `from` in sorted order.
fn routing_permutation(from: &[usize], to: &[usize]) -> (Vec<usize>, Vec<usize>) {
    debug_assert_eq!(from.len(), to.len());
    let wires: Vec<usize> = from.iter().chain(to).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let pos = |w: usize| wires.binary_search(&w).expect("wire in union");
    let mut perm = vec![usize::MAX; wires.len()];
    for (f, t) in from.iter().zip(to) {
        perm[pos(*f)] = pos(*t);
    }
    let from_set: BTreeSet<usize> = from.iter().copied().collect();
    let to_set: BTreeSet<usize> = to.iter().copied().collect();
    for (src, dst) in to_set.difference(&from_set).zip(from_set.difference(&to_set)) {
        perm[pos(*src)] = pos(*dst);
    }
    debug_assert!(perm.iter().all(|p| *p != usize::MAX));
    (wires, perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::simulate_circuit;
    use crate::interpreter::run_program;
    use crate::parser::parse_program;
    use crate::state::Statevector;

    const SEARCH: &str = include_str!("../corpus/search.plp");
    const SQLOG: &str = include_str!("../corpus/sqlog.plp");

    fn events_of(src: &str, sizes: &[(&str, usize)]) -> Vec<Event> {
        let p = desugar_program(&parse_program(src).unwrap());
        let l = Lengths::of(&p, sizes).unwrap();
        let c = Compiler::new(&p, &l, PermMode::Compact);
        let mut out = Vec::new();
        let main = p.main.clone();
        c.collect(&main, &Scope::initial(&l), &mut vec![Control::pos(5)], None, &mut out).unwrap();
        out
    }

    #[test]
    fn apply_inherits_the_controls() {
        let ev = events_of(":: q[1] *= NOT;", &[("q", 2)]);
        assert_eq!(ev.len(), 1);
        let Event::Gate(g) = &ev[0] else { panic!() };
        assert_eq!(*g, Gate::x(0, vec![Control::pos(5)]));
    }

    #[test]
    fn static_if_keeps_one_branch() {
        let ev = events_of(":: if |q| > 1 then { q[1] *= NOT; } else { q[1] *= Ph[lam x. pi](0); }", &[("q", 1)]);
        assert_eq!(ev.len(), 1);
        let Event::Gate(g) = &ev[0] else { panic!() };
        assert!(matches!(g.kind, GateKind::Ph(_)));
    }

    #[test]
    fn qcase_arms_get_opposite_polarities() {
        let ev = events_of(":: qcase q[1] of { 0 -> q[2] *= NOT;, 1 -> q[2] *= NOT; }", &[("q", 2)]);
        let cs: Vec<_> = ev.iter().map(|e| e.controls().to_vec()).collect();
        assert_eq!(cs, vec![vec![Control::pos(5), Control::neg(0)], vec![Control::pos(5), Control::pos(0)]]);
    }

    #[test]
    fn straight_line_has_no_ancillas() {
        let p = parse_program(":: q[1] *= NOT; q[2] *= RY[lam x. x](1); CNOT(q[1], q[2])").unwrap();
        let l = Lengths::of(&p, &[("q", 2)]).unwrap();
        let c = compile(&p, &l, PermMode::Compact).unwrap();
        assert_eq!(c.size(), 3);
        assert_eq!(c.ancilla_wires, 0);
    }

    #[test]
    fn search_at_14_has_the_merged_shape() {
        let p = parse_program(SEARCH).unwrap();
        let l = Lengths::of(&p, &[("q1", 14), ("q2", 1)]).unwrap();
        let r = compile_report(&p, &l, PermMode::Compact).unwrap();
        let c = &r.circuit;
        let swaps = c.gates.iter().filter(|g| g.kind == GateKind::Swap).count();
        let onto_ancilla = c.gates.iter().filter(|g| g.kind == GateKind::X && g.targets[0] >= 15).count();
        let onto_q2 = c.gates.iter().filter(|g| g.kind == GateKind::X && g.targets[0] == 14).count();
        assert_eq!((c.ancilla_wires, swaps, onto_ancilla, onto_q2, c.size()), (4, 16, 12, 3, 31));
        assert_eq!(r.keychain, 2);
    }

    #[test]
    fn search_at_7_keeps_two_groups() {
        let p = desugar_program(&parse_program(SEARCH).unwrap());
        let l = Lengths::of(&p, &[("q1", 7), ("q2", 1)]).unwrap();
        let c = Compiler::new(&p, &l, PermMode::Compact);
        let mut ev = Vec::new();
        c.collect(&p.main, &Scope::initial(&l), &mut Vec::new(), None, &mut ev).unwrap();
        let groups = Compiler::group(&ev);
        assert_eq!(groups.len(), 2);
        let circuit = compile(&p, &l, PermMode::Compact).unwrap();
        assert!(circuit.gates.iter().all(|g| g.kind != GateKind::Swap));
    }

    #[test]
    fn single_site_gets_an_anchor_only() {
        let p = parse_program(SQLOG).unwrap();
        let l = Lengths::of(&p, &[("q1", 4), ("q2", 2)]).unwrap();
        let c = compile(&p, &l, PermMode::Compact).unwrap();
        assert!(c.gates.iter().all(|g| g.kind != GateKind::Swap));
        assert!(c.ancilla_wires >= 1);
    }

    #[test]
    fn search_circuit_matches_the_interpreter() {
        let p = parse_program(SEARCH).unwrap();
        for n in [2, 5, 6, 8] {
            let l = Lengths::of(&p, &[("q1", n), ("q2", 1)]).unwrap();
            for mode in [PermMode::Compact, PermMode::LogDepth] {
                let c = compile(&p, &l, mode).unwrap();
                for b in 0..1usize << (n + 1) {
                    let input = Statevector::basis(n + 1, b);
                    let want = run_program(&p, &l, input.clone()).unwrap().state;
                    let got = simulate_circuit(&c, &input).unwrap();
                    assert!(got.max_distance(&want) < 1e-9, "n={n} b={b:b} {mode:?}");
                }
            }
        }
    }

    #[test]
    fn erring_sizes_fail_to_compile() {
        let p = parse_program(include_str!("../corpus/sqlog-literal.plp")).unwrap();
        let l = Lengths::of(&p, &[("q1", 4), ("q2", 2)]).unwrap();
        assert!(matches!(compile(&p, &l, PermMode::Compact), Err(CompileError::Bottom(_))));
    }

    #[test]
    fn routing_fills_vacated_wires() {
        let (w, p) = routing_permutation(&[1, 2], &[2, 3]);
        assert_eq!(w, vec![1, 2, 3]);
        assert_eq!(p, vec![1, 2, 0]);
    }
}
