//! Seeded generator of random PLP programs for property tests.
//!
//! Programs have one or two procedures over the same parameters as the
//! main variables. Every recursive call halves its first argument and each
//! sequential path holds at most one recursive call, so most outputs are
//! in PLP; [`random_case`] filters for PLP and error-freeness anyway.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analysis::verdict;
use crate::ast::*;
use crate::interpreter::{Interpreter, Lengths, Status};

const PROCS: [&str; 2] = ["f", "g"];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    params: Vec<Ident>,
    /// Procedures a call from the current body counts as recursive for.
    recursive: Vec<&'static str>,
    /// Procedures that may be called without recursion.
    plain: Vec<&'static str>,
}

impl<R: Rng> Gen<'_, R> {
    fn param(&mut self) -> Ident {
        self.params.choose(self.rng).unwrap().clone()
    }

    fn small_list(&mut self, v: &str) -> ListExpr {
        let base = ListExpr::var(v);
        match self.rng.gen_range(0..6) {
            0 => ListExpr::FirstHalf(Box::new(base)),
            1 => ListExpr::SecondHalf(Box::new(base)),
            2 => ListExpr::Remove(Box::new(base), vec![Index::At(IntExpr::Const(1))]),
            _ => base,
        }
    }

    fn size(&mut self, v: &str) -> IntExpr {
        IntExpr::Size(Box::new(ListExpr::var(v)))
    }

    /// A position that is in range whenever `l` is not empty.
    fn index(&mut self, l: &ListExpr) -> IntExpr {
        let size = IntExpr::Size(Box::new(l.clone()));
        match self.rng.gen_range(0..4) {
            0 => size,
            1 => IntExpr::Half(Box::new(size)),
            _ => IntExpr::Const(1),
        }
    }

    fn qubit(&mut self) -> QubitExpr {
        let v = self.param();
        let list = if self.rng.gen_bool(0.8) {
            ListExpr::var(&v)
        } else {
            self.small_list(&v)
        };
        let index = self.index(&list);
        QubitExpr::new(list, index)
    }

    fn gate(&mut self) -> Stmt {
        let target = self.qubit();
        let v = self.param();
        match self.rng.gen_range(0..4) {
            0 => Stmt::apply(
                target,
                GateName::Ph,
                Some(AngleFn::new(
                    "x",
                    AngleExpr::Bin(
                        Box::new(AngleExpr::Bin(Box::new(AngleExpr::Lit(2.0)), ArithOp::Mul, Box::new(AngleExpr::Pi))),
                        ArithOp::Div,
                        Box::new(AngleExpr::Param),
                    ),
                )),
                Some(IntExpr::Offset(Box::new(self.size(&v)), Sign::Plus, 1)),
            ),
            1 => {
                let k = f64::from(self.rng.gen_range(1..=5u8)) / 4.0;
                Stmt::apply(
                    target,
                    GateName::Ry,
                    Some(AngleFn::new(
                        "y",
                        AngleExpr::Bin(Box::new(AngleExpr::Param), ArithOp::Add, Box::new(AngleExpr::Lit(k))),
                    )),
                    Some(self.size(&v)),
                )
            }
            _ => Stmt::not(target),
        }
    }

    fn cond(&mut self) -> BoolExpr {
        let v = self.param();
        let c = IntExpr::Const(self.rng.gen_range(1..=3));
        let op = *[CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne].choose(self.rng).unwrap();
        let b = BoolExpr::Cmp(self.size(&v), op, c);
        if self.rng.gen_bool(0.2) {
            BoolExpr::Not(Box::new(b))
        } else {
            b
        }
    }

    /// Arguments for a call: every parameter once, the first halved when
    /// `halve` is set.
    fn args(&mut self, halve: bool) -> Vec<ListExpr> {
        let params = self.params.clone();
        params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if i == 0 && halve {
                    let h = if self.rng.gen_bool(0.5) {
                        ListExpr::FirstHalf(Box::new(ListExpr::var(p)))
                    } else {
                        ListExpr::SecondHalf(Box::new(ListExpr::var(p)))
                    };
                    if self.rng.gen_bool(0.3) {
                        ListExpr::Remove(Box::new(h), vec![Index::At(IntExpr::Const(1))])
                    } else {
                        h
                    }
                } else if self.rng.gen_bool(0.2) {
                    self.small_list(p)
                } else {
                    ListExpr::var(p)
                }
            })
            .collect()
    }

    /// A statement; `budget` says whether this path may still hold a
    /// recursive call.
    fn stmt(&mut self, depth: u32, budget: bool) -> Stmt {
        let leaf = depth == 0;
        let pick = self.rng.gen_range(0..if leaf { 4 } else { 11 });
        match pick {
            9 | 10 if budget && !self.recursive.is_empty() => self.split(),
            0 => Stmt::skip(),
            1 | 2 => self.gate(),
            3 => self.call(budget),
            4 | 5 => {
                let control = self.qubit();
                let zero = self.stmt(depth - 1, budget);
                let one = self.stmt(depth - 1, budget);
                Stmt::qcase(control, zero, one)
            }
            6 => {
                let cond = self.cond();
                let then_branch = self.stmt(depth - 1, budget);
                let else_branch = self.stmt(depth - 1, budget);
                Stmt::if_then_else(cond, then_branch, else_branch)
            }
            _ => {
                let n = self.rng.gen_range(2..=3);
                let holder = if budget { self.rng.gen_range(0..n) } else { n };
                Stmt::seq((0..n).map(|i| self.stmt(depth - 1, i == holder)).collect())
            }
        }
    }

    /// `qcase a[|a|/2]` with a recursive call on each half, both leaving
    /// the control out; the halves have equal sizes when `|a|` is even.
    /// The arms touch nothing else of `a`.
    fn split(&mut self) -> Stmt {
        let a = self.params[0].clone();
        let control = QubitExpr::new(ListExpr::var(&a), IntExpr::Half(Box::new(self.size(&a))));
        let arm = |g: &mut Self, first: bool| {
            let mut args = g.args(false);
            let half = if first {
                (ListExpr::FirstHalf(Box::new(ListExpr::var(&a))), Index::FromEnd(1))
            } else {
                (ListExpr::SecondHalf(Box::new(ListExpr::var(&a))), Index::At(IntExpr::Const(1)))
            };
            args[0] = ListExpr::Remove(Box::new(half.0), vec![half.1]);
            let proc = *g.recursive.choose(g.rng).unwrap();
            let call = Stmt::call(proc, args).unwrap();
            let extra = match g.params.get(1).cloned() {
                Some(b) if g.rng.gen_bool(0.7) => Stmt::not(QubitExpr::at(&b, 1)),
                _ => Stmt::skip(),
            };
            if g.rng.gen_bool(0.5) {
                Stmt::seq(vec![extra, call])
            } else {
                Stmt::seq(vec![call, extra])
            }
        };
        let zero = arm(self, true);
        let one = arm(self, false);
        Stmt::qcase(control, zero, one)
    }

    fn call(&mut self, budget: bool) -> Stmt {
        if budget && !self.recursive.is_empty() && self.rng.gen_bool(0.7) {
            let proc = *self.recursive.choose(self.rng).unwrap();
            let args = self.args(true);
            return Stmt::call(proc, args).unwrap();
        }
        if let Some(&proc) = self.plain.choose(self.rng) {
            let args = self.args(false);
            return Stmt::call(proc, args).unwrap();
        }
        self.gate()
    }
}

/// A random program over variables `q1…qk`, k ∈ {1, 2}. Not necessarily
/// in PLP or error-free.
pub fn random_program<R: Rng>(rng: &mut R) -> Program {
    let arity = rng.gen_range(1..=2);
    let vars: Vec<Ident> = (1..=arity).map(|i| format!("q{i}")).collect();
    let params: Vec<Ident> = ["a", "b"][..arity].iter().map(|s| s.to_string()).collect();
    let nprocs = rng.gen_range(0..=2);
    let mutual = nprocs == 2 && rng.gen_bool(0.3);
    let mut decls = Vec::new();
    // Declared in reverse so that f may call g without recursion.
    for i in (0..nprocs).rev() {
        let name = PROCS[i];
        let (recursive, plain) = if mutual {
            (PROCS[..2].to_vec(), vec![])
        } else {
            (vec![name], PROCS[i + 1..nprocs].to_vec())
        };
        let mut g = Gen {
            rng,
            params: params.clone(),
            recursive,
            plain,
        };
        let body = if g.rng.gen_bool(0.4) {
            let before = g.stmt(1, false);
            let split = g.split();
            let after = g.stmt(1, false);
            Stmt::seq(vec![before, split, after])
        } else {
            g.stmt(3, true)
        };
        let refs: Vec<&str> = params.iter().map(String::as_str).collect();
        decls.push(ProcDecl::new(name, &refs, body));
    }
    decls.reverse();
    let mut g = Gen {
        rng,
        params: vars.clone(),
        recursive: vec![],
        plain: PROCS[..nprocs].to_vec(),
    };
    let mut main = vec![g.stmt(1, false)];
    if nprocs > 0 {
        let args = vars.iter().map(|v| ListExpr::var(v)).collect();
        main.push(Stmt::call("f", args).unwrap());
    }
    main.push(g.stmt(1, false));
    Program::with_vars(decls, Stmt::seq(main), vars).expect("generated programs are structurally valid")
}

/// A PLP program with sizes (each ≥ 1, `|P| ≤ max_total`) at which it runs
/// without error.
pub fn random_case<R: Rng>(rng: &mut R, max_total: usize) -> (Program, Lengths) {
    loop {
        let p = random_program(rng);
        if !verdict(&p).is_plp {
            continue;
        }
        let k = p.vars.len();
        if k == 0 || k > max_total {
            continue;
        }
        if let Some(l) = (0..4).find_map(|_| error_free_sizes(&p, rng, max_total)) {
            return (p, l);
        }
    }
}

/// Random sizes, each at least 1, if the program runs without error there.
fn error_free_sizes<R: Rng>(p: &Program, rng: &mut R, max_total: usize) -> Option<Lengths> {
    let k = p.vars.len();
    let mut sizes = BTreeMap::new();
    let mut left = max_total;
    for (i, v) in p.vars.iter().enumerate() {
        let room = left - (k - i - 1);
        let n = rng.gen_range(1..=room.min(6));
        left -= n;
        sizes.insert(v.clone(), n);
    }
    let lengths = Lengths::new(&p.vars, &sizes).ok()?;
    let interp = Interpreter::new(p, &lengths).ok()?;
    match interp.meter() {
        Ok(o) if o.status == Status::Top => Some(lengths),
        _ => None,
    }
}
