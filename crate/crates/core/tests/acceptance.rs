//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances and fitted-constant rules are pinned below.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plp::analysis::verdict;
use plp::ast::{Index, IntExpr, ListExpr, Program, QubitExpr};
use plp::circuit::{
    build_controlled_permutation, depth, simulate_circuit, simulate_circuit_sparse, AncillaPool, Circuit, PermMode,
    WireLabel,
};
use plp::compiler::{compile, stats, CompileError};
use plp::fuzz::random_case;
use plp::interpreter::{eval_list, eval_qubit, extract_unitary, Interpreter, Lengths, ListVal, Scope, Status};
use plp::inverse::invert_program;
use plp::parser::parse_program;
use plp::state::{Control, Matrix, SparseState, Statevector};

/// Amplitude agreement between two states or matrices.
const AMPLITUDE_TOL: f64 = 1e-9;
/// Random unit vectors per size assignment in the equivalence check.
const RANDOM_STATES: usize = 50;
/// Fuzzed programs in the reversibility check.
const FUZZED_PROGRAMS: usize = 100;
/// Random permutations per k in the permutation suite.
const RANDOM_PERMS: usize = 200;
/// Exponent of the polylog factor in the size bound; c is fitted.
const SIZE_LOG_EXPONENT: i32 = 2;
/// Constant term of the compact-mode ancilla bound `2⌈log2 n⌉ + O(1)`.
const COMPACT_ANCILLA_CONST: usize = 2;
/// Log-depth controlled permutation: depth ≤ A·log2 k + B.
const PERM_DEPTH_A: f64 = 2.0;
const PERM_DEPTH_B: f64 = 4.0;
/// Slack for comparing fitted bounds.
const FIT_EPS: f64 = 1e-9;

const SEARCH: &str = include_str!("../corpus/search.plp");
const SQLOG: &str = include_str!("../corpus/sqlog.plp");
const NONHALVING: &str = include_str!("../corpus/search-nonhalving.plp");
const WIDTH2: &str = include_str!("../corpus/width2.plp");

const SEARCH_SWEEP: [usize; 9] = [2, 6, 14, 30, 62, 126, 254, 510, 1022];
const SQLOG_SWEEP: [usize; 9] = [4, 8, 16, 32, 64, 128, 256, 512, 1024];

struct Verdict {
    pass: bool,
    detail: String,
}

fn program(src: &str) -> Program {
    parse_program(src).expect("corpus parses")
}

fn search_lengths(p: &Program, n: usize) -> Lengths {
    Lengths::of(p, &[("q1", n), ("q2", 1)]).unwrap()
}

fn sqlog_lengths(p: &Program, n: usize) -> Lengths {
    Lengths::of(p, &[("q1", n), ("q2", 2)]).unwrap()
}

fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

fn ceil_log2(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

/// Fits `y = a·x + b` through the first two points and checks every point.
fn linear_fit_holds(xs: &[f64], ys: &[f64]) -> (f64, f64, Vec<usize>) {
    let a = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    let b = ys[0] - a * xs[0];
    let bad = (2..xs.len()).filter(|&i| ys[i] > a * xs[i] + b + FIT_EPS).collect();
    (a, b, bad)
}

fn criterion_1() -> Verdict {
    let search = verdict(&program(SEARCH));
    let sqlog = verdict(&program(SQLOG));
    let nonhalving = verdict(&program(NONHALVING));
    let width2 = verdict(&program(WIDTH2));
    let halving_diag = nonhalving.diagnostics.iter().any(|d| d.message.contains("does not halve"));
    let width_diag = width2.diagnostics.iter().any(|d| d.message.contains("width 2"));
    let sqlog_widths = (sqlog.proc_widths.get("f").copied(), sqlog.proc_widths.get("g").copied());
    let pass = search.is_plp
        && sqlog.is_plp
        && sqlog.width == 1
        && sqlog_widths == (Some(1), Some(1))
        && !nonhalving.is_plp
        && !nonhalving.is_half
        && halving_diag
        && !width2.is_plp
        && width2.width == 2
        && width_diag;
    Verdict {
        pass,
        detail: format!(
            "SEARCH `{}`, SQLOG `{}`, non-halving mutant `{}`, width mutant `{}`",
            search.summary(),
            sqlog.summary(),
            nonhalving.summary(),
            width2.summary()
        ),
    }
}

fn criterion_2() -> Verdict {
    let names = vec!["q".to_string()];
    let scope = Scope::new(&names, vec![ListVal { var: 0, ptrs: vec![1, 4, 5] }]);
    let remove = |k| ListExpr::Remove(Box::new(ListExpr::var("q")), vec![Index::At(IntExpr::Const(k))]);
    let q2 = eval_qubit(&QubitExpr::at("q", 2), &scope).1;
    let q4 = eval_qubit(&QubitExpr::at("q", 4), &scope).1;
    let r4 = eval_list(&remove(4), &scope).unwrap().ptrs;
    let r3 = eval_list(&remove(3), &scope).unwrap().ptrs;
    let pass = q2 == 4 && r4.is_empty() && q4 == 0 && r3 == vec![1, 4];
    Verdict {
        pass,
        detail: format!("with q = [1, 4, 5]: q[2] = {q2}, q \\ [4] = {r4:?}, q[4] = {q4}, q \\ [3] = {r3:?}"),
    }
}

/// All sorted strings over {0, 1, 2} of length `len`.
fn sorted_strings(len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for zeros in 0..=len {
        for ones in 0..=len - zeros {
            let mut x = vec![0u8; zeros];
            x.extend(std::iter::repeat(1).take(ones));
            x.extend(std::iter::repeat(2).take(len - zeros - ones));
            out.push(x);
        }
    }
    out
}

fn criterion_3() -> Verdict {
    let p = program(SEARCH);
    let mut polarity: Option<bool> = None;
    let mut checked = 0;
    let mut failures = Vec::new();
    for len in [1usize, 3, 7, 15] {
        let l = search_lengths(&p, 2 * len);
        let interp = Interpreter::new(&p, &l).unwrap();
        for x in sorted_strings(len) {
            let mut bits: Vec<bool> = x.iter().flat_map(|c| [*c == 2, *c == 1]).collect();
            bits.push(false);
            let out = interp.run(SparseState::from_bits(&bits)).unwrap();
            let entries = out.state.sorted_entries();
            let basis = out.status == Status::Top && entries.len() == 1 && (entries[0].1.norm() - 1.0).abs() <= AMPLITUDE_TOL;
            let found = basis && entries[0].0 & 1 == 1;
            let answer = x.contains(&1);
            let pol = *polarity.get_or_insert(found == answer);
            checked += 1;
            if !basis || (found == answer) != pol {
                failures.push(x.iter().map(|c| char::from(b'0' + c)).collect::<String>());
            }
        }
    }
    Verdict {
        pass: failures.is_empty() && polarity == Some(true),
        detail: format!(
            "{checked} sorted strings (all of them) at |x| in 1, 3, 7, 15; q2 flipped iff x contains a 1: {}; mismatches {:?}",
            polarity == Some(true),
            &failures[..failures.len().min(5)]
        ),
    }
}

fn assignments(total: usize) -> Vec<(usize, usize)> {
    (0..=total).flat_map(|a| (0..=total - a).map(move |b| (a, b))).collect()
}

/// Compares compiled circuits with the interpreter at one size assignment.
fn equivalent_at(p: &Program, l: &Lengths, rng: &mut ChaCha8Rng) -> Result<&'static str, String> {
    let interp = Interpreter::new(p, l).map_err(|e| e.to_string())?;
    let classical = interp.meter().map_err(|e| e.to_string())?;
    let n = l.total();
    for mode in [PermMode::Compact, PermMode::LogDepth] {
        let compiled = compile(p, l, mode);
        if classical.status == Status::Bottom {
            match compiled {
                Err(CompileError::Bottom(_)) => continue,
                other => return Err(format!("{:?}: interpreter errs, compiler gave {:?}", l.sizes(), other.map(|c| c.size()))),
            }
        }
        let c = compiled.map_err(|e| format!("{:?}: {e}", l.sizes()))?;
        for b in 0..1u128 << n {
            let input = SparseState::basis(n, b);
            let want = interp.run(input.clone()).unwrap().state;
            let got = simulate_circuit_sparse(&c, &input).map_err(|e| format!("{:?} {mode:?}: {e}", l.sizes()))?;
            if got.max_distance(&want) > AMPLITUDE_TOL {
                return Err(format!("{:?} {mode:?}: basis {b:b} differs", l.sizes()));
            }
        }
        for _ in 0..RANDOM_STATES {
            let input = Statevector::random(n, rng);
            let want = interp.run(input.clone()).unwrap().state;
            let got = simulate_circuit(&c, &input).map_err(|e| format!("{:?} {mode:?}: {e}", l.sizes()))?;
            if got.max_distance(&want) > AMPLITUDE_TOL {
                return Err(format!("{:?} {mode:?}: random state differs", l.sizes()));
            }
        }
    }
    Ok(if classical.status == Status::Bottom { "bottom" } else { "ok" })
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = 0;
    let mut bottom = 0;
    let mut errors = Vec::new();
    for (name, src) in [("SEARCH", SEARCH), ("SQLOG", SQLOG)] {
        let p = program(src);
        for (a, b) in assignments(10) {
            let l = Lengths::of(&p, &[("q1", a), ("q2", b)]).unwrap();
            match equivalent_at(&p, &l, &mut rng) {
                Ok("ok") => ok += 1,
                Ok(_) => bottom += 1,
                Err(e) => errors.push(format!("{name} {e}")),
            }
        }
    }
    Verdict {
        pass: errors.is_empty(),
        detail: format!(
            "{ok} error-free and {bottom} erring size assignments with |P| <= 10, both modes, all basis states + {RANDOM_STATES} random states; {}",
            if errors.is_empty() { "no mismatch".to_string() } else { errors[..errors.len().min(3)].join("; ") }
        ),
    }
}

fn reversible(p: &Program, l: &Lengths) -> Result<(), String> {
    let inv = invert_program(p);
    if !verdict(&inv).is_plp {
        return Err("inverse is not in PLP".into());
    }
    let u = extract_unitary(p, l).map_err(|e| e.to_string())?;
    let ui = extract_unitary(&inv, l).map_err(|e| format!("inverse: {e}"))?;
    let err = ui.mul(&u).max_distance(&Matrix::identity(1 << l.total()));
    if err > AMPLITUDE_TOL {
        return Err(format!("|U_inv U - I| = {err:.2e} at {:?}", l.sizes()));
    }
    Ok(())
}

fn criterion_5() -> Verdict {
    let mut cases = 0;
    let mut errors = Vec::new();
    for (name, src) in [("SEARCH", SEARCH), ("SQLOG", SQLOG)] {
        let p = program(src);
        for (a, b) in assignments(8) {
            let l = Lengths::of(&p, &[("q1", a), ("q2", b)]).unwrap();
            if Interpreter::new(&p, &l).unwrap().meter().unwrap().status == Status::Bottom {
                continue;
            }
            cases += 1;
            if let Err(e) = reversible(&p, &l) {
                errors.push(format!("{name}: {e}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..FUZZED_PROGRAMS {
        let (p, l) = random_case(&mut rng, 8);
        cases += 1;
        if let Err(e) = reversible(&p, &l) {
            errors.push(format!("fuzzed #{i}: {e}"));
        }
    }
    Verdict {
        pass: errors.is_empty(),
        detail: format!(
            "{cases} cases (corpus at every error-free |P| <= 8, {FUZZED_PROGRAMS} fuzzed); {}",
            if errors.is_empty() { "all identities, all inverses in PLP".to_string() } else { errors[..errors.len().min(3)].join("; ") }
        ),
    }
}

fn sweep_stats(src: &str, sweep: &[usize], mode: PermMode, lengths: fn(&Program, usize) -> Lengths) -> Vec<plp::compiler::CompileStats> {
    let p = program(src);
    sweep.iter().map(|&n| stats(&p, &lengths(&p, n), mode).unwrap()).collect()
}

fn criterion_6() -> Verdict {
    let search: Vec<usize> = sweep_stats(SEARCH, &SEARCH_SWEEP, PermMode::LogDepth, search_lengths).iter().map(|s| s.depth).collect();
    let diffs: Vec<i64> = search.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
    // The per-level additive cost, taken from the first recursion level.
    let c = diffs[0];
    let bounded = diffs.iter().all(|d| *d <= c);
    let total = (search[8] as i64) < search[0] as i64 + 9 * c;
    let search_ok = bounded && total;

    let sqlog: Vec<usize> = sweep_stats(SQLOG, &SQLOG_SWEEP, PermMode::LogDepth, sqlog_lengths).iter().map(|s| s.depth).collect();
    let xs: Vec<f64> = SQLOG_SWEEP.iter().map(|&n| log2(n).powi(2)).collect();
    let ys: Vec<f64> = sqlog.iter().map(|&d| d as f64).collect();
    let (a, b, bad) = linear_fit_holds(&xs, &ys);
    let sqlog_ok = bad.is_empty();
    Verdict {
        pass: search_ok && sqlog_ok,
        detail: format!(
            "SEARCH {} depths {search:?}, differences {diffs:?}, C = {c}: differences <= C {bounded}, depth(1022) < depth(2) + 9C {total}; \
             SQLOG {} depths {sqlog:?}, fit a = {a:.3}, b = {b:.3}, exceeded at n = {:?}",
            if search_ok { "ok" } else { "FAILS" },
            if sqlog_ok { "ok" } else { "FAILS" },
            bad.iter().map(|&i| SQLOG_SWEEP[i]).collect::<Vec<_>>()
        ),
    }
}

fn criterion_7() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    let d = SIZE_LOG_EXPONENT;
    for (name, src, sweep, lengths) in [
        ("SEARCH", SEARCH, SEARCH_SWEEP, search_lengths as fn(&Program, usize) -> Lengths),
        ("SQLOG", SQLOG, SQLOG_SWEEP, sqlog_lengths),
    ] {
        for mode in [PermMode::Compact, PermMode::LogDepth] {
            let st = sweep_stats(src, &sweep, mode, lengths);
            let ratio = |i: usize| st[i].size as f64 / sweep[i] as f64 / log2(sweep[i]).powi(d);
            let c = ratio(0).max(ratio(1));
            let size_bad: Vec<usize> = (2..sweep.len()).filter(|&i| ratio(i) > c + FIT_EPS).map(|i| sweep[i]).collect();
            let anc_bound = |n: usize| match mode {
                PermMode::Compact => 2 * ceil_log2(n) + COMPACT_ANCILLA_CONST,
                PermMode::LogDepth => 2 * ceil_log2(n) + n,
            };
            let anc_bad: Vec<usize> = (0..sweep.len()).filter(|&i| st[i].ancillas > anc_bound(sweep[i])).map(|i| sweep[i]).collect();
            pass &= size_bad.is_empty() && anc_bad.is_empty();
            lines.push(format!(
                "{name} {mode:?}: size/n <= {c:.3}*log2(n)^{d} {}, ancillas {:?} within bound {}",
                if size_bad.is_empty() { "ok".to_string() } else { format!("exceeded at {size_bad:?}") },
                st.iter().map(|s| s.ancillas).collect::<Vec<_>>(),
                if anc_bad.is_empty() { "ok".to_string() } else { format!("exceeded at {anc_bad:?}") },
            ));
        }
    }
    Verdict {
        pass,
        detail: lines.join("; "),
    }
}

fn criterion_8() -> Verdict {
    let p = program(SEARCH);
    let mut got = Vec::new();
    let mut pass = true;
    for k in 2..=9u32 {
        let n = 2 * ((1usize << k) - 1);
        let chain = stats(&p, &search_lengths(&p, n), PermMode::Compact).unwrap().keychain;
        pass &= chain == (k - 1) as usize;
        got.push((n, chain));
    }
    Verdict {
        pass,
        detail: format!("(n, keychain) = {got:?}, expected k - 1"),
    }
}

fn permutation_ok(k: usize, perm: &[usize], mode: PermMode) -> Result<(), String> {
    // Wire 0 is the control, wires 1..=k the permuted register.
    let wires: Vec<usize> = (1..=k).collect();
    let mut pool = AncillaPool::new(k + 1);
    let gates = build_controlled_permutation(&wires, perm, Control::pos(0), mode, &mut pool);
    let mut c = Circuit::new((0..=k).map(|p| WireLabel::Input { var: "w".into(), ptr: p + 1 }).collect());
    c.reserve_ancillas(pool.high_water());
    c.gates = gates;
    for control in [false, true] {
        for x in 0..1u128 << k {
            let input = (u128::from(control) << k) | x;
            let out = simulate_circuit_sparse(&c, &SparseState::basis(k + 1, input)).map_err(|e| e.to_string())?;
            // Bit of wire w (1-based register position i = w - 1) in the index.
            let bit = |v: u128, i: usize| (v >> (k - 1 - i)) & 1;
            let mut want = u128::from(control) << k;
            for i in 0..k {
                let dest = if control { perm[i] } else { i };
                want |= bit(x, i) << (k - 1 - dest);
            }
            let e = out.sorted_entries();
            if e.len() != 1 || e[0].0 != want || (e[0].1.re - 1.0).abs() > AMPLITUDE_TOL {
                return Err(format!("k={k} {mode:?} perm {perm:?}: input {input:b}"));
            }
        }
    }
    Ok(())
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut errors = Vec::new();
    let mut tested = 0;
    for k in 1..=8usize {
        for _ in 0..RANDOM_PERMS {
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rng);
            for mode in [PermMode::Compact, PermMode::LogDepth] {
                tested += 1;
                if let Err(e) = permutation_ok(k, &perm, mode) {
                    errors.push(e);
                }
            }
        }
    }
    let mut worst = Vec::new();
    for j in 1..=12u32 {
        let k = 1usize << j;
        let mut perms = vec![(0..k).map(|i| (i + 1) % k).collect::<Vec<_>>(), (0..k).map(|i| (i + k / 2) % k).collect()];
        let mut r: Vec<usize> = (0..k).collect();
        r.shuffle(&mut rng);
        perms.push(r);
        let mut d_max = 0;
        for perm in perms {
            let wires: Vec<usize> = (1..=k).collect();
            let mut pool = AncillaPool::new(k + 1);
            let g = build_controlled_permutation(&wires, &perm, Control::pos(0), PermMode::LogDepth, &mut pool);
            let d = depth(&g, k + 1 + pool.high_water());
            d_max = d_max.max(d);
            if d as f64 > PERM_DEPTH_A * log2(k) + PERM_DEPTH_B + FIT_EPS {
                errors.push(format!("k={k}: depth {d}"));
            }
        }
        worst.push((k, d_max));
    }
    Verdict {
        pass: errors.is_empty(),
        detail: format!(
            "{tested} exhaustive checks at k <= 8; log-depth worst depth per k {worst:?} against {PERM_DEPTH_A}*log2(k) + {PERM_DEPTH_B}; {}",
            if errors.is_empty() { "no failure".to_string() } else { errors[..errors.len().min(3)].join("; ") }
        ),
    }
}

fn criterion_10() -> Verdict {
    let meters = |src: &str, sweep: &[usize], lengths: fn(&Program, usize) -> Lengths| -> Vec<u64> {
        let p = program(src);
        sweep.iter().map(|&n| Interpreter::new(&p, &lengths(&p, n)).unwrap().meter().unwrap().steps).collect()
    };
    let search = meters(SEARCH, &SEARCH_SWEEP, search_lengths);
    let xs: Vec<f64> = SEARCH_SWEEP.iter().map(|&n| log2(n)).collect();
    let (a1, b1, bad1) = linear_fit_holds(&xs, &search.iter().map(|&m| m as f64).collect::<Vec<_>>());
    let sqlog = meters(SQLOG, &SQLOG_SWEEP, sqlog_lengths);
    let xs: Vec<f64> = SQLOG_SWEEP.iter().map(|&n| log2(n).powi(2)).collect();
    let (a2, b2, bad2) = linear_fit_holds(&xs, &sqlog.iter().map(|&m| m as f64).collect::<Vec<_>>());
    Verdict {
        pass: bad1.is_empty() && bad2.is_empty(),
        detail: format!(
            "SEARCH {} meters {search:?}, fit {a1:.3}*log2(n) + {b1:.3}, exceeded at {:?}; SQLOG {} meters {sqlog:?}, fit {a2:.3}*log2(n)^2 + {b2:.3}, exceeded at {:?}",
            if bad1.is_empty() { "ok" } else { "FAILS" },
            bad1.iter().map(|&i| SEARCH_SWEEP[i]).collect::<Vec<_>>(),
            if bad2.is_empty() { "ok" } else { "FAILS" },
            bad2.iter().map(|&i| SQLOG_SWEEP[i]).collect::<Vec<_>>(),
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Verdict); 10] = [
        ("corpus acceptance", Duration::from_secs(1), criterion_1),
        ("expression goldens", Duration::from_secs(1), criterion_2),
        ("SEARCH correctness", Duration::from_secs(120), criterion_3),
        ("interpreter-circuit equivalence", Duration::from_secs(300), criterion_4),
        ("reversibility", Duration::from_secs(300), criterion_5),
        ("depth scaling", Duration::from_secs(30), criterion_6),
        ("size and ancilla scaling", Duration::from_secs(30), criterion_7),
        ("merge-key bound", Duration::from_secs(30), criterion_8),
        ("controlled permutations", Duration::from_secs(120), criterion_9),
        ("step-meter bound", Duration::from_secs(60), criterion_10),
    ];
    let mut failed = BTreeMap::new();
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let pass = v.pass && in_time;
        println!(
            "criterion {:>2} {:<32} {}  [{:.2}s of {}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            v.detail
        );
        if !pass {
            failed.insert(i + 1, name);
        }
    }
    if failed.is_empty() {
        println!("all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {:?}", failed.keys().collect::<Vec<_>>());
        ExitCode::FAILURE
    }
}
