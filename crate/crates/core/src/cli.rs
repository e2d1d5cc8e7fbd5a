//! Command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::verdict;
use crate::ast::Program;
use crate::circuit::{deserialize, serialize, simulate_circuit, simulate_circuit_sparse, PermMode};
use crate::compiler::compile_report;
use crate::interpreter::{Interpreter, Lengths, Status};
use crate::inverse::invert_program;
use crate::parser::{parse_program, print_program};
use crate::state::{SparseState, Statevector, C64};

/// Amplitudes below this magnitude are not printed.
pub const PRINT_THRESHOLD: f64 = 1e-12;

/// Environment variable seeding the random states of `bench --verify`.
pub const SEED_VAR: &str = "PLP_SEED";

/// Largest register `bench --verify` simulates.
const VERIFY_MAX_WIRES: usize = 12;

#[derive(Parser, Debug)]
#[command(name = "plp", version, about = "Check, run, invert and compile PLP programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Report whether a program is in PLP; exit 0 iff it is.
    Check { file: PathBuf },
    /// Run a program on a basis state or an amplitude file.
    Run {
        file: PathBuf,
        /// Input sizes, e.g. `q1=14,q2=1`.
        #[arg(long)]
        size: String,
        /// Basis input per variable, e.g. `q1=000110,q2=0`; all zeros if absent.
        #[arg(long, conflicts_with = "state")]
        input: Option<String>,
        /// File of 2^N amplitudes, one `re im` pair per line.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Print the step meter.
        #[arg(long)]
        steps: bool,
    },
    /// Compile a program to a circuit file.
    Compile {
        file: PathBuf,
        #[arg(long)]
        size: String,
        #[arg(long, default_value = "compact")]
        perm: PermMode,
        /// Where to write the circuit; standard output if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print `n size depth ancillas keychain`. Without `-o` the circuit
        /// itself is then not printed.
        #[arg(long)]
        stats: bool,
    },
    /// Write the inverse program.
    Invert {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a circuit file.
    SimulateCircuit {
        file: PathBuf,
        /// Basis input over the input wires, wire 0 first.
        #[arg(long, conflicts_with = "state")]
        input: Option<String>,
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Compile over a sweep of sizes and print one TSV row per size.
    Bench {
        file: PathBuf,
        /// Values of the swept variable.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Swept variable; the first program variable if absent.
        #[arg(long)]
        var: Option<String>,
        /// Sizes of the other variables; 1 if absent.
        #[arg(long)]
        size: Option<String>,
        #[arg(long, default_value = "compact")]
        perm: PermMode,
        /// Also compare circuit and interpreter on random states.
        #[arg(long)]
        verify: bool,
        /// Leave out the wall-clock column.
        #[arg(long)]
        no_time: bool,
    },
}

/// A failed command: exit code and message for standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn failed(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let r = run(cli.command, &mut out);
    print!("{out}");
    let _ = std::io::stdout().flush();
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("{}", f.message.trim_end());
            }
            ExitCode::from(f.code)
        }
    }
}

/// Runs one command, appending its standard output to `out`.
pub fn run(command: Command, out: &mut String) -> Result<(), Failure> {
    match command {
        Command::Check { file } => check(&file, out),
        Command::Run {
            file,
            size,
            input,
            state,
            steps,
        } => run_cmd(&file, &size, input.as_deref(), state.as_deref(), steps, out),
        Command::Compile {
            file,
            size,
            perm,
            output,
            stats,
        } => compile_cmd(&file, &size, perm, output.as_deref(), stats, out),
        Command::Invert { file, output } => {
            let p = load(&file)?;
            let text = print_program(&invert_program(&p));
            emit(output.as_deref(), &text, out)
        }
        Command::SimulateCircuit { file, input, state } => simulate_cmd(&file, input.as_deref(), state.as_deref(), out),
        Command::Bench {
            file,
            sizes,
            var,
            size,
            perm,
            verify,
            no_time,
        } => bench(&file, &sizes, var.as_deref(), size.as_deref(), perm, verify, no_time, out),
    }
}

fn read(file: &Path) -> Result<String, Failure> {
    fs::read_to_string(file).map_err(|e| usage(format!("{}: {e}", file.display())))
}

fn load(file: &Path) -> Result<Program, Failure> {
    let src = read(file)?;
    parse_program(&src).map_err(|e| failed(format!("{}:{}", file.display(), e)))
}

fn emit(output: Option<&Path>, text: &str, out: &mut String) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            out.push_str(text);
            if !text.ends_with('\n') {
                out.push('\n');
            }
            Ok(())
        }
    }
}

fn check(file: &Path, out: &mut String) -> Result<(), Failure> {
    let p = load(file)?;
    let v = verdict(&p);
    let name = file.display().to_string();
    let diags: String = v.diagnostics.iter().map(|d| d.render(&name) + "\n").collect();
    writeln!(out, "{}", v.summary()).unwrap();
    if v.is_plp {
        if !diags.is_empty() {
            eprint!("{diags}");
        }
        Ok(())
    } else {
        Err(failed(diags))
    }
}

/// Parses `a=1,b=2` into a map; values go through `value`.
fn assignments<T>(
    text: &str,
    what: &str,
    mut value: impl FnMut(&str) -> Option<T>,
) -> Result<BTreeMap<String, T>, Failure> {
    let mut map = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("bad {what} `{part}`: expected name=value")))?;
        let v = value(v.trim()).ok_or_else(|| usage(format!("bad {what} value in `{part}`")))?;
        if map.insert(k.trim().to_string(), v).is_some() {
            return Err(usage(format!("{what} for `{k}` given twice")));
        }
    }
    Ok(map)
}

fn parse_sizes(p: &Program, text: &str) -> Result<Lengths, Failure> {
    let sizes = assignments(text, "size", |v| v.parse::<usize>().ok())?;
    Lengths::new(&p.vars, &sizes).map_err(|e| usage(e.to_string()))
}

fn parse_bits(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

/// Basis input given per variable; missing variables are all zeros.
fn basis_input(lengths: &Lengths, text: Option<&str>) -> Result<SparseState, Failure> {
    let given = match text {
        Some(t) => assignments(t, "input", parse_bits)?,
        None => BTreeMap::new(),
    };
    if let Some(k) = given.keys().find(|k| lengths.index_of(k).is_none()) {
        return Err(usage(format!("input for `{k}`, which is not a variable of the program")));
    }
    let mut bits = Vec::with_capacity(lengths.total());
    for (v, name) in lengths.vars().iter().enumerate() {
        match given.get(name) {
            Some(b) if b.len() == lengths.len(v) => bits.extend(b),
            Some(b) => {
                return Err(usage(format!(
                    "input for `{name}` has {} bits, its size is {}",
                    b.len(),
                    lengths.len(v)
                )))
            }
            None => bits.extend(std::iter::repeat(false).take(lengths.len(v))),
        }
    }
    if bits.len() > 128 {
        return Err(usage("basis inputs are limited to 128 wires"));
    }
    Ok(SparseState::from_bits(&bits))
}

/// Reads `re im` lines into a state over `n` wires.
pub fn read_state(text: &str, n: usize) -> Result<Statevector, String> {
    let mut amps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |x: Option<&str>| x.and_then(|s| s.parse::<f64>().ok());
        match (parse(it.next()), parse(it.next()), it.next()) {
            (Some(re), Some(im), None) => amps.push(C64::new(re, im)),
            _ => return Err(format!("line {}: expected `re im`", i + 1)),
        }
    }
    if amps.len() != 1usize << n {
        return Err(format!("{} amplitudes given, {} wires need {}", amps.len(), n, 1usize << n));
    }
    Statevector::from_amplitudes(amps).ok_or_else(|| "amplitude count is not a power of two".to_string())
}

fn bitstring(index: u128, n: usize) -> String {
    (0..n).map(|w| if index >> (n - 1 - w) & 1 == 1 { '1' } else { '0' }).collect()
}

/// `bitstring re im` for each amplitude above the print threshold.
pub fn format_entries(entries: &[(u128, C64)], n: usize) -> String {
    let mut s = String::new();
    for (k, a) in entries {
        if a.norm() > PRINT_THRESHOLD {
            let clean = |x: f64| if x.abs() < PRINT_THRESHOLD { 0.0 } else { x };
            writeln!(s, "{} {} {}", bitstring(*k, n), clean(a.re), clean(a.im)).unwrap();
        }
    }
    s
}

fn dense_entries(s: &Statevector) -> Vec<(u128, C64)> {
    s.amplitudes().iter().enumerate().map(|(i, a)| (i as u128, *a)).collect()
}

fn run_cmd(
    file: &Path,
    size: &str,
    input: Option<&str>,
    state: Option<&Path>,
    steps: bool,
    out: &mut String,
) -> Result<(), Failure> {
    let p = load(file)?;
    let lengths = parse_sizes(&p, size)?;
    let interp = Interpreter::new(&p, &lengths).map_err(|e| failed(e.to_string()))?;
    let n = lengths.total();
    let (status, meter, reason, entries) = match state {
        Some(path) => {
            let sv = read_state(&read(path)?, n).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let o = interp.run(sv).map_err(|e| failed(e.to_string()))?;
            (o.status, o.steps, o.reason, dense_entries(&o.state))
        }
        None => {
            let s = basis_input(&lengths, input)?;
            let o = interp.run(s).map_err(|e| failed(e.to_string()))?;
            (o.status, o.steps, o.reason, o.state.sorted_entries())
        }
    };
    if status == Status::Bottom {
        return Err(failed(format!("error: {}", reason.unwrap_or_else(|| "the program errs".into()))));
    }
    out.push_str(&format_entries(&entries, n));
    if steps {
        writeln!(out, "steps {meter}").unwrap();
    }
    Ok(())
}

fn compile_cmd(
    file: &Path,
    size: &str,
    perm: PermMode,
    output: Option<&Path>,
    stats: bool,
    out: &mut String,
) -> Result<(), Failure> {
    let p = load(file)?;
    let lengths = parse_sizes(&p, size)?;
    let c = compile_report(&p, &lengths, perm).map_err(|e| failed(e.to_string()))?;
    if output.is_some() || !stats {
        emit(output, &serialize(&c.circuit), out)?;
    }
    if stats {
        let s = c.circuit.stats();
        writeln!(out, "{}\t{}\t{}\t{}\t{}", lengths.total(), s.size, s.depth, s.ancillas, c.keychain).unwrap();
    }
    Ok(())
}

fn simulate_cmd(file: &Path, input: Option<&str>, state: Option<&Path>, out: &mut String) -> Result<(), Failure> {
    let c = deserialize(&read(file)?).map_err(|e| failed(format!("{}: {e}", file.display())))?;
    let n = c.input_wires;
    let entries = match state {
        Some(path) => {
            let sv = read_state(&read(path)?, n).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            dense_entries(&simulate_circuit(&c, &sv).map_err(|e| failed(e.to_string()))?)
        }
        None => {
            let bits = match input {
                Some(b) => parse_bits(b).ok_or_else(|| usage(format!("bad input bits `{b}`")))?,
                None => vec![false; n],
            };
            if bits.len() != n {
                return Err(usage(format!("input has {} bits, the circuit has {n} input wires", bits.len())));
            }
            if n + c.ancilla_wires > 128 {
                return Err(usage("basis simulation is limited to 128 wires"));
            }
            let s = SparseState::from_bits(&bits);
            simulate_circuit_sparse(&c, &s).map_err(|e| failed(e.to_string()))?.sorted_entries()
        }
    };
    out.push_str(&format_entries(&entries, n));
    Ok(())
}

struct BenchRow {
    n: usize,
    meter: u64,
    size: usize,
    depth: usize,
    ancillas: usize,
    keychain: usize,
    millis: f64,
    verified: Option<bool>,
}

fn verify(p: &Program, lengths: &Lengths, c: &crate::circuit::Circuit, seed: u64) -> Option<bool> {
    let n = lengths.total();
    if n > VERIFY_MAX_WIRES {
        return None;
    }
    let interp = Interpreter::new(p, lengths).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let ok = (0..10).all(|_| {
        let input = Statevector::random(n, &mut rng);
        let want = interp.run(input.clone()).map(|o| o.state);
        let got = simulate_circuit(c, &input);
        matches!((want, got), (Ok(w), Ok(g)) if g.max_distance(&w) <= 1e-9)
    });
    Some(ok)
}

#[allow(clippy::too_many_arguments)]
fn bench(
    file: &Path,
    sizes: &[usize],
    var: Option<&str>,
    fixed: Option<&str>,
    perm: PermMode,
    verify_states: bool,
    no_time: bool,
    out: &mut String,
) -> Result<(), Failure> {
    let p = load(file)?;
    let swept = match var {
        Some(v) => v.to_string(),
        None => p.vars.first().cloned().ok_or_else(|| usage("the program has no variables to sweep"))?,
    };
    if !p.vars.contains(&swept) {
        return Err(usage(format!("`{swept}` is not a variable of the program")));
    }
    let fixed = match fixed {
        Some(t) => assignments(t, "size", |v| v.parse::<usize>().ok())?,
        None => BTreeMap::new(),
    };
    let seed = match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse::<u64>().map_err(|_| usage(format!("{SEED_VAR} must be an unsigned integer")))?,
        Err(_) => 0,
    };
    let rows: Vec<Result<BenchRow, Failure>> = sizes
        .par_iter()
        .map(|&k| {
            let mut map: BTreeMap<String, usize> = p.vars.iter().map(|v| (v.clone(), 1)).collect();
            map.extend(fixed.iter().map(|(k, v)| (k.clone(), *v)));
            map.insert(swept.clone(), k);
            let lengths = Lengths::new(&p.vars, &map).map_err(|e| usage(e.to_string()))?;
            let start = Instant::now();
            let c = compile_report(&p, &lengths, perm).map_err(|e| failed(format!("{swept}={k}: {e}")))?;
            let millis = start.elapsed().as_secs_f64() * 1e3;
            let s = c.circuit.stats();
            let verified = if verify_states {
                verify(&p, &lengths, &c.circuit, seed)
            } else {
                None
            };
            Ok(BenchRow {
                n: lengths.total(),
                meter: c.meter,
                size: s.size,
                depth: s.depth,
                ancillas: s.ancillas,
                keychain: c.keychain,
                millis,
                verified,
            })
        })
        .collect();
    let mut header = String::from("n\tmeter\tsize\tdepth\tancillas\tkeychain");
    if !no_time {
        header.push_str("\tms");
    }
    if verify_states {
        header.push_str("\tverified");
    }
    writeln!(out, "{header}").unwrap();
    let mut mismatch = false;
    for r in rows {
        let r = r?;
        write!(out, "{}\t{}\t{}\t{}\t{}\t{}", r.n, r.meter, r.size, r.depth, r.ancillas, r.keychain).unwrap();
        if !no_time {
            write!(out, "\t{:.1}", r.millis).unwrap();
        }
        if verify_states {
            let cell = match r.verified {
                Some(true) => "ok",
                Some(false) => "MISMATCH",
                None => "-",
            };
            mismatch |= r.verified == Some(false);
            write!(out, "\t{cell}").unwrap();
        }
        out.push('\n');
    }
    if mismatch {
        return Err(failed("circuit and interpreter disagree"));
    }
    Ok(())
}
