//! Circuit representation, metrics, simulation, the text format and
//! controlled permutations.
//!
//! The file format is documented in `docs/circuit-format.md`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::reduce_angle;
use crate::state::{mat_ph, mat_ry, mat_x, Control, QuantumState, SparseState, Statevector};

/// Tolerance on the norm of the part of the final state where some
/// ancilla is not |0⟩.
pub const ANCILLA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    X,
    Ph(f64),
    Ry(f64),
    Swap,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Ph(_) => "PH",
            GateKind::Ry(_) => "RY",
            GateKind::Swap => "SWAP",
        }
    }

    fn arity(self) -> usize {
        match self {
            GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn inverse(self) -> GateKind {
        match self {
            GateKind::Ph(t) => GateKind::Ph(reduce_angle(2.0 * PI - t)),
            GateKind::Ry(t) => GateKind::Ry(reduce_angle(-t)),
            k => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn x(target: usize, controls: Vec<Control>) -> Gate {
        Gate {
            kind: GateKind::X,
            targets: vec![target],
            controls,
        }
    }

    pub fn swap(a: usize, b: usize, controls: Vec<Control>) -> Gate {
        Gate {
            kind: GateKind::Swap,
            targets: vec![a, b],
            controls,
        }
    }

    pub fn wires(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().copied().chain(self.controls.iter().map(|c| c.wire))
    }

    pub fn inverse(&self) -> Gate {
        Gate {
            kind: self.kind.inverse(),
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    pub fn apply<S: QuantumState>(&self, state: &mut S) {
        match self.kind {
            GateKind::X => state.apply_1q(self.targets[0], &mat_x(), &self.controls),
            GateKind::Ph(t) => state.apply_1q(self.targets[0], &mat_ph(t), &self.controls),
            GateKind::Ry(t) => state.apply_1q(self.targets[0], &mat_ry(t), &self.controls),
            GateKind::Swap => state.apply_swap(self.targets[0], self.targets[1], &self.controls),
        }
    }

    /// Checks arity, wire range, distinct wires and the angle range.
    pub fn validate(&self, total_wires: usize) -> Result<(), String> {
        if self.targets.len() != self.kind.arity() {
            return Err(format!(
                "{} takes {} target(s), got {}",
                self.kind.name(),
                self.kind.arity(),
                self.targets.len()
            ));
        }
        let wires: Vec<usize> = self.wires().collect();
        if let Some(w) = wires.iter().find(|w| **w >= total_wires) {
            return Err(format!("wire {w} is out of range (circuit has {total_wires} wires)"));
        }
        for (i, a) in wires.iter().enumerate() {
            if wires[i + 1..].contains(a) {
                return Err(format!("wire {a} is used twice"));
            }
        }
        if let GateKind::Ph(t) | GateKind::Ry(t) = self.kind {
            if !(0.0..2.0 * PI).contains(&t) {
                return Err(format!("angle {t} is outside [0, 2pi)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum WireLabel {
    Input { var: String, ptr: usize },
    Ancilla { ancilla: usize },
}

impl fmt::Display for WireLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WireLabel::Input { var, ptr } => write!(f, "{var}[{ptr}]"),
            WireLabel::Ancilla { ancilla } => write!(f, "ancilla {ancilla}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub input_wires: usize,
    pub ancilla_wires: usize,
    pub gates: Vec<Gate>,
    pub wire_labels: Vec<WireLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitStats {
    pub size: usize,
    pub depth: usize,
    pub ancillas: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("input has {got} wires, circuit expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ancillas not restored: residual norm {0:.3e}")]
    AncillaNotRestored(f64),
    #[error("malformed circuit: {0}")]
    Format(String),
    #[error("malformed circuit: gate {index}: {message}")]
    Gate { index: usize, message: String },
}

impl Circuit {
    pub fn new(input_labels: Vec<WireLabel>) -> Circuit {
        Circuit {
            input_wires: input_labels.len(),
            ancilla_wires: 0,
            gates: Vec::new(),
            wire_labels: input_labels,
        }
    }

    pub fn total_wires(&self) -> usize {
        self.input_wires + self.ancilla_wires
    }

    /// Grows the ancilla register to at least `count` wires.
    pub fn reserve_ancillas(&mut self, count: usize) {
        while self.ancilla_wires < count {
            self.wire_labels.push(WireLabel::Ancilla {
                ancilla: self.ancilla_wires,
            });
            self.ancilla_wires += 1;
        }
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn depth(&self) -> usize {
        depth(&self.gates, self.total_wires())
    }

    pub fn stats(&self) -> CircuitStats {
        CircuitStats {
            size: self.size(),
            depth: self.depth(),
            ancillas: self.ancilla_wires,
        }
    }

    /// The adjoint circuit.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            ..self.clone()
        }
    }

    /// `other` after `self`, both on the same inputs.
    pub fn then(&self, other: &Circuit) -> Circuit {
        assert_eq!(self.input_wires, other.input_wires);
        let mut c = self.clone();
        c.reserve_ancillas(other.ancilla_wires);
        c.gates.extend(other.gates.iter().cloned());
        c
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.wire_labels.len() != self.total_wires() {
            return Err(CircuitError::Format(format!(
                "{} wire labels for {} wires",
                self.wire_labels.len(),
                self.total_wires()
            )));
        }
        for (index, g) in self.gates.iter().enumerate() {
            g.validate(self.total_wires()).map_err(|message| CircuitError::Gate { index, message })?;
        }
        Ok(())
    }

    pub fn apply<S: QuantumState>(&self, state: &mut S) {
        for g in &self.gates {
            g.apply(state);
        }
    }
}

/// Depth under as-soon-as-possible scheduling.
pub fn depth(gates: &[Gate], wires: usize) -> usize {
    let mut level = vec![0usize; wires];
    let mut d = 0;
    for g in gates {
        let t = 1 + g.wires().map(|w| level[w]).max().unwrap_or(0);
        for w in g.wires() {
            level[w] = t;
        }
        d = d.max(t);
    }
    d
}

/// Runs `c` on `input ⊗ |0…0⟩` and returns the input-register state,
/// failing if the ancillas do not return to |0⟩.
pub fn simulate_circuit(c: &Circuit, input: &Statevector) -> Result<Statevector, CircuitError> {
    use crate::state::QuantumState as _;
    if input.num_wires() != c.input_wires {
        return Err(CircuitError::DimensionMismatch {
            expected: c.input_wires,
            got: input.num_wires(),
        });
    }
    let a = c.ancilla_wires;
    let mut s = input.extend_zero(a);
    c.apply(&mut s);
    let amps = s.into_amplitudes();
    let low = (1usize << a) - 1;
    let residual: f64 = amps
        .iter()
        .enumerate()
        .filter(|(i, _)| i & low != 0)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > ANCILLA_TOLERANCE {
        return Err(CircuitError::AncillaNotRestored(residual));
    }
    let out: Vec<_> = amps.iter().step_by(1 << a).copied().collect();
    Ok(Statevector::from_amplitudes(out).unwrap())
}

/// Sparse counterpart of [`simulate_circuit`].
pub fn simulate_circuit_sparse(c: &Circuit, input: &SparseState) -> Result<SparseState, CircuitError> {
    if input.num_wires() != c.input_wires {
        return Err(CircuitError::DimensionMismatch {
            expected: c.input_wires,
            got: input.num_wires(),
        });
    }
    let a = c.ancilla_wires;
    let mut s = input.extend_zero(a);
    c.apply(&mut s);
    let low = if a == 0 { 0 } else { u128::MAX >> (128 - a) };
    let residual = s
        .entries()
        .filter(|(k, _)| k & low != 0)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > ANCILLA_TOLERANCE {
        return Err(CircuitError::AncillaNotRestored(residual));
    }
    let mut out = SparseState::empty(c.input_wires);
    for (k, v) in s.entries() {
        if k & low == 0 {
            out.set(k >> a, v);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Text format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRecord {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    targets: Vec<usize>,
    controls: Vec<Control>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    input_wires: usize,
    ancilla_wires: usize,
    wire_labels: Vec<serde_json::Value>,
    gates: Vec<serde_json::Value>,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> GateRecord {
        let theta = match g.kind {
            GateKind::Ph(t) | GateKind::Ry(t) => Some(t),
            _ => None,
        };
        GateRecord {
            kind: g.kind.name().to_string(),
            theta,
            targets: g.targets.clone(),
            controls: g.controls.clone(),
        }
    }
}

impl TryFrom<GateRecord> for Gate {
    type Error = String;

    fn try_from(r: GateRecord) -> Result<Gate, String> {
        let kind = match (r.kind.as_str(), r.theta) {
            ("X", None) => GateKind::X,
            ("SWAP", None) => GateKind::Swap,
            ("PH", Some(t)) => GateKind::Ph(t),
            ("RY", Some(t)) => GateKind::Ry(t),
            ("X" | "SWAP", Some(_)) => return Err(format!("{} takes no theta", r.kind)),
            ("PH" | "RY", None) => return Err(format!("{} needs theta", r.kind)),
            (other, _) => return Err(format!("unknown gate kind `{other}`")),
        };
        Ok(Gate {
            kind,
            targets: r.targets,
            controls: r.controls,
        })
    }
}

/// Writes the circuit as a JSON document with one gate per line.
pub fn serialize(c: &Circuit) -> String {
    let labels = serde_json::to_string(&c.wire_labels).expect("labels serialize");
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("\"input_wires\": {},\n", c.input_wires));
    out.push_str(&format!("\"ancilla_wires\": {},\n", c.ancilla_wires));
    out.push_str(&format!("\"wire_labels\": {labels},\n"));
    if c.gates.is_empty() {
        out.push_str("\"gates\": []\n");
    } else {
        out.push_str("\"gates\": [\n");
        for (i, g) in c.gates.iter().enumerate() {
            out.push_str(&serde_json::to_string(&GateRecord::from(g)).expect("gate serializes"));
            out.push_str(if i + 1 < c.gates.len() { ",\n" } else { "\n" });
        }
        out.push_str("]\n");
    }
    out.push_str("}\n");
    out
}

pub fn deserialize(text: &str) -> Result<Circuit, CircuitError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| CircuitError::Format(e.to_string()))?;
    let mut wire_labels = Vec::with_capacity(doc.wire_labels.len());
    for (i, v) in doc.wire_labels.into_iter().enumerate() {
        let label: WireLabel =
            serde_json::from_value(v).map_err(|e| CircuitError::Format(format!("wire label {i}: {e}")))?;
        wire_labels.push(label);
    }
    let total = doc.input_wires + doc.ancilla_wires;
    if wire_labels.len() != total {
        return Err(CircuitError::Format(format!("{} wire labels for {} wires", wire_labels.len(), total)));
    }
    let mut gates = Vec::with_capacity(doc.gates.len());
    for (index, v) in doc.gates.into_iter().enumerate() {
        let gate_err = |message: String| CircuitError::Gate { index, message };
        let rec: GateRecord = serde_json::from_value(v).map_err(|e| gate_err(e.to_string()))?;
        let g = Gate::try_from(rec).map_err(gate_err)?;
        g.validate(total).map_err(gate_err)?;
        gates.push(g);
    }
    Ok(Circuit {
        input_wires: doc.input_wires,
        ancilla_wires: doc.ancilla_wires,
        gates,
        wire_labels,
    })
}

// ---------------------------------------------------------------------------
// Ancillas and controlled permutations

/// Hands out ancilla wires, reusing released ones last-in first-out.
#[derive(Debug, Clone)]
pub struct AncillaPool {
    base: usize,
    free: Vec<usize>,
    allocated: usize,
    in_use: usize,
}

impl AncillaPool {
    /// Ancilla `k` is wire `base + k`.
    pub fn new(base: usize) -> AncillaPool {
        AncillaPool {
            base,
            free: Vec::new(),
            allocated: 0,
            in_use: 0,
        }
    }

    /// A wire that is currently |0⟩.
    pub fn alloc(&mut self) -> usize {
        self.in_use += 1;
        match self.free.pop() {
            Some(w) => w,
            None => {
                self.allocated += 1;
                self.base + self.allocated - 1
            }
        }
    }

    /// Returns a wire; the caller guarantees it is back to |0⟩.
    pub fn release(&mut self, wire: usize) {
        debug_assert!(wire >= self.base && wire < self.base + self.allocated);
        debug_assert!(!self.free.contains(&wire));
        self.in_use -= 1;
        self.free.push(wire);
    }

    /// Number of distinct ancilla wires ever handed out.
    pub fn high_water(&self) -> usize {
        self.allocated
    }

    pub fn in_use(&self) -> usize {
        self.in_use
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermMode {
    /// One Fredkin per transposition, all on the same control.
    #[default]
    Compact,
    /// Control fanned out to ancilla copies; one Fredkin layer per round.
    LogDepth,
}

impl std::str::FromStr for PermMode {
    type Err = String;

    fn from_str(s: &str) -> Result<PermMode, String> {
        match s {
            "compact" => Ok(PermMode::Compact),
            "logdepth" => Ok(PermMode::LogDepth),
            other => Err(format!("unknown permutation mode `{other}` (expected compact or logdepth)")),
        }
    }
}

/// Splits `perm` into two rounds of disjoint transpositions whose
/// composition (first round, then second) sends position `i` to
/// `perm[i]`.
pub fn transposition_rounds(perm: &[usize]) -> [Vec<(usize, usize)>; 2] {
    let k = perm.len();
    let mut seen = vec![false; k];
    let mut rounds = [Vec::new(), Vec::new()];
    for start in 0..k {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut x = perm[start];
        while x != start {
            seen[x] = true;
            cycle.push(x);
            x = perm[x];
        }
        let m = cycle.len();
        if m == 1 {
            continue;
        }
        // Reflections i ↦ -i and i ↦ 1 - i; their product is i ↦ i + 1.
        for (r, shift) in [(0usize, 0usize), (1, 1)] {
            for i in 0..m {
                let j = (shift + m - i) % m;
                if i < j {
                    rounds[r].push((cycle[i], cycle[j]));
                }
            }
        }
    }
    rounds
}

/// Gates applying the wire permutation `perm` (content of `wires[i]` moves
/// to `wires[perm[i]]`) when `control` fires. In log-depth mode the fan-out
/// copies are taken from `pool` and returned clean.
pub fn build_controlled_permutation(
    wires: &[usize],
    perm: &[usize],
    control: Control,
    mode: PermMode,
    pool: &mut AncillaPool,
) -> Vec<Gate> {
    assert_eq!(wires.len(), perm.len());
    debug_assert!(!wires.contains(&control.wire));
    let rounds = transposition_rounds(perm);
    let mut gates = Vec::new();
    match mode {
        PermMode::Compact => {
            for round in &rounds {
                for &(a, b) in round {
                    gates.push(Gate::swap(wires[a], wires[b], vec![control]));
                }
            }
        }
        PermMode::LogDepth => {
            let m = rounds.iter().map(Vec::len).max().unwrap_or(0);
            if m == 0 {
                return gates;
            }
            let copies: Vec<usize> = (0..m).map(|_| pool.alloc()).collect();
            let mut fan = Vec::new();
            let mut sources = vec![control];
            let mut made = 0;
            while made < m {
                let mut next = Vec::new();
                for src in &sources {
                    if made == m {
                        break;
                    }
                    fan.push(Gate::x(copies[made], vec![*src]));
                    next.push(Control::pos(copies[made]));
                    made += 1;
                }
                sources.extend(next);
            }
            gates.extend(fan.iter().cloned());
            for round in &rounds {
                for (i, &(a, b)) in round.iter().enumerate() {
                    gates.push(Gate::swap(wires[a], wires[b], vec![Control::pos(copies[i])]));
                }
            }
            gates.extend(fan.into_iter().rev());
            for w in copies.into_iter().rev() {
                pool.release(w);
            }
        }
    }
    gates
}
