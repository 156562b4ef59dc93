//! Gate-level circuit representation, a minimal text format, and construction
//! utilities (barrier-delimited repetition, SWAP decomposition).
//!
//! Durations are integer nanoseconds throughout so that duration-preservation
//! checks are exact. Phase gates and barriers take zero time (virtual-Z
//! convention on superconducting hardware).

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// A logical circuit qubit. Physical qubits are plain indices into a
/// [`crate::device::DeviceModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Qubit(pub u32);

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// The gate set: arity-1 gates, CNOT/SWAP, timed delays, barriers, measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    /// Phase rotation in radians; zero duration.
    Phase(f64),
    Cnot,
    Swap,
    /// Explicit wait in nanoseconds. Counts as busy time when scheduled.
    Delay(u64),
    /// Synchronization point. An empty qubit list means all qubits.
    Barrier,
    Measure,
}

impl GateKind {
    /// Expected operand count; `None` for barriers (any arity).
    pub fn arity(&self) -> Option<usize> {
        match self {
            GateKind::Cnot | GateKind::Swap => Some(2),
            GateKind::Barrier => None,
            _ => Some(1),
        }
    }

    /// Mnemonic used by the text format.
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Phase(_) => "p",
            GateKind::Cnot => "cx",
            GateKind::Swap => "swap",
            GateKind::Delay(_) => "delay",
            GateKind::Barrier => "barrier",
            GateKind::Measure => "measure",
        }
    }
}

/// One gate application with its operands and an optional label such as
/// `dd-pulse` or `spectator-cnot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub kind: GateKind,
    pub qubits: Vec<Qubit>,
    pub tag: Option<String>,
}

impl Instruction {
    pub fn new(kind: GateKind, qubits: Vec<Qubit>) -> Self {
        Instruction { kind, qubits, tag: None }
    }

    pub fn tagged(kind: GateKind, qubits: Vec<Qubit>, tag: &str) -> Self {
        Instruction { kind, qubits, tag: Some(tag.to_string()) }
    }
}

/// An ordered gate list over `n_qubits` logical qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: u32,
    pub instructions: Vec<Instruction>,
    /// The qubit whose measurement outcome the experiments track, if any.
    /// Not part of the text format; set programmatically or via CLI flags.
    pub main_qubit: Option<Qubit>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("qubit {qubit} out of range for {n_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: u32, n_qubits: u32 },
    #[error("{kind} expects {expected} qubit(s), got {got}")]
    ArityMismatch { kind: String, expected: usize, got: usize },
    #[error("duplicate qubit operand q{0}")]
    DuplicateQubit(u32),
    #[error("qubit q{0} measured more than once")]
    DoubleMeasure(u32),
    #[error("expected exactly one barrier-delimited region, found {barriers} barrier(s)")]
    BadBarrierRegion { barriers: usize },
    #[error("repetition count must be at least 1")]
    ZeroRepetitions,
    #[error("non-finite phase angle")]
    NonFinitePhase,
    #[error("negative delay duration")]
    NegativeDelay,
}

impl Circuit {
    /// An empty circuit over `n_qubits` qubits.
    pub fn new(n_qubits: u32) -> Self {
        Circuit { n_qubits, instructions: Vec::new(), main_qubit: None }
    }

    /// Appends an instruction after validating it against this circuit.
    pub fn push(&mut self, instruction: Instruction) -> Result<(), CircuitError> {
        self.check_instruction(&instruction)?;
        if instruction.kind == GateKind::Measure {
            let q = instruction.qubits[0];
            if self.instructions.iter().any(|i| i.kind == GateKind::Measure && i.qubits[0] == q) {
                return Err(CircuitError::DoubleMeasure(q.0));
            }
        }
        self.instructions.push(instruction);
        Ok(())
    }

    fn check_instruction(&self, instruction: &Instruction) -> Result<(), CircuitError> {
        if let Some(expected) = instruction.kind.arity() {
            if instruction.qubits.len() != expected {
                return Err(CircuitError::ArityMismatch {
                    kind: instruction.kind.name().to_string(),
                    expected,
                    got: instruction.qubits.len(),
                });
            }
        }
        if let GateKind::Phase(angle) = instruction.kind {
            if !angle.is_finite() {
                return Err(CircuitError::NonFinitePhase);
            }
        }
        for (i, q) in instruction.qubits.iter().enumerate() {
            if q.0 >= self.n_qubits {
                return Err(CircuitError::QubitOutOfRange { qubit: q.0, n_qubits: self.n_qubits });
            }
            if instruction.qubits[..i].contains(q) {
                return Err(CircuitError::DuplicateQubit(q.0));
            }
        }
        Ok(())
    }

    /// Validates every instruction plus the one-measurement-per-qubit rule.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut measured = Vec::new();
        for instruction in &self.instructions {
            self.check_instruction(instruction)?;
            if instruction.kind == GateKind::Measure {
                let q = instruction.qubits[0];
                if measured.contains(&q) {
                    return Err(CircuitError::DoubleMeasure(q.0));
                }
                measured.push(q);
            }
        }
        Ok(())
    }
}

/// Parses the line-oriented circuit text format.
///
/// Grammar: a `qubits N` header, then one instruction per line from
/// `h qI | x qI | p <radians> qI | cx qI qJ | swap qI qJ | delay <ns> qI |
/// barrier [qI ...] | measure qI`, with `#` comments and an optional trailing
/// `@tag=<word>`.
pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let err = |line: usize, msg: String| CircuitError::Parse { line, msg };
    let mut circuit: Option<Circuit> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }

        // Optional trailing tag.
        let (body, tag) = match line.rfind("@tag=") {
            Some(pos) => {
                let tag = line[pos + 5..].trim();
                if tag.is_empty() || tag.contains(char::is_whitespace) {
                    return Err(err(line_no, "tag must be a single word".into()));
                }
                (line[..pos].trim(), Some(tag.to_string()))
            }
            None => (line, None),
        };

        let mut parts = body.split_whitespace();
        let head = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();

        if head == "qubits" {
            if circuit.is_some() {
                return Err(err(line_no, "duplicate qubits header".into()));
            }
            let n: u32 = rest
                .first()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line_no, "expected `qubits N`".into()))?;
            if rest.len() != 1 {
                return Err(err(line_no, "expected `qubits N`".into()));
            }
            circuit = Some(Circuit::new(n));
            continue;
        }

        let circuit = circuit
            .as_mut()
            .ok_or_else(|| err(line_no, "missing `qubits N` header".into()))?;

        let parse_qubit = |s: &str| -> Result<Qubit, CircuitError> {
            s.strip_prefix('q')
                .and_then(|d| d.parse::<u32>().ok())
                .map(Qubit)
                .ok_or_else(|| err(line_no, format!("expected qubit operand, got `{s}`")))
        };

        let (kind, operands): (GateKind, &[&str]) = match head {
            "h" => (GateKind::H, &rest),
            "x" => (GateKind::X, &rest),
            "p" => {
                let angle: f64 = rest
                    .first()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(line_no, "expected `p <radians> qI`".into()))?;
                (GateKind::Phase(angle), &rest[1..])
            }
            "cx" => (GateKind::Cnot, &rest),
            "swap" => (GateKind::Swap, &rest),
            "delay" => {
                let ns: u64 = rest
                    .first()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(line_no, "expected `delay <ns> qI`".into()))?;
                (GateKind::Delay(ns), &rest[1..])
            }
            "barrier" => (GateKind::Barrier, &rest),
            "measure" => (GateKind::Measure, &rest),
            other => return Err(err(line_no, format!("unknown gate `{other}`"))),
        };

        let qubits = operands.iter().map(|s| parse_qubit(s)).collect::<Result<Vec<_>, _>>()?;
        let mut instruction = Instruction::new(kind, qubits);
        instruction.tag = tag;
        circuit
            .push(instruction)
            .map_err(|e| err(line_no, e.to_string()))?;
    }

    circuit.ok_or(CircuitError::Parse { line: 0, msg: "missing `qubits N` header".into() })
}

/// Emits the text format. `parse_circuit(render_circuit(c))` structurally
/// equals `c` up to the untextual `main_qubit` field.
pub fn render_circuit(circuit: &Circuit) -> String {
    let mut out = format!("qubits {}\n", circuit.n_qubits);
    for instruction in &circuit.instructions {
        let mut line = String::from(instruction.kind.name());
        match &instruction.kind {
            GateKind::Phase(angle) => line.push_str(&format!(" {angle}")),
            GateKind::Delay(ns) => line.push_str(&format!(" {ns}")),
            _ => {}
        }
        for q in &instruction.qubits {
            line.push_str(&format!(" {q}"));
        }
        if let Some(tag) = &instruction.tag {
            line.push_str(&format!(" @tag={tag}"));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Replicates the single barrier-delimited region `k` times in place,
/// separating copies with barriers so that each copy schedules as its own
/// synchronized block. Instructions outside the barriers appear once.
pub fn repeat_segment(circuit: &Circuit, k: u32) -> Result<Circuit, CircuitError> {
    if k == 0 {
        return Err(CircuitError::ZeroRepetitions);
    }
    let barrier_positions: Vec<usize> = circuit
        .instructions
        .iter()
        .enumerate()
        .filter(|(_, i)| i.kind == GateKind::Barrier)
        .map(|(p, _)| p)
        .collect();
    if barrier_positions.len() != 2 {
        return Err(CircuitError::BadBarrierRegion { barriers: barrier_positions.len() });
    }
    let (open, close) = (barrier_positions[0], barrier_positions[1]);
    let region = &circuit.instructions[open + 1..close];
    let separator = circuit.instructions[open].clone();

    let mut out = Circuit::new(circuit.n_qubits);
    out.main_qubit = circuit.main_qubit;
    out.instructions.extend_from_slice(&circuit.instructions[..=open]);
    for rep in 0..k {
        if rep > 0 {
            out.instructions.push(separator.clone());
        }
        out.instructions.extend_from_slice(region);
    }
    out.instructions.extend_from_slice(&circuit.instructions[close..]);
    Ok(out)
}

/// Replaces every SWAP(a, b) by the cascade CNOT(a,b), CNOT(b,a), CNOT(a,b).
pub fn decompose_swap(circuit: &Circuit) -> Circuit {
    let mut out = Circuit::new(circuit.n_qubits);
    out.main_qubit = circuit.main_qubit;
    for instruction in &circuit.instructions {
        if instruction.kind == GateKind::Swap {
            let (a, b) = (instruction.qubits[0], instruction.qubits[1]);
            for (c, t) in [(a, b), (b, a), (a, b)] {
                let mut cx = Instruction::new(GateKind::Cnot, vec![c, t]);
                cx.tag = instruction.tag.clone();
                out.instructions.push(cx);
            }
        } else {
            out.instructions.push(instruction.clone());
        }
    }
    out
}
