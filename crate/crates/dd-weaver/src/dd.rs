//! CPMG sequence construction and schedule rewriting: fill idle windows with
//! X-X pulse pairs under one of five strategies, or drive strategy choice from
//! a policy keyed on window class and shape.

use crate::analysis::{classify_window, segment_window, IdleClass, SegmentCause, WindowSegments};
use crate::circuit::GateKind;
use crate::device::DeviceModel;
use crate::schedule::{idle_windows, IdleWindow, Schedule, TimedInstruction};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Where the pulse pair sits inside its fill interval.
///
/// `Symmetric` splits the free time 1:2:1 around the pulses, which refocuses a
/// static detuning exactly; `EndAligned` packs both pulses at the end and is
/// kept for sensitivity studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PulsePlacement {
    #[default]
    Symmetric,
    EndAligned,
}

/// Pass configuration: pulse placement and CPMG repetitions per fill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdConfig {
    pub placement: PulsePlacement,
    /// X-X cycles per filled interval. One cycle per fill is the default;
    /// tuning the count is out of scope.
    pub repetitions: u32,
}

impl Default for DdConfig {
    fn default() -> Self {
        DdConfig { placement: PulsePlacement::Symmetric, repetitions: 1 }
    }
}

/// A built CPMG sequence: pulse start offsets (ns, relative to the interval)
/// over a total span, with each pulse `pulse_ns` long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdSequence {
    pub pulses: Vec<u64>,
    pub pulse_ns: u64,
    pub total: u64,
}

/// The insertion schemes: fill nothing, the whole window, only gate spans,
/// only free spans, every segment independently, or one fill per constituent
/// CNOT of a merged gate span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Baseline,
    SingleDd,
    ProtectGateOnly,
    ProtectDelayOnly,
    PerSegmentDd,
    PerCnotDd,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::SingleDd => "single",
            Strategy::ProtectGateOnly => "gate_only",
            Strategy::ProtectDelayOnly => "delay_only",
            Strategy::PerSegmentDd => "per_segment",
            Strategy::PerCnotDd => "per_cnot",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = DdError;

    fn from_str(s: &str) -> Result<Self, DdError> {
        match s {
            "baseline" => Ok(Strategy::Baseline),
            "single" => Ok(Strategy::SingleDd),
            "gate_only" => Ok(Strategy::ProtectGateOnly),
            "delay_only" => Ok(Strategy::ProtectDelayOnly),
            "per_segment" => Ok(Strategy::PerSegmentDd),
            "per_cnot" => Ok(Strategy::PerCnotDd),
            other => Err(DdError::UnknownStrategy(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DdError {
    #[error("window of {duration} ns too short for {needed} ns of pulses")]
    WindowTooShort { duration: u64, needed: u64 },
    #[error("strategy {strategy} not applicable: {msg}")]
    Inapplicable { strategy: Strategy, msg: String },
    #[error("window [{start}, {end}) on qubit {qubit} is not idle in this schedule")]
    ForeignWindow { qubit: usize, start: u64, end: u64 },
    #[error("zero repetitions requested")]
    ZeroRepetitions,
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("policy line {line}: {msg}")]
    PolicyParse { line: usize, msg: String },
}

/// Builds the pulse layout for one fill interval of `duration` ns.
///
/// With symmetric placement the free time `duration - 2*t_p` is split 1:2:1
/// around the two pulses; integer remainders go to the trailing gap. Multiple
/// repetitions split the interval into equal chunks, each carrying its own
/// pair.
pub fn cpmg_fill(
    duration: u64,
    pulse_ns: u64,
    placement: PulsePlacement,
    repetitions: u32,
) -> Result<DdSequence, DdError> {
    if repetitions == 0 {
        return Err(DdError::ZeroRepetitions);
    }
    let reps = repetitions as u64;
    let needed = 2 * reps * pulse_ns;
    if duration < needed || duration / reps < 2 * pulse_ns {
        return Err(DdError::WindowTooShort { duration, needed });
    }

    let chunk = duration / reps;
    let mut pulses = Vec::with_capacity(2 * repetitions as usize);
    for r in 0..reps {
        let base = r * chunk;
        let len = if r == reps - 1 { duration - base } else { chunk };
        let free = len - 2 * pulse_ns;
        match placement {
            PulsePlacement::Symmetric => {
                let lead = free / 4;
                let mid = free / 2;
                pulses.push(base + lead);
                pulses.push(base + lead + pulse_ns + mid);
            }
            PulsePlacement::EndAligned => {
                pulses.push(base + len - 2 * pulse_ns);
                pulses.push(base + len - pulse_ns);
            }
        }
    }
    Ok(DdSequence { pulses, pulse_ns, total: duration })
}

/// Per-window outcome of an insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertOutcome {
    pub strategy: Strategy,
    pub pulses_inserted: usize,
    pub warnings: Vec<String>,
}

fn fill_intervals(
    window: &IdleWindow,
    segments: &WindowSegments,
    strategy: Strategy,
) -> Result<Vec<(u64, u64)>, DdError> {
    let span = |s: &crate::analysis::Segment| (s.start, s.start + s.duration);
    match strategy {
        Strategy::Baseline => Ok(vec![]),
        Strategy::SingleDd => Ok(vec![(window.start, window.end)]),
        Strategy::ProtectGateOnly => {
            Ok(segments.segments.iter().filter(|s| s.is_gate()).map(span).collect())
        }
        Strategy::ProtectDelayOnly => {
            Ok(segments.segments.iter().filter(|s| !s.is_gate()).map(span).collect())
        }
        Strategy::PerSegmentDd => {
            if segments.segments.len() < 2 {
                return Err(DdError::Inapplicable {
                    strategy,
                    msg: "needs at least two segments".into(),
                });
            }
            Ok(segments.segments.iter().map(span).collect())
        }
        Strategy::PerCnotDd => {
            let mut intervals = Vec::new();
            let mut found_merged = false;
            for segment in segments.gate_spans() {
                if let SegmentCause::Gate { cnots } = &segment.cause {
                    if cnots.len() >= 2 {
                        found_merged = true;
                    }
                    for t in cnots {
                        let s = t.start.max(window.start);
                        let e = t.end().min(window.end);
                        if e > s {
                            intervals.push((s, e));
                        }
                    }
                }
            }
            if !found_merged {
                return Err(DdError::Inapplicable {
                    strategy,
                    msg: "needs a gate span of two or more merged CNOTs".into(),
                });
            }
            intervals.sort_unstable();
            if intervals.windows(2).any(|p| p[1].0 < p[0].1) {
                return Err(DdError::Inapplicable {
                    strategy,
                    msg: "constituent CNOTs overlap in time".into(),
                });
            }
            Ok(intervals)
        }
    }
}

/// Fills one idle window of `schedule` according to `strategy`. Every inserted
/// X pulse is tagged `dd-pulse`; all other instructions keep their start times
/// and the makespan is unchanged. A sub-fill too short for its pulses degrades
/// to a no-op with a warning.
pub fn insert_dd(
    schedule: &Schedule,
    window: &IdleWindow,
    strategy: Strategy,
    config: &DdConfig,
    device: &DeviceModel,
) -> Result<(Schedule, InsertOutcome), DdError> {
    // The window must be idle here: no busy instruction on its qubit may
    // intersect it.
    let clash = schedule
        .busy_on(window.qubit)
        .iter()
        .any(|t| t.overlaps(window.start, window.end));
    if clash {
        return Err(DdError::ForeignWindow {
            qubit: window.qubit,
            start: window.start,
            end: window.end,
        });
    }

    let segments = segment_window(window, device.pulse_ns);
    let intervals = fill_intervals(window, &segments, strategy)?;

    let mut out = schedule.clone();
    let mut warnings = Vec::new();
    let mut inserted = 0usize;
    for (start, end) in intervals {
        match cpmg_fill(end - start, device.pulse_ns, config.placement, config.repetitions) {
            Ok(seq) => {
                for offset in seq.pulses {
                    out.timed.push(TimedInstruction {
                        kind: GateKind::X,
                        qubits: vec![window.qubit],
                        tag: Some("dd-pulse".to_string()),
                        start: start + offset,
                        duration: device.pulse_ns,
                    });
                    inserted += 1;
                }
            }
            Err(DdError::WindowTooShort { duration, needed }) => {
                warnings.push(format!(
                    "qubit {} [{start}, {end}): sub-fill of {duration} ns too short for {needed} ns of pulses, skipped",
                    window.qubit
                ));
            }
            Err(e) => return Err(e),
        }
    }
    out.timed.sort_by_key(|t| t.start);
    Ok((out, InsertOutcome { strategy, pulses_inserted: inserted, warnings }))
}

/// One class/shape pattern of a policy rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassPattern {
    Crosstalk,
    Idle,
    Any,
}

/// Window-shape pattern: multi-segment, a lone gate span, a lone free span,
/// or anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapePattern {
    Multi,
    GateOnly,
    FreeOnly,
    Any,
}

/// First-match rule set mapping (class, shape) to a strategy. Unmatched
/// windows fall back to a single fill so the mapping stays total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub rules: Vec<(ClassPattern, ShapePattern, Strategy)>,
}

impl Policy {
    /// The guideline rule set: fill gate and delay spans separately for a
    /// crosstalk-idle window with both, fill once across a pure gate span
    /// (a SWAP or CNOT cascade), and fill idle-idle windows once overall.
    pub fn guidelines() -> Self {
        Policy {
            rules: vec![
                (ClassPattern::Crosstalk, ShapePattern::Multi, Strategy::PerSegmentDd),
                (ClassPattern::Crosstalk, ShapePattern::GateOnly, Strategy::SingleDd),
                (ClassPattern::Idle, ShapePattern::Any, Strategy::SingleDd),
                (ClassPattern::Any, ShapePattern::Any, Strategy::SingleDd),
            ],
        }
    }

    /// Uniform policy applying one strategy everywhere.
    pub fn uniform(strategy: Strategy) -> Self {
        Policy { rules: vec![(ClassPattern::Any, ShapePattern::Any, strategy)] }
    }

    pub fn select(&self, class: IdleClass, segments: &WindowSegments) -> Strategy {
        let shape = if segments.segments.len() >= 2 {
            ShapePattern::Multi
        } else if segments.segments.first().is_some_and(|s| s.is_gate()) {
            ShapePattern::GateOnly
        } else {
            ShapePattern::FreeOnly
        };
        for &(class_pat, shape_pat, strategy) in &self.rules {
            let class_ok = match class_pat {
                ClassPattern::Crosstalk => class == IdleClass::CrosstalkIdle,
                ClassPattern::Idle => class == IdleClass::IdleIdle,
                ClassPattern::Any => true,
            };
            let shape_ok = match shape_pat {
                ShapePattern::Multi => shape == ShapePattern::Multi,
                ShapePattern::GateOnly => shape == ShapePattern::GateOnly,
                ShapePattern::FreeOnly => shape == ShapePattern::FreeOnly,
                ShapePattern::Any => true,
            };
            if class_ok && shape_ok {
                return strategy;
            }
        }
        Strategy::SingleDd
    }
}

/// Parses the policy file format: one rule per line,
/// `<crosstalk|idle|*> <multi|gate_only|free_only|*> -> <strategy>`,
/// with `#` comments.
pub fn parse_policy(text: &str) -> Result<Policy, DdError> {
    let mut rules = Vec::new();
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
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| DdError::PolicyParse {
            line: line_no,
            msg: "expected `<class> <shape> -> <strategy>`".into(),
        })?;
        let mut lhs_parts = lhs.split_whitespace();
        let class = match lhs_parts.next() {
            Some("crosstalk") => ClassPattern::Crosstalk,
            Some("idle") => ClassPattern::Idle,
            Some("*") => ClassPattern::Any,
            other => {
                return Err(DdError::PolicyParse {
                    line: line_no,
                    msg: format!("unknown class pattern {other:?}"),
                })
            }
        };
        let shape = match lhs_parts.next() {
            Some("multi") => ShapePattern::Multi,
            Some("gate_only") => ShapePattern::GateOnly,
            Some("free_only") => ShapePattern::FreeOnly,
            Some("*") => ShapePattern::Any,
            other => {
                return Err(DdError::PolicyParse {
                    line: line_no,
                    msg: format!("unknown shape pattern {other:?}"),
                })
            }
        };
        if lhs_parts.next().is_some() {
            return Err(DdError::PolicyParse { line: line_no, msg: "too many pattern fields".into() });
        }
        let strategy = Strategy::from_str(rhs.trim()).map_err(|e| DdError::PolicyParse {
            line: line_no,
            msg: e.to_string(),
        })?;
        rules.push((class, shape, strategy));
    }
    Ok(Policy { rules })
}

/// Per-window record of what the policy pass did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub qubit: usize,
    pub start: u64,
    pub end: u64,
    pub class: IdleClass,
    pub shape: String,
    pub strategy: Strategy,
    pub pulses_inserted: usize,
    pub warnings: Vec<String>,
}

/// Classifies, segments, and fills every idle window of `schedule` according
/// to `policy`. Strategies that do not apply to a window's shape degrade to a
/// single fill; windows too short for any pulses stay baseline. Start times of
/// non-DD instructions and the makespan are preserved.
pub fn apply_policy(
    schedule: &Schedule,
    policy: &Policy,
    config: &DdConfig,
    device: &DeviceModel,
) -> (Schedule, Vec<PolicyDecision>) {
    let mut out = schedule.clone();
    let mut decisions = Vec::new();
    for qubit in schedule.mapped_qubits.clone() {
        for window in idle_windows(schedule, qubit) {
            let class = classify_window(&window, device);
            let segments = segment_window(&window, device.pulse_ns);
            let mut strategy = policy.select(class, &segments);
            let mut extra_warnings = Vec::new();

            let mut result = insert_dd(&out, &window, strategy, config, device);
            if let Err(DdError::Inapplicable { .. }) = result {
                extra_warnings.push(format!(
                    "qubit {qubit} [{}, {}): {strategy} not applicable, using single fill",
                    window.start, window.end
                ));
                strategy = Strategy::SingleDd;
                result = insert_dd(&out, &window, strategy, config, device);
            }
            let (filled, outcome) = result.expect("single fill cannot be inapplicable");
            out = filled;
            let mut warnings = extra_warnings;
            warnings.extend(outcome.warnings);
            decisions.push(PolicyDecision {
                qubit,
                start: window.start,
                end: window.end,
                class,
                shape: segments.shape(),
                strategy: if outcome.pulses_inserted == 0 && strategy != Strategy::Baseline {
                    // Nothing fit; the window stayed bare.
                    Strategy::Baseline
                } else {
                    strategy
                },
                pulses_inserted: outcome.pulses_inserted,
                warnings,
            });
        }
    }
    (out, decisions)
}
