//! Classification of idle windows as crosstalk-idle or idle-idle, and
//! segmentation of a window by cause (concurrent two-qubit-gate span versus
//! free span) for strategy selection.

use crate::device::{distance, DeviceModel};
use crate::schedule::{IdleWindow, Schedule, TimedInstruction};
use crate::circuit::GateKind;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Whether an idle window is exposed to crosstalk from an adjacent two-qubit
/// gate. Only distance-1 CNOTs count; parallel single-qubit gates are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdleClass {
    CrosstalkIdle,
    IdleIdle,
}

impl fmt::Display for IdleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdleClass::CrosstalkIdle => write!(f, "crosstalk-idle"),
            IdleClass::IdleIdle => write!(f, "idle-idle"),
        }
    }
}

/// What occupies a stretch of an idle window on the other qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SegmentCause {
    /// Covered by one or more back-to-back concurrent CNOTs.
    Gate { cnots: Vec<TimedInstruction> },
    /// No concurrent CNOT coverage.
    Free,
}

/// One span of a segmented window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: u64,
    pub duration: u64,
    pub cause: SegmentCause,
}

impl Segment {
    pub fn is_gate(&self) -> bool {
        matches!(self.cause, SegmentCause::Gate { .. })
    }
}

/// Ordered partition of a window into gate spans and free spans; durations sum
/// exactly to the window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSegments {
    pub segments: Vec<Segment>,
}

impl WindowSegments {
    pub fn gate_spans(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.is_gate())
    }

    pub fn total(&self) -> u64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Compact shape descriptor, e.g. `gate:300;free:300`.
    pub fn shape(&self) -> String {
        self.segments
            .iter()
            .map(|s| {
                let kind = if s.is_gate() { "gate" } else { "free" };
                format!("{kind}:{}", s.duration)
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Per-window crosstalk diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub qubit: usize,
    pub start: u64,
    pub end: u64,
    pub class: IdleClass,
    /// Device edges hosting a concurrent CNOT adjacent to the idle qubit.
    pub offending_edges: Vec<(usize, usize)>,
    /// Hop distance from the idle qubit to each concurrent CNOT (closest operand).
    pub distances: Vec<u32>,
    pub segments: WindowSegments,
}

/// Full report over the idle windows of selected qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkReport {
    pub windows: Vec<WindowReport>,
}

fn concurrent_cnots(window: &IdleWindow) -> Vec<&TimedInstruction> {
    window.concurrent.iter().filter(|t| t.kind == GateKind::Cnot).collect()
}

fn min_distance_to(device: &DeviceModel, from: usize, cnot: &TimedInstruction) -> Option<u32> {
    cnot.qubits
        .iter()
        .filter_map(|&q| distance(device, from, q).ok())
        .min()
}

/// `CrosstalkIdle` iff some concurrent CNOT acts on a neighbor of the idle
/// qubit. When CNOTs at distance 1 and further coexist, the adjacent one
/// dominates.
pub fn classify_window(window: &IdleWindow, device: &DeviceModel) -> IdleClass {
    let adjacent = concurrent_cnots(window)
        .iter()
        .any(|t| min_distance_to(device, window.qubit, t) == Some(1));
    if adjacent {
        IdleClass::CrosstalkIdle
    } else {
        IdleClass::IdleIdle
    }
}

/// Partitions `window` into maximal gate spans (time covered by concurrent
/// CNOTs, merged when back-to-back) and free spans. Gate spans separated by
/// less than `merge_gap` nanoseconds of free time are merged, since no pulse
/// fits between them.
pub fn segment_window(window: &IdleWindow, merge_gap: u64) -> WindowSegments {
    // Clip CNOT intervals to the window and merge overlapping/contiguous ones.
    let mut intervals: Vec<(u64, u64, Vec<TimedInstruction>)> = Vec::new();
    let mut cnots: Vec<&TimedInstruction> = concurrent_cnots(window);
    cnots.sort_by_key(|t| t.start);
    for t in cnots {
        let s = t.start.max(window.start);
        let e = t.end().min(window.end);
        if e <= s {
            continue;
        }
        match intervals.last_mut() {
            Some((_, last_end, members)) if s <= *last_end + merge_gap => {
                *last_end = (*last_end).max(e);
                members.push(t.clone());
            }
            _ => intervals.push((s, e, vec![t.clone()])),
        }
    }

    let mut segments = Vec::new();
    let mut cursor = window.start;
    for (s, e, members) in intervals {
        if s > cursor {
            segments.push(Segment { start: cursor, duration: s - cursor, cause: SegmentCause::Free });
        }
        segments.push(Segment {
            start: s,
            duration: e - s,
            cause: SegmentCause::Gate { cnots: members },
        });
        cursor = e;
    }
    if window.end > cursor {
        segments.push(Segment {
            start: cursor,
            duration: window.end - cursor,
            cause: SegmentCause::Free,
        });
    }
    WindowSegments { segments }
}

/// Builds the per-window report for `qubits` (all active qubits when empty).
pub fn crosstalk_report(
    schedule: &Schedule,
    device: &DeviceModel,
    qubits: &[usize],
) -> CrosstalkReport {
    let targets: Vec<usize> =
        if qubits.is_empty() { schedule.mapped_qubits.clone() } else { qubits.to_vec() };
    let mut windows = Vec::new();
    for q in targets {
        for w in crate::schedule::idle_windows(schedule, q) {
            let class = classify_window(&w, device);
            let cnots = concurrent_cnots(&w);
            let mut offending_edges = Vec::new();
            let mut distances = Vec::new();
            for t in &cnots {
                if let Some(d) = min_distance_to(device, q, t) {
                    distances.push(d);
                    if d == 1 {
                        let (a, b) = (t.qubits[0], t.qubits[1]);
                        let edge = if a <= b { (a, b) } else { (b, a) };
                        if !offending_edges.contains(&edge) {
                            offending_edges.push(edge);
                        }
                    }
                }
            }
            let segments = segment_window(&w, device.pulse_ns);
            windows.push(WindowReport {
                qubit: q,
                start: w.start,
                end: w.end,
                class,
                offending_edges,
                distances,
                segments,
            });
        }
    }
    CrosstalkReport { windows }
}
