//! ASAP scheduling of circuits onto a device, and per-qubit idle-window
//! extraction from the resulting timeline.

use crate::circuit::{Circuit, GateKind};
use crate::device::{DeviceModel, Mapping};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A scheduled instruction on physical qubits. `duration` is fixed by the
/// device for its kind; delays carry their own length and phase gates and
/// barriers take zero time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedInstruction {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub tag: Option<String>,
    pub start: u64,
    pub duration: u64,
}

impl TimedInstruction {
    pub fn end(&self) -> u64 {
        self.start + self.duration
    }

    pub fn overlaps(&self, start: u64, end: u64) -> bool {
        self.start < end && start < self.end()
    }

    pub fn is_dd_pulse(&self) -> bool {
        self.tag.as_deref() == Some("dd-pulse")
    }
}

/// Time-resolved instruction list, sorted by start time (program order breaks
/// ties). Instructions on the same qubit never overlap and nothing crosses a
/// barrier on its qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_device_qubits: usize,
    /// Physical qubits the circuit was mapped onto, ascending. Idle-window
    /// passes cover these even when a qubit carries no instruction.
    pub mapped_qubits: Vec<usize>,
    pub timed: Vec<TimedInstruction>,
    pub makespan: u64,
    pub main_qubit: Option<usize>,
}

/// A maximal gap on one qubit, annotated with the instructions running on
/// other qubits during it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdleWindow {
    pub qubit: usize,
    pub start: u64,
    pub end: u64,
    pub concurrent: Vec<TimedInstruction>,
}

impl IdleWindow {
    pub fn duration(&self) -> u64 {
        self.end - self.start
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("unrouted gate: cx on ({0}, {1}) is not a device edge")]
    UnroutedGate(usize, usize),
    #[error("swap on ({0}, {1}): decompose swaps before scheduling")]
    UndecomposedSwap(usize, usize),
    #[error("logical qubit q{0} has no physical assignment")]
    UnmappedQubit(u32),
    #[error("circuit error: {0}")]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error("device error: {0}")]
    Device(#[from] crate::device::DeviceError),
}

/// Schedules `circuit` as soon as possible: each instruction starts at the
/// latest ready time of its qubits, and barriers synchronize theirs.
pub fn schedule_asap(
    circuit: &Circuit,
    device: &DeviceModel,
    mapping: &Mapping,
) -> Result<Schedule, ScheduleError> {
    circuit.validate()?;
    let mut ready = vec![0u64; device.n_qubits];
    let mut timed = Vec::with_capacity(circuit.instructions.len());

    let map = |q: crate::circuit::Qubit| -> Result<usize, ScheduleError> {
        mapping.physical(q).ok_or(ScheduleError::UnmappedQubit(q.0))
    };

    for instruction in &circuit.instructions {
        let qubits: Vec<usize> = if instruction.kind == GateKind::Barrier && instruction.qubits.is_empty() {
            mapping.targets().to_vec()
        } else {
            instruction.qubits.iter().map(|&q| map(q)).collect::<Result<_, _>>()?
        };

        let duration = match instruction.kind {
            GateKind::H | GateKind::X => device.dur_1q,
            GateKind::Phase(_) | GateKind::Barrier => 0,
            GateKind::Delay(ns) => ns,
            GateKind::Measure => device.dur_measure,
            GateKind::Cnot => {
                let (a, b) = (qubits[0], qubits[1]);
                device
                    .cx_duration(a, b)
                    .ok_or(ScheduleError::UnroutedGate(a, b))?
            }
            GateKind::Swap => {
                return Err(ScheduleError::UndecomposedSwap(qubits[0], qubits[1]));
            }
        };

        let start = qubits.iter().map(|&q| ready[q]).max().unwrap_or(0);
        for &q in &qubits {
            ready[q] = start + duration;
        }
        timed.push(TimedInstruction {
            kind: instruction.kind.clone(),
            qubits,
            tag: instruction.tag.clone(),
            start,
            duration,
        });
    }

    let makespan = timed.iter().map(TimedInstruction::end).max().unwrap_or(0);
    timed.sort_by_key(|t| t.start);
    let mut mapped_qubits = mapping.targets().to_vec();
    mapped_qubits.sort_unstable();
    Ok(Schedule {
        n_device_qubits: device.n_qubits,
        mapped_qubits,
        timed,
        makespan,
        main_qubit: circuit.main_qubit.and_then(|q| mapping.physical(q)),
    })
}

impl Schedule {
    /// Physical qubits that carry at least one instruction, ascending.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_device_qubits];
        for t in &self.timed {
            for &q in &t.qubits {
                seen[q] = true;
            }
        }
        seen.iter().enumerate().filter(|(_, &s)| s).map(|(q, _)| q).collect()
    }

    /// Instructions occupying time on `qubit`, in start order.
    pub fn busy_on(&self, qubit: usize) -> Vec<&TimedInstruction> {
        self.timed
            .iter()
            .filter(|t| t.duration > 0 && t.qubits.contains(&qubit))
            .collect()
    }

    /// Total busy time on `qubit`.
    pub fn busy_time(&self, qubit: usize) -> u64 {
        self.busy_on(qubit).iter().map(|t| t.duration).sum()
    }
}

/// Extracts the maximal idle gaps on `qubit`, split at barrier synchronization
/// points, from time zero up to the qubit's measurement (or the makespan when
/// the qubit is never measured). Each window carries the list of concurrent
/// instructions on other qubits.
pub fn idle_windows(schedule: &Schedule, qubit: usize) -> Vec<IdleWindow> {
    let busy = schedule.busy_on(qubit);
    let bound = schedule
        .timed
        .iter()
        .filter(|t| t.kind == GateKind::Measure && t.qubits.contains(&qubit))
        .map(|t| t.start)
        .min()
        .unwrap_or(schedule.makespan);

    let mut cuts: Vec<u64> = schedule
        .timed
        .iter()
        .filter(|t| t.kind == GateKind::Barrier && t.qubits.contains(&qubit))
        .map(|t| t.start)
        .collect();
    cuts.sort_unstable();
    cuts.dedup();

    let mut gaps: Vec<(u64, u64)> = Vec::new();
    let mut cursor = 0u64;
    for t in &busy {
        if t.start >= bound {
            break;
        }
        if t.start > cursor {
            gaps.push((cursor, t.start));
        }
        cursor = cursor.max(t.end());
    }
    if bound > cursor {
        gaps.push((cursor, bound));
    }

    let mut windows = Vec::new();
    for (start, end) in gaps {
        let mut piece_start = start;
        for &cut in cuts.iter().filter(|&&c| c > start && c < end) {
            if cut > piece_start {
                windows.push((piece_start, cut));
            }
            piece_start = cut;
        }
        if end > piece_start {
            windows.push((piece_start, end));
        }
    }

    windows
        .into_iter()
        .map(|(start, end)| {
            let concurrent = schedule
                .timed
                .iter()
                .filter(|t| t.duration > 0 && !t.qubits.contains(&qubit) && t.overlaps(start, end))
                .cloned()
                .collect();
            IdleWindow { qubit, start, end, concurrent }
        })
        .collect()
}

/// Lowers a schedule back to a circuit in logical qubit ids, padding every
/// idle gap with an explicit delay so that rescheduling under the same mapping
/// reproduces the timing exactly and leaves no implicit idle windows behind.
pub fn schedule_to_circuit(
    schedule: &Schedule,
    mapping: &Mapping,
) -> Result<Circuit, ScheduleError> {
    use crate::circuit::{Instruction, Qubit};

    let logical = |phys: usize| -> Result<Qubit, ScheduleError> {
        mapping
            .logical(phys)
            .ok_or(ScheduleError::UnmappedQubit(phys as u32))
    };

    // Pad gaps per mapped qubit up to its measurement (or the makespan),
    // splitting at barrier synchronization points so no delay straddles one.
    let mut pads: Vec<TimedInstruction> = Vec::new();
    for &q in &schedule.mapped_qubits {
        let bound = schedule
            .timed
            .iter()
            .filter(|t| t.kind == GateKind::Measure && t.qubits.contains(&q))
            .map(|t| t.start)
            .min()
            .unwrap_or(schedule.makespan);
        let mut cuts: Vec<u64> = schedule
            .timed
            .iter()
            .filter(|t| t.kind == GateKind::Barrier && t.qubits.contains(&q))
            .map(|t| t.start)
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut pad = |start: u64, end: u64| {
            let mut piece_start = start;
            for &cut in cuts.iter().filter(|&&c| c > start && c < end) {
                if cut > piece_start {
                    pads.push(TimedInstruction {
                        kind: GateKind::Delay(cut - piece_start),
                        qubits: vec![q],
                        tag: None,
                        start: piece_start,
                        duration: cut - piece_start,
                    });
                }
                piece_start = cut;
            }
            if end > piece_start {
                pads.push(TimedInstruction {
                    kind: GateKind::Delay(end - piece_start),
                    qubits: vec![q],
                    tag: None,
                    start: piece_start,
                    duration: end - piece_start,
                });
            }
        };
        let mut cursor = 0u64;
        for t in schedule.busy_on(q) {
            if t.start > cursor && t.start <= bound {
                pad(cursor, t.start);
            }
            cursor = cursor.max(t.end());
        }
        if bound > cursor {
            pad(cursor, bound);
        }
    }

    // Zero-duration markers (barriers, phases) sort ahead of timed work at the
    // same instant so synchronization points survive the round trip.
    let mut timed: Vec<&TimedInstruction> = schedule.timed.iter().chain(pads.iter()).collect();
    timed.sort_by_key(|t| (t.start, t.duration, t.qubits.clone()));

    let n_logical = mapping.len() as u32;
    let mut circuit = Circuit::new(n_logical);
    circuit.main_qubit = match schedule.main_qubit {
        Some(m) => Some(logical(m)?),
        None => None,
    };
    for t in timed {
        let qubits = t.qubits.iter().map(|&q| logical(q)).collect::<Result<Vec<_>, _>>()?;
        let mut inst = Instruction::new(t.kind.clone(), qubits);
        inst.tag = t.tag.clone();
        circuit.push(inst)?;
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{decompose_swap, parse_circuit, Instruction, Qubit};
    use crate::device::preset_lagos;

    fn mapping_012(device: &DeviceModel) -> Mapping {
        Mapping::new(vec![0, 1, 2], device).unwrap()
    }

    #[test]
    fn parallel_block_schedules_in_lockstep() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\ncx q1 q2\ndelay 300 q0\n").unwrap();
        let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
        let cx = s.timed.iter().find(|t| t.kind == GateKind::Cnot).unwrap();
        let delay = s.timed.iter().find(|t| matches!(t.kind, GateKind::Delay(_))).unwrap();
        assert_eq!((cx.start, cx.duration), (0, 300));
        assert_eq!((delay.start, delay.duration), (0, 300));
        assert_eq!(s.makespan, 300);
    }

    #[test]
    fn empty_circuit_has_zero_makespan() {
        let device = preset_lagos();
        let s = schedule_asap(&Circuit::new(3), &device, &mapping_012(&device)).unwrap();
        assert_eq!(s.makespan, 0);
        assert!(idle_windows(&s, 0).is_empty());
    }

    #[test]
    fn serial_cnots_chain() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\ncx q0 q1\ncx q1 q2\n").unwrap();
        let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
        assert_eq!(s.timed[0].start, 0);
        assert_eq!(s.timed[1].start, 300);
        assert_eq!(s.makespan, 600);
    }

    #[test]
    fn unrouted_cnot_names_the_pair() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\ncx q0 q2\n").unwrap();
        let e = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap_err();
        assert_eq!(e, ScheduleError::UnroutedGate(0, 2));
    }

    #[test]
    fn swap_must_be_decomposed_first() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\nswap q1 q2\n").unwrap();
        let e = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap_err();
        assert_eq!(e, ScheduleError::UndecomposedSwap(1, 2));
        let s = schedule_asap(&decompose_swap(&circuit), &device, &mapping_012(&device)).unwrap();
        assert_eq!(s.makespan, 900);
    }

    #[test]
    fn barriers_synchronize_all_mapped_qubits() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\nh q0\nbarrier\ncx q1 q2\nbarrier\nh q0\n").unwrap();
        let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
        let hs: Vec<&TimedInstruction> =
            s.timed.iter().filter(|t| t.kind == GateKind::H).collect();
        assert_eq!(hs[0].start, 0);
        // The second H waits for the barrier after the CNOT, not just for q0.
        assert_eq!(hs[1].start, 35 + 300);
        assert_eq!(s.makespan, 35 + 300 + 35);
    }

    #[test]
    fn cnot_induced_window_with_concurrency() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\ncx q1 q2\n").unwrap();
        let mut circuit = circuit;
        circuit.main_qubit = Some(Qubit(0));
        let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
        let windows = idle_windows(&s, 0);
        assert_eq!(windows.len(), 1);
        assert_eq!((windows[0].start, windows[0].end), (0, 300));
        assert_eq!(windows[0].concurrent.len(), 1);
        assert_eq!(windows[0].concurrent[0].kind, GateKind::Cnot);
    }

    #[test]
    fn fully_occupied_qubit_has_no_windows() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\ndelay 300 q0\ncx q1 q2\n").unwrap();
        let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
        assert!(idle_windows(&s, 0).is_empty());
    }

    #[test]
    fn swap_induced_window_spans_three_cnots() {
        let device = preset_lagos();
        let circuit = decompose_swap(&parse_circuit("qubits 3\nswap q1 q2\n").unwrap());
        let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
        let windows = idle_windows(&s, 0);
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].duration(), 900);
        assert_eq!(windows[0].concurrent.len(), 3);
    }

    #[test]
    fn barriers_split_windows_per_repetition() {
        let device = preset_lagos();
        let text = "qubits 3\nh q0\nbarrier\ncx q1 q2\nbarrier\ncx q1 q2\nbarrier\nh q0\nmeasure q0\n";
        let s = schedule_asap(&parse_circuit(text).unwrap(), &device, &mapping_012(&device)).unwrap();
        let windows = idle_windows(&s, 0);
        assert_eq!(windows.len(), 2);
        assert_eq!((windows[0].start, windows[0].end), (35, 335));
        assert_eq!((windows[1].start, windows[1].end), (335, 635));
    }

    #[test]
    fn measurement_excluded_from_windows() {
        let device = preset_lagos();
        // q0 idles while q1/q2 run a CNOT, then measures; no window may start
        // at or after the measurement.
        let text = "qubits 3\nh q0\nbarrier\ncx q1 q2\nbarrier\nmeasure q0\n";
        let s = schedule_asap(&parse_circuit(text).unwrap(), &device, &mapping_012(&device)).unwrap();
        let windows = idle_windows(&s, 0);
        assert_eq!(windows.len(), 1);
        assert_eq!((windows[0].start, windows[0].end), (35, 335));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        // Random measure-free circuits on the preset device.
        fn arb_circuit() -> impl Strategy<Value = Circuit> {
            let gate = prop_oneof![
                (0u32..3).prop_map(|q| Instruction::new(GateKind::H, vec![Qubit(q)])),
                (0u32..3).prop_map(|q| Instruction::new(GateKind::X, vec![Qubit(q)])),
                (0u32..3, 1u64..500).prop_map(|(q, ns)| Instruction::new(GateKind::Delay(ns), vec![Qubit(q)])),
                Just(Instruction::new(GateKind::Cnot, vec![Qubit(0), Qubit(1)])),
                Just(Instruction::new(GateKind::Cnot, vec![Qubit(1), Qubit(2)])),
                Just(Instruction::new(GateKind::Barrier, vec![])),
            ];
            proptest::collection::vec(gate, 0..24).prop_map(|instructions| {
                let mut c = Circuit::new(3);
                for i in instructions {
                    c.push(i).unwrap();
                }
                c
            })
        }

        proptest! {
            // Per qubit, busy time plus idle-window time covers the makespan.
            #[test]
            fn busy_plus_idle_equals_makespan(circuit in arb_circuit()) {
                let device = preset_lagos();
                let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
                for q in [0usize, 1, 2] {
                    let idle: u64 = idle_windows(&s, q).iter().map(IdleWindow::duration).sum();
                    prop_assert_eq!(s.busy_time(q) + idle, s.makespan);
                }
            }

            // ASAP minimality: every start equals the latest predecessor end
            // over the instruction's qubits (with barriers as predecessors).
            #[test]
            fn asap_start_times_are_minimal(circuit in arb_circuit()) {
                let device = preset_lagos();
                let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
                let mut ready = vec![0u64; device.n_qubits];
                for t in &s.timed {
                    let expected = t.qubits.iter().map(|&q| ready[q]).max().unwrap_or(0);
                    prop_assert_eq!(t.start, expected, "instruction {:?}", t);
                    for &q in &t.qubits {
                        ready[q] = t.end();
                    }
                }
            }

            // Idle windows never overlap an instruction on the same qubit.
            #[test]
            fn windows_avoid_own_instructions(circuit in arb_circuit()) {
                let device = preset_lagos();
                let s = schedule_asap(&circuit, &device, &mapping_012(&device)).unwrap();
                for q in [0usize, 1, 2] {
                    for w in idle_windows(&s, q) {
                        prop_assert!(w.end > w.start);
                        for t in s.busy_on(q) {
                            prop_assert!(!t.overlaps(w.start, w.end));
                        }
                    }
                }
            }
        }
    }
}
