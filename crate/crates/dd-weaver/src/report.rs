//! Text serializations: sweep CSV/JSON, schedule dumps, and crosstalk reports.

use crate::analysis::CrosstalkReport;
use crate::experiments::SweepResult;
use crate::schedule::Schedule;

/// Sweep CSV: `experiment,strategy,k,p0,stderr`, one row per (strategy, k).
pub fn sweeps_to_csv(sweeps: &[SweepResult]) -> String {
    let mut out = String::from("experiment,strategy,k,p0,stderr\n");
    for sweep in sweeps {
        for ((k, p0), stderr) in sweep.ks.iter().zip(&sweep.p0).zip(&sweep.stderr) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sweep.experiment, sweep.strategy, k, p0, stderr
            ));
        }
    }
    out
}

/// Full sweep payload with metadata as pretty JSON.
pub fn sweeps_to_json(sweeps: &[SweepResult]) -> String {
    serde_json::to_string_pretty(sweeps).expect("sweep results serialize")
}

/// Schedule dump CSV: `qubit,start_ns,duration_ns,gate,qubits,tag`, one row
/// per occupied qubit of each instruction, ordered by (start, qubit).
pub fn schedule_to_csv(schedule: &Schedule) -> String {
    let mut rows: Vec<(usize, u64, u64, String, String, String)> = Vec::new();
    for t in &schedule.timed {
        let qubits = t
            .qubits
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join("-");
        for &q in &t.qubits {
            rows.push((
                q,
                t.start,
                t.duration,
                t.kind.name().to_string(),
                qubits.clone(),
                t.tag.clone().unwrap_or_default(),
            ));
        }
    }
    rows.sort_by_key(|a| (a.1, a.0));
    let mut out = String::from("qubit,start_ns,duration_ns,gate,qubits,tag\n");
    for (q, start, dur, gate, qubits, tag) in rows {
        out.push_str(&format!("{q},{start},{dur},{gate},{qubits},{tag}\n"));
    }
    out
}

/// Crosstalk report CSV: `qubit,start_ns,end_ns,class,segments`.
pub fn crosstalk_to_csv(report: &CrosstalkReport) -> String {
    let mut out = String::from("qubit,start_ns,end_ns,class,segments\n");
    for w in &report.windows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            w.qubit,
            w.start,
            w.end,
            w.class,
            w.segments.shape()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::device::{preset_lagos, Mapping};
    use crate::schedule::schedule_asap;

    #[test]
    fn schedule_csv_orders_by_start_then_qubit() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\ncx q1 q2\nh q0\n").unwrap();
        let mapping = Mapping::new(vec![0, 1, 2], &device).unwrap();
        let s = schedule_asap(&circuit, &device, &mapping).unwrap();
        let csv = schedule_to_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "qubit,start_ns,duration_ns,gate,qubits,tag");
        assert_eq!(lines[1], "0,0,35,h,0,");
        assert_eq!(lines[2], "1,0,300,cx,1-2,");
        assert_eq!(lines[3], "2,0,300,cx,1-2,");
    }

    #[test]
    fn sweep_json_round_trips() {
        let device = preset_lagos();
        let mapping = Mapping::new(vec![0, 1, 2], &device).unwrap();
        let config = crate::sim::SimConfig { samples: 2, ..Default::default() };
        let sweeps = crate::experiments::motivational_sweep(
            &device,
            &mapping,
            &[crate::dd::Strategy::Baseline],
            &[10],
            &config,
        )
        .unwrap();
        let json = sweeps_to_json(&sweeps);
        let back: Vec<SweepResult> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sweeps);
    }

    #[test]
    fn crosstalk_csv_shape() {
        let device = preset_lagos();
        let circuit = parse_circuit("qubits 3\ncx q1 q2\n").unwrap();
        let mapping = Mapping::new(vec![0, 1, 2], &device).unwrap();
        let s = schedule_asap(&circuit, &device, &mapping).unwrap();
        let report = crate::analysis::crosstalk_report(&s, &device, &[0]);
        let csv = crosstalk_to_csv(&report);
        assert_eq!(csv, "qubit,start_ns,end_ns,class,segments\n0,0,300,crosstalk-idle,gate:300\n");
    }
}
