//! Hardware description: coupling graph, gate timing, coherence times, and
//! crosstalk parameters, plus a 7-qubit heavy-hex-fragment preset.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Unordered physical-qubit pair, stored with the smaller index first.
pub type Edge = (usize, usize);

fn edge_key(a: usize, b: usize) -> Edge {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Static device description. Immutable after load; share read-only.
///
/// Frequencies are in kHz, times in ns except `t1_us`/`t2_us` (microseconds).
/// `zz_khz` is the shift of a qubit's transition frequency when a coupled
/// neighbor sits in |1> relative to |0>; `cr_shift_khz` is the time-averaged
/// Stark shift a spectator sees while a CNOT runs on an adjacent edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub n_qubits: usize,
    pub edges: BTreeSet<Edge>,
    /// Single-qubit gate duration (ns).
    pub dur_1q: u64,
    /// Per-edge CNOT duration (ns).
    pub dur_cx: BTreeMap<Edge, u64>,
    /// Measurement duration (ns).
    pub dur_measure: u64,
    /// DD pulse duration t_p (ns); at most `dur_1q`.
    pub pulse_ns: u64,
    pub t1_us: Vec<f64>,
    pub t2_us: Vec<f64>,
    /// Per-edge conditional frequency shift (kHz).
    pub zz_khz: BTreeMap<Edge, f64>,
    /// Spectator Stark shift during an adjacent CNOT (kHz), as a Ramsey
    /// experiment would average it over the gate.
    pub cr_shift_khz: f64,
    /// Instantaneous spectator shift seen by a pulse that plays while an
    /// adjacent CNOT's drive is on (kHz). Larger than `cr_shift_khz` because
    /// the gate's internal echo cancels most of the shift in the time average
    /// but not at any given instant. Calibrated, not measured.
    pub cr_pulse_khz: f64,
    /// Std-dev of the per-run quasi-static detuning (kHz).
    pub sigma_qs_khz: f64,
    /// Incoherent error probability per DD pulse (depolarizing).
    pub pulse_error: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("device file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invariant violated: {field}: {msg}")]
    Invariant { field: String, msg: String },
    #[error("qubits {0} and {1} are not connected")]
    Unreachable(usize, usize),
    #[error("qubit index {0} out of range (device has {1} qubits)")]
    QubitOutOfRange(usize, usize),
}

impl DeviceModel {
    /// A bare device with `n_qubits`, no edges, and the preset defaults for
    /// every scalar parameter.
    pub fn with_defaults(n_qubits: usize) -> Self {
        DeviceModel {
            n_qubits,
            edges: BTreeSet::new(),
            dur_1q: 35,
            dur_cx: BTreeMap::new(),
            dur_measure: 700,
            pulse_ns: 35,
            t1_us: vec![100.0; n_qubits],
            t2_us: vec![80.0; n_qubits],
            zz_khz: BTreeMap::new(),
            cr_shift_khz: 14.2,
            cr_pulse_khz: 80.0,
            sigma_qs_khz: 7.0,
            pulse_error: 3e-5,
        }
    }

    /// Adds an undirected edge with the default CNOT duration and ZZ strength.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        let key = edge_key(a, b);
        self.edges.insert(key);
        self.dur_cx.entry(key).or_insert(300);
        self.zz_khz.entry(key).or_insert(14.6);
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&edge_key(a, b))
    }

    pub fn cx_duration(&self, a: usize, b: usize) -> Option<u64> {
        self.dur_cx.get(&edge_key(a, b)).copied()
    }

    pub fn zz(&self, a: usize, b: usize) -> f64 {
        self.zz_khz.get(&edge_key(a, b)).copied().unwrap_or(0.0)
    }

    /// Neighbors of `q` on the coupling graph, ascending.
    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == q {
                    Some(b)
                } else if b == q {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Checks all model invariants, reporting the offending field.
    pub fn validate(&self) -> Result<(), DeviceError> {
        let inv = |field: &str, msg: String| {
            Err(DeviceError::Invariant { field: field.to_string(), msg })
        };
        if self.t1_us.len() != self.n_qubits || self.t2_us.len() != self.n_qubits {
            return inv("t1/t2", "one value per qubit required".into());
        }
        for q in 0..self.n_qubits {
            if self.t1_us[q] <= 0.0 || self.t2_us[q] <= 0.0 {
                return inv("t1/t2", format!("qubit {q}: coherence times must be positive"));
            }
            if self.t2_us[q] > 2.0 * self.t1_us[q] + 1e-12 {
                return inv(
                    "t2",
                    format!("qubit {q}: T2={} exceeds 2*T1={}", self.t2_us[q], 2.0 * self.t1_us[q]),
                );
            }
        }
        if self.dur_1q == 0 || self.dur_measure == 0 || self.pulse_ns == 0 {
            return inv("durations", "all durations must be positive".into());
        }
        if self.pulse_ns > self.dur_1q {
            return inv("pulse", format!("t_p={} exceeds dur_1q={}", self.pulse_ns, self.dur_1q));
        }
        for &(a, b) in &self.edges {
            if a == b || a >= self.n_qubits || b >= self.n_qubits {
                return inv("edge", format!("({a}, {b}) references invalid qubits"));
            }
            match self.dur_cx.get(&(a, b)) {
                Some(0) | None => return inv("edge", format!("({a}, {b}) needs a positive duration")),
                Some(_) => {}
            }
            if self.zz(a, b) < 0.0 {
                return inv("zz", format!("({a}, {b}) must be non-negative"));
            }
        }
        if self.cr_shift_khz < 0.0 || self.cr_pulse_khz < 0.0 || self.sigma_qs_khz < 0.0 {
            return inv("crosstalk", "cr_shift, cr_pulse and sigma_qs must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.pulse_error) {
            return inv("pulse_error", "must be a probability".into());
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<(), DeviceError> {
        if q >= self.n_qubits {
            Err(DeviceError::QubitOutOfRange(q, self.n_qubits))
        } else {
            Ok(())
        }
    }

    /// Serializes to the key/value device file format.
    pub fn render(&self) -> String {
        let mut out = format!("n_qubits {}\n", self.n_qubits);
        out.push_str(&format!("dur_1q {}\n", self.dur_1q));
        out.push_str(&format!("dur_measure {}\n", self.dur_measure));
        out.push_str(&format!("pulse {}\n", self.pulse_ns));
        out.push_str(&format!("cr_shift {}\n", self.cr_shift_khz));
        out.push_str(&format!("cr_pulse {}\n", self.cr_pulse_khz));
        out.push_str(&format!("sigma_qs {}\n", self.sigma_qs_khz));
        out.push_str(&format!("pulse_error {}\n", self.pulse_error));
        for &(a, b) in &self.edges {
            out.push_str(&format!(
                "edge {a} {b} dur={} zz={}\n",
                self.dur_cx[&(a, b)],
                self.zz(a, b)
            ));
        }
        for q in 0..self.n_qubits {
            out.push_str(&format!("t1 {q} {}\n", self.t1_us[q]));
            out.push_str(&format!("t2 {q} {}\n", self.t2_us[q]));
        }
        out
    }
}

/// The 7-qubit preset used throughout the experiments: an H-shaped coupling
/// graph with uniform timing and crosstalk defaults.
pub fn preset_lagos() -> DeviceModel {
    let mut device = DeviceModel::with_defaults(7);
    for (a, b) in [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)] {
        device.add_edge(a, b);
    }
    device
}

/// Parses the key/value device file format; missing optional fields keep the
/// preset defaults.
///
/// Lines: `n_qubits N`, `edge I J [dur=ns] [zz=kHz]`, `t1 I us`, `t2 I us`,
/// `dur_1q ns`, `dur_measure ns`, `pulse ns`, `cr_shift kHz`, `cr_pulse kHz`,
/// `sigma_qs kHz`, `pulse_error p`, with `#` comments.
pub fn load_device(text: &str) -> Result<DeviceModel, DeviceError> {
    let err = |line: usize, msg: String| DeviceError::Parse { line, msg };
    let mut device: Option<DeviceModel> = None;

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
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();

        if head == "n_qubits" {
            let n: usize = rest
                .first()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line_no, "expected `n_qubits N`".into()))?;
            device = Some(DeviceModel::with_defaults(n));
            continue;
        }
        let device = device
            .as_mut()
            .ok_or_else(|| err(line_no, "missing `n_qubits N` header".into()))?;

        let parse_f64 = |s: Option<&&str>, what: &str| -> Result<f64, DeviceError> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line_no, format!("expected {what}")))
        };
        let parse_u64 = |s: Option<&&str>, what: &str| -> Result<u64, DeviceError> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line_no, format!("expected {what}")))
        };
        let parse_usize = |s: Option<&&str>, what: &str| -> Result<usize, DeviceError> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line_no, format!("expected {what}")))
        };

        match head {
            "edge" => {
                let a = parse_usize(rest.first(), "edge qubit index")?;
                let b = parse_usize(rest.get(1), "edge qubit index")?;
                device.add_edge(a, b);
                for opt in &rest[2..] {
                    if let Some(v) = opt.strip_prefix("dur=") {
                        let dur = v
                            .parse()
                            .map_err(|_| err(line_no, format!("bad duration `{v}`")))?;
                        device.dur_cx.insert(edge_key(a, b), dur);
                    } else if let Some(v) = opt.strip_prefix("zz=") {
                        let zz = v.parse().map_err(|_| err(line_no, format!("bad zz `{v}`")))?;
                        device.zz_khz.insert(edge_key(a, b), zz);
                    } else {
                        return Err(err(line_no, format!("unknown edge option `{opt}`")));
                    }
                }
            }
            "t1" | "t2" => {
                let q = parse_usize(rest.first(), "qubit index")?;
                let us = parse_f64(rest.get(1), "time in us")?;
                if q >= device.n_qubits {
                    return Err(err(line_no, format!("qubit {q} out of range")));
                }
                if head == "t1" {
                    device.t1_us[q] = us;
                } else {
                    device.t2_us[q] = us;
                }
            }
            "dur_1q" => device.dur_1q = parse_u64(rest.first(), "duration in ns")?,
            "dur_measure" => device.dur_measure = parse_u64(rest.first(), "duration in ns")?,
            "pulse" => device.pulse_ns = parse_u64(rest.first(), "duration in ns")?,
            "cr_shift" => device.cr_shift_khz = parse_f64(rest.first(), "shift in kHz")?,
            "cr_pulse" => device.cr_pulse_khz = parse_f64(rest.first(), "shift in kHz")?,
            "sigma_qs" => device.sigma_qs_khz = parse_f64(rest.first(), "std-dev in kHz")?,
            "pulse_error" => device.pulse_error = parse_f64(rest.first(), "probability")?,
            other => return Err(err(line_no, format!("unknown key `{other}`"))),
        }
    }

    let device = device.ok_or(DeviceError::Parse { line: 0, msg: "missing `n_qubits N` header".into() })?;
    device.validate()?;
    Ok(device)
}

/// Shortest-path hop count between `a` and `b` on the coupling graph.
pub fn distance(device: &DeviceModel, a: usize, b: usize) -> Result<u32, DeviceError> {
    device.check_qubit(a)?;
    device.check_qubit(b)?;
    if a == b {
        return Ok(0);
    }
    let mut dist = vec![u32::MAX; device.n_qubits];
    dist[a] = 0;
    let mut queue = VecDeque::from([a]);
    while let Some(q) = queue.pop_front() {
        for n in device.neighbors(q) {
            if dist[n] == u32::MAX {
                dist[n] = dist[q] + 1;
                if n == b {
                    return Ok(dist[n]);
                }
                queue.push_back(n);
            }
        }
    }
    Err(DeviceError::Unreachable(a, b))
}

/// Injective assignment of logical circuit qubits to physical qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping(Vec<usize>);

impl Mapping {
    pub fn new(targets: Vec<usize>, device: &DeviceModel) -> Result<Self, DeviceError> {
        for (i, &t) in targets.iter().enumerate() {
            device.check_qubit(t)?;
            if targets[..i].contains(&t) {
                return Err(DeviceError::Invariant {
                    field: "mapping".into(),
                    msg: format!("physical qubit {t} assigned twice"),
                });
            }
        }
        Ok(Mapping(targets))
    }

    pub fn physical(&self, logical: crate::circuit::Qubit) -> Option<usize> {
        self.0.get(logical.0 as usize).copied()
    }

    pub fn logical(&self, physical: usize) -> Option<crate::circuit::Qubit> {
        self.0
            .iter()
            .position(|&t| t == physical)
            .map(|i| crate::circuit::Qubit(i as u32))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn targets(&self) -> &[usize] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_satisfies_invariants() {
        let d = preset_lagos();
        d.validate().unwrap();
        assert_eq!(d.n_qubits, 7);
        assert_eq!(d.edges.len(), 6);
    }

    #[test]
    fn preset_neighbors_and_zz() {
        let d = preset_lagos();
        assert_eq!(d.neighbors(0), vec![1]);
        assert_eq!(d.neighbors(5), vec![3, 4, 6]);
        for &(a, b) in d.edges.iter() {
            assert_eq!(d.zz(a, b), 14.6);
            assert_eq!(d.cx_duration(a, b), Some(300));
        }
        // The five distance>0 pairs that host a hardware-native CNOT while
        // qubit 0 idles.
        for (a, b) in [(1, 2), (1, 3), (3, 5), (4, 5), (5, 6)] {
            assert!(d.has_edge(a, b));
        }
    }

    #[test]
    fn distances_on_preset() {
        let d = preset_lagos();
        assert_eq!(distance(&d, 0, 0).unwrap(), 0);
        assert_eq!(distance(&d, 0, 1).unwrap(), 1);
        assert_eq!(distance(&d, 0, 3).unwrap(), 2);
        assert_eq!(distance(&d, 0, 4).unwrap(), 4);
        assert_eq!(distance(&d, 6, 1).unwrap(), 3);
    }

    #[test]
    fn disconnected_pair_is_unreachable() {
        let mut d = DeviceModel::with_defaults(3);
        d.add_edge(0, 1);
        assert_eq!(distance(&d, 0, 2).unwrap_err(), DeviceError::Unreachable(0, 2));
    }

    #[test]
    fn t2_bound_rejected_on_load() {
        let text = "n_qubits 2\nedge 0 1\nt1 0 100\nt2 0 250\n";
        let e = load_device(text).unwrap_err();
        match e {
            DeviceError::Invariant { field, .. } => assert_eq!(field, "t2"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn topology_only_file_gets_defaults() {
        let d = load_device("n_qubits 3\nedge 0 1\nedge 1 2 dur=400\n").unwrap();
        assert_eq!(d.dur_1q, 35);
        assert_eq!(d.cx_duration(0, 1), Some(300));
        assert_eq!(d.cx_duration(1, 2), Some(400));
        assert_eq!(d.t1_us, vec![100.0; 3]);
        assert_eq!(d.zz(0, 1), 14.6);
    }

    #[test]
    fn preset_round_trips_through_file_format() {
        let d = preset_lagos();
        let loaded = load_device(&d.render()).unwrap();
        assert_eq!(loaded, d);
    }

    #[test]
    fn mapping_must_be_injective() {
        let d = preset_lagos();
        assert!(Mapping::new(vec![0, 1, 1], &d).is_err());
        assert!(Mapping::new(vec![0, 1, 7], &d).is_err());
        let m = Mapping::new(vec![0, 1, 2], &d).unwrap();
        assert_eq!(m.physical(crate::circuit::Qubit(2)), Some(2));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_device() -> impl Strategy<Value = DeviceModel> {
            (2usize..8, proptest::collection::vec((0usize..8, 0usize..8), 0..16)).prop_map(
                |(n, pairs)| {
                    let mut d = DeviceModel::with_defaults(n);
                    for (a, b) in pairs {
                        let (a, b) = (a % n, b % n);
                        if a != b {
                            d.add_edge(a, b);
                        }
                    }
                    d
                },
            )
        }

        proptest! {
            // distance is a metric on each connected component.
            #[test]
            #[allow(clippy::needless_range_loop)]
            fn distance_is_a_metric(d in arb_device()) {
                let n = d.n_qubits;
                let mut dist = vec![vec![None; n]; n];
                for a in 0..n {
                    for b in 0..n {
                        dist[a][b] = distance(&d, a, b).ok();
                    }
                }
                for a in 0..n {
                    prop_assert_eq!(dist[a][a], Some(0));
                    for b in 0..n {
                        prop_assert_eq!(dist[a][b], dist[b][a]);
                        if a != b {
                            prop_assert_ne!(dist[a][b], Some(0));
                        }
                        for c in 0..n {
                            if let (Some(ab), Some(bc), Some(ac)) = (dist[a][b], dist[b][c], dist[a][c]) {
                                prop_assert!(ac <= ab + bc);
                            }
                        }
                    }
                }
            }
        }
    }
}
