//! Density-matrix execution of a timed schedule under decoherence, always-on
//! ZZ coupling, CR-induced spectator Stark shifts, quasi-static dephasing
//! noise, and finite-duration detuned pi pulses.
//!
//! The schedule is compiled once into a sample-independent op stream: gate
//! events fire at their start boundary, and every interval between boundaries
//! is chunked into noise steps that apply, in a fixed order, decoherence on
//! all qubits, ZZ on all coupled pairs, quasi-static Z phases, and Stark
//! shifts next to running CNOTs. A qubit that is mid-DD-pulse accrues no free
//! phase (the pulse Hamiltonian owns its detuning); decoherence still applies.
//! Each Monte Carlo sample draws one frozen detuning per qubit from its own
//! counter-mode RNG stream, so results are bit-identical however the sample
//! loop is parallelized.

pub mod channels;
pub mod density;

pub use channels::{
    decoherence_channel, decoherence_kraus, finite_pulse_matrix, finite_pulse_x, phase_angle,
    stark_shift, zz_evolution,
};
pub use density::{DensityMatrix, SimError, MAX_QUBITS};

use crate::circuit::GateKind;
use crate::device::DeviceModel;
use crate::schedule::Schedule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which noise mechanisms the run includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    pub t1: bool,
    pub t2: bool,
    pub zz: bool,
    pub cr_shift: bool,
    pub quasi_static: bool,
    pub finite_pulse: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles { t1: true, t2: true, zz: true, cr_shift: true, quasi_static: true, finite_pulse: true }
    }
}

impl Toggles {
    pub fn all_off() -> Self {
        Toggles { t1: false, t2: false, zz: false, cr_shift: false, quasi_static: false, finite_pulse: false }
    }

    pub fn only_quasi_static() -> Self {
        Toggles { quasi_static: true, ..Toggles::all_off() }
    }
}

/// Simulation parameters. `noise_step_ns` bounds the Trotter step for the
/// per-interval noise application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub samples: usize,
    pub seed: u64,
    pub shots: Option<u64>,
    pub toggles: Toggles,
    pub noise_step_ns: u64,
    /// Check trace, Hermiticity, and positivity after every applied op.
    pub validate: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            samples: 1000,
            seed: 0,
            shots: None,
            toggles: Toggles::default(),
            noise_step_ns: 150,
            validate: false,
        }
    }
}

/// Deterministic binomial readout counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub zeros: u64,
    pub shots: u64,
}

/// Exact per-sample probabilities of reading |0> on the main qubit, their
/// mean, and optional sampled counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub p0: f64,
    pub per_sample: Vec<f64>,
    pub counts: Option<ShotCounts>,
}

impl SimResult {
    /// Standard error of the sample mean.
    pub fn stderr(&self) -> f64 {
        let n = self.per_sample.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.p0;
        let var: f64 =
            self.per_sample.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
struct NoiseChunk {
    /// (slot, gamma, coherence factor)
    deco: Vec<(usize, f64, f64)>,
    /// (slot_a, slot_b, phase angle)
    zz: Vec<(usize, usize, f64)>,
    /// (slot, phase angle)
    stark: Vec<(usize, f64)>,
    /// (slot, physical qubit, radians per kHz of detuning)
    quasi: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
enum Op {
    H(usize),
    X(usize),
    Phase(usize, f64),
    Cnot(usize, usize),
    /// Finite-duration DD pulse; detuning assembled per sample.
    Pulse { slot: usize, phys: usize, t_p_ns: f64, stark_cnots: u32 },
    Depol(usize, f64),
    Noise(NoiseChunk),
    Record,
}

#[derive(Debug, Clone)]
struct Timeline {
    n_slots: usize,
    main_slot: usize,
    ops: Vec<Op>,
}

fn compile(
    schedule: &Schedule,
    device: &DeviceModel,
    config: &SimConfig,
) -> Result<Option<Timeline>, SimError> {
    if config.samples == 0 {
        return Err(SimError::InvalidConfig("samples must be at least 1".into()));
    }
    if config.noise_step_ns == 0 {
        return Err(SimError::InvalidConfig("noise_step_ns must be positive".into()));
    }
    let mut qubits = schedule.active_qubits();
    if let Some(main) = schedule.main_qubit {
        if !qubits.contains(&main) {
            qubits.push(main);
            qubits.sort_unstable();
        }
    }
    if qubits.is_empty() {
        return Ok(None);
    }
    if qubits.len() > MAX_QUBITS {
        return Err(SimError::TooManyQubits(qubits.len()));
    }
    let slot_of = |phys: usize| qubits.iter().position(|&q| q == phys);
    let main_slot = match schedule.main_qubit {
        Some(main) => slot_of(main).expect("main qubit was added to the slot set"),
        None => 0,
    };

    for t in &schedule.timed {
        if t.kind == GateKind::Swap {
            return Err(SimError::InvalidSchedule(
                "swap gates must be decomposed before simulation".into(),
            ));
        }
    }

    let toggles = &config.toggles;
    let dd_pulses: Vec<&crate::schedule::TimedInstruction> =
        schedule.timed.iter().filter(|t| t.is_dd_pulse()).collect();
    let cnots: Vec<&crate::schedule::TimedInstruction> =
        schedule.timed.iter().filter(|t| t.kind == GateKind::Cnot).collect();

    // Boundaries: instruction starts and ends, plus the makespan.
    let mut boundaries: Vec<u64> = vec![0, schedule.makespan];
    for t in &schedule.timed {
        boundaries.push(t.start);
        boundaries.push(t.end());
    }
    boundaries.sort_unstable();
    boundaries.dedup();

    let record_at = schedule
        .timed
        .iter()
        .filter(|t| t.kind == GateKind::Measure && schedule.main_qubit.is_some_and(|m| t.qubits.contains(&m)))
        .map(|t| t.start)
        .min();

    let mut ops = Vec::new();
    let mut recorded = false;
    'outer: for (bi, &t0) in boundaries.iter().enumerate() {
        // Gate events at this boundary, in schedule order.
        for inst in schedule.timed.iter().filter(|t| t.start == t0) {
            if Some(t0) == record_at && inst.kind == GateKind::Measure {
                // Readout is ideal: capture p0 the moment measurement begins.
                if schedule.main_qubit.is_some_and(|m| inst.qubits.contains(&m)) {
                    ops.push(Op::Record);
                    recorded = true;
                    break 'outer;
                }
            }
            match &inst.kind {
                GateKind::H => ops.push(Op::H(slot_of(inst.qubits[0]).unwrap())),
                GateKind::X => {
                    let slot = slot_of(inst.qubits[0]).unwrap();
                    if inst.is_dd_pulse() && toggles.finite_pulse {
                        let stark_cnots = cnots
                            .iter()
                            .filter(|c| {
                                c.overlaps(inst.start, inst.end())
                                    && !c.qubits.contains(&inst.qubits[0])
                                    && c.qubits
                                        .iter()
                                        .any(|&op| device.has_edge(op, inst.qubits[0]))
                            })
                            .count() as u32;
                        ops.push(Op::Pulse {
                            slot,
                            phys: inst.qubits[0],
                            t_p_ns: inst.duration as f64,
                            stark_cnots,
                        });
                        if device.pulse_error > 0.0 {
                            ops.push(Op::Depol(slot, device.pulse_error));
                        }
                    } else {
                        ops.push(Op::X(slot));
                    }
                }
                GateKind::Phase(angle) => {
                    ops.push(Op::Phase(slot_of(inst.qubits[0]).unwrap(), *angle))
                }
                GateKind::Cnot => ops.push(Op::Cnot(
                    slot_of(inst.qubits[0]).unwrap(),
                    slot_of(inst.qubits[1]).unwrap(),
                )),
                GateKind::Delay(_) | GateKind::Barrier | GateKind::Measure => {}
                GateKind::Swap => unreachable!("checked above"),
            }
        }

        // Noise over [t0, t1), chunked. Within one slice the set of running
        // instructions is constant, so the context is uniform per chunk.
        let Some(&t1) = boundaries.get(bi + 1) else { continue };
        if t1 == t0 {
            continue;
        }
        let mid_pulse: Vec<usize> = dd_pulses
            .iter()
            .filter(|p| p.overlaps(t0, t1))
            .map(|p| slot_of(p.qubits[0]).unwrap())
            .collect();
        let running_cnots: Vec<&&crate::schedule::TimedInstruction> =
            cnots.iter().filter(|c| c.overlaps(t0, t1)).collect();

        let mut remaining = t1 - t0;
        while remaining > 0 {
            let dt = remaining.min(config.noise_step_ns);
            remaining -= dt;
            let dtf = dt as f64;

            let mut chunk = NoiseChunk { deco: Vec::new(), zz: Vec::new(), stark: Vec::new(), quasi: Vec::new() };
            for (slot, &phys) in qubits.iter().enumerate() {
                let t_us = dtf * 1e-3;
                let gamma = if toggles.t1 { 1.0 - (-t_us / device.t1_us[phys]).exp() } else { 0.0 };
                let mut coh = 1.0;
                if toggles.t1 {
                    coh *= (-t_us * 0.5 / device.t1_us[phys]).exp();
                }
                if toggles.t2 {
                    let phi_rate = 1.0 / device.t2_us[phys]
                        - if toggles.t1 { 0.5 / device.t1_us[phys] } else { 0.0 };
                    coh *= (-t_us * phi_rate).exp();
                }
                if gamma != 0.0 || coh != 1.0 {
                    chunk.deco.push((slot, gamma, coh));
                }
                if toggles.quasi_static && !mid_pulse.contains(&slot) {
                    chunk.quasi.push((slot, phys, 2.0 * std::f64::consts::PI * dtf * 1e-6));
                }
            }
            if toggles.zz {
                for &(a, b) in &device.edges {
                    let (Some(sa), Some(sb)) = (slot_of(a), slot_of(b)) else { continue };
                    if mid_pulse.contains(&sa) || mid_pulse.contains(&sb) {
                        continue;
                    }
                    let zeta = device.zz(a, b);
                    if zeta != 0.0 {
                        chunk.zz.push((sa, sb, phase_angle(zeta, dtf)));
                    }
                }
            }
            if toggles.cr_shift {
                for c in &running_cnots {
                    for (slot, &phys) in qubits.iter().enumerate() {
                        if c.qubits.contains(&phys) || mid_pulse.contains(&slot) {
                            continue;
                        }
                        if c.qubits.iter().any(|&op| device.has_edge(op, phys)) {
                            chunk.stark.push((slot, phase_angle(device.cr_shift_khz, dtf)));
                        }
                    }
                }
            }
            ops.push(Op::Noise(chunk));
        }
    }
    if !recorded {
        ops.push(Op::Record);
    }

    Ok(Some(Timeline { n_slots: qubits.len(), main_slot, ops }))
}

fn run_sample(
    timeline: &Timeline,
    device: &DeviceModel,
    config: &SimConfig,
    sample: usize,
) -> Result<f64, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(sample as u64 + 1);
    let normal = Normal::new(0.0, device.sigma_qs_khz)
        .map_err(|e| SimError::InvalidConfig(format!("sigma_qs: {e}")))?;
    let eps: Vec<f64> = (0..device.n_qubits).map(|_| normal.sample(&mut rng)).collect();

    let mut rho = DensityMatrix::ground(timeline.n_slots)?;
    let mut basis_theta = vec![0.0f64; rho.dim()];
    let mut p0 = 1.0;

    for op in &timeline.ops {
        match op {
            Op::H(slot) => rho.apply_h(*slot),
            Op::X(slot) => rho.apply_x(*slot),
            Op::Phase(slot, angle) => rho.apply_z_phase(*slot, -angle),
            Op::Cnot(c, t) => rho.apply_cnot(*c, *t),
            Op::Pulse { slot, phys, t_p_ns, stark_cnots } => {
                let mut delta = 0.0;
                if config.toggles.quasi_static {
                    delta += eps[*phys];
                }
                if config.toggles.cr_shift {
                    delta += *stark_cnots as f64 * device.cr_pulse_khz;
                }
                finite_pulse_x(&mut rho, *slot, *t_p_ns, delta);
            }
            Op::Depol(slot, p) => rho.depolarize(*slot, *p),
            Op::Noise(chunk) => {
                for &(slot, gamma, coh) in &chunk.deco {
                    rho.decohere(slot, gamma, coh);
                }
                let any_phase = !(chunk.zz.is_empty()
                    && chunk.stark.is_empty()
                    && (chunk.quasi.is_empty() || !config.toggles.quasi_static));
                if any_phase {
                    let n = timeline.n_slots;
                    basis_theta.iter_mut().for_each(|t| *t = 0.0);
                    for (i, theta) in basis_theta.iter_mut().enumerate() {
                        for &(sa, sb, th) in &chunk.zz {
                            if i >> (n - 1 - sa) & 1 == 1 && i >> (n - 1 - sb) & 1 == 1 {
                                *theta += th;
                            }
                        }
                        for &(slot, th) in &chunk.stark {
                            if i >> (n - 1 - slot) & 1 == 1 {
                                *theta += th;
                            }
                        }
                        for &(slot, phys, factor) in &chunk.quasi {
                            if i >> (n - 1 - slot) & 1 == 1 {
                                *theta += factor * eps[phys];
                            }
                        }
                    }
                    rho.apply_basis_phases(&basis_theta);
                }
            }
            Op::Record => {
                p0 = rho.p_zero(timeline.main_slot);
            }
        }
        if config.validate {
            rho.check_invariants()?;
        }
    }
    Ok(p0)
}

/// Runs `schedule` under `config`, averaging the exact |0>-probability of the
/// main qubit over quasi-static noise samples. Requires at most five active
/// qubits and a swap-free schedule.
pub fn simulate(
    schedule: &Schedule,
    device: &DeviceModel,
    config: &SimConfig,
) -> Result<SimResult, SimError> {
    let Some(timeline) = compile(schedule, device, config)? else {
        return Ok(SimResult {
            p0: 1.0,
            per_sample: vec![1.0; config.samples],
            counts: config.shots.map(|shots| ShotCounts { zeros: shots, shots }),
        });
    };

    let per_sample: Result<Vec<f64>, SimError> = (0..config.samples)
        .into_par_iter()
        .map(|s| run_sample(&timeline, device, config, s))
        .collect();
    let per_sample = per_sample?;
    // Sequential reduction keeps the mean bit-identical across thread counts.
    let p0 = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let counts = config.shots.map(|shots| {
        sample_shots_from_p0(p0, shots, config.seed)
    });
    Ok(SimResult { p0, per_sample, counts })
}

/// Binomial readout draw with probability `result.p0`; deterministic for a
/// fixed seed.
pub fn sample_shots(result: &SimResult, shots: u64, seed: u64) -> ShotCounts {
    sample_shots_from_p0(result.p0, shots, seed)
}

fn sample_shots_from_p0(p0: f64, shots: u64, seed: u64) -> ShotCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut zeros = 0u64;
    for _ in 0..shots {
        if rand::Rng::random::<f64>(&mut rng) < p0 {
            zeros += 1;
        }
    }
    ShotCounts { zeros, shots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::device::{preset_lagos, Mapping};
    use crate::schedule::schedule_asap;
    use crate::circuit::Qubit;

    fn schedule_of(text: &str, mapping: &[usize], main: u32) -> (Schedule, DeviceModel) {
        let device = preset_lagos();
        let mut circuit = parse_circuit(text).unwrap();
        circuit.main_qubit = Some(Qubit(main));
        let mapping = Mapping::new(mapping.to_vec(), &device).unwrap();
        (schedule_asap(&circuit, &device, &mapping).unwrap(), device)
    }

    #[test]
    fn noiseless_identity_circuit_returns_certain_zero() {
        let (s, device) = schedule_of(
            "qubits 3\nh q0\nbarrier\ncx q1 q2\nbarrier\nh q0\nmeasure q0\n",
            &[0, 1, 2],
            0,
        );
        let config = SimConfig { samples: 3, toggles: Toggles::all_off(), ..SimConfig::default() };
        let r = simulate(&s, &device, &config).unwrap();
        assert!((r.p0 - 1.0).abs() < 1e-9, "p0 = {}", r.p0);
    }

    #[test]
    fn empty_schedule_is_ground_state() {
        let device = preset_lagos();
        let s = Schedule {
            n_device_qubits: 7,
            mapped_qubits: vec![],
            timed: vec![],
            makespan: 0,
            main_qubit: None,
        };
        let r = simulate(&s, &device, &SimConfig { samples: 2, ..SimConfig::default() }).unwrap();
        assert_eq!(r.p0, 1.0);
    }

    #[test]
    fn dephasing_only_ramsey_matches_closed_form() {
        // H, 10 us delay, H with only T2 on: p0 = (1 + e^{-t/T2})/2.
        let (s, device) = schedule_of(
            "qubits 1\nh q0\ndelay 10000 q0\nh q0\nmeasure q0\n",
            &[0],
            0,
        );
        let toggles = Toggles { t2: true, ..Toggles::all_off() };
        let config = SimConfig { samples: 1, toggles, ..SimConfig::default() };
        let r = simulate(&s, &device, &config).unwrap();
        // Gates fire at their start boundary, so the coherence dephases over
        // the first H's 35 ns plus the 10 us delay; after the second H the
        // signal lives in populations, which dephasing leaves alone.
        let expected = 0.5 * (1.0 + (-(10.0 + 0.035) / 80.0f64).exp());
        assert!((r.p0 - expected).abs() < 1e-9, "p0 = {} vs {expected}", r.p0);
    }

    #[test]
    fn damping_only_population_matches_exponential() {
        let (s, device) = schedule_of(
            "qubits 1\nx q0\ndelay 20000 q0\nmeasure q0\n",
            &[0],
            0,
        );
        let toggles = Toggles { t1: true, ..Toggles::all_off() };
        let config = SimConfig { samples: 1, toggles, ..SimConfig::default() };
        let r = simulate(&s, &device, &config).unwrap();
        // The X gate itself takes 35 ns, so the excited state relaxes for
        // 20 us + 35 ns at T1 = 100 us before readout.
        let expected = 1.0 - (-(20.0 + 0.035) / 100.0f64).exp();
        assert!((r.p0 - expected).abs() < 1e-9, "p0 = {} vs {expected}", r.p0);
    }

    #[test]
    fn quasi_static_envelope_matches_gaussian_average() {
        // H, delay t, H with only quasi-static noise: the averaged contrast is
        // the Gaussian e^{-2 (pi sigma t)^2}; 1000 samples land within 2%.
        let (s, device) = schedule_of(
            "qubits 1\nh q0\ndelay 30000 q0\nh q0\nmeasure q0\n",
            &[0],
            0,
        );
        let toggles = Toggles::only_quasi_static();
        let config = SimConfig { samples: 1000, seed: 11, toggles, ..SimConfig::default() };
        let r = simulate(&s, &device, &config).unwrap();
        let t_us = 30.0 + 0.035;
        let sig_t = device.sigma_qs_khz * 1e-3 * t_us; // sigma * t, dimensionless
        let expected = 0.5 * (1.0 + (-2.0 * (std::f64::consts::PI * sig_t).powi(2)).exp());
        assert!((r.p0 - expected).abs() < 0.01, "p0 = {} vs {expected}", r.p0);
        let envelope = 2.0 * r.p0 - 1.0;
        let expected_env = 2.0 * expected - 1.0;
        assert!((envelope - expected_env).abs() <= 0.02 * expected_env.max(0.1));
    }

    #[test]
    fn trotter_split_is_exact_for_step_multiples() {
        // Applying the per-interval noise over 300 ns must equal two 150 ns
        // applications exactly, because both decompose into identical
        // noise-step chunks.
        let (s300, device) = schedule_of(
            "qubits 2\nh q0\nx q1\ndelay 300 q0\nmeasure q0\n",
            &[0, 1],
            0,
        );
        let (s150, _) = schedule_of(
            "qubits 2\nh q0\nx q1\ndelay 150 q0\ndelay 150 q0\nmeasure q0\n",
            &[0, 1],
            0,
        );
        let config = SimConfig { samples: 4, seed: 3, ..SimConfig::default() };
        let a = simulate(&s300, &device, &config).unwrap();
        let b = simulate(&s150, &device, &config).unwrap();
        assert_eq!(a.per_sample, b.per_sample);
    }

    #[test]
    fn determinism_across_thread_counts() {
        let (s, device) = schedule_of(
            "qubits 3\nh q0\nbarrier\ncx q1 q2\nbarrier\nh q0\nmeasure q0\n",
            &[0, 1, 2],
            0,
        );
        let config = SimConfig { samples: 64, seed: 99, ..SimConfig::default() };
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| simulate(&s, &device, &config)).unwrap();
        let b = pool4.install(|| simulate(&s, &device, &config)).unwrap();
        assert_eq!(a.per_sample, b.per_sample);
        assert_eq!(a.p0.to_bits(), b.p0.to_bits());
    }

    #[test]
    fn validation_mode_passes_on_noisy_run() {
        let (s, device) = schedule_of(
            "qubits 3\nh q0\nbarrier\ncx q1 q2\nbarrier\nh q0\nmeasure q0\n",
            &[0, 1, 2],
            0,
        );
        let config = SimConfig { samples: 2, validate: true, ..SimConfig::default() };
        simulate(&s, &device, &config).unwrap();
    }

    #[test]
    fn shot_sampling_is_deterministic_and_concentrated() {
        let r = SimResult { p0: 1.0, per_sample: vec![1.0], counts: None };
        let c = sample_shots(&r, 1000, 7);
        assert_eq!(c.zeros, 1000);
        let r = SimResult { p0: 0.5, per_sample: vec![0.5], counts: None };
        let c1 = sample_shots(&r, 1_000_000, 7);
        let c2 = sample_shots(&r, 1_000_000, 7);
        assert_eq!(c1, c2);
        let frac = c1.zeros as f64 / 1e6;
        assert!((frac - 0.5).abs() < 0.002, "fraction {frac}");
    }

    #[test]
    fn too_many_active_qubits_rejected() {
        let device = crate::device::load_device(
            "n_qubits 6\nedge 0 1\nedge 1 2\nedge 2 3\nedge 3 4\nedge 4 5\n",
        )
        .unwrap();
        let mut circuit = parse_circuit("qubits 6\nh q0\nh q1\nh q2\nh q3\nh q4\nh q5\n").unwrap();
        circuit.main_qubit = Some(Qubit(0));
        let mapping = Mapping::new(vec![0, 1, 2, 3, 4, 5], &device).unwrap();
        let s = schedule_asap(&circuit, &device, &mapping).unwrap();
        let e = simulate(&s, &device, &SimConfig::default()).unwrap_err();
        assert_eq!(e, SimError::TooManyQubits(6));
    }
}
