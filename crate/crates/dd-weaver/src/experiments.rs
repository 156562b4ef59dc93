//! Scenario builders and strategy sweeps over the repeated-block circuits, and
//! the four-variant Ramsey suite with its frequency fitter.

use crate::circuit::{decompose_swap, repeat_segment, Circuit, GateKind, Instruction, Qubit};
use crate::dd::{insert_dd, DdConfig, DdError, Strategy};
use crate::device::{DeviceModel, Mapping};
use crate::fit::{fit_damped_cosine, FitError, RamseyFit};
use crate::schedule::{idle_windows, schedule_asap, Schedule, ScheduleError};
use crate::sim::{simulate, SimConfig, SimError, Toggles};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default artificial detuning added by the Ramsey phase gate, radians per
/// repetition (0.08 cycles).
pub const DEFAULT_PHASE_STEP: f64 = 2.0 * std::f64::consts::PI * 0.08;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("spectator qubits {0} and {1} are not a device edge")]
    NonEdgeSpectators(usize, usize),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    Device(#[from] crate::device::DeviceError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Dd(#[from] DdError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Reproducibility metadata attached to every sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub mapping: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub toggles: Toggles,
    pub noise_step_ns: u64,
    pub device: String,
}

/// One strategy's p0-versus-repetitions series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: String,
    pub strategy: String,
    pub ks: Vec<u32>,
    pub p0: Vec<f64>,
    pub stderr: Vec<f64>,
    pub meta: SweepMeta,
}

impl SweepResult {
    pub fn mean_p0(&self) -> f64 {
        self.p0.iter().sum::<f64>() / self.p0.len() as f64
    }

    pub fn final_p0(&self) -> f64 {
        *self.p0.last().expect("sweep has at least one point")
    }
}

fn meta_for(device: &DeviceModel, mapping: &Mapping, config: &SimConfig) -> SweepMeta {
    SweepMeta {
        mapping: mapping.targets().to_vec(),
        samples: config.samples,
        seed: config.seed,
        toggles: config.toggles,
        noise_step_ns: config.noise_step_ns,
        device: device.render(),
    }
}

fn check_spectator_edge(device: &DeviceModel, mapping: &Mapping) -> Result<u64, ExpError> {
    let a = mapping.physical(Qubit(1)).expect("mapping covers q1");
    let b = mapping.physical(Qubit(2)).expect("mapping covers q2");
    device.cx_duration(a, b).ok_or(ExpError::NonEdgeSpectators(a, b))
}

fn push_all(circuit: &mut Circuit, instructions: Vec<Instruction>) -> Result<(), ExpError> {
    for i in instructions {
        circuit.push(i)?;
    }
    Ok(())
}

/// H - (repeated block) - H - measure template over 3 logical qubits with the
/// given block body between barriers.
fn repeated_template(block: Vec<Instruction>) -> Result<Circuit, ExpError> {
    let mut c = Circuit::new(3);
    c.main_qubit = Some(Qubit(0));
    c.push(Instruction::new(GateKind::H, vec![Qubit(0)]))?;
    c.push(Instruction::new(GateKind::Barrier, vec![]))?;
    push_all(&mut c, block)?;
    c.push(Instruction::new(GateKind::Barrier, vec![]))?;
    c.push(Instruction::new(GateKind::H, vec![Qubit(0)]))?;
    c.push(Instruction::new(GateKind::Measure, vec![Qubit(0)]))?;
    Ok(c)
}

/// Schedules the k-times-repeated template and fills every main-qubit idle
/// window with `strategy`.
fn prepared_schedule(
    template: &Circuit,
    k: u32,
    device: &DeviceModel,
    mapping: &Mapping,
    strategy: Strategy,
) -> Result<Schedule, ExpError> {
    let circuit = decompose_swap(&repeat_segment(template, k)?);
    let mut schedule = schedule_asap(&circuit, device, mapping)?;
    if strategy != Strategy::Baseline {
        let main = schedule.main_qubit.expect("templates set a main qubit");
        let dd_config = DdConfig::default();
        for window in idle_windows(&schedule, main) {
            let (filled, _) = insert_dd(&schedule, &window, strategy, &dd_config, device)?;
            schedule = filled;
        }
    }
    Ok(schedule)
}

fn sweep(
    name: &str,
    template: &Circuit,
    device: &DeviceModel,
    mapping: &Mapping,
    strategies: &[Strategy],
    ks: &[u32],
    config: &SimConfig,
) -> Result<Vec<SweepResult>, ExpError> {
    let mut out = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let mut p0 = Vec::with_capacity(ks.len());
        let mut stderr = Vec::with_capacity(ks.len());
        for &k in ks {
            let schedule = prepared_schedule(template, k, device, mapping, strategy)?;
            let result = simulate(&schedule, device, config)?;
            p0.push(result.p0);
            stderr.push(result.stderr());
        }
        out.push(SweepResult {
            experiment: name.to_string(),
            strategy: strategy.label().to_string(),
            ks: ks.to_vec(),
            p0,
            stderr,
            meta: meta_for(device, mapping, config),
        });
    }
    Ok(out)
}

/// Purely CNOT-induced idle window: the spectators run one CNOT per
/// repetition while the main qubit idles for its duration.
pub fn motivational_sweep(
    device: &DeviceModel,
    mapping: &Mapping,
    strategies: &[Strategy],
    ks: &[u32],
    config: &SimConfig,
) -> Result<Vec<SweepResult>, ExpError> {
    check_spectator_edge(device, mapping)?;
    let template = repeated_template(vec![Instruction::new(
        GateKind::Cnot,
        vec![Qubit(1), Qubit(2)],
    )])?;
    sweep("motivational", &template, device, mapping, strategies, ks, config)
}

/// CNOT-plus-delay window: the spectators run a CNOT and then wait for the
/// same duration, so the main-qubit window splits into a gate span and a free
/// span of equal length.
pub fn cnot_delay_sweep(
    device: &DeviceModel,
    mapping: &Mapping,
    ks: &[u32],
    config: &SimConfig,
) -> Result<Vec<SweepResult>, ExpError> {
    let cx = check_spectator_edge(device, mapping)?;
    let template = repeated_template(vec![
        Instruction::new(GateKind::Cnot, vec![Qubit(1), Qubit(2)]),
        Instruction::new(GateKind::Delay(cx), vec![Qubit(1)]),
        Instruction::new(GateKind::Delay(cx), vec![Qubit(2)]),
    ])?;
    let strategies = [
        Strategy::Baseline,
        Strategy::SingleDd,
        Strategy::ProtectGateOnly,
        Strategy::ProtectDelayOnly,
        Strategy::PerSegmentDd,
    ];
    sweep("cnot_delay", &template, device, mapping, &strategies, ks, config)
}

/// Purely SWAP-induced window: three back-to-back CNOTs on the spectators.
pub fn swap_sweep(
    device: &DeviceModel,
    mapping: &Mapping,
    ks: &[u32],
    config: &SimConfig,
) -> Result<Vec<SweepResult>, ExpError> {
    check_spectator_edge(device, mapping)?;
    let template = repeated_template(vec![Instruction::new(
        GateKind::Swap,
        vec![Qubit(1), Qubit(2)],
    )])?;
    let strategies = [Strategy::Baseline, Strategy::SingleDd, Strategy::PerCnotDd];
    sweep("swap", &template, device, mapping, &strategies, ks, config)
}

/// SWAP-plus-delay window: a decomposed SWAP followed by a delay of the same
/// length on the spectators.
pub fn swap_delay_sweep(
    device: &DeviceModel,
    mapping: &Mapping,
    ks: &[u32],
    config: &SimConfig,
) -> Result<Vec<SweepResult>, ExpError> {
    let cx = check_spectator_edge(device, mapping)?;
    let swap_dur = 3 * cx;
    let template = repeated_template(vec![
        Instruction::new(GateKind::Swap, vec![Qubit(1), Qubit(2)]),
        Instruction::new(GateKind::Delay(swap_dur), vec![Qubit(1)]),
        Instruction::new(GateKind::Delay(swap_dur), vec![Qubit(2)]),
    ])?;
    let strategies = [
        Strategy::Baseline,
        Strategy::SingleDd,
        Strategy::ProtectGateOnly,
        Strategy::ProtectDelayOnly,
        Strategy::PerSegmentDd,
    ];
    sweep("swap_delay", &template, device, mapping, &strategies, ks, config)
}

/// The four Ramsey contexts: the neighbor spectator idling in |0> or |1>, and
/// the same two with a CNOT running on the spectator pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RamseyVariant {
    NeighborGround,
    NeighborExcited,
    NeighborGroundCnot,
    NeighborExcitedCnot,
}

impl RamseyVariant {
    pub const ALL: [RamseyVariant; 4] = [
        RamseyVariant::NeighborGround,
        RamseyVariant::NeighborExcited,
        RamseyVariant::NeighborGroundCnot,
        RamseyVariant::NeighborExcitedCnot,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            RamseyVariant::NeighborGround => "neighbor_0",
            RamseyVariant::NeighborExcited => "neighbor_1",
            RamseyVariant::NeighborGroundCnot => "neighbor_0_cnot",
            RamseyVariant::NeighborExcitedCnot => "neighbor_1_cnot",
        }
    }

    fn excited(&self) -> bool {
        matches!(self, RamseyVariant::NeighborExcited | RamseyVariant::NeighborExcitedCnot)
    }

    fn with_cnot(&self) -> bool {
        matches!(self, RamseyVariant::NeighborGroundCnot | RamseyVariant::NeighborExcitedCnot)
    }
}

/// Results of the Ramsey suite: per-variant series, fits, and fitted
/// frequencies converted to kHz via the per-repetition wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyOutcome {
    pub sweeps: Vec<SweepResult>,
    pub fits: Vec<RamseyFit>,
    pub rep_ns: f64,
    pub freqs_khz: Vec<f64>,
}

impl RamseyOutcome {
    /// |f(variant) - f(reference variant)| in kHz.
    pub fn shift_khz(&self, variant: usize) -> f64 {
        (self.freqs_khz[variant] - self.freqs_khz[0]).abs()
    }
}

/// Simulation defaults for Ramsey characterization: relaxation is disabled so
/// an excited spectator holds its state over the full train; otherwise its
/// decay drags the fitted conditional shift below the configured coupling.
pub fn ramsey_config(seed: u64, samples: usize) -> SimConfig {
    SimConfig {
        samples,
        seed,
        toggles: Toggles { t1: false, ..Toggles::default() },
        ..SimConfig::default()
    }
}

fn ramsey_template(
    variant: RamseyVariant,
    delay_ns: u64,
    phase_step: f64,
) -> Result<Circuit, ExpError> {
    let n = if variant.with_cnot() { 3 } else { 2 };
    let mut c = Circuit::new(n);
    c.main_qubit = Some(Qubit(0));
    c.push(Instruction::new(GateKind::H, vec![Qubit(0)]))?;
    if variant.excited() {
        c.push(Instruction::new(GateKind::X, vec![Qubit(1)]))?;
    }
    c.push(Instruction::new(GateKind::Barrier, vec![]))?;
    c.push(Instruction::new(GateKind::Delay(delay_ns), vec![Qubit(0)]))?;
    c.push(Instruction::new(GateKind::Phase(phase_step), vec![Qubit(0)]))?;
    if variant.with_cnot() {
        c.push(Instruction::tagged(GateKind::Cnot, vec![Qubit(1), Qubit(2)], "spectator-cnot"))?;
    }
    c.push(Instruction::new(GateKind::Barrier, vec![]))?;
    c.push(Instruction::new(GateKind::H, vec![Qubit(0)]))?;
    c.push(Instruction::new(GateKind::Measure, vec![Qubit(0)]))?;
    Ok(c)
}

/// Runs the four Ramsey variants for `main` against a spectator pair, fits
/// each p0(k) series to a damped cosine, and reports the fitted frequencies.
pub fn ramsey_suite(
    device: &DeviceModel,
    main: usize,
    spectators: (usize, usize),
    ks: &[u32],
    phase_step: f64,
    config: &SimConfig,
) -> Result<RamseyOutcome, ExpError> {
    let delay_ns = device
        .cx_duration(spectators.0, spectators.1)
        .ok_or(ExpError::NonEdgeSpectators(spectators.0, spectators.1))?;

    let mut sweeps = Vec::with_capacity(4);
    let mut fits = Vec::with_capacity(4);
    let mut rep_ns = 0.0;

    for variant in RamseyVariant::ALL {
        let template = ramsey_template(variant, delay_ns, phase_step)?;
        let targets: Vec<usize> = if variant.with_cnot() {
            vec![main, spectators.0, spectators.1]
        } else {
            vec![main, spectators.0]
        };
        let mapping = Mapping::new(targets, device)?;

        let mut p0 = Vec::with_capacity(ks.len());
        let mut stderr = Vec::with_capacity(ks.len());
        let mut makespans = Vec::with_capacity(ks.len());
        for &k in ks {
            let circuit = repeat_segment(&template, k)?;
            let schedule = schedule_asap(&circuit, device, &mapping)?;
            makespans.push((k, schedule.makespan));
            let result = simulate(&schedule, device, config)?;
            p0.push(result.p0);
            stderr.push(result.stderr());
        }
        if makespans.len() >= 2 {
            let (k0, m0) = makespans[0];
            let (k1, m1) = *makespans.last().unwrap();
            rep_ns = (m1 - m0) as f64 / (k1 - k0) as f64;
        } else {
            rep_ns = delay_ns as f64;
        }

        let points: Vec<(f64, f64)> =
            ks.iter().zip(&p0).map(|(&k, &p)| (k as f64, p)).collect();
        fits.push(fit_damped_cosine(&points)?);
        sweeps.push(SweepResult {
            experiment: "ramsey".to_string(),
            strategy: variant.label().to_string(),
            ks: ks.to_vec(),
            p0,
            stderr,
            meta: meta_for(device, &mapping, config),
        });
    }

    let freqs_khz: Vec<f64> =
        fits.iter().map(|f| f.freq_cycles / rep_ns * 1e6).collect();
    Ok(RamseyOutcome { sweeps, fits, rep_ns, freqs_khz })
}

/// Inclusive k range helper: `start..=stop` with `step`.
pub fn k_range(start: u32, stop: u32, step: u32) -> Vec<u32> {
    assert!(step > 0, "step must be positive");
    let mut out = Vec::new();
    let mut k = start;
    while k <= stop {
        out.push(k);
        k += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::preset_lagos;

    fn fast_config(toggles: Toggles) -> SimConfig {
        SimConfig { samples: 3, seed: 5, toggles, ..SimConfig::default() }
    }

    fn crosstalk_mapping(device: &DeviceModel) -> Mapping {
        Mapping::new(vec![0, 1, 2], device).unwrap()
    }

    #[test]
    fn noiseless_series_stay_at_one() {
        let device = preset_lagos();
        let mapping = crosstalk_mapping(&device);
        let ks = k_range(10, 30, 10);
        let results = motivational_sweep(
            &device,
            &mapping,
            &[Strategy::Baseline, Strategy::SingleDd],
            &ks,
            &fast_config(Toggles::all_off()),
        )
        .unwrap();
        assert_eq!(results.len(), 2);
        for r in &results {
            assert_eq!(r.p0.len(), 3);
            for &p in &r.p0 {
                assert!((p - 1.0).abs() < 1e-9, "{}: {p}", r.strategy);
            }
        }
    }

    #[test]
    fn non_edge_spectators_rejected() {
        let device = preset_lagos();
        let mapping = Mapping::new(vec![0, 2, 4], &device).unwrap();
        let e = motivational_sweep(
            &device,
            &mapping,
            &[Strategy::Baseline],
            &[10],
            &fast_config(Toggles::all_off()),
        )
        .unwrap_err();
        assert!(matches!(e, ExpError::NonEdgeSpectators(2, 4)));
    }

    #[test]
    fn cnot_delay_sweep_runs_five_strategies() {
        let device = preset_lagos();
        let mapping = crosstalk_mapping(&device);
        let results =
            cnot_delay_sweep(&device, &mapping, &[10], &fast_config(Toggles::all_off())).unwrap();
        let labels: Vec<&str> = results.iter().map(|r| r.strategy.as_str()).collect();
        assert_eq!(labels, vec!["baseline", "single", "gate_only", "delay_only", "per_segment"]);
    }

    #[test]
    fn sweeps_are_deterministic_for_fixed_seed() {
        let device = preset_lagos();
        let mapping = crosstalk_mapping(&device);
        let config = SimConfig { samples: 8, seed: 42, ..SimConfig::default() };
        let a = motivational_sweep(&device, &mapping, &[Strategy::SingleDd], &[10, 20], &config)
            .unwrap();
        let b = motivational_sweep(&device, &mapping, &[Strategy::SingleDd], &[10, 20], &config)
            .unwrap();
        for (x, y) in a[0].p0.iter().zip(&b[0].p0) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn ramsey_rep_time_matches_block_duration() {
        let device = preset_lagos();
        let config = ramsey_config(7, 4);
        let ks = k_range(1, 12, 1);
        let outcome =
            ramsey_suite(&device, 6, (5, 4), &ks, DEFAULT_PHASE_STEP, &config).unwrap();
        assert_eq!(outcome.rep_ns, 300.0);
        assert_eq!(outcome.sweeps.len(), 4);
        assert_eq!(outcome.fits.len(), 4);
    }

    #[test]
    fn ramsey_artificial_detuning_dominates_variant_one() {
        let device = preset_lagos();
        let config = ramsey_config(3, 8);
        let ks = k_range(1, 40, 1);
        let outcome =
            ramsey_suite(&device, 6, (5, 4), &ks, DEFAULT_PHASE_STEP, &config).unwrap();
        // Variant 1 sees only the artificial detuning: 0.08 cycles/rep over
        // 300 ns is 266.7 kHz.
        let expected = 0.08 / 300.0 * 1e6;
        assert!(
            (outcome.freqs_khz[0] - expected).abs() < 0.05 * expected,
            "f1 = {} kHz",
            outcome.freqs_khz[0]
        );
    }
}
