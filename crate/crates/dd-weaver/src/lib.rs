//! Idle-window analysis and dynamical-decoupling insertion for timed quantum circuits.
//!
//! The crate covers the full pipeline: a gate-level circuit IR with a minimal text
//! format, a hardware device model (coupling graph, timing, coherence, crosstalk
//! parameters), an ASAP scheduler that exposes per-qubit idle windows, a classifier
//! that splits windows into crosstalk-idle and idle-idle, a CPMG insertion pass with
//! several fill strategies and a guideline policy, a density-matrix noise simulator
//! (amplitude damping, dephasing, always-on ZZ, CR-induced Stark shifts, quasi-static
//! detuning, finite-duration pi pulses), and experiment sweeps with a damped-cosine
//! Ramsey fitter.

pub mod analysis;
pub mod circuit;
pub mod dd;
pub mod device;
pub mod experiments;
pub mod fit;
pub mod plot;
pub mod report;
pub mod schedule;
pub mod sim;

pub use analysis::{classify_window, segment_window, IdleClass, Segment, SegmentCause, WindowSegments};
pub use circuit::{decompose_swap, parse_circuit, render_circuit, repeat_segment, Circuit, GateKind, Instruction, Qubit};
pub use dd::{apply_policy, cpmg_fill, insert_dd, DdConfig, DdSequence, Policy, PulsePlacement, Strategy};
pub use device::{load_device, preset_lagos, DeviceModel, Mapping};
pub use experiments::{cnot_delay_sweep, motivational_sweep, ramsey_suite, swap_delay_sweep, swap_sweep, RamseyOutcome, SweepResult};
pub use fit::{fit_damped_cosine, RamseyFit};
pub use schedule::{idle_windows, schedule_asap, schedule_to_circuit, IdleWindow, Schedule, TimedInstruction};
pub use sim::{sample_shots, simulate, SimConfig, SimResult, Toggles};
