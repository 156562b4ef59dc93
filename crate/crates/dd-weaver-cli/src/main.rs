//! Command-line entry point: experiment sweeps, the DD transpile pass over
//! circuit files, idle-window classification, and device inspection.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dd_weaver::analysis::crosstalk_report;
use dd_weaver::circuit::{decompose_swap, parse_circuit, render_circuit, Qubit};
use dd_weaver::dd::{apply_policy, parse_policy, DdConfig, Policy, PolicyDecision, Strategy};
use dd_weaver::device::{load_device, preset_lagos, DeviceModel, Mapping};
use dd_weaver::experiments::{
    cnot_delay_sweep, k_range, motivational_sweep, ramsey_config, ramsey_suite, swap_delay_sweep,
    swap_sweep, RamseyOutcome, SweepResult,
};
use dd_weaver::plot::sweeps_to_svg;
use dd_weaver::report::{crosstalk_to_csv, sweeps_to_csv, sweeps_to_json};
use dd_weaver::schedule::{schedule_asap, schedule_to_circuit};
use dd_weaver::sim::{SimConfig, Toggles};
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "dd-weaver", version, about = "Idle-window analysis and CPMG insertion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the built-in experiment sweeps and write CSV/JSON results.
    Experiment(ExperimentArgs),
    /// Schedule a circuit, fill its idle windows, and emit the padded result.
    Transpile(TranspileArgs),
    /// Report each idle window's class and segmentation as CSV on stdout.
    Classify(ClassifyArgs),
    /// List device presets or dump a device file.
    Devices(DevicesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Motivational,
    CnotDelay,
    Swap,
    SwapDelay,
    Ramsey,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: ExperimentName,
    /// Device preset name or device file path.
    #[arg(long, default_value = "lagos")]
    device: String,
    /// Logical-to-physical assignment for q0,q1,q2.
    #[arg(long, default_value = "0,1,2")]
    map: String,
    /// Ramsey main qubit.
    #[arg(long, default_value_t = 6)]
    main: usize,
    /// Ramsey spectator pair A,B.
    #[arg(long, default_value = "5,4")]
    spectators: String,
    /// Repetition sweep start:stop:step (ramsey defaults to 1:50:1).
    #[arg(long)]
    ks: Option<String>,
    /// Quasi-static noise draws per point.
    #[arg(long)]
    samples: Option<usize>,
    /// Optional binomial readout shots per point.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enabled noise channels: `all`, `none`, or a comma list drawn from
    /// t1,t2,zz,cr,quasi,pulse. Ramsey defaults to all but t1.
    #[arg(long)]
    toggles: Option<String>,
    /// Ramsey phase-gate advance per repetition, in cycles.
    #[arg(long, default_value_t = 0.08)]
    phase_step: f64,
    /// Output directory for CSV/JSON (and SVG with --plot).
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Also write an SVG line plot per experiment.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct TranspileArgs {
    /// Input circuit file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "lagos")]
    device: String,
    /// Logical-to-physical assignment; defaults to the identity over the
    /// circuit's qubits.
    #[arg(long)]
    map: Option<String>,
    /// Main qubit (logical index) for window reporting and simulation.
    #[arg(long)]
    main: Option<u32>,
    /// Policy file; defaults to the built-in guideline rules.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Apply one strategy to every window instead of a policy.
    #[arg(long)]
    strategy: Option<String>,
    /// Output circuit file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Window report CSV file (stderr when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Input circuit file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "lagos")]
    device: String,
    #[arg(long)]
    map: Option<String>,
    /// Restrict the report to one physical qubit.
    #[arg(long)]
    main: Option<usize>,
}

#[derive(Args)]
struct DevicesArgs {
    /// Dump this preset or device file instead of listing presets.
    #[arg(long)]
    device: Option<String>,
}

fn main() {
    if let Ok(threads) = std::env::var("DD_WEAVER_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(args) => cmd_experiment(args),
        Command::Transpile(args) => cmd_transpile(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Devices(args) => cmd_devices(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn resolve_device(spec: &str) -> Result<DeviceModel> {
    if spec == "lagos" {
        return Ok(preset_lagos());
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading device file {spec}"))?;
    Ok(load_device(&text)?)
}

fn parse_list(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| anyhow!("bad index `{s}` in `{spec}`")))
        .collect()
}

fn parse_ks(spec: &str) -> Result<Vec<u32>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| s.parse::<u32>().map_err(|_| anyhow!("bad k bound `{s}`"));
    let ks = match parts.as_slice() {
        [single] => vec![parse(single)?],
        [start, stop] => k_range(parse(start)?, parse(stop)?, 1),
        [start, stop, step] => {
            let step = parse(step)?;
            if step == 0 {
                bail!("k step must be positive");
            }
            k_range(parse(start)?, parse(stop)?, step)
        }
        _ => bail!("expected start:stop:step, got `{spec}`"),
    };
    if ks.is_empty() {
        bail!("empty k range `{spec}`");
    }
    Ok(ks)
}

fn parse_toggles(spec: &str) -> Result<Toggles> {
    match spec {
        "all" => return Ok(Toggles::default()),
        "none" => return Ok(Toggles::all_off()),
        _ => {}
    }
    let mut toggles = Toggles::all_off();
    for name in spec.split(',') {
        match name.trim() {
            "t1" => toggles.t1 = true,
            "t2" => toggles.t2 = true,
            "zz" => toggles.zz = true,
            "cr" => toggles.cr_shift = true,
            "quasi" => toggles.quasi_static = true,
            "pulse" => toggles.finite_pulse = true,
            other => bail!("unknown toggle `{other}` (expected t1,t2,zz,cr,quasi,pulse)"),
        }
    }
    Ok(toggles)
}

fn print_summary(results: &[SweepResult]) {
    let Some(first) = results.first() else { return };
    let final_k = *first.ks.last().unwrap();
    println!("{:<14} {:>12} {:>12}", "strategy", format!("p0@k={final_k}"), "mean p0");
    for r in results {
        println!("{:<14} {:>12.5} {:>12.5}", r.strategy, r.final_p0(), r.mean_p0());
    }
}

fn write_outputs(out: &PathBuf, name: &str, results: &[SweepResult], plot: bool) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join(format!("{name}.csv")), sweeps_to_csv(results))?;
    fs::write(out.join(format!("{name}.json")), sweeps_to_json(results))?;
    if plot {
        fs::write(out.join(format!("{name}.svg")), sweeps_to_svg(name, results))?;
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let device = resolve_device(&args.device)?;
    let is_ramsey = matches!(args.name, ExperimentName::Ramsey);

    let default_ks = if is_ramsey { "1:50:1" } else { "10:50:10" };
    let ks = parse_ks(args.ks.as_deref().unwrap_or(default_ks))?;
    let samples = args.samples.unwrap_or(if is_ramsey { 300 } else { 1000 });
    let mut config = if is_ramsey {
        ramsey_config(args.seed, samples)
    } else {
        SimConfig { samples, seed: args.seed, ..SimConfig::default() }
    };
    config.shots = args.shots;
    if let Some(toggles) = &args.toggles {
        config.toggles = parse_toggles(toggles)?;
    }

    if is_ramsey {
        let spectators = parse_list(&args.spectators)?;
        if spectators.len() != 2 {
            bail!("--spectators expects exactly two qubits");
        }
        let phase_step = 2.0 * std::f64::consts::PI * args.phase_step;
        let outcome = ramsey_suite(
            &device,
            args.main,
            (spectators[0], spectators[1]),
            &ks,
            phase_step,
            &config,
        )?;
        print_ramsey(&outcome);
        fs::create_dir_all(&args.out)?;
        fs::write(args.out.join("ramsey.csv"), sweeps_to_csv(&outcome.sweeps))?;
        fs::write(args.out.join("ramsey.json"), serde_json::to_string_pretty(&outcome)?)?;
        if args.plot {
            fs::write(args.out.join("ramsey.svg"), sweeps_to_svg("ramsey", &outcome.sweeps))?;
        }
        return Ok(());
    }

    let mapping = Mapping::new(parse_list(&args.map)?, &device)?;
    let (name, results) = match args.name {
        ExperimentName::Motivational => (
            "motivational",
            motivational_sweep(
                &device,
                &mapping,
                &[Strategy::Baseline, Strategy::SingleDd],
                &ks,
                &config,
            )?,
        ),
        ExperimentName::CnotDelay => {
            ("cnot_delay", cnot_delay_sweep(&device, &mapping, &ks, &config)?)
        }
        ExperimentName::Swap => ("swap", swap_sweep(&device, &mapping, &ks, &config)?),
        ExperimentName::SwapDelay => {
            ("swap_delay", swap_delay_sweep(&device, &mapping, &ks, &config)?)
        }
        ExperimentName::Ramsey => unreachable!("handled above"),
    };
    print_summary(&results);
    write_outputs(&args.out, name, &results, args.plot)
}

fn print_ramsey(outcome: &RamseyOutcome) {
    println!(
        "{:<18} {:>14} {:>14} {:>12}",
        "variant", "freq (kHz)", "shift (kHz)", "decay (rep)"
    );
    for (i, (sweep, fit)) in outcome.sweeps.iter().zip(&outcome.fits).enumerate() {
        println!(
            "{:<18} {:>14.4} {:>14.4} {:>12.1}",
            sweep.strategy,
            outcome.freqs_khz[i],
            outcome.shift_khz(i),
            fit.decay_reps.min(1e6)
        );
    }
    println!("repetition wall time: {} ns", outcome.rep_ns);
}

fn decisions_to_csv(decisions: &[PolicyDecision]) -> String {
    let mut out = String::from("qubit,start_ns,end_ns,class,shape,strategy,pulses\n");
    for d in decisions {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.qubit, d.start, d.end, d.class, d.shape, d.strategy, d.pulses_inserted
        ));
    }
    out
}

fn circuit_and_mapping(
    input: &PathBuf,
    device: &DeviceModel,
    map: Option<&str>,
    main: Option<u32>,
) -> Result<(dd_weaver::circuit::Circuit, Mapping)> {
    let text =
        fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut circuit = parse_circuit(&text)?;
    if let Some(main) = main {
        circuit.main_qubit = Some(Qubit(main));
    }
    let targets = match map {
        Some(spec) => parse_list(spec)?,
        None => (0..circuit.n_qubits as usize).collect(),
    };
    if targets.len() < circuit.n_qubits as usize {
        bail!("mapping covers {} qubits but the circuit uses {}", targets.len(), circuit.n_qubits);
    }
    let mapping = Mapping::new(targets, device)?;
    Ok((circuit, mapping))
}

fn cmd_transpile(args: TranspileArgs) -> Result<()> {
    let device = resolve_device(&args.device)?;
    let (circuit, mapping) =
        circuit_and_mapping(&args.input, &device, args.map.as_deref(), args.main)?;
    let circuit = decompose_swap(&circuit);
    let schedule = schedule_asap(&circuit, &device, &mapping)?;

    let policy = match (&args.strategy, &args.policy) {
        (Some(_), Some(_)) => bail!("--strategy and --policy are mutually exclusive"),
        (Some(name), None) => Policy::uniform(Strategy::from_str(name)?),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading policy {}", path.display()))?;
            parse_policy(&text)?
        }
        (None, None) => Policy::guidelines(),
    };

    let (filled, decisions) = apply_policy(&schedule, &policy, &DdConfig::default(), &device);
    for d in &decisions {
        for w in &d.warnings {
            eprintln!("warning: {w}");
        }
    }
    let rendered = render_circuit(&schedule_to_circuit(&filled, &mapping)?);
    match &args.out {
        Some(path) => fs::write(path, &rendered)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{rendered}"),
    }
    let report = decisions_to_csv(&decisions);
    match &args.report {
        Some(path) => fs::write(path, &report)
            .with_context(|| format!("writing {}", path.display()))?,
        None => eprint!("{report}"),
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let device = resolve_device(&args.device)?;
    let (circuit, mapping) = circuit_and_mapping(&args.input, &device, args.map.as_deref(), None)?;
    let circuit = decompose_swap(&circuit);
    let schedule = schedule_asap(&circuit, &device, &mapping)?;
    let qubits: Vec<usize> = args.main.into_iter().collect();
    let report = crosstalk_report(&schedule, &device, &qubits);
    print!("{}", crosstalk_to_csv(&report));
    Ok(())
}

fn cmd_devices(args: DevicesArgs) -> Result<()> {
    match args.device {
        Some(spec) => {
            let device = resolve_device(&spec)?;
            print!("{}", device.render());
        }
        None => {
            println!("lagos: 7 qubits, 6 edges (H-shaped heavy-hex fragment), 35/300/700 ns gates");
        }
    }
    Ok(())
}
