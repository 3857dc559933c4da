//! `qconvsim` command line: scenario validation, experiment dispatch with
//! deterministic seeding, and JSON/CSV report emission.
//!
//! Exit codes: 0 success, 1 usage error, 2 scenario/schema error, 3 runtime
//! failure.

mod counts;
mod report;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qconvsim::devices::{convert, reverse_convert, windowed_qubit, Slot};
use qconvsim::experiments::{
    bell_check, cardinal_inputs, fit_visibility, run_bbm92_with_basis, run_fringe_scan,
    run_single_qubit_conversion, scan_grid, KeyBasis, Party, ScanVariable, Scenario,
};
use qconvsim::statekit::fidelity;
use qconvsim::tomography::{linear_reconstruct, mle_reconstruct, MleConfig};

use counts::CountsFile;
use report::*;
use scenario::ScenarioFile;

const EXIT_USAGE: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qconvsim",
    version,
    about = "Simulator for an on-chip time-bin to path qubit encoding converter",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against the schema and print all violations.
    Validate { scenario: PathBuf },
    /// Run an experiment described by a scenario file.
    Run {
        #[arg(value_enum)]
        kind: ExperimentKind,
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write fringe scan points as CSV (fringe runs only).
        #[arg(long)]
        fringe_csv: Option<PathBuf>,
        /// Override the scenario pulse budget (shots per basis for tomo).
        #[arg(long)]
        pulses: Option<u64>,
        /// Scan variable for fringe runs.
        #[arg(long, value_enum, default_value_t = ScanKind::AlicePhase)]
        scan: ScanKind,
        /// Grid points for fringe runs (even spacing over 2π).
        #[arg(long, default_value_t = 17)]
        points: usize,
        /// Which sifted basis enters the key rate (qkd runs only).
        #[arg(long, value_enum, default_value_t = KeyBasisArg::Both)]
        key_basis: KeyBasisArg,
        /// Suppress the report on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Reconstruct a state from an externally supplied counts file.
    TomoStandalone {
        counts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Tomo,
    Fringe,
    Qkd,
    Convert,
}

impl ExperimentKind {
    fn name(self) -> &'static str {
        match self {
            ExperimentKind::Tomo => "tomo",
            ExperimentKind::Fringe => "fringe",
            ExperimentKind::Qkd => "qkd",
            ExperimentKind::Convert => "convert",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanKind {
    AlicePhase,
    Theta,
}

#[derive(Clone, Copy, ValueEnum)]
enum KeyBasisArg {
    Both,
    Z,
    X,
}

impl KeyBasisArg {
    fn to_lib(self) -> KeyBasis {
        match self {
            KeyBasisArg::Both => KeyBasis::Both,
            KeyBasisArg::Z => KeyBasis::Z,
            KeyBasisArg::X => KeyBasis::X,
        }
    }

    fn name(self) -> &'static str {
        match self {
            KeyBasisArg::Both => "both",
            KeyBasisArg::Z => "z",
            KeyBasisArg::X => "x",
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };

    let outcome = match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Run {
            kind,
            scenario,
            seed,
            out,
            fringe_csv,
            pulses,
            scan,
            points,
            key_basis,
            quiet,
        } => cmd_run(
            kind, &scenario, seed, out, fringe_csv, pulses, scan, points, key_basis, quiet,
        ),
        Command::TomoStandalone { counts, out, quiet } => cmd_tomo_standalone(&counts, out, quiet),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

/// Caps the rayon pool from QCONVSIM_THREADS; results never depend on the
/// thread count, only throughput does.
fn configure_threads() {
    if let Ok(value) = std::env::var("QCONVSIM_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn load_scenario_file(path: &Path) -> Result<ScenarioFile, (u8, anyhow::Error)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (EXIT_RUNTIME, anyhow!("cannot read {}: {e}", path.display())))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| (EXIT_SCHEMA, anyhow!("malformed scenario document: {e}")))?;
    let violations = file.violations();
    if !violations.is_empty() {
        return Err((
            EXIT_SCHEMA,
            anyhow!("invalid scenario:\n  {}", violations.join("\n  ")),
        ));
    }
    Ok(file)
}

fn cmd_validate(path: &Path) -> Result<ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Ok(ExitCode::from(EXIT_RUNTIME));
        }
    };
    let file: ScenarioFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("invalid: malformed scenario document: {e}");
            return Ok(ExitCode::from(EXIT_SCHEMA));
        }
    };
    let violations = file.violations();
    if violations.is_empty() {
        println!("ok: {} (hash {})", path.display(), file.hash());
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("invalid: {v}");
        }
        Ok(ExitCode::from(EXIT_SCHEMA))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    kind: ExperimentKind,
    scenario_path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    fringe_csv: Option<PathBuf>,
    pulses: Option<u64>,
    scan: ScanKind,
    points: usize,
    key_basis: KeyBasisArg,
    quiet: bool,
) -> Result<ExitCode> {
    let mut file = match load_scenario_file(scenario_path) {
        Ok(f) => f,
        Err((code, e)) => {
            eprintln!("error: {e:#}");
            return Ok(ExitCode::from(code));
        }
    };
    if let Some(seed) = seed {
        file.seed = seed;
    }
    if let Some(pulses) = pulses {
        file.pulses = pulses;
    }
    let scenario = file.to_scenario();
    let started = Instant::now();

    let results = match kind {
        ExperimentKind::Tomo => run_tomo_experiment(&scenario)?,
        ExperimentKind::Fringe => {
            let (results, dataset) = run_fringe_experiment(&scenario, scan, points)?;
            if let Some(csv_path) = &fringe_csv {
                write_fringe_csv(csv_path, &dataset)?;
            }
            results
        }
        ExperimentKind::Qkd => {
            let report = run_bbm92_with_basis(&scenario, key_basis.to_lib())?;
            ResultsSection::Qkd(QkdResults {
                key_basis: key_basis.name().to_string(),
                report,
            })
        }
        ExperimentKind::Convert => run_convert_experiment(&scenario)?,
    };

    let report = ReportFile {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_hash: file.hash(),
        seed: file.seed,
        experiment: kind.name().to_string(),
        results,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    emit_report(&report, out.as_deref(), quiet)?;
    Ok(ExitCode::SUCCESS)
}

fn run_tomo_experiment(scenario: &Scenario) -> Result<ResultsSection> {
    let outcomes = run_single_qubit_conversion(scenario, &cardinal_inputs())?;
    let states: Vec<TomoStateResult> = outcomes
        .iter()
        .map(|o| TomoStateResult {
            label: o.label.clone(),
            counts: o.counts,
            fidelity: o.tomo.fidelity_vs_target.expect("target supplied"),
            likelihood: o.tomo.likelihood,
            optimizer_iterations: o.tomo.iterations,
        })
        .collect();
    let average_fidelity = states.iter().map(|s| s.fidelity).sum::<f64>() / states.len() as f64;
    Ok(ResultsSection::Tomo(TomoResults {
        shots_per_basis: scenario.pulses,
        states,
        average_fidelity,
    }))
}

fn run_fringe_experiment(
    scenario: &Scenario,
    scan: ScanKind,
    points: usize,
) -> Result<(ResultsSection, qconvsim::experiments::FringeDataset)> {
    let variable = match scan {
        ScanKind::AlicePhase => ScanVariable::AlicePhase,
        ScanKind::Theta => ScanVariable::SourceTheta,
    };
    let grid = scan_grid(points, std::f64::consts::TAU);
    let dataset = run_fringe_scan(scenario, variable, &grid)?;
    let fit = fit_visibility(&dataset)?;
    let results = ResultsSection::Fringe(FringeResults {
        scan: variable,
        points: dataset.points.len(),
        pulses_per_point: scenario.pulses,
        bell_violation: bell_check(&fit),
        fit,
    });
    Ok((results, dataset))
}

/// Deterministic converter characterization: route each cardinal state
/// through the converter, quote the windowed fidelity against the ideal
/// path target and the aligned weight of the reverse round trip.
fn run_convert_experiment(scenario: &Scenario) -> Result<ResultsSection> {
    let converter = scenario.effective_converter(Party::Alice)?;
    let detector = scenario.detector(Party::Alice);
    let mut states = Vec::new();
    for (label, input) in cardinal_inputs() {
        let slots = convert(&input, &converter)?;
        let windowed = windowed_qubit(&slots, detector.window_ps, detector.jitter_fwhm_ps);
        let windowed_fidelity = fidelity(&windowed.normalized()?, &input.density())?;
        let aligned = slots
            .aligned_pure_state()
            .ok_or_else(|| anyhow!("empty aligned slot for {label}"))?;
        let back = reverse_convert(&aligned, &converter)?;
        let reverse_round_trip_fidelity =
            fidelity(&back.block(Slot::Aligned).normalized()?, &input.density())?;
        states.push(ConvertStateResult {
            label,
            aligned_trace: slots.slot_trace(Slot::Aligned),
            leakage_trace: slots.slot_trace(Slot::Early) + slots.slot_trace(Slot::Late),
            windowed_fidelity,
            reverse_round_trip_fidelity,
        });
    }
    let average = states.iter().map(|s| s.windowed_fidelity).sum::<f64>() / states.len() as f64;
    Ok(ResultsSection::Convert(ConvertResults {
        states,
        average_windowed_fidelity: average,
    }))
}

fn cmd_tomo_standalone(path: &Path, out: Option<PathBuf>, quiet: bool) -> Result<ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Ok(ExitCode::from(EXIT_RUNTIME));
        }
    };
    let file: CountsFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: malformed counts document: {e}");
            return Ok(ExitCode::from(EXIT_SCHEMA));
        }
    };
    let violations = file.violations();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invalid: {v}");
        }
        return Ok(ExitCode::from(EXIT_SCHEMA));
    }

    let counts = file.to_count_set();
    let started = Instant::now();
    let (rho_lin, physical) = linear_reconstruct(&counts)?;
    let stokes = rho_lin.stokes()?;
    let target = file.target_density();
    let mle = mle_reconstruct(&counts, &MleConfig::default(), target.as_ref())?;

    let rho = &mle.rho_rec;
    let results = ResultsSection::Standalone(StandaloneResults {
        stokes: [stokes.s0, stokes.s1, stokes.s2, stokes.s3],
        linear_physical: physical,
        mle_likelihood: mle.likelihood,
        mle_density_re: [
            [rho.entry(0, 0).re, rho.entry(0, 1).re],
            [rho.entry(1, 0).re, rho.entry(1, 1).re],
        ],
        mle_density_im: [
            [rho.entry(0, 0).im, rho.entry(0, 1).im],
            [rho.entry(1, 0).im, rho.entry(1, 1).im],
        ],
        fidelity_vs_target: mle.fidelity_vs_target,
    });

    let report = ReportFile {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_hash: String::new(),
        seed: 0,
        experiment: "tomo-standalone".to_string(),
        results,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    emit_report(&report, out.as_deref(), quiet)?;
    Ok(ExitCode::SUCCESS)
}

fn emit_report(report: &ReportFile, out: Option<&Path>, quiet: bool) -> Result<()> {
    let json = serde_json::to_string_pretty(report).context("report serialization")?;
    if let Some(path) = out {
        std::fs::write(path, format!("{json}\n"))
            .with_context(|| format!("writing report to {}", path.display()))?;
    }
    if !quiet {
        println!("{json}");
    }
    Ok(())
}

/// Locale-independent CSV: '.' decimal point, '\n' newlines.
fn write_fringe_csv(path: &Path, dataset: &qconvsim::experiments::FringeDataset) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("creating CSV at {}", path.display()))?;
    f.write_all(b"scan_value_rad,coincidences,stderr\n")?;
    for p in &dataset.points {
        writeln!(f, "{},{},{}", p.scan_value_rad, p.coincidences, p.stderr)?;
    }
    Ok(())
}
