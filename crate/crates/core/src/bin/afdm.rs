use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use afdm_isac::harness::{builtin_scenarios, error_exit_code, run, ExperimentKind, ExperimentSpec, Scenario};
use afdm_isac::metrics::TfmfReference;
use afdm_isac::sensing::Algorithm;
use afdm_isac::{AfdmError, Preset};

#[derive(Parser)]
#[command(name = "afdm", version, about = "AFDM sensing and communication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Delay-Doppler maps of one noisy echo.
    Ddm(RunArgs),
    /// Ambiguity surface of the zeroth subcarrier.
    AfSurface(RunArgs),
    /// Sensing metrics against SNR.
    SnrSweep(RunArgs),
    /// Sensing metrics against pilot overhead.
    PoSweep(RunArgs),
    /// Detection probability against SNR.
    PdCurve(RunArgs),
    /// LMMSE bit error rate against SNR.
    BerCurve(RunArgs),
    /// Checks the DD-DAFT input-output relation against the time-domain chain.
    IoCheck(RunArgs),
    /// Wall time of the sensing pipelines against N_c.
    RuntimeScaling(RunArgs),
    /// Lists the builtin scenarios.
    Scenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file or builtin name.
    #[arg(long, default_value = "table1")]
    scenario: String,
    /// Waveform presets (comma separated).
    #[arg(long, value_delimiter = ',')]
    preset: Vec<Preset>,
    /// Sensing algorithms (comma separated).
    #[arg(long, value_delimiter = ',')]
    algorithm: Vec<Algorithm>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials, BER symbols, io_check instances or timing batches.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory; defaults to $AFDM_OUT, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SNR in dB for single-point runs.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Pilot overhead for single-point runs.
    #[arg(long)]
    po: Option<f64>,
    /// SNR grid for sweeps (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_points: Vec<f64>,
    /// Pilot-overhead grid for sweeps (comma separated).
    #[arg(long, value_delimiter = ',')]
    po_points: Vec<f64>,
    /// Use only the pilot as the TFMF reference.
    #[arg(long)]
    pilot_reference: bool,
    /// Reuse one set of data symbols across trials.
    #[arg(long)]
    fixed_data: bool,
}

fn build_spec(kind: ExperimentKind, a: RunArgs) -> Result<ExperimentSpec, AfdmError> {
    let mut scenario = Scenario::resolve(&a.scenario)?;
    if let Some(snr) = a.snr_db {
        scenario.link.snr_db = snr;
    }
    if let Some(po) = a.po {
        scenario.link.pilot_overhead = po;
    }
    if let Some(seed) = a.seed {
        scenario.link.rng_seed = seed;
    }
    let out = a
        .out
        .or_else(|| std::env::var_os("AFDM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut spec = ExperimentSpec::new(kind, scenario, out);
    if !a.preset.is_empty() {
        spec.presets = a.preset;
    }
    if !a.algorithm.is_empty() {
        spec.algorithms = a.algorithm;
    }
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if !a.snr_points.is_empty() {
        spec.snr_points = a.snr_points;
    }
    if !a.po_points.is_empty() {
        spec.po_points = a.po_points;
    }
    if a.pilot_reference {
        spec.tfmf_reference = TfmfReference::Pilot;
    }
    spec.redraw_data = !a.fixed_data;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Ddm(a) => (ExperimentKind::Ddm, a),
        Command::AfSurface(a) => (ExperimentKind::AfSurface, a),
        Command::SnrSweep(a) => (ExperimentKind::SnrSweep, a),
        Command::PoSweep(a) => (ExperimentKind::PoSweep, a),
        Command::PdCurve(a) => (ExperimentKind::PdCurve, a),
        Command::BerCurve(a) => (ExperimentKind::BerCurve, a),
        Command::IoCheck(a) => (ExperimentKind::IoCheck, a),
        Command::RuntimeScaling(a) => (ExperimentKind::RuntimeScaling, a),
        Command::Scenarios => {
            for s in builtin_scenarios() {
                println!(
                    "{:<8} n_c={} K={} N_p={} l_max={} k_max={} targets={}",
                    s.name,
                    s.n_c,
                    s.k_chirps,
                    s.n_p,
                    s.link.l_max,
                    s.link.k_max,
                    s.targets.len()
                );
            }
            return ExitCode::SUCCESS;
        }
    };
    let outcome = build_spec(kind, args).and_then(|spec| run(&spec));
    match outcome {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if !o.checks_passed {
                eprintln!("error: numerical check failed");
            }
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
