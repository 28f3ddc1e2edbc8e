//! Scenario files and the experiment drivers behind the `afdm` binary.
//!
//! A scenario is a flat TOML document:
//!
//! ```toml
//! n_c = 512
//! k_chirps = 8
//! preset = "proposed"
//! l_max = 10
//! k_max = 3
//! snr_db = 20.0
//! pilot_overhead = 1.0
//! seed = 7
//!
//! [[targets]]
//! delay = 10
//! doppler = 3
//! power = 1.0
//! ```
//!
//! A target block may also be written `[[paths]]` with `l`/`k` for the taps
//! and either `power` (plus an optional `phase` in radians) or
//! `gain_re`/`gain_im`.
//!
//! Every run writes `<kind>_<preset>_<algorithm>.csv` files, a `manifest.json`
//! with the fully resolved settings and a `schema.json` describing the CSV
//! columns. A failed run removes whatever it had written.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{af_surface, write_surface_csv};
use crate::channel::{apply_channel, complex_gaussian, PathTap};
use crate::dd_daft::{io_convolve, io_general, io_predict, vector_to_grid, DdGrid};
use crate::error::{AfdmError, Result};
use crate::metrics::{
    build_frame, run_ber, run_sensing, simulate_sensing, trial_rng, write_sweep_csv, FadingTap, FrameSpec,
    MetricReport, SensingSetup, TfmfReference,
};
use crate::params::{classic_params, ocdm_params, ofdm_params, proposed_params, AfdmConfig, Preset, ScenarioConfig};
use crate::sensing::{dechirp, ddmf, tfmf, Algorithm, CfarConfig};
use crate::waveform::{demodulate, modulate, DaftSymbols};
use crate::C64;

/// Largest error tolerated by `io_check`.
pub const IO_CHECK_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_SNR_POINTS: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
pub const DEFAULT_PO_POINTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const RUNTIME_SIZES: [usize; 4] = [256, 512, 1024, 2048];

const SUBCARRIER_SPACING_HZ: f64 = 15e3;
const CARRIER_HZ: f64 = 79e9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n_c: Option<usize>,
    k_chirps: Option<usize>,
    n_p: Option<usize>,
    preset: Option<String>,
    k_max: Option<usize>,
    l_max: Option<usize>,
    snr_db: Option<f64>,
    pilot_overhead: Option<f64>,
    seed: Option<u64>,
    l_cpp: Option<usize>,
    carrier_hz: Option<f64>,
    subcarrier_spacing_hz: Option<f64>,
    #[serde(alias = "paths")]
    targets: Option<Vec<TargetEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetEntry {
    #[serde(alias = "l")]
    delay: usize,
    #[serde(alias = "k")]
    doppler: i64,
    power: Option<f64>,
    phase: Option<f64>,
    gain_re: Option<f64>,
    gain_im: Option<f64>,
}

impl TargetEntry {
    fn gain(&self) -> Result<C64> {
        match (self.power, self.gain_re, self.gain_im) {
            (Some(p), None, None) if p >= 0.0 => Ok(C64::from_polar(p.sqrt(), self.phase.unwrap_or(0.0))),
            (Some(p), None, None) => Err(AfdmError::InvalidConfig(format!("target power {p} is negative"))),
            (None, re, im) if self.phase.is_none() && (re.is_some() || im.is_some()) => {
                Ok(C64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)))
            }
            _ => Err(AfdmError::InvalidConfig(format!(
                "target ({}, {}) needs either power [phase] or gain_re/gain_im",
                self.delay, self.doppler
            ))),
        }
    }
}

/// A resolved scenario: geometry, link settings and targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub n_c: usize,
    pub k_chirps: usize,
    pub n_p: usize,
    pub preset: Preset,
    pub l_cpp: usize,
    pub link: ScenarioConfig,
    /// Scatterers; `power` is `|h|^2`. The BER runs draw Rayleigh gains with
    /// that mean power.
    pub targets: Vec<FadingTap>,
    /// Fixed gains used for sensing, one per target.
    pub gains: Vec<C64>,
}

fn missing(key: &str) -> AfdmError {
    AfdmError::InvalidConfig(format!("missing key {key}"))
}

impl Scenario {
    /// Parses a scenario document. `n_c` and one of `k_chirps` / `n_p` are
    /// required; unknown keys are rejected.
    pub fn from_toml(name: &str, text: &str) -> Result<Self> {
        let f: ScenarioFile =
            toml::from_str(text).map_err(|e| AfdmError::InvalidConfig(format!("scenario {name}: {}", e.message())))?;
        let n_c = f.n_c.ok_or_else(|| missing("n_c"))?;
        if n_c == 0 {
            return Err(AfdmError::InvalidConfig("n_c must be positive".into()));
        }
        let k_chirps = match (f.k_chirps, f.n_p) {
            (Some(k), Some(p)) if k * p != n_c => {
                return Err(AfdmError::InvalidConfig(format!(
                    "k_chirps * n_p = {} does not equal n_c = {n_c}",
                    k * p
                )))
            }
            (Some(k), _) => k,
            (None, Some(p)) if p > 0 && n_c % p == 0 => n_c / p,
            (None, Some(p)) => return Err(AfdmError::InvalidConfig(format!("n_p = {p} does not divide n_c = {n_c}"))),
            (None, None) => return Err(missing("k_chirps")),
        };
        if k_chirps == 0 || n_c % k_chirps != 0 {
            return Err(AfdmError::InvalidConfig(format!(
                "k_chirps = {k_chirps} does not divide n_c = {n_c}"
            )));
        }
        let preset = match f.preset {
            Some(p) => p.parse()?,
            None => Preset::Proposed,
        };
        let entries = f.targets.unwrap_or_default();
        let gains = entries.iter().map(TargetEntry::gain).collect::<Result<Vec<_>>>()?;
        let targets: Vec<FadingTap> = entries
            .iter()
            .zip(&gains)
            .map(|(e, g)| tap(e.delay, e.doppler, e.power.unwrap_or_else(|| g.norm_sqr())))
            .collect();
        let l_max = f
            .l_max
            .unwrap_or_else(|| targets.iter().map(|t| t.delay).max().unwrap_or(0));
        let k_max = f
            .k_max
            .unwrap_or_else(|| targets.iter().map(|t| t.doppler.unsigned_abs() as usize).max().unwrap_or(0));
        let spacing = f.subcarrier_spacing_hz.unwrap_or(SUBCARRIER_SPACING_HZ);
        let s = Scenario {
            name: name.to_string(),
            n_c,
            k_chirps,
            n_p: n_c / k_chirps,
            preset,
            l_cpp: f.l_cpp.unwrap_or(l_max + 1),
            link: ScenarioConfig {
                l_max,
                k_max,
                bandwidth_hz: n_c as f64 * spacing,
                carrier_hz: f.carrier_hz.unwrap_or(CARRIER_HZ),
                subcarrier_spacing_hz: spacing,
                snr_db: f.snr_db.unwrap_or(20.0),
                pilot_overhead: f.pilot_overhead.unwrap_or(1.0),
                rng_seed: f.seed.unwrap_or(0),
            },
            targets,
            gains,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AfdmError::Io(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Self::from_toml(name, &text)
    }

    /// A file path if one exists, otherwise a builtin name.
    pub fn resolve(arg: &str) -> Result<Self> {
        let path = Path::new(arg);
        if path.is_file() {
            return Self::from_file(path);
        }
        builtin_scenarios()
            .into_iter()
            .find(|s| s.name == arg)
            .ok_or_else(|| AfdmError::InvalidConfig(format!("no scenario file or builtin named `{arg}`")))
    }

    fn validate(&self) -> Result<()> {
        for t in &self.targets {
            if t.delay > self.link.l_max || t.doppler.unsigned_abs() as usize > self.link.k_max {
                return Err(AfdmError::InvalidConfig(format!(
                    "target ({}, {}) outside l_max = {}, k_max = {}",
                    t.delay, t.doppler, self.link.l_max, self.link.k_max
                )));
            }
            if !(t.power >= 0.0 && t.power.is_finite()) {
                return Err(AfdmError::InvalidConfig(format!("target power {} is not usable", t.power)));
            }
        }
        self.config_for(self.preset).map(|_| ())
    }

    /// Waveform configuration for `preset` on this scenario's `N_p x K` grid.
    pub fn config_for(&self, preset: Preset) -> Result<AfdmConfig> {
        let c = match preset {
            Preset::Proposed => proposed_params(self.n_p, self.k_chirps)?,
            Preset::Classic => classic_params(self.n_c, self.link.k_max)?.with_grid(self.k_chirps)?,
            Preset::Ofdm => ofdm_params(self.n_c)?.with_grid(self.k_chirps)?,
            Preset::Ocdm => ocdm_params(self.n_c)?.with_grid(self.k_chirps)?,
            Preset::Periodic => {
                return Err(AfdmError::InvalidConfig(
                    "the Z_A family is not available as a scenario preset".into(),
                ))
            }
        };
        let c = c.with_cpp(self.l_cpp)?;
        self.link.validate(&c)?;
        Ok(c)
    }

    /// Targets with their fixed gains.
    pub fn sensing_paths(&self) -> Vec<PathTap> {
        self.targets
            .iter()
            .zip(&self.gains)
            .map(|(t, g)| PathTap::new(*g, t.delay, t.doppler))
            .collect()
    }
}

fn tap(delay: usize, doppler: i64, power: f64) -> FadingTap {
    FadingTap { delay, doppler, power }
}

fn builtin(name: &str, n_c: usize, k_chirps: usize, l_max: usize, k_max: usize, snr_db: f64, targets: Vec<FadingTap>) -> Scenario {
    let gains = targets.iter().map(|t| C64::new(t.power.sqrt(), 0.0)).collect();
    Scenario {
        name: name.to_string(),
        n_c,
        k_chirps,
        n_p: n_c / k_chirps,
        preset: Preset::Proposed,
        l_cpp: l_max + 1,
        link: ScenarioConfig {
            l_max,
            k_max,
            bandwidth_hz: n_c as f64 * SUBCARRIER_SPACING_HZ,
            carrier_hz: CARRIER_HZ,
            subcarrier_spacing_hz: SUBCARRIER_SPACING_HZ,
            snr_db,
            pilot_overhead: 1.0,
            rng_seed: 0,
        },
        targets,
        gains,
    }
}

/// Three scatterers at `(3,0)`, `(7,2)`, `(10,3)` with powers 0.6, 0.3, 0.1.
pub fn three_targets() -> Vec<FadingTap> {
    vec![tap(3, 0, 0.6), tap(7, 2, 0.3), tap(10, 3, 0.1)]
}

/// The named scenarios: `table1` (the 512-subcarrier system), `fig4` (three
/// scatterers), `fig5` (one unit target at `(10,3)`) and `desk` (a 32-sample
/// instance for quick runs).
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![
        builtin("table1", 512, 8, 10, 3, 20.0, three_targets()),
        builtin("fig4", 512, 8, 10, 3, 20.0, three_targets()),
        builtin("fig5", 512, 8, 10, 3, 10.0, vec![tap(10, 3, 1.0)]),
        builtin("desk", 32, 4, 3, 1, 20.0, vec![tap(1, 0, 0.6), tap(3, 1, 0.4)]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Ddm,
    AfSurface,
    SnrSweep,
    PoSweep,
    PdCurve,
    BerCurve,
    IoCheck,
    RuntimeScaling,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Ddm,
        ExperimentKind::AfSurface,
        ExperimentKind::SnrSweep,
        ExperimentKind::PoSweep,
        ExperimentKind::PdCurve,
        ExperimentKind::BerCurve,
        ExperimentKind::IoCheck,
        ExperimentKind::RuntimeScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Ddm => "ddm",
            ExperimentKind::AfSurface => "af_surface",
            ExperimentKind::SnrSweep => "snr_sweep",
            ExperimentKind::PoSweep => "po_sweep",
            ExperimentKind::PdCurve => "pd_curve",
            ExperimentKind::BerCurve => "ber_curve",
            ExperimentKind::IoCheck => "io_check",
            ExperimentKind::RuntimeScaling => "runtime_scaling",
        }
    }

    /// Trials (or symbols, instances, repetitions) when none are given.
    pub fn default_trials(self) -> usize {
        match self {
            ExperimentKind::Ddm | ExperimentKind::AfSurface => 1,
            ExperimentKind::IoCheck => 100,
            ExperimentKind::RuntimeScaling => 5,
            _ => 200,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = AfdmError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_").to_ascii_lowercase();
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| AfdmError::InvalidConfig(format!("unknown experiment kind `{s}`")))
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scenario: Scenario,
    pub algorithms: Vec<Algorithm>,
    pub presets: Vec<Preset>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub trials: usize,
    pub snr_points: Vec<f64>,
    pub po_points: Vec<f64>,
    pub tfmf_reference: TfmfReference,
    pub redraw_data: bool,
    pub cfar: CfarConfig,
}

impl ExperimentSpec {
    /// Defaults: the scenario's preset and seed, every algorithm, the kind's
    /// default trial count and the standard SNR / PO grids.
    pub fn new(kind: ExperimentKind, scenario: Scenario, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            kind,
            algorithms: Algorithm::ALL.to_vec(),
            presets: vec![scenario.preset],
            out_dir: out_dir.into(),
            seed: scenario.link.rng_seed,
            trials: kind.default_trials(),
            snr_points: DEFAULT_SNR_POINTS.to_vec(),
            po_points: DEFAULT_PO_POINTS.to_vec(),
            tfmf_reference: TfmfReference::Full,
            redraw_data: true,
            cfar: CfarConfig::default(),
            scenario,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(AfdmError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.presets.is_empty() || self.algorithms.is_empty() {
            return Err(AfdmError::InvalidConfig("at least one preset and one algorithm are needed".into()));
        }
        for &p in &self.presets {
            self.scenario.config_for(p)?;
        }
        for &po in &self.po_points {
            FrameSpec::from_po(self.scenario.n_c, po)?;
        }
        let needs_targets = matches!(
            self.kind,
            ExperimentKind::Ddm
                | ExperimentKind::SnrSweep
                | ExperimentKind::PoSweep
                | ExperimentKind::PdCurve
                | ExperimentKind::BerCurve
        );
        if needs_targets && self.scenario.targets.is_empty() {
            return Err(AfdmError::InvalidConfig(format!(
                "scenario `{}` has no targets",
                self.scenario.name
            )));
        }
        if self.kind == ExperimentKind::IoCheck && !self.presets.contains(&Preset::Proposed) {
            return Err(AfdmError::RequiresProposed);
        }
        Ok(())
    }
}

/// Whether `algorithm` can run on `preset`.
pub fn supports(preset: Preset, algorithm: Algorithm) -> bool {
    algorithm != Algorithm::Ddmf || preset == Preset::Proposed
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// False when a numerical check (`io_check`) exceeded its tolerance.
    pub checks_passed: bool,
    pub summary: Vec<String>,
}

impl RunOutcome {
    /// Process exit code: 0 success, 2 numerical-check failure.
    pub fn exit_code(&self) -> i32 {
        if self.checks_passed {
            0
        } else {
            2
        }
    }
}

/// Process exit code for an error: 1 for configuration problems.
pub fn error_exit_code(_: &AfdmError) -> i32 {
    1
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn create(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        let path = self.dir.join(name);
        let f = fs::File::create(&path).map_err(|e| AfdmError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn cleanup(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
    }
}

fn csv_name(kind: ExperimentKind, preset: Preset, algorithm: &str) -> String {
    format!("{kind}_{preset}_{algorithm}.csv")
}

/// Runs an experiment and writes its artifacts. On error every file written
/// so far is removed.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir).map_err(|e| AfdmError::Io(format!("{}: {e}", spec.out_dir.display())))?;
    let mut w = Writer {
        dir: spec.out_dir.clone(),
        files: Vec::new(),
    };
    match run_inner(spec, &mut w) {
        Ok((checks_passed, summary)) => Ok(RunOutcome {
            files: w.files,
            checks_passed,
            summary,
        }),
        Err(e) => {
            w.cleanup();
            Err(e)
        }
    }
}

fn run_inner(spec: &ExperimentSpec, w: &mut Writer) -> Result<(bool, Vec<String>)> {
    let mut summary = Vec::new();
    let mut skipped = Vec::new();
    let mut passed = true;
    let sc = &spec.scenario;
    match spec.kind {
        ExperimentKind::Ddm => {
            for &preset in &spec.presets {
                let config = sc.config_for(preset)?;
                let algs = compatible(spec, preset, &mut skipped);
                let mut setup = sensing_setup(spec, &config, sc.link.snr_db, sc.link.pilot_overhead)?;
                setup.redraw_data = spec.redraw_data;
                let mut rng = trial_rng(spec.seed, 0);
                let frame = build_frame(&config, &setup.frame, &mut rng)?;
                let maps = simulate_sensing(&setup, &frame, &algs, &mut rng)?;
                for (alg, map) in algs.iter().zip(&maps) {
                    let mut f = w.create(&csv_name(spec.kind, preset, alg.name()))?;
                    map.write_csv(&mut f)?;
                    f.flush()?;
                    let (l, k, _) = crate::sensing::peak(map)?;
                    summary.push(format!("{preset}/{alg}: peak at ({l}, {})", crate::sensing::signed_index(k, config.k_chirps())));
                }
            }
        }
        ExperimentKind::AfSurface => {
            for &preset in &spec.presets {
                let config = sc.config_for(preset)?;
                let surface = af_surface(&config, (0, 0))?;
                let mut f = w.create(&csv_name(spec.kind, preset, "dpaf"))?;
                write_surface_csv(&mut f, config.n_c(), &surface)?;
                f.flush()?;
            }
        }
        ExperimentKind::SnrSweep | ExperimentKind::PdCurve | ExperimentKind::PoSweep => {
            for &preset in &spec.presets {
                let config = sc.config_for(preset)?;
                let algs = compatible(spec, preset, &mut skipped);
                let points: Vec<(f64, f64)> = if spec.kind == ExperimentKind::PoSweep {
                    spec.po_points.iter().map(|&po| (sc.link.snr_db, po)).collect()
                } else {
                    spec.snr_points.iter().map(|&snr| (snr, sc.link.pilot_overhead)).collect()
                };
                let mut rows: Vec<Vec<MetricReport>> = vec![Vec::new(); algs.len()];
                for (snr, po) in points {
                    let setup = sensing_setup(spec, &config, snr, po)?;
                    let stats = run_sensing(&setup, &algs, spec.trials, spec.seed)?;
                    for (i, s) in stats.iter().enumerate() {
                        rows[i].push(MetricReport {
                            snr_db: snr,
                            po: setup.frame.po(config.n_c()),
                            algorithm: s.algorithm.name().to_string(),
                            preset: preset.name().to_string(),
                            pslr_db: s.pslr_db,
                            image_snr_db: s.image_snr_db,
                            pd: s.pd(),
                            ber: f64::NAN,
                            trials: s.trials,
                        });
                    }
                }
                for (alg, rows) in algs.iter().zip(&rows) {
                    let mut f = w.create(&csv_name(spec.kind, preset, alg.name()))?;
                    write_sweep_csv(&mut f, rows)?;
                    f.flush()?;
                }
            }
        }
        ExperimentKind::BerCurve => {
            for &preset in &spec.presets {
                let config = sc.config_for(preset)?;
                let mut rows = Vec::new();
                for &snr in &spec.snr_points {
                    let stats = run_ber(&config, &sc.targets, snr, spec.trials, spec.seed)?;
                    rows.push(MetricReport {
                        snr_db: snr,
                        po: 0.0,
                        algorithm: "lmmse".into(),
                        preset: preset.name().to_string(),
                        pslr_db: f64::NAN,
                        image_snr_db: f64::NAN,
                        pd: f64::NAN,
                        ber: stats.ber(),
                        trials: stats.symbols,
                    });
                }
                let mut f = w.create(&csv_name(spec.kind, preset, "lmmse"))?;
                write_sweep_csv(&mut f, &rows)?;
                f.flush()?;
            }
        }
        ExperimentKind::IoCheck => {
            let config = sc.config_for(Preset::Proposed)?;
            let mut f = w.create(&csv_name(spec.kind, Preset::Proposed, "io"))?;
            writeln!(f, "instance,paths,predict_err,convolve_err,general_err")?;
            let mut worst = 0.0f64;
            for i in 0..spec.trials as u64 {
                let mut rng = trial_rng(spec.seed, i);
                let errs = io_check_instance(&config, &sc.link, &mut rng)?;
                writeln!(f, "{i},{},{},{},{}", errs.0, errs.1, errs.2, errs.3)?;
                worst = worst.max(errs.1).max(errs.2).max(errs.3);
            }
            f.flush()?;
            passed = worst < IO_CHECK_TOLERANCE;
            summary.push(format!("max abs error {worst:e} (tolerance {IO_CHECK_TOLERANCE:e})"));
        }
        ExperimentKind::RuntimeScaling => {
            for &preset in &spec.presets {
                let algs = compatible(spec, preset, &mut skipped);
                for alg in algs {
                    let mut f = w.create(&csv_name(spec.kind, preset, alg.name()))?;
                    writeln!(f, "n_c,seconds")?;
                    let mut pts = Vec::new();
                    for &n_c in &RUNTIME_SIZES {
                        let t = time_pipeline(preset, alg, n_c, spec.trials, spec.seed)?;
                        writeln!(f, "{n_c},{t}")?;
                        pts.push((n_c as f64, t));
                    }
                    f.flush()?;
                    summary.push(format!("{preset}/{alg}: log-log slope {:.2}", loglog_slope(&pts)));
                }
            }
        }
    }
    for s in &skipped {
        summary.push(format!("skipped {s}"));
    }
    write_manifest(spec, w, &skipped, passed)?;
    Ok((passed, summary))
}

fn compatible(spec: &ExperimentSpec, preset: Preset, skipped: &mut Vec<String>) -> Vec<Algorithm> {
    spec.algorithms
        .iter()
        .copied()
        .filter(|&a| {
            let ok = supports(preset, a);
            if !ok {
                skipped.push(format!("{preset}/{a}"));
            }
            ok
        })
        .collect()
}

fn sensing_setup(spec: &ExperimentSpec, config: &AfdmConfig, snr_db: f64, po: f64) -> Result<SensingSetup> {
    let mut s = SensingSetup::new(
        config.clone(),
        spec.scenario.sensing_paths(),
        snr_db,
        FrameSpec::from_po(config.n_c(), po)?,
    );
    s.tfmf_reference = spec.tfmf_reference;
    s.redraw_data = spec.redraw_data;
    s.cfar = spec.cfar;
    Ok(s)
}

/// A random grid and path set within the scenario's tap ranges, checked
/// against the time-domain chain. Returns the path count and the errors of
/// the compact, kernel and general forms.
fn io_check_instance<R: Rng + ?Sized>(config: &AfdmConfig, link: &ScenarioConfig, rng: &mut R) -> Result<(usize, f64, f64, f64)> {
    let n_c = config.n_c();
    let x = DaftSymbols((0..n_c).map(|_| complex_gaussian(rng, 1.0)).collect());
    let n_paths = rng.random_range(1..=3);
    let k_max = link.k_max as i64;
    let paths: Vec<PathTap> = (0..n_paths)
        .map(|_| {
            PathTap::new(
                complex_gaussian(rng, 1.0),
                rng.random_range(0..=link.l_max),
                rng.random_range(-k_max..=k_max),
            )
        })
        .collect();
    let y = demodulate(config, &apply_channel(config, &modulate(config, &x)?, &paths)?)?;
    let want = vector_to_grid(config, &y)?;
    let xg = vector_to_grid(config, &x)?;
    let e1 = io_predict(config, &xg, &paths)?.max_abs_diff(&want);
    let e2 = io_convolve(config, &xg, &paths)?.max_abs_diff(&want);
    let e3 = io_general(config, &xg, &paths)?.max_abs_diff(&want);
    Ok((n_paths, e1, e2, e3))
}

/// Least-squares slope of `log t` against `log n`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, t)| (n.ln(), t.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Median wall time of one pipeline call at `n_c` with 8 chirps and an
/// all-data frame, over `reps` batches. Each batch repeats the call until it
/// has run for at least 20 ms and reports the per-call time.
pub fn time_pipeline(preset: Preset, algorithm: Algorithm, n_c: usize, reps: usize, seed: u64) -> Result<f64> {
    let k = 8;
    let sc = Scenario {
        n_c,
        k_chirps: k,
        n_p: n_c / k,
        preset,
        ..builtin_scenarios().remove(0)
    };
    let config = sc.config_for(preset)?;
    let mut rng = trial_rng(seed, 0);
    let frame = build_frame(&config, &FrameSpec::all_data(), &mut rng)?;
    let s = modulate(&config, &frame.symbols)?;
    let r = apply_channel(&config, &s, &sc.sensing_paths())?;
    let pilot = modulate(&config, &frame.pilot)?;
    let xg = vector_to_grid(&config, &frame.symbols)?;
    let yg: DdGrid = vector_to_grid(&config, &demodulate(&config, &r)?)?;
    let call = || -> Result<()> {
        match algorithm {
            Algorithm::Tfmf => tfmf(&config, &r, &s).map(|_| ()),
            Algorithm::Dechirp => dechirp(&config, &r, &pilot).map(|_| ()),
            Algorithm::Ddmf => ddmf(&config, &yg, &xg).map(|_| ()),
        }
    };
    call()?;
    let mut times = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let mut calls = 0u32;
        while calls == 0 || start.elapsed().as_secs_f64() < 0.02 {
            call()?;
            calls += 1;
        }
        times.push(start.elapsed().as_secs_f64() / calls as f64);
    }
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

#[derive(Serialize)]
struct ConfigSummary {
    preset: Preset,
    n_c: usize,
    k_chirps: usize,
    n_p: usize,
    c1: String,
    c2: String,
    l_cpp: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    spec: &'a ExperimentSpec,
    configs: Vec<ConfigSummary>,
    frame_rule: &'static str,
    noise_reference: &'static str,
    target_association: &'static str,
    cfar_alpha: f64,
    cfar_training_cells: usize,
    skipped: &'a [String],
    checks_passed: bool,
    files: Vec<String>,
}

fn write_manifest(spec: &ExperimentSpec, w: &mut Writer, skipped: &[String], passed: bool) -> Result<()> {
    let configs = spec
        .presets
        .iter()
        .map(|&p| {
            let c = spec.scenario.config_for(p)?;
            Ok(ConfigSummary {
                preset: p,
                n_c: c.n_c(),
                k_chirps: c.k_chirps(),
                n_p: c.n_p(),
                c1: c.c1().to_string(),
                c2: c.c2().to_string(),
                l_cpp: c.l_cpp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut files: Vec<String> = w
        .files
        .iter()
        .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(String::from))
        .collect();
    files.push("schema.json".into());
    let manifest = Manifest {
        tool: "afdm",
        version: env!("CARGO_PKG_VERSION"),
        spec,
        configs,
        frame_rule: "pilot at subcarrier 0 with Q zero guards per side; pilot power 2Q+1; unit-power Gray 4QAM data",
        noise_reference: "complex AWGN variance 10^(-snr_db/10) relative to unit transmit sample power",
        target_association: "a CFAR detection within one cell (cyclic Chebyshev distance) of a target",
        cfar_alpha: spec.cfar.alpha(),
        cfar_training_cells: spec.cfar.training_cells(),
        skipped,
        checks_passed: passed,
        files,
    };
    let mut f = w.create("manifest.json")?;
    serde_json::to_writer_pretty(&mut f, &manifest).map_err(|e| AfdmError::Io(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    let mut f = w.create("schema.json")?;
    serde_json::to_writer_pretty(&mut f, &schema(spec.kind)).map_err(|e| AfdmError::Io(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn schema(kind: ExperimentKind) -> serde_json::Value {
    use serde_json::json;
    let sweep = json!([
        {"name": "snr_db", "unit": "dB"},
        {"name": "po", "unit": "fraction"},
        {"name": "algorithm", "unit": "tfmf | dechirp | ddmf | lmmse"},
        {"name": "preset", "unit": "proposed | classic | ofdm | ocdm"},
        {"name": "pslr_db", "unit": "dB, mean over trials"},
        {"name": "image_snr_db", "unit": "dB, mean over trials"},
        {"name": "pd", "unit": "probability"},
        {"name": "ber", "unit": "probability"},
        {"name": "trials", "unit": "count"}
    ]);
    let columns = match kind {
        ExperimentKind::Ddm => json!([
            {"name": "l", "unit": "delay tap"},
            {"name": "k", "unit": "signed Doppler tap"},
            {"name": "magnitude_db", "unit": "dB (20 log10 |z|)"}
        ]),
        ExperimentKind::AfSurface => json!([
            {"name": "l", "unit": "delay shift"},
            {"name": "k", "unit": "Doppler shift"},
            {"name": "re", "unit": "linear"},
            {"name": "im", "unit": "linear"},
            {"name": "magnitude_db", "unit": "dB relative to N_c"}
        ]),
        ExperimentKind::IoCheck => json!([
            {"name": "instance", "unit": "index"},
            {"name": "paths", "unit": "count"},
            {"name": "predict_err", "unit": "max abs error"},
            {"name": "convolve_err", "unit": "max abs error"},
            {"name": "general_err", "unit": "max abs error"}
        ]),
        ExperimentKind::RuntimeScaling => json!([
            {"name": "n_c", "unit": "samples"},
            {"name": "seconds", "unit": "median wall time per call"}
        ]),
        _ => sweep,
    };
    json!({"kind": kind.name(), "file_pattern": format!("{}_<preset>_<algorithm>.csv", kind.name()), "columns": columns})
}
