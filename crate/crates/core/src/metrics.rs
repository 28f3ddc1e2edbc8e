//! Pilot frames, sensing metrics and the LMMSE bit-error pipeline.
//!
//! Monte Carlo runs draw every trial from its own ChaCha stream keyed by
//! `(seed, trial)`, so results do not depend on thread scheduling.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{add_awgn, apply_channel, apply_channel_adjoint, complex_gaussian, noise_variance, PathTap};
use crate::dd_daft::vector_to_grid;
use crate::error::{AfdmError, Result};
use crate::params::AfdmConfig;
use crate::sensing::{ca_cfar_2d, cell_distance, dechirp, ddmf, tfmf, Algorithm, CfarConfig, DelayDopplerMap};
use crate::waveform::{demodulate, modulate, DaftSymbols, TimeSignal};
use crate::C64;

/// Returned by [`pslr`] and [`image_snr`] when there is nothing to compare against.
pub const DB_SENTINEL: f64 = 300.0;

/// Random generator for one Monte Carlo trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Gray-coded 4QAM with unit energy: bit 0 picks the sign of the real part,
/// bit 1 the sign of the imaginary part.
pub fn qam4_map(b0: bool, b1: bool) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(if b0 { -s } else { s }, if b1 { -s } else { s })
}

/// Hard-decision demapping, the inverse of [`qam4_map`].
pub fn qam4_demap(v: C64) -> (bool, bool) {
    (v.re < 0.0, v.im < 0.0)
}

/// Pilot layout. The pilot sits at subcarrier 0 with `q_guard` zero guards on
/// each cyclic side; `None` means no pilot at all (an all-data frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub q_guard: Option<usize>,
    /// Pilot power; defaults to the energy of the slots it displaces.
    pub pilot_power: Option<f64>,
}

impl FrameSpec {
    pub fn all_data() -> Self {
        FrameSpec {
            q_guard: None,
            pilot_power: None,
        }
    }

    pub fn pilot_only(n_c: usize) -> Self {
        FrameSpec {
            q_guard: Some(n_c / 2),
            pilot_power: None,
        }
    }

    /// Smallest guard count whose overhead `(2Q+1)/N_c` reaches `po`;
    /// `po = 0` gives the all-data frame.
    pub fn from_po(n_c: usize, po: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&po) {
            return Err(AfdmError::InvalidConfig(format!("pilot overhead {po} outside [0, 1]")));
        }
        if po == 0.0 {
            return Ok(Self::all_data());
        }
        let need = (po * n_c as f64 - 1.0).max(0.0) / 2.0;
        let q = (need - 1e-9).ceil().max(0.0) as usize;
        Ok(FrameSpec {
            q_guard: Some(q.min(n_c / 2)),
            pilot_power: None,
        })
    }

    /// Occupied slots (pilot plus guards), capped at `N_c`.
    pub fn occupied(&self, n_c: usize) -> usize {
        self.q_guard.map_or(0, |q| (2 * q + 1).min(n_c))
    }

    pub fn po(&self, n_c: usize) -> f64 {
        self.occupied(n_c) as f64 / n_c as f64
    }

    pub fn resolved_pilot_power(&self, n_c: usize) -> f64 {
        self.pilot_power.unwrap_or(self.occupied(n_c) as f64)
    }
}

/// A transmit frame with its pilot-only component and the data bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub symbols: DaftSymbols,
    pub pilot: DaftSymbols,
    /// Subcarriers carrying data, in increasing order.
    pub data_index: Vec<usize>,
    /// Two bits per data subcarrier.
    pub bits: Vec<bool>,
}

/// Builds a frame with unit-power 4QAM data. With the default pilot power
/// the total energy is exactly `N_c`.
pub fn build_frame<R: Rng + ?Sized>(config: &AfdmConfig, spec: &FrameSpec, rng: &mut R) -> Result<Frame> {
    let n_c = config.n_c();
    let mut pilot = DaftSymbols::zeros(n_c);
    let mut reserved = vec![false; n_c];
    if let Some(q) = spec.q_guard {
        let p = spec.resolved_pilot_power(n_c);
        if !(p >= 0.0 && p.is_finite()) {
            return Err(AfdmError::InvalidConfig(format!("pilot power {p} is not usable")));
        }
        pilot.0[0] = C64::new(p.sqrt(), 0.0);
        let q = q.min(n_c / 2);
        for d in 0..=q {
            reserved[d] = true;
            reserved[(n_c - d) % n_c] = true;
        }
    }
    let data_index: Vec<usize> = (0..n_c).filter(|&m| !reserved[m]).collect();
    let mut symbols = pilot.clone();
    let mut bits = Vec::with_capacity(2 * data_index.len());
    for &m in &data_index {
        let (b0, b1) = (rng.random::<bool>(), rng.random::<bool>());
        bits.push(b0);
        bits.push(b1);
        symbols.0[m] = qam4_map(b0, b1);
    }
    Ok(Frame {
        symbols,
        pilot,
        data_index,
        bits,
    })
}

fn check_target(map: &DelayDopplerMap, target: (usize, usize)) -> Result<()> {
    let (rows, cols) = map.dims();
    if target.0 >= rows || target.1 >= cols {
        return Err(AfdmError::IndexOutOfRange(format!(
            "target {target:?} outside a {rows}x{cols} map"
        )));
    }
    Ok(())
}

/// Peak-to-maximum-sidelobe ratio in dB at `target`. An empty target cell
/// scores `-DB_SENTINEL`, an empty background `DB_SENTINEL`.
pub fn pslr(map: &DelayDopplerMap, target: (usize, usize)) -> Result<f64> {
    check_target(map, target)?;
    let peak = map.cells[target].norm();
    let side = map
        .cells
        .indexed_iter()
        .filter(|(idx, _)| *idx != target)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(-DB_SENTINEL);
    }
    if side == 0.0 {
        return Ok(DB_SENTINEL);
    }
    Ok(20.0 * (peak / side).log10())
}

/// Peak power over the mean background power, in dB. The background leaves
/// out the target and its cyclic one-cell ring.
pub fn image_snr(map: &DelayDopplerMap, target: (usize, usize)) -> Result<f64> {
    check_target(map, target)?;
    let dims = map.dims();
    let (mut sum, mut count) = (0.0, 0usize);
    for (idx, v) in map.cells.indexed_iter() {
        if cell_distance(dims, idx, target) > 1 {
            sum += v.norm_sqr();
            count += 1;
        }
    }
    if count == 0 {
        return Err(AfdmError::MapTooSmall {
            rows: dims.0,
            cols: dims.1,
            window: 3,
        });
    }
    let peak = map.cells[target].norm_sqr();
    if peak == 0.0 {
        return Ok(-DB_SENTINEL);
    }
    if sum == 0.0 {
        return Ok(DB_SENTINEL);
    }
    Ok(10.0 * (peak / (sum / count as f64)).log10())
}

/// Reference used by the TFMF when the frame carries data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TfmfReference {
    /// The full transmitted symbol.
    Full,
    /// Only the pilot component.
    Pilot,
}

/// Everything that defines one sensing Monte Carlo cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSetup {
    pub config: AfdmConfig,
    /// Targets; the first one is the reference for PSLR and image SNR.
    pub targets: Vec<PathTap>,
    pub snr_db: f64,
    pub frame: FrameSpec,
    pub tfmf_reference: TfmfReference,
    /// Draw fresh data symbols in every trial (otherwise one frame is reused).
    pub redraw_data: bool,
    pub cfar: CfarConfig,
}

impl SensingSetup {
    pub fn new(config: AfdmConfig, targets: Vec<PathTap>, snr_db: f64, frame: FrameSpec) -> Self {
        SensingSetup {
            config,
            targets,
            snr_db,
            frame,
            tfmf_reference: TfmfReference::Full,
            redraw_data: true,
            cfar: CfarConfig::default(),
        }
    }

    fn target_cell(&self, t: &PathTap) -> (usize, usize) {
        (t.delay % self.config.n_p(), self.config.stored_doppler(t.doppler))
    }
}

/// Runs one noisy echo through every requested pipeline.
pub fn simulate_sensing<R: Rng + ?Sized>(
    setup: &SensingSetup,
    frame: &Frame,
    algorithms: &[Algorithm],
    rng: &mut R,
) -> Result<Vec<DelayDopplerMap>> {
    let config = &setup.config;
    let s = modulate(config, &frame.symbols)?;
    let r = add_awgn(&apply_channel(config, &s, &setup.targets)?, setup.snr_db, rng)?;
    let pilot_signal = || modulate(config, &frame.pilot);
    algorithms
        .iter()
        .map(|alg| match alg {
            Algorithm::Tfmf => match setup.tfmf_reference {
                TfmfReference::Full => tfmf(config, &r, &s),
                TfmfReference::Pilot => tfmf(config, &r, &pilot_signal()?),
            },
            Algorithm::Dechirp => dechirp(config, &r, &pilot_signal()?),
            Algorithm::Ddmf => {
                let y = vector_to_grid(config, &demodulate(config, &r)?)?;
                let x = vector_to_grid(config, &frame.symbols)?;
                ddmf(config, &y, &x)
            }
        })
        .collect()
}

/// Per-algorithm aggregate of a sensing Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensingStats {
    pub algorithm: Algorithm,
    pub trials: usize,
    pub pslr_db: f64,
    pub pslr_se: f64,
    pub image_snr_db: f64,
    pub image_snr_se: f64,
    /// Trials with a CFAR detection within one cell of each target.
    pub hits: Vec<usize>,
    /// Trials in which every target was hit.
    pub all_hits: usize,
    /// Detections farther than one cell from every target, summed over trials.
    pub false_alarms: usize,
    /// False when the map is smaller than the CFAR window; no detection
    /// statistics are available then.
    pub cfar_applied: bool,
}

impl SensingStats {
    /// Detection probability of the first target.
    pub fn pd(&self) -> f64 {
        self.pd_of(0)
    }

    pub fn pd_of(&self, target: usize) -> f64 {
        if !self.cfar_applied {
            return f64::NAN;
        }
        self.hits[target] as f64 / self.trials as f64
    }
}

struct TrialOutcome {
    pslr: f64,
    image_snr: f64,
    hit: Vec<bool>,
    false_alarms: usize,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sensing Monte Carlo. Every trial feeds the same echo to all algorithms.
pub fn run_sensing(
    setup: &SensingSetup,
    algorithms: &[Algorithm],
    trials: usize,
    seed: u64,
) -> Result<Vec<SensingStats>> {
    if trials == 0 {
        return Err(AfdmError::InvalidConfig("trials must be at least 1".into()));
    }
    if setup.targets.is_empty() {
        return Err(AfdmError::InvalidConfig("sensing needs at least one target".into()));
    }
    let fixed = if setup.redraw_data {
        None
    } else {
        Some(build_frame(&setup.config, &setup.frame, &mut trial_rng(seed, u64::MAX))?)
    };
    let cells: Vec<(usize, usize)> = setup.targets.iter().map(|t| setup.target_cell(t)).collect();
    let window = setup.cfar.window();
    let cfar_applied = setup.config.n_p() >= window && setup.config.k_chirps() >= window;
    let outcomes: Vec<Vec<TrialOutcome>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let frame = match &fixed {
                Some(f) => f.clone(),
                None => build_frame(&setup.config, &setup.frame, &mut rng)?,
            };
            let maps = simulate_sensing(setup, &frame, algorithms, &mut rng)?;
            maps.iter()
                .map(|map| {
                    let dets = if cfar_applied {
                        ca_cfar_2d(map, &setup.cfar)?
                    } else {
                        Vec::new()
                    };
                    let dims = map.dims();
                    let near = |d: &crate::sensing::Detection, c: (usize, usize)| {
                        cell_distance(dims, (d.l, d.k), c) <= 1
                    };
                    let hit = cells.iter().map(|&c| dets.iter().any(|d| near(d, c))).collect();
                    let false_alarms = dets
                        .iter()
                        .filter(|d| !cells.iter().any(|&c| near(d, c)))
                        .count();
                    Ok(TrialOutcome {
                        pslr: pslr(map, cells[0])?,
                        image_snr: image_snr(map, cells[0])?,
                        hit,
                        false_alarms,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(algorithms
        .iter()
        .enumerate()
        .map(|(a, &algorithm)| {
            let per: Vec<&TrialOutcome> = outcomes.iter().map(|o| &o[a]).collect();
            let (pslr_db, pslr_se) = mean_se(&per.iter().map(|o| o.pslr).collect::<Vec<_>>());
            let (image_snr_db, image_snr_se) =
                mean_se(&per.iter().map(|o| o.image_snr).collect::<Vec<_>>());
            let hits = (0..cells.len())
                .map(|t| per.iter().filter(|o| o.hit[t]).count())
                .collect();
            SensingStats {
                algorithm,
                trials,
                pslr_db,
                pslr_se,
                image_snr_db,
                image_snr_se,
                hits,
                all_hits: per.iter().filter(|o| o.hit.iter().all(|&h| h)).count(),
                false_alarms: per.iter().map(|o| o.false_alarms).sum(),
                cfar_applied,
            }
        })
        .collect())
}

/// Fraction of trials in which CA-CFAR reports the first target.
pub fn monte_carlo_pd(setup: &SensingSetup, algorithm: Algorithm, trials: usize, seed: u64) -> Result<f64> {
    let (rows, cols, window) = (setup.config.n_p(), setup.config.k_chirps(), setup.cfar.window());
    if rows < window || cols < window {
        return Err(AfdmError::MapTooSmall { rows, cols, window });
    }
    Ok(run_sensing(setup, &[algorithm], trials, seed)?[0].pd())
}

/// Dense `N_c x N_c` DAFT-domain channel matrix; column `m` is the response
/// to the `m`-th unit symbol.
pub fn build_effective_channel(config: &AfdmConfig, paths: &[PathTap]) -> Result<DMatrix<C64>> {
    let n_c = config.n_c();
    let cols: Vec<DaftSymbols> = (0..n_c)
        .into_par_iter()
        .map(|m| {
            let s = modulate(config, &DaftSymbols::unit(n_c, m))?;
            demodulate(config, &apply_channel(config, &s, paths)?)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n_c, n_c, |i, j| cols[j].0[i]))
}

/// `x = H^H (H H^H + noise_var I)^{-1} y` by dense LU.
pub fn lmmse_detect(h: &DMatrix<C64>, y: &DaftSymbols, noise_var: f64) -> Result<DaftSymbols> {
    if !(noise_var >= 0.0) {
        return Err(AfdmError::InvalidConfig(format!("noise variance {noise_var} is negative")));
    }
    if h.nrows() != y.len() {
        return Err(AfdmError::LengthMismatch {
            expected: h.nrows(),
            got: y.len(),
        });
    }
    let n = h.nrows();
    let gram = h * h.adjoint() + DMatrix::<C64>::identity(n, n) * C64::new(noise_var, 0.0);
    let lu = gram.lu();
    let singular = || AfdmError::Singular("H H^H + noise_var I is not invertible".into());
    let diag = lu.u().diagonal();
    let scale = diag.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 || diag.iter().any(|v| v.norm() <= 1e-12 * scale) {
        return Err(singular());
    }
    let z = lu.solve(&DVector::from_column_slice(&y.0)).ok_or_else(singular)?;
    Ok(DaftSymbols((h.adjoint() * z).iter().copied().collect()))
}

/// The same estimator without forming `H`. The DAFT is unitary, so the
/// inverse reduces to `(G G^H + noise_var I)` for the time-domain channel
/// `G`, solved by conjugate gradients.
pub fn lmmse_detect_fast(
    config: &AfdmConfig,
    paths: &[PathTap],
    y: &DaftSymbols,
    noise_var: f64,
) -> Result<DaftSymbols> {
    if !(noise_var > 0.0) {
        return Err(AfdmError::InvalidConfig(
            "the iterative LMMSE needs a positive noise variance".into(),
        ));
    }
    let r = modulate(config, y)?;
    let apply = |v: &[C64]| -> Result<Vec<C64>> {
        let t = TimeSignal::new(v.to_vec());
        let g = apply_channel(config, &apply_channel_adjoint(config, &t, paths)?, paths)?;
        Ok(g.samples.iter().zip(v).map(|(a, b)| a + b * noise_var).collect())
    };
    let z = conjugate_gradient(apply, &r.samples, 1e-12, 4 * config.n_c())?;
    let back = apply_channel_adjoint(config, &TimeSignal::new(z), paths)?;
    demodulate(config, &back)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn conjugate_gradient<F>(apply: F, b: &[C64], tol: f64, max_iter: usize) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let mut x = vec![C64::new(0.0, 0.0); b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let stop = tol * tol * rr;
    for _ in 0..max_iter {
        if rr <= stop || rr == 0.0 {
            return Ok(x);
        }
        let ap = apply(&p)?;
        let alpha = rr / dot(&p, &ap).re;
        for i in 0..x.len() {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let next = dot(&r, &r).re;
        let beta = next / rr;
        rr = next;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
    }
    if rr <= stop * 1e6 {
        return Ok(x);
    }
    Err(AfdmError::Singular("conjugate gradients did not converge".into()))
}

/// Hard-demaps `x_hat` at the frame's data positions and counts bit errors.
pub fn bit_errors(x_hat: &DaftSymbols, frame: &Frame) -> usize {
    frame
        .data_index
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let (b0, b1) = qam4_demap(x_hat.0[m]);
            usize::from(b0 != frame.bits[2 * i]) + usize::from(b1 != frame.bits[2 * i + 1])
        })
        .sum()
}

/// Bit error fraction of `x_hat` against the frame's bits.
pub fn ber(x_hat: &DaftSymbols, frame: &Frame) -> f64 {
    if frame.bits.is_empty() {
        return 0.0;
    }
    bit_errors(x_hat, frame) as f64 / frame.bits.len() as f64
}

/// A path with a mean power; realised with a Rayleigh amplitude and a uniform
/// phase, `E|h|^2 = power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingTap {
    pub delay: usize,
    pub doppler: i64,
    pub power: f64,
}

pub fn rayleigh_paths<R: Rng + ?Sized>(taps: &[FadingTap], rng: &mut R) -> Vec<PathTap> {
    taps.iter()
        .map(|t| PathTap::new(complex_gaussian(rng, t.power), t.delay, t.doppler))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerStats {
    pub symbols: usize,
    pub bits: usize,
    pub bit_errors: usize,
}

impl BerStats {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        let p = self.ber();
        (p * (1.0 - p) / self.bits as f64).sqrt()
    }
}

/// Uncoded BER of all-data AFDM symbols through fresh Rayleigh channels,
/// with perfect channel knowledge and LMMSE detection.
pub fn run_ber(config: &AfdmConfig, taps: &[FadingTap], snr_db: f64, symbols: usize, seed: u64) -> Result<BerStats> {
    if symbols == 0 {
        return Err(AfdmError::InvalidConfig("symbols must be at least 1".into()));
    }
    let var = noise_variance(snr_db);
    let errors: Vec<(usize, usize)> = (0..symbols as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let frame = build_frame(config, &FrameSpec::all_data(), &mut rng)?;
            let paths = rayleigh_paths(taps, &mut rng);
            let s = modulate(config, &frame.symbols)?;
            let r = add_awgn(&apply_channel(config, &s, &paths)?, snr_db, &mut rng)?;
            let y = demodulate(config, &r)?;
            let x_hat = if var > 0.0 {
                lmmse_detect_fast(config, &paths, &y, var)?
            } else {
                lmmse_detect(&build_effective_channel(config, &paths)?, &y, 0.0)?
            };
            Ok((bit_errors(&x_hat, &frame), frame.bits.len()))
        })
        .collect::<Result<_>>()?;
    Ok(BerStats {
        symbols,
        bits: errors.iter().map(|e| e.1).sum(),
        bit_errors: errors.iter().map(|e| e.0).sum(),
    })
}

/// One row of a metric sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub snr_db: f64,
    pub po: f64,
    pub algorithm: String,
    pub preset: String,
    pub pslr_db: f64,
    pub image_snr_db: f64,
    pub pd: f64,
    pub ber: f64,
    pub trials: usize,
}

pub const SWEEP_HEADER: &str = "snr_db,po,algorithm,preset,pslr_db,image_snr_db,pd,ber,trials";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[MetricReport]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.snr_db, r.po, r.algorithm, r.preset, r.pslr_db, r.image_snr_db, r.pd, r.ber, r.trials
        )?;
    }
    Ok(())
}
