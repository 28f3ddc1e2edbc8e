//! Waveform geometry and chirp-parameter selection.
//!
//! An [`AfdmConfig`] fixes the symbol length `N_c = K * N_p`, the two chirp
//! rates `c1` (time-domain window) and `c2` (DAFT-domain filter) and the
//! chirp-prefix length. The proposed preset uses `c1 = 1 / (2 N_p)` and
//! `c2 = 0`, which turns the zeroth subcarrier into `K` back-to-back copies of
//! a Nyquist-sampled FMCW chirp of `N_p` samples.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{AfdmError, Result};
use crate::phase;

/// Named waveform families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `c1 = 1/(2 N_p)`, `c2 = 0`.
    Proposed,
    /// `c1 = (2 k_max + 1)/(2 N_c)`, `c2 = sqrt(2)`.
    Classic,
    /// `c1 = c2 = 0`.
    Ofdm,
    /// `c1 = c2 = 1/(2 N_c)`.
    Ocdm,
    /// `c1 = Z_A/(2 N_p)`, `c2 = 0` with `Z_A > 1`.
    Periodic,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Proposed, Preset::Classic, Preset::Ofdm, Preset::Ocdm];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Proposed => "proposed",
            Preset::Classic => "classic",
            Preset::Ofdm => "ofdm",
            Preset::Ocdm => "ocdm",
            Preset::Periodic => "periodic",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = AfdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Preset::Proposed),
            "classic" => Ok(Preset::Classic),
            "ofdm" => Ok(Preset::Ofdm),
            "ocdm" => Ok(Preset::Ocdm),
            "periodic" => Ok(Preset::Periodic),
            _ => Err(AfdmError::UnknownPreset(s.to_string())),
        }
    }
}

/// A chirp rate in cycles per index squared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChirpRate {
    Exact(Ratio<i64>),
    Real(f64),
}

impl ChirpRate {
    pub fn zero() -> Self {
        ChirpRate::Exact(Ratio::from_integer(0))
    }

    pub fn value(&self) -> f64 {
        match self {
            ChirpRate::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            ChirpRate::Real(c) => *c,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ChirpRate::Exact(r) => *r.numer() == 0,
            ChirpRate::Real(c) => *c == 0.0,
        }
    }

    /// `rate * x` in turns, reduced into `[0, 1)`.
    #[inline]
    pub fn times(&self, x: i128) -> f64 {
        match self {
            ChirpRate::Exact(r) => phase::ratio_times(r, x),
            ChirpRate::Real(c) => phase::real_times(*c, x),
        }
    }

    /// `rate * x^2` in turns, reduced into `[0, 1)`.
    #[inline]
    pub fn times_sq(&self, x: i64) -> f64 {
        let x = x as i128;
        self.times(x * x)
    }
}

impl fmt::Display for ChirpRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChirpRate::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            ChirpRate::Real(c) => write!(f, "{c}"),
        }
    }
}

/// Symbol geometry and chirp parameters. Validated at construction and
/// immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct AfdmConfig {
    n_c: usize,
    k_chirps: usize,
    n_p: usize,
    c1: Ratio<i64>,
    c2: ChirpRate,
    l_cpp: usize,
    z_a: Option<u32>,
    preset: Preset,
}

/// `c1 = 1/(2 N_p)`, `c2 = 0`, `N_c = K N_p`.
pub fn proposed_params(n_p: usize, k_chirps: usize) -> Result<AfdmConfig> {
    if !n_p.is_multiple_of(2) {
        return Err(AfdmError::OddPeriod(n_p));
    }
    periodic_params(n_p, k_chirps, 1)
}

/// The `Z_A` family `c1 = Z_A/(2 N_p)`, `c2 = 0`, subject to `Z_A N_p` even.
pub fn periodic_params(n_p: usize, k_chirps: usize, z_a: u32) -> Result<AfdmConfig> {
    if n_p == 0 || k_chirps == 0 {
        return Err(AfdmError::InvalidConfig(
            "N_p and K must be positive".into(),
        ));
    }
    if z_a == 0 {
        return Err(AfdmError::InvalidConfig("Z_A must be positive".into()));
    }
    if !(z_a as usize * n_p).is_multiple_of(2) {
        return Err(AfdmError::InvalidConfig(format!(
            "Z_A * N_p must be even (Z_A = {z_a}, N_p = {n_p})"
        )));
    }
    let n_c = k_chirps
        .checked_mul(n_p)
        .ok_or_else(|| AfdmError::InvalidConfig("N_c overflows".into()))?;
    Ok(AfdmConfig {
        n_c,
        k_chirps,
        n_p,
        c1: Ratio::new(z_a as i64, 2 * n_p as i64),
        c2: ChirpRate::zero(),
        l_cpp: 0,
        z_a: Some(z_a),
        preset: if z_a == 1 {
            Preset::Proposed
        } else {
            Preset::Periodic
        },
    })
}

/// Classic AFDM: `c1 = (2 k_max + 1)/(2 N_c)`, `c2 = sqrt(2)`.
///
/// The sensing grid defaults to a single chirp period (`K = 1`); use
/// [`AfdmConfig::with_grid`] to reshape it.
pub fn classic_params(n_c: usize, k_max: usize) -> Result<AfdmConfig> {
    if n_c == 0 {
        return Err(AfdmError::InvalidConfig("N_c must be positive".into()));
    }
    Ok(AfdmConfig {
        n_c,
        k_chirps: 1,
        n_p: n_c,
        c1: Ratio::new(2 * k_max as i64 + 1, 2 * n_c as i64),
        c2: ChirpRate::Real(std::f64::consts::SQRT_2),
        l_cpp: 0,
        z_a: None,
        preset: Preset::Classic,
    })
}

pub fn ofdm_params(n_c: usize) -> Result<AfdmConfig> {
    if n_c == 0 {
        return Err(AfdmError::InvalidConfig("N_c must be positive".into()));
    }
    Ok(AfdmConfig {
        n_c,
        k_chirps: 1,
        n_p: n_c,
        c1: Ratio::from_integer(0),
        c2: ChirpRate::zero(),
        l_cpp: 0,
        z_a: None,
        preset: Preset::Ofdm,
    })
}

pub fn ocdm_params(n_c: usize) -> Result<AfdmConfig> {
    if n_c == 0 {
        return Err(AfdmError::InvalidConfig("N_c must be positive".into()));
    }
    let c = Ratio::new(1, 2 * n_c as i64);
    Ok(AfdmConfig {
        n_c,
        k_chirps: 1,
        n_p: n_c,
        c1: c,
        c2: ChirpRate::Exact(c),
        l_cpp: 0,
        z_a: None,
        preset: Preset::Ocdm,
    })
}

/// Builds a named preset. `arg` is the chirp count `K` for the proposed
/// preset and `k_max` for the classic one; OFDM and OCDM ignore it.
pub fn preset(name: Preset, n_c: usize, arg: usize) -> Result<AfdmConfig> {
    match name {
        Preset::Proposed => {
            if arg == 0 || !n_c.is_multiple_of(arg) {
                return Err(AfdmError::InvalidConfig(format!(
                    "K = {arg} does not divide N_c = {n_c}"
                )));
            }
            proposed_params(n_c / arg, arg)
        }
        Preset::Classic => classic_params(n_c, arg),
        Preset::Ofdm => ofdm_params(n_c),
        Preset::Ocdm => ocdm_params(n_c),
        Preset::Periodic => Err(AfdmError::InvalidConfig(
            "the Z_A family is built with periodic_params".into(),
        )),
    }
}

impl AfdmConfig {
    /// Sets the chirp-prefix length.
    pub fn with_cpp(mut self, l_cpp: usize) -> Result<Self> {
        if l_cpp > self.n_c {
            return Err(AfdmError::InvalidConfig(format!(
                "CPP length {l_cpp} exceeds N_c = {}",
                self.n_c
            )));
        }
        self.l_cpp = l_cpp;
        Ok(self)
    }

    /// Reshapes the fast/slow-time sensing grid to `K` periods. Only allowed
    /// for presets whose chirp rate does not fix the period.
    pub fn with_grid(mut self, k_chirps: usize) -> Result<Self> {
        if self.z_a.is_some() {
            return Err(AfdmError::InvalidConfig(
                "the chirp period of a periodic preset is fixed by c1".into(),
            ));
        }
        if k_chirps == 0 || !self.n_c.is_multiple_of(k_chirps) {
            return Err(AfdmError::InvalidConfig(format!(
                "K = {k_chirps} does not divide N_c = {}",
                self.n_c
            )));
        }
        self.k_chirps = k_chirps;
        self.n_p = self.n_c / k_chirps;
        Ok(self)
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }
    pub fn k_chirps(&self) -> usize {
        self.k_chirps
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }
    pub fn c1(&self) -> Ratio<i64> {
        self.c1
    }
    pub fn c2(&self) -> ChirpRate {
        self.c2
    }
    pub fn l_cpp(&self) -> usize {
        self.l_cpp
    }
    pub fn z_a(&self) -> Option<u32> {
        self.z_a
    }
    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn is_proposed(&self) -> bool {
        self.preset == Preset::Proposed
    }

    pub(crate) fn require_proposed(&self) -> Result<()> {
        if self.is_proposed() {
            Ok(())
        } else {
            Err(AfdmError::RequiresProposed)
        }
    }

    /// `c1 n^2 + c2 m^2 + m n / N_c` in turns.
    #[inline]
    pub fn subcarrier_turns(&self, m: i64, n: i64) -> f64 {
        let n_c = self.n_c as i128;
        let lin = phase::frac_ratio(m as i128 * n as i128, n_c);
        phase::wrap(self.c1_turns(n) + lin + self.c2.times_sq(m))
    }

    /// `c1 n^2` in turns.
    #[inline]
    pub fn c1_turns(&self, n: i64) -> f64 {
        let n = n as i128;
        phase::ratio_times(&self.c1, n * n)
    }

    /// Phase of the chirp-prefix compensation `-c1 (N_c^2 + 2 N_c n)` in turns.
    pub fn cpp_turns(&self, n: i64) -> f64 {
        let n_c = self.n_c as i128;
        1.0 - phase::ratio_times(&self.c1, n_c * n_c + 2 * n_c * n as i128)
    }

    /// Maps a stored Doppler index in `[0, K)` to `[-K/2, K/2)`.
    pub fn signed_doppler(&self, k: usize) -> i64 {
        let kk = self.k_chirps as i64;
        let k = k as i64 % kk;
        if k >= (kk + 1) / 2 {
            k - kk
        } else {
            k
        }
    }

    /// Maps a signed Doppler index into `[0, K)`.
    pub fn stored_doppler(&self, k: i64) -> usize {
        k.rem_euclid(self.k_chirps as i64) as usize
    }
}

/// Channel and link parameters shared by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub l_max: usize,
    pub k_max: usize,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub snr_db: f64,
    pub pilot_overhead: f64,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// Checks the scenario against a waveform configuration.
    pub fn validate(&self, config: &AfdmConfig) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pilot_overhead) {
            return Err(AfdmError::InvalidConfig(format!(
                "pilot overhead {} outside [0, 1]",
                self.pilot_overhead
            )));
        }
        if self.snr_db.is_nan() {
            return Err(AfdmError::InvalidConfig("SNR is NaN".into()));
        }
        if config.is_proposed() {
            if config.k_chirps() <= 2 * self.k_max {
                return Err(AfdmError::InvalidConfig(format!(
                    "K = {} must exceed 2 k_max = {}",
                    config.k_chirps(),
                    2 * self.k_max
                )));
            }
            if config.n_p() <= self.l_max {
                return Err(AfdmError::InvalidConfig(format!(
                    "N_p = {} must exceed l_max = {}",
                    config.n_p(),
                    self.l_max
                )));
            }
        }
        if config.l_cpp() > 0 && config.l_cpp() <= self.l_max {
            return Err(AfdmError::InvalidConfig(format!(
                "CPP length {} must exceed l_max = {}",
                config.l_cpp(),
                self.l_max
            )));
        }
        Ok(())
    }
}
