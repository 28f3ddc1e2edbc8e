//! AFDM modulation and demodulation, subcarrier synthesis, chirp prefix and
//! the discrete FMCW reference.
//!
//! Modulation runs in three steps: a DAFT-domain chirp `exp(j 2 pi c2 m^2)`,
//! an `N_c`-point inverse DFT, and a time-domain chirp `exp(j 2 pi c1 n^2)`.
//! With unitary scaling the pair [`modulate`]/[`demodulate`] is an exact
//! inverse.

use std::io::{self, BufRead, Write};

use crate::error::{AfdmError, Result};
use crate::params::AfdmConfig;
use crate::phase::{self, cis};
use crate::{fft, C64};

/// Symbols on the `N_c` DAFT-domain subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct DaftSymbols(pub Vec<C64>);

impl DaftSymbols {
    pub fn zeros(n: usize) -> Self {
        DaftSymbols(vec![C64::new(0.0, 0.0); n])
    }

    /// Unit vector `e_m`.
    pub fn unit(n: usize, m: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[m] = C64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.0.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_complex_csv(w, &self.0)
    }

    pub fn read_csv<R: BufRead>(r: R) -> io::Result<Self> {
        read_complex_csv(r).map(DaftSymbols)
    }
}

/// Complex baseband samples, with or without a chirp prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<C64>,
    pub has_cpp: bool,
}

impl TimeSignal {
    pub fn new(samples: Vec<C64>) -> Self {
        TimeSignal {
            samples,
            has_cpp: false,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_complex_csv(w, &self.samples)
    }

    pub fn read_csv<R: BufRead>(r: R) -> io::Result<Self> {
        read_complex_csv(r).map(TimeSignal::new)
    }
}

fn write_complex_csv<W: Write>(mut w: W, values: &[C64]) -> io::Result<()> {
    writeln!(w, "index,re,im")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{},{}", v.re, v.im)?;
    }
    Ok(())
}

fn read_complex_csv<R: BufRead>(r: R) -> io::Result<Vec<C64>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some("index,re,im") {
        return Err(bad("expected header `index,re,im`".into()));
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("row {row}: expected 3 fields")));
        }
        let idx: usize = fields[0]
            .trim()
            .parse()
            .map_err(|e| bad(format!("row {row}: {e}")))?;
        if idx != out.len() {
            return Err(bad(format!("row {row}: index {idx} out of sequence")));
        }
        let re: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|e| bad(format!("row {row}: {e}")))?;
        let im: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|e| bad(format!("row {row}: {e}")))?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(AfdmError::LengthMismatch { expected, got })
    }
}

/// `psi_m[n] = exp(j 2 pi (c1 n^2 + m n / N_c + c2 m^2))`, `n = 0..N_c`.
pub fn subcarrier(config: &AfdmConfig, m: usize) -> Result<TimeSignal> {
    let n_c = config.n_c();
    if m >= n_c {
        return Err(AfdmError::IndexOutOfRange(format!(
            "subcarrier {m} not in [0, {n_c})"
        )));
    }
    let samples = (0..n_c as i64)
        .map(|n| cis(config.subcarrier_turns(m as i64, n)))
        .collect();
    Ok(TimeSignal::new(samples))
}

/// IDAFT: `s[n] = N_c^{-1/2} sum_m x[m] psi_m[n]`.
pub fn modulate(config: &AfdmConfig, x: &DaftSymbols) -> Result<TimeSignal> {
    let n_c = config.n_c();
    check_len(n_c, x.len())?;
    let c2 = config.c2();
    let mut buf: Vec<C64> = if c2.is_zero() {
        x.0.clone()
    } else {
        x.0.iter()
            .enumerate()
            .map(|(m, &v)| v * cis(c2.times_sq(m as i64)))
            .collect()
    };
    fft::inverse(&mut buf);
    let scale = 1.0 / (n_c as f64).sqrt();
    for (n, v) in buf.iter_mut().enumerate() {
        *v *= cis(config.c1_turns(n as i64)) * scale;
    }
    Ok(TimeSignal::new(buf))
}

/// DAFT: `Y[m] = N_c^{-1/2} sum_n r[n] conj(psi_m[n])`.
pub fn demodulate(config: &AfdmConfig, r: &TimeSignal) -> Result<DaftSymbols> {
    let n_c = config.n_c();
    if r.has_cpp {
        return Err(AfdmError::CppState("demodulation expects the prefix removed"));
    }
    check_len(n_c, r.len())?;
    let mut buf: Vec<C64> = r
        .samples
        .iter()
        .enumerate()
        .map(|(n, &v)| v * cis(-config.c1_turns(n as i64)))
        .collect();
    fft::forward(&mut buf);
    let scale = 1.0 / (n_c as f64).sqrt();
    let c2 = config.c2();
    for (m, v) in buf.iter_mut().enumerate() {
        *v *= scale;
        if !c2.is_zero() {
            *v *= cis(-c2.times_sq(m as i64));
        }
    }
    Ok(DaftSymbols(buf))
}

/// Prepends `L_cpp` samples `s[n] = exp(-j 2 pi c1 (N_c^2 + 2 N_c n)) s[n + N_c]`,
/// `n = -L_cpp..-1`.
pub fn add_cpp(config: &AfdmConfig, s: &TimeSignal) -> Result<TimeSignal> {
    if s.has_cpp {
        return Err(AfdmError::CppState("signal already carries a prefix"));
    }
    let n_c = config.n_c();
    check_len(n_c, s.len())?;
    let l = config.l_cpp();
    let mut out = Vec::with_capacity(n_c + l);
    for n in -(l as i64)..0 {
        let tail = s.samples[(n + n_c as i64) as usize];
        out.push(tail * cis(config.cpp_turns(n)));
    }
    out.extend_from_slice(&s.samples);
    Ok(TimeSignal {
        samples: out,
        has_cpp: true,
    })
}

/// Drops the first `L_cpp` samples.
pub fn remove_cpp(config: &AfdmConfig, r: &TimeSignal) -> Result<TimeSignal> {
    if !r.has_cpp {
        return Err(AfdmError::CppState("signal carries no prefix"));
    }
    check_len(config.n_c() + config.l_cpp(), r.len())?;
    Ok(TimeSignal::new(r.samples[config.l_cpp()..].to_vec()))
}

/// `K` concatenated base chirps `exp(j pi n^2 / N_p)`, `0 <= n < N_p`.
pub fn fmcw_signal(n_p: usize, k_chirps: usize) -> Result<TimeSignal> {
    if n_p == 0 || !n_p.is_multiple_of(2) {
        return Err(AfdmError::OddPeriod(n_p));
    }
    let two_np = 2 * n_p as i128;
    let samples = (0..n_p * k_chirps)
        .map(|n| {
            let t = (n % n_p) as i128;
            cis(phase::frac_ratio(t * t, two_np))
        })
        .collect();
    Ok(TimeSignal::new(samples))
}

/// `m = (N_c - K l - k) mod N_c`.
pub fn dd_to_daft_index(config: &AfdmConfig, l: usize, k: usize) -> Result<usize> {
    if l >= config.n_p() || k >= config.k_chirps() {
        return Err(AfdmError::IndexOutOfRange(format!(
            "(l, k) = ({l}, {k}) outside [0, {}) x [0, {})",
            config.n_p(),
            config.k_chirps()
        )));
    }
    let n_c = config.n_c();
    Ok((n_c - (config.k_chirps() * l + k) % n_c) % n_c)
}

/// Inverse of [`dd_to_daft_index`].
pub fn daft_index_to_dd(config: &AfdmConfig, m: usize) -> Result<(usize, usize)> {
    let n_c = config.n_c();
    if m >= n_c {
        return Err(AfdmError::IndexOutOfRange(format!(
            "subcarrier {m} not in [0, {n_c})"
        )));
    }
    let j = (n_c - m) % n_c;
    Ok((j / config.k_chirps(), j % config.k_chirps()))
}

/// `psi_0[(n - l) mod N_c] exp(-j 2 pi k n / N_c) exp(-j pi l^2 / N_p)`.
pub fn echo_form_subcarrier(config: &AfdmConfig, l: usize, k: usize) -> Result<TimeSignal> {
    config.require_proposed()?;
    dd_to_daft_index(config, l, k)?;
    let n_c = config.n_c() as i64;
    let two_np = 2 * config.n_p() as i128;
    let delay_turns = 1.0 - phase::frac_ratio((l * l) as i128, two_np);
    let samples = (0..n_c)
        .map(|n| {
            let shifted = (n - l as i64).rem_euclid(n_c);
            let t = config.c1_turns(shifted)
                - phase::frac_ratio(k as i128 * n as i128, n_c as i128)
                + delay_turns;
            cis(t)
        })
        .collect();
    Ok(TimeSignal::new(samples))
}
