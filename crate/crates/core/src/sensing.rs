//! Monostatic sensing pipelines and detection.
//!
//! All three matched filters produce an `N_p x K` delay-Doppler map (DDM)
//! indexed `[l, k]`, with the Doppler column `k` read as a signed index in
//! `[-K/2, K/2)`:
//!
//! - [`tfmf`]: fast-time FFT correlation against a reference, then a
//!   slow-time IFFT. `O(N_c log N_c)`.
//! - [`dechirp`]: conjugate multiply by a deterministic pilot, range FFT,
//!   slow-time IFFT. `O(N_c log N_c)`.
//! - [`ddmf`]: exhaustive correlation in the DD-DAFT domain with a phase
//!   matching factor that undoes the Doppler-induced delay carry. `O(N_c^2)`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dd_daft::DdGrid;
use crate::error::{AfdmError, Result};
use crate::params::AfdmConfig;
use crate::phase::UnitRoots;
use crate::waveform::TimeSignal;
use crate::{fft, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Tfmf,
    Dechirp,
    Ddmf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Tfmf, Algorithm::Dechirp, Algorithm::Ddmf];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tfmf => "tfmf",
            Algorithm::Dechirp => "dechirp",
            Algorithm::Ddmf => "ddmf",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = AfdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfmf" => Ok(Algorithm::Tfmf),
            "dechirp" => Ok(Algorithm::Dechirp),
            "ddmf" => Ok(Algorithm::Ddmf),
            _ => Err(AfdmError::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Complex delay-Doppler map `[l, k]` with the algorithm that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerMap {
    pub cells: Array2<C64>,
    pub algorithm: Algorithm,
}

impl DelayDopplerMap {
    pub fn dims(&self) -> (usize, usize) {
        self.cells.dim()
    }

    pub fn power(&self) -> Array2<f64> {
        self.cells.mapv(|v| v.norm_sqr())
    }

    pub fn magnitude_db(&self) -> Array2<f64> {
        self.cells.mapv(|v| to_db(v.norm()))
    }

    /// Writes `l,k,magnitude_db` with the signed Doppler index.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (_, cols) = self.dims();
        writeln!(w, "l,k,magnitude_db")?;
        for ((l, k), v) in self.cells.indexed_iter() {
            writeln!(w, "{l},{},{}", signed_index(k, cols), to_db(v.norm()))?;
        }
        Ok(())
    }
}

/// Floor for dB conversions of exact zeros.
pub const DB_FLOOR: f64 = -300.0;

fn to_db(mag: f64) -> f64 {
    if mag > 0.0 {
        (20.0 * mag.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// `k` in `[0, K)` read as a signed index in `[-K/2, K/2)`.
pub fn signed_index(k: usize, cols: usize) -> i64 {
    let (k, cols) = (k as i64, cols as i64);
    if k >= (cols + 1) / 2 {
        k - cols
    } else {
        k
    }
}

fn check_signal(config: &AfdmConfig, s: &TimeSignal) -> Result<()> {
    if s.has_cpp {
        return Err(AfdmError::CppState("sensing expects the prefix removed"));
    }
    if s.len() != config.n_c() {
        return Err(AfdmError::LengthMismatch {
            expected: config.n_c(),
            got: s.len(),
        });
    }
    Ok(())
}

/// Slow-time IFFT of a column-major fast-time matrix `d[q * N_p + l]` into a
/// `[l, k]` map, scaled by `1/sqrt(K)`.
fn doppler_transform(d: &[C64], n_p: usize, kk: usize, algorithm: Algorithm) -> DelayDopplerMap {
    let mut t = vec![C64::new(0.0, 0.0); n_p * kk];
    for q in 0..kk {
        for l in 0..n_p {
            t[l * kk + q] = d[q * n_p + l];
        }
    }
    fft::inverse_chunks(&mut t, kk);
    let scale = 1.0 / (kk as f64).sqrt();
    t.iter_mut().for_each(|v| *v *= scale);
    DelayDopplerMap {
        cells: Array2::from_shape_vec((n_p, kk), t).expect("shape matches length"),
        algorithm,
    }
}

/// Time-frequency matched filter against the reference `s_ref`.
pub fn tfmf(config: &AfdmConfig, r: &TimeSignal, s_ref: &TimeSignal) -> Result<DelayDopplerMap> {
    check_signal(config, r)?;
    check_signal(config, s_ref)?;
    let n_p = config.n_p();
    let kk = config.k_chirps();
    let scale = 1.0 / (n_p as f64).sqrt();

    let mut rf = r.samples.clone();
    let mut sf = s_ref.samples.clone();
    fft::forward_chunks(&mut rf, n_p);
    fft::forward_chunks(&mut sf, n_p);
    // R_fre conj(S_fre), each carrying 1/sqrt(N_p), then the range IFFT with
    // its own 1/sqrt(N_p).
    let s3 = scale * scale * scale;
    let mut mf: Vec<C64> = rf.iter().zip(&sf).map(|(a, b)| a * b.conj() * s3).collect();
    fft::inverse_chunks(&mut mf, n_p);
    Ok(doppler_transform(&mf, n_p, kk, Algorithm::Tfmf))
}

/// Dechirp processing against a known pilot waveform.
///
/// The range FFT of the dechirped column puts a delay `l` at beat bin
/// `-l mod N_p`; bins are re-indexed so the map row is the delay.
pub fn dechirp(config: &AfdmConfig, r: &TimeSignal, pilot: &TimeSignal) -> Result<DelayDopplerMap> {
    check_signal(config, r)?;
    check_signal(config, pilot)?;
    let n_p = config.n_p();
    let kk = config.k_chirps();
    let scale = 1.0 / (n_p as f64).sqrt();
    let mut d: Vec<C64> = r
        .samples
        .iter()
        .zip(&pilot.samples)
        .map(|(a, b)| a * b.conj())
        .collect();
    fft::forward_chunks(&mut d, n_p);
    let mut ranged = vec![C64::new(0.0, 0.0); d.len()];
    for q in 0..kk {
        for l in 0..n_p {
            ranged[q * n_p + l] = d[q * n_p + (n_p - l) % n_p] * scale;
        }
    }
    Ok(doppler_transform(&ranged, n_p, kk, Algorithm::Dechirp))
}

/// DD-DAFT domain matched filter of the received grid `y` against the known
/// transmit grid `x`.
///
/// For hypothesis `(l, k)`, with `k` signed:
/// `Z[l, k] = sum_{n, m} conj(Y[n, m]) X[(n - l + floor((m - k)/K))_Np, (m - k)_K] phi`,
/// `phi = exp(j 2 pi (l (m - k)/N_c + n l / N_p - l^2 / (2 N_p)))`.
/// The sum is reindexed over the nonzero cells of `x`, each of which meets
/// exactly one `(n, m)` per hypothesis.
pub fn ddmf(config: &AfdmConfig, y: &DdGrid, x: &DdGrid) -> Result<DelayDopplerMap> {
    config.require_proposed()?;
    let n_p = config.n_p();
    let kk = config.k_chirps();
    for g in [y, x] {
        if g.dims() != (n_p, kk) {
            return Err(AfdmError::LengthMismatch {
                expected: n_p * kk,
                got: g.cells.len(),
            });
        }
    }
    let zero = C64::new(0.0, 0.0);
    let support: Vec<(i64, i64, C64)> = x
        .cells
        .indexed_iter()
        .filter(|(_, v)| **v != zero)
        .map(|((a, b), v)| (a as i64, b as i64, *v))
        .collect();
    let (n_p, kk) = (n_p as i64, kk as i64);
    // Phase in units of 1/(2 N_c): 2 l (m - k) + 2 K n l - K l^2.
    let roots = UnitRoots::new(2 * config.n_c());
    let mut z = Array2::<C64>::zeros((n_p as usize, kk as usize));
    for l in 0..n_p {
        for kc in 0..kk {
            let ks = signed_index(kc as usize, kk as usize);
            let mut acc = zero;
            for &(a, b, xv) in &support {
                let m = (b + ks).rem_euclid(kk);
                let carry = (m - ks - b) / kk;
                let n = (a + l - carry).rem_euclid(n_p);
                let idx = 2 * l * (m - ks) + 2 * kk * n * l - kk * l * l;
                acc += y.cells[[n as usize, m as usize]].conj() * xv * roots.get(idx);
            }
            z[[l as usize, kc as usize]] = acc;
        }
    }
    Ok(DelayDopplerMap {
        cells: z,
        algorithm: Algorithm::Ddmf,
    })
}

/// A CFAR threshold crossing. Power and threshold are in `|z|^2` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub l: usize,
    pub k: usize,
    pub power: f64,
    pub threshold: f64,
}

/// CA-CFAR settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarConfig {
    pub train: usize,
    pub guard: usize,
    pub pfa: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        CfarConfig {
            train: 2,
            guard: 1,
            pfa: 1e-4,
        }
    }
}

impl CfarConfig {
    pub fn window(&self) -> usize {
        2 * (self.train + self.guard) + 1
    }

    /// Cells in the square training ring.
    pub fn training_cells(&self) -> usize {
        let outer = self.window();
        let inner = 2 * self.guard + 1;
        outer * outer - inner * inner
    }

    /// `alpha = N_t (pfa^(-1/N_t) - 1)`.
    pub fn alpha(&self) -> f64 {
        let nt = self.training_cells() as f64;
        nt * (self.pfa.powf(-1.0 / nt) - 1.0)
    }
}

/// Cyclic sum of `p` over a `(2h+1) x (2h+1)` box centred on each cell.
fn box_sum_cyclic(p: &Array2<f64>, half: usize) -> Array2<f64> {
    let (rows, cols) = p.dim();
    let mut tmp = Array2::<f64>::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut s = 0.0;
            for d in 0..=2 * half {
                s += p[[(r + rows * (half + 1) + d - half) % rows, c]];
            }
            tmp[[r, c]] = s;
        }
    }
    let mut out = Array2::<f64>::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut s = 0.0;
            for d in 0..=2 * half {
                s += tmp[[r, (c + cols * (half + 1) + d - half) % cols]];
            }
            out[[r, c]] = s;
        }
    }
    out
}

/// 2D cell-averaging CFAR with a square training ring, cyclic at the edges.
///
/// A zero noise estimate is replaced by the smallest positive normal float,
/// so an isolated nonzero cell in an all-zero map is still reported.
pub fn ca_cfar_2d(map: &DelayDopplerMap, cfg: &CfarConfig) -> Result<Vec<Detection>> {
    if cfg.train == 0 || !(cfg.pfa > 0.0 && cfg.pfa < 1.0) {
        return Err(AfdmError::InvalidConfig(
            "CFAR needs train >= 1 and 0 < pfa < 1".into(),
        ));
    }
    let (rows, cols) = map.dims();
    let window = cfg.window();
    if rows < window || cols < window {
        return Err(AfdmError::MapTooSmall { rows, cols, window });
    }
    let p = map.power();
    let outer = box_sum_cyclic(&p, cfg.train + cfg.guard);
    let inner = box_sum_cyclic(&p, cfg.guard);
    let nt = cfg.training_cells() as f64;
    let alpha = cfg.alpha();
    let mut out = Vec::new();
    for ((l, k), &power) in p.indexed_iter() {
        let noise = ((outer[[l, k]] - inner[[l, k]]) / nt).max(f64::MIN_POSITIVE);
        let threshold = alpha * noise;
        if power > threshold {
            out.push(Detection {
                l,
                k,
                power,
                threshold,
            });
        }
    }
    Ok(out)
}

/// Cyclic Chebyshev distance between two cells.
pub fn cell_distance(dims: (usize, usize), a: (usize, usize), b: (usize, usize)) -> usize {
    let d = |x: usize, y: usize, n: usize| {
        let d = x.abs_diff(y) % n;
        d.min(n - d)
    };
    d(a.0, b.0, dims.0).max(d(a.1, b.1, dims.1))
}

/// Merges detections whose cells touch (8-neighbourhood, cyclic) and keeps
/// the strongest cell of each group. Output is ordered by decreasing power.
pub fn cluster_detections(dims: (usize, usize), dets: &[Detection]) -> Vec<Detection> {
    let n = dets.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if cell_distance(dims, (dets[i].l, dets[i].k), (dets[j].l, dets[j].k)) <= 1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut best: Vec<Option<Detection>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        match best[root] {
            Some(d) if d.power >= dets[i].power => {}
            _ => best[root] = Some(dets[i]),
        }
    }
    let mut out: Vec<Detection> = best.into_iter().flatten().collect();
    out.sort_by(|a, b| b.power.total_cmp(&a.power).then((a.l, a.k).cmp(&(b.l, b.k))));
    out
}

/// Largest `|z|`; ties go to the smallest `l`, then the smallest `k`.
pub fn peak(map: &DelayDopplerMap) -> Result<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for ((l, k), v) in map.cells.indexed_iter() {
        let m = v.norm();
        match best {
            Some((_, _, b)) if m <= b => {}
            _ => best = Some((l, k, m)),
        }
    }
    best.ok_or_else(|| AfdmError::InvalidConfig("empty map".into()))
}
