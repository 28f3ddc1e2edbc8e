//! The DD-DAFT domain: DAFT symbols re-indexed on an `N_p x K` delay-Doppler
//! grid through `m = (N_c - K l - k) mod N_c`.
//!
//! On this grid an integer delay-Doppler path acts as a 2D cyclic shift with
//! a Doppler-induced delay carry `floor((k - k_i) / K)` and a deterministic
//! phase. Three equivalent evaluations are provided: the compact relation
//! ([`io_predict`]), the kernel convolution ([`io_convolve`] with
//! [`kernel_hw`]) and the general ambiguity-coefficient sum ([`io_general`]).

use std::io::{self, Write};

use ndarray::Array2;

use crate::ambiguity::caf_closed;
use crate::channel::PathTap;
use crate::error::{AfdmError, Result};
use crate::params::AfdmConfig;
use crate::phase::{cis, frac_ratio, wrap};
use crate::waveform::{dd_to_daft_index, DaftSymbols};
use crate::C64;

/// `N_p x K` grid indexed `[l, k]` (delay, Doppler).
#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid {
    pub cells: Array2<C64>,
}

impl DdGrid {
    pub fn zeros(config: &AfdmConfig) -> Self {
        DdGrid {
            cells: Array2::zeros((config.n_p(), config.k_chirps())),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.cells.dim()
    }

    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &DdGrid) -> f64 {
        self.cells
            .iter()
            .zip(other.cells.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "l,k,re,im")?;
        for ((l, k), v) in self.cells.indexed_iter() {
            writeln!(w, "{l},{k},{},{}", v.re, v.im)?;
        }
        Ok(())
    }
}

fn check_grid(config: &AfdmConfig, g: &DdGrid) -> Result<()> {
    let want = (config.n_p(), config.k_chirps());
    if g.dims() != want {
        return Err(AfdmError::LengthMismatch {
            expected: want.0 * want.1,
            got: g.cells.len(),
        });
    }
    Ok(())
}

pub fn vector_to_grid(config: &AfdmConfig, v: &DaftSymbols) -> Result<DdGrid> {
    config.require_proposed()?;
    if v.len() != config.n_c() {
        return Err(AfdmError::LengthMismatch {
            expected: config.n_c(),
            got: v.len(),
        });
    }
    let mut g = DdGrid::zeros(config);
    for ((l, k), cell) in g.cells.indexed_iter_mut() {
        *cell = v.0[dd_to_daft_index(config, l, k)?];
    }
    Ok(g)
}

pub fn grid_to_vector(config: &AfdmConfig, g: &DdGrid) -> Result<DaftSymbols> {
    config.require_proposed()?;
    check_grid(config, g)?;
    let mut v = DaftSymbols::zeros(config.n_c());
    for ((l, k), cell) in g.cells.indexed_iter() {
        v.0[dd_to_daft_index(config, l, k)?] = *cell;
    }
    Ok(v)
}

/// Delay carry and phase (in turns) that a path imposes on output cell
/// `(l, k)`: `floor((k - k_i)/K)` and
/// `(k - k_i) l_i / N_c + (2 l - l_i) l_i / (2 N_p)`.
#[inline]
fn path_response(config: &AfdmConfig, p: &PathTap, l: usize, k: usize) -> (i64, f64) {
    let kk = config.k_chirps() as i64;
    let dk = k as i64 - p.doppler;
    let dl = dk.div_euclid(kk);
    let li = p.delay as i128;
    let turns = frac_ratio(dk as i128 * li, config.n_c() as i128)
        + frac_ratio((2 * l as i128 - li) * li, 2 * config.n_p() as i128);
    (dl, wrap(turns))
}

/// Noise-free `Y[l, k] = sum_i h_i X[(l - l_i + dl)_Np, (k - k_i)_K] exp(j phi_ch)`.
pub fn io_predict(config: &AfdmConfig, x: &DdGrid, paths: &[PathTap]) -> Result<DdGrid> {
    config.require_proposed()?;
    check_grid(config, x)?;
    let n_p = config.n_p() as i64;
    let kk = config.k_chirps() as i64;
    let mut y = DdGrid::zeros(config);
    for ((l, k), out) in y.cells.indexed_iter_mut() {
        for p in paths {
            let (dl, turns) = path_response(config, p, l, k);
            let src_l = (l as i64 - p.delay as i64 + dl).rem_euclid(n_p) as usize;
            let src_k = (k as i64 - p.doppler).rem_euclid(kk) as usize;
            *out += p.gain * x.cells[[src_l, src_k]] * cis(turns);
        }
    }
    Ok(y)
}

/// The 2D convolution kernel `h_w[l, k; l', k']`.
pub fn kernel_hw(
    config: &AfdmConfig,
    paths: &[PathTap],
    out: (usize, usize),
    src: (usize, usize),
) -> Result<C64> {
    config.require_proposed()?;
    let (l, k) = out;
    let (lq, kq) = src;
    let n_p = config.n_p() as i64;
    let kk = config.k_chirps() as i64;
    let mut acc = C64::new(0.0, 0.0);
    for p in paths {
        if (kq as i64 - (k as i64 - p.doppler)).rem_euclid(kk) != 0 {
            continue;
        }
        let carry = (k as i64 - (kq as i64 + p.doppler)).div_euclid(kk);
        if (lq as i64 - (l as i64 - p.delay as i64 + carry)).rem_euclid(n_p) != 0 {
            continue;
        }
        let li = p.delay as i128;
        let turns = frac_ratio(li * kq as i128, config.n_c() as i128)
            + frac_ratio(2 * lq as i128 * li + li * li, 2 * config.n_p() as i128);
        acc += p.gain * cis(wrap(turns));
    }
    Ok(acc)
}

/// `Y[l, k] = sum_{l', k'} X[l', k'] h_w[l, k; l', k']`, evaluated in full.
pub fn io_convolve(config: &AfdmConfig, x: &DdGrid, paths: &[PathTap]) -> Result<DdGrid> {
    config.require_proposed()?;
    check_grid(config, x)?;
    let mut y = DdGrid::zeros(config);
    for ((l, k), out) in y.cells.indexed_iter_mut() {
        for ((lq, kq), v) in x.cells.indexed_iter() {
            let h = kernel_hw(config, paths, (l, k), (lq, kq))?;
            if h != C64::new(0.0, 0.0) {
                *out += v * h;
            }
        }
    }
    Ok(y)
}

/// `A_{(l',k'),(l,k)}[l_i, k_i] = conj(Lambda^{psi_(l,k), psi_(l',k')}[l_i, k_i]) / N_c`.
pub fn interaction_coeff(
    config: &AfdmConfig,
    src: (usize, usize),
    out: (usize, usize),
    l_i: i64,
    k_i: i64,
) -> Result<C64> {
    let a = (out.0 as i64, out.1 as i64);
    let b = (src.0 as i64, src.1 as i64);
    Ok(caf_closed(config, a, b, l_i, k_i)?.conj() / config.n_c() as f64)
}

/// `Y[l, k] = sum_i h_i sum_{l', k'} X[l', k'] A_{(l',k'),(l,k)}[l_i, k_i]`.
pub fn io_general(config: &AfdmConfig, x: &DdGrid, paths: &[PathTap]) -> Result<DdGrid> {
    config.require_proposed()?;
    check_grid(config, x)?;
    let mut y = DdGrid::zeros(config);
    for ((l, k), out) in y.cells.indexed_iter_mut() {
        for p in paths {
            for ((lq, kq), v) in x.cells.indexed_iter() {
                let a = interaction_coeff(config, (lq, kq), (l, k), p.delay as i64, p.doppler)?;
                if a != C64::new(0.0, 0.0) {
                    *out += p.gain * v * a;
                }
            }
        }
    }
    Ok(y)
}
