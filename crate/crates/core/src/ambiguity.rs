//! Discrete periodic ambiguity function (DPAF).
//!
//! `Lambda^{a,b}[l, k] = sum_n a[n] conj(b[(n - l) mod N_c]) exp(j 2 pi k n / N_c)`.
//!
//! Under the proposed parameters the auto-ambiguity of `psi_0` is nonzero only
//! where `k = 0 (mod K)` and `l = -floor(k / K) (mod N_p)`, and every other
//! subcarrier pair reduces to it through a phase rotation. The closed forms
//! below evaluate the support test in integer arithmetic and the phases by
//! exact rational reduction.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{AfdmError, Result};
use crate::params::AfdmConfig;
use crate::phase::{cis, frac_ratio, wrap, UnitRoots};
use crate::waveform::{subcarrier, TimeSignal};
use crate::C64;

/// One point of an ambiguity surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpafSample {
    pub l: i64,
    pub k: i64,
    pub value: C64,
}

/// Brute-force cross DPAF of `a` against `b`.
pub fn dpaf_brute(a: &TimeSignal, b: &TimeSignal, l: i64, k: i64) -> Result<C64> {
    if a.len() != b.len() {
        return Err(AfdmError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n_c = a.len() as i64;
    if n_c == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let roots = UnitRoots::new(n_c as usize);
    Ok(dpaf_with_roots(a, b, l, k, &roots))
}

fn dpaf_with_roots(a: &TimeSignal, b: &TimeSignal, l: i64, k: i64, roots: &UnitRoots) -> C64 {
    let n_c = a.len() as i64;
    (0..n_c)
        .map(|n| {
            let j = (n - l).rem_euclid(n_c) as usize;
            a.samples[n as usize] * b.samples[j].conj() * roots.get(k * n)
        })
        .sum()
}

/// Support test for the base auto-ambiguity of `psi_0`.
fn on_base_support(config: &AfdmConfig, l: i64, k: i64) -> bool {
    let kk = config.k_chirps() as i64;
    let n_p = config.n_p() as i64;
    k.rem_euclid(kk) == 0 && (l + k.div_euclid(kk)).rem_euclid(n_p) == 0
}

/// `-l^2 / (2 N_p)` in turns.
fn base_phase(config: &AfdmConfig, l: i64) -> f64 {
    let l = l as i128;
    -frac_ratio(l * l, 2 * config.n_p() as i128)
}

/// Closed-form auto-ambiguity of `psi_0`:
/// `N_c exp(-j pi l^2 / N_p)` on the support, zero elsewhere.
pub fn aaf_psi0_closed(config: &AfdmConfig, l: i64, k: i64) -> Result<C64> {
    config.require_proposed()?;
    if !on_base_support(config, l, k) {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(cis(base_phase(config, l)) * config.n_c() as f64)
}

/// Auto-ambiguity of the subcarrier at DD index `(l_p, k_p)`:
/// `exp(j 2 pi (k l_p - l k_p) / N_c) Lambda^{psi_0}[l, k]`.
pub fn aaf_shifted_closed(config: &AfdmConfig, lp: (i64, i64), l: i64, k: i64) -> Result<C64> {
    config.require_proposed()?;
    if !on_base_support(config, l, k) {
        return Ok(C64::new(0.0, 0.0));
    }
    let (l_p, k_p) = lp;
    let n_c = config.n_c() as i128;
    let rot = frac_ratio(k as i128 * l_p as i128 - l as i128 * k_p as i128, n_c);
    Ok(cis(wrap(rot + base_phase(config, l))) * config.n_c() as f64)
}

/// Cross-ambiguity of subcarriers `(l_p, k_p)` and `(l_p', k_p')`.
pub fn caf_closed(
    config: &AfdmConfig,
    a: (i64, i64),
    b: (i64, i64),
    l: i64,
    k: i64,
) -> Result<C64> {
    config.require_proposed()?;
    let (l_p, k_p) = a;
    let (l_q, k_q) = b;
    let dl = l + l_q - l_p;
    let dk = k + k_q - k_p;
    if !on_base_support(config, dl, dk) {
        return Ok(C64::new(0.0, 0.0));
    }
    let n_c = config.n_c() as i128;
    let two_np = 2 * config.n_p() as i128;
    let (l_p, k_p, l_q, k_q, l, k) = (
        l_p as i128,
        k_p as i128,
        l_q as i128,
        k_q as i128,
        l as i128,
        k as i128,
    );
    let phi1 = frac_ratio(k * l_p - l * k_q + (k_q - k_p) * l_p, n_c)
        + frac_ratio(l_q * l_q - l_p * l_p, two_np);
    let phi2 = base_phase(config, dl);
    Ok(cis(wrap(phi1 + phi2)) * config.n_c() as f64)
}

/// Full `N_c x N_c` ambiguity surface of the subcarrier at DD index `(l_p, k_p)`.
///
/// The proposed preset uses the closed form; any other preset falls back to
/// brute force on `psi_m` for the subcarrier index `m = l_p` (there is no DD
/// interpretation of the index without the proposed parameters).
pub fn af_surface(config: &AfdmConfig, lp: (usize, usize)) -> Result<Vec<DpafSample>> {
    let n_c = config.n_c() as i64;
    let cells: Vec<(i64, i64)> = (0..n_c)
        .flat_map(|l| (0..n_c).map(move |k| (l, k)))
        .collect();
    if config.is_proposed() {
        let lp = (lp.0 as i64, lp.1 as i64);
        cells
            .into_iter()
            .map(|(l, k)| {
                aaf_shifted_closed(config, lp, l, k).map(|value| DpafSample { l, k, value })
            })
            .collect()
    } else {
        let psi = subcarrier(config, lp.0)?;
        let roots = UnitRoots::new(n_c as usize);
        Ok(cells
            .into_par_iter()
            .map(|(l, k)| DpafSample {
                l,
                k,
                value: dpaf_with_roots(&psi, &psi, l, k, &roots),
            })
            .collect())
    }
}

/// Writes an ambiguity surface as `l,k,re,im,magnitude_db`, with magnitudes
/// normalized to `N_c`.
pub fn write_surface_csv<W: Write>(mut w: W, n_c: usize, surface: &[DpafSample]) -> io::Result<()> {
    writeln!(w, "l,k,re,im,magnitude_db")?;
    for s in surface {
        let mag = s.value.norm() / n_c as f64;
        let db = if mag > 0.0 {
            20.0 * mag.log10()
        } else {
            f64::NEG_INFINITY
        };
        writeln!(w, "{},{},{},{},{}", s.l, s.k, s.value.re, s.value.im, db)?;
    }
    Ok(())
}
