//! Discrete delay-Doppler channel.
//!
//! Each resolvable scatterer is an integer delay tap and an integer Doppler
//! tap. After prefix removal the echo is
//! `r[n] = sum_i h_i s[(n - l_i) mod N_c] exp(-j 2 pi k_i n / N_c) + w[n]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AfdmError, Result};
use crate::params::AfdmConfig;
use crate::phase::UnitRoots;
use crate::waveform::TimeSignal;
use crate::C64;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One scatterer on the integer delay-Doppler grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTap {
    pub gain: C64,
    pub delay: usize,
    pub doppler: i64,
}

impl PathTap {
    pub fn new(gain: C64, delay: usize, doppler: i64) -> Self {
        PathTap {
            gain,
            delay,
            doppler,
        }
    }

    pub fn unit(delay: usize, doppler: i64) -> Self {
        Self::new(C64::new(1.0, 0.0), delay, doppler)
    }
}

/// A monostatic scatterer in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPath {
    pub range_m: f64,
    pub radial_velocity_mps: f64,
    pub gain: C64,
}

/// Round-trip delay `2R / c` in seconds.
pub fn round_trip_delay(range_m: f64) -> f64 {
    2.0 * range_m / SPEED_OF_LIGHT
}

/// Round-trip Doppler shift `2 v f_c / c` in Hz.
pub fn round_trip_doppler(velocity_mps: f64, carrier_hz: f64) -> f64 {
    2.0 * velocity_mps * carrier_hz / SPEED_OF_LIGHT
}

/// `l = round(B tau)`, `k = round(T nu)`.
pub fn quantize_taps(delay_s: f64, doppler_hz: f64, bandwidth_hz: f64, duration_s: f64) -> (i64, i64) {
    (
        (bandwidth_hz * delay_s).round() as i64,
        (duration_s * doppler_hz).round() as i64,
    )
}

/// Quantizes a physical path onto the delay-Doppler grid.
pub fn quantize_path(
    p: &PhysicalPath,
    bandwidth_hz: f64,
    duration_s: f64,
    carrier_hz: f64,
) -> Result<PathTap> {
    if !(bandwidth_hz > 0.0 && duration_s > 0.0) {
        return Err(AfdmError::InvalidConfig(
            "bandwidth and duration must be positive".into(),
        ));
    }
    if p.range_m < 0.0 {
        return Err(AfdmError::InvalidConfig("range must be non-negative".into()));
    }
    let (l, k) = quantize_taps(
        round_trip_delay(p.range_m),
        round_trip_doppler(p.radial_velocity_mps, carrier_hz),
        bandwidth_hz,
        duration_s,
    );
    Ok(PathTap::new(p.gain, l as usize, k))
}

/// Cyclic delay-Doppler channel, noise free.
pub fn apply_channel(config: &AfdmConfig, s: &TimeSignal, paths: &[PathTap]) -> Result<TimeSignal> {
    let n_c = config.n_c();
    if s.has_cpp {
        return Err(AfdmError::CppState("the cyclic channel expects the prefix removed"));
    }
    if s.len() != n_c {
        return Err(AfdmError::LengthMismatch {
            expected: n_c,
            got: s.len(),
        });
    }
    let roots = UnitRoots::new(n_c);
    let mut out = vec![C64::new(0.0, 0.0); n_c];
    for p in paths {
        let l = p.delay % n_c;
        for (n, o) in out.iter_mut().enumerate() {
            let src = s.samples[(n + n_c - l) % n_c];
            *o += p.gain * src * roots.get(-p.doppler * n as i64);
        }
    }
    Ok(TimeSignal::new(out))
}

/// Adjoint of [`apply_channel`]:
/// `(G^H r)[n] = sum_i conj(h_i) exp(j 2 pi k_i (n + l_i) / N_c) r[(n + l_i) mod N_c]`.
pub fn apply_channel_adjoint(config: &AfdmConfig, r: &TimeSignal, paths: &[PathTap]) -> Result<TimeSignal> {
    let n_c = config.n_c();
    if r.len() != n_c {
        return Err(AfdmError::LengthMismatch {
            expected: n_c,
            got: r.len(),
        });
    }
    let roots = UnitRoots::new(n_c);
    let mut out = vec![C64::new(0.0, 0.0); n_c];
    for p in paths {
        let l = p.delay % n_c;
        let g = p.gain.conj();
        for (n, o) in out.iter_mut().enumerate() {
            let j = (n + l) % n_c;
            *o += g * r.samples[j] * roots.get(p.doppler * j as i64);
        }
    }
    Ok(TimeSignal::new(out))
}

/// Linear (non-cyclic) channel over a prefixed block of `N_c + L_cpp` samples.
///
/// Samples before the start of the block are taken as zero. The Doppler phase
/// is referenced to the post-prefix index `n = j - L_cpp`, so after prefix
/// removal the result is comparable with [`apply_channel`].
pub fn apply_linear_channel(config: &AfdmConfig, s: &TimeSignal, paths: &[PathTap]) -> Result<TimeSignal> {
    if !s.has_cpp {
        return Err(AfdmError::CppState("the linear channel expects a prefixed block"));
    }
    let n_c = config.n_c();
    let l_cpp = config.l_cpp();
    let len = n_c + l_cpp;
    if s.len() != len {
        return Err(AfdmError::LengthMismatch {
            expected: len,
            got: s.len(),
        });
    }
    let roots = UnitRoots::new(n_c);
    let mut out = vec![C64::new(0.0, 0.0); len];
    for p in paths {
        for (j, o) in out.iter_mut().enumerate().skip(p.delay) {
            let n = j as i64 - l_cpp as i64;
            *o += p.gain * s.samples[j - p.delay] * roots.get(-p.doppler * n);
        }
    }
    Ok(TimeSignal {
        samples: out,
        has_cpp: true,
    })
}

/// Noise variance for a transmit SNR in dB, relative to unit sample power.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// One draw of circularly-symmetric complex Gaussian noise with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Adds complex AWGN with per-sample variance `10^(-snr_db/10)`.
///
/// The reference power is one (unit-power transmit samples), independent of
/// the actual content of `r`. `snr_db = +inf` leaves the signal unchanged.
pub fn add_awgn<R: Rng + ?Sized>(r: &TimeSignal, snr_db: f64, rng: &mut R) -> Result<TimeSignal> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(AfdmError::InvalidConfig(format!("SNR {snr_db} dB is not usable")));
    }
    let var = noise_variance(snr_db);
    let mut out = r.clone();
    if var > 0.0 {
        for v in out.samples.iter_mut() {
            *v += complex_gaussian(rng, var);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{classic_params, proposed_params};
    use crate::waveform::{add_cpp, modulate, remove_cpp, DaftSymbols};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(n: usize, seed: u64) -> DaftSymbols {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DaftSymbols((0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect())
    }

    #[test]
    fn quantize_table_one_extremes() {
        let b = 7.68e6;
        let t = 512.0 / b;
        let (l, _) = quantize_taps(1302e-9, 0.0, b, t);
        assert_eq!(l, 10);
        let (_, k) = quantize_taps(0.0, 45e3, b, t);
        assert_eq!(k, 3);

        let p = PhysicalPath {
            range_m: 1302e-9 * SPEED_OF_LIGHT / 2.0,
            radial_velocity_mps: 45e3 * SPEED_OF_LIGHT / (2.0 * 79e9),
            gain: C64::new(1.0, 0.0),
        };
        let tap = quantize_path(&p, b, t, 79e9).unwrap();
        assert_eq!((tap.delay, tap.doppler), (10, 3));

        let still = PhysicalPath {
            range_m: 0.0,
            radial_velocity_mps: 0.0,
            gain: C64::new(1.0, 0.0),
        };
        let tap = quantize_path(&still, b, t, 79e9).unwrap();
        assert_eq!((tap.delay, tap.doppler), (0, 0));
        assert!(quantize_path(&still, 0.0, t, 79e9).is_err());
    }

    #[test]
    fn identity_and_shift_channels() {
        let c = proposed_params(8, 2).unwrap();
        let s = modulate(&c, &random_symbols(16, 1)).unwrap();
        let r = apply_channel(&c, &s, &[PathTap::unit(0, 0)]).unwrap();
        assert_eq!(r.samples, s.samples);
        let r = apply_channel(&c, &s, &[PathTap::unit(2, 0)]).unwrap();
        for n in 0..16 {
            assert_eq!(r.samples[n], s.samples[(n + 14) % 16]);
        }
    }

    #[test]
    fn two_paths_superpose() {
        let c = proposed_params(8, 4).unwrap();
        let s = modulate(&c, &random_symbols(32, 2)).unwrap();
        let a = PathTap::new(C64::new(0.3, -0.2), 3, 1);
        let b = PathTap::new(C64::new(-0.7, 0.1), 5, -2);
        let both = apply_channel(&c, &s, &[a, b]).unwrap();
        let ra = apply_channel(&c, &s, &[a]).unwrap();
        let rb = apply_channel(&c, &s, &[b]).unwrap();
        for n in 0..32 {
            assert!((both.samples[n] - ra.samples[n] - rb.samples[n]).norm() < 1e-14);
        }
    }

    #[test]
    fn adjoint_is_adjoint() {
        let c = classic_params(24, 2).unwrap();
        let paths = [
            PathTap::new(C64::new(0.5, 0.5), 3, 2),
            PathTap::new(C64::new(0.1, -0.4), 7, -1),
        ];
        let x = TimeSignal::new(random_symbols(24, 3).0);
        let y = TimeSignal::new(random_symbols(24, 4).0);
        let gx = apply_channel(&c, &x, &paths).unwrap();
        let ghy = apply_channel_adjoint(&c, &y, &paths).unwrap();
        let lhs: C64 = gx.samples.iter().zip(&y.samples).map(|(a, b)| a * b.conj()).sum();
        let rhs: C64 = x.samples.iter().zip(&ghy.samples).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn prefixed_linear_channel_matches_cyclic_model() {
        let c = proposed_params(8, 4).unwrap().with_cpp(6).unwrap();
        let s = modulate(&c, &random_symbols(32, 5)).unwrap();
        let paths = [PathTap::new(C64::new(0.8, 0.0), 6, 3), PathTap::unit(2, -1)];
        let lin = apply_linear_channel(&c, &add_cpp(&c, &s).unwrap(), &paths).unwrap();
        let lin = remove_cpp(&c, &lin).unwrap();
        let cyc = apply_channel(&c, &s, &paths).unwrap();
        for n in 0..32 {
            assert!((lin.samples[n] - cyc.samples[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn awgn_infinite_snr_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = TimeSignal::new(random_symbols(8, 9).0);
        assert_eq!(add_awgn(&r, f64::INFINITY, &mut rng).unwrap(), r);
        assert!(add_awgn(&r, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn awgn_power_on_zero_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zero = TimeSignal::zeros(512);
        let mut acc = 0.0;
        for _ in 0..100 {
            acc += add_awgn(&zero, 0.0, &mut rng).unwrap().mean_power();
        }
        let p = acc / 100.0;
        assert!((p - 1.0).abs() < 0.1, "p = {p}");
        let p10 = add_awgn(&zero, 10.0, &mut rng).unwrap().mean_power();
        assert!((p10 - 0.1).abs() < 0.03, "p10 = {p10}");
    }
}
