//! Direct-sum reference implementations, written from the defining formulas
//! with no FFTs and no reuse of the library's phase helpers.

#![allow(dead_code)]

use afdm_isac::C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symbols(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn max_err(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `exp(j 2 pi num / den)` with the numerator reduced modulo `den` first.
pub fn unit(num: i128, den: i128) -> C64 {
    let r = num.rem_euclid(den);
    C64::from_polar(1.0, 2.0 * PI * r as f64 / den as f64)
}

/// Chirp rates as `c1 = c1_num / c1_den` and a real `c2`.
#[derive(Clone, Copy, Debug)]
pub struct Rates {
    pub n_c: usize,
    pub c1_num: i128,
    pub c1_den: i128,
    pub c2: f64,
}

impl Rates {
    pub fn proposed(n_p: usize, k: usize) -> Self {
        Rates { n_c: n_p * k, c1_num: 1, c1_den: 2 * n_p as i128, c2: 0.0 }
    }
    pub fn classic(n_c: usize, k_max: usize) -> Self {
        Rates { n_c, c1_num: 2 * k_max as i128 + 1, c1_den: 2 * n_c as i128, c2: 2f64.sqrt() }
    }
    pub fn ofdm(n_c: usize) -> Self {
        Rates { n_c, c1_num: 0, c1_den: 1, c2: 0.0 }
    }
    pub fn ocdm(n_c: usize) -> Self {
        Rates { n_c, c1_num: 1, c1_den: 2 * n_c as i128, c2: 1.0 / (2.0 * n_c as f64) }
    }

    /// `exp(j 2 pi (c1 n^2 + m n / N + c2 m^2))`.
    pub fn chirp(&self, m: usize, n: usize) -> C64 {
        let (m, n, nc) = (m as i128, n as i128, self.n_c as i128);
        // c1 n^2 + m n / N over the common denominator c1_den * N.
        let den = self.c1_den * nc;
        let num = self.c1_num * n * n * nc + m * n * self.c1_den;
        let c2 = (self.c2 * (m * m) as f64).fract();
        unit(num, den) * C64::from_polar(1.0, 2.0 * PI * c2)
    }

    pub fn subcarrier(&self, m: usize) -> Vec<C64> {
        (0..self.n_c).map(|n| self.chirp(m, n)).collect()
    }

    pub fn modulate(&self, x: &[C64]) -> Vec<C64> {
        let s = 1.0 / (self.n_c as f64).sqrt();
        (0..self.n_c)
            .map(|n| x.iter().enumerate().map(|(m, v)| v * self.chirp(m, n)).sum::<C64>() * s)
            .collect()
    }

    pub fn demodulate(&self, r: &[C64]) -> Vec<C64> {
        let s = 1.0 / (self.n_c as f64).sqrt();
        (0..self.n_c)
            .map(|m| r.iter().enumerate().map(|(n, v)| v * self.chirp(m, n).conj()).sum::<C64>() * s)
            .collect()
    }
}

/// `r[n] = sum_i h_i s[(n - l_i) mod N] exp(-j 2 pi k_i n / N)`.
pub fn channel(s: &[C64], paths: &[(C64, usize, i64)]) -> Vec<C64> {
    let n_c = s.len();
    (0..n_c)
        .map(|n| {
            paths
                .iter()
                .map(|&(h, l, k)| h * s[(n + n_c - l % n_c) % n_c] * unit(-(k as i128) * n as i128, n_c as i128))
                .sum()
        })
        .collect()
}

/// `sum_n a[n] conj(b[(n - l) mod N]) exp(j 2 pi k n / N)`.
pub fn dpaf(a: &[C64], b: &[C64], l: i64, k: i64) -> C64 {
    let n_c = a.len() as i64;
    (0..n_c)
        .map(|n| a[n as usize] * b[(n - l).rem_euclid(n_c) as usize].conj() * unit((k * n) as i128, n_c as i128))
        .sum()
}

/// `m = (N - K l - k) mod N`.
pub fn dd_index(n_p: usize, k_chirps: usize, l: usize, k: usize) -> usize {
    let n_c = n_p * k_chirps;
    (2 * n_c - k_chirps * l - k) % n_c
}

/// DAFT vector to `[l][k]` rows.
pub fn to_grid(n_p: usize, k_chirps: usize, v: &[C64]) -> Vec<Vec<C64>> {
    (0..n_p)
        .map(|l| (0..k_chirps).map(|k| v[dd_index(n_p, k_chirps, l, k)]).collect())
        .collect()
}

/// TFMF by direct sums: cyclic correlation inside each chirp period, then a
/// slow-time inverse DFT, each stage scaled as the unitary transforms.
pub fn tfmf(n_p: usize, k_chirps: usize, r: &[C64], s: &[C64]) -> Vec<Vec<C64>> {
    let sp = 1.0 / (n_p as f64).sqrt();
    let sk = 1.0 / (k_chirps as f64).sqrt();
    let d: Vec<Vec<C64>> = (0..k_chirps)
        .map(|q| {
            (0..n_p)
                .map(|l| {
                    (0..n_p)
                        .map(|n| r[q * n_p + n] * s[q * n_p + (n + n_p - l) % n_p].conj())
                        .sum::<C64>()
                        * sp
                })
                .collect()
        })
        .collect();
    (0..n_p)
        .map(|l| {
            (0..k_chirps)
                .map(|k| {
                    (0..k_chirps)
                        .map(|q| d[q][l] * unit((q * k) as i128, k_chirps as i128))
                        .sum::<C64>()
                        * sk
                })
                .collect()
        })
        .collect()
}

/// Dechirp by direct sums: beat frequency of delay `l` is `-l`.
pub fn dechirp(n_p: usize, k_chirps: usize, r: &[C64], p: &[C64]) -> Vec<Vec<C64>> {
    let sp = 1.0 / (n_p as f64).sqrt();
    let sk = 1.0 / (k_chirps as f64).sqrt();
    (0..n_p)
        .map(|l| {
            (0..k_chirps)
                .map(|k| {
                    let mut acc = C64::new(0.0, 0.0);
                    for q in 0..k_chirps {
                        for n in 0..n_p {
                            let i = q * n_p + n;
                            acc += r[i] * p[i].conj() * unit((n * l) as i128, n_p as i128) * unit((q * k) as i128, k_chirps as i128);
                        }
                    }
                    acc * sp * sk
                })
                .collect()
        })
        .collect()
}

/// DD-domain matched filter straight from its double sum, for a signed
/// Doppler hypothesis `k`.
pub fn ddmf_cell(n_p: usize, k_chirps: usize, y: &[Vec<C64>], x: &[Vec<C64>], l: i64, k: i64) -> C64 {
    let (np, kk) = (n_p as i64, k_chirps as i64);
    let n_c = np * kk;
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..np {
        for m in 0..kk {
            let carry = (m - k).div_euclid(kk);
            let src_l = (n - l + carry).rem_euclid(np) as usize;
            let src_k = (m - k).rem_euclid(kk) as usize;
            // l (m - k) / N + n l / N_p - l^2 / (2 N_p) over 2N.
            let num = 2 * l * (m - k) + 2 * kk * n * l - kk * l * l;
            acc += y[n as usize][m as usize].conj() * x[src_l][src_k] * unit(num as i128, 2 * n_c as i128);
        }
    }
    acc
}

/// CA-CFAR cell test by explicit ring enumeration. Returns detected cells.
pub fn cfar(power: &[Vec<f64>], train: usize, guard: usize, pfa: f64) -> Vec<(usize, usize)> {
    let rows = power.len();
    let cols = power[0].len();
    let reach = (train + guard) as i64;
    let mut out = Vec::new();
    let nt = ((2 * reach + 1).pow(2) - (2 * guard as i64 + 1).pow(2)) as f64;
    let alpha = nt * (pfa.powf(-1.0 / nt) - 1.0);
    for r in 0..rows {
        for c in 0..cols {
            let mut sum = 0.0;
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    if dr.abs().max(dc.abs()) > guard as i64 {
                        sum += power[(r as i64 + dr).rem_euclid(rows as i64) as usize][(c as i64 + dc).rem_euclid(cols as i64) as usize];
                    }
                }
            }
            let noise = (sum / nt).max(f64::MIN_POSITIVE);
            if power[r][c] > alpha * noise {
                out.push((r, c));
            }
        }
    }
    out
}
