//! Phase arithmetic in units of turns (fractions of a full cycle).
//!
//! Chirp phases grow quadratically with the sample index, so they are reduced
//! modulo one turn before conversion to radians. Rational coefficients are
//! reduced exactly in integer arithmetic; real coefficients use an error-free
//! product so the reduction does not lose the low-order bits.

use std::f64::consts::TAU;

use num_rational::Ratio;

use crate::C64;

/// `num / den` reduced into `[0, 1)`. `den` must be positive.
#[inline]
pub fn frac_ratio(num: i128, den: i128) -> f64 {
    debug_assert!(den > 0);
    num.rem_euclid(den) as f64 / den as f64
}

/// `r * x` reduced modulo one, exactly.
#[inline]
pub fn ratio_times(r: &Ratio<i64>, x: i128) -> f64 {
    frac_ratio(*r.numer() as i128 * x, *r.denom() as i128)
}

/// `c * x` reduced modulo one, where `c` is a float and `x` an integer.
///
/// The product is split into its rounded value and the exact rounding error
/// so the fractional part stays accurate when `c * x` is large.
#[inline]
pub fn real_times(c: f64, x: i128) -> f64 {
    let x = x as f64;
    let p = c * x;
    let err = c.mul_add(x, -p);
    let f = (p - p.floor()) + err;
    f - f.floor()
}

/// Wraps a turn count into `[-0.5, 0.5)`.
#[inline]
pub fn wrap(t: f64) -> f64 {
    t - (t + 0.5).floor()
}

/// `exp(j 2 pi t)`.
#[inline]
pub fn cis(t: f64) -> C64 {
    let (s, c) = (TAU * wrap(t)).sin_cos();
    C64::new(c, s)
}

/// Lookup table for `exp(j 2 pi i / len)`, `i` taken modulo `len`.
#[derive(Debug, Clone)]
pub struct UnitRoots {
    table: Vec<C64>,
}

impl UnitRoots {
    pub fn new(len: usize) -> Self {
        let table = (0..len)
            .map(|i| cis(frac_ratio(i as i128, len as i128)))
            .collect();
        Self { table }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    #[inline]
    pub fn get(&self, i: i64) -> C64 {
        self.table[i.rem_euclid(self.table.len() as i64) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_reduction_is_exact_for_large_arguments() {
        let r = Ratio::new(1, 128);
        // 128 * 10^6 + 1 -> 1/128
        assert_eq!(ratio_times(&r, 128_000_001), 1.0 / 128.0);
        assert_eq!(ratio_times(&r, -1), 127.0 / 128.0);
    }

    #[test]
    fn real_reduction_matches_naive_for_small_products() {
        let c = 2f64.sqrt();
        for m in 0..50i128 {
            let naive = (c * m as f64).rem_euclid(1.0);
            let d = wrap(real_times(c, m) - naive);
            assert!(d.abs() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn cis_hits_quadrants() {
        assert!((cis(0.25) - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((cis(-0.5) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((cis(3.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unit_roots_wrap_negative_indices() {
        let t = UnitRoots::new(8);
        assert!((t.get(-1) - cis(7.0 / 8.0)).norm() < 1e-15);
        assert_eq!(t.len(), 8);
    }
}
