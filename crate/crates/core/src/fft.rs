//! Thin wrappers over `rustfft` with a per-thread plan cache.

use std::cell::RefCell;

use rustfft::{Fft, FftPlanner};

use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> std::sync::Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized forward DFT, `X[m] = sum_n x[n] exp(-j 2 pi m n / N)`, in place.
pub fn forward(buf: &mut [C64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// Unnormalized inverse DFT, `x[n] = sum_m X[m] exp(+j 2 pi m n / N)`, in place.
pub fn inverse(buf: &mut [C64]) {
    if buf.len() > 1 {
        plan(buf.len(), true).process(buf);
    }
}

/// Applies a transform of length `len` to each contiguous chunk of `buf`.
pub fn forward_chunks(buf: &mut [C64], len: usize) {
    if len > 1 {
        plan(len, false).process(buf);
    }
}

pub fn inverse_chunks(buf: &mut [C64], len: usize) {
    if len > 1 {
        plan(len, true).process(buf);
    }
}
