//! Cached FFT plans and batched row/column transforms on row-major arrays.
//!
//! All transforms here are the raw, unnormalized DFT
//! `X[m] = sum_j x[j] exp(-2 pi i m j / n)` and its unnormalized inverse;
//! physical scalings live in [`super::field`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>;

fn cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

pub fn plan(n: usize, inverse: bool) -> Plan {
    let mut guard = cache().lock().expect("fft plan cache poisoned");
    let (planner, plans) = &mut *guard;
    plans
        .entry((n, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place FFT of a single vector.
pub fn fft(data: &mut [Complex64], inverse: bool) {
    plan(data.len(), inverse).process(data);
}

/// Inverse FFT including the `1/n` factor.
pub fn ifft_normalized(data: &mut [Complex64]) {
    let n = data.len();
    fft(data, true);
    let s = 1.0 / n as f64;
    data.iter_mut().for_each(|c| *c *= s);
}

/// Transform each contiguous row of length `ncols`.
pub fn fft_rows(data: &mut [Complex64], ncols: usize, inverse: bool) {
    let p = plan(ncols, inverse);
    data.par_chunks_mut(ncols).for_each_init(
        || vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()],
        |scratch, row| p.process_with_scratch(row, scratch),
    );
}

pub fn transpose(data: &[Complex64], nrows: usize, ncols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(nrows).enumerate().for_each(|(j, col)| {
        for (i, c) in col.iter_mut().enumerate() {
            *c = data[i * ncols + j];
        }
    });
    out
}

/// Transform each column (stride `ncols`) of a row-major `nrows x ncols` array.
pub fn fft_cols(data: &mut [Complex64], nrows: usize, ncols: usize, inverse: bool) {
    let mut t = transpose(data, nrows, ncols);
    fft_rows(&mut t, nrows, inverse);
    let back = transpose(&t, ncols, nrows);
    data.copy_from_slice(&back);
}
