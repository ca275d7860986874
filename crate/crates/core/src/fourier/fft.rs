//! Multi-dimensional unnormalized DFT on a cube, axis by axis.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Lines gathered per block when an axis is strided.
const BLOCK: usize = 64;

/// In-place DFT over every axis of an `n`-dimensional cube of side `side`
/// (row-major). `inverse` uses `e^{+i}` and no normalization.
pub(crate) fn transform(data: &mut [Complex64], n: usize, side: usize, inverse: bool) {
    let fft = plan(side, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis is contiguous: all lines in one call
    fft.process_with_scratch(data, &mut scratch);
    let mut buf = vec![Complex64::new(0.0, 0.0); BLOCK * side];
    for axis in (0..n - 1).rev() {
        let stride = side.pow((n - 1 - axis) as u32);
        let outer = data.len() / (stride * side);
        for o in 0..outer {
            let base = o * stride * side;
            let mut q = 0;
            while q < stride {
                let b = BLOCK.min(stride - q);
                for i in 0..side {
                    let row = base + i * stride + q;
                    for (k, v) in data[row..row + b].iter().enumerate() {
                        buf[k * side + i] = *v;
                    }
                }
                fft.process_with_scratch(&mut buf[..b * side], &mut scratch);
                for i in 0..side {
                    let row = base + i * stride + q;
                    for (k, v) in data[row..row + b].iter_mut().enumerate() {
                        *v = buf[k * side + i];
                    }
                }
                q += b;
            }
        }
    }
}
