//! Two-dimensional complex transforms on row-major buffers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::GridFunction;

/// In-place 2-D transform of a `px × py` row-major buffer (unnormalized).
pub fn fft2(planner: &mut FftPlanner<f64>, data: &mut [Complex64], px: usize, py: usize, inverse: bool) {
    let row = if inverse { planner.plan_fft_inverse(px) } else { planner.plan_fft_forward(px) };
    row.process(data);
    let col = if inverse { planner.plan_fft_inverse(py) } else { planner.plan_fft_forward(py) };
    let mut buf = vec![Complex64::default(); py];
    for x in 0..px {
        for (y, b) in buf.iter_mut().enumerate() {
            *b = data[y * px + x];
        }
        col.process(&mut buf);
        for (y, b) in buf.iter().enumerate() {
            data[y * px + x] = *b;
        }
    }
}

/// Samples of `f` copied into the corner of a zeroed `px × py` buffer, offset by `(ox, oy)`.
pub fn padded(f: &GridFunction, px: usize, py: usize, ox: usize, oy: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); px * py];
    let w = f.rect().width();
    for (row, chunk) in f.samples().chunks(w.max(1)).enumerate() {
        for (x, &v) in chunk.iter().enumerate() {
            out[(row + oy) * px + x + ox] = Complex64::new(v, 0.0);
        }
    }
    out
}

/// Smallest `2^a·3^b·5^c ≥ n`.
pub fn fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Signed frequency index of bin `k` on a grid of `n` bins.
#[inline]
pub fn signed_bin(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}
