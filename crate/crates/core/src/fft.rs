//! Multi-dimensional FFT over x-fastest buffers, one axis at a time.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Unnormalized in-place transform of a buffer with per-axis `counts`.
pub(crate) fn fft_nd(data: &mut [Complex64], counts: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let mut stride = 1;
    let total: usize = counts.iter().product();
    debug_assert_eq!(total, data.len());
    for &n in counts {
        if n > 1 {
            let fft = planner.plan_fft(n, direction);
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            let block = stride * n;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}

/// Forward 1D transform of a real signal zero-padded to `n`.
pub(crate) fn fft_real_padded(signal: &[f64], n: usize, direction: FftDirection) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft(n, direction).process(&mut buf);
    buf
}
