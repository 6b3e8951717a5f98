//! Small 2-D FFT wrapper over rustfft (row pass, then column pass).

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn fft2(buf: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    row_fft.process(buf);
    let mut col = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            col[y] = buf[y * width + x];
        }
        col_fft.process(&mut col);
        for y in 0..height {
            buf[y * width + x] = col[y];
        }
    }
    if inverse {
        let s = 1.0 / (width * height) as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

pub(crate) fn to_complex(data: &[f64]) -> Vec<Complex64> {
    data.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Copy a `w`x`h` plane into the top-left corner of a zeroed `pw`x`ph` grid.
pub(crate) fn zero_padded(data: &[f64], w: usize, h: usize, pw: usize, ph: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); pw * ph];
    for y in 0..h {
        for x in 0..w {
            out[y * pw + x] = Complex64::new(data[y * w + x], 0.0);
        }
    }
    out
}
