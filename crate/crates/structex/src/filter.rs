//! Separable Gaussian filtering with half-sample symmetric boundaries.

use ndarray::Array2;

/// Maps any integer index into `0..n` by half-sample symmetric reflection
/// (`... 1 0 | 0 1 ... n-1 | n-1 n-2 ...`).
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Normalized 1D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Convolves rows then columns with the same symmetric kernel.
pub fn separable(input: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let (h, w) = input.dim();
    let tmp = convolve_rows(input, kernel);
    convolve_rows(&tmp.reversed_axes().as_standard_layout().to_owned(), kernel)
        .reversed_axes()
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((h, w))
        .expect("shape preserved")
}

fn convolve_rows(input: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let (h, w) = input.dim();
    let r = kernel.len() / 2;
    let mut out = Array2::zeros((h, w));
    let mut padded = vec![0.0; w + 2 * r];
    for (row_in, mut row_out) in input.rows().into_iter().zip(out.rows_mut()) {
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row_in[reflect(i as isize - r as isize, w)];
        }
        for (x, o) in row_out.iter_mut().enumerate() {
            *o = kernel.iter().zip(&padded[x..x + kernel.len()]).map(|(k, v)| k * v).sum();
        }
    }
    out
}

/// Gaussian blur truncated at three standard deviations; `sigma == 0` is the identity.
pub fn gaussian_blur(input: &Array2<f64>, sigma: f64) -> Array2<f64> {
    if sigma <= 0.0 {
        return input.clone();
    }
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    separable(input, &gaussian_kernel(sigma, radius))
}
