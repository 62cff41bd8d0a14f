//! Mean structural similarity with an 11x11 Gaussian window (sigma 1.5).

use sua_core::{ensure_same_dims, Image, Result};

use crate::filter::{gaussian_kernel, separable};

pub const WINDOW_RADIUS: usize = 5;
pub const WINDOW_SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
pub const DYNAMIC_RANGE: f64 = 1.0;

pub fn c1() -> f64 {
    (K1 * DYNAMIC_RANGE).powi(2)
}

pub fn c2() -> f64 {
    (K2 * DYNAMIC_RANGE).powi(2)
}

/// Local statistics are Gaussian-weighted over a window centred on every
/// pixel, with half-sample symmetric extension at the borders; the result is
/// the mean of the SSIM map over all pixels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    ensure_same_dims("ssim", a.dims(), b.dims())?;
    let kernel = gaussian_kernel(WINDOW_SIGMA, WINDOW_RADIUS);
    let (x, y) = (a.to_f64(), b.to_f64());
    let mu_x = separable(&x, &kernel);
    let mu_y = separable(&y, &kernel);
    let xx = separable(&(&x * &x), &kernel);
    let yy = separable(&(&y * &y), &kernel);
    let xy = separable(&(&x * &y), &kernel);
    let (c1, c2) = (c1(), c2());
    let mut total = 0.0;
    for i in 0..x.len() {
        let (mx, my) = (mu_x.as_slice().unwrap()[i], mu_y.as_slice().unwrap()[i]);
        let vx = xx.as_slice().unwrap()[i] - mx * mx;
        let vy = yy.as_slice().unwrap()[i] - my * my;
        let cxy = xy.as_slice().unwrap()[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / x.len() as f64)
}
