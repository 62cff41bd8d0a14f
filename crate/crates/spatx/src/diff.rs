//! Higher-order finite differences with reflective (Neumann) boundaries.
//!
//! Along one axis the forward difference `F` has a zero last row and the
//! backward difference is `B = -F^T`. The order-`k` derivative alternates
//! them starting from `F` (`F`, `BF`, `FBF`, ...), so that
//! `D_k^T D_k = (F^T F)^k`. Weighting the mixed partial of orders
//! `(k1, k2)` by `sqrt(n! / (k1! k2!))` then makes the summed squared norm
//! of all order-`n` partials equal `u^T (L_x + L_y)^n u`, the quadratic form
//! the spectral solver diagonalizes.

use ndarray::Array2;
use sua_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis2 {
    /// Along columns (`x`).
    X,
    /// Along rows (`y`).
    Y,
}

/// Forward difference with a zero last entry.
pub fn forward(f: &Array2<f64>, axis: Axis2) -> Array2<f64> {
    let (h, w) = f.dim();
    let mut out = Array2::zeros((h, w));
    match axis {
        Axis2::X => {
            for y in 0..h {
                for x in 0..w.saturating_sub(1) {
                    out[[y, x]] = f[[y, x + 1]] - f[[y, x]];
                }
            }
        }
        Axis2::Y => {
            for y in 0..h.saturating_sub(1) {
                for x in 0..w {
                    out[[y, x]] = f[[y + 1, x]] - f[[y, x]];
                }
            }
        }
    }
    out
}

/// Backward difference `-F^T`: `g_i - g_{i-1}` with `g_{-1} = 0` and the
/// last sample of `g` ignored.
pub fn backward(g: &Array2<f64>, axis: Axis2) -> Array2<f64> {
    let (h, w) = g.dim();
    let mut out = Array2::zeros((h, w));
    let n = match axis {
        Axis2::X => w,
        Axis2::Y => h,
    };
    for y in 0..h {
        for x in 0..w {
            let i = match axis {
                Axis2::X => x,
                Axis2::Y => y,
            };
            let at = |j: usize| match axis {
                Axis2::X => g[[y, j]],
                Axis2::Y => g[[j, x]],
            };
            let cur = if i + 1 < n { at(i) } else { 0.0 };
            let prev = if i > 0 { at(i - 1) } else { 0.0 };
            out[[y, x]] = cur - prev;
        }
    }
    out
}

/// Order-`k` derivative along one axis (`F`, `BF`, `FBF`, ...).
pub fn derivative(f: &Array2<f64>, axis: Axis2, order: usize) -> Array2<f64> {
    let mut out = f.clone();
    for step in 0..order {
        out = if step % 2 == 0 {
            forward(&out, axis)
        } else {
            backward(&out, axis)
        };
    }
    out
}

/// `n! / (k1! k2!)`.
pub fn multinomial(n: usize, k1: usize) -> f64 {
    let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
    fact(n) / (fact(k1) * fact(n - k1))
}

/// One weighted mixed partial of the order-`n` gradient.
#[derive(Debug, Clone)]
pub struct Partial {
    /// Derivative order along `x`.
    pub kx: usize,
    /// Derivative order along `y`.
    pub ky: usize,
    /// `sqrt(n! / (kx! ky!))`.
    pub weight: f64,
    /// Unweighted finite-difference partial.
    pub raw: Array2<f64>,
}

impl Partial {
    pub fn weighted(&self) -> Array2<f64> {
        &self.raw * self.weight
    }
}

/// All order-`n` mixed partials of a scalar grid, `kx = n, n-1, ..., 0`.
pub fn nth_gradient(f: &Array2<f64>, n: usize) -> Result<Vec<Partial>> {
    if n < 1 {
        return Err(Error::Parameter("gradient order must be >= 1".into()));
    }
    let (h, w) = f.dim();
    if h < n + 1 || w < n + 1 {
        return Err(Error::Shape(format!("{h}x{w} grid too small for order {n}")));
    }
    Ok((0..=n)
        .rev()
        .map(|kx| {
            let ky = n - kx;
            let raw = derivative(&derivative(f, Axis2::Y, ky), Axis2::X, kx);
            Partial {
                kx,
                ky,
                weight: multinomial(n, kx).sqrt(),
                raw,
            }
        })
        .collect())
}

/// `sum_k ||weighted partial_k||^2`.
pub fn nth_gradient_energy(f: &Array2<f64>, n: usize) -> Result<f64> {
    Ok(nth_gradient(f, n)?
        .iter()
        .map(|p| p.weight * p.weight * p.raw.iter().map(|v| v * v).sum::<f64>())
        .sum())
}

/// Half-sample symmetric padding by `pad` pixels on every side.
pub fn reflect_pad(f: &Array2<f64>, pad: usize) -> Array2<f64> {
    let (h, w) = f.dim();
    Array2::from_shape_fn((h + 2 * pad, w + 2 * pad), |(y, x)| {
        let yy = sua_structex::filter::reflect(y as isize - pad as isize, h);
        let xx = sua_structex::filter::reflect(x as isize - pad as isize, w);
        f[[yy, xx]]
    })
}

pub fn crop(f: &Array2<f64>, pad: usize, h: usize, w: usize) -> Array2<f64> {
    f.slice(ndarray::s![pad..pad + h, pad..pad + w]).to_owned()
}

/// Central differences `(dI/dx, dI/dy)`; one-sided at the borders.
pub fn central_gradient(f: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (h, w) = f.dim();
    let gx = Array2::from_shape_fn((h, w), |(y, x)| match (x, w) {
        (_, 1) => 0.0,
        (0, _) => f[[y, 1]] - f[[y, 0]],
        (x, w) if x + 1 == w => f[[y, x]] - f[[y, x - 1]],
        (x, _) => 0.5 * (f[[y, x + 1]] - f[[y, x - 1]]),
    });
    let gy = Array2::from_shape_fn((h, w), |(y, x)| match (y, h) {
        (_, 1) => 0.0,
        (0, _) => f[[1, x]] - f[[0, x]],
        (y, h) if y + 1 == h => f[[y, x]] - f[[y - 1, x]],
        (y, _) => 0.5 * (f[[y + 1, x]] - f[[y - 1, x]]),
    });
    (gx, gy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_is_negative_transpose_of_forward() {
        let n = 6;
        // Build F and B as matrices by probing unit vectors.
        for axis in [Axis2::X, Axis2::Y] {
            let probe = |op: &dyn Fn(&Array2<f64>) -> Array2<f64>, j: usize| {
                let mut e = match axis {
                    Axis2::X => Array2::zeros((1, n)),
                    Axis2::Y => Array2::zeros((n, 1)),
                };
                e.as_slice_mut().unwrap()[j] = 1.0;
                op(&e).iter().copied().collect::<Vec<f64>>()
            };
            let f_cols: Vec<Vec<f64>> = (0..n).map(|j| probe(&|a| forward(a, axis), j)).collect();
            let b_cols: Vec<Vec<f64>> = (0..n).map(|j| probe(&|a| backward(a, axis), j)).collect();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(b_cols[j][i], -f_cols[i][j]);
                }
            }
        }
    }

    #[test]
    fn multinomial_coefficients() {
        assert_eq!(multinomial(3, 0), 1.0);
        assert_eq!(multinomial(3, 1), 3.0);
        assert_eq!(multinomial(4, 2), 6.0);
    }

    #[test]
    fn order_zero_is_rejected() {
        assert!(nth_gradient(&Array2::zeros((4, 4)), 0).is_err());
        assert!(nth_gradient(&Array2::zeros((3, 8)), 3).is_err());
    }
}
