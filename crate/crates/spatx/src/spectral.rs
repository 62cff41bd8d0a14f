//! 2D DCT-II / DCT-III pair. The DCT-II basis diagonalizes the Neumann
//! Laplacian `L = F^T F` along each axis with eigenvalues
//! `4 sin^2(pi k / (2 N))`.

use std::sync::Arc;

use ndarray::Array2;
use rustdct::{Dct2, Dct3, DctPlanner};

pub struct Dct2d {
    h: usize,
    w: usize,
    row2: Arc<dyn Dct2<f64>>,
    row3: Arc<dyn Dct3<f64>>,
    col2: Arc<dyn Dct2<f64>>,
    col3: Arc<dyn Dct3<f64>>,
    scratch_len: usize,
}

impl Dct2d {
    pub fn new(h: usize, w: usize) -> Self {
        let mut planner = DctPlanner::new();
        let (row2, row3) = (planner.plan_dct2(w), planner.plan_dct3(w));
        let (col2, col3) = (planner.plan_dct2(h), planner.plan_dct3(h));
        let scratch_len = [
            row2.get_scratch_len(),
            row3.get_scratch_len(),
            col2.get_scratch_len(),
            col3.get_scratch_len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        Self {
            h,
            w,
            row2,
            row3,
            col2,
            col3,
            scratch_len,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, a: &mut Array2<f64>) {
        self.apply(a, true);
    }

    /// Exact inverse of [`Dct2d::forward`].
    pub fn inverse(&self, a: &mut Array2<f64>) {
        self.apply(a, false);
        let scale = 4.0 / (self.h * self.w) as f64;
        a.mapv_inplace(|v| v * scale);
    }

    fn apply(&self, a: &mut Array2<f64>, forward: bool) {
        assert_eq!(a.dim(), (self.h, self.w), "DCT plan size mismatch");
        let (h, w) = (self.h, self.w);
        let mut scratch = vec![0.0; self.scratch_len];
        let data = a.as_slice_mut().expect("standard layout");
        for row in data.chunks_exact_mut(w) {
            if forward {
                self.row2.process_dct2_with_scratch(row, &mut scratch);
            } else {
                self.row3.process_dct3_with_scratch(row, &mut scratch);
            }
        }
        let mut t = vec![0.0; h * w];
        transpose(data, &mut t, h, w);
        for col in t.chunks_exact_mut(h) {
            if forward {
                self.col2.process_dct2_with_scratch(col, &mut scratch);
            } else {
                self.col3.process_dct3_with_scratch(col, &mut scratch);
            }
        }
        transpose(&t, data, w, h);
    }
}

/// Row-major `rows x cols` into row-major `cols x rows`.
fn transpose(src: &[f64], dst: &mut [f64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Eigenvalues of `L_x + L_y` on an `h x w` grid in DCT order.
pub fn laplacian_eigenvalues(h: usize, w: usize) -> Array2<f64> {
    let axis = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                4.0 * s * s
            })
            .collect()
    };
    let (ey, ex) = (axis(h), axis(w));
    Array2::from_shape_fn((h, w), |(y, x)| ey[y] + ex[x])
}
