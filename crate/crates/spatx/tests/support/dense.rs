// Dense reference for the velocity model: assembles the normal equations
// from explicit difference matrices and solves them with a Cholesky
// factorization.

use nalgebra::{DMatrix, DVector};

/// Forward difference matrix with a zero last row.
pub fn forward_matrix(n: usize) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        f[(i, i)] = -1.0;
        f[(i, i + 1)] = 1.0;
    }
    f
}

/// Order-k one-axis derivative matrix built as F, (-F^T) F, F (-F^T) F, ...
pub fn derivative_matrix(n: usize, k: usize) -> DMatrix<f64> {
    let f = forward_matrix(n);
    let b = -f.transpose();
    let mut d = DMatrix::identity(n, n);
    for step in 0..k {
        d = if step % 2 == 0 { &f * d } else { &b * d };
    }
    d
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

/// Sum over all order-n partials of weight^2 D^T D on an h x w grid,
/// row-major pixel order.
pub fn regularizer_matrix(h: usize, w: usize, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(h * w, h * w);
    for kx in 0..=n {
        let ky = n - kx;
        let weight2 = factorial(n) / (factorial(kx) * factorial(ky));
        let dy = derivative_matrix(h, ky);
        let dx = derivative_matrix(w, kx);
        a += kron(&(dy.transpose() * &dy), &(dx.transpose() * &dx)) * weight2;
    }
    a
}

/// Minimizer of 1/2 sum (gx vx + gy vy + r)^2 + lambda/2 (vx^T A vx + vy^T A vy),
/// returned as row-major (vx, vy).
pub fn dense_solve(gx: &[f64], gy: &[f64], r: &[f64], h: usize, w: usize, n: usize, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let m = h * w;
    let a = regularizer_matrix(h, w, n) * lambda;
    let mut sys = DMatrix::zeros(2 * m, 2 * m);
    sys.view_mut((0, 0), (m, m)).copy_from(&a);
    sys.view_mut((m, m), (m, m)).copy_from(&a);
    let mut rhs = DVector::zeros(2 * m);
    for i in 0..m {
        sys[(i, i)] += gx[i] * gx[i];
        sys[(m + i, m + i)] += gy[i] * gy[i];
        sys[(i, m + i)] += gx[i] * gy[i];
        sys[(m + i, i)] += gx[i] * gy[i];
        rhs[i] = -gx[i] * r[i];
        rhs[m + i] = -gy[i] * r[i];
    }
    let sol = sys.cholesky().expect("normal equations not positive definite").solve(&rhs);
    (sol.rows(0, m).iter().copied().collect(), sol.rows(m, m).iter().copied().collect())
}
