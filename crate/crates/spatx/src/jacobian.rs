//! Jacobian determinant of `Id + d`.

use ndarray::Array2;
use sua_core::{Image, VectorField};

fn diff_x(a: &Array2<f32>, y: usize, x: usize) -> f64 {
    let w = a.ncols();
    if w < 2 {
        return 0.0;
    }
    let at = |c: usize| f64::from(a[[y, c]]);
    match x {
        0 => at(1) - at(0),
        x if x + 1 == w => at(x) - at(x - 1),
        x => 0.5 * (at(x + 1) - at(x - 1)),
    }
}

fn diff_y(a: &Array2<f32>, y: usize, x: usize) -> f64 {
    let h = a.nrows();
    if h < 2 {
        return 0.0;
    }
    let at = |r: usize| f64::from(a[[r, x]]);
    match y {
        0 => at(1) - at(0),
        y if y + 1 == h => at(y) - at(y - 1),
        y => 0.5 * (at(y + 1) - at(y - 1)),
    }
}

/// Central differences inside, one-sided on the border rows and columns.
pub fn jacobian_determinant(field: &VectorField) -> Image {
    let (h, w) = field.dims();
    Image::from_fn(h, w, |y, x| {
        let a = 1.0 + diff_x(&field.dx, y, x);
        let b = diff_y(&field.dx, y, x);
        let c = diff_x(&field.dy, y, x);
        let d = 1.0 + diff_y(&field.dy, y, x);
        a * d - b * c
    })
}

/// Fraction of pixels at least `margin` from the border with determinant > 0.
pub fn positive_fraction(det: &Image, margin: usize) -> f64 {
    let (h, w) = det.dims();
    let mut pos = 0usize;
    let mut total = 0usize;
    for y in margin..h.saturating_sub(margin) {
        for x in margin..w.saturating_sub(margin) {
            total += 1;
            if det.get(y, x) > 0.0 {
                pos += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        pos as f64 / total as f64
    }
}
