//! Bilinear resampling with border clamping.

use ndarray::Array2;
use sua_core::{ensure_same_dims, Image, Result, SegMask, VectorField};
use sua_structex::{transition_edges, EdgeSketch};

/// Bilinear sample at `(y, x)`; coordinates are clamped to the grid.
#[inline]
pub fn sample<T: Copy + Into<f64>>(a: &Array2<T>, y: f64, x: f64) -> f64 {
    let (h, w) = a.dim();
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let y0 = (y.floor() as usize).min(h - 1);
    let x0 = (x.floor() as usize).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let at = |r: usize, c: usize| -> f64 { a[[r, c]].into() };
    let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
    let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Samples a displacement field at a sub-pixel position.
#[inline]
pub fn sample_field(field: &VectorField, y: f64, x: f64) -> (f64, f64) {
    (sample(&field.dx, y, x), sample(&field.dy, y, x))
}

/// Resamples any grid through a displacement field, `out(p) = a(p + d(p))`.
pub fn warp_array<T: Copy + Into<f64>>(a: &Array2<T>, field: &VectorField) -> Result<Array2<f64>> {
    ensure_same_dims("warp", a.dim(), field.dims())?;
    Ok(Array2::from_shape_fn(a.dim(), |(y, x)| {
        let (dx, dy) = field.at(y, x);
        sample(a, y as f64 + f64::from(dy), x as f64 + f64::from(dx))
    }))
}

pub fn warp(img: &Image, field: &VectorField) -> Result<Image> {
    Ok(Image::from_f64(&warp_array(img.array(), field)?))
}

/// Warps every class indicator and takes the per-pixel argmax (lowest label
/// on ties).
pub fn warp_mask(mask: &SegMask, field: &VectorField) -> Result<SegMask> {
    ensure_same_dims("warp mask", mask.dims(), field.dims())?;
    let (h, w) = mask.dims();
    let mut best = Array2::<f64>::from_elem((h, w), f64::NEG_INFINITY);
    let mut labels = Array2::<u16>::zeros((h, w));
    for class in 0..mask.classes() {
        let class = class as u16;
        if mask.count(class) == 0 {
            continue;
        }
        let ind = mask.labels().mapv(|l| if l == class { 1.0f64 } else { 0.0 });
        let warped = warp_array(&ind, field)?;
        ndarray::Zip::from(&mut best)
            .and(&mut labels)
            .and(&warped)
            .for_each(|b, l, &v| {
                if v > *b {
                    *b = v;
                    *l = class;
                }
            });
    }
    SegMask::new(labels, mask.classes())
}

/// Binary variant of [`warp_mask`]: foreground where the warped indicator
/// exceeds one half.
pub fn warp_binary(mask: &Array2<bool>, field: &VectorField) -> Result<Array2<bool>> {
    let ind = mask.mapv(|b| if b { 1.0f64 } else { 0.0 });
    Ok(warp_array(&ind, field)?.mapv(|v| v > 0.5))
}

/// Warps a binary mask and re-extracts its transition edges.
pub fn warp_mask_to_edges(mask: &Array2<bool>, field: &VectorField) -> Result<EdgeSketch> {
    Ok(transition_edges(&warp_binary(mask, field)?))
}
