//! Small raster diagnostics written as PNG.

use std::path::Path;

use image::{Rgb, RgbImage};
use sua_core::{Error, Result, VectorField};
use sua_metrics::Histogram;
use sua_spatx::jacobian_determinant;

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);

fn save(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })
}

fn line(img: &mut RgbImage, (x0, y0): (f64, f64), (x1, y1): (f64, f64), color: Rgb<u8>) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

/// Overlaid histogram curves, each scaled to the common peak.
pub fn histogram_overlay(curves: &[(&Histogram, Rgb<u8>)], path: &Path) -> Result<()> {
    let (w, h) = (512u32, 256u32);
    let mut img = RgbImage::from_pixel(w, h, WHITE);
    let peak = curves
        .iter()
        .flat_map(|(c, _)| c.masses().iter().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for (hist, color) in curves {
        let m = hist.masses();
        let x_of = |i: usize| (i as f64 + 0.5) / m.len() as f64 * f64::from(w - 1);
        let y_of = |v: f64| f64::from(h - 1) * (1.0 - v / peak);
        for i in 1..m.len() {
            line(&mut img, (x_of(i - 1), y_of(m[i - 1])), (x_of(i), y_of(m[i])), *color);
        }
    }
    save(&img, path)
}

/// Regular grid pushed through `p -> p + field(p)`, magnified by `scale`.
pub fn deformation_grid(field: &VectorField, spacing: usize, scale: u32, path: &Path) -> Result<()> {
    let (h, w) = field.dims();
    let mut img = RgbImage::from_pixel(w as u32 * scale, h as u32 * scale, WHITE);
    let s = f64::from(scale);
    let at = |y: usize, x: usize| {
        let (dx, dy) = field.at(y, x);
        ((x as f64 + f64::from(dx) + 0.5) * s, (y as f64 + f64::from(dy) + 0.5) * s)
    };
    let ink = Rgb([20, 40, 160]);
    for y in (0..h).step_by(spacing.max(1)) {
        for x in 1..w {
            line(&mut img, at(y, x - 1), at(y, x), ink);
        }
    }
    for x in (0..w).step_by(spacing.max(1)) {
        for y in 1..h {
            line(&mut img, at(y - 1, x), at(y, x), ink);
        }
    }
    save(&img, path)
}

/// Jacobian determinant: blue below one, red above, black where folded.
pub fn jacobian_heatmap(field: &VectorField, scale: u32, path: &Path) -> Result<()> {
    let det = jacobian_determinant(field);
    let (h, w) = det.dims();
    let mut img = RgbImage::new(w as u32 * scale, h as u32 * scale);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let d = f64::from(det.get((y / scale) as usize, (x / scale) as usize));
        *px = if d <= 0.0 {
            Rgb([0, 0, 0])
        } else {
            let t = ((d - 1.0) * 2.0).clamp(-1.0, 1.0);
            let fade = |v: f64| (255.0 * (1.0 - v.abs())) as u8;
            if t >= 0.0 {
                Rgb([255, fade(t), fade(t)])
            } else {
                Rgb([fade(t), fade(t), 255])
            }
        };
    }
    save(&img, path)
}
