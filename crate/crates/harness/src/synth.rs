//! Seeded two-domain benchmark: canonical shapes in the target domain,
//! smoothly warped and intensity-remapped copies in the source domain.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sua_core::{rng, Dataset, DomainRole, Error, Image, Result, Sample, SegMask, ShapeFamily, SynthSpec, VectorField};
use sua_spatx::{jacobian_determinant, positive_fraction};

/// Ground truth behind a generated benchmark.
#[derive(Debug, Clone)]
pub struct SynthOracle {
    /// Per source image `i`: `source_i(p) = canonical_i(p + warp_i(p))`.
    pub warps: Vec<VectorField>,
    pub intensity_map: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub source: Dataset,
    pub target: Dataset,
    pub oracle: SynthOracle,
}

/// Piecewise-linear lookup through monotone knots; inputs are clamped to
/// the knot range.
pub fn apply_intensity_map(knots: &[[f64; 2]], v: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    let v = v.clamp(first[0], last[0]);
    for w in knots.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        if v <= x1 {
            return y0 + (v - x0) / (x1 - x0) * (y1 - y0);
        }
    }
    last[1]
}

/// Analytic label field of one canonical image.
#[derive(Debug, Clone)]
enum Shape {
    Ellipse {
        cy: f64,
        cx: f64,
        a: f64,
        b: f64,
        angle: f64,
    },
    Bands {
        top: f64,
        thickness: f64,
        amp: f64,
        freq: f64,
        phase: f64,
    },
}

impl Shape {
    fn random(family: ShapeFamily, n: f64, r: &mut impl Rng) -> Self {
        match family {
            ShapeFamily::Ellipse => Shape::Ellipse {
                cy: r.random_range(0.38..0.62) * n,
                cx: r.random_range(0.38..0.62) * n,
                a: r.random_range(0.16..0.28) * n,
                b: r.random_range(0.12..0.22) * n,
                angle: r.random_range(0.0..PI),
            },
            ShapeFamily::Bands => Shape::Bands {
                top: r.random_range(0.25..0.4) * n,
                thickness: r.random_range(0.15..0.25) * n,
                amp: r.random_range(0.02..0.06) * n,
                freq: r.random_range(0.5..1.5),
                phase: r.random_range(0.0..2.0 * PI),
            },
        }
    }

    fn classes(&self) -> usize {
        match self {
            Shape::Ellipse { .. } => 2,
            Shape::Bands { .. } => 3,
        }
    }

    fn label(&self, y: f64, x: f64, n: f64) -> u16 {
        match *self {
            Shape::Ellipse { cy, cx, a, b, angle } => {
                let (dy, dx) = (y - cy, x - cx);
                let (s, c) = angle.sin_cos();
                let u = (dx * c + dy * s) / a;
                let v = (-dx * s + dy * c) / b;
                u16::from(u * u + v * v <= 1.0)
            }
            Shape::Bands {
                top,
                thickness,
                amp,
                freq,
                phase,
            } => {
                let b1 = top + amp * (2.0 * PI * freq * x / n + phase).sin();
                let b2 = b1 + thickness;
                if y < b1 {
                    0
                } else if y < b2 {
                    1
                } else {
                    2
                }
            }
        }
    }
}

fn level(spec: &SynthSpec, label: u16, classes: usize) -> f64 {
    let t = f64::from(label) / (classes - 1) as f64;
    spec.background_level + t * (spec.foreground_level - spec.background_level)
}

/// Low-frequency illumination shared by both copies of an image.
fn shading(spec: &SynthSpec, r: &mut impl Rng, n: usize) -> Array2<f64> {
    let (p1, p2) = (r.random_range(0.0..2.0 * PI), r.random_range(0.0..2.0 * PI));
    let k = PI / n as f64;
    Array2::from_shape_fn((n, n), |(y, x)| {
        spec.shading * (k * y as f64 + p1).sin() * (k * x as f64 + p2).cos()
    })
}

/// Smooth sinusoidal displacement with peak norm `amp`.
pub fn sinusoidal_warp(r: &mut impl Rng, n: usize, amp: f64) -> VectorField {
    if amp == 0.0 {
        return VectorField::zeros(n, n);
    }
    let p: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..2.0 * PI));
    let k = 2.0 * PI / n as f64;
    let raw = VectorField::from_fn(n, n, |y, x| {
        let (x, y) = (x as f64, y as f64);
        ((k * y + p[0]).sin() * (k * x + p[1]).cos(), (k * x + p[2]).sin() * (k * y + p[3]).cos())
    });
    raw.scaled(amp / raw.max_norm())
}

/// Generates both domains. Image `i` of each domain shares its canonical
/// shape and shading; the source copy is warped, remapped and noised.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let n = spec.size;
    let nf = n as f64;
    let count = spec.source_count.max(spec.target_count);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Parameter(format!("noise: {e}")))?;

    let mut source = Vec::with_capacity(spec.source_count);
    let mut target = Vec::with_capacity(spec.target_count);
    let mut warps = Vec::with_capacity(spec.source_count);
    for i in 0..count {
        let mut r = rng::item_stream(spec.seed, "synth-shape", i);
        let shape = Shape::random(spec.shape, nf, &mut r);
        let classes = shape.classes();
        let shade = shading(spec, &mut r, n);

        if i < spec.target_count {
            let labels = Array2::from_shape_fn((n, n), |(y, x)| shape.label(y as f64, x as f64, nf));
            let img = Array2::from_shape_fn((n, n), |(y, x)| {
                (level(spec, labels[[y, x]], classes) + shade[[y, x]]).clamp(0.0, 1.0)
            });
            target.push(Sample {
                image: Image::from_f64(&img),
                mask: Some(SegMask::new(labels, classes)?),
            });
        }
        if i < spec.source_count {
            let mut wr = rng::item_stream(spec.seed, "synth-warp", i);
            let warp = sinusoidal_warp(&mut wr, n, spec.warp_amplitude);
            if positive_fraction(&jacobian_determinant(&warp), 0) < 1.0 {
                return Err(Error::Parameter(format!(
                    "warp amplitude {} folds image {i}",
                    spec.warp_amplitude
                )));
            }
            let labels = Array2::from_shape_fn((n, n), |(y, x)| {
                let (dx, dy) = warp.at(y, x);
                shape.label(y as f64 + f64::from(dy), x as f64 + f64::from(dx), nf)
            });
            let mut nr = rng::item_stream(spec.seed, "synth-noise", i);
            let img = Array2::from_shape_fn((n, n), |(y, x)| {
                let clean = (level(spec, labels[[y, x]], classes) + shade[[y, x]]).clamp(0.0, 1.0);
                (apply_intensity_map(&spec.intensity_map, clean) + noise.sample(&mut nr)).clamp(0.0, 1.0)
            });
            source.push(Sample {
                image: Image::from_f64(&img),
                mask: Some(SegMask::new(labels, classes)?),
            });
            warps.push(warp);
        }
    }
    Ok(SynthData {
        source: Dataset::new(source, DomainRole::Source)?,
        target: Dataset::new(target, DomainRole::Target)?,
        oracle: SynthOracle {
            warps,
            intensity_map: spec.intensity_map.clone(),
        },
    })
}
