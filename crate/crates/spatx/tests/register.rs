use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sua_core::{AdmmConfig, Image, VectorField};
use sua_spatx::diffeo::endpoint_error;
use sua_spatx::register::{downsample, upsample_field, velocities_from_steps};
use sua_spatx::{register, register_detailed, warp};
use sua_structex::ssim;

const MARGIN: usize = 4;

/// Random texture: a sum of small Gaussian blobs.
fn blobs(rng: &mut StdRng, n: usize) -> Image {
    let params: Vec<[f64; 4]> = (0..80)
        .map(|_| {
            [
                rng.random_range(0.0..n as f64),
                rng.random_range(0.0..n as f64),
                rng.random_range(2.0..4.0),
                rng.random_range(-0.5..0.5),
            ]
        })
        .collect();
    Image::from_fn(n, n, |y, x| {
        let v: f64 = params
            .iter()
            .map(|p| p[3] * (-((y as f64 - p[0]).powi(2) + (x as f64 - p[1]).powi(2)) / (2.0 * p[2] * p[2])).exp())
            .sum();
        (0.5 + v).clamp(0.0, 1.0)
    })
}

/// Sinusoidal warp with peak displacement `amp`.
fn sinusoidal(rng: &mut StdRng, n: usize, amp: f64) -> VectorField {
    let (p1, p2, p3, p4) = (
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    );
    let k = 2.0 * PI / n as f64;
    let raw = VectorField::from_fn(n, n, |y, x| {
        let (x, y) = (x as f64, y as f64);
        ((k * y + p1).sin() * (k * x + p2).cos(), (k * x + p3).sin() * (k * y + p4).cos())
    });
    raw.scaled(amp / raw.max_norm())
}

#[test]
fn identical_images_register_to_identity() {
    let mut rng = StdRng::seed_from_u64(1);
    let img = blobs(&mut rng, 32);
    let pair = register(&img, &img, &AdmmConfig::default()).unwrap();
    assert!(pair.forward.max_norm() <= 0.1);
    assert!(pair.inverse.max_norm() <= 0.1);
}

#[test]
fn mismatched_dims_are_rejected() {
    assert!(register(&Image::zeros(16, 16), &Image::zeros(16, 17), &AdmmConfig::default()).is_err());
}

#[test]
fn known_sinusoidal_warps_are_recovered() {
    let cfg = AdmmConfig::default();
    let mut total = 0.0;
    for seed in 0..4 {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = blobs(&mut rng, 64);
        let truth = sinusoidal(&mut rng, 64, 3.0);
        let tgt = warp(&src, &truth).unwrap();
        let reg = register_detailed(&src, &tgt, &cfg).unwrap();
        let epe = endpoint_error(&reg.pair.forward, &truth, MARGIN).unwrap();
        eprintln!(
            "seed {seed}: epe {:.3} steps {} ssim {:.4} -> {:.4} levels {:?}",
            epe.mean, reg.pair.steps, reg.ssim_before, reg.ssim_after, reg.levels
        );
        total += epe.mean;
    }
    assert!(total / 4.0 < 1.0, "mean endpoint error {}", total / 4.0);
}

#[test]
fn accepted_registrations_never_lower_ssim() {
    let cfg = AdmmConfig::default();
    for seed in 0..8 {
        let mut rng = StdRng::seed_from_u64(50 + seed);
        let src = blobs(&mut rng, 32);
        let tgt = blobs(&mut rng, 32);
        let reg = register_detailed(&src, &tgt, &cfg).unwrap();
        let after = ssim(&warp(&src, &reg.pair.forward).unwrap(), &tgt).unwrap();
        assert!(after >= ssim(&src, &tgt).unwrap() - 1e-12, "seed {seed}");
        assert!(reg.ssim_trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(reg.energy_trace.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn pyramid_helpers() {
    let a = ndarray::Array2::from_shape_fn((4, 6), |(y, x)| (y * 6 + x) as f64);
    let d = downsample(&a, 2);
    assert_eq!(d.dim(), (2, 3));
    assert_eq!(d[[0, 0]], (0.0 + 1.0 + 6.0 + 7.0) / 4.0);
    let c = VectorField::from_fn(4, 4, |_, _| (0.5, -0.25));
    let up = upsample_field(&c, 2, 8, 8);
    assert!(up.dx.iter().all(|&v| v == 1.0));
    assert!(up.dy.iter().all(|&v| v == -0.5));
    let steps = vec![VectorField::from_fn(2, 2, |_, _| (1.0, 0.0)), VectorField::from_fn(2, 2, |_, _| (0.0, 1.0))];
    let v = velocities_from_steps(&steps);
    assert_eq!(v[0].at(0, 0), (0.0, 2.0));
    assert_eq!(v[1].at(0, 0), (2.0, 0.0));
}
