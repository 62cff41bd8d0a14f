use std::f64::consts::PI;

use ndarray::Array2;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sua_core::{Image, SegMask, VectorField};
use sua_spatx::diffeo::{compose, endpoint_stats};
use sua_spatx::{
    integrate, integrate_with_cap, inverse_consistency, jacobian_determinant, positive_fraction, warp,
    warp_mask, warp_mask_to_edges, DiffeoPair,
};

const MARGIN: usize = 4;

/// Sum of a few random low-frequency sinusoids with peak magnitude `amp`.
fn smooth_field(rng: &mut StdRng, h: usize, w: usize, amp: f64) -> VectorField {
    let terms: Vec<[f64; 6]> = (0..3)
        .map(|_| {
            [
                rng.random_range(0.5..2.0),
                rng.random_range(0.5..2.0),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    let raw = VectorField::from_fn(h, w, |y, x| {
        let (mut dx, mut dy) = (0.0, 0.0);
        for t in &terms {
            let s = (2.0 * PI * t[0] * x as f64 / w as f64 + t[2]).sin()
                * (2.0 * PI * t[1] * y as f64 / h as f64 + t[3]).cos();
            dx += t[4] * s;
            dy += t[5] * s;
        }
        (dx, dy)
    });
    raw.scaled(amp / raw.max_norm())
}

fn random_velocities(seed: u64, h: usize, w: usize) -> Vec<VectorField> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(4..12);
    (0..n)
        .map(|_| {
            let amp = rng.random_range(0.5..3.0);
            smooth_field(&mut rng, h, w, amp)
        })
        .collect()
}

#[test]
fn zero_velocities_integrate_to_exact_identity() {
    let pair = integrate(&vec![VectorField::zeros(16, 16); 5]).unwrap();
    assert!(pair.forward.is_identity());
    assert!(pair.inverse.is_identity());
    assert_eq!(pair.steps, 5);
    assert!(pair.rescale.iter().all(|&r| r == 1.0));
}

#[test]
fn empty_velocity_list_is_rejected() {
    assert!(integrate(&[]).is_err());
}

#[test]
fn constant_velocity_composes_additively() {
    let n = 8;
    let v = VectorField::from_fn(16, 16, |_, _| (1.2, -0.8));
    let pair = integrate(&vec![v; n]).unwrap();
    // Sequential oracle: each factor adds v / N.
    let (mut ex, mut ey) = (0.0f64, 0.0f64);
    for _ in 0..n {
        ex += 1.2 / n as f64;
        ey += -0.8 / n as f64;
    }
    for ((&a, &b), (&c, &d)) in pair
        .forward
        .dx
        .iter()
        .zip(pair.forward.dy.iter())
        .zip(pair.inverse.dx.iter().zip(pair.inverse.dy.iter()))
    {
        // Border clamping does not matter for a constant field.
        assert!((f64::from(a) - ex).abs() < 1e-5);
        assert!((f64::from(b) - ey).abs() < 1e-5);
        assert!((f64::from(c) + ex).abs() < 1e-5);
        assert!((f64::from(d) + ey).abs() < 1e-5);
    }
}

#[test]
fn oversized_steps_are_rescaled_and_recorded() {
    let v = VectorField::from_fn(12, 12, |_, _| (2.0, 0.0));
    let pair = integrate(&[v]).unwrap();
    assert!((pair.rescale[0] - 0.2).abs() < 1e-12);
    assert!((pair.velocities[0].max_norm() - 0.4).abs() < 1e-6);
    assert!(integrate_with_cap(&[VectorField::zeros(4, 4)], 0.0).is_err());
}

#[test]
fn random_smooth_pairs_are_inverse_consistent_and_folding_free() {
    for seed in 0..32 {
        let pair = integrate(&random_velocities(seed, 64, 64)).unwrap();
        let ic = inverse_consistency(&pair, MARGIN).unwrap();
        assert!(ic.mean < 0.5 && ic.max < 1.5, "seed {seed}: {ic:?}");
        for field in [&pair.forward, &pair.inverse] {
            let frac = positive_fraction(&jacobian_determinant(field), MARGIN);
            assert!(frac >= 0.995, "seed {seed}: {frac}");
        }
    }
}

#[test]
fn identity_warp_is_exact() {
    let img = Image::from_fn(9, 7, |y, x| ((3 * x + 5 * y) % 10) as f64 / 9.0);
    assert_eq!(warp(&img, &VectorField::zeros(9, 7)).unwrap(), img);
}

#[test]
fn unit_translation_shifts_and_clamps() {
    let img = Image::from_fn(5, 6, |y, x| (y * 6 + x) as f64 / 29.0);
    let out = warp(&img, &VectorField::from_fn(5, 6, |_, _| (1.0, 0.0))).unwrap();
    for y in 0..5 {
        for x in 0..5 {
            assert_eq!(out.get(y, x), img.get(y, x + 1));
        }
        assert_eq!(out.get(y, 5), img.get(y, 5));
    }
}

#[test]
fn half_pixel_shift_on_ramp() {
    let step = 0.05;
    let img = Image::from_fn(6, 10, |_, x| 0.1 + step * x as f64);
    let out = warp(&img, &VectorField::from_fn(6, 10, |_, _| (0.5, 0.0))).unwrap();
    for y in 0..6 {
        for x in 0..9 {
            let expect = f64::from(img.get(y, x)) + 0.5 * step;
            assert!((f64::from(out.get(y, x)) - expect).abs() < 1e-6);
        }
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let f = VectorField::zeros(4, 4);
    assert!(warp(&Image::zeros(4, 5), &f).is_err());
    assert!(warp_mask(&SegMask::zeros(5, 4, 2), &f).is_err());
    assert!(warp_mask_to_edges(&Array2::from_elem((3, 4), false), &f).is_err());
}

#[test]
fn mask_warp_identity_and_translation() {
    let labels = Array2::from_shape_fn((8, 8), |(y, x)| ((x / 3 + y / 4) % 3) as u16);
    let mask = SegMask::new(labels, 3).unwrap();
    assert_eq!(warp_mask(&mask, &VectorField::zeros(8, 8)).unwrap(), mask);
    let moved = warp_mask(&mask, &VectorField::from_fn(8, 8, |_, _| (0.0, 2.0))).unwrap();
    for y in 0..6 {
        for x in 0..8 {
            assert_eq!(moved.get(y, x), mask.get(y + 2, x));
        }
    }
}

fn disk(h: usize, w: usize, cy: f64, cx: f64, r: f64) -> Array2<bool> {
    Array2::from_shape_fn((h, w), |(y, x)| (y as f64 - cy).hypot(x as f64 - cx) <= r)
}

#[test]
fn mask_round_trip_through_pair_recovers_labels() {
    for seed in 0..32 {
        let pair = integrate(&random_velocities(seed, 64, 64)).unwrap();
        let labels = Array2::from_shape_fn((64, 64), |(y, x)| {
            let r = (y as f64 - 30.0).hypot(x as f64 - 34.0);
            if r < 10.0 {
                2
            } else if r < 20.0 {
                1
            } else {
                0
            }
        });
        let mask = SegMask::new(labels, 3).unwrap();
        let back = warp_mask(&warp_mask(&mask, &pair.forward).unwrap(), &pair.inverse).unwrap();
        let (mut same, mut total) = (0, 0);
        for y in MARGIN..64 - MARGIN {
            for x in MARGIN..64 - MARGIN {
                total += 1;
                same += usize::from(back.get(y, x) == mask.get(y, x));
            }
        }
        let frac = same as f64 / total as f64;
        assert!(frac >= 0.98, "seed {seed}: {frac}");
    }
}

#[test]
fn half_plane_edges_and_translation() {
    let mask = Array2::from_shape_fn((10, 10), |(_, x)| x >= 5);
    let edges = warp_mask_to_edges(&mask, &VectorField::zeros(10, 10)).unwrap();
    for y in 0..10 {
        for x in 0..10 {
            assert_eq!(edges.edges[[y, x]], x == 4);
        }
    }
    let shifted = warp_mask_to_edges(&mask, &VectorField::from_fn(10, 10, |_, _| (-2.0, 0.0))).unwrap();
    for y in 0..10 {
        for x in 0..10 {
            assert_eq!(shifted.edges[[y, x]], x == 6);
        }
    }
}

#[test]
fn warped_disk_boundary_is_closed() {
    for seed in 0..16 {
        let mut rng = StdRng::seed_from_u64(100 + seed);
        let field = smooth_field(&mut rng, 64, 64, 3.0);
        let edges = warp_mask_to_edges(&disk(64, 64, 32.0, 31.0, 14.0), &field).unwrap().edges;
        assert!(edges.iter().any(|&e| e));
        for y in 0..64 {
            for x in 0..64 {
                if !edges[[y, x]] {
                    continue;
                }
                let mut neighbours = 0;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                        if (dy, dx) != (0, 0)
                            && (0..64).contains(&ny)
                            && (0..64).contains(&nx)
                            && edges[[ny as usize, nx as usize]]
                        {
                            neighbours += 1;
                        }
                    }
                }
                assert!(neighbours >= 2, "seed {seed}: open boundary at ({y}, {x})");
            }
        }
    }
}

#[test]
fn jacobian_of_identity_and_scaling() {
    let det = jacobian_determinant(&VectorField::zeros(6, 6));
    assert!(det.values().all(|v| v == 1.0));
    let s = 1.3;
    let scale = VectorField::from_fn(8, 8, |y, x| ((s - 1.0) * x as f64, (s - 1.0) * y as f64));
    let det = jacobian_determinant(&scale);
    assert!(det.values().all(|v| (f64::from(v) - s * s).abs() < 1e-5));
}

#[test]
fn compose_with_identity_is_neutral() {
    let mut rng = StdRng::seed_from_u64(5);
    let f = smooth_field(&mut rng, 16, 16, 2.0);
    let id = VectorField::zeros(16, 16);
    assert_eq!(compose(&f, &id).unwrap(), f);
    assert_eq!(compose(&id, &f).unwrap(), f);
    assert_eq!(endpoint_stats(&id, 0).max, 0.0);
}

#[test]
fn pair_persists_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let pair = integrate(&random_velocities(3, 16, 16)).unwrap();
    let paths = ["phi.suat", "phi_inv.suat", "phi.json"].map(|p| dir.path().join(p));
    pair.save(&paths[0], &paths[1], &paths[2], Some(&Default::default())).unwrap();
    let (back, meta) = DiffeoPair::load(&paths[0], &paths[1], &paths[2]).unwrap();
    assert_eq!(back.forward, pair.forward);
    assert_eq!(back.inverse, pair.inverse);
    assert_eq!(meta.steps, pair.steps);
    assert_eq!(meta.rescale, pair.rescale);
    assert!(meta.config.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn warp_is_linear_in_the_image(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let x = Image::from_fn(12, 12, |_, _| rng.random());
        let y = Image::from_fn(12, 12, |_, _| rng.random());
        let field = smooth_field(&mut rng, 12, 12, 3.0);
        let combo = Image::from_fn(12, 12, |r, c| a * f64::from(x.get(r, c)) + b * f64::from(y.get(r, c)));
        let lhs = warp(&combo, &field).unwrap();
        let (wx, wy) = (warp(&x, &field).unwrap(), warp(&y, &field).unwrap());
        for r in 0..12 {
            for c in 0..12 {
                let rhs = a * f64::from(wx.get(r, c)) + b * f64::from(wy.get(r, c));
                prop_assert!((f64::from(lhs.get(r, c)) - rhs).abs() < 1e-5);
            }
        }
    }
}
