mod support;

use ndarray::Array2;
use sua_core::Image;
use sua_render::nn::ParamSet;
use sua_render::{
    discriminator_forward, generator_forward, generator_gradients, losses, render, RendererParams, TermWeights,
};
use support::{rng, sketch, uniform};

fn image(a: &Array2<f64>) -> Image {
    Image::from_f64(a)
}

#[test]
fn zero_weights_and_input_give_half_everywhere() {
    let mut p = RendererParams::new(4, (64, 64), 0.5, 1).unwrap();
    p.g.fill(0.0);
    let out = generator_forward(&p, &Image::zeros(64, 64), false, 0).unwrap();
    assert!(out.values().all(|v| v == 0.5));
}

#[test]
fn generator_output_matches_input_dims() {
    for (h, w) in [(64, 64), (96, 96), (40, 72)] {
        let p = RendererParams::new(16, (h, w), 0.5, 3).unwrap();
        let u = image(&sketch(&mut rng(4), h, w));
        let out = generator_forward(&p, &u, true, 9).unwrap();
        assert_eq!(out.dims(), (h, w));
        assert!(out.values().all(|v| (0.0..=1.0).contains(&v)));
    }
}

#[test]
fn eval_mode_is_deterministic_and_training_mode_uses_dropout() {
    let p = RendererParams::new(4, (32, 32), 0.5, 5).unwrap();
    let u = image(&sketch(&mut rng(6), 32, 32));
    let a = render(&p, &u).unwrap();
    let b = render(&p, &u).unwrap();
    assert_eq!(a, b);
    let t1 = generator_forward(&p, &u, true, 1).unwrap();
    let t1b = generator_forward(&p, &u, true, 1).unwrap();
    let t2 = generator_forward(&p, &u, true, 2).unwrap();
    assert_eq!(t1, t1b);
    assert_ne!(t1, t2);
    assert_ne!(t1, a);
}

#[test]
fn empty_input_is_a_shape_error() {
    let p = RendererParams::new(2, (8, 8), 0.5, 0).unwrap();
    assert!(matches!(
        generator_forward(&p, &Image::zeros(0, 0), false, 0),
        Err(sua_core::Error::Shape(_))
    ));
    assert!(RendererParams::new(2, (0, 8), 0.5, 0).is_err());
    assert!(RendererParams::new(0, (8, 8), 0.5, 0).is_err());
    assert!(RendererParams::new(2, (8, 8), 1.0, 0).is_err());
}

#[test]
fn discriminator_features_halve_per_block() {
    let p = RendererParams::new(4, (64, 64), 0.5, 7).unwrap();
    let mut r = rng(8);
    let out = discriminator_forward(&p, &image(&uniform(&mut r, 64, 64)), &image(&sketch(&mut r, 64, 64))).unwrap();
    assert!(out.score > 0.0 && out.score < 1.0);
    assert_eq!(out.features.len(), 3);
    for (l, f) in out.features.iter().enumerate() {
        assert_eq!(f.dim(), (4 << l, 64 >> (l + 1), 64 >> (l + 1)));
    }
}

#[test]
fn discriminator_rejects_mismatched_inputs() {
    let p = RendererParams::new(2, (32, 32), 0.5, 0).unwrap();
    assert!(discriminator_forward(&p, &Image::zeros(32, 32), &Image::zeros(32, 16)).is_err());
    assert!(discriminator_forward(&p, &Image::zeros(16, 16), &Image::zeros(16, 16)).is_err());
}

#[test]
fn structure_channel_changes_the_score() {
    let p = RendererParams::new(4, (32, 32), 0.5, 11).unwrap();
    let mut r = rng(12);
    let img = image(&uniform(&mut r, 32, 32));
    let a = discriminator_forward(&p, &img, &image(&sketch(&mut r, 32, 32))).unwrap();
    let b = discriminator_forward(&p, &img, &image(&sketch(&mut r, 32, 32))).unwrap();
    assert_ne!(a.score, b.score);
}

#[test]
fn parameter_count_depends_only_on_width_and_size() {
    let count = |w, d, seed| RendererParams::new(w, d, 0.5, seed).unwrap().parameter_count();
    assert_eq!(count(8, (64, 64), 1), count(8, (64, 64), 2));
    assert_ne!(count(8, (64, 64), 1), count(16, (64, 64), 1));
    assert_ne!(count(8, (64, 64), 1), count(8, (128, 128), 1));
    // the generator is fully convolutional
    let g = |w, d| RendererParams::new(w, d, 0.5, 0).unwrap().g.count();
    assert_eq!(g(8, (64, 64)), g(8, (128, 128)));
}

#[test]
fn perfect_reconstruction_zeroes_l1_and_style() {
    let p = RendererParams::new(2, (16, 16), 0.5, 13).unwrap();
    let u = sketch(&mut rng(14), 16, 16);
    let (fake, _) = p.generator.forward(&p.g, &u, None).unwrap();
    let w = TermWeights {
        adversarial: 1.0,
        l1: 1.0,
        style: 100.0,
    };
    let (terms, _) = generator_gradients(&p, &fake, &u, w, None).unwrap();
    assert_eq!(terms.l1, 0.0);
    assert_eq!(terms.style, 0.0);
    assert_eq!(terms.total_g, terms.adv_g);
}

#[test]
fn zero_lambdas_reduce_total_to_adversarial() {
    let p = RendererParams::new(2, (16, 16), 0.5, 15).unwrap();
    let mut r = rng(16);
    let (x, u) = (image(&uniform(&mut r, 16, 16)), image(&sketch(&mut r, 16, 16)));
    let cfg = sua_core::RenderTrainConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        ..Default::default()
    };
    let t = losses(&p, &x, &u, &cfg).unwrap();
    assert_eq!(t.total_g, t.adv_g);
    assert!(t.l1 > 0.0 && t.style > 0.0);
    for v in [t.adv_d, t.adv_g, t.l1, t.style, t.total_g] {
        assert!(v.is_finite());
    }
    assert!(losses(&p, &x, &Image::zeros(16, 8), &cfg).is_err());
}

#[test]
fn saturated_scores_keep_losses_finite() {
    use sua_render::losses::{adversarial_d, adversarial_g};
    let floor = sua_render::LOG_FLOOR.ln();
    assert_eq!(adversarial_d(0.0, 1.0), -2.0 * floor);
    assert_eq!(adversarial_g(1.0), floor);
    assert!(adversarial_d(1.0, 0.0).abs() < 1e-12);
}

#[test]
fn weights_round_trip_through_archive() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("renderer.suaa");
    let p = RendererParams::new(4, (24, 40), 0.25, 17).unwrap();
    p.save(&path).unwrap();
    let q = RendererParams::load(&path).unwrap();
    assert_eq!(q.width(), 4);
    assert_eq!(q.dims(), (24, 40));
    assert_eq!(q.dropout, 0.25);
    let close = |a: &ParamSet, b: &ParamSet| {
        assert_eq!(a.names(), b.names());
        for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
            assert_eq!(x.shape(), y.shape());
            assert!(x.iter().zip(y.iter()).all(|(u, v)| (u - v).abs() <= 1e-7 * u.abs().max(1e-3)));
        }
    };
    close(&p.g, &q.g);
    close(&p.d, &q.d);
    let u = image(&sketch(&mut rng(18), 24, 40));
    let (a, b) = (render(&p, &u).unwrap(), render(&q, &u).unwrap());
    assert!(a.values().zip(b.values()).all(|(x, y)| (x - y).abs() < 1e-5));

    std::fs::write(&path, b"garbage").unwrap();
    assert!(RendererParams::load(&path).is_err());
}
