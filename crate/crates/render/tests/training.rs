mod support;

use std::time::Instant;

use sua_core::{Image, RenderTrainConfig};
use sua_render::{read_loss_log, train_renderer, write_loss_log, TrainingPair};
use support::{rng, sketch, uniform};

fn pairs(n: usize, side: usize, seed: u64) -> Vec<TrainingPair> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let u = sketch(&mut r, side, side);
            // intensity correlated with the sketch so there is something to learn
            let x = uniform(&mut r, side, side) * 0.2 + &u * 0.6 + 0.1;
            TrainingPair {
                image: Image::from_f64(&x),
                structure: Image::from_f64(&u),
            }
        })
        .collect()
}

fn small(epochs: usize) -> RenderTrainConfig {
    RenderTrainConfig {
        epochs,
        decay_start: epochs / 2,
        base_width: 2,
        seed: 4,
        ..Default::default()
    }
}

#[test]
fn loss_log_has_one_row_per_epoch() {
    let trained = train_renderer(&pairs(3, 16, 1), &small(4)).unwrap();
    assert_eq!(trained.log.len(), 4);
    for (i, row) in trained.log.iter().enumerate() {
        assert_eq!(row.epoch, i + 1);
        for v in [row.adv_d, row.adv_g, row.l1, row.style, row.total_g] {
            assert!(v.is_finite());
        }
    }
    assert_eq!(trained.log[3].lr, 0.0);
    assert_eq!(trained.log[1].lr, 2e-4);
}

#[test]
fn schedule_is_constant_then_linear_to_zero() {
    let cfg = RenderTrainConfig::default();
    assert_eq!(cfg.learning_rate_at(100), 2e-4);
    assert!(cfg.learning_rate_at(200) < 2e-6);
    let mut prev = cfg.learning_rate_at(1);
    for e in 2..=200 {
        let lr = cfg.learning_rate_at(e);
        assert!(lr <= prev);
        prev = lr;
    }
}

#[test]
fn training_is_bit_deterministic() {
    let data = pairs(3, 16, 2);
    let a = train_renderer(&data, &small(3)).unwrap();
    let b = train_renderer(&data, &small(3)).unwrap();
    assert_eq!(a.params.g, b.params.g);
    assert_eq!(a.params.d, b.params.d);
    assert_eq!(a.log, b.log);
    let c = train_renderer(&data, &RenderTrainConfig { seed: 5, ..small(3) }).unwrap();
    assert_ne!(a.params.g, c.params.g);
}

#[test]
fn batches_are_accepted() {
    let cfg = RenderTrainConfig {
        batch_size: 2,
        ..small(2)
    };
    let trained = train_renderer(&pairs(3, 16, 3), &cfg).unwrap();
    assert_eq!(trained.log.len(), 2);
}

#[test]
fn empty_or_ragged_datasets_are_rejected() {
    assert!(matches!(train_renderer(&[], &small(1)), Err(sua_core::Error::Parameter(_))));
    let mut data = pairs(2, 16, 4);
    data.extend(pairs(1, 8, 5));
    assert!(train_renderer(&data, &small(1)).is_err());
}

#[test]
fn overfits_a_single_sample() {
    let data = pairs(1, 32, 6);
    let cfg = RenderTrainConfig {
        epochs: 200,
        decay_start: 100,
        base_width: 8,
        seed: 7,
        ..Default::default()
    };
    let start = Instant::now();
    let trained = train_renderer(&data, &cfg).unwrap();
    let first = trained.log[0].l1;
    let last = trained.log.last().unwrap().l1;
    eprintln!("L1 {first:.4} -> {last:.4} in {:.1?}", start.elapsed());
    assert!(last <= 0.5 * first, "L1 {first} -> {last}");
}

#[test]
fn loss_log_csv_round_trip() {
    let trained = train_renderer(&pairs(2, 16, 8), &small(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loss.csv");
    write_loss_log(&trained.log, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "epoch,lr,L_adv_D,L_adv_G,L_1,L_s,total_G");
    assert_eq!(text.lines().count(), 3);
    assert_eq!(read_loss_log(&path).unwrap(), trained.log);
}
