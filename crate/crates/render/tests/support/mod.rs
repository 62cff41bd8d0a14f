#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use sua_render::nn::{ParamId, ParamSet};
use sua_render::RendererParams;

pub fn rng(seed: u64) -> sua_core::rng::Rng {
    sua_core::rng::stream(seed, "test")
}

pub fn uniform(r: &mut impl Rng, h: usize, w: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((h, w), || r.random::<f64>())
}

/// Sparse 0/1 sketch.
pub fn sketch(r: &mut impl Rng, h: usize, w: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((h, w), || f64::from(u8::from(r.random::<f64>() < 0.3)))
}

/// Moves every scalar off its initial value so no unit sits exactly on a
/// ReLU kink.
pub fn jitter(ps: &mut ParamSet, r: &mut impl Rng, amp: f64) {
    for i in 0..ps.len() {
        let id = sua_render::nn::ParamId(i);
        ps.get_mut(id).mapv_inplace(|v| v + amp * (2.0 * r.random::<f64>() - 1.0));
    }
}

pub fn tiny(seed: u64, width: usize, dims: (usize, usize)) -> RendererParams {
    let mut p = RendererParams::new(width, dims, 0.5, seed).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    jitter(&mut p.g, &mut r, 0.05);
    jitter(&mut p.d, &mut r, 0.05);
    p
}

// Small enough that perturbations rarely straddle a ReLU kink.
pub const EPS: f64 = 1e-6;
pub const SAMPLES: usize = 16;
pub const SEEDS: u64 = 10;

pub fn rel_err(a: f64, b: f64) -> f64 {
    // The floor absorbs roundoff on gradients that vanish analytically, such as
    // conv biases feeding an instance norm.
    (a - b).abs() / a.abs().max(b.abs()).max(1e-5)
}

/// Compares analytic gradients against central differences at sampled
/// scalars (one random element from a random tensor each time). A sample
/// whose one-sided differences disagree has a ReLU kink inside the
/// perturbation interval and is redrawn.
pub fn check(
    label: &str,
    seed: u64,
    grads: &ParamSet,
    params: &RendererParams,
    select: impl Fn(&mut RendererParams) -> &mut ParamSet,
    objective: impl Fn(&RendererParams) -> f64,
) {
    let mut r = rng(seed.wrapping_mul(7919) + 13);
    let mut probe = params.clone();
    let base = objective(&probe);
    let count = select(&mut probe).len();
    let (mut valid, mut kinked, mut worst) = (0, 0, 0.0f64);
    while valid < SAMPLES {
        assert!(kinked <= 2 * SAMPLES, "{label} seed {seed}: too many kinked samples");
        let id = ParamId(r.random_range(0..count));
        let len = select(&mut probe).get(id).len();
        let k = r.random_range(0..len);
        let orig = select(&mut probe).get(id).as_slice().unwrap()[k];
        select(&mut probe).get_mut(id).as_slice_mut().unwrap()[k] = orig + EPS;
        let plus = objective(&probe);
        select(&mut probe).get_mut(id).as_slice_mut().unwrap()[k] = orig - EPS;
        let minus = objective(&probe);
        select(&mut probe).get_mut(id).as_slice_mut().unwrap()[k] = orig;
        if rel_err((plus - base) / EPS, (base - minus) / EPS) > 1e-3 {
            kinked += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * EPS);
        let analytic = grads.get(id).as_slice().unwrap()[k];
        let e = rel_err(analytic, numeric);
        assert!(
            e < 1e-3,
            "{label} seed {seed}: {} [{k}] analytic {analytic:e} numeric {numeric:e}",
            grads.names()[id.0]
        );
        worst = worst.max(e);
        valid += 1;
    }
    eprintln!("{label} seed {seed}: worst relative error {worst:.2e}, {kinked} kinked samples redrawn");
}

pub fn instance(seed: u64) -> (RendererParams, Array2<f64>, Array2<f64>) {
    let p = tiny(seed, 2, (8, 8));
    let mut r = rng(seed + 1000);
    let x = uniform(&mut r, 8, 8);
    let u = sketch(&mut r, 8, 8);
    (p, x, u)
}
