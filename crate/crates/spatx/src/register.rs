//! Greedy coarse-to-fine registration.
//!
//! Each accepted update solves the velocity model between the currently
//! warped source and the target, so the new small deformation acts before
//! the existing ones: `phi <- phi o (Id + s)`. Steps larger than the cap are
//! split into equal sub-steps. An update is kept only if it lowers the data
//! energy without lowering SSIM; half and quarter steps are tried before
//! giving up on a level.

use ndarray::Array2;
use sua_core::{ensure_same_dims, AdmmConfig, Image, Result, VectorField};
use sua_structex::ssim;

use crate::admm::VelocityProblem;
use crate::diffeo::{compose, integrate_with_cap, DiffeoPair};
use crate::warp::{sample, warp_array};

const STEP_FRACTIONS: [f64; 3] = [1.0, 0.5, 0.25];

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    /// Downsampling factor of the level.
    pub factor: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone)]
pub struct Registration {
    pub pair: DiffeoPair,
    pub levels: Vec<LevelTrace>,
    /// SSIM of the unwarped source against the target.
    pub ssim_before: f64,
    /// SSIM of the source warped by the returned forward map.
    pub ssim_after: f64,
    /// Data energy after every accepted update, starting with the initial one.
    pub energy_trace: Vec<f64>,
    /// SSIM after every accepted update, starting with the initial one.
    pub ssim_trace: Vec<f64>,
    /// True when the integrated map scored worse than identity and was dropped.
    pub reverted: bool,
}

pub fn register(src: &Image, tgt: &Image, cfg: &AdmmConfig) -> Result<DiffeoPair> {
    Ok(register_detailed(src, tgt, cfg)?.pair)
}

pub fn register_detailed(src: &Image, tgt: &Image, cfg: &AdmmConfig) -> Result<Registration> {
    ensure_same_dims("registration", src.dims(), tgt.dims())?;
    cfg.validate()?;
    let (h, w) = src.dims();
    let src64 = src.to_f64();
    let tgt64 = tgt.to_f64();

    let mut phi = VectorField::zeros(h, w);
    let mut warped = src64.clone();
    let mut energy = data_energy(&warped, &tgt64);
    let ssim_before = ssim(src, tgt)?;
    let mut score = ssim_before;
    let mut steps: Vec<VectorField> = Vec::new();
    let mut levels = Vec::new();
    let mut energy_trace = vec![energy];
    let mut ssim_trace = vec![score];

    for level in (0..cfg.scales).rev() {
        let factor = 1usize << level;
        let (ch, cw) = (h.div_ceil(factor), w.div_ceil(factor));
        if level > 0 && (ch < cfg.order + 1 || cw < cfg.order + 1) {
            continue;
        }
        let coarse_tgt = downsample(&tgt64, factor);
        let level_cfg = AdmmConfig {
            lambda: level_lambda(cfg.lambda, cfg.order, factor),
            ..cfg.clone()
        };
        let mut trace = LevelTrace {
            factor,
            accepted: 0,
            rejected: 0,
        };
        while trace.accepted < cfg.max_updates_per_level && energy > 0.0 {
            let problem = VelocityProblem::from_arrays(&downsample(&warped, factor), &coarse_tgt, &level_cfg)?;
            let sol = problem.solve(cfg.rho, cfg.max_iterations, cfg.tolerance);
            let coarse = problem.crop(&sol.vx, &sol.vy)?;
            let velocity = upsample_field(&coarse, factor, h, w);
            let peak = velocity.max_norm();
            if !(peak > 1e-9) || !velocity.is_finite() {
                break;
            }
            let mut accepted = None;
            for alpha in STEP_FRACTIONS {
                let parts = ((alpha * peak) / cfg.step_cap).ceil().max(1.0) as usize;
                let sub = velocity.scaled(alpha / parts as f64);
                let mut cand = phi.clone();
                for _ in 0..parts {
                    cand = compose(&cand, &sub)?;
                }
                let cand_warped = warp_array(&src64, &cand)?;
                let cand_energy = data_energy(&cand_warped, &tgt64);
                let cand_score = ssim(&Image::from_f64(&cand_warped), tgt)?;
                if cand_energy < energy && cand_score >= score {
                    accepted = Some((cand, cand_warped, cand_energy, cand_score, sub, parts));
                    break;
                }
                trace.rejected += 1;
            }
            let Some((cand, cand_warped, cand_energy, cand_score, sub, parts)) = accepted else {
                break;
            };
            let relative = (energy - cand_energy) / energy;
            phi = cand;
            warped = cand_warped;
            energy = cand_energy;
            score = cand_score;
            steps.extend(std::iter::repeat_n(sub, parts));
            energy_trace.push(energy);
            ssim_trace.push(score);
            trace.accepted += 1;
            if relative < cfg.tolerance {
                break;
            }
        }
        levels.push(trace);
    }

    let identity = |levels, energy_trace, ssim_trace, reverted| Registration {
        pair: DiffeoPair::identity(h, w),
        levels,
        ssim_before,
        ssim_after: ssim_before,
        energy_trace,
        ssim_trace,
        reverted,
    };
    if steps.is_empty() {
        return Ok(identity(levels, energy_trace, ssim_trace, false));
    }
    let velocities = velocities_from_steps(&steps);
    let pair = integrate_with_cap(&velocities, cfg.step_cap * (1.0 + 1e-6))?;
    let ssim_after = ssim(&Image::from_f64(&warp_array(&src64, &pair.forward)?), tgt)?;
    if ssim_after < ssim_before {
        return Ok(identity(levels, energy_trace, ssim_trace, true));
    }
    Ok(Registration {
        pair,
        levels,
        ssim_before,
        ssim_after,
        energy_trace,
        ssim_trace,
        reverted: false,
    })
}

/// Smoothness weight on a level downsampled by `factor`, chosen so that the
/// coarse objective approximates the full-resolution one: the data term
/// scales with the pixel area `s^2` and the order-`n` term with `s^(4 - 2n)`.
pub fn level_lambda(lambda: f64, order: usize, factor: usize) -> f64 {
    lambda * (factor as f64).powi(2 - 2 * order as i32)
}

/// Converts steps in acceptance order into the velocity list whose first
/// factor is applied first: the newest step acts first, and each velocity is
/// the step scaled by the step count.
pub fn velocities_from_steps(steps: &[VectorField]) -> Vec<VectorField> {
    let n = steps.len() as f64;
    steps.iter().rev().map(|s| s.scaled(n)).collect()
}

pub fn data_energy(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Block average by `factor`; partial blocks at the far edges average what
/// they cover.
pub fn downsample(a: &Array2<f64>, factor: usize) -> Array2<f64> {
    if factor == 1 {
        return a.clone();
    }
    let (h, w) = a.dim();
    Array2::from_shape_fn((h.div_ceil(factor), w.div_ceil(factor)), |(cy, cx)| {
        let ys = cy * factor..((cy + 1) * factor).min(h);
        let xs = cx * factor..((cx + 1) * factor).min(w);
        let n = ys.len() * xs.len();
        let mut sum = 0.0;
        for y in ys {
            for x in xs.clone() {
                sum += a[[y, x]];
            }
        }
        sum / n as f64
    })
}

/// Bilinear upsampling of a coarse displacement field, rescaled to fine
/// pixel units.
pub fn upsample_field(coarse: &VectorField, factor: usize, h: usize, w: usize) -> VectorField {
    if factor == 1 && coarse.dims() == (h, w) {
        return coarse.clone();
    }
    let f = factor as f64;
    VectorField::from_fn(h, w, |y, x| {
        let cy = (y as f64 + 0.5) / f - 0.5;
        let cx = (x as f64 + 0.5) / f - 0.5;
        (sample(&coarse.dx, cy, cx) * f, sample(&coarse.dy, cy, cx) * f)
    })
}
