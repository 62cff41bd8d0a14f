use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use sua_core::{ensure_same_dims, Image, RenderTrainConfig, Result};

use crate::generator::GeneratorCache;
use crate::gram::{gram, gram_backward};
use crate::model::{to_f64, RendererParams};
use crate::nn::ParamSet;

/// Floor applied to every logarithm argument.
pub const LOG_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub adv_d: f64,
    pub adv_g: f64,
    pub l1: f64,
    pub style: f64,
    pub total_g: f64,
}

/// Multipliers of the generator objective terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub adversarial: f64,
    pub l1: f64,
    pub style: f64,
}

impl TermWeights {
    pub fn from_config(cfg: &RenderTrainConfig) -> Self {
        Self {
            adversarial: 1.0,
            l1: cfg.lambda1,
            style: cfg.lambda2,
        }
    }
}

fn floored_ln(v: f64) -> f64 {
    v.max(LOG_FLOOR).ln()
}

/// `-[ln D(x,u) + ln(1 - D(fake,u))]` from the two scores.
pub fn adversarial_d(real: f64, fake: f64) -> f64 {
    -(floored_ln(real) + floored_ln(1.0 - fake))
}

/// `ln(1 - D(fake,u))`, minimized by the generator.
pub fn adversarial_g(fake: f64) -> f64 {
    floored_ln(1.0 - fake)
}

/// Mean absolute difference.
pub fn l1(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).mapv(f64::abs).mean().unwrap_or(0.0)
}

/// Sum over feature taps of the Frobenius norm of Gram differences.
pub fn style(fake: &[Array3<f64>], real: &[Array3<f64>]) -> f64 {
    fake.iter()
        .zip(real)
        .map(|(f, r)| frobenius(&(gram(f) - gram(r))))
        .sum()
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// All five loss values, generator in eval mode.
pub fn losses(p: &RendererParams, x: &Image, u: &Image, cfg: &RenderTrainConfig) -> Result<LossTerms> {
    ensure_same_dims("losses x/u", x.dims(), u.dims())?;
    let (x, u) = (to_f64(x), to_f64(u));
    let (fake, _) = p.generator.forward(&p.g, &u, None)?;
    let (real, _) = p.discriminator.forward(&p.d, &x, &u)?;
    let (gen, _) = p.discriminator.forward(&p.d, &fake, &u)?;
    let w = TermWeights::from_config(cfg);
    let adv_g = adversarial_g(gen.score);
    let l1 = l1(&fake, &x);
    let style = style(&gen.features, &real.features);
    Ok(LossTerms {
        adv_d: adversarial_d(real.score, gen.score),
        adv_g,
        l1,
        style,
        total_g: w.adversarial * adv_g + w.l1 * l1 + w.style * style,
    })
}

/// `L_adv_D` and its gradient over discriminator parameters, for a given
/// generated image.
pub fn discriminator_gradients(
    p: &RendererParams,
    x: &Array2<f64>,
    u: &Array2<f64>,
    fake: &Array2<f64>,
) -> Result<(f64, ParamSet)> {
    ensure_same_dims("discriminator x/u", x.dim(), u.dim())?;
    let mut grads = p.d.zeros_like();
    let (real, rc) = p.discriminator.forward(&p.d, x, u)?;
    let (gen, gc) = p.discriminator.forward(&p.d, fake, u)?;
    let dreal = if real.score > LOG_FLOOR { -(1.0 - real.score) } else { 0.0 };
    let dgen = if 1.0 - gen.score > LOG_FLOOR { gen.score } else { 0.0 };
    p.discriminator.backward(&p.d, &mut grads, &rc, dreal, &[]);
    p.discriminator.backward(&p.d, &mut grads, &gc, dgen, &[]);
    Ok((adversarial_d(real.score, gen.score), grads))
}

/// Weighted generator objective and its gradient over generator
/// parameters. `dropout` is `(rate, seed)` for a training pass.
pub fn generator_gradients(
    p: &RendererParams,
    x: &Array2<f64>,
    u: &Array2<f64>,
    weights: TermWeights,
    dropout: Option<(f64, u64)>,
) -> Result<(LossTerms, ParamSet)> {
    ensure_same_dims("generator x/u", x.dim(), u.dim())?;
    let (fake, cache) = p.generator.forward(&p.g, u, dropout)?;
    generator_gradients_from(p, x, u, weights, &fake, &cache)
}

pub(crate) fn generator_gradients_from(
    p: &RendererParams,
    x: &Array2<f64>,
    u: &Array2<f64>,
    weights: TermWeights,
    fake: &Array2<f64>,
    cache: &GeneratorCache,
) -> Result<(LossTerms, ParamSet)> {
    let (real, _) = p.discriminator.forward(&p.d, x, u)?;
    let (gen, dc) = p.discriminator.forward(&p.d, fake, u)?;

    let adv_g = adversarial_g(gen.score);
    let dlogit = if 1.0 - gen.score > LOG_FLOOR { -weights.adversarial * gen.score } else { 0.0 };

    let n = x.len() as f64;
    let l1_value = l1(fake, x);
    let dl1 = ndarray::Zip::from(fake)
        .and(x)
        .map_collect(|&f, &t| match f.partial_cmp(&t) {
            Some(std::cmp::Ordering::Greater) => weights.l1 / n,
            Some(std::cmp::Ordering::Less) => -weights.l1 / n,
            _ => 0.0,
        });

    let mut style_value = 0.0;
    let mut dfeatures = Vec::with_capacity(gen.features.len());
    for (f, r) in gen.features.iter().zip(&real.features) {
        let diff = gram(f) - gram(r);
        let norm = frobenius(&diff);
        style_value += norm;
        dfeatures.push((norm > 0.0 && weights.style != 0.0).then(|| gram_backward(f, &(diff * (weights.style / norm)))));
    }

    let mut scratch = p.d.zeros_like();
    let dfake = p.discriminator.backward(&p.d, &mut scratch, &dc, dlogit, &dfeatures) + dl1;
    let mut grads = p.g.zeros_like();
    p.generator.backward(&p.g, &mut grads, cache, &dfake);

    let terms = LossTerms {
        adv_d: adversarial_d(real.score, gen.score),
        adv_g,
        l1: l1_value,
        style: style_value,
        total_g: weights.adversarial * adv_g + weights.l1 * l1_value + weights.style * style_value,
    };
    Ok((terms, grads))
}
