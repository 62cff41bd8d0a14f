//! Conditional discriminator over (image, structure) channel pairs.

use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::Rng;
use sua_core::{ensure_same_dims, Error, Result};

use crate::generator::{pad_center, padded_side};
use crate::nn::ops::{ConvCache, NormCache};
use crate::nn::{concat, leaky_relu, leaky_relu_backward, sigmoid, Conv2d, InstanceNorm, Linear, ParamSet};

pub const DISCRIMINATOR_BLOCKS: usize = 4;
/// Blocks whose activations feed the style loss.
pub const FEATURE_TAPS: usize = 3;
/// Padded input sides are multiples of this, leaving the last block at least 2x2.
pub const DISCRIMINATOR_STRIDE: usize = 1 << (DISCRIMINATOR_BLOCKS + 1);
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone)]
struct Block {
    conv: Conv2d,
    norm: InstanceNorm,
}

#[derive(Debug, Clone)]
struct BlockCache {
    conv: ConvCache,
    norm: NormCache,
    pre: Array3<f64>,
}

/// Layer layout of the discriminator for one input size.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub width: usize,
    /// Unpadded input dims the head was sized for.
    pub dims: (usize, usize),
    padded: (usize, usize),
    blocks: Vec<Block>,
    fc: Linear,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorOutput {
    pub logit: f64,
    /// `sigmoid(logit)`.
    pub score: f64,
    /// Post-activation maps of blocks 1..=3.
    pub features: Vec<Array3<f64>>,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorCache {
    offset: (usize, usize),
    blocks: Vec<BlockCache>,
    flat: Array1<f64>,
    last_dims: (usize, usize, usize),
}

impl Discriminator {
    pub fn new(width: usize, dims: (usize, usize), ps: &mut ParamSet, rng: &mut impl Rng) -> Result<Self> {
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::Shape("discriminator input is empty".into()));
        }
        let padded = (padded_side(dims.0, DISCRIMINATOR_STRIDE).0, padded_side(dims.1, DISCRIMINATOR_STRIDE).0);
        let mut blocks = Vec::with_capacity(DISCRIMINATOR_BLOCKS);
        let mut cin = 2;
        for l in 1..=DISCRIMINATOR_BLOCKS {
            let cout = width << (l - 1);
            blocks.push(Block {
                conv: Conv2d::new(ps, &format!("block{l}.conv"), cin, cout, 4, 2, 1, rng),
                norm: InstanceNorm::new(ps, &format!("block{l}.norm"), cout),
            });
            cin = cout;
        }
        let scale = 1 << DISCRIMINATOR_BLOCKS;
        let inputs = cin * (padded.0 / scale) * (padded.1 / scale);
        let fc = Linear::new(ps, "fc", inputs, 1, rng);
        Ok(Self {
            width,
            dims,
            padded,
            blocks,
            fc,
        })
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        self.padded
    }

    pub fn forward(
        &self,
        ps: &ParamSet,
        img: &Array2<f64>,
        structure: &Array2<f64>,
    ) -> Result<(DiscriminatorOutput, DiscriminatorCache)> {
        ensure_same_dims("discriminator image/structure", img.dim(), structure.dim())?;
        ensure_same_dims("discriminator input", img.dim(), self.dims)?;
        let (pi, offset) = pad_center(img, self.padded.0, self.padded.1);
        let (pu, _) = pad_center(structure, self.padded.0, self.padded.1);
        let mut x = concat(&pi.insert_axis(Axis(0)), &pu.insert_axis(Axis(0)));
        let mut blocks = Vec::with_capacity(DISCRIMINATOR_BLOCKS);
        let mut features = Vec::with_capacity(FEATURE_TAPS);
        for (l, block) in self.blocks.iter().enumerate() {
            let (a, conv) = block.conv.forward(ps, &x);
            let (pre, norm) = block.norm.forward(ps, &a);
            x = leaky_relu(&pre, LEAKY_SLOPE);
            if l < FEATURE_TAPS {
                features.push(x.clone());
            }
            blocks.push(BlockCache { conv, norm, pre });
        }
        let last_dims = x.dim();
        let flat = Array1::from_iter(x.iter().copied());
        let logit = self.fc.forward(ps, &flat)[0];
        let out = DiscriminatorOutput {
            logit,
            score: sigmoid(logit),
            features,
        };
        Ok((
            out,
            DiscriminatorCache {
                offset,
                blocks,
                flat,
                last_dims,
            },
        ))
    }

    /// Accumulates parameter gradients and returns the gradient with respect
    /// to the (unpadded) image channel. `dfeatures[l]` adds to the output of
    /// block `l + 1`.
    pub fn backward(
        &self,
        ps: &ParamSet,
        grads: &mut ParamSet,
        cache: &DiscriminatorCache,
        dlogit: f64,
        dfeatures: &[Option<Array3<f64>>],
    ) -> Array2<f64> {
        let dflat = self.fc.backward(ps, grads, &cache.flat, &Array1::from_elem(1, dlogit));
        let mut dx = dflat.into_shape_with_order(cache.last_dims).expect("flattened layout");
        for l in (0..self.blocks.len()).rev() {
            if let Some(Some(df)) = dfeatures.get(l) {
                dx += df;
            }
            let (block, c) = (&self.blocks[l], &cache.blocks[l]);
            let dpre = leaky_relu_backward(&c.pre, &dx, LEAKY_SLOPE);
            let da = block.norm.backward(ps, grads, &c.norm, &dpre);
            dx = block.conv.backward(ps, grads, &c.conv, &da);
        }
        let (h, w) = self.dims;
        let (top, left) = cache.offset;
        dx.slice(s![0, top..top + h, left..left + w]).to_owned()
    }
}
