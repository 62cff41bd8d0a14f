//! Structure-conditioned U-Net generator built from residual blocks.

use ndarray::{s, Array2, Array3};
use rand::Rng;
use sua_core::{rng, Error, Result};

use crate::nn::{
    avg_pool2, avg_pool2_backward, concat, dropout_mask, relu, relu_backward, sigmoid, split, upsample2,
    upsample2_backward, Conv2d, ConvTranspose2d, InstanceNorm, ParamSet,
};
use crate::nn::ops::{ConvCache, ConvTCache, NormCache};

pub const ENCODER_BLOCKS: usize = 8;
pub const DECODER_BLOCKS: usize = 7;
/// Padded input sides are multiples of this.
pub const GENERATOR_STRIDE: usize = 1 << ENCODER_BLOCKS;
/// Decoder blocks (1-based) that apply dropout while training.
pub const DROPOUT_BLOCKS: usize = 3;

/// Encoder width of block `k` (1-based).
pub fn encoder_channels(width: usize, k: usize) -> usize {
    width * (1usize << (k - 1).min(3))
}

/// Side padded up to the next multiple of `stride`, and the leading pad.
pub fn padded_side(n: usize, stride: usize) -> (usize, usize) {
    let p = n.div_ceil(stride) * stride;
    (p, (p - n) / 2)
}

pub(crate) fn pad_center(a: &Array2<f64>, ph: usize, pw: usize) -> (Array2<f64>, (usize, usize)) {
    let (h, w) = a.dim();
    let (top, left) = ((ph - h) / 2, (pw - w) / 2);
    let mut out = Array2::zeros((ph, pw));
    out.slice_mut(s![top..top + h, left..left + w]).assign(a);
    (out, (top, left))
}

#[derive(Debug, Clone)]
struct EncoderBlock {
    conv: Conv2d,
    norm: InstanceNorm,
    shortcut: Conv2d,
}

#[derive(Debug, Clone)]
struct EncoderCache {
    in_dims: (usize, usize, usize),
    conv: ConvCache,
    act: Array3<f64>,
    norm: NormCache,
    shortcut: ConvCache,
}

impl EncoderBlock {
    fn forward(&self, ps: &ParamSet, x: &Array3<f64>) -> (Array3<f64>, EncoderCache) {
        let (a, conv) = self.conv.forward(ps, x);
        let act = relu(&a);
        let (n, norm) = self.norm.forward(ps, &act);
        let (sc, shortcut) = self.shortcut.forward(ps, &avg_pool2(x));
        let cache = EncoderCache {
            in_dims: x.dim(),
            conv,
            act,
            norm,
            shortcut,
        };
        (n + sc, cache)
    }

    fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, c: &EncoderCache, dy: &Array3<f64>) -> Array3<f64> {
        let dact = self.norm.backward(ps, grads, &c.norm, dy);
        let da = relu_backward(&c.act, &dact);
        let dx = self.conv.backward(ps, grads, &c.conv, &da);
        let dpool = self.shortcut.backward(ps, grads, &c.shortcut, dy);
        dx + avg_pool2_backward(&dpool, c.in_dims)
    }
}

#[derive(Debug, Clone)]
struct DecoderBlock {
    tconv: ConvTranspose2d,
    norm: InstanceNorm,
    shortcut: Conv2d,
    dropout: bool,
}

#[derive(Debug, Clone)]
struct DecoderCache {
    tconv: ConvTCache,
    act: Array3<f64>,
    norm: NormCache,
    mask: Option<Array3<f64>>,
    shortcut: ConvCache,
}

impl DecoderBlock {
    fn forward(
        &self,
        ps: &ParamSet,
        x: &Array3<f64>,
        dropout: Option<(f64, &mut rng::Rng)>,
    ) -> (Array3<f64>, DecoderCache) {
        let (a, tconv) = self.tconv.forward(ps, x);
        let act = relu(&a);
        let (mut n, norm) = self.norm.forward(ps, &act);
        let mask = match dropout {
            Some((p, r)) if self.dropout && p > 0.0 => {
                let m = dropout_mask(n.dim(), p, r);
                n *= &m;
                Some(m)
            }
            _ => None,
        };
        // A 1x1 conv commutes with nearest upsampling; convolve at low resolution.
        let (sc, shortcut) = self.shortcut.forward(ps, x);
        let cache = DecoderCache {
            tconv,
            act,
            norm,
            mask,
            shortcut,
        };
        (n + upsample2(&sc), cache)
    }

    fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, c: &DecoderCache, dy: &Array3<f64>) -> Array3<f64> {
        let dn = match &c.mask {
            Some(m) => dy * m,
            None => dy.clone(),
        };
        let dact = self.norm.backward(ps, grads, &c.norm, &dn);
        let da = relu_backward(&c.act, &dact);
        let dx = self.tconv.backward(ps, grads, &c.tconv, &da);
        let dsc = upsample2_backward(dy);
        dx + self.shortcut.backward(ps, grads, &c.shortcut, &dsc)
    }
}

/// Layer layout of the generator; weights live in a separate [`ParamSet`].
#[derive(Debug, Clone)]
pub struct Generator {
    pub width: usize,
    encoders: Vec<EncoderBlock>,
    decoders: Vec<DecoderBlock>,
    head: ConvTranspose2d,
}

/// Intermediate state kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GeneratorCache {
    dims: (usize, usize),
    offset: (usize, usize),
    encoders: Vec<EncoderCache>,
    decoders: Vec<DecoderCache>,
    head: ConvTCache,
    /// Padded sigmoid output.
    out: Array2<f64>,
}

impl Generator {
    pub fn new(width: usize, ps: &mut ParamSet, rng: &mut impl Rng) -> Self {
        let mut encoders = Vec::with_capacity(ENCODER_BLOCKS);
        let mut cin = 1;
        for k in 1..=ENCODER_BLOCKS {
            let cout = encoder_channels(width, k);
            let name = format!("enc{k}");
            encoders.push(EncoderBlock {
                conv: Conv2d::new(ps, &format!("{name}.conv"), cin, cout, 4, 2, 1, rng),
                norm: InstanceNorm::new(ps, &format!("{name}.norm"), cout),
                shortcut: Conv2d::new(ps, &format!("{name}.shortcut"), cin, cout, 1, 1, 0, rng),
            });
            cin = cout;
        }
        let mut decoders = Vec::with_capacity(DECODER_BLOCKS);
        for j in 1..=DECODER_BLOCKS {
            let cout = encoder_channels(width, ENCODER_BLOCKS - j);
            let name = format!("dec{j}");
            decoders.push(DecoderBlock {
                tconv: ConvTranspose2d::new(ps, &format!("{name}.tconv"), cin, cout, 4, 2, 1, rng),
                norm: InstanceNorm::new(ps, &format!("{name}.norm"), cout),
                shortcut: Conv2d::new(ps, &format!("{name}.shortcut"), cin, cout, 1, 1, 0, rng),
                dropout: j <= DROPOUT_BLOCKS,
            });
            cin = 2 * cout;
        }
        let head = ConvTranspose2d::new(ps, "head", cin, 1, 4, 2, 1, rng);
        Self {
            width,
            encoders,
            decoders,
            head,
        }
    }

    /// Maps a structure image to an intensity image of the same size.
    /// `dropout` carries the rate and seed for a training pass.
    pub fn forward(
        &self,
        ps: &ParamSet,
        input: &Array2<f64>,
        dropout: Option<(f64, u64)>,
    ) -> Result<(Array2<f64>, GeneratorCache)> {
        let (h, w) = input.dim();
        if h == 0 || w == 0 {
            return Err(Error::Shape("generator input is empty".into()));
        }
        let (ph, _) = padded_side(h, GENERATOR_STRIDE);
        let (pw, _) = padded_side(w, GENERATOR_STRIDE);
        let (padded, offset) = pad_center(input, ph, pw);
        let mut x = padded.insert_axis(ndarray::Axis(0));

        let mut skips = Vec::with_capacity(ENCODER_BLOCKS);
        let mut encoders = Vec::with_capacity(ENCODER_BLOCKS);
        for block in &self.encoders {
            let (y, c) = block.forward(ps, &x);
            encoders.push(c);
            skips.push(y.clone());
            x = y;
        }
        let mut drop_rng = dropout.map(|(p, seed)| (p, rng::stream(seed, "generator-dropout")));
        let mut decoders = Vec::with_capacity(DECODER_BLOCKS);
        for (j, block) in self.decoders.iter().enumerate() {
            let d = drop_rng.as_mut().map(|(p, r)| (*p, r));
            let (y, c) = block.forward(ps, &x, d);
            decoders.push(c);
            x = concat(&y, &skips[ENCODER_BLOCKS - 2 - j]);
        }
        let (pre, head) = self.head.forward(ps, &x);
        let out = pre.index_axis(ndarray::Axis(0), 0).mapv(sigmoid);
        let cropped = out.slice(s![offset.0..offset.0 + h, offset.1..offset.1 + w]).to_owned();
        let cache = GeneratorCache {
            dims: (h, w),
            offset,
            encoders,
            decoders,
            head,
            out,
        };
        Ok((cropped, cache))
    }

    /// Accumulates parameter gradients given the gradient of the cropped output.
    pub fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, cache: &GeneratorCache, dout: &Array2<f64>) {
        let (h, w) = cache.dims;
        let (top, left) = cache.offset;
        let mut dpre = Array2::zeros(cache.out.dim());
        ndarray::Zip::from(dpre.slice_mut(s![top..top + h, left..left + w]))
            .and(cache.out.slice(s![top..top + h, left..left + w]))
            .and(dout)
            .for_each(|d, &o, &g| *d = g * o * (1.0 - o));
        let mut dx = self.head.backward(ps, grads, &cache.head, &dpre.insert_axis(ndarray::Axis(0)));

        let mut dskips: Vec<Option<Array3<f64>>> = vec![None; ENCODER_BLOCKS];
        for j in (0..DECODER_BLOCKS).rev() {
            let block = &self.decoders[j];
            let (dy, dskip) = split(&dx, block.tconv.cout);
            dskips[ENCODER_BLOCKS - 2 - j] = Some(dskip);
            dx = block.backward(ps, grads, &cache.decoders[j], &dy);
        }
        for k in (0..ENCODER_BLOCKS).rev() {
            if let Some(extra) = dskips[k].take() {
                dx += &extra;
            }
            dx = self.encoders[k].backward(ps, grads, &cache.encoders[k], &dx);
        }
    }
}
