//! Small two-level encoder-decoder trained with per-pixel cross-entropy.

use std::path::Path;

use ndarray::{arr1, s, Array2, Array3, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sua_core::io::{self, RawTensor};
use sua_core::{rng, Dataset, Error, Image, Result, SegMask, SegmenterConfig};
use sua_render::nn::ops::{ConvCache, ConvTCache};
use sua_render::nn::{concat, relu, relu_backward, split, Adam, Conv2d, ConvTranspose2d, ParamId, ParamSet};

/// Padded input sides are multiples of this.
const STRIDE: usize = 4;

#[derive(Debug, Clone)]
pub struct Segmenter {
    pub width: usize,
    pub classes: usize,
    c1: Conv2d,
    c2: Conv2d,
    d1: Conv2d,
    c3: Conv2d,
    d2: Conv2d,
    c4: Conv2d,
    u2: ConvTranspose2d,
    c5: Conv2d,
    u1: ConvTranspose2d,
    c6: Conv2d,
    head: Conv2d,
}

/// He-normal weights for a layer feeding a ReLU.
fn he(ps: &mut ParamSet, w: ParamId, fan_in: usize, r: &mut impl Rng) {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    ps.get_mut(w).mapv_inplace(|_| normal.sample(r));
}

impl Segmenter {
    pub fn new(width: usize, classes: usize, ps: &mut ParamSet, r: &mut impl Rng) -> Self {
        let (w1, w2, w3) = (width, 2 * width, 4 * width);
        let mut conv = |name: &str, cin, cout, k, stride, pad, r: &mut _| {
            let c = Conv2d::new(ps, name, cin, cout, k, stride, pad, r);
            he(ps, c.w, cin * k * k, r);
            c
        };
        let c1 = conv("c1", 1, w1, 3, 1, 1, r);
        let c2 = conv("c2", w1, w1, 3, 1, 1, r);
        let d1 = conv("d1", w1, w2, 4, 2, 1, r);
        let c3 = conv("c3", w2, w2, 3, 1, 1, r);
        let d2 = conv("d2", w2, w3, 4, 2, 1, r);
        let c4 = conv("c4", w3, w3, 3, 1, 1, r);
        let c5 = conv("c5", 2 * w2, w2, 3, 1, 1, r);
        let c6 = conv("c6", 2 * w1, w1, 3, 1, 1, r);
        let head = conv("head", w1, classes, 1, 1, 0, r);
        let u2 = ConvTranspose2d::new(ps, "u2", w3, w2, 4, 2, 1, r);
        he(ps, u2.w, w3 * 4, r);
        let u1 = ConvTranspose2d::new(ps, "u1", w2, w1, 4, 2, 1, r);
        he(ps, u1.w, w2 * 4, r);
        Self {
            width,
            classes,
            c1,
            c2,
            d1,
            c3,
            d2,
            c4,
            u2,
            c5,
            u1,
            c6,
            head,
        }
    }
}

struct Cache {
    convs: Vec<(ConvCache, Array3<f64>)>,
    tconvs: Vec<(ConvTCache, Array3<f64>)>,
    head: ConvCache,
}

impl Segmenter {
    fn conv_relu(
        layer: &Conv2d,
        ps: &ParamSet,
        x: &Array3<f64>,
        caches: &mut Vec<(ConvCache, Array3<f64>)>,
    ) -> Array3<f64> {
        let (a, c) = layer.forward(ps, x);
        let y = relu(&a);
        caches.push((c, y.clone()));
        y
    }

    /// Class logits, `classes x H x W`, for an input padded to the stride.
    fn forward(&self, ps: &ParamSet, x: &Array3<f64>) -> (Array3<f64>, Cache) {
        let mut convs = Vec::with_capacity(8);
        let mut tconvs = Vec::with_capacity(2);
        let a = Self::conv_relu(&self.c1, ps, x, &mut convs);
        let f1 = Self::conv_relu(&self.c2, ps, &a, &mut convs);
        let b = Self::conv_relu(&self.d1, ps, &f1, &mut convs);
        let f2 = Self::conv_relu(&self.c3, ps, &b, &mut convs);
        let c = Self::conv_relu(&self.d2, ps, &f2, &mut convs);
        let f3 = Self::conv_relu(&self.c4, ps, &c, &mut convs);
        let (t2, tc2) = self.u2.forward(ps, &f3);
        let t2 = relu(&t2);
        tconvs.push((tc2, t2.clone()));
        let g2 = Self::conv_relu(&self.c5, ps, &concat(&t2, &f2), &mut convs);
        let (t1, tc1) = self.u1.forward(ps, &g2);
        let t1 = relu(&t1);
        tconvs.push((tc1, t1.clone()));
        let g1 = Self::conv_relu(&self.c6, ps, &concat(&t1, &f1), &mut convs);
        let (logits, head) = self.head.forward(ps, &g1);
        (logits, Cache { convs, tconvs, head })
    }

    fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, cache: &Cache, dlogits: &Array3<f64>) {
        let back = |layer: &Conv2d, grads: &mut ParamSet, i: usize, dy: &Array3<f64>| {
            let (c, y) = &cache.convs[i];
            layer.backward(ps, grads, c, &relu_backward(y, dy))
        };
        let dg1 = self.head.backward(ps, grads, &cache.head, dlogits);
        let d = back(&self.c6, grads, 7, &dg1);
        let (dt1, mut df1) = split(&d, self.width);
        let (tc1, t1) = &cache.tconvs[1];
        let dg2 = self.u1.backward(ps, grads, tc1, &relu_backward(t1, &dt1));
        let d = back(&self.c5, grads, 6, &dg2);
        let (dt2, mut df2) = split(&d, 2 * self.width);
        let (tc2, t2) = &cache.tconvs[0];
        let df3 = self.u2.backward(ps, grads, tc2, &relu_backward(t2, &dt2));
        let dc = back(&self.c4, grads, 5, &df3);
        df2 += &back(&self.d2, grads, 4, &dc);
        let db = back(&self.c3, grads, 3, &df2);
        df1 += &back(&self.d1, grads, 2, &db);
        let da = back(&self.c2, grads, 1, &df1);
        back(&self.c1, grads, 0, &da);
    }
}

#[derive(Debug, Clone)]
pub struct SegmenterParams {
    pub net: Segmenter,
    pub weights: ParamSet,
}

impl SegmenterParams {
    pub fn new(width: usize, classes: usize, seed: u64) -> Result<Self> {
        if width == 0 || classes < 2 {
            return Err(Error::Parameter("segmenter needs width >= 1 and >= 2 classes".into()));
        }
        let mut weights = ParamSet::new();
        let net = Segmenter::new(width, classes, &mut weights, &mut rng::stream(seed, "segmenter-init"));
        Ok(Self { net, weights })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let meta = arr1(&[self.net.width as f32, self.net.classes as f32]).into_dyn();
        let mut records = vec![("meta".to_string(), RawTensor::from_array_f32(&meta))];
        records.extend(self.weights.to_records(""));
        io::save_archive(&records, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let records = io::load_archive(path)?;
        let meta = records
            .iter()
            .find(|(n, _)| n == "meta")
            .ok_or_else(|| Error::Format("segmenter archive lacks meta record".into()))?
            .1
            .to_array_f32()?;
        let m: Vec<f32> = meta.iter().copied().collect();
        if m.len() != 2 {
            return Err(Error::Format("malformed segmenter meta record".into()));
        }
        let mut p = Self::new(m[0] as usize, m[1] as usize, 0)?;
        p.weights.load_records(&records, "")?;
        Ok(p)
    }
}

fn padded(img: &Image) -> (Array3<f64>, (usize, usize)) {
    let (h, w) = img.dims();
    let (ph, pw) = (h.div_ceil(STRIDE) * STRIDE, w.div_ceil(STRIDE) * STRIDE);
    let (top, left) = ((ph - h) / 2, (pw - w) / 2);
    let mut x = Array3::zeros((1, ph, pw));
    x.slice_mut(s![0, top..top + h, left..left + w]).assign(&img.to_f64());
    (x, (top, left))
}

fn crop(a: &Array3<f64>, off: (usize, usize), h: usize, w: usize) -> Array3<f64> {
    a.slice(s![.., off.0..off.0 + h, off.1..off.1 + w]).to_owned()
}

/// Softmax over classes at every pixel.
fn softmax(logits: &Array3<f64>) -> Array3<f64> {
    let mut p = logits.clone();
    for mut lane in p.lanes_mut(Axis(0)) {
        let m = lane.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        lane.mapv_inplace(|v| (v - m).exp());
        let z = lane.sum();
        lane.mapv_inplace(|v| v / z);
    }
    p
}

/// Per-pixel argmax; ties go to the lowest class.
fn argmax(logits: &Array3<f64>, classes: usize) -> Result<SegMask> {
    let (_, h, w) = logits.dim();
    let labels = Array2::from_shape_fn((h, w), |(y, x)| {
        let mut best = 0;
        for c in 1..classes {
            if logits[[c, y, x]] > logits[[best, y, x]] {
                best = c;
            }
        }
        best as u16
    });
    SegMask::new(labels, classes)
}

pub fn segment(p: &SegmenterParams, img: &Image) -> Result<SegMask> {
    let (h, w) = img.dims();
    if h == 0 || w == 0 {
        return Err(Error::Shape("segmenter input is empty".into()));
    }
    let (x, off) = padded(img);
    let (logits, _) = p.net.forward(&p.weights, &x);
    argmax(&crop(&logits, off, h, w), p.net.classes)
}

#[derive(Debug, Clone)]
pub struct TrainedSegmenter {
    pub params: SegmenterParams,
    /// Mean cross-entropy per epoch.
    pub loss_log: Vec<f64>,
    /// Mean foreground Dice over the training set after training.
    pub train_dice: f64,
}

/// Cross-entropy value and logit gradient (mean over pixels).
fn cross_entropy(logits: &Array3<f64>, labels: &Array2<u16>) -> (f64, Array3<f64>) {
    let n = labels.len() as f64;
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    for ((y, x), &l) in labels.indexed_iter() {
        let l = usize::from(l);
        loss -= grad[[l, y, x]].max(1e-300).ln();
        grad[[l, y, x]] -= 1.0;
    }
    grad.mapv_inplace(|v| v / n);
    (loss / n, grad)
}

pub fn train_segmenter(tgt: &Dataset, cfg: &SegmenterConfig) -> Result<TrainedSegmenter> {
    if cfg.epochs == 0 || cfg.base_width == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Parameter("segmenter epochs, width and learning rate must be positive".into()));
    }
    let masks = tgt.masks()?;
    let classes = masks.iter().map(|m| m.classes()).max().unwrap_or(2).max(2);
    let mut params = SegmenterParams::new(cfg.base_width, classes, cfg.seed)?;
    let mut adam = Adam::new(&params.weights, 0.9, 0.999);
    let inputs: Vec<(Array3<f64>, (usize, usize))> = tgt.images().map(padded).collect();
    let mut loss_log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..tgt.len()).collect();
        order.shuffle(&mut rng::item_stream(cfg.seed, "segmenter-order", epoch));
        let mut total = 0.0;
        for &i in &order {
            let (x, off) = &inputs[i];
            let labels = masks[i].labels();
            let (h, w) = labels.dim();
            let (logits, cache) = params.net.forward(&params.weights, x);
            let (loss, dcrop) = cross_entropy(&crop(&logits, *off, h, w), labels);
            let mut dlogits = Array3::zeros(logits.dim());
            dlogits.slice_mut(s![.., off.0..off.0 + h, off.1..off.1 + w]).assign(&dcrop);
            let mut grads = params.weights.zeros_like();
            params.net.backward(&params.weights, &mut grads, &cache, &dlogits);
            adam.step(&mut params.weights, &grads, cfg.learning_rate);
            total += loss;
        }
        loss_log.push(total / tgt.len() as f64);
        if !params.weights.is_finite() {
            return Err(Error::Degenerate(format!("segmenter diverged at epoch {epoch}")));
        }
    }
    let mut dice = 0.0;
    for (img, gt) in tgt.images().zip(&masks) {
        dice += sua_metrics::segmentation_metrics(&segment(&params, img)?, gt)?.dice;
    }
    Ok(TrainedSegmenter {
        params,
        loss_log,
        train_dice: dice / tgt.len() as f64,
    })
}
