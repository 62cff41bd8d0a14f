//! Feature-map operations on single samples, `C x H x W`, each with its
//! backward pass.

use ndarray::{Array1, Array2, Array3, Axis};

use super::params::{ParamId, ParamSet};

/// Output length of a strided window.
pub fn out_len(n: usize, k: usize, stride: usize, pad: usize) -> usize {
    assert!(n + 2 * pad >= k, "window larger than padded input");
    (n + 2 * pad - k) / stride + 1
}

/// Rows indexed by `(c, ky, kx)`, columns by output position.
pub fn im2col(x: &Array3<f64>, k: usize, stride: usize, pad: usize) -> Array2<f64> {
    let (c, h, w) = x.dim();
    let (ho, wo) = (out_len(h, k, stride, pad), out_len(w, k, stride, pad));
    let mut cols = Array2::zeros((c * k * k, ho * wo));
    let xs = x.as_slice().expect("standard layout");
    let out = cols.as_slice_mut().expect("standard layout");
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = ((ci * k + ky) * k + kx) * ho * wo;
                for oy in 0..ho {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = (ci * h + iy as usize) * w;
                    let dst = row + oy * wo;
                    for ox in 0..wo {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            out[dst + ox] = xs[src + ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatters columns back onto a `c x h x w` map.
pub fn col2im(cols: &Array2<f64>, c: usize, h: usize, w: usize, k: usize, stride: usize, pad: usize) -> Array3<f64> {
    let (ho, wo) = (out_len(h, k, stride, pad), out_len(w, k, stride, pad));
    assert_eq!(cols.dim(), (c * k * k, ho * wo), "column matrix shape");
    let mut x = Array3::zeros((c, h, w));
    let cs = cols.as_standard_layout();
    let src_all = cs.as_slice().expect("standard layout");
    let xs = x.as_slice_mut().expect("standard layout");
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = ((ci * k + ky) * k + kx) * ho * wo;
                for oy in 0..ho {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = (ci * h + iy as usize) * w;
                    let src = row + oy * wo;
                    for ox in 0..wo {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            xs[dst + ix as usize] += src_all[src + ox];
                        }
                    }
                }
            }
        }
    }
    x
}

fn as_matrix(x: &Array3<f64>) -> ndarray::ArrayView2<'_, f64> {
    let (c, h, w) = x.dim();
    x.view().into_shape_with_order((c, h * w)).expect("standard layout")
}

fn channel_sums(dy: &Array3<f64>) -> Array1<f64> {
    dy.sum_axis(Axis(2)).sum_axis(Axis(1))
}

fn add_grad_matrix(grads: &mut ParamSet, id: ParamId, m: &Array2<f64>) {
    let mut g = grads
        .get_mut(id)
        .view_mut()
        .into_shape_with_order(m.dim())
        .expect("gradient layout");
    g += m;
}

fn add_grad(grads: &mut ParamSet, id: ParamId, g: ndarray::ArrayViewD<'_, f64>) {
    *grads.get_mut(id) += &g;
}

/// Strided convolution with bias. Weight shape `[cout, cin, k, k]`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub w: ParamId,
    pub b: ParamId,
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    cols: Array2<f64>,
    in_dims: (usize, usize, usize),
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ps: &mut ParamSet,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        rng: &mut impl rand::Rng,
    ) -> Self {
        let w = ps.add_normal(format!("{name}.weight"), &[cout, cin, k, k], INIT_STD, rng);
        let b = ps.add_filled(format!("{name}.bias"), &[cout], 0.0);
        Self {
            w,
            b,
            cin,
            cout,
            k,
            stride,
            pad,
        }
    }

    fn weight<'a>(&self, ps: &'a ParamSet) -> ndarray::ArrayView2<'a, f64> {
        ps.get(self.w)
            .view()
            .into_shape_with_order((self.cout, self.cin * self.k * self.k))
            .expect("weight layout")
    }

    pub fn forward(&self, ps: &ParamSet, x: &Array3<f64>) -> (Array3<f64>, ConvCache) {
        let (c, h, w) = x.dim();
        assert_eq!(c, self.cin, "conv input channels");
        let (ho, wo) = (out_len(h, self.k, self.stride, self.pad), out_len(w, self.k, self.stride, self.pad));
        let cols = if self.k == 1 && self.stride == 1 && self.pad == 0 {
            as_matrix(x).to_owned()
        } else {
            im2col(x, self.k, self.stride, self.pad)
        };
        let mut y = self.weight(ps).dot(&cols);
        let b = ps.get(self.b);
        for (mut row, &bias) in y.rows_mut().into_iter().zip(b.iter()) {
            row += bias;
        }
        let y = y.into_shape_with_order((self.cout, ho, wo)).expect("output layout");
        (y, ConvCache { cols, in_dims: (c, h, w) })
    }

    pub fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, cache: &ConvCache, dy: &Array3<f64>) -> Array3<f64> {
        let dy_mat = as_matrix(dy);
        let dw = dy_mat.dot(&cache.cols.t());
        add_grad_matrix(grads, self.w, &dw);
        add_grad(grads, self.b, channel_sums(dy).into_dyn().view());
        let dcols = self.weight(ps).t().dot(&dy_mat);
        let (c, h, w) = cache.in_dims;
        if self.k == 1 && self.stride == 1 && self.pad == 0 {
            dcols.into_shape_with_order((c, h, w)).expect("input layout")
        } else {
            col2im(&dcols, c, h, w, self.k, self.stride, self.pad)
        }
    }
}

/// Transposed convolution (the adjoint of a strided convolution) with bias.
/// Weight shape `[cin, cout, k, k]`; output side `(n - 1) * stride - 2 pad + k`.
#[derive(Debug, Clone)]
pub struct ConvTranspose2d {
    pub w: ParamId,
    pub b: ParamId,
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

#[derive(Debug, Clone)]
pub struct ConvTCache {
    x: Array2<f64>,
    in_dims: (usize, usize, usize),
}

impl ConvTranspose2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ps: &mut ParamSet,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        rng: &mut impl rand::Rng,
    ) -> Self {
        let w = ps.add_normal(format!("{name}.weight"), &[cin, cout, k, k], INIT_STD, rng);
        let b = ps.add_filled(format!("{name}.bias"), &[cout], 0.0);
        Self {
            w,
            b,
            cin,
            cout,
            k,
            stride,
            pad,
        }
    }

    fn weight<'a>(&self, ps: &'a ParamSet) -> ndarray::ArrayView2<'a, f64> {
        ps.get(self.w)
            .view()
            .into_shape_with_order((self.cin, self.cout * self.k * self.k))
            .expect("weight layout")
    }

    pub fn out_len(&self, n: usize) -> usize {
        (n - 1) * self.stride + self.k - 2 * self.pad
    }

    pub fn forward(&self, ps: &ParamSet, x: &Array3<f64>) -> (Array3<f64>, ConvTCache) {
        let (c, h, w) = x.dim();
        assert_eq!(c, self.cin, "transposed conv input channels");
        let xm = as_matrix(x).to_owned();
        let cols = self.weight(ps).t().dot(&xm);
        let (ho, wo) = (self.out_len(h), self.out_len(w));
        let mut y = col2im(&cols, self.cout, ho, wo, self.k, self.stride, self.pad);
        for (mut plane, &bias) in y.outer_iter_mut().zip(ps.get(self.b).iter()) {
            plane += bias;
        }
        (y, ConvTCache { x: xm, in_dims: (c, h, w) })
    }

    pub fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, cache: &ConvTCache, dy: &Array3<f64>) -> Array3<f64> {
        let dcols = im2col(dy, self.k, self.stride, self.pad);
        let dw = cache.x.dot(&dcols.t());
        add_grad_matrix(grads, self.w, &dw);
        add_grad(grads, self.b, channel_sums(dy).into_dyn().view());
        let (c, h, w) = cache.in_dims;
        self.weight(ps).dot(&dcols).into_shape_with_order((c, h, w)).expect("input layout")
    }
}

/// Per-channel normalization over space with a learned scale and shift.
#[derive(Debug, Clone)]
pub struct InstanceNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub channels: usize,
}

pub const NORM_EPS: f64 = 1e-5;
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct NormCache {
    xhat: Array3<f64>,
    inv_std: Array1<f64>,
}

impl InstanceNorm {
    pub fn new(ps: &mut ParamSet, name: &str, channels: usize) -> Self {
        let gamma = ps.add_filled(format!("{name}.gamma"), &[channels], 1.0);
        let beta = ps.add_filled(format!("{name}.beta"), &[channels], 0.0);
        Self { gamma, beta, channels }
    }

    pub fn forward(&self, ps: &ParamSet, x: &Array3<f64>) -> (Array3<f64>, NormCache) {
        let (c, h, w) = x.dim();
        let n = (h * w) as f64;
        let mut xhat = Array3::zeros((c, h, w));
        let mut inv_std = Array1::zeros(c);
        let mut y = Array3::zeros((c, h, w));
        let (g, b) = (ps.get(self.gamma), ps.get(self.beta));
        for ch in 0..c {
            let plane = x.index_axis(Axis(0), ch);
            let mean = plane.sum() / n;
            let var = plane.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let is = 1.0 / (var + NORM_EPS).sqrt();
            inv_std[ch] = is;
            let (gc, bc) = (g[ch], b[ch]);
            ndarray::Zip::from(xhat.index_axis_mut(Axis(0), ch))
                .and(y.index_axis_mut(Axis(0), ch))
                .and(plane)
                .for_each(|xh, y, &v| {
                    *xh = (v - mean) * is;
                    *y = gc * *xh + bc;
                });
        }
        (y, NormCache { xhat, inv_std })
    }

    pub fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, cache: &NormCache, dy: &Array3<f64>) -> Array3<f64> {
        let (c, h, w) = dy.dim();
        let n = (h * w) as f64;
        let g = ps.get(self.gamma);
        let mut dgamma = Array1::zeros(c);
        let mut dbeta = Array1::zeros(c);
        let mut dx = Array3::zeros((c, h, w));
        for ch in 0..c {
            let dyc = dy.index_axis(Axis(0), ch);
            let xh = cache.xhat.index_axis(Axis(0), ch);
            let sum_dy: f64 = dyc.sum();
            let sum_dy_xh: f64 = dyc.iter().zip(xh.iter()).map(|(a, b)| a * b).sum();
            dgamma[ch] = sum_dy_xh;
            dbeta[ch] = sum_dy;
            let k = g[ch] * cache.inv_std[ch] / n;
            ndarray::Zip::from(dx.index_axis_mut(Axis(0), ch))
                .and(dyc)
                .and(xh)
                .for_each(|d, &dy, &xh| *d = k * (n * dy - sum_dy - xh * sum_dy_xh));
        }
        add_grad(grads, self.gamma, dgamma.into_dyn().view());
        add_grad(grads, self.beta, dbeta.into_dyn().view());
        dx
    }
}

/// Fully connected layer on a flattened map. Weight shape `[out, in]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Linear {
    pub fn new(ps: &mut ParamSet, name: &str, inputs: usize, outputs: usize, rng: &mut impl rand::Rng) -> Self {
        let w = ps.add_normal(format!("{name}.weight"), &[outputs, inputs], INIT_STD, rng);
        let b = ps.add_filled(format!("{name}.bias"), &[outputs], 0.0);
        Self { w, b, inputs, outputs }
    }

    fn weight<'a>(&self, ps: &'a ParamSet) -> ndarray::ArrayView2<'a, f64> {
        ps.get(self.w)
            .view()
            .into_shape_with_order((self.outputs, self.inputs))
            .expect("weight layout")
    }

    pub fn forward(&self, ps: &ParamSet, x: &Array1<f64>) -> Array1<f64> {
        self.weight(ps).dot(x) + ps.get(self.b).view().into_dimensionality::<ndarray::Ix1>().expect("bias")
    }

    pub fn backward(&self, ps: &ParamSet, grads: &mut ParamSet, x: &Array1<f64>, dy: &Array1<f64>) -> Array1<f64> {
        let dw = dy
            .view()
            .insert_axis(Axis(1))
            .dot(&x.view().insert_axis(Axis(0)));
        add_grad_matrix(grads, self.w, &dw);
        add_grad(grads, self.b, dy.view().into_dyn());
        self.weight(ps).t().dot(dy)
    }
}

pub fn relu(x: &Array3<f64>) -> Array3<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient through ReLU given its output.
pub fn relu_backward(out: &Array3<f64>, dy: &Array3<f64>) -> Array3<f64> {
    ndarray::Zip::from(out).and(dy).map_collect(|&o, &d| if o > 0.0 { d } else { 0.0 })
}

pub fn leaky_relu(x: &Array3<f64>, slope: f64) -> Array3<f64> {
    x.mapv(|v| if v > 0.0 { v } else { slope * v })
}

/// Gradient through LeakyReLU given its input.
pub fn leaky_relu_backward(x: &Array3<f64>, dy: &Array3<f64>, slope: f64) -> Array3<f64> {
    ndarray::Zip::from(x).and(dy).map_collect(|&v, &d| if v > 0.0 { d } else { slope * d })
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Inverted dropout mask: kept units scaled by `1 / (1 - p)`.
pub fn dropout_mask(dims: (usize, usize, usize), p: f64, rng: &mut impl rand::Rng) -> Array3<f64> {
    let keep = 1.0 / (1.0 - p);
    Array3::from_shape_simple_fn(dims, || if rng.random::<f64>() < p { 0.0 } else { keep })
}

/// 2x2 average pooling with stride 2 (odd trailing rows/columns dropped).
pub fn avg_pool2(x: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = x.dim();
    Array3::from_shape_fn((c, h / 2, w / 2), |(ch, y, xx)| {
        0.25 * (x[[ch, 2 * y, 2 * xx]] + x[[ch, 2 * y, 2 * xx + 1]] + x[[ch, 2 * y + 1, 2 * xx]] + x[[ch, 2 * y + 1, 2 * xx + 1]])
    })
}

pub fn avg_pool2_backward(dy: &Array3<f64>, in_dims: (usize, usize, usize)) -> Array3<f64> {
    Array3::from_shape_fn(in_dims, |(ch, y, x)| {
        let (py, px) = (y / 2, x / 2);
        if py < dy.dim().1 && px < dy.dim().2 {
            0.25 * dy[[ch, py, px]]
        } else {
            0.0
        }
    })
}

/// Nearest-neighbour 2x upsampling.
pub fn upsample2(x: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = x.dim();
    Array3::from_shape_fn((c, 2 * h, 2 * w), |(ch, y, xx)| x[[ch, y / 2, xx / 2]])
}

pub fn upsample2_backward(dy: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = dy.dim();
    Array3::from_shape_fn((c, h / 2, w / 2), |(ch, y, x)| {
        dy[[ch, 2 * y, 2 * x]] + dy[[ch, 2 * y, 2 * x + 1]] + dy[[ch, 2 * y + 1, 2 * x]] + dy[[ch, 2 * y + 1, 2 * x + 1]]
    })
}

/// Channel concatenation.
pub fn concat(a: &Array3<f64>, b: &Array3<f64>) -> Array3<f64> {
    ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("matching spatial dims")
}

/// Splits a gradient of [`concat`] at channel `at`.
pub fn split(d: &Array3<f64>, at: usize) -> (Array3<f64>, Array3<f64>) {
    let (a, b) = d.view().split_at(Axis(0), at);
    (a.to_owned(), b.to_owned())
}
