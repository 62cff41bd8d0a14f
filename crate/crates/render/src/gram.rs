use ndarray::{Array2, Array3};

/// `F F^T` over flattened channels, without normalization.
pub fn gram_unnormalized(features: &Array3<f64>) -> Array2<f64> {
    let (c, h, w) = features.dim();
    let f = features.view().into_shape_with_order((c, h * w)).expect("standard layout");
    f.dot(&f.t())
}

/// Channel Gram matrix divided by `C * H * W`.
pub fn gram(features: &Array3<f64>) -> Array2<f64> {
    let n = features.len().max(1) as f64;
    gram_unnormalized(features) / n
}

/// Gradient of `<dg, gram(F)>` with respect to `F`.
pub(crate) fn gram_backward(features: &Array3<f64>, dg: &Array2<f64>) -> Array3<f64> {
    let (c, h, w) = features.dim();
    let n = features.len().max(1) as f64;
    let f = features.view().into_shape_with_order((c, h * w)).expect("standard layout");
    let sym = (dg + &dg.t()) / n;
    sym.dot(&f).into_shape_with_order((c, h, w)).expect("feature layout")
}
