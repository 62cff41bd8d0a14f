use ndarray::Array2;
use sua_core::{ensure_same_dims, Error, Image, Result};

use crate::filter::gaussian_blur;

/// Structure image: a source image attenuated by a softened structure mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedStructure {
    pub image: Image,
    /// Blurred mask renormalized to a peak of one.
    pub softened: Array2<f64>,
}

/// Blurs `mask` with a Gaussian of `sigma` pixels, rescales it to peak 1 and
/// multiplies it into `img`.
pub fn compose_structure(mask: &Array2<bool>, img: &Image, sigma: f64) -> Result<ComposedStructure> {
    ensure_same_dims("compose_structure", mask.dim(), img.dims())?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let hard = mask.mapv(|m| if m { 1.0 } else { 0.0 });
    let mut softened = gaussian_blur(&hard, sigma);
    let peak = softened.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        softened.mapv_inplace(|v| (v / peak).clamp(0.0, 1.0));
    }
    let src = img.to_f64();
    let image = Image::from_f64(&(&softened * &src));
    Ok(ComposedStructure { image, softened })
}
