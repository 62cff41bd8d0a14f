//! Pixel carriers: scalar images, two-component vector fields and label masks.
//!
//! All grids are row-major with `(row, column)` = `(y, x)` indexing. Images
//! and fields store `f32` so that the raw tensor format round-trips them
//! bit-exactly; numerical code widens to `f64` internally.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Smallest height/width accepted at pipeline entry points.
pub const MIN_PIPELINE_DIM: usize = 8;

/// Scalar intensity grid. Pipeline images hold values in `[0, 1]`; derived
/// grids (e.g. Jacobian determinants) reuse the type without that bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    data: Array2<f32>,
}

impl Image {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        Self {
            data: Array2::from_elem((height, width), value),
        }
    }

    pub fn from_array(data: Array2<f32>) -> Self {
        Self { data }
    }

    /// Builds an image from a row-major vector of `height * width` values.
    pub fn from_vec(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        let data = Array2::from_shape_vec((height, width), values)
            .map_err(|e| Error::Shape(format!("image buffer: {e}")))?;
        Ok(Self { data })
    }

    /// Builds an image by evaluating `f(y, x)` in double precision.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            data: Array2::from_shape_fn((height, width), |(y, x)| f(y, x) as f32),
        }
    }

    pub fn from_f64(data: &Array2<f64>) -> Self {
        Self {
            data: data.mapv(|v| v as f32),
        }
    }

    pub fn height(&self) -> usize {
        self.data.nrows()
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    /// `(height, width)`.
    pub fn dims(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[[y, x]]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f32) {
        self.data[[y, x]] = v;
    }

    pub fn array(&self) -> &Array2<f32> {
        &self.data
    }

    pub fn array_mut(&mut self) -> &mut Array2<f32> {
        &mut self.data
    }

    pub fn into_array(self) -> Array2<f32> {
        self.data
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }

    /// Row-major iterator over pixel values.
    pub fn values(&self) -> impl Iterator<Item = f32> + '_ {
        self.data.iter().copied()
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Image {
        Image {
            data: self.data.mapv(f),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// True when every value is finite and inside `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }

    /// Clamps to `[0, 1]`, mapping non-finite values to zero.
    pub fn clamp01(&self) -> Image {
        self.map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 })
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }

    /// Checks the invariants required at pipeline entry points.
    pub fn validate_for_pipeline(&self) -> Result<()> {
        let (h, w) = self.dims();
        if h < MIN_PIPELINE_DIM || w < MIN_PIPELINE_DIM {
            return Err(Error::Shape(format!(
                "image is {h}x{w}, pipeline requires at least {MIN_PIPELINE_DIM}x{MIN_PIPELINE_DIM}"
            )));
        }
        if !self.is_normalized() {
            return Err(Error::Parameter(
                "image values must be finite and within [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Per-pixel displacement in pixel units; `dx` along columns, `dy` along rows.
///
/// A deformation `phi` is stored as displacement from identity, so
/// `phi(y, x) = (y + dy[y, x], x + dx[y, x])`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub dx: Array2<f32>,
    pub dy: Array2<f32>,
}

impl VectorField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            dx: Array2::zeros((height, width)),
            dy: Array2::zeros((height, width)),
        }
    }

    pub fn new(dx: Array2<f32>, dy: Array2<f32>) -> Result<Self> {
        if dx.dim() != dy.dim() {
            return Err(Error::Shape(format!(
                "field components differ: {:?} vs {:?}",
                dx.dim(),
                dy.dim()
            )));
        }
        Ok(Self { dx, dy })
    }

    /// Evaluates `f(y, x) -> (dx, dy)` in double precision.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Self {
        let mut field = Self::zeros(height, width);
        for y in 0..height {
            for x in 0..width {
                let (dx, dy) = f(y, x);
                field.dx[[y, x]] = dx as f32;
                field.dy[[y, x]] = dy as f32;
            }
        }
        field
    }

    pub fn from_f64(dx: &Array2<f64>, dy: &Array2<f64>) -> Result<Self> {
        Self::new(dx.mapv(|v| v as f32), dy.mapv(|v| v as f32))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dx.dim()
    }

    pub fn height(&self) -> usize {
        self.dx.nrows()
    }

    pub fn width(&self) -> usize {
        self.dx.ncols()
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> (f32, f32) {
        (self.dx[[y, x]], self.dy[[y, x]])
    }

    pub fn is_finite(&self) -> bool {
        self.dx.iter().chain(self.dy.iter()).all(|v| v.is_finite())
    }

    /// Largest displacement magnitude over all pixels.
    pub fn max_norm(&self) -> f64 {
        self.dx
            .iter()
            .zip(self.dy.iter())
            .map(|(&a, &b)| f64::from(a).hypot(f64::from(b)))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> VectorField {
        VectorField {
            dx: self.dx.mapv(|v| (f64::from(v) * factor) as f32),
            dy: self.dy.mapv(|v| (f64::from(v) * factor) as f32),
        }
    }

    /// True when every displacement component is exactly zero.
    pub fn is_identity(&self) -> bool {
        self.dx.iter().chain(self.dy.iter()).all(|&v| v == 0.0)
    }
}

/// Per-pixel class labels in `0..classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    labels: Array2<u16>,
    classes: usize,
}

impl SegMask {
    pub fn new(labels: Array2<u16>, classes: usize) -> Result<Self> {
        if classes == 0 || classes > usize::from(u16::MAX) + 1 {
            return Err(Error::Parameter(format!("class count {classes} out of range")));
        }
        if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= classes) {
            return Err(Error::Parameter(format!(
                "label {bad} not below class count {classes}"
            )));
        }
        Ok(Self { labels, classes })
    }

    pub fn zeros(height: usize, width: usize, classes: usize) -> Self {
        Self {
            labels: Array2::zeros((height, width)),
            classes: classes.max(1),
        }
    }

    /// Two-class mask: `true` is foreground (label 1).
    pub fn from_binary(mask: &Array2<bool>) -> Self {
        Self {
            labels: mask.mapv(u16::from),
            classes: 2,
        }
    }

    pub fn labels(&self) -> &Array2<u16> {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dims(&self) -> (usize, usize) {
        self.labels.dim()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u16 {
        self.labels[[y, x]]
    }

    /// Indicator of one class as an image of zeros and ones.
    pub fn indicator(&self, class: u16) -> Image {
        Image::from_array(self.labels.mapv(|l| if l == class { 1.0 } else { 0.0 }))
    }

    /// Foreground indicator: any non-zero label.
    pub fn foreground(&self) -> Array2<bool> {
        self.labels.mapv(|l| l != 0)
    }

    pub fn count(&self, class: u16) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }
}
