//! Matched forward/inverse deformations built from a sequence of small
//! displacement steps.
//!
//! With `S_i = Id + v_i / N` the forward map is `S_{N-1} o ... o S_0` and the
//! inverse is `T_0 o ... o T_{N-1}` with `T_i = Id - v_i / N`. Both are
//! evaluated by tracking each grid point through the factors, sampling the
//! velocities bilinearly.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sua_core::{ensure_same_dims, io, AdmmConfig, Error, Result, VectorField};

use crate::warp::sample_field;

/// Largest per-factor displacement allowed by [`integrate`].
pub const DEFAULT_STEP_CAP: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct DiffeoPair {
    pub forward: VectorField,
    pub inverse: VectorField,
    /// Velocities after any rescaling; empty for pairs loaded from disk.
    pub velocities: Vec<VectorField>,
    pub steps: usize,
    /// Factor applied to each velocity to respect the step cap (1 if none).
    pub rescale: Vec<f64>,
}

/// Sidecar written next to the two displacement tensors.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiffeoMeta {
    pub steps: usize,
    pub rescale: Vec<f64>,
    pub height: usize,
    pub width: usize,
    pub config: Option<AdmmConfig>,
}

impl DiffeoPair {
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            forward: VectorField::zeros(height, width),
            inverse: VectorField::zeros(height, width),
            velocities: Vec::new(),
            steps: 0,
            rescale: Vec::new(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.forward.dims()
    }

    pub fn meta(&self, config: Option<&AdmmConfig>) -> DiffeoMeta {
        let (height, width) = self.dims();
        DiffeoMeta {
            steps: self.steps,
            rescale: self.rescale.clone(),
            height,
            width,
            config: config.cloned(),
        }
    }

    pub fn save(
        &self,
        forward: impl AsRef<Path>,
        inverse: impl AsRef<Path>,
        meta: impl AsRef<Path>,
        config: Option<&AdmmConfig>,
    ) -> Result<()> {
        io::save_field(&self.forward, forward)?;
        io::save_field(&self.inverse, inverse)?;
        let meta_path = meta.as_ref();
        let text = serde_json::to_string_pretty(&self.meta(config))
            .map_err(|e| Error::Format(format!("deformation metadata: {e}")))?;
        std::fs::write(meta_path, text).map_err(|e| Error::io(meta_path, e))
    }

    pub fn load(
        forward: impl AsRef<Path>,
        inverse: impl AsRef<Path>,
        meta: impl AsRef<Path>,
    ) -> Result<(Self, DiffeoMeta)> {
        let fwd = io::load_field(forward)?;
        let inv = io::load_field(inverse)?;
        ensure_same_dims("deformation pair", fwd.dims(), inv.dims())?;
        let meta_path = meta.as_ref();
        let text = std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
        let meta: DiffeoMeta = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("deformation metadata: {e}")))?;
        if (meta.height, meta.width) != fwd.dims() {
            return Err(Error::Format("metadata dims disagree with tensors".into()));
        }
        let pair = Self {
            forward: fwd,
            inverse: inv,
            velocities: Vec::new(),
            steps: meta.steps,
            rescale: meta.rescale.clone(),
        };
        Ok((pair, meta))
    }
}

/// Integrates `velocities` with `N = velocities.len()` under the default cap.
pub fn integrate(velocities: &[VectorField]) -> Result<DiffeoPair> {
    integrate_with_cap(velocities, DEFAULT_STEP_CAP)
}

pub fn integrate_with_cap(velocities: &[VectorField], cap: f64) -> Result<DiffeoPair> {
    let first = velocities
        .first()
        .ok_or_else(|| Error::Parameter("no velocities to integrate".into()))?;
    if !(cap > 0.0) {
        return Err(Error::Parameter(format!("step cap must be positive, got {cap}")));
    }
    let dims = first.dims();
    let n = velocities.len();
    let mut scaled = Vec::with_capacity(n);
    let mut rescale = Vec::with_capacity(n);
    for v in velocities {
        ensure_same_dims("velocity list", dims, v.dims())?;
        if !v.is_finite() {
            return Err(Error::Parameter("non-finite velocity".into()));
        }
        let step = v.max_norm() / n as f64;
        if step > cap {
            let f = cap / step;
            scaled.push(v.scaled(f));
            rescale.push(f);
        } else {
            scaled.push(v.clone());
            rescale.push(1.0);
        }
    }
    let inv_n = 1.0 / n as f64;
    let forward = track(dims, scaled.iter(), inv_n)?;
    let inverse = track(dims, scaled.iter().rev(), -inv_n)?;
    Ok(DiffeoPair {
        forward,
        inverse,
        velocities: scaled,
        steps: n,
        rescale,
    })
}

/// Pushes every grid point through `p <- p + factor * v(p)` for each
/// velocity in order and returns the total displacement.
fn track<'a>(
    dims: (usize, usize),
    velocities: impl Iterator<Item = &'a VectorField> + Clone,
    factor: f64,
) -> Result<VectorField> {
    let (h, w) = dims;
    let mut dx = Array2::<f64>::zeros(dims);
    let mut dy = Array2::<f64>::zeros(dims);
    for y in 0..h {
        for x in 0..w {
            let (mut px, mut py) = (x as f64, y as f64);
            for v in velocities.clone() {
                let (vx, vy) = sample_field(v, py, px);
                px += factor * vx;
                py += factor * vy;
            }
            dx[[y, x]] = px - x as f64;
            dy[[y, x]] = py - y as f64;
        }
    }
    VectorField::from_f64(&dx, &dy)
}

/// Displacement of `outer o inner`: `inner(p) + outer(p + inner(p))`.
pub fn compose(outer: &VectorField, inner: &VectorField) -> Result<VectorField> {
    ensure_same_dims("compose", outer.dims(), inner.dims())?;
    let (h, w) = inner.dims();
    let mut dx = Array2::<f64>::zeros((h, w));
    let mut dy = Array2::<f64>::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let (ix, iy) = inner.at(y, x);
            let (ix, iy) = (f64::from(ix), f64::from(iy));
            let (ox, oy) = sample_field(outer, y as f64 + iy, x as f64 + ix);
            dx[[y, x]] = ix + ox;
            dy[[y, x]] = iy + oy;
        }
    }
    VectorField::from_f64(&dx, &dy)
}

/// Endpoint error statistics of a displacement field over the interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointStats {
    pub mean: f64,
    pub max: f64,
}

/// Mean and max displacement magnitude, ignoring `margin` border pixels.
pub fn endpoint_stats(field: &VectorField, margin: usize) -> EndpointStats {
    let (h, w) = field.dims();
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut count = 0usize;
    for y in margin..h.saturating_sub(margin) {
        for x in margin..w.saturating_sub(margin) {
            let (a, b) = field.at(y, x);
            let e = f64::from(a).hypot(f64::from(b));
            sum += e;
            max = max.max(e);
            count += 1;
        }
    }
    EndpointStats {
        mean: if count > 0 { sum / count as f64 } else { 0.0 },
        max,
    }
}

/// Endpoint error between two displacement fields over the interior.
pub fn endpoint_error(a: &VectorField, b: &VectorField, margin: usize) -> Result<EndpointStats> {
    ensure_same_dims("endpoint error", a.dims(), b.dims())?;
    let diff = VectorField::new(&a.dx - &b.dx, &a.dy - &b.dy)?;
    Ok(endpoint_stats(&diff, margin))
}

/// `|| (forward o inverse)(p) - p ||` statistics over the interior.
pub fn inverse_consistency(pair: &DiffeoPair, margin: usize) -> Result<EndpointStats> {
    Ok(endpoint_stats(&compose(&pair.forward, &pair.inverse)?, margin))
}
