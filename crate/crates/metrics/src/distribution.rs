use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sua_core::{ensure_same_dims, Error, Image, Result};

/// Default bin count (8-bit data).
pub const DEFAULT_BINS: usize = 256;

/// Normalized intensity histogram over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    masses: Vec<f64>,
}

impl Histogram {
    /// Validates non-negative masses summing to one.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::Parameter(format!("histogram needs >= 2 bins, got {}", masses.len())));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Parameter("histogram masses must be finite and non-negative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("histogram masses sum to {total}")));
        }
        Ok(Self { masses })
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Mean bin mass, always `1 / N`.
    pub fn mean(&self) -> f64 {
        self.masses.iter().sum::<f64>() / self.bins() as f64
    }
}

/// Bin of a value: `floor(v * N)`, with `v = 1` (and anything above) in the
/// last bin. Values below zero land in bin 0.
#[inline]
pub fn bin_of(v: f64, bins: usize) -> usize {
    if v.is_nan() || v <= 0.0 {
        return 0;
    }
    ((v * bins as f64).floor() as usize).min(bins - 1)
}

fn from_counts(counts: Vec<u64>, total: u64) -> Result<Histogram> {
    if total == 0 {
        return Err(Error::Degenerate("histogram of zero pixels".into()));
    }
    Histogram::new(counts.into_iter().map(|c| c as f64 / total as f64).collect())
}

pub fn histogram(img: &Image, bins: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::Parameter(format!("histogram needs >= 2 bins, got {bins}")));
    }
    let mut counts = vec![0u64; bins];
    for v in img.values() {
        counts[bin_of(f64::from(v), bins)] += 1;
    }
    from_counts(counts, img.len() as u64)
}

/// Histogram restricted to pixels where `mask` is true.
pub fn histogram_masked(img: &Image, mask: &Array2<bool>, bins: usize) -> Result<Histogram> {
    ensure_same_dims("masked histogram", img.dims(), mask.dim())?;
    if bins < 2 {
        return Err(Error::Parameter(format!("histogram needs >= 2 bins, got {bins}")));
    }
    let mut counts = vec![0u64; bins];
    let mut total = 0;
    for (v, &m) in img.array().iter().zip(mask.iter()) {
        if m {
            counts[bin_of(f64::from(*v), bins)] += 1;
            total += 1;
        }
    }
    from_counts(counts, total)
}

/// Bin-wise mean of several histograms.
pub fn mean_histogram(hists: &[Histogram]) -> Result<Histogram> {
    let first = hists
        .first()
        .ok_or_else(|| Error::Parameter("no histograms to average".into()))?;
    let mut acc = vec![0.0; first.bins()];
    for h in hists {
        check_bins(first, h)?;
        for (a, m) in acc.iter_mut().zip(h.masses()) {
            *a += m;
        }
    }
    let n = hists.len() as f64;
    Histogram::new(acc.into_iter().map(|a| a / n).collect())
}

fn check_bins(a: &Histogram, b: &Histogram) -> Result<()> {
    if a.bins() != b.bins() {
        return Err(Error::Parameter(format!("bin counts differ: {} vs {}", a.bins(), b.bins())));
    }
    Ok(())
}

/// `sqrt(1 - sum sqrt(H1 H2) / sqrt(mean1 mean2 N^2))`, with the inner term
/// clamped to `[0, 1]`.
pub fn bhattacharyya(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    check_bins(h1, h2)?;
    // mean_k * N is the total mass of H_k; using the sums directly keeps
    // identical histograms at exactly zero distance.
    let s1: f64 = h1.masses().iter().sum();
    let s2: f64 = h2.masses().iter().sum();
    let overlap: f64 = h1
        .masses()
        .iter()
        .zip(h2.masses())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    let inner = 1.0 - overlap / (s1 * s2).sqrt();
    Ok(inner.clamp(0.0, 1.0).sqrt())
}

/// Pearson correlation of bin masses. Zero variance in either histogram is
/// reported as [`Error::Degenerate`].
pub fn correlation(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    check_bins(h1, h2)?;
    let (m1, m2) = (h1.mean(), h2.mean());
    let (mut cov, mut v1, mut v2) = (0.0, 0.0, 0.0);
    for (a, b) in h1.masses().iter().zip(h2.masses()) {
        let (da, db) = (a - m1, b - m2);
        cov += da * db;
        v1 += da * da;
        v2 += db * db;
    }
    if v1 == 0.0 || v2 == 0.0 {
        return Err(Error::Degenerate("correlation of a flat histogram".into()));
    }
    Ok((cov / (v1 * v2).sqrt()).clamp(-1.0, 1.0))
}
