//! Piecewise-constant Potts partitioning.
//!
//! The 2D energy is
//!
//! ```text
//! E(u) = sum_p (u_p - f_p)^2 + gamma * #{4-neighbor pairs with different labels}
//! ```
//!
//! It is minimized approximately by splitting `u` into a row-wise copy and a
//! column-wise copy coupled by a growing quadratic penalty with a multiplier.
//! Each half-step is a batch of exact 1D Potts problems solved by dynamic
//! programming. After every outer iteration the row jumps of one copy and the
//! column jumps of the other induce a partition into 4-connected regions,
//! whose means and exact energy are evaluated; the best partition seen so far
//! is kept, so the reported energy trace never increases.

use ndarray::Array2;
use sua_core::{Error, Image, PottsConfig, Result};

/// Piecewise-constant approximation of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMap {
    /// Region index per pixel, `0..values.len()`, numbered in raster order of
    /// first appearance.
    pub labels: Array2<u32>,
    /// Mean source intensity of each region.
    pub values: Vec<f64>,
    /// Potts energy of the partition.
    pub energy: f64,
    /// Best energy after each outer iteration, starting with the
    /// single-region partition.
    pub energy_trace: Vec<f64>,
    pub gamma: f64,
}

impl ClusterMap {
    pub fn dims(&self) -> (usize, usize) {
        self.labels.dim()
    }

    pub fn region_count(&self) -> usize {
        self.values.len()
    }

    /// Pixel count of each region.
    pub fn region_areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.values.len()];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    /// The piecewise-constant image `u*`.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.labels.mapv(|l| self.values[l as usize])
    }

    pub fn reconstruct_image(&self) -> Image {
        Image::from_f64(&self.reconstruct())
    }

    /// Number of 4-neighbor pairs whose labels differ.
    pub fn boundary_length(&self) -> usize {
        boundary_length(&self.labels)
    }

    /// Energy recomputed from the stored labels and values against `img`.
    pub fn recompute_energy(&self, img: &Image) -> f64 {
        let data: f64 = self
            .labels
            .iter()
            .zip(img.values())
            .map(|(&l, f)| (self.values[l as usize] - f64::from(f)).powi(2))
            .sum();
        data + self.gamma * self.boundary_length() as f64
    }
}

pub(crate) fn boundary_length(labels: &Array2<u32>) -> usize {
    let (h, w) = labels.dim();
    let mut n = 0;
    for y in 0..h {
        for x in 0..w {
            let l = labels[[y, x]];
            if x + 1 < w && labels[[y, x + 1]] != l {
                n += 1;
            }
            if y + 1 < h && labels[[y + 1, x]] != l {
                n += 1;
            }
        }
    }
    n
}

/// Exact solution of a weighted 1D Potts problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Potts1d {
    /// Start index of each segment; the first entry is always 0.
    pub starts: Vec<usize>,
    /// Optimal value (weighted mean) of each segment.
    pub values: Vec<f64>,
    /// `sum_i w_i (u_i - g_i)^2 + gamma * (segments - 1)`.
    pub energy: f64,
}

impl Potts1d {
    /// Expands the segment values back to one value per sample.
    pub fn expand(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        for (k, &start) in self.starts.iter().enumerate() {
            let end = self.starts.get(k + 1).copied().unwrap_or(len);
            out.extend(std::iter::repeat_n(self.values[k], end - start));
        }
        out
    }

    /// Jump indicator between `i` and `i + 1`, for `i in 0..len - 1`.
    pub fn jumps(&self, len: usize) -> Vec<bool> {
        let mut jumps = vec![false; len.saturating_sub(1)];
        for &s in &self.starts[1..] {
            jumps[s - 1] = true;
        }
        jumps
    }
}

/// Minimizes `sum_i w_i (u_i - g_i)^2 + gamma * #jumps(u)` exactly by dynamic
/// programming over the right-most segment, in `O(n^2)`.
pub fn potts_1d(signal: &[f64], weights: &[f64], gamma: f64) -> Potts1d {
    let n = signal.len();
    assert_eq!(n, weights.len(), "signal and weights differ in length");
    if n == 0 {
        return Potts1d {
            starts: Vec::new(),
            values: Vec::new(),
            energy: 0.0,
        };
    }
    // Prefix sums of w, w*g and w*g^2 give each interval's deviation in O(1).
    let mut sw = vec![0.0; n + 1];
    let mut swg = vec![0.0; n + 1];
    let mut swg2 = vec![0.0; n + 1];
    for i in 0..n {
        sw[i + 1] = sw[i] + weights[i];
        swg[i + 1] = swg[i] + weights[i] * signal[i];
        swg2[i + 1] = swg2[i] + weights[i] * signal[i] * signal[i];
    }
    let deviation = |l: usize, r: usize| -> f64 {
        let w = sw[r] - sw[l];
        if w <= 0.0 {
            return 0.0;
        }
        let m = swg[r] - swg[l];
        (swg2[r] - swg2[l] - m * m / w).max(0.0)
    };

    // best[r]: optimal energy of the prefix of length r; start[r]: start of its last segment.
    let mut best = vec![0.0; n + 1];
    let mut start = vec![0usize; n + 1];
    best[0] = -gamma;
    for r in 1..=n {
        let mut b = f64::INFINITY;
        let mut arg = 0;
        for l in (0..r).rev() {
            let d = deviation(l, r);
            // best[l] >= -gamma and the deviation only grows leftwards.
            if d > b {
                break;
            }
            let e = best[l] + gamma + d;
            if e < b {
                b = e;
                arg = l;
            }
        }
        best[r] = b;
        start[r] = arg;
    }

    let mut starts = Vec::new();
    let mut r = n;
    while r > 0 {
        let l = start[r];
        starts.push(l);
        r = l;
    }
    starts.reverse();
    let values = starts
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let r = starts.get(k + 1).copied().unwrap_or(n);
            let w = sw[r] - sw[l];
            if w > 0.0 {
                (swg[r] - swg[l]) / w
            } else {
                signal[l..r].iter().sum::<f64>() / (r - l) as f64
            }
        })
        .collect();
    Potts1d {
        starts,
        values,
        energy: best[n],
    }
}

/// Computes the Potts clustering map of `img` with jump penalty `gamma`.
pub fn potts_cluster(img: &Image, gamma: f64) -> Result<ClusterMap> {
    potts_cluster_with(img, &PottsConfig::with_gamma(gamma))
}

pub fn potts_cluster_with(img: &Image, cfg: &PottsConfig) -> Result<ClusterMap> {
    if !(cfg.gamma >= 0.0 && cfg.gamma.is_finite()) {
        return Err(Error::Parameter(format!("gamma must be >= 0, got {}", cfg.gamma)));
    }
    cfg.validate()?;
    if img.is_empty() {
        return Err(Error::Shape("empty image".into()));
    }
    let f = img.to_f64();
    let (h, w) = f.dim();
    let gamma = cfg.gamma;

    // Single-region partition: the reference every iterate must beat.
    let mut best = partition_map(&f, Array2::zeros((h, w)), gamma);
    let mut trace = vec![best.energy];

    // A 1D domain is solved exactly; the split scheme is only needed in 2D.
    if h == 1 || w == 1 {
        let line: Vec<f64> = f.iter().copied().collect();
        let sol = potts_1d(&line, &vec![1.0; line.len()], gamma);
        let jumps = sol.jumps(line.len());
        let (row_jumps, col_jumps) = if h == 1 {
            (Array2::from_shape_vec((1, w - 1), jumps).expect("row jumps"), Array2::from_elem((0, w), false))
        } else {
            (Array2::from_elem((h, 0), false), Array2::from_shape_vec((h - 1, 1), jumps).expect("col jumps"))
        };
        let cand = partition_map(&f, label_components(&row_jumps, &col_jumps, h, w), gamma);
        if cand.energy < best.energy {
            best = cand;
        }
        trace.push(best.energy);
        best.energy_trace = trace;
        return Ok(best);
    }

    let mut u = f.clone();
    let mut v = f.clone();
    let mut mult = Array2::<f64>::zeros((h, w));
    let mut mu = cfg.coupling_start;
    let jump = 2.0 * gamma;
    let mut row_jumps = Array2::from_elem((h, w - 1), false);
    let mut col_jumps = Array2::from_elem((h - 1, w), false);
    let mut previous = f64::INFINITY;

    for _ in 0..cfg.max_iterations {
        let weight = vec![1.0 + mu; w];
        for y in 0..h {
            let g: Vec<f64> = (0..w)
                .map(|x| (f[[y, x]] + mu * v[[y, x]] - mult[[y, x]]) / (1.0 + mu))
                .collect();
            let sol = potts_1d(&g, &weight, jump);
            for (x, val) in sol.expand(w).into_iter().enumerate() {
                u[[y, x]] = val;
            }
            for (x, j) in sol.jumps(w).into_iter().enumerate() {
                row_jumps[[y, x]] = j;
            }
        }
        let weight = vec![1.0 + mu; h];
        for x in 0..w {
            let g: Vec<f64> = (0..h)
                .map(|y| (f[[y, x]] + mu * u[[y, x]] + mult[[y, x]]) / (1.0 + mu))
                .collect();
            let sol = potts_1d(&g, &weight, jump);
            for (y, val) in sol.expand(h).into_iter().enumerate() {
                v[[y, x]] = val;
            }
            for (y, j) in sol.jumps(h).into_iter().enumerate() {
                col_jumps[[y, x]] = j;
            }
        }
        mult.zip_mut_with(&(&u - &v), |m, d| *m += mu * d);
        mu *= cfg.coupling_growth;

        let cand = partition_map(&f, label_components(&row_jumps, &col_jumps, h, w), gamma);
        let current = cand.energy;
        if current < best.energy {
            best = cand;
        }
        trace.push(best.energy);
        if (previous - current).abs() < cfg.tolerance {
            break;
        }
        previous = current;
    }
    best.energy_trace = trace;
    Ok(best)
}

/// Labels 4-connected components where neighbors are joined unless a jump separates them.
/// `row_jumps[y, x]` separates `(y, x)` from `(y, x + 1)`; `col_jumps[y, x]` separates
/// `(y, x)` from `(y + 1, x)`.
fn label_components(row_jumps: &Array2<bool>, col_jumps: &Array2<bool>, h: usize, w: usize) -> Array2<u32> {
    let mut parent: Vec<usize> = (0..h * w).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let union = |a: usize, b: usize, parent: &mut Vec<usize>| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w && !row_jumps[[y, x]] {
                union(i, i + 1, &mut parent);
            }
            if y + 1 < h && !col_jumps[[y, x]] {
                union(i, i + w, &mut parent);
            }
        }
    }
    let mut ids = vec![u32::MAX; h * w];
    let mut next = 0u32;
    let mut labels = Array2::zeros((h, w));
    for i in 0..h * w {
        let r = find(&mut parent, i);
        if ids[r] == u32::MAX {
            ids[r] = next;
            next += 1;
        }
        labels[[i / w, i % w]] = ids[r];
    }
    labels
}

/// Region means and exact energy for a labeling (labels must be dense from 0).
fn partition_map(f: &Array2<f64>, labels: Array2<u32>, gamma: f64) -> ClusterMap {
    let regions = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut sums = vec![0.0; regions];
    let mut counts = vec![0usize; regions];
    for (&l, &v) in labels.iter().zip(f.iter()) {
        sums[l as usize] += v;
        counts[l as usize] += 1;
    }
    let values: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let data: f64 = labels
        .iter()
        .zip(f.iter())
        .map(|(&l, &v)| (values[l as usize] - v).powi(2))
        .sum();
    let energy = data + gamma * boundary_length(&labels) as f64;
    ClusterMap {
        labels,
        values,
        energy,
        energy_trace: Vec::new(),
        gamma,
    }
}
