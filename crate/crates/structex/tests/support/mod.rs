#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use sua_core::Image;
use sua_structex::ClusterMap;

pub fn rng(seed: u64) -> rand::rngs::StdRng {
    rand::rngs::StdRng::seed_from_u64(seed)
}

/// Exhaustive search over all partitions of a 1D signal into segments.
pub fn brute_force_potts(signal: &[f64], gamma: f64) -> (f64, Vec<usize>) {
    let n = signal.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << (n - 1)) {
        let mut starts = vec![0];
        starts.extend((1..n).filter(|i| mask & (1 << (i - 1)) != 0));
        let mut e = gamma * (starts.len() - 1) as f64;
        for (k, &s) in starts.iter().enumerate() {
            let end = starts.get(k + 1).copied().unwrap_or(n);
            let seg = &signal[s..end];
            let m = seg.iter().sum::<f64>() / seg.len() as f64;
            e += seg.iter().map(|v| (v - m).powi(2)).sum::<f64>();
        }
        if e < best.0 {
            best = (e, starts);
        }
    }
    best
}

pub fn starts_of(cm: &ClusterMap) -> Vec<usize> {
    let labels: Vec<u32> = cm.labels.iter().copied().collect();
    let mut starts = vec![0];
    starts.extend((1..labels.len()).filter(|&i| labels[i] != labels[i - 1]));
    starts
}

pub fn blobs(seed: u64, h: usize, w: usize) -> Image {
    let mut r = rng(seed);
    let mut img = Array2::from_elem((h, w), r.random_range(0.05..0.3));
    for _ in 0..3 {
        let (cy, cx) = (r.random_range(0.0..h as f64), r.random_range(0.0..w as f64));
        let rad = r.random_range(2.0..(h.min(w) as f64 / 3.0));
        let val = r.random_range(0.4..0.95);
        for y in 0..h {
            for x in 0..w {
                if (y as f64 - cy).hypot(x as f64 - cx) < rad {
                    img[[y, x]] = val;
                }
            }
        }
    }
    let noisy = img.mapv(|v: f64| (v + r.random_range(-0.03..0.03)).clamp(0.0, 1.0));
    Image::from_f64(&noisy)
}
