//! Edge sketches and binary structure masks derived from a clustering map.

use ndarray::Array2;

use crate::potts::ClusterMap;
use sua_core::{Image, SegMask};

/// Binary boundary image of a partition (the dominant structure `u`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSketch {
    pub edges: Array2<bool>,
}

impl EdgeSketch {
    pub fn dims(&self) -> (usize, usize) {
        self.edges.dim()
    }

    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Ones on edge pixels, zeros elsewhere.
    pub fn to_image(&self) -> Image {
        Image::from_array(self.edges.mapv(|e| if e { 1.0 } else { 0.0 }))
    }
}

/// Marks pixels whose right or bottom 4-neighbor carries a different label.
pub fn transition_edges<T: PartialEq + Copy>(labels: &Array2<T>) -> EdgeSketch {
    let (h, w) = labels.dim();
    let edges = Array2::from_shape_fn((h, w), |(y, x)| {
        let l = labels[[y, x]];
        (x + 1 < w && labels[[y, x + 1]] != l) || (y + 1 < h && labels[[y + 1, x]] != l)
    });
    EdgeSketch { edges }
}

pub fn edge_sketch(cm: &ClusterMap) -> EdgeSketch {
    transition_edges(&cm.labels)
}

/// Edges of a label mask under the same transition rule.
pub fn mask_edges(mask: &SegMask) -> EdgeSketch {
    transition_edges(mask.labels())
}

/// Otsu threshold over weighted values: returns the threshold separating the
/// class pair with maximal between-class variance, or `None` when fewer than
/// two distinct values exist. Ties keep the lowest threshold.
pub fn otsu_threshold(values: &[f64], weights: &[f64]) -> Option<f64> {
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Merge equal values so thresholds only fall between distinct ones.
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for (v, w) in pairs {
        match levels.last_mut() {
            Some(last) if last.0 == v => last.1 += w,
            _ => levels.push((v, w)),
        }
    }
    if levels.len() < 2 {
        return None;
    }
    let total: f64 = levels.iter().map(|l| l.1).sum();
    let total_mass: f64 = levels.iter().map(|l| l.0 * l.1).sum();
    let (mut w0, mut m0) = (0.0, 0.0);
    let mut best: Option<(f64, f64)> = None;
    for k in 0..levels.len() - 1 {
        w0 += levels[k].1;
        m0 += levels[k].0 * levels[k].1;
        let w1 = total - w0;
        if w0 <= 0.0 || w1 <= 0.0 {
            continue;
        }
        let mean0 = m0 / w0;
        let mean1 = (total_mass - m0) / w1;
        let between = (w0 / total) * (w1 / total) * (mean0 - mean1).powi(2);
        let threshold = 0.5 * (levels[k].0 + levels[k + 1].0);
        let better = match best {
            None => true,
            Some((b, _)) => between > b * (1.0 + 1e-12) + 1e-300,
        };
        if better {
            best = Some((between, threshold));
        }
    }
    best.map(|b| b.1)
}

/// Foreground = regions whose mean exceeds the area-weighted Otsu threshold
/// over region means. A map with a single distinct level is all foreground.
pub fn structure_mask(cm: &ClusterMap) -> Array2<bool> {
    let areas: Vec<f64> = cm.region_areas().into_iter().map(|a| a as f64).collect();
    match otsu_threshold(&cm.values, &areas) {
        None => Array2::from_elem(cm.dims(), true),
        Some(t) => cm.labels.mapv(|l| cm.values[l as usize] > t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_plane_gives_single_column() {
        let labels = Array2::from_shape_fn((4, 6), |(_, x)| u32::from(x >= 3));
        let sketch = transition_edges(&labels);
        for y in 0..4 {
            for x in 0..6 {
                assert_eq!(sketch.edges[[y, x]], x == 2);
            }
        }
    }

    #[test]
    fn otsu_two_levels_splits_at_midpoint() {
        assert_eq!(otsu_threshold(&[0.1, 0.9], &[10.0, 3.0]), Some(0.5));
        assert_eq!(otsu_threshold(&[0.4, 0.4], &[1.0, 1.0]), None);
    }
}
