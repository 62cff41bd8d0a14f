//! Dominant-structure extraction: Potts clustering, edge sketches, binary
//! structure masks, softened composed structure images and SSIM pairing.

pub mod compose;
pub mod edges;
pub mod filter;
pub mod pairing;
pub mod potts;
pub mod ssim;

pub use compose::{compose_structure, ComposedStructure};
pub use edges::{edge_sketch, mask_edges, otsu_threshold, structure_mask, transition_edges, EdgeSketch};
pub use pairing::{select_pair, select_target, PairChoice};
pub use potts::{potts_1d, potts_cluster, potts_cluster_with, ClusterMap, Potts1d};
pub use ssim::ssim;

use ndarray::Array2;
use sua_core::{Image, PottsConfig, Result};

/// Everything extracted from one image.
#[derive(Debug, Clone)]
pub struct Structure {
    pub clusters: ClusterMap,
    pub sketch: EdgeSketch,
    pub mask: Array2<bool>,
    pub composed: ComposedStructure,
}

/// Runs clustering, edge extraction, masking and composition on one image.
pub fn extract(img: &Image, potts: &PottsConfig, sigma: f64) -> Result<Structure> {
    let clusters = potts_cluster_with(img, potts)?;
    let sketch = edge_sketch(&clusters);
    let mask = structure_mask(&clusters);
    let composed = compose_structure(&mask, img, sigma)?;
    Ok(Structure {
        clusters,
        sketch,
        mask,
        composed,
    })
}
