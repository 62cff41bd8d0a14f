//! Shared data types, seeding and file interchange for the structure-unbiased
//! adversarial translation pipeline.

pub mod config;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod io;
pub mod rng;

pub use config::{
    AdmmConfig, PairingMode, PipelineConfig, PottsConfig, RenderTrainConfig, RunConfig,
    SegmenterConfig, ShapeFamily, SynthSpec,
};
pub use dataset::{Dataset, DomainRole, Sample};
pub use error::{ensure_same_dims, Error, Result};
pub use grid::{Image, SegMask, VectorField, MIN_PIPELINE_DIM};
pub use io::{load_image, save_image, ImageFormat};
