//! End-to-end orchestration of the structure-unbiased translation
//! pipeline, with a synthetic two-domain benchmark and a toy segmenter.

pub mod error;
pub mod evaluate;
pub mod pipeline;
pub mod plots;
pub mod segmenter;
pub mod store;
pub mod synth;
pub mod workflow;

pub use error::{AtStage, Stage, StageError, StageResult};
pub use evaluate::{evaluate, Evaluation, ImageScores, MeanScores};
pub use pipeline::{load_run, persist_translation, run_pipeline, translate, PipelineRecord, PipelineRun, Translation};
pub use store::{load_dataset, save_dataset};
pub use segmenter::{segment, train_segmenter, SegmenterParams, TrainedSegmenter};
pub use synth::{synth_generate, SynthData, SynthOracle};
pub use workflow::{benchmark_config, run_benchmark, BenchmarkRun};
