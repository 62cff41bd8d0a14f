use std::fmt;

/// Pipeline stage, used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Synth,
    Data,
    Potts,
    Pairing,
    Register,
    Warp,
    Render,
    TrainRender,
    Segment,
    TrainSegmenter,
    Evaluate,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Synth => "synth",
            Stage::Data => "data",
            Stage::Potts => "potts",
            Stage::Pairing => "pairing",
            Stage::Register => "register",
            Stage::Warp => "warp",
            Stage::Render => "render",
            Stage::TrainRender => "train-render",
            Stage::Segment => "segment",
            Stage::TrainSegmenter => "train-seg",
            Stage::Evaluate => "eval",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}]{} {source}", index.map(|i| format!(" image {i}:")).unwrap_or_default())]
pub struct StageError {
    pub stage: Stage,
    pub index: Option<usize>,
    #[source]
    pub source: sua_core::Error,
}

pub type StageResult<T> = std::result::Result<T, StageError>;

/// Attaches a stage (and optionally an image index) to core errors.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
    fn at_image(self, stage: Stage, index: usize) -> StageResult<T>;
}

impl<T> AtStage<T> for sua_core::Result<T> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|source| StageError {
            stage,
            index: None,
            source,
        })
    }

    fn at_image(self, stage: Stage, index: usize) -> StageResult<T> {
        self.map_err(|source| StageError {
            stage,
            index: Some(index),
            source,
        })
    }
}
