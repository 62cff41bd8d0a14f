use rayon::prelude::*;
use sua_core::{Error, Result};

use crate::compose::ComposedStructure;
use crate::ssim::ssim;

/// Best-matching (source, target) pair by SSIM of the composed structures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairChoice {
    pub source: usize,
    pub target: usize,
    pub score: f64,
}

/// Scores every (source, target) pair and returns the argmax; ties go to
/// the lexicographically smallest `(source, target)`.
pub fn select_pair(src: &[ComposedStructure], tgt: &[ComposedStructure]) -> Result<PairChoice> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::Parameter("select_pair needs non-empty candidate lists".into()));
    }
    let rows: Vec<Vec<f64>> = src
        .par_iter()
        .map(|s| tgt.iter().map(|t| ssim(&s.image, &t.image)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(argmax_lexicographic(&rows))
}

/// Best target for one source structure.
pub fn select_target(src: &ComposedStructure, tgt: &[ComposedStructure]) -> Result<PairChoice> {
    select_pair(std::slice::from_ref(src), tgt)
}

pub(crate) fn argmax_lexicographic(scores: &[Vec<f64>]) -> PairChoice {
    let mut best = PairChoice {
        source: 0,
        target: 0,
        score: f64::NEG_INFINITY,
    };
    for (i, row) in scores.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            if s > best.score {
                best = PairChoice {
                    source: i,
                    target: j,
                    score: s,
                };
            }
        }
    }
    best
}
