//! One-vs-rest confusion counts per class, averaged over foreground classes.
//!
//! A class absent from both masks is left out of the means. A ratio whose
//! denominator is zero for an included class takes its ideal value
//! (sensitivity and specificity 1, false discovery rate 0), since nothing
//! could have been missed or wrongly flagged. When no foreground class is
//! included at all, both masks are pure background and every score is ideal.

use serde::{Deserialize, Serialize};
use sua_core::{Error, Result, SegMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u16,
    pub counts: Confusion,
    pub acc: f64,
    pub dice: f64,
    pub iou: f64,
    pub sen: f64,
    pub spe: f64,
    pub fdr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScores {
    pub acc: f64,
    pub dice: f64,
    pub miou: f64,
    pub sen: f64,
    pub spe: f64,
    pub fdr: f64,
    /// Included foreground classes only.
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(pred: &SegMask, gt: &SegMask, class: u16) -> Confusion {
    let mut c = Confusion::default();
    for (&p, &g) in pred.labels().iter().zip(gt.labels().iter()) {
        match (p == class, g == class) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

impl ClassMetrics {
    pub fn from_counts(class: u16, c: Confusion) -> Self {
        Self {
            class,
            counts: c,
            acc: ratio(c.tp + c.tn, c.total(), 1.0),
            dice: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, 1.0),
            iou: ratio(c.tp, c.tp + c.fp + c.fn_, 1.0),
            sen: ratio(c.tp, c.tp + c.fn_, 1.0),
            spe: ratio(c.tn, c.tn + c.fp, 1.0),
            fdr: ratio(c.fp, c.tp + c.fp, 0.0),
        }
    }
}

pub fn segmentation_metrics(pred: &SegMask, gt: &SegMask) -> Result<SegmentationScores> {
    if pred.dims() != gt.dims() {
        return Err(Error::Parameter(format!(
            "mask dims differ: {:?} vs {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    if pred.classes() != gt.classes() {
        return Err(Error::Parameter(format!(
            "class counts differ: {} vs {}",
            pred.classes(),
            gt.classes()
        )));
    }
    let per_class: Vec<ClassMetrics> = (1..pred.classes())
        .map(|k| k as u16)
        .map(|k| (k, confusion(pred, gt, k)))
        .filter(|(_, c)| c.tp + c.fp + c.fn_ > 0)
        .map(|(k, c)| ClassMetrics::from_counts(k, c))
        .collect();
    if per_class.is_empty() {
        return Ok(SegmentationScores {
            acc: 1.0,
            dice: 1.0,
            miou: 1.0,
            sen: 1.0,
            spe: 1.0,
            fdr: 0.0,
            per_class,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / per_class.len() as f64;
    Ok(SegmentationScores {
        acc: mean(|m| m.acc),
        dice: mean(|m| m.dice),
        miou: mean(|m| m.iou),
        sen: mean(|m| m.sen),
        spe: mean(|m| m.spe),
        fdr: mean(|m| m.fdr),
        per_class,
    })
}
