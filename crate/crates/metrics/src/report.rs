use std::path::Path;

use serde::{Deserialize, Serialize};
use sua_core::{Error, Result};

use crate::segmentation::SegmentationScores;

/// Aggregate scores with the column names used in result tables. Missing
/// values (no rendering, flat histograms) serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "D_Bhat")]
    pub d_bhat: Option<f64>,
    #[serde(rename = "Corr")]
    pub corr: Option<f64>,
    #[serde(rename = "Acc")]
    pub acc: Option<f64>,
    #[serde(rename = "Dice")]
    pub dice: Option<f64>,
    #[serde(rename = "mIoU")]
    pub miou: Option<f64>,
    #[serde(rename = "Sen")]
    pub sen: Option<f64>,
    #[serde(rename = "Spe")]
    pub spe: Option<f64>,
    #[serde(rename = "FDR")]
    pub fdr: Option<f64>,
}

impl MetricReport {
    pub fn new(d_bhat: Option<f64>, corr: Option<f64>, seg: Option<&SegmentationScores>) -> Self {
        Self {
            d_bhat,
            corr,
            acc: seg.map(|s| s.acc),
            dice: seg.map(|s| s.dice),
            miou: seg.map(|s| s.miou),
            sen: seg.map(|s| s.sen),
            spe: seg.map(|s| s.spe),
            fdr: seg.map(|s| s.fdr),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("metric report: {e}")))
    }

    /// Scores in table order, for printing.
    pub fn columns(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("D_Bhat", self.d_bhat),
            ("Corr", self.corr),
            ("Acc", self.acc),
            ("Dice", self.dice),
            ("mIoU", self.miou),
            ("Sen", self.sen),
            ("Spe", self.spe),
            ("FDR", self.fdr),
        ]
    }
}
