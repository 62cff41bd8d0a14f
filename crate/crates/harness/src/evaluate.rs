use serde::{Deserialize, Serialize};
use sua_core::{Dataset, Error, Image, SegMask};
use sua_metrics::{
    bhattacharyya, correlation, histogram, mean_histogram, segmentation_metrics, Histogram, MetricReport,
    SegmentationScores,
};

use crate::error::{AtStage, Stage, StageResult};
use crate::pipeline::PipelineRun;

/// Mean of the six headline scores; the per-class breakdown is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub acc: f64,
    pub dice: f64,
    pub miou: f64,
    pub sen: f64,
    pub spe: f64,
    pub fdr: f64,
}

impl MeanScores {
    pub fn of(scores: &[SegmentationScores]) -> Self {
        let n = scores.len().max(1) as f64;
        let avg = |f: fn(&SegmentationScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
        Self {
            acc: avg(|s| s.acc),
            dice: avg(|s| s.dice),
            miou: avg(|s| s.miou),
            sen: avg(|s| s.sen),
            spe: avg(|s| s.spe),
            fdr: avg(|s| s.fdr),
        }
    }

    fn as_scores(&self) -> SegmentationScores {
        SegmentationScores {
            acc: self.acc,
            dice: self.dice,
            miou: self.miou,
            sen: self.sen,
            spe: self.spe,
            fdr: self.fdr,
            per_class: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScores {
    pub index: usize,
    pub target_index: usize,
    pub dice: f64,
    pub dice_registration_only: f64,
    pub dice_no_translation: f64,
    pub d_bhat: f64,
}

/// Full-pipeline report plus the two ablation baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: MetricReport,
    pub full: MeanScores,
    pub registration_only: MeanScores,
    pub no_translation: MeanScores,
    /// Mean distance of raw source histograms to the mean target histogram.
    pub source_d_bhat: f64,
    pub source_corr: Option<f64>,
    pub per_image: Vec<ImageScores>,
}

/// Mean of the defined values; `None` when every input is degenerate.
fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-image D_Bhat and Corr against a reference histogram.
pub fn distribution_to(images: &[&Image], reference: &Histogram, bins: usize) -> sua_core::Result<Vec<(f64, Option<f64>)>> {
    images
        .iter()
        .map(|img| {
            let h = histogram(img, bins)?;
            let corr = match correlation(&h, reference) {
                Ok(c) => Some(c),
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            };
            Ok((bhattacharyya(&h, reference)?, corr))
        })
        .collect()
}

pub fn mean_target_histogram(tgt: &Dataset, bins: usize) -> sua_core::Result<Histogram> {
    let hists = tgt.images().map(|i| histogram(i, bins)).collect::<sua_core::Result<Vec<_>>>()?;
    mean_histogram(&hists)
}

/// Segmentation metrics of warped-back predictions against source ground
/// truth, and histogram metrics of rendered images against the mean target
/// histogram. Image scores are averaged over images.
pub fn evaluate(run: &PipelineRun, src: &Dataset, tgt: &Dataset, bins: usize) -> StageResult<Evaluation> {
    let gts = src.masks().at(Stage::Evaluate)?;
    if gts.len() != run.records.len() {
        return Err(Error::Parameter(format!(
            "{} ground-truth masks for {} pipeline records",
            gts.len(),
            run.records.len()
        )))
        .at(Stage::Evaluate);
    }
    let score = |pick: fn(&crate::pipeline::PipelineRecord) -> &SegMask| {
        run.records
            .iter()
            .zip(&gts)
            .map(|(r, gt)| segmentation_metrics(pick(r), gt).at_image(Stage::Evaluate, r.index))
            .collect::<StageResult<Vec<_>>>()
    };
    let full = score(|r| &r.warped_back)?;
    let reg = score(|r| &r.registered_only)?;
    let direct = score(|r| &r.direct)?;

    let reference = mean_target_histogram(tgt, bins).at(Stage::Evaluate)?;
    let rendered: Vec<&Image> = run.records.iter().map(|r| &r.rendered).collect();
    let dist = distribution_to(&rendered, &reference, bins).at(Stage::Evaluate)?;
    let sources: Vec<&Image> = src.images().collect();
    let src_dist = distribution_to(&sources, &reference, bins).at(Stage::Evaluate)?;

    let full_mean = MeanScores::of(&full);
    let report = MetricReport::new(
        mean_defined(dist.iter().map(|d| Some(d.0))),
        mean_defined(dist.iter().map(|d| d.1)),
        Some(&full_mean.as_scores()),
    );
    let per_image = run
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| ImageScores {
            index: r.index,
            target_index: r.target_index,
            dice: full[k].dice,
            dice_registration_only: reg[k].dice,
            dice_no_translation: direct[k].dice,
            d_bhat: dist[k].0,
        })
        .collect();
    Ok(Evaluation {
        report,
        full: full_mean,
        registration_only: MeanScores::of(&reg),
        no_translation: MeanScores::of(&direct),
        source_d_bhat: mean_defined(src_dist.iter().map(|d| Some(d.0))).unwrap_or(f64::NAN),
        source_corr: mean_defined(src_dist.iter().map(|d| d.1)),
        per_image,
    })
}
