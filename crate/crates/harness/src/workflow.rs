//! Synthetic benchmark: generate, train, translate, segment, evaluate.

use std::path::Path;

use image::Rgb;
use sua_core::{Dataset, PottsConfig, RenderTrainConfig, RunConfig};
use sua_metrics::{histogram, mean_histogram};
use sua_render::{train_renderer, training_pairs, write_loss_log, TrainedRenderer};

use crate::error::{AtStage, Stage, StageResult};
use crate::evaluate::{evaluate, mean_target_histogram, Evaluation};
use crate::pipeline::{run_pipeline, PipelineRun};
use crate::segmenter::{train_segmenter, TrainedSegmenter};
use crate::plots;
use crate::store::save_dataset;
use crate::synth::{synth_generate, SynthData};

/// Configuration used by the benchmark and the acceptance suite.
///
/// The default Potts weight merges every region of the 64x64 synthetic
/// images into one, so the benchmark uses a finer one. Renderer epochs are
/// shortened to keep a full run within a few minutes.
pub fn benchmark_config() -> RunConfig {
    RunConfig {
        potts: PottsConfig::with_gamma(0.006),
        render: RenderTrainConfig {
            epochs: 30,
            decay_start: 15,
            ..Default::default()
        },
        ..Default::default()
    }
}

pub struct BenchmarkRun {
    pub data: SynthData,
    pub renderer: TrainedRenderer,
    pub segmenter: TrainedSegmenter,
    pub run: PipelineRun,
    pub evaluation: Evaluation,
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> sua_core::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text).map_err(|e| sua_core::Error::io(path, e))
}

/// Runs the whole benchmark; artifacts go under `out` when given.
pub fn run_benchmark(cfg: &RunConfig, out: Option<&Path>) -> StageResult<BenchmarkRun> {
    cfg.validate().at(Stage::Config)?;
    let data = synth_generate(&cfg.synth).at(Stage::Synth)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| sua_core::Error::io(dir, e)).at(Stage::Output)?;
        write_json(&dir.join("config.json"), cfg).at(Stage::Output)?;
        save_dataset(&data.source, &dir.join("source")).at(Stage::Output)?;
        save_dataset(&data.target, &dir.join("target")).at(Stage::Output)?;
    }

    let pairs = training_pairs(&data.target, &cfg.potts).at(Stage::Potts)?;
    let renderer = train_renderer(&pairs, &cfg.render).at(Stage::TrainRender)?;
    let segmenter = train_segmenter(&data.target, &cfg.segmenter).at(Stage::TrainSegmenter)?;
    if let Some(dir) = out {
        renderer.params.save(dir.join("renderer.suaa")).at(Stage::Output)?;
        write_loss_log(&renderer.log, dir.join("loss.csv")).at(Stage::Output)?;
        segmenter.params.save(dir.join("segmenter.suaa")).at(Stage::Output)?;
    }

    let run_dir = out.map(|d| d.join("run"));
    let run = run_pipeline(
        &data.source,
        &data.target,
        &renderer.params,
        &segmenter.params,
        cfg,
        run_dir.as_deref(),
    )?;
    let bins = cfg.pipeline.histogram_bins;
    let evaluation = evaluate(&run, &data.source, &data.target, bins)?;
    if let Some(dir) = out {
        evaluation.report.save(dir.join("report.json")).at(Stage::Output)?;
        write_json(&dir.join("evaluation.json"), &evaluation).at(Stage::Output)?;
        write_plots(&data.source, &data.target, &run, bins, dir).at(Stage::Output)?;
    }
    Ok(BenchmarkRun {
        data,
        renderer,
        segmenter,
        run,
        evaluation,
    })
}

/// Histogram overlay of target, rendered and source means, and the
/// deformation diagnostics of the first record.
pub fn write_plots(src: &Dataset, tgt: &Dataset, run: &PipelineRun, bins: usize, dir: &Path) -> sua_core::Result<()> {
    let target = mean_target_histogram(tgt, bins)?;
    let mean_of = |imgs: Vec<&sua_core::Image>| -> sua_core::Result<_> {
        let h = imgs.into_iter().map(|i| histogram(i, bins)).collect::<sua_core::Result<Vec<_>>>()?;
        mean_histogram(&h)
    };
    let rendered = mean_of(run.records.iter().map(|r| &r.rendered).collect())?;
    let source = mean_of(src.images().collect())?;
    plots::histogram_overlay(
        &[
            (&target, Rgb([30, 120, 30])),
            (&rendered, Rgb([200, 40, 40])),
            (&source, Rgb([60, 60, 200])),
        ],
        &dir.join("histograms.png"),
    )?;
    if let Some(r) = run.records.first() {
        plots::deformation_grid(&r.pair.forward, 4, 4, &dir.join("deformation_grid.png"))?;
        plots::jacobian_heatmap(&r.pair.forward, 4, &dir.join("jacobian.png"))?;
    }
    Ok(())
}
