//! Per-image translation: structure → pairing → registration → warped
//! structure → rendering → segmentation → warp-back.

use std::path::Path;

use sua_core::io;
use sua_core::{Dataset, Image, ImageFormat, PairingMode, RunConfig, SegMask};
use sua_render::RendererParams;
use sua_spatx::{register, warp, warp_mask, warp_mask_to_edges, DiffeoPair};
use sua_structex::{extract, select_pair, select_target, Structure};

use crate::error::{AtStage, Stage, StageResult};
use crate::segmenter::{segment, SegmenterParams};

#[derive(Debug, Clone)]
pub struct PipelineRecord {
    pub index: usize,
    pub target_index: usize,
    /// SSIM of the chosen composed-structure pair.
    pub pairing_score: f64,
    /// Forward map takes the source into the target frame.
    pub pair: DiffeoPair,
    /// Edge sketch of the warped source structure mask.
    pub warped_structure: Image,
    pub rendered: Image,
    /// Segmentation of the rendered image, target frame.
    pub predicted: SegMask,
    /// `predicted` pulled back by the inverse map, source frame.
    pub warped_back: SegMask,
    /// Segmentation of the raw source image.
    pub direct: SegMask,
    /// Source image warped to the target frame, segmented, and warped back.
    pub registered_only: SegMask,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub mode: PairingMode,
    pub records: Vec<PipelineRecord>,
}

/// Structures of every image in a dataset.
pub fn extract_all(ds: &Dataset, cfg: &RunConfig) -> StageResult<Vec<Structure>> {
    ds.images()
        .enumerate()
        .map(|(i, img)| extract(img, &cfg.potts, cfg.pipeline.structure_sigma).at_image(Stage::Potts, i))
        .collect()
}

/// Softened structure mask as an image; the registration input.
fn soft(s: &Structure) -> Image {
    Image::from_f64(&s.composed.softened)
}

/// One source image carried into the target domain.
#[derive(Debug, Clone)]
pub struct Translation {
    pub index: usize,
    pub target_index: usize,
    pub pairing_score: f64,
    pub pair: DiffeoPair,
    pub warped_structure: Image,
    pub rendered: Image,
}

/// Structure extraction, pairing, registration and rendering for every
/// source image.
pub fn translate(
    src: &Dataset,
    tgt: &Dataset,
    renderer: &RendererParams,
    cfg: &RunConfig,
) -> StageResult<Vec<Translation>> {
    cfg.validate().at(Stage::Config)?;
    sua_core::ensure_same_dims("source/target datasets", src.dims(), tgt.dims()).at(Stage::Data)?;
    let src_s = extract_all(src, cfg)?;
    let tgt_s = extract_all(tgt, cfg)?;
    let tgt_composed: Vec<_> = tgt_s.iter().map(|s| s.composed.clone()).collect();

    let global = match cfg.pipeline.pairing {
        PairingMode::PerImage => None,
        PairingMode::Global => {
            let src_composed: Vec<_> = src_s.iter().map(|s| s.composed.clone()).collect();
            let choice = select_pair(&src_composed, &tgt_composed).at(Stage::Pairing)?;
            let pair = register(&soft(&src_s[choice.source]), &soft(&tgt_s[choice.target]), &cfg.admm)
                .at_image(Stage::Register, choice.source)?;
            Some((choice, pair))
        }
    };

    src_s
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (target_index, pairing_score, pair) = match &global {
                Some((choice, pair)) => (choice.target, choice.score, pair.clone()),
                None => {
                    let choice = select_target(&s.composed, &tgt_composed).at_image(Stage::Pairing, i)?;
                    let pair =
                        register(&soft(s), &soft(&tgt_s[choice.target]), &cfg.admm).at_image(Stage::Register, i)?;
                    (choice.target, choice.score, pair)
                }
            };
            let warped_structure = warp_mask_to_edges(&s.mask, &pair.forward)
                .at_image(Stage::Warp, i)?
                .to_image();
            let rendered = sua_render::render(renderer, &warped_structure).at_image(Stage::Render, i)?;
            Ok(Translation {
                index: i,
                target_index,
                pairing_score,
                pair,
                warped_structure,
                rendered,
            })
        })
        .collect()
}

/// Runs the pipeline over every source image. Intermediates are written
/// under `out` when given.
pub fn run_pipeline(
    src: &Dataset,
    tgt: &Dataset,
    renderer: &RendererParams,
    segmenter: &SegmenterParams,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> StageResult<PipelineRun> {
    let translations = translate(src, tgt, renderer, cfg)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| sua_core::Error::io(dir, e))
            .at(Stage::Output)?;
    }
    let mut records = Vec::with_capacity(src.len());
    for (t, sample) in translations.into_iter().zip(src.items()) {
        let i = t.index;
        let predicted = segment(segmenter, &t.rendered).at_image(Stage::Segment, i)?;
        let warped_back = warp_mask(&predicted, &t.pair.inverse).at_image(Stage::Warp, i)?;
        let direct = segment(segmenter, &sample.image).at_image(Stage::Segment, i)?;
        let moved = warp(&sample.image, &t.pair.forward).at_image(Stage::Warp, i)?;
        let moved_pred = segment(segmenter, &moved).at_image(Stage::Segment, i)?;
        let registered_only = warp_mask(&moved_pred, &t.pair.inverse).at_image(Stage::Warp, i)?;
        let record = PipelineRecord {
            index: i,
            target_index: t.target_index,
            pairing_score: t.pairing_score,
            pair: t.pair,
            warped_structure: t.warped_structure,
            rendered: t.rendered,
            predicted,
            warped_back,
            direct,
            registered_only,
        };
        if let Some(dir) = out {
            persist(&record, dir, cfg).at_image(Stage::Output, i)?;
        }
        records.push(record);
    }
    Ok(PipelineRun {
        mode: cfg.pipeline.pairing,
        records,
    })
}

/// Writes the deformation pair, warped structure and rendering of one
/// translated image.
pub fn persist_translation(t: &Translation, dir: &Path, cfg: &RunConfig) -> sua_core::Result<()> {
    let i = t.index;
    t.pair.save(
        dir.join(format!("phi_{i}.suat")),
        dir.join(format!("phi_inv_{i}.suat")),
        dir.join(format!("phi_{i}.json")),
        Some(&cfg.admm),
    )?;
    io::save_image(&t.warped_structure, dir.join(format!("structure_{i}.png")), ImageFormat::Png)?;
    io::save_image(&t.rendered, dir.join(format!("rendered_{i}.png")), ImageFormat::Png)?;
    io::save_image(&t.rendered, dir.join(format!("rendered_{i}.suat")), ImageFormat::Raw)?;
    let meta = serde_json::json!({
        "index": i,
        "target_index": t.target_index,
        "pairing_score": t.pairing_score,
    });
    let path = dir.join(format!("record_{i}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&meta).expect("record serializes"))
        .map_err(|e| sua_core::Error::io(&path, e))
}

/// Reloads a run persisted by [`run_pipeline`]; `classes` is the label
/// count of the segmenter.
pub fn load_run(dir: &Path, count: usize, classes: usize, mode: PairingMode) -> sua_core::Result<PipelineRun> {
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let (pair, _) = DiffeoPair::load(
            dir.join(format!("phi_{i}.suat")),
            dir.join(format!("phi_inv_{i}.suat")),
            dir.join(format!("phi_{i}.json")),
        )?;
        let path = dir.join(format!("record_{i}.json"));
        let text = std::fs::read_to_string(&path).map_err(|e| sua_core::Error::io(&path, e))?;
        let meta: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| sua_core::Error::Format(format!("{}: {e}", path.display())))?;
        let mask = |name: &str| io::load_mask(dir.join(format!("{name}_{i}.suat")), classes);
        records.push(PipelineRecord {
            index: i,
            target_index: meta["target_index"].as_u64().unwrap_or(0) as usize,
            pairing_score: meta["pairing_score"].as_f64().unwrap_or(f64::NAN),
            pair,
            warped_structure: io::load_image(dir.join(format!("structure_{i}.png")))?,
            rendered: io::load_image(dir.join(format!("rendered_{i}.suat")))?,
            predicted: mask("pred")?,
            warped_back: mask("pred_back")?,
            direct: mask("direct")?,
            registered_only: mask("registered")?,
        });
    }
    Ok(PipelineRun { mode, records })
}

fn persist(r: &PipelineRecord, dir: &Path, cfg: &RunConfig) -> sua_core::Result<()> {
    let i = r.index;
    persist_translation(
        &Translation {
            index: i,
            target_index: r.target_index,
            pairing_score: r.pairing_score,
            pair: r.pair.clone(),
            warped_structure: r.warped_structure.clone(),
            rendered: r.rendered.clone(),
        },
        dir,
        cfg,
    )?;
    io::save_mask(&r.predicted, dir.join(format!("pred_{i}.suat")))?;
    io::save_mask(&r.warped_back, dir.join(format!("pred_back_{i}.suat")))?;
    io::save_mask(&r.direct, dir.join(format!("direct_{i}.suat")))?;
    io::save_mask(&r.registered_only, dir.join(format!("registered_{i}.suat")))
}
