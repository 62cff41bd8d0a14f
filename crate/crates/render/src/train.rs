use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sua_core::{rng, Dataset, Error, Image, PottsConfig, RenderTrainConfig, Result};
use sua_structex::edges::{structure_mask, transition_edges};
use sua_structex::potts::potts_cluster_with;

use crate::losses::{discriminator_gradients, generator_gradients_from, LossTerms, TermWeights};
use crate::model::RendererParams;
use crate::nn::{Adam, ParamSet};

/// Target image with its structure sketch.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub image: Image,
    pub structure: Image,
}

/// One row of the loss log: means over the epoch's steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    #[serde(rename = "L_adv_D")]
    pub adv_d: f64,
    #[serde(rename = "L_adv_G")]
    pub adv_g: f64,
    #[serde(rename = "L_1")]
    pub l1: f64,
    #[serde(rename = "L_s")]
    pub style: f64,
    #[serde(rename = "total_G")]
    pub total_g: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedRenderer {
    pub params: RendererParams,
    pub log: Vec<EpochLog>,
}

/// Edge sketch of the Potts structure mask, as a 0/1 image.
pub fn structure_sketch(img: &Image, potts: &PottsConfig) -> Result<Image> {
    let clusters = potts_cluster_with(img, potts)?;
    Ok(transition_edges(&structure_mask(&clusters)).to_image())
}

pub fn training_pairs(tgt: &Dataset, potts: &PottsConfig) -> Result<Vec<TrainingPair>> {
    tgt.images()
        .map(|img| {
            Ok(TrainingPair {
                image: img.clone(),
                structure: structure_sketch(img, potts)?,
            })
        })
        .collect()
}

/// Alternating discriminator/generator Adam updates over shuffled targets.
pub fn train_renderer(pairs: &[TrainingPair], cfg: &RenderTrainConfig) -> Result<TrainedRenderer> {
    cfg.validate()?;
    let first = pairs
        .first()
        .ok_or_else(|| Error::Parameter("renderer training needs at least one target".into()))?;
    let dims = first.image.dims();
    for p in pairs {
        if p.image.dims() != dims || p.structure.dims() != dims {
            return Err(Error::Shape("renderer training pairs must share dims".into()));
        }
    }
    let data: Vec<(Array2<f64>, Array2<f64>)> =
        pairs.iter().map(|p| (p.image.to_f64(), p.structure.to_f64())).collect();

    let mut params = RendererParams::new(cfg.base_width, dims, cfg.dropout, cfg.seed)?;
    let mut adam_d = Adam::new(&params.d, cfg.beta1, cfg.beta2);
    let mut adam_g = Adam::new(&params.g, cfg.beta1, cfg.beta2);
    let weights = TermWeights::from_config(cfg);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;

    for epoch in 1..=cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng::item_stream(cfg.seed, "render-order", epoch));
        let mut sums = LossTerms::default();
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut forwards = Vec::with_capacity(batch.len());
            let mut grads_d = params.d.zeros_like();
            for &i in batch {
                let seed = rng::item_stream(cfg.seed, "render-dropout", step).random::<u64>();
                step += 1;
                let (x, u) = &data[i];
                let (fake, cache) = params.generator.forward(&params.g, u, Some((params.dropout, seed)))?;
                let (adv_d, g) = discriminator_gradients(&params, x, u, &fake)?;
                grads_d.add_scaled(&g, scale);
                sums.adv_d += adv_d;
                forwards.push((i, fake, cache));
            }
            adam_d.step(&mut params.d, &grads_d, lr);

            let mut grads_g: ParamSet = params.g.zeros_like();
            for (i, fake, cache) in &forwards {
                let (x, u) = &data[*i];
                let (terms, g) = generator_gradients_from(&params, x, u, weights, fake, cache)?;
                grads_g.add_scaled(&g, scale);
                sums.adv_g += terms.adv_g;
                sums.l1 += terms.l1;
                sums.style += terms.style;
                sums.total_g += terms.total_g;
            }
            adam_g.step(&mut params.g, &grads_g, lr);
        }
        let n = data.len() as f64;
        log.push(EpochLog {
            epoch,
            lr,
            adv_d: sums.adv_d / n,
            adv_g: sums.adv_g / n,
            l1: sums.l1 / n,
            style: sums.style / n,
            total_g: sums.total_g / n,
        });
        if !params.g.is_finite() || !params.d.is_finite() {
            return Err(Error::Degenerate(format!("renderer weights diverged at epoch {epoch}")));
        }
    }
    Ok(TrainedRenderer { params, log })
}

/// Writes the loss log as CSV with a header row.
pub fn write_loss_log(log: &[EpochLog], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in log {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_loss_log(path: impl AsRef<Path>) -> Result<Vec<EpochLog>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}
