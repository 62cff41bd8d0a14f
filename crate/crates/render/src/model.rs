use std::path::Path;

use ndarray::{arr1, Array2};
use sua_core::io::{self, RawTensor};
use sua_core::{rng, Error, Image, Result};

use crate::discriminator::{Discriminator, DiscriminatorOutput};
use crate::generator::Generator;
use crate::nn::ParamSet;

const META: &str = "meta";
const G_PREFIX: &str = "G.";
const D_PREFIX: &str = "D.";

/// Generator and discriminator layouts with their weights.
#[derive(Debug, Clone)]
pub struct RendererParams {
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub g: ParamSet,
    pub d: ParamSet,
    /// Training-time dropout rate of the generator.
    pub dropout: f64,
}

impl RendererParams {
    /// Freshly initialized networks: weights `N(0, 0.02)`, zero biases,
    /// unit norm scales.
    pub fn new(width: usize, dims: (usize, usize), dropout: f64, seed: u64) -> Result<Self> {
        if width == 0 {
            return Err(Error::Parameter("renderer width must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Parameter(format!("dropout {dropout} outside [0, 1)")));
        }
        let mut g = ParamSet::new();
        let generator = Generator::new(width, &mut g, &mut rng::stream(seed, "generator-init"));
        let mut d = ParamSet::new();
        let discriminator = Discriminator::new(width, dims, &mut d, &mut rng::stream(seed, "discriminator-init"))?;
        Ok(Self {
            generator,
            discriminator,
            g,
            d,
            dropout,
        })
    }

    pub fn width(&self) -> usize {
        self.generator.width
    }

    /// Image dims the discriminator accepts.
    pub fn dims(&self) -> (usize, usize) {
        self.discriminator.dims
    }

    pub fn parameter_count(&self) -> usize {
        self.g.count() + self.d.count()
    }

    pub fn to_records(&self) -> Vec<(String, RawTensor)> {
        let (h, w) = self.dims();
        let meta = arr1(&[self.width() as f32, h as f32, w as f32, self.dropout as f32]).into_dyn();
        let mut records = vec![(META.to_string(), RawTensor::from_array_f32(&meta))];
        records.extend(self.g.to_records(G_PREFIX));
        records.extend(self.d.to_records(D_PREFIX));
        records
    }

    pub fn from_records(records: &[(String, RawTensor)]) -> Result<Self> {
        let meta = records
            .iter()
            .find(|(n, _)| n == META)
            .ok_or_else(|| Error::Format("weights archive lacks meta record".into()))?
            .1
            .to_array_f32()?;
        if meta.len() != 4 {
            return Err(Error::Format("malformed renderer meta record".into()));
        }
        let m: Vec<f32> = meta.iter().copied().collect();
        let mut p = Self::new(m[0] as usize, (m[1] as usize, m[2] as usize), f64::from(m[3]), 0)?;
        p.g.load_records(records, G_PREFIX)?;
        p.d.load_records(records, D_PREFIX)?;
        Ok(p)
    }

    /// Single archive; weights are stored in single precision.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::save_archive(&self.to_records(), path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_records(&io::load_archive(path)?)
    }
}

/// Generator pass. Training mode applies dropout drawn from `seed`; eval
/// mode ignores it.
pub fn generator_forward(p: &RendererParams, structure: &Image, training: bool, seed: u64) -> Result<Image> {
    let dropout = training.then_some((p.dropout, seed));
    let (out, _) = p.generator.forward(&p.g, &structure.to_f64(), dropout)?;
    Ok(Image::from_f64(&out))
}

pub fn discriminator_forward(p: &RendererParams, img: &Image, structure: &Image) -> Result<DiscriminatorOutput> {
    let (out, _) = p.discriminator.forward(&p.d, &img.to_f64(), &structure.to_f64())?;
    Ok(out)
}

/// Eval-mode rendering of a (warped) structure sketch.
pub fn render(p: &RendererParams, structure: &Image) -> Result<Image> {
    generator_forward(p, structure, false, 0)
}

pub(crate) fn to_f64(img: &Image) -> Array2<f64> {
    img.to_f64()
}
