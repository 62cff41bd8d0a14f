//! Run configuration. Every field has a default, and the JSON form
//! round-trips exactly (`serde(default)` fills omitted keys).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Potts clustering parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PottsConfig {
    /// Jump penalty per 4-neighbor label transition (0.35 OCT-like, 0.45 MRI/CT-like).
    pub gamma: f64,
    pub max_iterations: usize,
    /// Outer loop stops once the energy changes by less than this.
    pub tolerance: f64,
    /// Initial coupling weight between the row and column splits, relative to `gamma`.
    pub coupling_start: f64,
    /// Multiplicative growth of the coupling weight per outer iteration.
    pub coupling_growth: f64,
}

impl Default for PottsConfig {
    fn default() -> Self {
        Self {
            gamma: 0.35,
            max_iterations: 20,
            tolerance: 1e-6,
            coupling_start: 0.01,
            coupling_growth: 2.0,
        }
    }
}

impl PottsConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameter(format!("potts gamma must be >= 0, got {}", self.gamma)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter("potts max_iterations must be positive".into()));
        }
        if !(self.coupling_start > 0.0 && self.coupling_growth >= 1.0) {
            return Err(Error::Parameter("potts coupling schedule must be positive and non-decreasing".into()));
        }
        Ok(())
    }
}

/// Multiscale ADMM registration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmConfig {
    /// Order of the smoothness operator.
    pub order: usize,
    /// Smoothness weight on `[0, 1]` intensities.
    pub lambda: f64,
    /// ADMM penalty (balance) parameter.
    pub rho: f64,
    pub max_iterations: usize,
    /// Relative primal residual for ADMM, relative energy decrease for the outer loop.
    pub tolerance: f64,
    /// Reflective padding applied before frequency-domain smoothing.
    pub padding: usize,
    /// Pyramid depth; 1 means full resolution only.
    pub scales: usize,
    /// Largest displacement of one composed small deformation, in pixels.
    pub step_cap: f64,
    /// Upper bound on accepted updates per pyramid level.
    pub max_updates_per_level: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            order: 3,
            lambda: 5000.0,
            rho: 5.0,
            max_iterations: 50,
            tolerance: 1e-3,
            padding: 8,
            scales: 3,
            step_cap: 0.4,
            max_updates_per_level: 40,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("rho", self.rho),
            ("tolerance", self.tolerance),
            ("step_cap", self.step_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("admm {name} must be positive, got {v}")));
            }
        }
        if self.order < 1 {
            return Err(Error::Parameter("admm order must be >= 1".into()));
        }
        if self.max_iterations == 0 || self.scales == 0 || self.max_updates_per_level == 0 {
            return Err(Error::Parameter(
                "admm max_iterations, scales and max_updates_per_level must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Renderer training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderTrainConfig {
    /// Weight of the L1 reconstruction loss.
    pub lambda1: f64,
    /// Weight of the Gram style loss.
    pub lambda2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Last epoch (1-based) trained at the full learning rate.
    pub decay_start: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dropout: f64,
    /// Generator/discriminator base channel width.
    pub base_width: usize,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for RenderTrainConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 100.0,
            learning_rate: 2e-4,
            epochs: 200,
            decay_start: 100,
            batch_size: 1,
            seed: 0,
            dropout: 0.5,
            base_width: 16,
            beta1: 0.5,
            beta2: 0.999,
        }
    }
}

impl RenderTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.base_width == 0 {
            return Err(Error::Parameter("render epochs, batch_size and base_width must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Parameter(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0) || self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Parameter("render learning rate and loss weights must be non-negative".into()));
        }
        Ok(())
    }

    /// Learning rate used during `epoch` (1-based): constant through
    /// `decay_start`, then linear down to zero at `epochs`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if epoch <= self.decay_start || self.epochs <= self.decay_start {
            return self.learning_rate;
        }
        let span = (self.epochs - self.decay_start) as f64;
        let left = self.epochs.saturating_sub(epoch) as f64;
        self.learning_rate * left / span
    }
}

/// Toy segmentation network training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterConfig {
    pub base_width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            base_width: 8,
            epochs: 12,
            learning_rate: 2e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    Ellipse,
    Bands,
}

/// Synthetic two-domain benchmark description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub size: usize,
    pub source_count: usize,
    pub target_count: usize,
    pub shape: ShapeFamily,
    /// Peak displacement of the structural warps applied to source shapes.
    pub warp_amplitude: f64,
    /// Monotone piecewise-linear intensity map applied to source images,
    /// as `[input, output]` knots with increasing inputs covering `[0, 1]`.
    pub intensity_map: Vec<[f64; 2]>,
    /// Standard deviation of additive source noise.
    pub noise: f64,
    pub background_level: f64,
    pub foreground_level: f64,
    /// Amplitude of the smooth shading shared by both domains.
    pub shading: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            size: 64,
            source_count: 40,
            target_count: 40,
            shape: ShapeFamily::Ellipse,
            warp_amplitude: 3.0,
            intensity_map: vec![[0.0, 0.45], [0.3, 0.7], [1.0, 0.95]],
            noise: 0.02,
            background_level: 0.15,
            foreground_level: 0.6,
            shading: 0.05,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < crate::grid::MIN_PIPELINE_DIM || self.source_count == 0 || self.target_count == 0 {
            return Err(Error::Parameter(format!(
                "synthetic spec needs size >= {} and non-empty domains",
                crate::grid::MIN_PIPELINE_DIM
            )));
        }
        if self.warp_amplitude < 0.0 || self.noise < 0.0 || self.shading < 0.0 {
            return Err(Error::Parameter("warp amplitude, noise and shading must be >= 0".into()));
        }
        let knots = &self.intensity_map;
        if knots.len() < 2 {
            return Err(Error::Parameter("intensity map needs at least two knots".into()));
        }
        let increasing = knots.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] >= w[0][1]);
        if !increasing || knots[0][0] > 0.0 || knots[knots.len() - 1][0] < 1.0 {
            return Err(Error::Parameter(
                "intensity map must be monotone with inputs spanning [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// How source images are paired with target structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// Every source image gets its own best target and deformation pair.
    PerImage,
    /// One best (source, target) pair over the whole dataset; its deformation
    /// is applied to every source image.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub pairing: PairingMode,
    /// Gaussian softening of structure masks, in pixels.
    pub structure_sigma: f64,
    pub histogram_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pairing: PairingMode::PerImage,
            structure_sigma: 2.0,
            histogram_bins: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { out: PathBuf::from("out") }
    }
}

/// Complete configuration of a pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub potts: PottsConfig,
    pub admm: AdmmConfig,
    pub render: RenderTrainConfig,
    pub segmenter: SegmenterConfig,
    pub synth: SynthSpec,
    pub pipeline: PipelineConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.potts.validate()?;
        self.admm.validate()?;
        self.render.validate()?;
        self.synth.validate()?;
        if self.pipeline.histogram_bins < 2 || self.pipeline.structure_sigma < 0.0 {
            return Err(Error::Parameter("histogram_bins must be >= 2 and structure_sigma >= 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Overrides every seed in the configuration from one master seed.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.render.seed = seed;
        self.segmenter.seed = seed;
        self.synth.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = RunConfig::default();
        let text = cfg.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn omitted_fields_take_defaults() {
        let cfg = RunConfig::from_json(r#"{"seed": 9, "admm": {"order": 2}}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.admm.order, 2);
        assert_eq!(cfg.admm.padding, 8);
        assert_eq!(cfg.potts.gamma, 0.35);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::from_json(r#"{"sed": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"potts": {"gamma": -1.0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"admm": {"order": 0}}"#).is_err());
    }

    #[test]
    fn learning_rate_schedule() {
        let cfg = RenderTrainConfig::default();
        assert_eq!(cfg.learning_rate_at(1), 2e-4);
        assert_eq!(cfg.learning_rate_at(100), 2e-4);
        assert!((cfg.learning_rate_at(150) - 1e-4).abs() < 1e-18);
        assert!(cfg.learning_rate_at(200) < 2e-6);
    }
}
