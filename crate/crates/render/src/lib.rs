//! Structure-conditioned intensity rendering: a residual U-Net generator,
//! a conditional discriminator with feature taps, adversarial/L1/style
//! losses and the alternating training loop.

pub mod discriminator;
pub mod generator;
pub mod gram;
pub mod losses;
pub mod model;
pub mod nn;
pub mod train;

pub use discriminator::{Discriminator, DiscriminatorOutput};
pub use generator::Generator;
pub use gram::{gram, gram_unnormalized};
pub use losses::{
    discriminator_gradients, generator_gradients, losses, LossTerms, TermWeights, LOG_FLOOR,
};
pub use model::{discriminator_forward, generator_forward, render, RendererParams};
pub use train::{
    read_loss_log, structure_sketch, train_renderer, training_pairs, write_loss_log, EpochLog, TrainedRenderer,
    TrainingPair,
};
