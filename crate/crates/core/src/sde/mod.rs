//! Variance-exploding SDE pieces: noise ladder, perturbation kernel, score
//! providers, and the denoising score matching loss.

mod dsm;
mod mlp;
mod noise;
mod schedule;
mod score;

pub use dsm::{dsm_loss, LossWeighting};
pub use mlp::{load_mlp, mlp_input, Activation, DenseLayer, MlpScore, MlpWeights, MLP_MAGIC, MLP_VERSION};
pub(crate) use noise::draw_like;
pub use noise::{perturb, NoiseSource, ZeroNoise};
pub use schedule::{make_schedule, NoiseSchedule, DEFAULT_LEVELS, DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN};
pub use score::{gaussian_score, FnScore, GaussianPrior, GaussianScore, ScoreProvider, ZeroScore};
