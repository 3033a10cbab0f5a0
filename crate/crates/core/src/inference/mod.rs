//! Parameter estimation: empirical priors, posterior sampling, recency
//! chains and fitting of the four model variants.

mod fit;
mod posterior;
mod priors;
mod recency;

pub use fit::{fit_variant, FitConfig};
pub use posterior::{
    log_posterior, sample_posterior, BatterModel, ModelParams, PlayerPosterior, PosteriorProblem,
    PosteriorSummary, SamplerConfig, SamplerDiagnostics, WeightPosterior,
};
pub use priors::{
    fit_prior_spec, fit_priors, player_summaries, PlayerPrior, PlayerSummary, PriorSpec, Role,
    DEFAULT_MIN_PA,
};
pub use recency::{build_recency_chains, chain_subsets, RecencyChains, BLOCK_SIZE, DEFAULT_CHAINS};
