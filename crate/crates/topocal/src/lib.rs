//! Postprocessing of ensemble precipitation forecasts into calibrated
//! censored-logistic predictive distributions.
//!
//! The regression maps ensemble statistics (control member, mean, spread) to
//! the location and scale of a zero-censored logistic distribution, fitted by
//! minimum CRPS on square-root transformed data. Two extensions make the
//! model usable away from observation sites:
//!
//! - training pairs are weighted by the topographic similarity (smoothed
//!   elevation) between their station of origin and the prediction location,
//!   and
//! - a seasonal pretest checks on held-out training months whether
//!   postprocessing actually beats the raw ensemble, falling back to the
//!   direct model output where it does not.
//!
//! The [`pipeline`] module wires these into end-to-end model variants with
//! verification (CRPS, Brier, PIT and rank histograms) and a synthetic data
//! generator with known truth for testing.

pub mod censored_logistic;
pub mod data;
pub mod fit;
mod optim;
pub mod pipeline;
pub mod pretest;
pub mod report;
pub mod scoring;
pub mod similarity;
pub mod synth;

pub use censored_logistic::{CensoredLogisticParams, DistError};
pub use data::{
    ingest, select_training_window, sqrt_transform, write_forecasts_csv, write_stations_csv,
    DataError, Dataset, EnsembleForecast, ForecastObservationPair, LeadTime, MonthRef, Scale,
    StationMeta, TrainingPolicy,
};
pub use fit::{
    cost, fit, link, CoefficientVector, FitConfig, FitError, FitInit, FitResult, OptimizerKind,
    WeightVector,
};
pub use pipeline::{
    back_transform, run_variant, select_l, verify_run, BootstrapOptions, FittedModel, LSelection,
    ModelMeta, ModelVariant, PipelineError, PredictedPair, PretestRecord, RunConfig, RunOutput,
    SamplingMode, SelectBase, StationMonthFailure, VerifyOptions,
};
pub use pretest::{
    pretest_decide, pretest_split, sine_covariate, sit_classify, PretestError, PretestOutcome,
    PretestVariant, Sit,
};
pub use report::{ModelSummary, ReportError, VerificationReport};
pub use scoring::{
    brier, brier_ensemble, crps_ensemble, pit_randomized, rank_of_observation, skill,
    RankHistogram, ScoringError, Threshold,
};
pub use similarity::{
    dem_distance, enschar_distance, nn_weights, rank_combined_distance, spatial_distance,
    DistanceKind, NeighborMode, NeighborQuery, RankField, SimilarityError,
};
pub use synth::{generate_synthetic, ObservationModel, Regime, SynthConfig, SyntheticDataset};
