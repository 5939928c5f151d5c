//! End-to-end model variants, neighbor-count selection, back-transform and
//! verification runs.
//!
//! A run fits one model per target station and month on the 12 months before
//! that month, applies the variant-specific training weights, and emits
//! predictive output on the original scale. Station-month fits are
//! independent; they run on a work queue with per-task rng streams derived
//! from the master seed, so parallelism does not change results.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::censored_logistic::{CensoredLogisticParams, DistError};
use crate::data::{
    select_training_window, sqrt_transform, DataError, Dataset, ForecastObservationPair, LeadTime,
    MonthRef, Scale, TrainingPolicy,
};
use crate::fit::{fit, link, CoefficientVector, FitConfig, FitError, WeightVector};
use crate::pretest::{pretest_decide, pretest_split, PretestError, PretestVariant};
use crate::report::{
    BootstrapSummary, BrierSummary, ModelSummary, MonthlyRow, StationRow, VerificationReport,
};
use crate::scoring::{
    bootstrap_means, brier_ensemble, crps_ensemble, histogram_counts, pit_randomized,
    pit_randomized_ensemble, rank_of_observation, RankHistogram, ScoringError, Threshold,
};
use crate::similarity::{nn_weights, DistanceKind, NeighborMode, NeighborQuery, SimilarityError};
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pipeline expects a dataset on the original scale")]
    WrongScale,
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("no evaluation pairs for the requested lead time and months")]
    NoTargets,
    #[error("model '{model}' contributed no predictions")]
    EmptyRun { model: String },
    #[error("misaligned outputs: {0}")]
    Misaligned(String),
    #[error("neighbor grid is empty")]
    EmptyGrid,
    #[error("every grid point failed to produce predictions")]
    AllGridPointsFailed,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Pretest(#[from] PretestError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// The postprocessing variants under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Direct ensemble output, passed through bit for bit.
    Raw,
    /// One coefficient vector per month fitted on all training stations.
    Global,
    /// Per-station fit on the station's own past pairs.
    Local,
    /// Training weighted to the L most elevation-similar stations.
    Dem { l: usize },
    /// The elevation-weighted model gated by the seasonal pretest.
    DemPretest { l: usize, pretest: PretestVariant },
}

impl ModelVariant {
    pub fn label(&self) -> &'static str {
        match self {
            ModelVariant::Raw => "raw",
            ModelVariant::Global => "global",
            ModelVariant::Local => "local",
            ModelVariant::Dem { .. } => "dem",
            ModelVariant::DemPretest { .. } => "dem-pt",
        }
    }

    fn neighbor_count(&self) -> Option<usize> {
        match self {
            ModelVariant::Dem { l } | ModelVariant::DemPretest { l, .. } => Some(*l),
            _ => None,
        }
    }
}

/// How predictive samples are drawn in the back-transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Seeded pseudo-random draws.
    Random,
    /// Equally spaced quantiles (k - 0.5)/n.
    QuantileGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: ModelVariant,
    pub lead_time: LeadTime,
    pub target_months: Vec<MonthRef>,
    pub seed: u64,
    /// Predictive sample size per pair on the original scale.
    pub n_samples: usize,
    pub sampling: SamplingMode,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// When set, only these stations provide training data (the target
    /// station is additionally left out of its own training).
    pub train_stations: Option<BTreeSet<String>>,
    pub fit: FitConfig,
    pub distance: DistanceKind,
}

impl RunConfig {
    pub fn new(
        variant: ModelVariant,
        lead_time: LeadTime,
        target_months: Vec<MonthRef>,
        seed: u64,
    ) -> Self {
        RunConfig {
            variant,
            lead_time,
            target_months,
            seed,
            n_samples: 21,
            sampling: SamplingMode::Random,
            workers: None,
            train_stations: None,
            fit: FitConfig::default(),
            distance: DistanceKind::Dem31,
        }
    }
}

/// One scored pair of a run: emitted members on the original scale plus the
/// fitted sqrt-scale distribution when the pair was postprocessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedPair {
    pub model: String,
    pub station_id: String,
    pub date: NaiveDate,
    pub lead_time: LeadTime,
    pub observation: f64,
    pub members: Vec<f64>,
    pub params: Option<CensoredLogisticParams>,
    pub postprocessed: bool,
}

impl PredictedPair {
    pub fn key(&self) -> (&str, NaiveDate, LeadTime) {
        (&self.station_id, self.date, self.lead_time)
    }

    pub fn month(&self) -> MonthRef {
        MonthRef::of(self.date)
    }
}

/// A persisted coefficient fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub psi: [f64; 5],
    pub meta: ModelMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Target station, or "global" when the fit excluded no station.
    pub station_id: String,
    pub target_month: MonthRef,
    pub lead_time: LeadTime,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub pretest_variant: Option<u8>,
    /// Whether this fit is used for prediction (a rejected pretest keeps the
    /// coefficients on record with `accepted: false`).
    pub accepted: bool,
}

/// Pretest decision for one station-month, exported as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretestRecord {
    pub station_id: String,
    pub target_month: MonthRef,
    pub lead_time: LeadTime,
    pub pretest_variant: u8,
    pub accepted: bool,
    pub traintest_size: usize,
    pub traintest_mean_crps_model: Option<f64>,
    pub traintest_mean_crps_raw: Option<f64>,
    pub note: Option<String>,
}

/// A station-month that produced no model and no predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMonthFailure {
    pub station_id: String,
    pub target_month: MonthRef,
    pub lead_time: LeadTime,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub predictions: Vec<PredictedPair>,
    pub models: Vec<FittedModel>,
    pub pretest: Vec<PretestRecord>,
    pub failures: Vec<StationMonthFailure>,
}

/// Draw `count` samples from the fitted distribution and square them back to
/// the original scale.
pub fn back_transform(
    params: &CensoredLogisticParams,
    rng: &mut impl Rng,
    count: usize,
    mode: SamplingMode,
) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let u = match mode {
                SamplingMode::Random => loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                },
                SamplingMode::QuantileGrid => (k as f64 + 0.5) / count as f64,
            };
            let sample = params.sample(u).expect("u lies in (0,1)");
            sample * sample
        })
        .collect()
}

/// Per-task rng stream: FNV-1a over the task key folded into the master seed.
fn task_seed(master: u64, station: &str, month: MonthRef, lead: LeadTime) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |byte: u8| {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for b in station.bytes() {
        eat(b);
    }
    for b in month.year.to_le_bytes() {
        eat(b);
    }
    for b in month.month.to_le_bytes() {
        eat(b);
    }
    for b in lead.days().to_le_bytes() {
        eat(b);
    }
    // splitmix64 finalizer over the combined value
    let mut z = h ^ master.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct TaskOutcome {
    station_id: String,
    month: MonthRef,
    predictions: Vec<PredictedPair>,
    model: Option<FittedModel>,
    pretest: Option<PretestRecord>,
    failure: Option<String>,
}

/// Run one model variant over the target months.
///
/// Expects a dataset on the original scale; the square-root transform is
/// applied internally. Station-months that cannot be fitted are recorded in
/// `failures` and skipped (the pretest variant instead falls back to the raw
/// ensemble and flags the month).
pub fn run_variant(dataset: &Dataset, config: &RunConfig) -> Result<RunOutput, PipelineError> {
    if dataset.scale() != Scale::Original {
        return Err(PipelineError::WrongScale);
    }
    if config.n_samples == 0 {
        return Err(PipelineError::InvalidConfig(
            "n_samples must be >= 1".into(),
        ));
    }
    if config.target_months.is_empty() {
        return Err(PipelineError::InvalidConfig(
            "target_months must be nonempty".into(),
        ));
    }
    if let Some(0) = config.variant.neighbor_count() {
        return Err(PipelineError::InvalidConfig("L must be >= 1".into()));
    }

    // working copies restricted to the lead time
    let lead_pairs: Vec<ForecastObservationPair> = dataset
        .pairs()
        .iter()
        .filter(|p| p.lead_time == config.lead_time)
        .cloned()
        .collect();
    let original = dataset.with_pairs(lead_pairs);
    let sqrt = sqrt_transform(original.clone())?;

    let months: BTreeSet<MonthRef> = config.target_months.iter().copied().collect();
    let mut tasks: BTreeSet<(String, MonthRef)> = BTreeSet::new();
    for pair in original.pairs() {
        if months.contains(&pair.month()) {
            tasks.insert((pair.station_id.clone(), pair.month()));
        }
    }
    if tasks.is_empty() {
        return Err(PipelineError::NoTargets);
    }
    let tasks: Vec<(String, MonthRef)> = tasks.into_iter().collect();

    let run_tasks = || -> Vec<TaskOutcome> {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|(station_id, month)| run_task(&original, &sqrt, station_id, *month, config))
            .collect()
    };
    let outcomes: Vec<TaskOutcome> = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::InvalidConfig(format!("worker pool: {e}")))?
            .install(run_tasks),
        None => run_tasks(),
    };

    let mut output = RunOutput {
        predictions: Vec::new(),
        models: Vec::new(),
        pretest: Vec::new(),
        failures: Vec::new(),
    };
    for outcome in outcomes {
        output.predictions.extend(outcome.predictions);
        if let Some(model) = outcome.model {
            output.models.push(model);
        }
        if let Some(record) = outcome.pretest {
            output.pretest.push(record);
        }
        if let Some(error) = outcome.failure {
            output.failures.push(StationMonthFailure {
                station_id: outcome.station_id,
                target_month: outcome.month,
                lead_time: config.lead_time,
                error,
            });
        }
    }
    output
        .predictions
        .sort_by(|a, b| a.station_id.cmp(&b.station_id).then(a.date.cmp(&b.date)));
    // deduplicate "global" models shared across stations within a month
    if matches!(config.variant, ModelVariant::Global) {
        let mut seen = BTreeSet::new();
        output.models.retain(|m| {
            m.meta.station_id != "global"
                || seen.insert((m.meta.target_month, m.psi.map(f64::to_bits)))
        });
    }
    Ok(output)
}

fn run_task(
    original: &Dataset,
    sqrt: &Dataset,
    station_id: &str,
    month: MonthRef,
    config: &RunConfig,
) -> TaskOutcome {
    let mut outcome = TaskOutcome {
        station_id: station_id.to_string(),
        month,
        predictions: Vec::new(),
        model: None,
        pretest: None,
        failure: None,
    };

    let eval_orig: Vec<&ForecastObservationPair> = original
        .pairs()
        .iter()
        .filter(|p| p.station_id == station_id && p.month() == month)
        .collect();
    let eval_sqrt: Vec<&ForecastObservationPair> = sqrt
        .pairs()
        .iter()
        .filter(|p| p.station_id == station_id && p.month() == month)
        .collect();
    debug_assert_eq!(eval_orig.len(), eval_sqrt.len());

    if matches!(config.variant, ModelVariant::Raw) {
        outcome.predictions = eval_orig.iter().map(|p| passthrough(p, config)).collect();
        return outcome;
    }

    let window = match select_training_window(sqrt, month, TrainingPolicy::Prior12Months) {
        Ok(w) => w,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };

    // variant-specific training set
    let mut had_target_pairs = false;
    let training: Vec<ForecastObservationPair> = window
        .pairs()
        .iter()
        .filter(|p| {
            if matches!(config.variant, ModelVariant::Local) {
                return p.station_id == station_id;
            }
            if let Some(allowed) = &config.train_stations {
                if !allowed.contains(&p.station_id) {
                    return false;
                }
            }
            if p.station_id == station_id {
                had_target_pairs = true;
                return false; // area-covering: leave the target station out
            }
            true
        })
        .cloned()
        .collect();
    if training.is_empty() {
        outcome.failure = Some("no training pairs after station filtering".to_string());
        return outcome;
    }

    let target_meta = match sqrt.station(station_id) {
        Some(meta) => meta.clone(),
        None => {
            outcome.failure = Some(format!("station '{station_id}' missing from register"));
            return outcome;
        }
    };

    let weights = match &config.variant {
        ModelVariant::Raw => unreachable!("raw passthrough never fits"),
        ModelVariant::Global | ModelVariant::Local => WeightVector::unit(training.len()),
        ModelVariant::Dem { l } | ModelVariant::DemPretest { l, .. } => {
            let query = NeighborQuery::station(&target_meta);
            match nn_weights(
                &query,
                &training,
                sqrt.stations(),
                *l,
                config.distance,
                NeighborMode::AreaCovering,
            ) {
                Ok(w) => w,
                Err(e) => {
                    outcome.failure = Some(e.to_string());
                    return outcome;
                }
            }
        }
    };

    let mut rng =
        ChaCha12Rng::seed_from_u64(task_seed(config.seed, station_id, month, config.lead_time));

    match &config.variant {
        ModelVariant::Global | ModelVariant::Local | ModelVariant::Dem { .. } => {
            let result = match fit(&training, &weights, &config.fit) {
                Ok(r) => r,
                Err(e) => {
                    outcome.failure = Some(e.to_string());
                    return outcome;
                }
            };
            let label = if matches!(config.variant, ModelVariant::Global) && !had_target_pairs {
                "global".to_string()
            } else {
                station_id.to_string()
            };
            outcome.model = Some(FittedModel {
                psi: result.psi.as_array(),
                meta: ModelMeta {
                    station_id: label,
                    target_month: month,
                    lead_time: config.lead_time,
                    l: config.variant.neighbor_count(),
                    pretest_variant: None,
                    accepted: true,
                },
            });
            match emit_postprocessed(&eval_orig, &eval_sqrt, &result.psi, config, &mut rng) {
                Ok(predictions) => outcome.predictions = predictions,
                Err(e) => outcome.failure = Some(e.to_string()),
            }
        }
        ModelVariant::DemPretest { l, pretest } => {
            // restrict the training year to the selected similar stations
            let selected: Vec<ForecastObservationPair> = training
                .iter()
                .zip(weights.values())
                .filter(|(_, &w)| w > 0.0)
                .map(|(p, _)| p.clone())
                .collect();

            let mut record = PretestRecord {
                station_id: station_id.to_string(),
                target_month: month,
                lead_time: config.lead_time,
                pretest_variant: pretest.index(),
                accepted: false,
                traintest_size: 0,
                traintest_mean_crps_model: None,
                traintest_mean_crps_raw: None,
                note: None,
            };

            let split = pretest_split(&selected, month, *pretest);
            let decision = split.and_then(|(traintrain, traintest)| {
                if traintrain.is_empty() {
                    return Err(PretestError::EmptyTraintrain { target: month });
                }
                pretest_decide(
                    &traintrain,
                    &traintest,
                    &WeightVector::unit(traintrain.len()),
                    &config.fit,
                )
            });

            let accepted = match decision {
                Ok(result) => {
                    record.accepted = result.accepted;
                    record.traintest_size = result.traintest_size;
                    record.traintest_mean_crps_model = result.traintest_mean_crps_model;
                    record.traintest_mean_crps_raw = Some(result.traintest_mean_crps_raw);
                    record.note = result.failure;
                    result.accepted
                }
                Err(e) => {
                    record.note = Some(e.to_string());
                    false
                }
            };

            if accepted {
                // production refit on the whole training year of the
                // selected stations
                match fit(&selected, &WeightVector::unit(selected.len()), &config.fit) {
                    Ok(result) => {
                        outcome.model = Some(FittedModel {
                            psi: result.psi.as_array(),
                            meta: ModelMeta {
                                station_id: station_id.to_string(),
                                target_month: month,
                                lead_time: config.lead_time,
                                l: Some(*l),
                                pretest_variant: Some(pretest.index()),
                                accepted: true,
                            },
                        });
                        match emit_postprocessed(
                            &eval_orig,
                            &eval_sqrt,
                            &result.psi,
                            config,
                            &mut rng,
                        ) {
                            Ok(predictions) => outcome.predictions = predictions,
                            Err(e) => outcome.failure = Some(e.to_string()),
                        }
                    }
                    Err(e) => {
                        record.accepted = false;
                        record.note = Some(format!("refit failed, raw retained: {e}"));
                        outcome.predictions =
                            eval_orig.iter().map(|p| passthrough(p, config)).collect();
                    }
                }
            } else {
                outcome.predictions = eval_orig.iter().map(|p| passthrough(p, config)).collect();
            }
            outcome.pretest = Some(record);
        }
        ModelVariant::Raw => unreachable!("handled before fitting"),
    }

    outcome
}

fn passthrough(pair: &ForecastObservationPair, config: &RunConfig) -> PredictedPair {
    PredictedPair {
        model: config.variant.label().to_string(),
        station_id: pair.station_id.clone(),
        date: pair.date,
        lead_time: pair.lead_time,
        observation: pair.observation,
        members: pair.forecast.members().to_vec(),
        params: None,
        postprocessed: false,
    }
}

fn emit_postprocessed(
    eval_orig: &[&ForecastObservationPair],
    eval_sqrt: &[&ForecastObservationPair],
    psi: &CoefficientVector,
    config: &RunConfig,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<PredictedPair>, FitError> {
    let mut predictions = Vec::with_capacity(eval_orig.len());
    for (orig, sq) in eval_orig.iter().zip(eval_sqrt) {
        let params = link(psi, &sq.forecast)?;
        let members = back_transform(&params, rng, config.n_samples, config.sampling);
        predictions.push(PredictedPair {
            model: config.variant.label().to_string(),
            station_id: orig.station_id.clone(),
            date: orig.date,
            lead_time: orig.lead_time,
            observation: orig.observation,
            members,
            params: Some(params),
            postprocessed: true,
        });
    }
    Ok(predictions)
}

/// The model family a neighbor-count search optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectBase {
    Dem,
    /// Searches the grid jointly with the three pretest variants.
    DemPretest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub l: usize,
    pub pretest_variant: Option<u8>,
    pub mean_crps: f64,
    pub pairs: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LSelection {
    pub l: usize,
    pub pretest: Option<PretestVariant>,
    pub mean_crps: f64,
    /// Every evaluated grid point, in evaluation order.
    pub evaluated: Vec<GridPoint>,
}

/// Choose the neighbor count (and pretest variant) minimizing the mean CRPS
/// on the original scale over the validation months. Ties break to the
/// smallest L, then to the earliest pretest variant.
pub fn select_l(
    dataset: &Dataset,
    grid: &[usize],
    base: SelectBase,
    validation_months: &[MonthRef],
    config: &RunConfig,
) -> Result<LSelection, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::EmptyGrid);
    }
    let mut grid: Vec<usize> = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.first() == Some(&0) {
        return Err(PipelineError::InvalidConfig(
            "L grid entries must be >= 1".into(),
        ));
    }

    let variants: Vec<Option<PretestVariant>> = match base {
        SelectBase::Dem => vec![None],
        SelectBase::DemPretest => vec![
            Some(PretestVariant::SameMonthPriorYear),
            Some(PretestVariant::MonthBefore),
            Some(PretestVariant::Both),
        ],
    };

    let mut evaluated = Vec::new();
    let mut best: Option<(usize, Option<PretestVariant>, f64)> = None;
    for &l in &grid {
        for pretest in &variants {
            let variant = match pretest {
                None => ModelVariant::Dem { l },
                Some(v) => ModelVariant::DemPretest { l, pretest: *v },
            };
            let run_config = RunConfig {
                variant,
                target_months: validation_months.to_vec(),
                ..config.clone()
            };
            let output = run_variant(dataset, &run_config)?;
            if output.predictions.is_empty() {
                evaluated.push(GridPoint {
                    l,
                    pretest_variant: pretest.map(|v| v.index()),
                    mean_crps: f64::INFINITY,
                    pairs: 0,
                    failures: output.failures.len(),
                });
                continue;
            }
            let mean_crps = output
                .predictions
                .iter()
                .map(|p| {
                    let forecast = crate::data::EnsembleForecast::new(p.members.clone())
                        .expect("emitted members are non-negative");
                    crps_ensemble(&forecast, p.observation)
                })
                .sum::<f64>()
                / output.predictions.len() as f64;
            evaluated.push(GridPoint {
                l,
                pretest_variant: pretest.map(|v| v.index()),
                mean_crps,
                pairs: output.predictions.len(),
                failures: output.failures.len(),
            });
            let better = match &best {
                None => true,
                Some((_, _, best_crps)) => mean_crps < *best_crps,
            };
            if better {
                best = Some((l, *pretest, mean_crps));
            }
        }
    }

    match best {
        Some((l, pretest, mean_crps)) => Ok(LSelection {
            l,
            pretest,
            mean_crps,
            evaluated,
        }),
        None => Err(PipelineError::AllGridPointsFailed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            resamples: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub pit_bins: usize,
    pub bootstrap: Option<BootstrapOptions>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            pit_bins: 20,
            bootstrap: None,
        }
    }
}

/// Score model runs against their observations and the raw reference.
///
/// Every model pair must align with a reference pair by station, date and
/// lead time. Skill is reported as a fraction (0.05 = 5% CRPS reduction).
pub fn verify_run(
    model_runs: &[(&str, &[PredictedPair])],
    reference: &[PredictedPair],
    thresholds: &[Threshold],
    options: &VerifyOptions,
) -> Result<VerificationReport, PipelineError> {
    if reference.is_empty() {
        return Err(PipelineError::EmptyRun {
            model: "reference".to_string(),
        });
    }
    if options.pit_bins == 0 {
        return Err(PipelineError::InvalidConfig("pit_bins must be >= 1".into()));
    }
    let mut reference_map: BTreeMap<(&str, NaiveDate, LeadTime), &PredictedPair> = BTreeMap::new();
    for pair in reference {
        if reference_map.insert(pair.key(), pair).is_some() {
            return Err(PipelineError::Misaligned(format!(
                "duplicate reference pair for {} {}",
                pair.station_id, pair.date
            )));
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
    let reference_summary = summarize_model(
        "raw",
        reference,
        &reference_map,
        thresholds,
        options,
        &mut rng,
    )?;

    let mut models = Vec::with_capacity(model_runs.len());
    for (name, predictions) in model_runs {
        let summary = summarize_model(
            name,
            predictions,
            &reference_map,
            thresholds,
            options,
            &mut rng,
        )?;
        models.push(summary);
    }

    Ok(VerificationReport {
        thresholds: thresholds.iter().map(|t| t.value()).collect(),
        pit_bins: options.pit_bins,
        reference: reference_summary,
        models,
    })
}

fn summarize_model(
    name: &str,
    predictions: &[PredictedPair],
    reference: &BTreeMap<(&str, NaiveDate, LeadTime), &PredictedPair>,
    thresholds: &[Threshold],
    options: &VerifyOptions,
    rng: &mut ChaCha12Rng,
) -> Result<ModelSummary, PipelineError> {
    if predictions.is_empty() {
        return Err(PipelineError::EmptyRun {
            model: name.to_string(),
        });
    }
    let mut sorted: Vec<&PredictedPair> = predictions.iter().collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));
    for window in sorted.windows(2) {
        if window[0].key() == window[1].key() {
            return Err(PipelineError::Misaligned(format!(
                "duplicate prediction for {} {} in model '{name}'",
                window[0].station_id, window[0].date
            )));
        }
    }

    let ensemble_size = sorted[0].members.len();
    let mut crps_values = Vec::with_capacity(sorted.len());
    let mut raw_crps_values = Vec::with_capacity(sorted.len());
    let mut brier_sums = vec![0.0; thresholds.len()];
    let mut raw_brier_sums = vec![0.0; thresholds.len()];
    let mut pit_values = Vec::with_capacity(sorted.len());
    let mut rank_hist = RankHistogram::new(ensemble_size);
    let mut monthly: BTreeMap<MonthRef, (f64, f64, usize)> = BTreeMap::new();
    let mut stations: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();

    for pair in &sorted {
        let raw = reference.get(&pair.key()).ok_or_else(|| {
            PipelineError::Misaligned(format!(
                "model '{name}' prediction for {} {} has no reference pair",
                pair.station_id, pair.date
            ))
        })?;
        if pair.observation != raw.observation {
            return Err(PipelineError::Misaligned(format!(
                "observation mismatch for {} {}",
                pair.station_id, pair.date
            )));
        }
        if pair.members.len() != ensemble_size {
            return Err(PipelineError::Misaligned(format!(
                "model '{name}' mixes ensemble sizes ({} vs {ensemble_size})",
                pair.members.len()
            )));
        }

        let forecast = crate::data::EnsembleForecast::new(pair.members.clone())
            .map_err(|e| PipelineError::Misaligned(format!("bad members: {e}")))?;
        let raw_forecast = crate::data::EnsembleForecast::new(raw.members.clone())
            .map_err(|e| PipelineError::Misaligned(format!("bad reference members: {e}")))?;

        let crps = crps_ensemble(&forecast, pair.observation);
        let raw_crps = crps_ensemble(&raw_forecast, raw.observation);
        crps_values.push(crps);
        raw_crps_values.push(raw_crps);

        for (i, threshold) in thresholds.iter().enumerate() {
            brier_sums[i] += brier_ensemble(&forecast, pair.observation, *threshold);
            raw_brier_sums[i] += brier_ensemble(&raw_forecast, raw.observation, *threshold);
        }

        // PIT on the modeling (sqrt) scale for parametric forecasts, on the
        // empirical ensemble otherwise
        let v: f64 = rng.random();
        let pit = match &pair.params {
            Some(params) => pit_randomized(params, pair.observation.sqrt(), v),
            None => pit_randomized_ensemble(&forecast, pair.observation, v),
        };
        pit_values.push(pit);
        rank_hist.observe(rank_of_observation(&forecast, pair.observation, rng));

        let slot = monthly.entry(pair.month()).or_insert((0.0, 0.0, 0));
        slot.0 += crps;
        slot.1 += raw_crps;
        slot.2 += 1;
        let slot = stations.entry(&pair.station_id).or_insert((0.0, 0.0, 0));
        slot.0 += crps;
        slot.1 += raw_crps;
        slot.2 += 1;
    }

    let n = sorted.len() as f64;
    let mean_crps = crps_values.iter().sum::<f64>() / n;
    let raw_mean_crps = raw_crps_values.iter().sum::<f64>() / n;
    let skill_vs_raw = ratio_skill(mean_crps, raw_mean_crps);

    let brier: Vec<BrierSummary> = thresholds
        .iter()
        .enumerate()
        .map(|(i, threshold)| {
            let mean_brier = brier_sums[i] / n;
            let raw_mean_brier = raw_brier_sums[i] / n;
            BrierSummary {
                threshold: threshold.value(),
                mean_brier,
                raw_mean_brier,
                skill_vs_raw: ratio_skill(mean_brier, raw_mean_brier),
            }
        })
        .collect();

    let monthly_rows: Vec<MonthlyRow> = monthly
        .into_iter()
        .map(|(month, (model_sum, raw_sum, count))| MonthlyRow {
            month,
            pairs: count,
            mean_crps: model_sum / count as f64,
            raw_mean_crps: raw_sum / count as f64,
            skill: ratio_skill(model_sum / count as f64, raw_sum / count as f64),
        })
        .collect();
    let station_rows: Vec<StationRow> = stations
        .into_iter()
        .map(|(station_id, (model_sum, raw_sum, count))| StationRow {
            station_id: station_id.to_string(),
            pairs: count,
            mean_crps: model_sum / count as f64,
            raw_mean_crps: raw_sum / count as f64,
            skill: ratio_skill(model_sum / count as f64, raw_sum / count as f64),
        })
        .collect();

    let bootstrap = options.bootstrap.as_ref().map(|opts| {
        let mut boot_rng = ChaCha12Rng::seed_from_u64(opts.seed);
        let mut means = bootstrap_means(&crps_values, opts.resamples, &mut boot_rng);
        means.sort_by(f64::total_cmp);
        let pick = |q: f64| means[((means.len() - 1) as f64 * q).round() as usize];
        let boot_mean = means.iter().sum::<f64>() / means.len() as f64;
        let variance = means
            .iter()
            .map(|m| (m - boot_mean) * (m - boot_mean))
            .sum::<f64>()
            / means.len() as f64;
        BootstrapSummary {
            resamples: opts.resamples,
            seed: opts.seed,
            mean: boot_mean,
            sd: variance.sqrt(),
            p05: pick(0.05),
            p95: pick(0.95),
        }
    });

    Ok(ModelSummary {
        name: name.to_string(),
        pairs: sorted.len(),
        mean_crps,
        raw_mean_crps,
        skill_vs_raw,
        brier,
        pit_histogram: histogram_counts(&pit_values, options.pit_bins),
        rank_histogram: rank_hist.counts().to_vec(),
        monthly: monthly_rows,
        stations: station_rows,
        bootstrap,
    })
}

fn ratio_skill(model_mean: f64, reference_mean: f64) -> Option<f64> {
    if reference_mean > 0.0 {
        Some(1.0 - model_mean / reference_mean)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthConfig};

    fn months(from: (i32, u32), n: u32) -> Vec<MonthRef> {
        let start = MonthRef::new(from.0, from.1);
        (0..n).map(|i| start.plus_months(i)).collect()
    }

    fn small_synth(seed: u64) -> Dataset {
        let config = SynthConfig {
            stations: 6,
            months: 15,
            ..SynthConfig::default()
        };
        generate_synthetic(&config, seed).unwrap().dataset
    }

    #[test]
    fn raw_variant_passes_members_through_bit_identically() {
        let dataset = small_synth(3);
        let config = RunConfig::new(
            ModelVariant::Raw,
            LeadTime::from_days(1.0).unwrap(),
            months((2017, 1), 2),
            0,
        );
        let output = run_variant(&dataset, &config).unwrap();
        assert!(!output.predictions.is_empty());
        assert!(output.models.is_empty());
        let by_key: BTreeMap<_, _> = dataset
            .pairs()
            .iter()
            .map(|p| ((p.station_id.clone(), p.date), p))
            .collect();
        for prediction in &output.predictions {
            let pair = by_key[&(prediction.station_id.clone(), prediction.date)];
            assert_eq!(prediction.members, pair.forecast.members());
            assert_eq!(prediction.observation, pair.observation);
            assert!(!prediction.postprocessed);
        }
    }

    #[test]
    fn back_transform_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        // vanishing scale: 21 copies of the squared location
        let tight = CensoredLogisticParams::new(2.0, 1e-12).unwrap();
        let values = back_transform(&tight, &mut rng, 21, SamplingMode::Random);
        assert_eq!(values.len(), 21);
        for v in &values {
            assert!((v - 4.0).abs() < 1e-6);
        }
        // fully censored distribution: all zeros
        let censored = CensoredLogisticParams::new(-50.0, 0.1).unwrap();
        let zeros = back_transform(&censored, &mut rng, 21, SamplingMode::Random);
        assert!(zeros.iter().all(|&v| v == 0.0));
        // identical seeds give identical draws
        let p = CensoredLogisticParams::new(1.0, 0.5).unwrap();
        let mut r1 = ChaCha12Rng::seed_from_u64(9);
        let mut r2 = ChaCha12Rng::seed_from_u64(9);
        assert_eq!(
            back_transform(&p, &mut r1, 21, SamplingMode::Random),
            back_transform(&p, &mut r2, 21, SamplingMode::Random)
        );
        // quantile mode is rng-free and ordered
        let grid = back_transform(&p, &mut rng, 21, SamplingMode::QuantileGrid);
        assert!(grid.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dem_with_all_stations_matches_global() {
        let dataset = small_synth(11);
        let lead = LeadTime::from_days(1.0).unwrap();
        let target = months((2017, 2), 1);
        let global = RunConfig::new(ModelVariant::Global, lead, target.clone(), 5);
        let dem = RunConfig {
            variant: ModelVariant::Dem { l: 100 },
            ..RunConfig::new(ModelVariant::Global, lead, target, 5)
        };
        let g = run_variant(&dataset, &global).unwrap();
        let d = run_variant(&dataset, &dem).unwrap();
        assert_eq!(g.models.len(), d.models.len());
        let d_by: BTreeMap<_, _> = d
            .models
            .iter()
            .map(|m| ((m.meta.target_month, m.meta.station_id.clone()), m.psi))
            .collect();
        // station labels differ (global label vs station), compare by month
        // and sorted coefficient sets
        let mut g_psis: Vec<[f64; 5]> = g.models.iter().map(|m| m.psi).collect();
        let mut d_psis: Vec<[f64; 5]> = d_by.values().copied().collect();
        g_psis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d_psis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // every dem fit equals the corresponding global fit coefficientwise
        for d_psi in &d_psis {
            let matched = g_psis
                .iter()
                .any(|g_psi| g_psi.iter().zip(d_psi).all(|(a, b)| (a - b).abs() < 1e-6));
            assert!(matched, "no global fit matches {d_psi:?}");
        }
        // predictions agree bitwise (same seeds, same coefficients)
        assert_eq!(g.predictions.len(), d.predictions.len());
        for (a, b) in g.predictions.iter().zip(&d.predictions) {
            assert_eq!(a.members, b.members);
        }
    }

    #[test]
    fn verify_on_raw_reports_zero_skill_everywhere() {
        let dataset = small_synth(17);
        let config = RunConfig::new(
            ModelVariant::Raw,
            LeadTime::from_days(1.0).unwrap(),
            months((2017, 1), 3),
            0,
        );
        let output = run_variant(&dataset, &config).unwrap();
        let thresholds = [
            Threshold::new(0.1).unwrap(),
            Threshold::new(5.0).unwrap(),
            Threshold::new(20.0).unwrap(),
        ];
        let report = verify_run(
            &[("raw-copy", &output.predictions)],
            &output.predictions,
            &thresholds,
            &VerifyOptions::default(),
        )
        .unwrap();
        let model = &report.models[0];
        assert_eq!(model.skill_vs_raw, Some(0.0));
        for entry in &model.brier {
            if entry.raw_mean_brier > 0.0 {
                assert_eq!(entry.skill_vs_raw, Some(0.0));
            }
        }
        for row in &model.monthly {
            assert_eq!(row.skill, Some(0.0));
        }
        for row in &model.stations {
            assert_eq!(row.skill, Some(0.0));
        }
        // monthly series covers exactly the requested target months
        let got: Vec<MonthRef> = model.monthly.iter().map(|r| r.month).collect();
        assert_eq!(got, months((2017, 1), 3));
    }

    #[test]
    fn verify_rejects_misaligned_outputs() {
        let dataset = small_synth(19);
        let config = RunConfig::new(
            ModelVariant::Raw,
            LeadTime::from_days(1.0).unwrap(),
            months((2017, 1), 1),
            0,
        );
        let output = run_variant(&dataset, &config).unwrap();
        let mut shifted = output.predictions.clone();
        shifted[0].date = shifted[0].date.succ_opt().unwrap();
        // the shifted pair has no reference partner (duplicate-or-missing)
        let result = verify_run(
            &[("bad", &shifted)],
            &output.predictions,
            &[Threshold::new(0.1).unwrap()],
            &VerifyOptions::default(),
        );
        assert!(matches!(result, Err(PipelineError::Misaligned(_))));
    }

    #[test]
    fn select_l_with_single_grid_point_returns_it() {
        let dataset = small_synth(23);
        let config = RunConfig::new(
            ModelVariant::Dem { l: 1 },
            LeadTime::from_days(1.0).unwrap(),
            months((2017, 2), 1),
            0,
        );
        let selection = select_l(
            &dataset,
            &[3],
            SelectBase::Dem,
            &months((2017, 2), 1),
            &config,
        )
        .unwrap();
        assert_eq!(selection.l, 3);
        assert!(selection.pretest.is_none());
        assert_eq!(selection.evaluated.len(), 1);
    }

    #[test]
    fn task_seeds_differ_across_tasks_and_match_across_runs() {
        let a = task_seed(
            1,
            "S001",
            MonthRef::new(2017, 3),
            LeadTime::from_days(1.0).unwrap(),
        );
        let b = task_seed(
            1,
            "S002",
            MonthRef::new(2017, 3),
            LeadTime::from_days(1.0).unwrap(),
        );
        let c = task_seed(
            1,
            "S001",
            MonthRef::new(2017, 4),
            LeadTime::from_days(1.0).unwrap(),
        );
        let d = task_seed(
            2,
            "S001",
            MonthRef::new(2017, 3),
            LeadTime::from_days(1.0).unwrap(),
        );
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_eq!(
            a,
            task_seed(
                1,
                "S001",
                MonthRef::new(2017, 3),
                LeadTime::from_days(1.0).unwrap()
            )
        );
    }
}
