//! Seasonal pretest: decide per station and month whether postprocessing is
//! expected to beat the raw ensemble, plus auxiliary seasonal features.
//!
//! The training year is split into Traintrain and Traintest along seasonally
//! similar months. A model fitted on Traintrain is scored against the raw
//! ensemble on Traintest; postprocessing is accepted only when it is strictly
//! better there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EnsembleForecast, ForecastObservationPair, MonthRef};
use crate::fit::{fit, link, FitConfig, FitError, WeightVector};
use crate::scoring::crps_ensemble;

#[derive(Debug, Error)]
pub enum PretestError {
    #[error("pretest impossible: no pairs in the traintest month(s) for target {target}")]
    EmptyTraintest { target: MonthRef },
    #[error("pretest impossible: traintrain split is empty for target {target}")]
    EmptyTraintrain { target: MonthRef },
    #[error("month {0} out of range 1..=12")]
    MonthOutOfRange(u32),
    #[error("weights length {weights} does not match traintrain size {pairs}")]
    LengthMismatch { pairs: usize, weights: usize },
}

/// Which month(s) form the Traintest split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PretestVariant {
    /// The prediction month from the year before.
    SameMonthPriorYear,
    /// The month immediately before the prediction month.
    MonthBefore,
    /// Both of these months.
    Both,
}

impl PretestVariant {
    /// Numeric label 1..=3 used in file formats.
    pub fn index(&self) -> u8 {
        match self {
            PretestVariant::SameMonthPriorYear => 1,
            PretestVariant::MonthBefore => 2,
            PretestVariant::Both => 3,
        }
    }

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(PretestVariant::SameMonthPriorYear),
            2 => Some(PretestVariant::MonthBefore),
            3 => Some(PretestVariant::Both),
            _ => None,
        }
    }

    pub fn traintest_months(&self, target: MonthRef) -> Vec<MonthRef> {
        match self {
            PretestVariant::SameMonthPriorYear => vec![target.prior_year()],
            PretestVariant::MonthBefore => vec![target.prev()],
            PretestVariant::Both => vec![target.prior_year(), target.prev()],
        }
    }
}

/// The decision and the traintest evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretestOutcome {
    pub accepted: bool,
    /// Mean CRPS of the traintrain model over the traintest pairs (sqrt
    /// scale). Absent when no usable fit existed.
    pub traintest_mean_crps_model: Option<f64>,
    /// Mean CRPS of the raw ensemble over the traintest pairs (sqrt scale).
    pub traintest_mean_crps_raw: f64,
    /// Cardinality H of the traintest split.
    pub traintest_size: usize,
    /// Set when the traintrain fit failed and the raw ensemble was retained
    /// as a conservative fallback.
    pub failure: Option<String>,
}

/// Split a training year into (traintrain, traintest) along the variant's
/// months. The two parts partition the input.
pub fn pretest_split(
    training_year: &[ForecastObservationPair],
    target_month: MonthRef,
    variant: PretestVariant,
) -> Result<(Vec<ForecastObservationPair>, Vec<ForecastObservationPair>), PretestError> {
    let test_months = variant.traintest_months(target_month);
    let mut traintrain = Vec::new();
    let mut traintest = Vec::new();
    for pair in training_year {
        if test_months.contains(&pair.month()) {
            traintest.push(pair.clone());
        } else {
            traintrain.push(pair.clone());
        }
    }
    if traintest.is_empty() {
        return Err(PretestError::EmptyTraintest {
            target: target_month,
        });
    }
    Ok((traintrain, traintest))
}

/// Fit on traintrain, compare model and raw mean CRPS on traintest.
///
/// Acceptance requires the model to be strictly better; equality keeps the
/// raw ensemble. A failed fit also keeps the raw ensemble and records why.
pub fn pretest_decide(
    traintrain: &[ForecastObservationPair],
    traintest: &[ForecastObservationPair],
    weights: &WeightVector,
    fit_config: &FitConfig,
) -> Result<PretestOutcome, PretestError> {
    if traintest.is_empty() {
        return Err(PretestError::EmptyTraintest {
            target: MonthRef::new(0, 1),
        });
    }
    if traintrain.is_empty() {
        return Err(PretestError::EmptyTraintrain {
            target: MonthRef::new(0, 1),
        });
    }
    if weights.len() != traintrain.len() {
        return Err(PretestError::LengthMismatch {
            pairs: traintrain.len(),
            weights: weights.len(),
        });
    }

    let h = traintest.len();
    let raw_mean = traintest
        .iter()
        .map(|p| crps_ensemble(&p.forecast, p.observation))
        .sum::<f64>()
        / h as f64;

    let psi = match fit(traintrain, weights, fit_config) {
        Ok(result) => result.psi,
        Err(err) => {
            return Ok(PretestOutcome {
                accepted: false,
                traintest_mean_crps_model: None,
                traintest_mean_crps_raw: raw_mean,
                traintest_size: h,
                failure: Some(err.to_string()),
            });
        }
    };

    let mut model_sum = 0.0;
    for pair in traintest {
        let scored = link(&psi, &pair.forecast)
            .and_then(|params| params.crps(pair.observation).map_err(FitError::from));
        match scored {
            Ok(crps) => model_sum += crps,
            Err(err) => {
                return Ok(PretestOutcome {
                    accepted: false,
                    traintest_mean_crps_model: None,
                    traintest_mean_crps_raw: raw_mean,
                    traintest_size: h,
                    failure: Some(format!("traintest scoring failed: {err}")),
                });
            }
        }
    }
    let model_mean = model_sum / h as f64;

    Ok(PretestOutcome {
        accepted: raw_mean > model_mean,
        traintest_mean_crps_model: Some(model_mean),
        traintest_mean_crps_raw: raw_mean,
        traintest_size: h,
        failure: None,
    })
}

/// Seasonal sine covariate: sin(month * pi / 12).
pub fn sine_covariate(month: u32) -> Result<f64, PretestError> {
    if !(1..=12).contains(&month) {
        return Err(PretestError::MonthOutOfRange(month));
    }
    Ok((month as f64 * std::f64::consts::PI / 12.0).sin())
}

/// Season and prediction-situation class of a forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sit {
    DrySummer,
    WetSummer,
    DryWinter,
    WetWinter,
}

/// Classify a (sqrt-scale) forecast into wet/dry x summer/winter.
///
/// Dry means `mean - sd <= 0.1`, so slightly positive means with small
/// spread still count as dry. Summer is May through October.
pub fn sit_classify(forecast: &EnsembleForecast, month: u32) -> Result<Sit, PretestError> {
    if !(1..=12).contains(&month) {
        return Err(PretestError::MonthOutOfRange(month));
    }
    let dry = forecast.mean() - forecast.sd() <= 0.1;
    let summer = (5..=10).contains(&month);
    Ok(match (dry, summer) {
        (true, true) => Sit::DrySummer,
        (false, true) => Sit::WetSummer,
        (true, false) => Sit::DryWinter,
        (false, false) => Sit::WetWinter,
    })
}
