//! Domain records, CSV ingestion, the square-root transform and
//! training-window selection.
//!
//! All records are immutable after construction and safe to share across
//! threads. Ingestion itself is single-threaded.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by ingestion, transformation and window selection.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("bad header: {message}")]
    BadHeader { message: String },
    #[error("line {line}: unknown station '{station_id}'")]
    UnknownStation { line: u64, station_id: String },
    #[error("line {line}: inconsistent ensemble size: expected {expected} members, found {found}")]
    InconsistentEnsembleSize {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("duplicate station '{station_id}'")]
    DuplicateStation { station_id: String },
    #[error("invalid {what}: {value}")]
    InvalidValue { what: String, value: f64 },
    #[error("invalid lead time {0} (expected one of 1, 1.5, 2, ..., 5 days)")]
    InvalidLeadTime(f64),
    #[error("dataset is already on the square-root scale")]
    AlreadyTransformed,
    #[error("no training data in window for target {target}")]
    EmptyWindow { target: MonthRef },
    #[error("empty ensemble (K must be >= 1)")]
    EmptyEnsemble,
}

/// Which scale the numeric values of a dataset are on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Precipitation in mm/day as observed.
    Original,
    /// Square roots of the original values.
    Sqrt,
}

/// Forecast lead time in days, restricted to the half-day grid 1, 1.5, ..., 5.
///
/// Stored internally in half-days so the type is `Eq`/`Ord`/`Hash`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LeadTime(u8);

impl LeadTime {
    pub fn from_days(days: f64) -> Result<Self, DataError> {
        let half = days * 2.0;
        if half.fract() == 0.0 && (2.0..=10.0).contains(&half) {
            Ok(LeadTime(half as u8))
        } else {
            Err(DataError::InvalidLeadTime(days))
        }
    }

    pub fn days(&self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl TryFrom<f64> for LeadTime {
    type Error = DataError;
    fn try_from(days: f64) -> Result<Self, DataError> {
        LeadTime::from_days(days)
    }
}

impl From<LeadTime> for f64 {
    fn from(lt: LeadTime) -> f64 {
        lt.days()
    }
}

impl fmt::Display for LeadTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.days())
    }
}

/// A calendar month, used as the unit of training-window arithmetic.
/// Serialized as `"YYYY-MM"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct MonthRef {
    pub year: i32,
    /// 1 = January, ..., 12 = December.
    pub month: u32,
}

impl From<MonthRef> for String {
    fn from(m: MonthRef) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for MonthRef {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        MonthRef::parse(&s).ok_or_else(|| format!("bad month '{s}', expected YYYY-MM"))
    }
}

impl MonthRef {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month must be in 1..=12");
        MonthRef { year, month }
    }

    pub fn of(date: NaiveDate) -> Self {
        MonthRef {
            year: date.year(),
            month: date.month(),
        }
    }

    /// Months since year zero; the total order used for window arithmetic.
    fn index(&self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    fn from_index(idx: i64) -> Self {
        MonthRef {
            year: (idx.div_euclid(12)) as i32,
            month: (idx.rem_euclid(12) + 1) as u32,
        }
    }

    pub fn minus_months(&self, n: u32) -> Self {
        Self::from_index(self.index() - i64::from(n))
    }

    pub fn plus_months(&self, n: u32) -> Self {
        Self::from_index(self.index() + i64::from(n))
    }

    pub fn prev(&self) -> Self {
        self.minus_months(1)
    }

    /// Same month one year earlier.
    pub fn prior_year(&self) -> Self {
        MonthRef {
            year: self.year - 1,
            month: self.month,
        }
    }

    /// Inclusive month range `[self, end]`.
    pub fn range_to(self, end: MonthRef) -> Vec<MonthRef> {
        let mut out = Vec::new();
        let mut idx = self.index();
        while idx <= end.index() {
            out.push(Self::from_index(idx));
            idx += 1;
        }
        out
    }

    /// Parse `"YYYY-MM"`.
    pub fn parse(s: &str) -> Option<Self> {
        let (y, m) = s.split_once('-')?;
        let year: i32 = y.parse().ok()?;
        let month: u32 = m.parse().ok()?;
        (1..=12)
            .contains(&month)
            .then_some(MonthRef { year, month })
    }
}

impl fmt::Display for MonthRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Station identity, coordinates and smoothed elevation covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    pub station_id: String,
    /// Degrees north.
    pub latitude: f64,
    /// Degrees east.
    pub longitude: f64,
    /// Station height above sea level, meters.
    pub height: f64,
    /// Smoothed elevation at 31 km resolution, meters.
    pub dem_31km: f64,
    /// Smoothed elevation at 15 km resolution, meters.
    pub dem_15km: f64,
}

impl StationMeta {
    pub fn new(
        station_id: impl Into<String>,
        latitude: f64,
        longitude: f64,
        height: f64,
        dem_31km: f64,
        dem_15km: f64,
    ) -> Result<Self, DataError> {
        let station_id = station_id.into();
        for (what, v) in [
            ("latitude", latitude),
            ("longitude", longitude),
            ("height", height),
            ("dem_31km", dem_31km),
            ("dem_15km", dem_15km),
        ] {
            if !v.is_finite() {
                return Err(DataError::InvalidValue {
                    what: format!("station {station_id} {what}"),
                    value: v,
                });
            }
        }
        Ok(StationMeta {
            station_id,
            latitude,
            longitude,
            height,
            dem_31km,
            dem_15km,
        })
    }
}

/// One K-member ensemble forecast with its derived statistics.
///
/// Members are kept in file order; the first member is the control run and is
/// used separately from the mean in the regression. The standard deviation
/// uses the sample (n-1) denominator and is defined as 0 for K = 1.
/// Serialized as the member list alone; the statistics are recomputed on
/// deserialization so they can never disagree with the members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EnsembleForecast {
    members: Vec<f64>,
    mean: f64,
    sd: f64,
}

impl From<EnsembleForecast> for Vec<f64> {
    fn from(f: EnsembleForecast) -> Vec<f64> {
        f.members
    }
}

impl TryFrom<Vec<f64>> for EnsembleForecast {
    type Error = DataError;
    fn try_from(members: Vec<f64>) -> Result<Self, DataError> {
        EnsembleForecast::new(members)
    }
}

impl EnsembleForecast {
    pub fn new(members: Vec<f64>) -> Result<Self, DataError> {
        if members.is_empty() {
            return Err(DataError::EmptyEnsemble);
        }
        for &m in &members {
            if !m.is_finite() || m < 0.0 {
                return Err(DataError::InvalidValue {
                    what: "ensemble member".into(),
                    value: m,
                });
            }
        }
        let (mean, sd) = mean_and_sample_sd(&members);
        Ok(EnsembleForecast { members, mean, sd })
    }

    pub fn members(&self) -> &[f64] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // K >= 1 by construction
    }

    /// The control member x_1.
    pub fn control(&self) -> f64 {
        self.members[0]
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation of the members (0 for a single member).
    pub fn sd(&self) -> f64 {
        self.sd
    }

    fn sqrt_members(&self) -> Result<Self, DataError> {
        EnsembleForecast::new(self.members.iter().map(|m| m.sqrt()).collect())
    }
}

fn mean_and_sample_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// A raw ensemble forecast paired with the verifying observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastObservationPair {
    pub station_id: String,
    pub date: NaiveDate,
    pub lead_time: LeadTime,
    pub forecast: EnsembleForecast,
    pub observation: f64,
}

impl ForecastObservationPair {
    pub fn new(
        station_id: impl Into<String>,
        date: NaiveDate,
        lead_time: LeadTime,
        forecast: EnsembleForecast,
        observation: f64,
    ) -> Result<Self, DataError> {
        if !observation.is_finite() || observation < 0.0 {
            return Err(DataError::InvalidValue {
                what: "observation".into(),
                value: observation,
            });
        }
        Ok(ForecastObservationPair {
            station_id: station_id.into(),
            date,
            lead_time,
            forecast,
            observation,
        })
    }

    pub fn month(&self) -> MonthRef {
        MonthRef::of(self.date)
    }

    /// Total order on pair content; used to canonicalize training data.
    pub(crate) fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        self.station_id
            .cmp(&other.station_id)
            .then(self.date.cmp(&other.date))
            .then(self.lead_time.cmp(&other.lead_time))
            .then(self.observation.total_cmp(&other.observation))
            .then_with(|| {
                let a = self.forecast.members();
                let b = other.forecast.members();
                a.len().cmp(&b.len()).then_with(|| {
                    for (x, y) in a.iter().zip(b) {
                        let ord = x.total_cmp(y);
                        if ord != std::cmp::Ordering::Equal {
                            return ord;
                        }
                    }
                    std::cmp::Ordering::Equal
                })
            })
    }
}

/// How the training window is placed relative to the target month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingPolicy {
    /// The 12 months immediately before the target month.
    Prior12Months,
    /// Only the month immediately before the target month.
    MonthBefore,
    /// The target month in the previous year.
    SameMonthPriorYear,
    /// Union of `MonthBefore` and `SameMonthPriorYear`.
    BothMonths,
}

impl TrainingPolicy {
    /// The months admitted by this policy, all strictly before `target`.
    pub fn window(&self, target: MonthRef) -> Vec<MonthRef> {
        match self {
            TrainingPolicy::Prior12Months => {
                (1..=12).rev().map(|n| target.minus_months(n)).collect()
            }
            TrainingPolicy::MonthBefore => vec![target.prev()],
            TrainingPolicy::SameMonthPriorYear => vec![target.prior_year()],
            TrainingPolicy::BothMonths => vec![target.prior_year(), target.prev()],
        }
    }
}

/// Forecast-observation pairs plus the station register they resolve against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pairs: Vec<ForecastObservationPair>,
    stations: BTreeMap<String, StationMeta>,
    scale: Scale,
    ensemble_size: usize,
    dropped_missing: usize,
}

impl Dataset {
    /// Assemble a dataset from parts, checking that every pair's station
    /// resolves and that the ensemble size is uniform.
    pub fn new(
        pairs: Vec<ForecastObservationPair>,
        stations: BTreeMap<String, StationMeta>,
        scale: Scale,
    ) -> Result<Self, DataError> {
        let ensemble_size = pairs.first().map_or(0, |p| p.forecast.len());
        for (i, pair) in pairs.iter().enumerate() {
            if !stations.contains_key(&pair.station_id) {
                return Err(DataError::UnknownStation {
                    line: i as u64 + 1,
                    station_id: pair.station_id.clone(),
                });
            }
            if pair.forecast.len() != ensemble_size {
                return Err(DataError::InconsistentEnsembleSize {
                    line: i as u64 + 1,
                    expected: ensemble_size,
                    found: pair.forecast.len(),
                });
            }
        }
        Ok(Dataset {
            pairs,
            stations,
            scale,
            ensemble_size,
            dropped_missing: 0,
        })
    }

    pub fn pairs(&self) -> &[ForecastObservationPair] {
        &self.pairs
    }

    pub fn stations(&self) -> &BTreeMap<String, StationMeta> {
        &self.stations
    }

    pub fn station(&self, id: &str) -> Option<&StationMeta> {
        self.stations.get(id)
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// Number of members per forecast (0 for an empty dataset).
    pub fn ensemble_size(&self) -> usize {
        self.ensemble_size
    }

    /// Rows dropped at ingestion because the observation was missing.
    pub fn dropped_missing(&self) -> usize {
        self.dropped_missing
    }

    /// A dataset with the same stations and scale but a filtered pair list.
    pub fn with_pairs(&self, pairs: Vec<ForecastObservationPair>) -> Dataset {
        Dataset {
            pairs,
            stations: self.stations.clone(),
            scale: self.scale,
            ensemble_size: self.ensemble_size,
            dropped_missing: self.dropped_missing,
        }
    }
}

/// Read a forecast file and a station file into a validated dataset.
///
/// `forecasts.csv` columns: `station_id,date,lead_time,obs,m01..mNN` with a
/// mandatory header naming the member columns. `stations.csv` columns:
/// `station_id,lat,lon,height_m,dem31_m,dem15_m`. Rows whose observation
/// field is empty (or `NA`) are dropped and counted.
///
/// # Errors
///
/// Malformed rows report their line number; unknown stations and member
/// counts that differ between rows are rejected.
pub fn ingest(forecast_csv: &Path, station_csv: &Path) -> Result<Dataset, DataError> {
    let stations = read_stations(station_csv)?;

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(forecast_csv)?;
    let header = reader.headers()?.clone();
    let member_count = validate_forecast_header(&header)?;

    let mut pairs = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 + member_count {
            let found = record.len().saturating_sub(4);
            return Err(DataError::InconsistentEnsembleSize {
                line,
                expected: member_count,
                found,
            });
        }
        let station_id = record[0].trim().to_string();
        if !stations.contains_key(&station_id) {
            return Err(DataError::UnknownStation { line, station_id });
        }
        let date = NaiveDate::parse_from_str(record[1].trim(), "%Y-%m-%d").map_err(|e| {
            DataError::MalformedRow {
                line,
                message: format!("bad date '{}': {e}", &record[1]),
            }
        })?;
        let lead_time =
            LeadTime::from_days(parse_field(&record[2], "lead_time", line)?).map_err(|e| {
                DataError::MalformedRow {
                    line,
                    message: e.to_string(),
                }
            })?;
        let obs_field = record[3].trim();
        if obs_field.is_empty() || obs_field.eq_ignore_ascii_case("na") {
            dropped += 1;
            continue;
        }
        let observation = parse_field(obs_field, "obs", line)?;
        let mut members = Vec::with_capacity(member_count);
        for idx in 0..member_count {
            members.push(parse_field(&record[4 + idx], &header[4 + idx], line)?);
        }
        let forecast = EnsembleForecast::new(members).map_err(|e| DataError::MalformedRow {
            line,
            message: e.to_string(),
        })?;
        let pair = ForecastObservationPair::new(station_id, date, lead_time, forecast, observation)
            .map_err(|e| DataError::MalformedRow {
                line,
                message: e.to_string(),
            })?;
        pairs.push(pair);
    }

    let mut dataset = Dataset::new(pairs, stations, Scale::Original)?;
    dataset.ensemble_size = member_count;
    dataset.dropped_missing = dropped;
    Ok(dataset)
}

fn parse_field(field: &str, what: &str, line: u64) -> Result<f64, DataError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| DataError::MalformedRow {
            line,
            message: format!("bad {what} value '{field}'"),
        })
}

fn validate_forecast_header(header: &csv::StringRecord) -> Result<usize, DataError> {
    let fixed = ["station_id", "date", "lead_time", "obs"];
    if header.len() < 5 {
        return Err(DataError::BadHeader {
            message: "expected station_id,date,lead_time,obs,m01..".into(),
        });
    }
    for (i, name) in fixed.iter().enumerate() {
        if header[i].trim() != *name {
            return Err(DataError::BadHeader {
                message: format!("column {} must be '{name}', found '{}'", i + 1, &header[i]),
            });
        }
    }
    Ok(header.len() - 4)
}

fn read_stations(path: &Path) -> Result<BTreeMap<String, StationMeta>, DataError> {
    let mut reader = csv::Reader::from_path(path)?;
    let expected = ["station_id", "lat", "lon", "height_m", "dem31_m", "dem15_m"];
    let header = reader.headers()?;
    if header.len() != expected.len() || header.iter().zip(expected).any(|(h, e)| h.trim() != e) {
        return Err(DataError::BadHeader {
            message: format!("station header must be '{}'", expected.join(",")),
        });
    }
    let mut stations = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].trim().to_string();
        let meta = StationMeta::new(
            id.clone(),
            parse_field(&record[1], "lat", line)?,
            parse_field(&record[2], "lon", line)?,
            parse_field(&record[3], "height_m", line)?,
            parse_field(&record[4], "dem31_m", line)?,
            parse_field(&record[5], "dem15_m", line)?,
        )
        .map_err(|e| DataError::MalformedRow {
            line,
            message: e.to_string(),
        })?;
        if stations.insert(id.clone(), meta).is_some() {
            return Err(DataError::DuplicateStation { station_id: id });
        }
    }
    Ok(stations)
}

/// Write the forecast side of a dataset in the ingestion format.
pub fn write_forecasts_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "station_id,date,lead_time,obs")?;
    for i in 1..=dataset.ensemble_size() {
        write!(out, ",m{i:02}")?;
    }
    writeln!(out)?;
    for pair in dataset.pairs() {
        write!(
            out,
            "{},{},{},{}",
            pair.station_id, pair.date, pair.lead_time, pair.observation
        )?;
        for m in pair.forecast.members() {
            write!(out, ",{m}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Write the station register in the ingestion format.
pub fn write_stations_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "station_id,lat,lon,height_m,dem31_m,dem15_m")?;
    for meta in dataset.stations().values() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            meta.station_id,
            meta.latitude,
            meta.longitude,
            meta.height,
            meta.dem_31km,
            meta.dem_15km
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Replace every member and observation by its square root.
///
/// Consumes the dataset so the original-scale values cannot be reused by
/// accident; calling it on an already transformed dataset is an error.
pub fn sqrt_transform(dataset: Dataset) -> Result<Dataset, DataError> {
    if dataset.scale == Scale::Sqrt {
        return Err(DataError::AlreadyTransformed);
    }
    let mut pairs = Vec::with_capacity(dataset.pairs.len());
    for pair in dataset.pairs {
        pairs.push(ForecastObservationPair {
            station_id: pair.station_id,
            date: pair.date,
            lead_time: pair.lead_time,
            forecast: pair.forecast.sqrt_members()?,
            observation: pair.observation.sqrt(),
        });
    }
    Ok(Dataset {
        pairs,
        stations: dataset.stations,
        scale: Scale::Sqrt,
        ensemble_size: dataset.ensemble_size,
        dropped_missing: dataset.dropped_missing,
    })
}

/// Select the pairs whose month falls in the policy window before
/// `target_month`. The target month itself is never included.
pub fn select_training_window(
    dataset: &Dataset,
    target_month: MonthRef,
    policy: TrainingPolicy,
) -> Result<Dataset, DataError> {
    let window = policy.window(target_month);
    let pairs: Vec<ForecastObservationPair> = dataset
        .pairs
        .iter()
        .filter(|p| window.contains(&p.month()))
        .cloned()
        .collect();
    if pairs.is_empty() {
        return Err(DataError::EmptyWindow {
            target: target_month,
        });
    }
    Ok(dataset.with_pairs(pairs))
}
