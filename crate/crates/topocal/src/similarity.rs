//! Station-similarity distances and nearest-neighbor training weights.
//!
//! Training pairs from the L most similar stations receive weight 1, all
//! others 0. Stations tied at the L-th ordered distance are all included, so
//! the selected set can exceed L.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ForecastObservationPair, StationMeta};
use crate::fit::WeightVector;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("no training stations available")]
    NoTrainingStations,
    #[error("rank-combined distances need at least 2 stations, found {0}")]
    TooFewStations(usize),
    #[error("training pair references unknown station '{0}'")]
    UnknownStation(String),
    #[error("the {0:?} distance needs ensemble statistics on the query")]
    MissingEnsembleStats(DistanceKind),
    #[error("neighbor count L must be at least 1")]
    ZeroNeighbors,
}

/// The dissimilarity measure used to order candidate stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Absolute difference of the 31 km smoothed elevation.
    Dem31,
    /// Absolute difference of the 15 km smoothed elevation.
    Dem15,
    /// Sum of middle-tie ranks over both smoothed elevations.
    DemBothRanks,
    /// Euclidean distance in latitude/longitude degrees.
    SpatialEuclid,
    /// Sum of middle-tie ranks over latitude, longitude and height.
    ThreeDimRanks,
    /// Euclidean distance between (ensemble mean, ensemble sd) pairs; a
    /// per-pair condition distance rather than a station distance.
    EnsChar,
}

/// Fields a rank-combined distance can draw on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankField {
    Dem31,
    Dem15,
    Latitude,
    Longitude,
    Height,
}

impl RankField {
    fn get(&self, s: &StationMeta) -> f64 {
        match self {
            RankField::Dem31 => s.dem_31km,
            RankField::Dem15 => s.dem_15km,
            RankField::Latitude => s.latitude,
            RankField::Longitude => s.longitude,
            RankField::Height => s.height,
        }
    }
}

/// |DEM(a) - DEM(b)| on the 31 km field, meters.
pub fn dem_distance(a: &StationMeta, b: &StationMeta) -> f64 {
    (a.dem_31km - b.dem_31km).abs()
}

/// Euclidean distance in coordinate degrees.
pub fn spatial_distance(a: &StationMeta, b: &StationMeta) -> f64 {
    let dlat = a.latitude - b.latitude;
    let dlon = a.longitude - b.longitude;
    (dlat * dlat + dlon * dlon).sqrt()
}

/// Euclidean distance between two (ensemble mean, ensemble sd) summaries.
pub fn enschar_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dm = a.0 - b.0;
    let ds = a.1 - b.1;
    (dm * dm + ds * ds).sqrt()
}

/// 1-based ranks of `values`, ascending, with ties given their middle rank.
pub fn middle_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the average of ranks i+1..=j+1
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Per-station rank-sum scores against the target: for each field, rank the
/// absolute differences (middle ranks on ties) and sum the ranks. Lower means
/// more similar.
pub fn rank_combined_distance(
    target: &StationMeta,
    stations: &[StationMeta],
    fields: &[RankField],
) -> Result<Vec<f64>, SimilarityError> {
    if stations.len() < 2 {
        return Err(SimilarityError::TooFewStations(stations.len()));
    }
    assert!(!fields.is_empty(), "fields must be nonempty");
    let mut scores = vec![0.0; stations.len()];
    for field in fields {
        let diffs: Vec<f64> = stations
            .iter()
            .map(|s| (field.get(s) - field.get(target)).abs())
            .collect();
        for (score, rank) in scores.iter_mut().zip(middle_ranks(&diffs)) {
            *score += rank;
        }
    }
    Ok(scores)
}

/// Mark every candidate whose distance is at most the L-th smallest.
///
/// All candidates tied at the threshold are included; with `l` at least the
/// candidate count, everything is selected.
pub fn select_within_l(distances: &[f64], l: usize) -> Result<Vec<bool>, SimilarityError> {
    if l == 0 {
        return Err(SimilarityError::ZeroNeighbors);
    }
    if distances.is_empty() {
        return Err(SimilarityError::NoTrainingStations);
    }
    if l >= distances.len() {
        return Ok(vec![true; distances.len()]);
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted[l - 1];
    Ok(distances.iter().map(|&d| d <= threshold).collect())
}

/// Whether the query station keeps its own past data as training material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborMode {
    /// The query station is excluded from the candidate set, simulating
    /// prediction at a location without past measurements.
    AreaCovering,
    /// The neighbor set is exactly the query station itself.
    Local,
}

/// A prediction location, optionally with the ensemble statistics that the
/// condition-based distance needs.
#[derive(Debug, Clone, Copy)]
pub struct NeighborQuery<'a> {
    pub station: &'a StationMeta,
    pub ens_mean: Option<f64>,
    pub ens_sd: Option<f64>,
}

impl<'a> NeighborQuery<'a> {
    pub fn station(station: &'a StationMeta) -> Self {
        NeighborQuery {
            station,
            ens_mean: None,
            ens_sd: None,
        }
    }
}

/// Binary training weights: 1 for pairs from the L most similar stations
/// (ties at the threshold included), 0 elsewhere.
///
/// For [`DistanceKind::EnsChar`] the candidates are the individual training
/// pairs rather than stations, and `l` counts conditions.
pub fn nn_weights(
    query: &NeighborQuery,
    pairs: &[ForecastObservationPair],
    stations: &BTreeMap<String, StationMeta>,
    l: usize,
    kind: DistanceKind,
    mode: NeighborMode,
) -> Result<WeightVector, SimilarityError> {
    if l == 0 {
        return Err(SimilarityError::ZeroNeighbors);
    }
    let target_id = &query.station.station_id;

    if mode == NeighborMode::Local {
        let weights: Vec<f64> = pairs
            .iter()
            .map(|p| if &p.station_id == target_id { 1.0 } else { 0.0 })
            .collect();
        if weights.iter().all(|&w| w == 0.0) {
            return Err(SimilarityError::NoTrainingStations);
        }
        return WeightVector::new(weights).map_err(|_| SimilarityError::NoTrainingStations);
    }

    if kind == DistanceKind::EnsChar {
        let (mean, sd) = match (query.ens_mean, query.ens_sd) {
            (Some(m), Some(s)) => (m, s),
            _ => return Err(SimilarityError::MissingEnsembleStats(kind)),
        };
        // candidates are the pairs themselves, own-station pairs excluded
        let candidate_idx: Vec<usize> = (0..pairs.len())
            .filter(|&i| &pairs[i].station_id != target_id)
            .collect();
        if candidate_idx.is_empty() {
            return Err(SimilarityError::NoTrainingStations);
        }
        let distances: Vec<f64> = candidate_idx
            .iter()
            .map(|&i| {
                enschar_distance(
                    (mean, sd),
                    (pairs[i].forecast.mean(), pairs[i].forecast.sd()),
                )
            })
            .collect();
        let selected = select_within_l(&distances, l)?;
        let mut weights = vec![0.0; pairs.len()];
        for (slot, sel) in candidate_idx.iter().zip(selected) {
            if sel {
                weights[*slot] = 1.0;
            }
        }
        return WeightVector::new(weights).map_err(|_| SimilarityError::NoTrainingStations);
    }

    // distinct candidate stations present in the training pairs
    let mut candidates: Vec<&StationMeta> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for pair in pairs {
        if &pair.station_id == target_id || !seen.insert(&pair.station_id) {
            continue;
        }
        let meta = stations
            .get(&pair.station_id)
            .ok_or_else(|| SimilarityError::UnknownStation(pair.station_id.clone()))?;
        candidates.push(meta);
    }
    if candidates.is_empty() {
        return Err(SimilarityError::NoTrainingStations);
    }

    let owned: Vec<StationMeta> = candidates.iter().map(|&m| m.clone()).collect();
    let distances: Vec<f64> = match kind {
        DistanceKind::Dem31 => owned
            .iter()
            .map(|s| dem_distance(query.station, s))
            .collect(),
        DistanceKind::Dem15 => owned
            .iter()
            .map(|s| (query.station.dem_15km - s.dem_15km).abs())
            .collect(),
        DistanceKind::SpatialEuclid => owned
            .iter()
            .map(|s| spatial_distance(query.station, s))
            .collect(),
        DistanceKind::DemBothRanks => {
            if owned.len() < 2 {
                // a single candidate is trivially the nearest
                vec![0.0]
            } else {
                rank_combined_distance(
                    query.station,
                    &owned,
                    &[RankField::Dem31, RankField::Dem15],
                )?
            }
        }
        DistanceKind::ThreeDimRanks => {
            if owned.len() < 2 {
                vec![0.0]
            } else {
                rank_combined_distance(
                    query.station,
                    &owned,
                    &[RankField::Latitude, RankField::Longitude, RankField::Height],
                )?
            }
        }
        DistanceKind::EnsChar => unreachable!("handled above"),
    };

    let selected = select_within_l(&distances, l)?;
    let selected_ids: std::collections::BTreeSet<&str> = owned
        .iter()
        .zip(&selected)
        .filter(|(_, &sel)| sel)
        .map(|(s, _)| s.station_id.as_str())
        .collect();

    let weights: Vec<f64> = pairs
        .iter()
        .map(|p| {
            if selected_ids.contains(p.station_id.as_str()) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    WeightVector::new(weights).map_err(|_| SimilarityError::NoTrainingStations)
}
