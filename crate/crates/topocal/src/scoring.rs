//! Proper scoring rules and calibration diagnostics.
//!
//! Scores are pure functions; the rank and PIT diagnostics that need
//! randomness take an explicit rng handle so callers own rng partitioning
//! across workers.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::censored_logistic::CensoredLogisticParams;
use crate::data::EnsembleForecast;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("degenerate reference: mean reference score must be strictly positive, got {0}")]
    DegenerateReference(f64),
    #[error("threshold must be finite and non-negative, got {0}")]
    InvalidThreshold(f64),
}

/// A precipitation exceedance threshold in mm/day on the original scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(mm_per_day: f64) -> Result<Self, ScoringError> {
        if !mm_per_day.is_finite() || mm_per_day < 0.0 {
            return Err(ScoringError::InvalidThreshold(mm_per_day));
        }
        Ok(Threshold(mm_per_day))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Sum of |x_i - x_j| over all ordered pairs of `values`.
///
/// Computed from the sorted sequence in O(n log n); algebraically identical
/// to the double loop.
fn sum_abs_pairwise(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut prefix = 0.0;
    let mut total = 0.0;
    // sum over i<j of (x_(j) - x_(i)), doubled for ordered pairs
    for (k, &x) in sorted.iter().enumerate() {
        total += k as f64 * x - prefix;
        prefix += x;
    }
    debug_assert!(n == 0 || total >= -1e-9);
    2.0 * total
}

/// CRPS of a finite ensemble: mean absolute error to the observation minus
/// half the mean absolute difference between members.
pub fn crps_ensemble(forecast: &EnsembleForecast, y: f64) -> f64 {
    let members = forecast.members();
    let k = members.len() as f64;
    let term1 = members.iter().map(|x| (x - y).abs()).sum::<f64>() / k;
    let term2 = sum_abs_pairwise(members) / (2.0 * k * k);
    term1 - term2
}

/// Brier score of a predictive probability `F(u)` for the event `Y < u`.
///
/// The indicator convention matches the CRPS integrand: the event counts as
/// occurred when `u >= y`.
pub fn brier(f_at_u: f64, y: f64, u: Threshold) -> f64 {
    debug_assert!((0.0..=1.0).contains(&f_at_u), "F(u) must be a probability");
    let indicator = if u.value() >= y { 1.0 } else { 0.0 };
    (f_at_u - indicator) * (f_at_u - indicator)
}

/// Brier score of a finite ensemble, using the empirical CDF at `u`.
pub fn brier_ensemble(forecast: &EnsembleForecast, y: f64, u: Threshold) -> f64 {
    let members = forecast.members();
    let below = members.iter().filter(|&&x| u.value() >= x).count() as f64;
    brier(below / members.len() as f64, y, u)
}

/// Skill score `1 - model/reference`; positive means improvement.
pub fn skill(mean_score_model: f64, mean_score_reference: f64) -> Result<f64, ScoringError> {
    if mean_score_reference <= 0.0 || !mean_score_reference.is_finite() {
        return Err(ScoringError::DegenerateReference(mean_score_reference));
    }
    Ok(1.0 - mean_score_model / mean_score_reference)
}

/// Randomized probability integral transform for a censored predictive
/// distribution: `F(y-) + v (F(y) - F(y-))`.
///
/// At any `y > 0` the jump is zero and the value is simply `F(y)`; at the
/// censoring point the point mass is spread uniformly by `v`.
pub fn pit_randomized(params: &CensoredLogisticParams, y: f64, v: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&v));
    debug_assert!(y >= 0.0);
    if y > 0.0 {
        params.cdf(y)
    } else {
        v * params.cdf(0.0)
    }
}

/// Randomized PIT of an ensemble treated as its empirical distribution.
///
/// Used to report PIT histograms for pairs where no parametric distribution
/// exists (raw and pretest-passthrough forecasts).
pub fn pit_randomized_ensemble(forecast: &EnsembleForecast, y: f64, v: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&v));
    let members = forecast.members();
    let k = members.len() as f64;
    let below = members.iter().filter(|&&x| x < y).count() as f64 / k;
    let at_or_below = members.iter().filter(|&&x| x <= y).count() as f64 / k;
    below + v * (at_or_below - below)
}

/// Rank of the observation within the pooled set {x_1, ..., x_K, y},
/// in 1..=K+1. Exact ties between `y` and members are broken uniformly at
/// random among the tied positions.
pub fn rank_of_observation(forecast: &EnsembleForecast, y: f64, tie_rng: &mut impl Rng) -> usize {
    let members = forecast.members();
    let below = members.iter().filter(|&&x| x < y).count();
    let tied = members.iter().filter(|&&x| x == y).count();
    if tied == 0 {
        below + 1
    } else {
        below + 1 + tie_rng.random_range(0..=tied)
    }
}

/// Histogram of observation ranks over scored pairs; flat for a calibrated
/// ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankHistogram {
    counts: Vec<u64>,
}

impl RankHistogram {
    /// A histogram with K+1 empty bins for a K-member ensemble.
    pub fn new(ensemble_size: usize) -> Self {
        RankHistogram {
            counts: vec![0; ensemble_size + 1],
        }
    }

    pub fn observe(&mut self, rank: usize) {
        assert!(
            rank >= 1 && rank <= self.counts.len(),
            "rank {rank} out of range"
        );
        self.counts[rank - 1] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Chi-square statistic against the flat histogram.
    pub fn chi_square(&self) -> f64 {
        let total = self.total() as f64;
        let expected = total / self.counts.len() as f64;
        self.counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum()
    }
}

/// Bin counts of values in [0, 1]; used for PIT histograms.
pub fn histogram_counts(values: &[f64], bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for &v in values {
        debug_assert!((0.0..=1.0).contains(&v));
        let idx = ((v * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
}

/// Bootstrap means of a score sample: `resamples` draws with replacement,
/// each of the original size.
pub fn bootstrap_means(scores: &[f64], resamples: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = scores.len();
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += scores[rng.random_range(0..n)];
        }
        means.push(sum / n as f64);
    }
    means
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn ens(members: &[f64]) -> EnsembleForecast {
        EnsembleForecast::new(members.to_vec()).unwrap()
    }

    fn thr(v: f64) -> Threshold {
        Threshold::new(v).unwrap()
    }

    #[test]
    fn crps_ensemble_examples() {
        // single member reduces to the absolute error
        assert_eq!(crps_ensemble(&ens(&[3.0]), 1.0), 2.0);
        // direct evaluation: 1 - 4/8
        assert!((crps_ensemble(&ens(&[0.0, 2.0]), 1.0) - 0.5).abs() < 1e-15);
        // both terms vanish when all members equal the observation
        assert_eq!(crps_ensemble(&ens(&[2.0, 2.0, 2.0]), 2.0), 0.0);
    }

    #[test]
    fn pairwise_sum_matches_double_loop() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..30);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let brute: f64 = values
                .iter()
                .flat_map(|a| values.iter().map(move |b| (a - b).abs()))
                .sum();
            assert!((sum_abs_pairwise(&values) - brute).abs() < 1e-9);
        }
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(1.0, 2.0, thr(5.0)), 0.0);
        assert_eq!(brier(0.0, 10.0, thr(5.0)), 0.0);
        assert_eq!(brier(0.5, 2.0, thr(5.0)), 0.25);
    }

    #[test]
    fn brier_ensemble_examples() {
        assert_eq!(brier_ensemble(&ens(&[1.0, 2.0]), 1.5, thr(5.0)), 0.0);
        // F(5) = 0.5, indicator 0 since 5 < 7
        assert_eq!(
            brier_ensemble(&ens(&[1.0, 2.0, 8.0, 9.0]), 7.0, thr(5.0)),
            0.25
        );
        assert_eq!(brier_ensemble(&ens(&[0.0, 0.0]), 0.0, thr(0.1)), 0.0);
    }

    #[test]
    fn one_member_brier_ensemble_is_degenerate_brier() {
        for (member, y, u) in [(1.0, 3.0, 2.0), (4.0, 3.0, 2.0), (1.0, 0.5, 2.0)] {
            let f = if u >= member { 1.0 } else { 0.0 };
            assert_eq!(
                brier_ensemble(&ens(&[member]), y, thr(u)),
                brier(f, y, thr(u))
            );
        }
    }

    #[test]
    fn skill_examples() {
        assert_eq!(skill(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(skill(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(skill(2.0, 1.0).unwrap(), -1.0);
        assert!(skill(1.0, 0.0).is_err());
    }

    #[test]
    fn pit_randomized_examples() {
        let p = CensoredLogisticParams::new(0.0, 1.0).unwrap();
        // continuous point: the uniform variate is irrelevant
        assert_eq!(pit_randomized(&p, 1.0, 0.0), p.cdf(1.0));
        assert_eq!(pit_randomized(&p, 1.0, 1.0), p.cdf(1.0));
        // censoring point: v spreads the jump
        assert_eq!(pit_randomized(&p, 0.0, 1.0), 0.5);
        assert!((pit_randomized(&p, 0.0, 0.4) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rank_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert_eq!(
            rank_of_observation(&ens(&[2.0, 3.0, 4.0]), 1.0, &mut rng),
            1
        );
        let all = ens(&(1..=21).map(f64::from).collect::<Vec<_>>());
        assert_eq!(rank_of_observation(&all, 30.0, &mut rng), 22);
    }

    #[test]
    fn tied_ranks_are_uniform() {
        // y equal to both members of K=2: rank must be uniform on {1, 2, 3}
        let f = ens(&[1.0, 1.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut counts = [0usize; 3];
        let n = 30_000;
        for _ in 0..n {
            let r = rank_of_observation(&f, 1.0, &mut rng);
            counts[r - 1] += 1;
        }
        let expected = n as f64 / 3.0;
        for &c in &counts {
            // 5 sigma on a binomial(n, 1/3)
            let sigma = (expected * (2.0 / 3.0)).sqrt();
            assert!(
                (c as f64 - expected).abs() < 5.0 * sigma,
                "counts {counts:?}"
            );
        }
    }

    #[test]
    fn rank_histogram_accumulates() {
        let mut h = RankHistogram::new(2);
        h.observe(1);
        h.observe(3);
        h.observe(3);
        assert_eq!(h.counts(), &[1, 0, 2]);
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn histogram_counts_handles_boundaries() {
        let counts = histogram_counts(&[0.0, 0.04, 0.999, 1.0], 20);
        assert_eq!(counts[0], 2);
        assert_eq!(counts[19], 2);
        // the 1.0 boundary value stays in the last bin
        assert_eq!(counts.iter().sum::<u64>(), 4);
    }

    proptest! {
        #[test]
        fn crps_ensemble_permutation_and_translation_invariant(
            mut members in proptest::collection::vec(0.0..20.0f64, 1..12),
            y in 0.0..20.0f64,
            c in 0.0..5.0f64,
        ) {
            let base = crps_ensemble(&ens(&members), y);
            members.reverse();
            let permuted = crps_ensemble(&ens(&members), y);
            prop_assert!((base - permuted).abs() < 1e-12);
            let shifted: Vec<f64> = members.iter().map(|m| m + c).collect();
            let translated = crps_ensemble(&ens(&shifted), y + c);
            prop_assert!((base - translated).abs() < 1e-10);
        }

        #[test]
        fn brier_scores_lie_in_unit_interval(
            members in proptest::collection::vec(0.0..20.0f64, 1..12),
            y in 0.0..20.0f64,
            u in 0.0..20.0f64,
        ) {
            let b = brier_ensemble(&ens(&members), y, thr(u));
            prop_assert!((0.0..=1.0).contains(&b));
        }
    }
}
