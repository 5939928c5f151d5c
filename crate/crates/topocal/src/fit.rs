//! Coefficient fitting by minimum weighted CRPS.
//!
//! The five coefficients link ensemble statistics to the parameters of the
//! censored logistic predictive distribution: the location is affine in the
//! control member and the ensemble mean, the log scale affine in the ensemble
//! standard deviation. The fit minimizes the weighted mean CRPS of the
//! training pairs with analytic gradients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::censored_logistic::{CensoredLogisticParams, DistError};
use crate::data::{EnsembleForecast, ForecastObservationPair};
use crate::optim::{bfgs, nelder_mead, Objective, OptimOptions, OptimResult, Termination};

/// Fits with fewer effectively weighted pairs than this are refused.
pub const MIN_EFFECTIVE_PAIRS: f64 = 50.0;

/// Lower clamp on the log scale during optimization, guarding against
/// degenerate point-mass fits on dry training windows.
const LN_SCALE_FLOOR: f64 = -9.210340371976182; // ln(1e-4)

#[derive(Debug, Error)]
pub enum FitError {
    #[error("weights length {weights} does not match pair count {pairs}")]
    LengthMismatch { pairs: usize, weights: usize },
    #[error("insufficient training data: {effective:.1} effective pairs, need at least {MIN_EFFECTIVE_PAIRS}")]
    InsufficientData { effective: f64 },
    #[error("non-identifiable training data: all observations and all ensembles identical")]
    NonIdentifiable,
    #[error("optimizer did not converge within {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        best: Box<FitResult>,
    },
    #[error("link produced a non-finite distribution: {0}")]
    Link(#[from] DistError),
    #[error("weights must be non-negative and finite with at least one positive entry")]
    InvalidWeights,
}

/// The fitted regression coefficients (location: beta, log scale: gamma).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl CoefficientVector {
    pub fn new(beta0: f64, beta1: f64, beta2: f64, gamma0: f64, gamma1: f64) -> Self {
        CoefficientVector {
            beta0,
            beta1,
            beta2,
            gamma0,
            gamma1,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.beta0, self.beta1, self.beta2, self.gamma0, self.gamma1]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        CoefficientVector {
            beta0: a[0],
            beta1: a[1],
            beta2: a[2],
            gamma0: a[3],
            gamma1: a[4],
        }
    }
}

/// Per-training-pair weights used in the CRPS cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, FitError> {
        if weights.is_empty()
            || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || weights.iter().all(|w| *w == 0.0)
        {
            return Err(FitError::InvalidWeights);
        }
        Ok(WeightVector(weights))
    }

    pub fn unit(len: usize) -> Self {
        WeightVector(vec![1.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Scale-invariant count of effectively weighted pairs.
    pub fn effective_pairs(&self) -> f64 {
        let max = self.0.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            0.0
        } else {
            self.0.iter().sum::<f64>() / max
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    QuasiNewton,
    NelderMead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitInit {
    /// Trust the ensemble mean: beta = (0, 0, 1), gamma1 = 0 and gamma0 set
    /// from the mean ensemble spread of the training data.
    Default,
    Explicit(CoefficientVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub optimizer: OptimizerKind,
    pub max_iterations: usize,
    /// Max-norm gradient threshold for first-order stationarity.
    pub tolerance: f64,
    pub init: FitInit,
}

impl Default for FitConfig {
    fn default() -> Self {
        // 1e-7 on the mean-CRPS gradient stays reliably above the rounding
        // floor of the objective sum even for 10^4-pair training sets
        FitConfig {
            optimizer: OptimizerKind::QuasiNewton,
            max_iterations: 200,
            tolerance: 1e-7,
            init: FitInit::Default,
        }
    }
}

/// Outcome of a successful fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub psi: CoefficientVector,
    /// Weighted-sum CRPS cost at the optimum.
    pub cost: f64,
    pub iterations: usize,
    /// Whether the log-scale floor was active at the optimum.
    pub scale_clamp_active: bool,
    /// Whether the Nelder-Mead fallback finished the optimization.
    pub used_fallback: bool,
}

/// Map a forecast to predictive-distribution parameters:
/// `m = beta0 + beta1 x1 + beta2 mean(x)`, `s = exp(gamma0 + gamma1 SD(x))`.
///
/// The forecast must be on the square-root scale.
pub fn link(
    psi: &CoefficientVector,
    forecast: &EnsembleForecast,
) -> Result<CensoredLogisticParams, FitError> {
    let m = psi.beta0 + psi.beta1 * forecast.control() + psi.beta2 * forecast.mean();
    let s = (psi.gamma0 + psi.gamma1 * forecast.sd()).exp();
    Ok(CensoredLogisticParams::new(m, s)?)
}

/// Weighted-sum CRPS cost of a coefficient vector over training pairs.
pub fn cost(
    psi: &CoefficientVector,
    pairs: &[ForecastObservationPair],
    weights: &WeightVector,
) -> Result<f64, FitError> {
    if pairs.len() != weights.len() {
        return Err(FitError::LengthMismatch {
            pairs: pairs.len(),
            weights: weights.len(),
        });
    }
    let mut total = 0.0;
    for (pair, &w) in pairs.iter().zip(weights.values()) {
        let params = link(psi, &pair.forecast)?;
        total += w * params.crps(pair.observation)?;
    }
    Ok(total)
}

struct Row {
    control: f64,
    mean: f64,
    sd: f64,
    observation: f64,
    weight: f64,
}

/// The normalized weighted-mean CRPS objective over canonicalized rows.
struct CrpsObjective {
    rows: Vec<Row>,
}

impl CrpsObjective {
    /// Weighted mean CRPS and whether the scale floor was hit on any row.
    fn evaluate(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> (f64, bool) {
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut total = 0.0;
        let mut clamped = false;
        for row in &self.rows {
            let m = x[0] + x[1] * row.control + x[2] * row.mean;
            let eta = x[3] + x[4] * row.sd;
            let at_floor = eta < LN_SCALE_FLOOR;
            clamped |= at_floor;
            let s = eta.max(LN_SCALE_FLOOR).exp();
            if !m.is_finite() || !s.is_finite() {
                return (f64::INFINITY, clamped);
            }
            let z_y = (row.observation - m) / s;
            let z_0 = -m / s;
            // softplus(z) + softplus(-z) = |z| + 2 ln(1 + e^-|z|), sharing
            // one exponential with the logistic CDF at the same point
            let e_y = (-z_y.abs()).exp();
            let sp_pair = z_y.abs() + 2.0 * e_y.ln_1p();
            let lam_y = if z_y >= 0.0 {
                1.0 / (1.0 + e_y)
            } else {
                e_y / (1.0 + e_y)
            };
            let e_0 = (-z_0.abs()).exp();
            let sp_0 = z_0.max(0.0) + e_0.ln_1p();
            let lam_0 = if z_0 >= 0.0 {
                1.0 / (1.0 + e_0)
            } else {
                e_0 / (1.0 + e_0)
            };
            let crps = s * (sp_pair - sp_0 + lam_0 - 1.0);
            if !crps.is_finite() {
                return (f64::INFINITY, clamped);
            }
            total += row.weight * crps;
            if let Some(g) = grad.as_deref_mut() {
                let d0 = lam_0 * (1.0 - lam_0);
                let dm = -(2.0 * lam_y - 1.0) + lam_0 - d0;
                let ds = crps / s - z_y * (2.0 * lam_y - 1.0) + z_0 * (lam_0 - d0);
                let d_eta = if at_floor { 0.0 } else { ds * s };
                let wm = row.weight * dm;
                g[0] += wm;
                g[1] += wm * row.control;
                g[2] += wm * row.mean;
                let we = row.weight * d_eta;
                g[3] += we;
                g[4] += we * row.sd;
            }
        }
        if !total.is_finite() {
            return (f64::INFINITY, clamped);
        }
        (total, clamped)
    }
}

impl Objective for CrpsObjective {
    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x, None).0
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(x, Some(grad)).0
    }
}

/// Fit the coefficient vector by minimizing the weighted mean CRPS.
///
/// Zero-weight pairs are dropped and the remainder is brought into a
/// canonical order before optimization, so the result does not depend on the
/// input ordering. Weights are normalized internally; only their relative
/// sizes matter.
///
/// # Errors
///
/// Refuses underdetermined data (fewer than [`MIN_EFFECTIVE_PAIRS`] effective
/// pairs, or fully degenerate pairs). A non-converged optimization reports
/// the best coefficients found so far inside the error.
pub fn fit(
    pairs: &[ForecastObservationPair],
    weights: &WeightVector,
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    if pairs.len() != weights.len() {
        return Err(FitError::LengthMismatch {
            pairs: pairs.len(),
            weights: weights.len(),
        });
    }

    // canonical order: drop zero weights, sort by pair content then weight
    let mut order: Vec<usize> = (0..pairs.len())
        .filter(|&i| weights.values()[i] > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        pairs[a]
            .cmp_key(&pairs[b])
            .then(weights.values()[a].total_cmp(&weights.values()[b]))
    });

    let kept = WeightVector::new(order.iter().map(|&i| weights.values()[i]).collect())
        .map_err(|_| FitError::InvalidWeights)?;
    let effective = kept.effective_pairs();
    if effective < MIN_EFFECTIVE_PAIRS {
        return Err(FitError::InsufficientData { effective });
    }

    let weight_sum: f64 = kept.values().iter().sum();
    let rows: Vec<Row> = order
        .iter()
        .zip(kept.values())
        .map(|(&i, &w)| Row {
            control: pairs[i].forecast.control(),
            mean: pairs[i].forecast.mean(),
            sd: pairs[i].forecast.sd(),
            observation: pairs[i].observation,
            weight: w / weight_sum,
        })
        .collect();

    let identical = rows.windows(2).all(|w| {
        w[0].observation == w[1].observation
            && w[0].control == w[1].control
            && w[0].mean == w[1].mean
            && w[0].sd == w[1].sd
    });
    if identical {
        return Err(FitError::NonIdentifiable);
    }

    let x0 = match &config.init {
        FitInit::Explicit(psi) => psi.as_array(),
        FitInit::Default => {
            let mean_sd: f64 = rows.iter().map(|r| r.weight * r.sd).sum();
            [0.0, 0.0, 1.0, mean_sd.max(0.01).ln(), 0.0]
        }
    };

    let objective = CrpsObjective { rows };
    let opts = OptimOptions {
        max_iterations: config.max_iterations,
        grad_tolerance: config.tolerance,
    };
    // simplex steps are an order of magnitude cheaper than quasi-Newton
    // iterations, so the derivative-free path gets a larger budget
    let nm_opts = OptimOptions {
        max_iterations: config.max_iterations.saturating_mul(10),
        grad_tolerance: config.tolerance,
    };

    let mut used_fallback = false;
    let result: OptimResult = match config.optimizer {
        OptimizerKind::NelderMead => nelder_mead(&objective, &x0, &nm_opts),
        OptimizerKind::QuasiNewton => {
            let first = bfgs(&objective, &x0, &opts);
            if first.termination == Termination::LineSearchFailed {
                used_fallback = true;
                nelder_mead(&objective, &first.x, &nm_opts)
            } else {
                first
            }
        }
    };

    let psi = CoefficientVector::from_array([
        result.x[0],
        result.x[1],
        result.x[2],
        result.x[3],
        result.x[4],
    ]);
    let (_, clamped) = objective.evaluate(&result.x, None);
    let fit_result = FitResult {
        psi,
        cost: result.value * weight_sum,
        iterations: result.iterations,
        scale_clamp_active: clamped,
        used_fallback,
    };

    match result.termination {
        Termination::Converged => Ok(fit_result),
        _ => Err(FitError::NonConvergence {
            iterations: result.iterations,
            best: Box::new(fit_result),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LeadTime;
    use chrono::NaiveDate;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn forecast(members: &[f64]) -> EnsembleForecast {
        EnsembleForecast::new(members.to_vec()).unwrap()
    }

    fn pair_at(
        station: &str,
        day_offset: u32,
        members: &[f64],
        obs: f64,
    ) -> ForecastObservationPair {
        let date =
            NaiveDate::from_ymd_opt(2017, 1, 1).unwrap() + chrono::Days::new(day_offset as u64);
        ForecastObservationPair::new(
            station,
            date,
            LeadTime::from_days(1.0).unwrap(),
            forecast(members),
            obs,
        )
        .unwrap()
    }

    /// Synthetic pairs drawn from the generative model under `psi`.
    fn simulate(psi: &CoefficientVector, n: usize, seed: u64) -> Vec<ForecastObservationPair> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(n);
        for i in 0..n {
            let loc: f64 = rng.random_range(-1.0..3.0);
            let spread: f64 = rng.random_range(0.2..1.5);
            let members: Vec<f64> = (0..21)
                .map(|_| {
                    let u: f64 = rng.random_range(1e-12..1.0);
                    (loc + spread * (u / (1.0 - u)).ln()).max(0.0)
                })
                .collect();
            let f = forecast(&members);
            let params = link(psi, &f).unwrap();
            let u: f64 = rng.random_range(1e-12..1.0);
            let y = params.sample(u).unwrap();
            let station = format!("S{:02}", i % 7);
            pairs.push(pair_at(&station, (i % 300) as u32, &members, y));
        }
        pairs
    }

    #[test]
    fn link_examples() {
        let f = forecast(&[2.0, 4.0]); // x1 = 2, mean = 3, sd = sqrt(2)
        let p = link(&CoefficientVector::new(0.0, 0.0, 1.0, 0.0, 0.0), &f).unwrap();
        assert_eq!(p.location(), 3.0);
        assert_eq!(p.scale(), 1.0);

        let p = link(&CoefficientVector::new(1.0, 1.0, 0.0, 0.0, 0.0), &f).unwrap();
        assert_eq!(p.location(), 3.0);
        assert_eq!(p.scale(), 1.0);

        let p = link(&CoefficientVector::new(0.0, 0.0, 0.0, 2f64.ln(), 0.0), &f).unwrap();
        assert!((p.scale() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn link_rejects_non_finite_scale() {
        let f = forecast(&[2.0, 4.0]);
        let huge = CoefficientVector::new(0.0, 0.0, 1.0, 1e308, 0.0);
        assert!(link(&huge, &f).is_err());
    }

    #[test]
    fn cost_examples() {
        let a = pair_at("A", 0, &[1.0, 2.0], 1.5);
        let b = pair_at("B", 1, &[0.0, 1.0], 0.2);
        let psi = CoefficientVector::new(0.1, 0.2, 0.7, -0.3, 0.1);

        let single = cost(&psi, std::slice::from_ref(&a), &WeightVector::unit(1)).unwrap();
        let expected = link(&psi, &a.forecast)
            .unwrap()
            .crps(a.observation)
            .unwrap();
        assert_eq!(single, expected);

        // zero weights mask out all but one pair
        let masked = cost(
            &psi,
            &[b.clone(), a.clone()],
            &WeightVector::new(vec![0.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(masked, expected);

        // duplicating a pair with unit weights equals doubling its weight
        let doubled = cost(&psi, &[a.clone(), a.clone()], &WeightVector::unit(2)).unwrap();
        let reweighted = cost(&psi, &[a], &WeightVector::new(vec![2.0]).unwrap()).unwrap();
        assert!((doubled - reweighted).abs() < 1e-12);

        assert!(matches!(
            cost(&psi, &[b], &WeightVector::unit(2)),
            Err(FitError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let psi_true = CoefficientVector::new(0.0, 0.3, 0.7, -0.5, 0.4);
        let pairs = simulate(&psi_true, 300, 11);
        let rows: Vec<Row> = pairs
            .iter()
            .map(|p| Row {
                control: p.forecast.control(),
                mean: p.forecast.mean(),
                sd: p.forecast.sd(),
                observation: p.observation,
                weight: 1.0 / pairs.len() as f64,
            })
            .collect();
        let objective = CrpsObjective { rows };

        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let step = 1e-5;
        for _ in 0..100 {
            let x: Vec<f64> = vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.5),
                rng.random_range(-1.5..0.5),
                rng.random_range(-1.0..1.0),
            ];
            let mut grad = vec![0.0; 5];
            objective.value_grad(&x, &mut grad);
            for i in 0..5 {
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[i] += step;
                lo[i] -= step;
                let numeric = (objective.value(&hi) - objective.value(&lo)) / (2.0 * step);
                let denom = numeric.abs().max(1e-6);
                assert!(
                    (grad[i] - numeric).abs() / denom < 1e-4,
                    "coefficient {i}: analytic {} vs numeric {numeric}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn fit_recovers_coefficients_on_simulated_data() {
        let truth = CoefficientVector::new(0.0, 0.3, 0.7, -0.5, 0.4);
        let pairs = simulate(&truth, 2000, 42);
        let result = fit(
            &pairs,
            &WeightVector::unit(pairs.len()),
            &FitConfig::default(),
        )
        .unwrap();
        for (fitted, expected) in result.psi.as_array().iter().zip(truth.as_array()) {
            assert!(
                (fitted - expected).abs() < 0.15,
                "fitted {fitted} too far from {expected}: {:?}",
                result.psi
            );
        }
    }

    #[test]
    fn fit_starting_at_truth_does_not_worsen() {
        let truth = CoefficientVector::new(0.0, 0.3, 0.7, -0.5, 0.4);
        let pairs = simulate(&truth, 500, 3);
        let weights = WeightVector::unit(pairs.len());
        let init_cost = cost(&truth, &pairs, &weights).unwrap();
        let config = FitConfig {
            init: FitInit::Explicit(truth),
            ..FitConfig::default()
        };
        let result = fit(&pairs, &weights, &config).unwrap();
        assert!(result.cost <= init_cost + 1e-9);
    }

    #[test]
    fn selection_weights_equal_subset_fit() {
        let truth = CoefficientVector::new(0.2, 0.1, 0.8, -0.4, 0.3);
        let pairs = simulate(&truth, 400, 9);
        // weights selecting stations S00 and S01 only
        let weights = WeightVector::new(
            pairs
                .iter()
                .map(|p| {
                    if p.station_id == "S00" || p.station_id == "S01" {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
        .unwrap();
        let selected = fit(&pairs, &weights, &FitConfig::default()).unwrap();

        let subset: Vec<ForecastObservationPair> = pairs
            .iter()
            .filter(|p| p.station_id == "S00" || p.station_id == "S01")
            .cloned()
            .collect();
        let direct = fit(
            &subset,
            &WeightVector::unit(subset.len()),
            &FitConfig::default(),
        )
        .unwrap();

        for (a, b) in selected.psi.as_array().iter().zip(direct.psi.as_array()) {
            assert!(
                (a - b).abs() < 1e-6,
                "{:?} vs {:?}",
                selected.psi,
                direct.psi
            );
        }
    }

    #[test]
    fn fit_is_permutation_invariant() {
        let truth = CoefficientVector::new(0.0, 0.2, 0.8, -0.3, 0.2);
        let pairs = simulate(&truth, 300, 17);
        let weights: Vec<f64> = (0..pairs.len()).map(|i| 1.0 + (i % 3) as f64).collect();

        let base = fit(
            &pairs,
            &WeightVector::new(weights.clone()).unwrap(),
            &FitConfig::default(),
        )
        .unwrap();

        let mut shuffled: Vec<(ForecastObservationPair, f64)> =
            pairs.into_iter().zip(weights).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let (p2, w2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
        let permuted = fit(&p2, &WeightVector::new(w2).unwrap(), &FitConfig::default()).unwrap();

        for (a, b) in base.psi.as_array().iter().zip(permuted.psi.as_array()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn fit_is_invariant_under_weight_scaling() {
        let truth = CoefficientVector::new(0.1, 0.3, 0.6, -0.4, 0.3);
        let pairs = simulate(&truth, 300, 23);
        let weights: Vec<f64> = (0..pairs.len()).map(|i| 0.5 + (i % 4) as f64).collect();
        let scaled: Vec<f64> = weights.iter().map(|w| w * 137.0).collect();

        let a = fit(
            &pairs,
            &WeightVector::new(weights).unwrap(),
            &FitConfig::default(),
        )
        .unwrap();
        let b = fit(
            &pairs,
            &WeightVector::new(scaled).unwrap(),
            &FitConfig::default(),
        )
        .unwrap();
        for (x, y) in a.psi.as_array().iter().zip(b.psi.as_array()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn fit_rejects_insufficient_and_degenerate_data() {
        let few: Vec<ForecastObservationPair> =
            (0..10).map(|i| pair_at("A", i, &[1.0, 2.0], 1.0)).collect();
        assert!(matches!(
            fit(&few, &WeightVector::unit(few.len()), &FitConfig::default()),
            Err(FitError::InsufficientData { .. })
        ));

        let degenerate: Vec<ForecastObservationPair> =
            (0..80).map(|i| pair_at("A", i, &[1.0, 2.0], 1.0)).collect();
        assert!(matches!(
            fit(
                &degenerate,
                &WeightVector::unit(degenerate.len()),
                &FitConfig::default()
            ),
            Err(FitError::NonIdentifiable)
        ));
    }

    #[test]
    fn non_convergence_carries_best_coefficients() {
        let truth = CoefficientVector::new(0.0, 0.3, 0.7, -0.5, 0.4);
        let pairs = simulate(&truth, 200, 31);
        let config = FitConfig {
            max_iterations: 0,
            tolerance: 1e-30,
            ..FitConfig::default()
        };
        match fit(&pairs, &WeightVector::unit(pairs.len()), &config) {
            Err(FitError::NonConvergence { best, .. }) => {
                assert!(best.psi.as_array().iter().all(|v| v.is_finite()));
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }
}
