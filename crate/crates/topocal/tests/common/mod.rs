//! Shared oracles for the integration suites: an adaptive-quadrature CRPS
//! reference that is independent of the library's closed form, and
//! Kolmogorov-Smirnov / chi-square helpers with frozen critical values.

#![allow(dead_code)]

/// Chi-square 0.99 quantile at 21 degrees of freedom (22 histogram bins).
pub const CHI2_CRIT_99_DF21: f64 = 38.93217268351607;

/// Asymptotic Kolmogorov-Smirnov critical constant at alpha = 0.01; the
/// critical distance is this over sqrt(n).
pub const KS_CRIT_CONST_01: f64 = 1.6276236307187293;

/// Censored-logistic CDF evaluated directly from its definition.
fn censored_logistic_cdf(x: f64, location: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        let z = (x - location) / scale;
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let fc = f(c);
    ((b - a) / 6.0 * (fa + 4.0 * fc + fb), c, fc)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    c: f64,
    fc: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let (left, lc, flc) = simpson(f, a, fa, c, fc);
    let (right, rc, frc) = simpson(f, c, fc, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, fa, c, fc, left, lc, flc, eps / 2.0, depth - 1)
            + adaptive(f, c, fc, b, fb, right, rc, frc, eps / 2.0, depth - 1)
    }
}

fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, c, fc) = simpson(f, a, fa, b, fb);
    adaptive(f, a, fa, b, fb, whole, c, fc, eps, 60)
}

/// CRPS of the zero-censored logistic by adaptive quadrature of the scoring
/// integral, absolute tolerance ~1e-10.
///
/// For y >= 0 the integrand vanishes left of the censoring point, so the
/// point mass at zero needs no extra term; the kink at the observation is
/// handled by splitting the integration there.
pub fn crps_quadrature(location: f64, scale: f64, y: f64) -> f64 {
    assert!(y >= 0.0 && scale > 0.0);
    let upper = (location.max(y) + 40.0 * scale).max(y);
    let f_below = |x: f64| {
        let v = censored_logistic_cdf(x, location, scale);
        v * v
    };
    let f_above = |x: f64| {
        let v = censored_logistic_cdf(x, location, scale) - 1.0;
        v * v
    };
    let split = y.min(upper);
    integrate(&f_below, 0.0, split, 1e-11) + integrate(&f_above, split, upper, 1e-11)
}

/// Kolmogorov-Smirnov distance of a sample against the uniform distribution
/// on [0, 1].
pub fn ks_distance_uniform(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Kolmogorov-Smirnov distance of a sample against a CDF, restricted to the
/// continuous part above zero. Ranks stay global, so the point mass at zero
/// still has to agree for the distance to be small.
pub fn ks_distance_cdf_positive(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let f = cdf(x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}
