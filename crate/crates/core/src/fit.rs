//! Least-squares calibration of a [`BivariateModel`] from (distance, K, L)
//! samples.
//!
//! K and L are regressed separately on the scenario's distance regressor
//! (log10(D), or D itself for the indoor stage of composite links); the
//! covariance then comes from the two residual sets.

use thiserror::Error;

use crate::channel::{BivariateModel, DistanceUnit, FadingParams, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("all sample distances are equal; the regression is singular")]
    SingularRegression,
    #[error("sample {0} has a non-positive distance")]
    NonPositiveDistance(usize),
    #[error("sample {0} is at the Rayleigh limit and cannot be regressed")]
    RayleighSample(usize),
}

/// Slope/intercept least squares of y on x.
fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Fits means, sigmas and the residual correlation from `samples`. At least
/// 3 samples over at least 2 distinct distances are required. The fitted
/// model inherits `distance_unit` from the scenario's convention: meters for
/// indoor scenarios, kilometers for the outdoor stage.
pub fn fit_bivariate_model(
    samples: &[(f64, FadingParams)],
    scenario: Scenario,
) -> Result<BivariateModel, FitError> {
    if samples.len() < 3 {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    let linear_in_d = scenario == Scenario::I2OIndoor;
    let mut xs = Vec::with_capacity(samples.len());
    let mut ks = Vec::with_capacity(samples.len());
    let mut ls = Vec::with_capacity(samples.len());
    for (i, (d, p)) in samples.iter().enumerate() {
        if !(*d > 0.0) {
            return Err(FitError::NonPositiveDistance(i));
        }
        let k = p.k.db().ok_or(FitError::RayleighSample(i))?;
        xs.push(if linear_in_d { *d } else { d.log10() });
        ks.push(k);
        ls.push(p.l_db);
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(FitError::SingularRegression);
    }

    let (k_intercept, k_slope) = linear_regression(&xs, &ks);
    let (l_intercept, l_slope) = linear_regression(&xs, &ls);

    let n = xs.len() as f64;
    let (mut skk, mut sll, mut skl) = (0.0, 0.0, 0.0);
    for ((&x, &k), &l) in xs.iter().zip(&ks).zip(&ls) {
        let rk = k - (k_intercept + k_slope * x);
        let rl = l - (l_intercept + l_slope * x);
        skk += rk * rk;
        sll += rl * rl;
        skl += rk * rl;
    }
    let sigma_k = (skk / (n - 1.0)).sqrt();
    let sigma_l = (sll / (n - 1.0)).sqrt();
    let phi = if skk > 0.0 && sll > 0.0 { skl / (skk * sll).sqrt() } else { 0.0 };

    // Exactly collinear samples leave zero residual variance; keep the model
    // constructible by flooring the sigmas at a negligible positive value.
    let floor = 1e-12;
    BivariateModel::new(
        scenario,
        k_intercept,
        -k_slope / 10.0,
        l_intercept,
        l_slope / 10.0,
        sigma_k.max(floor),
        sigma_l.max(floor),
        phi.clamp(-1.0, 1.0),
        match scenario {
            Scenario::I2OOutdoor => DistanceUnit::Kilometers,
            _ => DistanceUnit::Meters,
        },
        linear_in_d,
    )
    .map_err(|_| FitError::SingularRegression)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::KFactor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn on_line_sample(d: f64) -> (f64, FadingParams) {
        // K = 12 − 4·log10(D), L = 38 + 20·log10(D).
        let x = d.log10();
        (d, FadingParams { k: KFactor::Db(12.0 - 4.0 * x), l_db: 38.0 + 20.0 * x })
    }

    #[test]
    fn exact_samples_recover_the_lines() {
        let samples: Vec<_> = [1.0, 2.0, 5.0, 10.0, 20.0].iter().map(|&d| on_line_sample(d)).collect();
        let m = fit_bivariate_model(&samples, Scenario::I2I).unwrap();
        assert!((m.mu_k_intercept_db - 12.0).abs() < 1e-9);
        assert!((m.alpha_k - 0.4).abs() < 1e-9);
        assert!((m.mu_l_intercept_db - 38.0).abs() < 1e-9);
        assert!((m.alpha_l - 2.0).abs() < 1e-9);
        assert!(m.sigma_k_db < 1e-6);
        assert!(m.sigma_l_db < 1e-6);
    }

    #[test]
    fn round_trip_recovers_generating_model() {
        let truth = BivariateModel::i2i_default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut samples = Vec::new();
        for i in 0..10_000 {
            let d = 1.0 + 34.0 * (i as f64 + 0.5) / 10_000.0;
            samples.push((d, truth.sample_link(d, &mut rng).unwrap()));
        }
        let m = fit_bivariate_model(&samples, Scenario::I2I).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(m.mu_k_intercept_db, truth.mu_k_intercept_db) < 0.05);
        assert!(rel(m.alpha_k, truth.alpha_k) < 0.05);
        assert!(rel(m.mu_l_intercept_db, truth.mu_l_intercept_db) < 0.05);
        assert!(rel(m.alpha_l, truth.alpha_l) < 0.05);
        assert!(rel(m.sigma_k_db, truth.sigma_k_db) < 0.05);
        assert!(rel(m.sigma_l_db, truth.sigma_l_db) < 0.05);
        assert!((m.phi - truth.phi).abs() < 0.05);
    }

    #[test]
    fn linear_scenario_regresses_on_distance() {
        let samples: Vec<_> = [2.0, 6.0, 11.0, 19.0]
            .iter()
            .map(|&d| (d, FadingParams { k: KFactor::Db(-0.3 * d), l_db: 0.5 * d }))
            .collect();
        let m = fit_bivariate_model(&samples, Scenario::I2OIndoor).unwrap();
        assert!(m.linear_in_d);
        assert!(m.mu_k_intercept_db.abs() < 1e-9);
        assert!((m.alpha_k - 0.03).abs() < 1e-9);
        assert!((m.alpha_l - 0.05).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs_error() {
        let s = on_line_sample(5.0);
        assert_eq!(
            fit_bivariate_model(&[s, s], Scenario::I2I),
            Err(FitError::TooFewSamples(2))
        );
        assert_eq!(
            fit_bivariate_model(&[s, s, s], Scenario::I2I),
            Err(FitError::SingularRegression)
        );
        let rayleigh = (3.0, FadingParams::rayleigh(50.0).unwrap());
        assert_eq!(
            fit_bivariate_model(&[s, on_line_sample(2.0), rayleigh], Scenario::I2I),
            Err(FitError::RayleighSample(2))
        );
        let bad = (0.0, s.1);
        assert_eq!(
            fit_bivariate_model(&[s, on_line_sample(2.0), bad], Scenario::I2I),
            Err(FitError::NonPositiveDistance(2))
        );
    }
}
