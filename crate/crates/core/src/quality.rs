//! Link quality as coding gain, and its estimators.
//!
//! The coding gain c ties the outage law to the fading parameters. Besides
//! the exact value, three estimators are provided: a direct estimate from a
//! noisy linear-scale K-factor, and the MAP and MMSE estimates built from a
//! path-loss observation plus the bivariate model as prior. Both Bayesian
//! estimators rest on the shifted log-normal approximation of c given L.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::channel::{BivariateModel, ChannelError, FadingParams};
use crate::units::{db_to_linear, linear_to_db, normal_pdf, q_function, UPSILON};

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("conditional sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("the conditional is degenerate (sigma = 0); use the MAP point estimate instead")]
    DegenerateDistribution,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Gaussian law of K given an observed path loss: N(μ_K|L, σ²_K|L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalKGivenL {
    pub mu_db: f64,
    pub sigma_db: f64,
}

impl ConditionalKGivenL {
    pub fn new(mu_db: f64, sigma_db: f64) -> Result<Self, QualityError> {
        if !(sigma_db >= 0.0) {
            return Err(QualityError::NegativeSigma(sigma_db));
        }
        Ok(Self { mu_db, sigma_db })
    }
}

/// Which route produced a quality figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QualitySource {
    Exact,
    DirectK,
    Map,
    Mmse,
    PathLossOnly,
}

impl QualitySource {
    pub fn as_str(self) -> &'static str {
        match self {
            QualitySource::Exact => "exact",
            QualitySource::DirectK => "direct",
            QualitySource::Map => "map",
            QualitySource::Mmse => "mmse",
            QualitySource::PathLossOnly => "pl",
        }
    }
}

/// A coding-gain figure in dB, tagged with the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkQuality {
    pub c_db: f64,
    pub source: QualitySource,
}

impl LinkQuality {
    /// Path-loss-only quality: c = −L identically.
    pub fn path_loss_only(l_db: f64) -> Self {
        Self { c_db: -l_db, source: QualitySource::PathLossOnly }
    }
}

/// RMSE of the estimation noise on the linear-scale K-factor, expressed in
/// dB: the linear noise standard deviation is θ(σ_ΔK).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KEstimatorNoise {
    pub sigma_dk_db: f64,
}

impl KEstimatorNoise {
    pub fn new(sigma_dk_db: f64) -> Self {
        Self { sigma_dk_db }
    }

    /// Noise standard deviation on the linear scale.
    pub fn linear_std(&self) -> f64 {
        db_to_linear(self.sigma_dk_db)
    }

    /// Noiseless estimator.
    pub fn none() -> Self {
        Self { sigma_dk_db: f64::NEG_INFINITY }
    }
}

/// ς(K) = Υ·θ(K) − θ⁻¹[1 + θ(K)], the dB margin the K-factor adds over
/// path-loss-only information. Zero in the Rayleigh limit.
pub fn varsigma_db(theta_k: f64) -> f64 {
    UPSILON * theta_k - linear_to_db(1.0 + theta_k)
}

/// Linear coding gain c = e^θ(K) / (θ(L)·[1 + θ(K)]).
pub fn coding_gain(params: &FadingParams) -> f64 {
    let tk = params.theta_k();
    tk.exp() * params.mean_gain() / (1.0 + tk)
}

/// Coding gain in dB: c = ς(K) − L. Equals 10·log10 of the linear gain.
pub fn coding_gain_db(params: &FadingParams) -> f64 {
    varsigma_db(params.theta_k()) - params.l_db
}

/// Gaussian law of K given L for a link of the given model at distance `d`:
/// mean μ_K(D) + (σK/σL)·φ·(L_obs − μ_L(D)), variance (1 − φ²)·σK².
pub fn conditional_k_given_l(
    model: &BivariateModel,
    d: f64,
    l_obs_db: f64,
) -> Result<ConditionalKGivenL, QualityError> {
    let (mu_k, mu_l) = model.mean_vector(d)?;
    let mu = mu_k + (model.sigma_k_db / model.sigma_l_db) * model.phi * (l_obs_db - mu_l);
    let sigma = (1.0 - model.phi * model.phi).sqrt() * model.sigma_k_db;
    Ok(ConditionalKGivenL { mu_db: mu, sigma_db: sigma })
}

/// Shifted log-normal density of the coding gain given the observed path
/// loss, evaluated at `c_db`. Zero for c + L ≤ 0.
pub fn posterior_pdf_c(
    cond: &ConditionalKGivenL,
    l_obs_db: f64,
    c_db: f64,
) -> Result<f64, QualityError> {
    if cond.sigma_db == 0.0 {
        return Err(QualityError::DegenerateDistribution);
    }
    let y = c_db + l_obs_db;
    if y <= 0.0 {
        return Ok(0.0);
    }
    let z = (linear_to_db(y / UPSILON) - cond.mu_db) / cond.sigma_db;
    Ok(normal_pdf(z) * UPSILON / (y * cond.sigma_db))
}

/// Tail probability Pr(c > c_threshold | L) under the shifted log-normal
/// posterior. One whenever the threshold sits at or below the −L shift.
pub fn posterior_tail_probability(
    cond: &ConditionalKGivenL,
    l_obs_db: f64,
    c_threshold_db: f64,
) -> f64 {
    let y = c_threshold_db + l_obs_db;
    if y <= 0.0 {
        return 1.0;
    }
    if cond.sigma_db == 0.0 {
        return if cond.mu_db > linear_to_db(y / UPSILON) { 1.0 } else { 0.0 };
    }
    q_function((linear_to_db(y / UPSILON) - cond.mu_db) / cond.sigma_db)
}

/// Closed-form mode of the shifted log-normal posterior:
/// ĉ = Υ·θ(μ − σ²/Υ) − L. The σ = 0 case is the continuous limit Υ·θ(μ) − L.
pub fn map_estimate(cond: &ConditionalKGivenL, l_obs_db: f64) -> LinkQuality {
    let c = UPSILON * db_to_linear(cond.mu_db - cond.sigma_db * cond.sigma_db / UPSILON) - l_obs_db;
    LinkQuality { c_db: c, source: QualitySource::Map }
}

/// Closed-form approximate posterior mean:
/// ĉ = Υ·θ(μ + σ²/(2Υ)) − μ·Q(−μ/σ) − (σ/√2π)·e^(−μ²/(2σ²)) − L.
/// The σ = 0 case is the continuous limit Υ·θ(μ) − max(μ, 0) − L.
pub fn mmse_estimate(cond: &ConditionalKGivenL, l_obs_db: f64) -> LinkQuality {
    let (mu, sigma) = (cond.mu_db, cond.sigma_db);
    let c = if sigma == 0.0 {
        UPSILON * db_to_linear(mu) - mu.max(0.0) - l_obs_db
    } else {
        UPSILON * db_to_linear(mu + sigma * sigma / (2.0 * UPSILON))
            - mu * q_function(-mu / sigma)
            - sigma * normal_pdf(mu / sigma)
            - l_obs_db
    };
    LinkQuality { c_db: c, source: QualitySource::Mmse }
}

/// One draw of the noisy linear-scale K-factor: θ(K̂) = θ(K) + ε with
/// ε ~ N(0, σ²), resampled until θ(K̂) > 0.
pub fn sample_theta_k_hat<R: Rng + ?Sized>(
    theta_k: f64,
    noise: &KEstimatorNoise,
    rng: &mut R,
) -> f64 {
    let std = noise.linear_std();
    if std == 0.0 {
        return theta_k;
    }
    loop {
        let eps: f64 = rng.sample::<f64, _>(StandardNormal) * std;
        // Acceptance probability is at least 1/2 since θ(K) ≥ 0.
        if theta_k + eps > 0.0 {
            return theta_k + eps;
        }
    }
}

/// Direct estimate from a noisy linear-scale K: one [`sample_theta_k_hat`]
/// draw, then the coding gain with the true path loss.
pub fn direct_estimate<R: Rng + ?Sized>(
    params: &FadingParams,
    noise: &KEstimatorNoise,
    rng: &mut R,
) -> LinkQuality {
    let theta_k_hat = sample_theta_k_hat(params.theta_k(), noise, rng);
    LinkQuality { c_db: varsigma_db(theta_k_hat) - params.l_db, source: QualitySource::DirectK }
}
