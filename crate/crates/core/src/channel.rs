//! Bivariate stochastic model of the per-link fading parameters.
//!
//! A wireless link is summarized by its Rician K-factor and its path loss,
//! both in dB. The pair follows a bivariate Gaussian law whose mean depends
//! on the link distance and whose covariance is spatially invariant. Three
//! calibrated parameter sets ship with the crate: indoor-to-indoor links,
//! the outdoor stage of indoor-to-outdoor links, and the indoor stage of
//! indoor-to-outdoor links. Composite indoor-to-outdoor links stack the two
//! stages plus a fixed wall penetration loss.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::units::db_to_linear;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("link distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("per-topology outdoor mode requires a shared outdoor draw")]
    MissingSharedOutdoorDraw,
    #[error("{0}")]
    InvalidParameter(String),
    #[error("unknown key `{0}` in model description")]
    UnknownKey(String),
    #[error("missing key `{0}` in model description")]
    MissingKey(String),
    #[error("invalid value for key `{key}`: {value}")]
    InvalidValue { key: String, value: String },
}

/// Rician K-factor in dB, with the Rayleigh limit (K → −∞) kept as an
/// explicit variant so it never leaks into regressions as a sentinel float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KFactor {
    Db(f64),
    Rayleigh,
}

impl KFactor {
    /// Linear-scale K: θ(K), with θ(K) = 0 in the Rayleigh limit.
    pub fn theta(self) -> f64 {
        match self {
            KFactor::Db(k) => db_to_linear(k),
            KFactor::Rayleigh => 0.0,
        }
    }

    /// Finite dB value, if any.
    pub fn db(self) -> Option<f64> {
        match self {
            KFactor::Db(k) => Some(k),
            KFactor::Rayleigh => None,
        }
    }
}

/// The random state of one wireless link: (K-factor, path loss) in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub k: KFactor,
    pub l_db: f64,
}

impl FadingParams {
    pub fn new(k_db: f64, l_db: f64) -> Result<Self, ChannelError> {
        if !k_db.is_finite() {
            return Err(ChannelError::InvalidParameter(format!(
                "K-factor must be finite, got {k_db}; use FadingParams::rayleigh for the limit"
            )));
        }
        if !l_db.is_finite() {
            return Err(ChannelError::InvalidParameter(format!(
                "path loss must be finite, got {l_db}"
            )));
        }
        Ok(Self { k: KFactor::Db(k_db), l_db })
    }

    /// Link with no static multipath component (K → −∞).
    pub fn rayleigh(l_db: f64) -> Result<Self, ChannelError> {
        if !l_db.is_finite() {
            return Err(ChannelError::InvalidParameter(format!(
                "path loss must be finite, got {l_db}"
            )));
        }
        Ok(Self { k: KFactor::Rayleigh, l_db })
    }

    /// Linear K-factor θ(K).
    pub fn theta_k(&self) -> f64 {
        self.k.theta()
    }

    /// Linear mean channel gain θ(−L).
    pub fn mean_gain(&self) -> f64 {
        db_to_linear(-self.l_db)
    }
}

/// Propagation scenario a model is calibrated for. The indoor stage of
/// composite links regresses on the distance itself rather than log10 of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    I2I,
    I2OOutdoor,
    I2OIndoor,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::I2I => "i2i",
            Scenario::I2OOutdoor => "i2o_outdoor",
            Scenario::I2OIndoor => "i2o_indoor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "i2i" => Some(Scenario::I2I),
            "i2o_outdoor" => Some(Scenario::I2OOutdoor),
            "i2o_indoor" => Some(Scenario::I2OIndoor),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceUnit {
    Meters,
    Kilometers,
}

impl DistanceUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceUnit::Meters => "meters",
            DistanceUnit::Kilometers => "kilometers",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "meters" | "m" => Some(DistanceUnit::Meters),
            "kilometers" | "km" => Some(DistanceUnit::Kilometers),
            _ => None,
        }
    }
}

/// Distance-dependent means plus spatially invariant covariance of the
/// (K, L) pair for one propagation scenario.
///
/// Means follow
///   μ_K(D) = muK_intercept − 10·alphaK·x(D)
///   μ_L(D) = muL_intercept + 10·alphaL·x(D)
/// with x(D) = log10(D), or x(D) = D when `linear_in_d` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateModel {
    pub scenario: Scenario,
    pub mu_k_intercept_db: f64,
    pub alpha_k: f64,
    pub mu_l_intercept_db: f64,
    pub alpha_l: f64,
    pub sigma_k_db: f64,
    pub sigma_l_db: f64,
    pub phi: f64,
    pub distance_unit: DistanceUnit,
    pub linear_in_d: bool,
}

impl BivariateModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scenario: Scenario,
        mu_k_intercept_db: f64,
        alpha_k: f64,
        mu_l_intercept_db: f64,
        alpha_l: f64,
        sigma_k_db: f64,
        sigma_l_db: f64,
        phi: f64,
        distance_unit: DistanceUnit,
        linear_in_d: bool,
    ) -> Result<Self, ChannelError> {
        if !(sigma_k_db > 0.0) || !(sigma_l_db > 0.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "sigmas must be positive, got sigma_k={sigma_k_db}, sigma_l={sigma_l_db}"
            )));
        }
        if !(-1.0..=1.0).contains(&phi) {
            return Err(ChannelError::InvalidParameter(format!(
                "correlation must lie in [-1, 1], got {phi}"
            )));
        }
        let model = Self {
            scenario,
            mu_k_intercept_db,
            alpha_k,
            mu_l_intercept_db,
            alpha_l,
            sigma_k_db,
            sigma_l_db,
            phi,
            distance_unit,
            linear_in_d,
        };
        // Positive semi-definiteness holds by construction; assert anyway.
        debug_assert!(model.covariance_determinant() >= -1e-12);
        Ok(model)
    }

    /// Calibrated indoor-to-indoor office model (distances in meters).
    pub fn i2i_default() -> Self {
        Self::new(Scenario::I2I, 16.90, 0.53, 40.4, 1.75, 5.8, 6.0, -0.66, DistanceUnit::Meters, false)
            .expect("built-in model parameters are valid")
    }

    /// Calibrated outdoor stage of indoor-to-outdoor links, from the exit
    /// wall to the access point (distances in kilometers).
    pub fn i2o_outdoor_default() -> Self {
        Self::new(
            Scenario::I2OOutdoor,
            7.85,
            0.45,
            135.78,
            3.89,
            7.5,
            7.9,
            -0.25,
            DistanceUnit::Kilometers,
            false,
        )
        .expect("built-in model parameters are valid")
    }

    /// Calibrated indoor stage of indoor-to-outdoor links, from a node to
    /// the exit wall; linear in distance with no intercept (meters).
    pub fn i2o_indoor_default() -> Self {
        Self::new(Scenario::I2OIndoor, 0.0, 0.03, 0.0, 0.05, 5.7, 7.0, -0.74, DistanceUnit::Meters, true)
            .expect("built-in model parameters are valid")
    }

    fn regressor(&self, d: f64) -> f64 {
        if self.linear_in_d {
            d
        } else {
            d.log10()
        }
    }

    /// Determinant of the covariance matrix built from (σK, σL, φ).
    pub fn covariance_determinant(&self) -> f64 {
        let var_k = self.sigma_k_db * self.sigma_k_db;
        let var_l = self.sigma_l_db * self.sigma_l_db;
        var_k * var_l * (1.0 - self.phi * self.phi)
    }

    /// Regression means (μ_K(D), μ_L(D)) in dB at distance `d`, expressed in
    /// the model's distance unit.
    pub fn mean_vector(&self, d: f64) -> Result<(f64, f64), ChannelError> {
        if !(d > 0.0) {
            return Err(ChannelError::NonPositiveDistance(d));
        }
        let x = self.regressor(d);
        let mu_k = self.mu_k_intercept_db - 10.0 * self.alpha_k * x;
        let mu_l = self.mu_l_intercept_db + 10.0 * self.alpha_l * x;
        Ok((mu_k, mu_l))
    }

    /// One bivariate Gaussian draw of (K, L) at distance `d`.
    ///
    /// Uses the Cholesky factor of the covariance, so the two components
    /// carry exactly the configured correlation. Draws are independent
    /// across calls.
    pub fn sample_link<R: Rng + ?Sized>(&self, d: f64, rng: &mut R) -> Result<FadingParams, ChannelError> {
        let (mu_k, mu_l) = self.mean_vector(d)?;
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let k = mu_k + self.sigma_k_db * z1;
        let l = mu_l + self.sigma_l_db * (self.phi * z1 + (1.0 - self.phi * self.phi).sqrt() * z2);
        Ok(FadingParams { k: KFactor::Db(k), l_db: l })
    }

    /// Exact key=value export; parsed back by [`BivariateModel::from_key_values`].
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        vec![
            ("scenario".into(), self.scenario.as_str().into()),
            ("mu_k_intercept_db".into(), format!("{:.17e}", self.mu_k_intercept_db)),
            ("alpha_k".into(), format!("{:.17e}", self.alpha_k)),
            ("mu_l_intercept_db".into(), format!("{:.17e}", self.mu_l_intercept_db)),
            ("alpha_l".into(), format!("{:.17e}", self.alpha_l)),
            ("sigma_k_db".into(), format!("{:.17e}", self.sigma_k_db)),
            ("sigma_l_db".into(), format!("{:.17e}", self.sigma_l_db)),
            ("phi".into(), format!("{:.17e}", self.phi)),
            ("distance_unit".into(), self.distance_unit.as_str().into()),
            ("linear_in_d".into(), self.linear_in_d.to_string()),
        ]
    }

    /// Builds a model from `(key, value)` pairs. Every key must be known and
    /// every parameter present.
    pub fn from_key_values<'a, I>(pairs: I) -> Result<Self, ChannelError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut scenario = None;
        let mut fields: [Option<f64>; 7] = [None; 7];
        let mut distance_unit = None;
        let mut linear_in_d = None;
        const NAMES: [&str; 7] = [
            "mu_k_intercept_db",
            "alpha_k",
            "mu_l_intercept_db",
            "alpha_l",
            "sigma_k_db",
            "sigma_l_db",
            "phi",
        ];
        for (key, value) in pairs {
            let invalid = || ChannelError::InvalidValue { key: key.into(), value: value.into() };
            match key {
                "scenario" => scenario = Some(Scenario::parse(value).ok_or_else(invalid)?),
                "distance_unit" => {
                    distance_unit = Some(DistanceUnit::parse(value).ok_or_else(invalid)?)
                }
                "linear_in_d" => linear_in_d = Some(value.parse::<bool>().map_err(|_| invalid())?),
                _ => match NAMES.iter().position(|&n| n == key) {
                    Some(idx) => fields[idx] = Some(value.parse::<f64>().map_err(|_| invalid())?),
                    None => return Err(ChannelError::UnknownKey(key.into())),
                },
            }
        }
        let field = |idx: usize| {
            fields[idx].ok_or_else(|| ChannelError::MissingKey(NAMES[idx].into()))
        };
        Self::new(
            scenario.ok_or_else(|| ChannelError::MissingKey("scenario".into()))?,
            field(0)?,
            field(1)?,
            field(2)?,
            field(3)?,
            field(4)?,
            field(5)?,
            field(6)?,
            distance_unit.ok_or_else(|| ChannelError::MissingKey("distance_unit".into()))?,
            linear_in_d.ok_or_else(|| ChannelError::MissingKey("linear_in_d".into()))?,
        )
    }
}

/// How the outdoor stage of composite links is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutdoorMode {
    /// Fresh outdoor draw for every link.
    PerLink,
    /// One outdoor draw shared by all links of a topology; the caller
    /// supplies it. Models a stationary outdoor propagation scenario.
    PerTopology,
    /// Outdoor stage fixed at its regression means.
    DeterministicMean,
}

impl OutdoorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OutdoorMode::PerLink => "per-link",
            OutdoorMode::PerTopology => "per-topology",
            OutdoorMode::DeterministicMean => "deterministic-mean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per-link" | "per_link" => Some(OutdoorMode::PerLink),
            "per-topology" | "per_topology" => Some(OutdoorMode::PerTopology),
            "deterministic-mean" | "deterministic_mean" => Some(OutdoorMode::DeterministicMean),
            _ => None,
        }
    }
}

/// Composite indoor-to-outdoor link model: indoor stage to the exit wall,
/// fixed wall penetration loss, outdoor stage from the wall to the AP.
///
/// The composite parameters stack as L = L_indoor + wall + L_outdoor and
/// K = K_indoor + K_outdoor; the wall contributes no K term.
#[derive(Debug, Clone, PartialEq)]
pub struct I2OComposition {
    pub indoor: BivariateModel,
    pub outdoor: BivariateModel,
    pub wall_loss_db: f64,
    pub outdoor_mode: OutdoorMode,
}

impl I2OComposition {
    pub fn new(
        indoor: BivariateModel,
        outdoor: BivariateModel,
        wall_loss_db: f64,
        outdoor_mode: OutdoorMode,
    ) -> Result<Self, ChannelError> {
        if !(wall_loss_db >= 0.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "wall loss must be non-negative, got {wall_loss_db}"
            )));
        }
        Ok(Self { indoor, outdoor, wall_loss_db, outdoor_mode })
    }

    /// Calibrated composite model with a 14 dB wall and a shared outdoor
    /// draw per topology.
    pub fn default_model() -> Self {
        Self::new(
            BivariateModel::i2o_indoor_default(),
            BivariateModel::i2o_outdoor_default(),
            14.0,
            OutdoorMode::PerTopology,
        )
        .expect("built-in composition is valid")
    }

    /// Draws the outdoor stage once, for sharing across a topology.
    pub fn draw_outdoor<R: Rng + ?Sized>(
        &self,
        d_outdoor: f64,
        rng: &mut R,
    ) -> Result<FadingParams, ChannelError> {
        self.outdoor.sample_link(d_outdoor, rng)
    }

    /// Outdoor stage fixed at its means.
    pub fn outdoor_mean(&self, d_outdoor: f64) -> Result<FadingParams, ChannelError> {
        let (mu_k, mu_l) = self.outdoor.mean_vector(d_outdoor)?;
        Ok(FadingParams { k: KFactor::Db(mu_k), l_db: mu_l })
    }

    /// One composite (K, L) draw. `d_indoor` is in the indoor model's unit,
    /// `d_outdoor` in the outdoor model's unit. The outdoor term follows the
    /// configured mode: fresh draw, caller-supplied shared draw, or means.
    pub fn sample_i2o_link<R: Rng + ?Sized>(
        &self,
        d_indoor: f64,
        d_outdoor: f64,
        rng: &mut R,
        shared_outdoor: Option<FadingParams>,
    ) -> Result<FadingParams, ChannelError> {
        let indoor = self.indoor.sample_link(d_indoor, rng)?;
        let outdoor = match self.outdoor_mode {
            OutdoorMode::PerLink => self.outdoor.sample_link(d_outdoor, rng)?,
            OutdoorMode::PerTopology => {
                shared_outdoor.ok_or(ChannelError::MissingSharedOutdoorDraw)?
            }
            OutdoorMode::DeterministicMean => self.outdoor_mean(d_outdoor)?,
        };
        let k_in = indoor.k.db().expect("indoor draws are finite");
        let k_out = outdoor.k.db().expect("outdoor stage is finite");
        Ok(FadingParams {
            k: KFactor::Db(k_in + k_out),
            l_db: indoor.l_db + self.wall_loss_db + outdoor.l_db,
        })
    }

    /// The conditional model a receiver can use for composite links when the
    /// outdoor stage realization is known (it is static over links and time
    /// in the shared-draw mode): the indoor model with both intercepts
    /// shifted by the outdoor contribution and the wall loss. Covariance and
    /// correlation stay those of the indoor stage, which carries all the
    /// remaining randomness.
    pub fn effective_model(&self, outdoor: &FadingParams) -> BivariateModel {
        let k_out = outdoor.k.db().expect("outdoor stage is finite");
        let mut model = self.indoor.clone();
        model.mu_k_intercept_db += k_out;
        model.mu_l_intercept_db += self.wall_loss_db + outdoor.l_db;
        model
    }

    /// Marginal composite model at a fixed outdoor distance, for modes where
    /// the outdoor stage is random and unknown per link: means shift by the
    /// outdoor means plus wall loss, variances add, and the correlation
    /// blends the two stages.
    pub fn marginal_model(&self, d_outdoor: f64) -> Result<BivariateModel, ChannelError> {
        let (mu_k_out, mu_l_out) = self.outdoor.mean_vector(d_outdoor)?;
        let (sk_i, sl_i) = (self.indoor.sigma_k_db, self.indoor.sigma_l_db);
        let (sk_o, sl_o) = (self.outdoor.sigma_k_db, self.outdoor.sigma_l_db);
        let sigma_k = (sk_i * sk_i + sk_o * sk_o).sqrt();
        let sigma_l = (sl_i * sl_i + sl_o * sl_o).sqrt();
        let cov = self.indoor.phi * sk_i * sl_i + self.outdoor.phi * sk_o * sl_o;
        let mut model = self.indoor.clone();
        model.mu_k_intercept_db += mu_k_out;
        model.mu_l_intercept_db += self.wall_loss_db + mu_l_out;
        model.sigma_k_db = sigma_k;
        model.sigma_l_db = sigma_l;
        model.phi = cov / (sigma_k * sigma_l);
        Ok(model)
    }
}

/// Node and AP placement for one network realization. The indoor area is an
/// axis-aligned rectangle with corners (0, 0) and (width, height); the AP
/// sits outdoors beyond the x = width wall, which is the wall nearest to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<[f64; 2]>,
    ap: [f64; 2],
    width_m: f64,
    height_m: f64,
}

impl Topology {
    pub fn new(
        nodes: Vec<[f64; 2]>,
        width_m: f64,
        height_m: f64,
        ap_offset_m: f64,
    ) -> Result<Self, ChannelError> {
        if !(width_m > 0.0 && height_m > 0.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "indoor rectangle must have positive sides, got {width_m} x {height_m}"
            )));
        }
        if !(ap_offset_m > 0.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "AP offset must be positive, got {ap_offset_m}"
            )));
        }
        for (i, p) in nodes.iter().enumerate() {
            if !(p[0] > 0.0 && p[0] < width_m && p[1] > 0.0 && p[1] < height_m) {
                return Err(ChannelError::InvalidParameter(format!(
                    "node {i} at ({}, {}) lies outside the open indoor rectangle",
                    p[0], p[1]
                )));
            }
        }
        let ap = [width_m + ap_offset_m, height_m / 2.0];
        Ok(Self { nodes, ap, width_m, height_m })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn ap_position(&self) -> [f64; 2] {
        self.ap
    }

    pub fn indoor_rect(&self) -> (f64, f64) {
        (self.width_m, self.height_m)
    }

    /// Euclidean internode distance in meters.
    pub fn internode_distance_m(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Perpendicular distance in meters from node `i` to the wall nearest
    /// the AP.
    pub fn wall_distance_m(&self, i: usize) -> f64 {
        self.width_m - self.nodes[i][0]
    }

    /// Distance in meters from the wall exit point to the AP; common to all
    /// nodes.
    pub fn wall_to_ap_m(&self) -> f64 {
        self.ap[0] - self.width_m
    }
}

/// Places `n_nodes` i.i.d. uniform positions in the open rectangle and the
/// AP `ap_offset_m` meters beyond the nearest wall. Exactly coincident node
/// positions are redrawn so every internode distance is positive.
pub fn generate_topology<R: Rng + ?Sized>(
    n_nodes: usize,
    width_m: f64,
    height_m: f64,
    ap_offset_m: f64,
    rng: &mut R,
) -> Result<Topology, ChannelError> {
    if n_nodes == 0 {
        return Err(ChannelError::InvalidParameter("need at least one node".into()));
    }
    let mut nodes: Vec<[f64; 2]> = Vec::with_capacity(n_nodes);
    while nodes.len() < n_nodes {
        let p = [rng.gen::<f64>() * width_m, rng.gen::<f64>() * height_m];
        if p[0] <= 0.0 || p[1] <= 0.0 || nodes.iter().any(|q| *q == p) {
            continue;
        }
        nodes.push(p);
    }
    Topology::new(nodes, width_m, height_m, ap_offset_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn i2i_means_at_ten_meters() {
        let m = BivariateModel::i2i_default();
        let (mu_k, mu_l) = m.mean_vector(10.0).unwrap();
        assert!((mu_k - 11.60).abs() < 1e-12);
        assert!((mu_l - 57.90).abs() < 1e-12);
    }

    #[test]
    fn outdoor_means_at_one_kilometer() {
        let m = BivariateModel::i2o_outdoor_default();
        let (mu_k, mu_l) = m.mean_vector(1.0).unwrap();
        assert!((mu_k - 7.85).abs() < 1e-12);
        assert!((mu_l - 135.78).abs() < 1e-12);
    }

    #[test]
    fn indoor_stage_vanishes_at_the_wall() {
        // Linear model through the origin: the D → 0 limit is (0, 0).
        let m = BivariateModel::i2o_indoor_default();
        let (mu_k, mu_l) = m.mean_vector(1e-9).unwrap();
        assert!(mu_k.abs() < 1e-8);
        assert!(mu_l.abs() < 1e-8);
    }

    #[test]
    fn non_positive_distance_is_a_domain_error() {
        let m = BivariateModel::i2i_default();
        assert_eq!(m.mean_vector(0.0), Err(ChannelError::NonPositiveDistance(0.0)));
        assert_eq!(m.mean_vector(-3.0), Err(ChannelError::NonPositiveDistance(-3.0)));
        assert!(m.sample_link(0.0, &mut rng(0)).is_err());
    }

    #[test]
    fn sample_mean_converges_to_mean_vector() {
        let m = BivariateModel::i2i_default();
        let mut r = rng(7);
        let n = 100_000;
        let (mut sk, mut sl) = (0.0, 0.0);
        for _ in 0..n {
            let p = m.sample_link(10.0, &mut r).unwrap();
            sk += p.k.db().unwrap();
            sl += p.l_db;
        }
        assert!((sk / n as f64 - 11.60).abs() < 0.1);
        assert!((sl / n as f64 - 57.90).abs() < 0.1);
    }

    #[test]
    fn zero_phi_gives_uncorrelated_components() {
        let m = BivariateModel::new(
            Scenario::I2I, 10.0, 0.5, 40.0, 2.0, 4.0, 4.0, 0.0, DistanceUnit::Meters, false,
        )
        .unwrap();
        let mut r = rng(11);
        let n = 100_000;
        let (mut sk, mut sl, mut skl, mut sk2, mut sl2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = m.sample_link(5.0, &mut r).unwrap();
            let (k, l) = (p.k.db().unwrap(), p.l_db);
            sk += k;
            sl += l;
            skl += k * l;
            sk2 += k * k;
            sl2 += l * l;
        }
        let nf = n as f64;
        let cov = skl / nf - (sk / nf) * (sl / nf);
        let vk = sk2 / nf - (sk / nf).powi(2);
        let vl = sl2 / nf - (sl / nf).powi(2);
        let corr = cov / (vk * vl).sqrt();
        assert!(corr.abs() < 0.02, "empirical correlation {corr}");
    }

    #[test]
    fn tiny_sigmas_collapse_to_the_mean() {
        let m = BivariateModel::new(
            Scenario::I2I, 12.0, 0.5, 45.0, 2.0, 1e-9, 1e-9, -0.5, DistanceUnit::Meters, false,
        )
        .unwrap();
        let mut r = rng(3);
        let (mu_k, mu_l) = m.mean_vector(8.0).unwrap();
        for _ in 0..100 {
            let p = m.sample_link(8.0, &mut r).unwrap();
            assert!((p.k.db().unwrap() - mu_k).abs() < 1e-7);
            assert!((p.l_db - mu_l).abs() < 1e-7);
        }
    }

    #[test]
    fn composite_mean_is_sum_of_stage_means_plus_wall() {
        // Deterministic-mean outdoor stage and near-zero indoor variance:
        // the composite must equal the stacked means exactly.
        let mut indoor = BivariateModel::i2o_indoor_default();
        indoor.sigma_k_db = 1e-12;
        indoor.sigma_l_db = 1e-12;
        let comp = I2OComposition::new(
            indoor,
            BivariateModel::i2o_outdoor_default(),
            14.0,
            OutdoorMode::DeterministicMean,
        )
        .unwrap();
        let p = comp.sample_i2o_link(10.0, 0.05, &mut rng(5), None).unwrap();
        let log_d = 0.05f64.log10();
        let expect_l = 0.5 * 10.0 + 14.0 + (135.78 + 38.9 * log_d);
        let expect_k = -0.3 * 10.0 + (7.85 - 4.5 * log_d);
        assert!((p.l_db - expect_l).abs() < 1e-6, "L {} vs {}", p.l_db, expect_l);
        assert!((p.k.db().unwrap() - expect_k).abs() < 1e-6);
    }

    #[test]
    fn composite_variance_adds_per_link_stages() {
        let comp = I2OComposition::new(
            BivariateModel::i2o_indoor_default(),
            BivariateModel::i2o_outdoor_default(),
            14.0,
            OutdoorMode::PerLink,
        )
        .unwrap();
        let mut r = rng(13);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let p = comp.sample_i2o_link(10.0, 0.05, &mut r, None).unwrap();
            s += p.l_db;
            s2 += p.l_db * p.l_db;
        }
        let nf = n as f64;
        let var = s2 / nf - (s / nf).powi(2);
        let expect = 7.0f64.powi(2) + 7.9f64.powi(2);
        assert!((var - expect).abs() / expect < 0.03, "var {var} vs {expect}");
    }

    #[test]
    fn per_topology_mode_requires_shared_draw() {
        let comp = I2OComposition::default_model();
        let err = comp.sample_i2o_link(10.0, 0.05, &mut rng(1), None).unwrap_err();
        assert_eq!(err, ChannelError::MissingSharedOutdoorDraw);
    }

    #[test]
    fn effective_model_shifts_intercepts_only() {
        let comp = I2OComposition::default_model();
        let outdoor = FadingParams::new(9.1, 101.5).unwrap();
        let eff = comp.effective_model(&outdoor);
        let (mu_k, mu_l) = eff.mean_vector(10.0).unwrap();
        assert!((mu_k - (-3.0 + 9.1)).abs() < 1e-12);
        assert!((mu_l - (5.0 + 14.0 + 101.5)).abs() < 1e-12);
        assert_eq!(eff.sigma_k_db, comp.indoor.sigma_k_db);
        assert_eq!(eff.phi, comp.indoor.phi);
    }

    #[test]
    fn marginal_model_blends_covariances() {
        let comp = I2OComposition::default_model();
        let m = comp.marginal_model(0.05).unwrap();
        let expect_sk = (5.7f64.powi(2) + 7.5f64.powi(2)).sqrt();
        let expect_sl = (7.0f64.powi(2) + 7.9f64.powi(2)).sqrt();
        assert!((m.sigma_k_db - expect_sk).abs() < 1e-12);
        assert!((m.sigma_l_db - expect_sl).abs() < 1e-12);
        let expect_phi =
            (-0.74 * 5.7 * 7.0 + -0.25 * 7.5 * 7.9) / (expect_sk * expect_sl);
        assert!((m.phi - expect_phi).abs() < 1e-12);
    }

    #[test]
    fn single_node_topology_has_no_internode_links() {
        let t = generate_topology(1, 25.0, 25.0, 50.0, &mut rng(2)).unwrap();
        assert_eq!(t.n_nodes(), 1);
        assert!(t.wall_distance_m(0) > 0.0);
    }

    #[test]
    fn node_positions_are_uniform_over_the_rectangle() {
        let mut r = rng(17);
        let n_topologies = 10_000;
        let (mut sx, mut sy, mut count) = (0.0, 0.0, 0);
        for _ in 0..n_topologies {
            let t = generate_topology(3, 25.0, 25.0, 50.0, &mut r).unwrap();
            for i in 0..3 {
                sx += t.node(i)[0];
                sy += t.node(i)[1];
                count += 1;
            }
        }
        assert!((sx / count as f64 - 12.5).abs() < 0.5);
        assert!((sy / count as f64 - 12.5).abs() < 0.5);
    }

    #[test]
    fn ap_offset_fixes_the_outdoor_distance() {
        let t = generate_topology(4, 25.0, 25.0, 50.0, &mut rng(23)).unwrap();
        assert!((t.wall_to_ap_m() - 50.0).abs() < 1e-12);
        assert!((t.wall_to_ap_m() / 1000.0 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn mean_vector_is_deterministic_and_unit_consistent() {
        // The same physical distance expressed in the matching unit yields
        // identical means once the model intercepts account for the unit.
        let km = BivariateModel::i2o_outdoor_default();
        let mut meters = km.clone();
        meters.distance_unit = DistanceUnit::Meters;
        meters.mu_k_intercept_db += 10.0 * meters.alpha_k * 3.0; // log10(1000)
        meters.mu_l_intercept_db -= 10.0 * meters.alpha_l * 3.0;
        let (k1, l1) = km.mean_vector(0.05).unwrap();
        let (k2, l2) = meters.mean_vector(50.0).unwrap();
        assert!((k1 - k2).abs() < 1e-9);
        assert!((l1 - l2).abs() < 1e-9);
    }

    #[test]
    fn key_value_round_trip_is_exact() {
        let m = BivariateModel::i2i_default();
        let kv = m.to_key_values();
        let pairs: Vec<(&str, &str)> = kv.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let back = BivariateModel::from_key_values(pairs).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        let m = BivariateModel::i2i_default();
        let mut kv = m.to_key_values();
        kv.push(("bogus".into(), "1".into()));
        let pairs: Vec<(&str, &str)> = kv.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        assert!(matches!(
            BivariateModel::from_key_values(pairs),
            Err(ChannelError::UnknownKey(k)) if k == "bogus"
        ));
        let kv = m.to_key_values();
        let pairs: Vec<(&str, &str)> = kv
            .iter()
            .filter(|(k, _)| k != "phi")
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        assert!(matches!(
            BivariateModel::from_key_values(pairs),
            Err(ChannelError::MissingKey(k)) if k == "phi"
        ));
    }

    #[test]
    fn rayleigh_limit_is_explicit() {
        let p = FadingParams::rayleigh(80.0).unwrap();
        assert_eq!(p.theta_k(), 0.0);
        assert_eq!(p.k.db(), None);
        assert!(FadingParams::new(f64::NEG_INFINITY, 80.0).is_err());
        assert!(FadingParams::new(3.0, f64::NAN).is_err());
    }
}
