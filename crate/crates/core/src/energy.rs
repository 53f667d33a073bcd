//! Outage probability, transmit power, slot-split optimization and
//! per-frame energy for direct and amplify-and-forward transmission.
//!
//! All outage expressions are the high-SNR closed forms; they carry a flag
//! when evaluated above the 1e-2 validity guideline instead of refusing,
//! since the pairing algorithms only compare values.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("{0}")]
    InvalidConfig(String),
    #[error("coding gains must be positive and finite, got {0}")]
    InvalidGain(f64),
}

/// Slot-split selection policy for cooperating pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaPolicy {
    /// β = 1/2, the two-rate hardware-friendly choice.
    FixedHalf,
    /// Closed-form β ≈ 1/2 − log2(λ)/(8R), clamped to (0.05, 0.95); falls
    /// back to the exact root outside the clamp range.
    ApproxClosedForm,
    /// Bisection root of the rate-balance equation.
    ExactRoot,
}

impl BetaPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            BetaPolicy::FixedHalf => "fixed-half",
            BetaPolicy::ApproxClosedForm => "approx",
            BetaPolicy::ExactRoot => "exact-root",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed-half" | "fixed_half" | "half" => Some(BetaPolicy::FixedHalf),
            "approx" | "approx-closed-form" => Some(BetaPolicy::ApproxClosedForm),
            "exact-root" | "exact_root" | "exact" => Some(BetaPolicy::ExactRoot),
            _ => None,
        }
    }
}

/// Rate, reliability and energy-accounting parameters shared by all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    /// Spectral efficiency in bit/channel-use.
    pub rate: f64,
    /// SNR gap to capacity, in (0, 1].
    pub gamma: f64,
    /// Target outage probability.
    pub outage_target: f64,
    /// Noise power, linear.
    pub sigma2: f64,
    /// Subframe duration in seconds.
    pub t_subframe: f64,
    /// Frame duration in seconds.
    pub t_frame: f64,
    /// Receive energy per beacon, joules.
    pub e_rx: f64,
    /// Processing energy per frame, joules.
    pub e_proc: f64,
    /// Relay-processing overhead factor.
    pub upsilon_af: f64,
    pub beta_policy: BetaPolicy,
}

impl Default for RadioConfig {
    /// Experiment defaults: R = 1, Γ = 1, p = 1e-3, unit noise and subframe,
    /// reception and processing energies neglected. Lifetime gains are
    /// ratios, so the absolute scales cancel.
    fn default() -> Self {
        Self {
            rate: 1.0,
            gamma: 1.0,
            outage_target: 1e-3,
            sigma2: 1.0,
            t_subframe: 1.0,
            t_frame: 1.0,
            e_rx: 0.0,
            e_proc: 0.0,
            upsilon_af: 0.1,
            beta_policy: BetaPolicy::FixedHalf,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), EnergyError> {
        if !(self.rate > 0.0) {
            return Err(EnergyError::InvalidConfig(format!("rate must be > 0, got {}", self.rate)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(EnergyError::InvalidConfig(format!(
                "SNR gap must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.outage_target > 0.0 && self.outage_target < 1.0) {
            return Err(EnergyError::InvalidConfig(format!(
                "outage target must lie in (0, 1), got {}",
                self.outage_target
            )));
        }
        if !(self.sigma2 > 0.0) {
            return Err(EnergyError::InvalidConfig(format!(
                "noise power must be > 0, got {}",
                self.sigma2
            )));
        }
        if !(self.t_subframe > 0.0 && self.t_frame > 0.0) {
            return Err(EnergyError::InvalidConfig("frame timings must be > 0".into()));
        }
        if !(self.e_rx >= 0.0 && self.e_proc >= 0.0) {
            return Err(EnergyError::InvalidConfig("energies must be >= 0".into()));
        }
        if !(self.upsilon_af > 0.0) {
            return Err(EnergyError::InvalidConfig(format!(
                "relay overhead factor must be > 0, got {}",
                self.upsilon_af
            )));
        }
        Ok(())
    }

    /// Splits a frame into N+1 subframes: T_S = T_F/(N+1).
    pub fn with_frame_plan(mut self, n_nodes: usize, t_frame: f64) -> Self {
        self.t_frame = t_frame;
        self.t_subframe = t_frame / (n_nodes as f64 + 1.0);
        self
    }

    /// Direct-transmission SNR threshold (2^R − 1)/Γ.
    pub fn gamma_th_direct(&self) -> f64 {
        (2f64.powf(self.rate) - 1.0) / self.gamma
    }

    /// Cooperative SNR threshold (2^(R/β) − 1)/Γ for the slot fraction β.
    pub fn gamma_th_coop(&self, beta: f64) -> f64 {
        (2f64.powf(self.rate / beta) - 1.0) / self.gamma
    }
}

/// Everything needed to price one cooperating pair: the three linear coding
/// gains, the slot fraction, and the common transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopLinkBudget {
    pub c_i0: f64,
    pub c_ij: f64,
    pub c_j0: f64,
    pub beta: f64,
    pub rho: f64,
}

impl CoopLinkBudget {
    /// Diversity order of the AF cooperative link over Rician fading.
    pub const DIVERSITY_ORDER: u32 = 2;

    pub fn new(c_i0: f64, c_ij: f64, c_j0: f64, beta: f64, rho: f64) -> Result<Self, EnergyError> {
        for &c in &[c_i0, c_ij, c_j0] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(EnergyError::InvalidGain(c));
            }
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(EnergyError::InvalidConfig(format!("beta must lie in (0, 1), got {beta}")));
        }
        if !(rho > 0.0) {
            return Err(EnergyError::InvalidConfig(format!("power must be > 0, got {rho}")));
        }
        Ok(Self { c_i0, c_ij, c_j0, beta, rho })
    }
}

/// A closed-form outage value plus a flag raised when it exceeds the 1e-2
/// level beyond which the high-SNR approximation loosens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outage {
    pub probability: f64,
    pub high_outage: bool,
}

fn flag(probability: f64) -> Outage {
    Outage { probability, high_outage: probability > 1e-2 }
}

/// Direct-link outage: γ_th σ²/(c ρ).
pub fn outage_direct(c: f64, rho: f64, cfg: &RadioConfig) -> Outage {
    flag(cfg.gamma_th_direct() * cfg.sigma2 / (c * rho))
}

/// Effective SNR of the combined direct and relayed replicas:
/// γ_i0 + (1/γ_ij + 1/γ_j0 + 1/(γ_ij·γ_j0))⁻¹.
pub fn effective_snr(g_i0: f64, g_ij: f64, g_j0: f64) -> f64 {
    let relay = if g_ij <= 0.0 || g_j0 <= 0.0 {
        0.0
    } else {
        g_ij * g_j0 / (g_ij + g_j0 + 1.0)
    };
    g_i0 + relay
}

/// Effective coding gain of the cooperative link:
/// [(1/c_i0)(1/c_ij + 1/c_j0)]^(−1/2).
pub fn coop_coding_gain(c_i0: f64, c_ij: f64, c_j0: f64) -> f64 {
    ((1.0 / c_i0) * (1.0 / c_ij + 1.0 / c_j0)).powf(-0.5)
}

/// Cooperative outage at diversity order two:
/// (1/2)·(γ_th^coop σ²/(c ρ))².
pub fn outage_coop(budget: &CoopLinkBudget, cfg: &RadioConfig) -> Outage {
    let c = coop_coding_gain(budget.c_i0, budget.c_ij, budget.c_j0);
    let x = cfg.gamma_th_coop(budget.beta) * cfg.sigma2 / (c * budget.rho);
    flag(0.5 * x * x)
}

/// Gain asymmetry ratio λ = sqrt((1 + c_i0/c_ij)/(1 + c_j0/c_ij)).
pub fn lambda_ratio(c_i0: f64, c_ij: f64, c_j0: f64) -> f64 {
    ((1.0 + c_i0 / c_ij) / (1.0 + c_j0 / c_ij)).sqrt()
}

/// Root of (2^(R/β) − 1) = λ·(2^(R/(1−β)) − 1), located by bisection. The
/// left side falls and the right side rises in β, so the crossing is unique.
fn exact_beta_root(lambda: f64, rate: f64) -> f64 {
    let f = |beta: f64| {
        (2f64.powf(rate / beta) - 1.0) - lambda * (2f64.powf(rate / (1.0 - beta)) - 1.0)
    };
    let mut lo = 1e-9;
    let mut hi = 1.0 - 1e-9;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() < 1e-10 {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Slot fraction for the pair per the configured policy.
pub fn optimal_beta(c_i0: f64, c_ij: f64, c_j0: f64, cfg: &RadioConfig) -> f64 {
    match cfg.beta_policy {
        BetaPolicy::FixedHalf => 0.5,
        BetaPolicy::ApproxClosedForm => {
            let lambda = lambda_ratio(c_i0, c_ij, c_j0);
            let beta = 0.5 - lambda.log2() / (8.0 * cfg.rate);
            if (0.05..=0.95).contains(&beta) {
                beta
            } else {
                log::warn!(
                    "closed-form slot split {beta:.4} left the (0.05, 0.95) clamp range; \
                     falling back to the exact root"
                );
                exact_beta_root(lambda, cfg.rate)
            }
        }
        BetaPolicy::ExactRoot => exact_beta_root(lambda_ratio(c_i0, c_ij, c_j0), cfg.rate),
    }
}

/// Transmit power for direct transmission at the target outage:
/// γ_th σ²/(c_i0 · p).
pub fn transmit_power_direct(c_i0: f64, cfg: &RadioConfig) -> f64 {
    cfg.gamma_th_direct() * cfg.sigma2 / (c_i0 * cfg.outage_target)
}

/// The larger of the two rate-normalized inverse effective gains; the common
/// pair power is κ(β)·σ²/√(2p).
pub fn kappa(c_i0: f64, c_ij: f64, c_j0: f64, beta: f64, cfg: &RadioConfig) -> f64 {
    let c_coop_ij = coop_coding_gain(c_i0, c_ij, c_j0);
    let c_coop_ji = coop_coding_gain(c_j0, c_ij, c_i0);
    let side_i = (2f64.powf(cfg.rate / beta) - 1.0) / (cfg.gamma * c_coop_ij);
    let side_j = (2f64.powf(cfg.rate / (1.0 - beta)) - 1.0) / (cfg.gamma * c_coop_ji);
    side_i.max(side_j)
}

/// Common transmit power and slot fraction for a cooperating pair, balanced
/// so both nodes meet the outage target: ρ_i = ρ_j = κ(β̂)·σ²/√(2p).
pub fn transmit_power_coop(c_i0: f64, c_ij: f64, c_j0: f64, cfg: &RadioConfig) -> (f64, f64) {
    let beta = optimal_beta(c_i0, c_ij, c_j0, cfg);
    let rho = kappa(c_i0, c_ij, c_j0, beta, cfg) * cfg.sigma2 / (2.0 * cfg.outage_target).sqrt();
    (rho, beta)
}

/// Per-frame energy of a non-cooperating node: ρ·T_S + E_RX·T_S/T_F + E_P.
pub fn energy_direct(rho: f64, cfg: &RadioConfig) -> f64 {
    rho * cfg.t_subframe + cfg.e_rx * cfg.t_subframe / cfg.t_frame + cfg.e_proc
}

/// Per-frame energy of a cooperating node with slot fraction β:
/// ρ·T_S + E_RX·(2−β)·T_S/T_F + (1+υ_AF)·E_P.
pub fn energy_coop(rho: f64, beta: f64, cfg: &RadioConfig) -> f64 {
    rho * cfg.t_subframe
        + cfg.e_rx * (2.0 - beta) * cfg.t_subframe / cfg.t_frame
        + (1.0 + cfg.upsilon_af) * cfg.e_proc
}
