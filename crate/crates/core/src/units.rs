//! Decibel conversions and Gaussian helper functions shared across the crate.
//!
//! Throughout the crate, link parameters carry a `_db` suffix when expressed
//! in decibels and no suffix when expressed on the linear scale.

/// 10·log10(e), the scale factor between natural-log and dB domains.
pub const UPSILON: f64 = 4.342944819032518;

/// dB to linear: 10^(x/10).
#[inline]
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Linear to dB: 10·log10(x).
#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian tail function Q(x) = Pr(Z > x) for Z ~ N(0, 1).
///
/// Evaluated through the complementary error function, which keeps the
/// relative error below 1e-12 over the tail values that arise here.
#[inline]
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF Φ(x) = 1 − Q(x).
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
