//! Reputation mathematics: interaction weight, trust evaluation, the
//! piecewise-weighted mean update and the baseline aggregators it is compared to.

mod baselines;
mod scalar;
mod trust;
mod update;
mod weight;

use num_rational::Ratio;
use thiserror::Error;

pub use baselines::{gompertz, running_mean, running_sum, w_mean, BaselineModel, GompertzParams, ModelState};
pub use scalar::Scalar;
pub use trust::{
    fl_filter_and_frequency, mad_outlier_flag, q_completeness, q_consistency, q_freshness, trust_fl, trust_sensing,
    weighted_trust, FlFilterResult, SensingQuality, SensingWeights,
};
pub use update::{pw_mean_update, step_coefficient, ReputationParams, ThresholdPolicy, ThresholdState};
pub use weight::{interaction_weight, InteractionWeightParams};

use crate::crypto::FIXED_SCALE;

/// Exact rational used by the engine.
pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReputationError {
    #[error("domain: {0}")]
    Domain(String),
    #[error("config: {0}")]
    Config(String),
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num as i128, den as i128)
}

pub fn from_micro(micro: u64) -> Rational {
    Rational::new(micro as i128, FIXED_SCALE as i128)
}

/// Round half up to the nearest millionth. Negative inputs are a domain error.
pub fn to_micro(x: &Rational) -> Result<u64, ReputationError> {
    if *x < Rational::from_integer(0) {
        return Err(ReputationError::Domain(format!("negative fixed-point value {x}")));
    }
    let scaled = x * Rational::from_integer(FIXED_SCALE as i128);
    let v = (scaled + Rational::new(1, 2)).floor().to_integer();
    u64::try_from(v).map_err(|_| ReputationError::Domain(format!("fixed-point overflow {x}")))
}

/// Exact rational from a decimal literal with at most six fractional digits.
pub fn parse_decimal(s: &str) -> Result<Rational, ReputationError> {
    let bad = || ReputationError::Config(format!("not a decimal with ≤ 6 fractional digits: {s:?}"));
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 6 {
        return Err(bad());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let int_v: i128 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac_v: i128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let den = 10i128.pow(frac.len() as u32);
    let v = Rational::new(int_v * den + frac_v, den);
    Ok(if neg { -v } else { v })
}

/// Exact rational from an `f64` written with at most six fractional digits (config values).
pub fn rational_from_f64(x: f64) -> Result<Rational, ReputationError> {
    if !x.is_finite() {
        return Err(ReputationError::Config(format!("non-finite value {x}")));
    }
    parse_decimal(&format!("{x}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_decimal("1").unwrap(), rat(1, 1));
        assert_eq!(parse_decimal("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_decimal(".5").unwrap(), rat(1, 2));
        assert!(parse_decimal("0.1234567").is_err());
        assert!(parse_decimal("abc").is_err());
        assert_eq!(rational_from_f64(0.2).unwrap(), rat(1, 5));
        assert!(rational_from_f64(1.0 / 3.0).is_err());
    }

    #[test]
    fn micro_round_trip() {
        assert_eq!(to_micro(&rat(1, 2)).unwrap(), 500_000);
        assert_eq!(to_micro(&Rational::new(1, 3)).unwrap(), 333_333);
        assert_eq!(to_micro(&Rational::new(2, 3)).unwrap(), 666_667);
        assert_eq!(from_micro(250_000), rat(1, 4));
        assert!(to_micro(&rat(-1, 2)).is_err());
    }
}
