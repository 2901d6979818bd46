//! Forward evaluation and inversion of the two downstream scaling laws.

use crate::error::{Error, Result};
use crate::model::{LawParams, LogLaw, PowerLaw};

/// Largest token count the toolkit reports (2^63).
pub const MAX_TOKENS: f64 = 9_223_372_036_854_775_808.0;

/// Score predicted by the log-law at `d_p` pretraining tokens.
///
/// The law is only defined where `log_a + alpha * ln(d_p) > 0`; the boundary
/// itself is rejected.
pub fn eval_log_law(params: &LogLaw, d_p: f64) -> Result<f64> {
    if !(d_p > 0.0 && d_p.is_finite()) {
        return Err(Error::InvalidDomain { d_p });
    }
    let inner = params.log_a + params.alpha * d_p.ln();
    if !(inner > 0.0) {
        return Err(Error::InvalidDomain { d_p });
    }
    Ok(inner.powf(params.beta))
}

/// Downstream cross-entropy predicted by the power-law at `d_p` tokens.
pub fn eval_power_law(params: &PowerLaw, d_p: f64) -> Result<f64> {
    if !(d_p > 0.0) {
        return Err(Error::InvalidDomain { d_p });
    }
    Ok(params.e + params.a * (-params.alpha * d_p.ln()).exp())
}

/// Token count at which the log-law reaches `target`.
pub fn invert_log_law(params: &LogLaw, target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "target must be positive, got {target}"
        )));
    }
    let ln_d = (target.powf(params.beta.recip()) - params.log_a) / params.alpha;
    tokens_from_ln(ln_d)
}

/// Smallest token count where the log-law is defined, `exp(-log_a / alpha)`.
pub fn validity_threshold(params: &LogLaw) -> Result<f64> {
    tokens_from_ln(-params.log_a / params.alpha)
}

fn tokens_from_ln(ln_d: f64) -> Result<f64> {
    if ln_d.is_nan() || ln_d > MAX_TOKENS.ln() {
        return Err(Error::Overflow);
    }
    Ok(ln_d.exp())
}

impl LawParams {
    pub fn eval(&self, d_p: f64) -> Result<f64> {
        match self {
            LawParams::Log(l) => eval_log_law(l, d_p),
            LawParams::Power(p) => eval_power_law(p, d_p),
        }
    }
}
