/// Huber loss between an observation `r` and a prediction `r_hat`.
///
/// Quadratic for `|r - r_hat| <= delta`, linear beyond; the two pieces meet
/// with matching value and slope at `delta`.
pub fn huber_loss(r: f64, r_hat: f64, delta: f64) -> f64 {
    huber(r - r_hat, delta)
}

#[inline]
pub(crate) fn huber(residual: f64, delta: f64) -> f64 {
    let a = residual.abs();
    if a <= delta {
        0.5 * residual * residual
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// Derivative of [`huber`] with respect to the residual.
#[inline]
pub(crate) fn huber_slope(residual: f64, delta: f64) -> f64 {
    residual.clamp(-delta, delta)
}
